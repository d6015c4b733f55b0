//! Lexical, structural and valence checks over the organic subset.
//!
//! Aromatic atoms must carry at least two aromatic bonds. Their aromatic
//! bonds count one each, plus one for the shared double bond unless the atom
//! donates a lone pair instead (uncharged `o`/`s`, or a bracket atom with
//! explicit hydrogens such as `[nH]`). Stereo marks are parsed but do not
//! affect valence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{SmilesAlphabet, SmilesError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    LexError,
    UnbalancedParen,
    UnpairedRingBond,
    DanglingBond,
    ValenceViolation,
    Empty,
}

impl FailureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::LexError => "lex_error",
            Self::UnbalancedParen => "unbalanced_paren",
            Self::UnpairedRingBond => "unpaired_ring_bond",
            Self::DanglingBond => "dangling_bond",
            Self::ValenceViolation => "valence_violation",
            Self::Empty => "empty",
        }
    }
}

/// Outcome of [`check_validity`]. The failure fields are present iff the
/// string is invalid; the position is a character offset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidityReport {
    pub valid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_kind: Option<FailureKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure_position: Option<usize>,
}

impl ValidityReport {
    fn ok() -> Self {
        Self { valid: true, failure_kind: None, failure_position: None }
    }

    fn fail(kind: FailureKind, position: usize) -> Self {
        Self { valid: false, failure_kind: Some(kind), failure_position: Some(position) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bond {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl Bond {
    fn from_symbol(t: &str) -> Option<Self> {
        match t {
            "-" | "/" | "\\" => Some(Self::Single),
            "=" => Some(Self::Double),
            "#" => Some(Self::Triple),
            _ => None,
        }
    }

    fn order(self) -> u32 {
        match self {
            Self::Single => 1,
            Self::Double => 2,
            Self::Triple => 3,
            Self::Aromatic => 0,
        }
    }
}

#[derive(Debug, Clone)]
struct Atom {
    element: String,
    aromatic: bool,
    bracket: bool,
    hydrogens: u32,
    charge: i32,
    position: usize,
    explicit_order: u32,
    aromatic_bonds: u32,
    neighbours: Vec<usize>,
}

impl Atom {
    fn parse(token: &str, position: usize) -> Option<Self> {
        let (bracket, body) = match token.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            Some(inner) => (true, inner),
            None => (false, token),
        };
        let mut rest = body;
        let element = ["Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I", "H", "c", "n", "o", "p", "s"]
            .into_iter()
            .find(|e| rest.starts_with(e))?;
        rest = &rest[element.len()..];
        if !bracket && !rest.is_empty() {
            return None;
        }
        rest = rest.trim_start_matches('@');
        let mut hydrogens = 0;
        if let Some(r) = rest.strip_prefix('H') {
            let digits = r.chars().take_while(char::is_ascii_digit).count();
            hydrogens = if digits == 0 { 1 } else { r[..digits].parse().ok()? };
            rest = &r[digits..];
        }
        let charge = parse_charge(rest)?;
        let aromatic = element.chars().all(|c| c.is_ascii_lowercase());
        Some(Self {
            element: if aromatic { element.to_ascii_uppercase() } else { element.to_string() },
            aromatic,
            bracket,
            hydrogens,
            charge,
            position,
            explicit_order: 0,
            aromatic_bonds: 0,
            neighbours: Vec::new(),
        })
    }

    /// Largest admissible bond-order sum (explicit hydrogens included).
    fn max_valence(&self) -> Option<u32> {
        let base: &[i32] = match self.element.as_str() {
            "B" => &[3],
            "C" => &[4],
            "N" => &[3],
            "O" => &[2],
            "P" => &[3, 5],
            "S" => &[2, 4, 6],
            "F" | "Cl" | "Br" | "I" | "H" => &[1],
            _ => return None,
        };
        let q = self.charge;
        base.iter()
            .map(|&v| match self.element.as_str() {
                "C" => v - q.abs(),
                "B" => v - q,
                _ => v + q,
            })
            .filter(|&v| v >= 0)
            .max()
            .map(|v| v as u32)
    }

    fn donates_lone_pair(&self) -> bool {
        (matches!(self.element.as_str(), "O" | "S") && self.charge == 0) || (self.bracket && self.hydrogens > 0)
    }

    fn valence_ok(&self) -> bool {
        let Some(max) = self.max_valence() else { return false };
        let mut used = self.explicit_order + self.hydrogens;
        if self.aromatic {
            if self.aromatic_bonds < 2 {
                return false;
            }
            used += self.aromatic_bonds + u32::from(!self.donates_lone_pair());
        } else {
            used += self.aromatic_bonds;
        }
        used <= max
    }
}

fn parse_charge(s: &str) -> Option<i32> {
    if s.is_empty() {
        return Some(0);
    }
    let sign = match s.as_bytes()[0] {
        b'+' => 1,
        b'-' => -1,
        _ => return None,
    };
    let tail = &s[1..];
    if tail.is_empty() {
        return Some(sign);
    }
    if tail.chars().all(|c| c == s.chars().next().unwrap()) {
        return Some(sign * (tail.len() as i32 + 1));
    }
    tail.parse::<i32>().ok().map(|n| sign * n)
}

fn ring_label(t: &str) -> Option<u32> {
    let digits = t.strip_prefix('%').unwrap_or(t);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

struct Graph {
    atoms: Vec<Atom>,
}

impl Graph {
    fn connect(&mut self, a: usize, b: usize, bond: Option<Bond>) -> bool {
        if a == b || self.atoms[a].neighbours.contains(&b) {
            return false;
        }
        let bond = bond.unwrap_or(if self.atoms[a].aromatic && self.atoms[b].aromatic { Bond::Aromatic } else { Bond::Single });
        for (x, y) in [(a, b), (b, a)] {
            let atom = &mut self.atoms[x];
            atom.neighbours.push(y);
            if bond == Bond::Aromatic {
                atom.aromatic_bonds += 1;
            } else {
                atom.explicit_order += bond.order();
            }
        }
        true
    }
}

/// Validity against the bundled alphabet. Trailing whitespace is ignored.
pub fn check_validity(s: &str) -> ValidityReport {
    check_validity_with(s, SmilesAlphabet::default_alphabet())
}

pub fn check_validity_with(s: &str, alphabet: &SmilesAlphabet) -> ValidityReport {
    use FailureKind::*;
    let s = s.trim_end();
    if s.is_empty() {
        return ValidityReport::fail(Empty, 0);
    }
    let tokens = match alphabet.tokenize(s) {
        Ok(t) => t,
        Err(SmilesError::Lex { position }) => return ValidityReport::fail(LexError, position),
        Err(_) => return ValidityReport::fail(LexError, 0),
    };

    let mut graph = Graph { atoms: Vec::new() };
    let mut prev: Option<usize> = None;
    let mut pending: Option<(Bond, usize)> = None;
    // (atom the branch hangs from, position of '(', branch has an atom)
    let mut branches: Vec<(usize, usize, bool)> = Vec::new();
    let mut rings: BTreeMap<u32, (usize, Option<Bond>, usize)> = BTreeMap::new();
    let mut position = 0;

    for token in tokens {
        let here = position;
        position += token.chars().count();
        if let Some(bond) = Bond::from_symbol(token) {
            if prev.is_none() || pending.is_some() {
                return ValidityReport::fail(DanglingBond, pending.map_or(here, |p| p.1));
            }
            pending = Some((bond, here));
        } else if token == "(" {
            if let Some((_, p)) = pending {
                return ValidityReport::fail(DanglingBond, p);
            }
            match prev {
                Some(a) => branches.push((a, here, false)),
                None => return ValidityReport::fail(UnbalancedParen, here),
            }
        } else if token == ")" {
            if let Some((_, p)) = pending {
                return ValidityReport::fail(DanglingBond, p);
            }
            match branches.pop() {
                Some((a, _, true)) => prev = Some(a),
                _ => return ValidityReport::fail(UnbalancedParen, here),
            }
        } else if let Some(label) = ring_label(token) {
            let Some(a) = prev else { return ValidityReport::fail(UnpairedRingBond, here) };
            let bond = pending.take().map(|p| p.0);
            match rings.remove(&label) {
                None => {
                    rings.insert(label, (a, bond, here));
                }
                Some((b, open_bond, _)) => {
                    let bond = match (open_bond, bond) {
                        (Some(x), Some(y)) if x != y => return ValidityReport::fail(UnpairedRingBond, here),
                        (x, y) => y.or(x),
                    };
                    if !graph.connect(a, b, bond) {
                        return ValidityReport::fail(UnpairedRingBond, here);
                    }
                }
            }
        } else {
            let Some(atom) = Atom::parse(token, here) else { return ValidityReport::fail(LexError, here) };
            graph.atoms.push(atom);
            let idx = graph.atoms.len() - 1;
            if let Some(a) = prev {
                graph.connect(a, idx, pending.take().map(|p| p.0));
            }
            if let Some(top) = branches.last_mut() {
                top.2 = true;
            }
            prev = Some(idx);
        }
    }

    if let Some((_, p)) = pending {
        return ValidityReport::fail(DanglingBond, p);
    }
    if let Some(&(_, p, _)) = branches.last() {
        return ValidityReport::fail(UnbalancedParen, p);
    }
    if let Some(p) = rings.values().map(|r| r.2).min() {
        return ValidityReport::fail(UnpairedRingBond, p);
    }
    match graph.atoms.iter().find(|a| !a.valence_ok()) {
        Some(a) => ValidityReport::fail(ValenceViolation, a.position),
        None => ValidityReport::ok(),
    }
}
