use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::SmilesError;

const DEFAULT_ALPHABET: &str = include_str!("../../data/alphabet.json");

/// Ordered token list; a token's index is its one-hot column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr", into = "AlphabetRepr")]
pub struct SmilesAlphabet {
    version: u32,
    tokens: Vec<String>,
    stop_index: usize,
    max_token_chars: usize,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlphabetRepr {
    version: u32,
    stop: String,
    tokens: Vec<String>,
}

impl TryFrom<AlphabetRepr> for SmilesAlphabet {
    type Error = SmilesError;

    fn try_from(r: AlphabetRepr) -> Result<Self, SmilesError> {
        SmilesAlphabet::new(r.version, r.tokens, &r.stop)
    }
}

impl From<SmilesAlphabet> for AlphabetRepr {
    fn from(a: SmilesAlphabet) -> Self {
        let stop = a.tokens[a.stop_index].clone();
        AlphabetRepr { version: a.version, stop, tokens: a.tokens }
    }
}

impl SmilesAlphabet {
    pub fn new(version: u32, tokens: Vec<String>, stop: &str) -> Result<Self, SmilesError> {
        let mut index = HashMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if t.is_empty() {
                return Err(SmilesError::Alphabet("empty token".into()));
            }
            if index.insert(t.clone(), i).is_some() {
                return Err(SmilesError::Alphabet(format!("duplicate token {t:?}")));
            }
        }
        let stop_index = tokens
            .iter()
            .position(|t| t == stop)
            .ok_or_else(|| SmilesError::Alphabet(format!("stop symbol {stop:?} not in the token list")))?;
        let max_token_chars = tokens.iter().map(|t| t.chars().count()).max().unwrap_or(0);
        Ok(Self { version, tokens, stop_index, max_token_chars, index })
    }

    /// The alphabet shipped in `data/alphabet.json`.
    pub fn default_alphabet() -> &'static SmilesAlphabet {
        static ALPHABET: OnceLock<SmilesAlphabet> = OnceLock::new();
        ALPHABET.get_or_init(|| serde_json::from_str(DEFAULT_ALPHABET).expect("bundled alphabet parses"))
    }

    pub fn from_json(text: &str) -> Result<Self, SmilesError> {
        serde_json::from_str(text).map_err(|e| SmilesError::Alphabet(e.to_string()))
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn stop_index(&self) -> usize {
        self.stop_index
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Longest-match lexer. The stop symbol never matches input text.
    /// Positions in errors are character offsets.
    pub fn tokenize<'a>(&self, s: &'a str) -> Result<Vec<&'a str>, SmilesError> {
        let chars: Vec<(usize, char)> = s.char_indices().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let start = chars[i].0;
            let longest = (1..=self.max_token_chars.min(chars.len() - i)).rev().find_map(|n| {
                let end = chars.get(i + n).map_or(s.len(), |c| c.0);
                let piece = &s[start..end];
                let known = self.index.get(piece).is_some_and(|&k| k != self.stop_index);
                known.then_some((n, piece))
            });
            match longest {
                Some((n, piece)) => {
                    out.push(piece);
                    i += n;
                }
                None => return Err(SmilesError::Lex { position: i }),
            }
        }
        Ok(out)
    }
}
