//! SMILES tokenizer, one-hot codec, a validity parser with valence checks,
//! and the drug-likeness rules used to label latent points.

mod alphabet;
mod onehot;
mod validity;

pub use alphabet::SmilesAlphabet;
pub use onehot::{decode_one_hot, encode_one_hot, OneHotMatrix};
pub use validity::{check_validity, check_validity_with, FailureKind, ValidityReport};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmilesError {
    #[error("unknown character at position {position}")]
    Lex { position: usize },
    #[error("{tokens} tokens exceed the maximum length {max_len}")]
    Length { tokens: usize, max_len: usize },
    #[error("malformed one-hot matrix: {0}")]
    Format(String),
    #[error("invalid alphabet: {0}")]
    Alphabet(String),
}

/// Default fraction for [`label_latent_point`].
pub const DRUG_LIKE_THRESHOLD: f64 = 0.2;

/// Minimum character count for a drug-like string.
pub const MIN_DRUG_LIKE_CHARS: usize = 5;

/// Valid and at least [`MIN_DRUG_LIKE_CHARS`] characters long (after
/// trailing whitespace is dropped).
pub fn is_drug_like(s: &str) -> bool {
    let s = s.trim_end();
    s.chars().count() >= MIN_DRUG_LIKE_CHARS && check_validity(s).valid
}

/// True iff strictly more than `threshold` of the outcomes are drug-like.
/// An empty list is labelled false.
pub fn label_latent_point<S: AsRef<str>>(outcomes: &[S], threshold: f64) -> bool {
    if outcomes.is_empty() {
        return false;
    }
    let hits = outcomes.iter().filter(|s| is_drug_like(s.as_ref())).count();
    hits as f64 / outcomes.len() as f64 > threshold
}
