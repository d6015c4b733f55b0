use super::{SmilesAlphabet, SmilesError};

/// `max_len x |alphabet|` binary matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHotMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl OneHotMatrix {
    /// Builds a matrix from raw rows without checking row sums; decoding
    /// reports malformed rows.
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self, SmilesError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(SmilesError::Format("ragged rows".into()));
        }
        let n = rows.len();
        Ok(Self { rows: n, cols, data: rows.into_iter().flatten().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[u8] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_sums_are_one(&self) -> bool {
        (0..self.rows).all(|r| self.row(r).iter().map(|&v| u32::from(v)).sum::<u32>() == 1)
    }
}

/// One row per token, then stop rows up to `max_len`.
pub fn encode_one_hot(s: &str, alphabet: &SmilesAlphabet, max_len: usize) -> Result<OneHotMatrix, SmilesError> {
    let tokens = alphabet.tokenize(s)?;
    if tokens.len() > max_len {
        return Err(SmilesError::Length { tokens: tokens.len(), max_len });
    }
    let cols = alphabet.len();
    let mut data = vec![0u8; max_len * cols];
    for r in 0..max_len {
        let c = match tokens.get(r) {
            Some(t) => alphabet.index_of(t).expect("lexed tokens are in the alphabet"),
            None => alphabet.stop_index(),
        };
        data[r * cols + c] = 1;
    }
    let m = OneHotMatrix { rows: max_len, cols, data };
    assert!(m.row_sums_are_one());
    Ok(m)
}

/// Concatenates tokens up to the first stop row.
pub fn decode_one_hot(m: &OneHotMatrix, alphabet: &SmilesAlphabet) -> Result<String, SmilesError> {
    if m.cols() != alphabet.len() {
        return Err(SmilesError::Format(format!("{} columns for an alphabet of {}", m.cols(), alphabet.len())));
    }
    let mut out = String::new();
    for r in 0..m.rows() {
        let row = m.row(r);
        let hot: Vec<usize> = row.iter().enumerate().filter(|(_, &v)| v != 0).map(|(c, _)| c).collect();
        if hot.len() != 1 || row[hot[0]] != 1 {
            return Err(SmilesError::Format(format!("row {r} is not one-hot")));
        }
        if hot[0] == alphabet.stop_index() {
            break;
        }
        out.push_str(&alphabet.tokens()[hot[0]]);
    }
    Ok(out)
}
