//! Finite words over `{0, .., K-1}`, their border (failure) arrays and the
//! smallest self-overlap shift `tau`.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of words an enumeration may produce.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// A non-empty word over an alphabet of size `K >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    symbols: Vec<u16>,
    alphabet_size: usize,
}

/// Smallest return shift of a word, `1 <= tau <= n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period(pub usize);

impl Period {
    pub fn get(self) -> usize {
        self.0
    }
}

impl Word {
    pub fn new(symbols: Vec<u16>, alphabet_size: usize) -> Result<Self> {
        if alphabet_size < 2 {
            return Err(Error::Domain(format!(
                "alphabet size must be at least 2, got {alphabet_size}"
            )));
        }
        if symbols.is_empty() {
            return Err(Error::Domain("words must have length at least 1".into()));
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s as usize >= alphabet_size) {
            return Err(Error::Domain(format!(
                "symbol {bad} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(Word {
            symbols,
            alphabet_size,
        })
    }

    /// Parses either a digit string (`"0110"`, only for `K <= 10`) or a
    /// comma-separated list of integers (`"0,11,3"`).
    pub fn parse(text: &str, alphabet_size: usize) -> Result<Self> {
        let text = text.trim();
        let symbols: Option<Vec<u16>> = if text.contains(',') {
            text.split(',').map(|t| t.trim().parse::<u16>().ok()).collect()
        } else {
            text.chars()
                .map(|c| c.to_digit(10).map(|d| d as u16))
                .collect()
        };
        let symbols = symbols.ok_or_else(|| Error::Domain(format!("cannot parse word {text:?}")))?;
        Word::new(symbols, alphabet_size)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn is_constant(&self) -> bool {
        self.symbols.iter().all(|&s| s == self.symbols[0])
    }

    /// `border[j]` = length of the longest proper border of the prefix of
    /// length `j`, for `j = 0..=n` (`border[0] = border[1] = 0`).
    pub fn borders(&self) -> Vec<usize> {
        border_array(&self.symbols)
    }

    pub fn tau(&self) -> Period {
        tau(self)
    }

    /// Lexicographic rank among the `K^n` words of the same length.
    pub fn index(&self) -> u128 {
        self.symbols
            .iter()
            .fold(0u128, |acc, &s| acc * self.alphabet_size as u128 + s as u128)
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        debug_assert_eq!(self.alphabet_size, other.alphabet_size);
        let mut symbols = self.symbols.clone();
        symbols.extend_from_slice(&other.symbols);
        Word {
            symbols,
            alphabet_size: self.alphabet_size,
        }
    }

    /// The `k`-fold self-concatenation.
    pub fn power(&self, k: usize) -> Word {
        let symbols = self.symbols.repeat(k.max(1));
        Word {
            symbols,
            alphabet_size: self.alphabet_size,
        }
    }

    pub fn prefix(&self, len: usize) -> Word {
        assert!(len >= 1 && len <= self.len());
        Word {
            symbols: self.symbols[..len].to_vec(),
            alphabet_size: self.alphabet_size,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.alphabet_size <= 10 {
            for &s in &self.symbols {
                write!(f, "{s}")?;
            }
        } else {
            for (i, &s) in self.symbols.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn border_array(symbols: &[u16]) -> Vec<usize> {
    let n = symbols.len();
    let mut border = vec![0usize; n + 1];
    let mut k = 0usize;
    for j in 1..n {
        while k > 0 && symbols[j] != symbols[k] {
            k = border[k];
        }
        if symbols[j] == symbols[k] {
            k += 1;
        }
        border[j + 1] = k;
    }
    border
}

/// Least `k >= 1` such that the word overlaps its own shift by `k`;
/// equal to `n` minus the longest proper border.
pub fn tau(w: &Word) -> Period {
    let border = w.borders();
    Period(w.len() - border[w.len()])
}

/// The word `w_1^{tau(w)} · w`, of length `n + tau(w)`.
pub fn concat_prefix(w: &Word) -> Word {
    let t = tau(w).get();
    let mut symbols = Vec::with_capacity(w.len() + t);
    symbols.extend_from_slice(&w.symbols[..t]);
    symbols.extend_from_slice(&w.symbols);
    Word {
        symbols,
        alphabet_size: w.alphabet_size,
    }
}

/// The set of all `K^n` words of length `n`, in lexicographic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordSpace {
    pub alphabet_size: usize,
    pub len: usize,
}

impl WordSpace {
    /// Checks `K^n <= budget`.
    pub fn new(alphabet_size: usize, len: usize, budget: u128) -> Result<Self> {
        if alphabet_size < 2 || len == 0 {
            return Err(Error::Domain(format!(
                "word space needs K >= 2 and n >= 1, got K={alphabet_size}, n={len}"
            )));
        }
        let needed = count_words(alphabet_size, len);
        if needed > budget {
            return Err(Error::BudgetExceeded {
                what: "word enumeration",
                needed,
                cap: budget,
            });
        }
        Ok(WordSpace { alphabet_size, len })
    }

    pub fn count(&self) -> u128 {
        count_words(self.alphabet_size, self.len)
    }

    pub fn word_at(&self, mut index: u128) -> Word {
        let k = self.alphabet_size as u128;
        let mut symbols = vec![0u16; self.len];
        for slot in symbols.iter_mut().rev() {
            *slot = (index % k) as u16;
            index /= k;
        }
        Word {
            symbols,
            alphabet_size: self.alphabet_size,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Word> + '_ {
        (0..self.count()).map(move |i| self.word_at(i))
    }

    /// Splits the index range into contiguous blocks of at most `block`
    /// words; the blocks are in lexicographic order.
    pub fn blocks(&self, block: u128) -> Vec<std::ops::Range<u128>> {
        let total = self.count();
        let block = block.max(1);
        let mut out = Vec::new();
        let mut start = 0;
        while start < total {
            let end = (start + block).min(total);
            out.push(start..end);
            start = end;
        }
        out
    }
}

/// All words of length `n` over `K` symbols, budget-checked.
pub fn enumerate_words(
    alphabet_size: usize,
    len: usize,
    budget: u128,
) -> Result<impl Iterator<Item = Word>> {
    let space = WordSpace::new(alphabet_size, len, budget)?;
    Ok((0..space.count()).map(move |i| space.word_at(i)))
}

fn count_words(k: usize, n: usize) -> u128 {
    let mut c: u128 = 1;
    for _ in 0..n {
        c = c.saturating_mul(k as u128);
    }
    c
}
