//! Finite binary words, stored packed.

use bitvec::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Default cap on materialized word length, in bits.
pub const DEFAULT_BUDGET: u64 = 1 << 26;

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    bits: BitVec<u64, Lsb0>,
}

impl Word {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Word {
            bits: BitVec::with_capacity(bits),
        }
    }

    pub fn zero() -> Self {
        let mut w = Self::new();
        w.push(false);
        w
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).map(|b| *b)
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn push_ones(&mut self, n: u64) {
        let n = usize::try_from(n).expect("run length fits in memory");
        self.bits.resize(self.bits.len() + n, true);
    }

    pub fn extend_from(&mut self, other: &Word) {
        self.bits.extend_from_bitslice(&other.bits);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().by_vals()
    }

    pub fn count_ones(&self) -> usize {
        self.bits.count_ones()
    }

    pub fn count_zeros(&self) -> usize {
        self.bits.count_zeros()
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.bits.starts_with(&prefix.bits)
    }

    pub fn slice(&self, start: usize, end: usize) -> Word {
        Word {
            bits: self.bits[start..end].to_bitvec(),
        }
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.iter().collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(\"{self}\")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWordError {
    pub position: usize,
    pub found: char,
}

impl fmt::Display for ParseWordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "invalid symbol {:?} at position {}, expected 0 or 1",
            self.found, self.position
        )
    }
}

impl std::error::Error for ParseWordError {}

impl FromStr for Word {
    type Err = ParseWordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut w = Word::with_capacity(s.len());
        for (position, c) in s.chars().enumerate() {
            match c {
                '0' => w.push(false),
                '1' => w.push(true),
                found => return Err(ParseWordError { position, found }),
            }
        }
        Ok(w)
    }
}

impl FromIterator<bool> for Word {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Word {
            bits: iter.into_iter().collect(),
        }
    }
}
