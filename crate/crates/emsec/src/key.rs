//! Polarization symbols and reproducible raw-key generation.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One of the four polarization symbols emitted by the sender.
///
/// The integer codes 0..=3 are stable and part of the on-disk trace and
/// checkpoint formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Symbol {
    H = 0,
    V = 1,
    P = 2,
    M = 3,
}

impl Symbol {
    pub const COUNT: usize = 4;
    pub const ALL: [Symbol; 4] = [Symbol::H, Symbol::V, Symbol::P, Symbol::M];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Symbol::H),
            1 => Ok(Symbol::V),
            2 => Ok(Symbol::P),
            3 => Ok(Symbol::M),
            other => Err(Error::invalid(format!("symbol code {other} out of range 0..=3"))),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Symbol::H => 'H',
            Symbol::V => 'V',
            Symbol::P => 'P',
            Symbol::M => 'M',
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// The sequence of symbols a sender transmits, together with the seed of the
/// generator that produced it.
///
/// For keys read back from files the generator seed is unknown; those carry a
/// content fingerprint instead (see [`RawKey::from_stored_symbols`]), which
/// still lets dataset construction refuse a test key identical to the
/// training key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawKey {
    symbols: Vec<Symbol>,
    seed: u64,
}

impl RawKey {
    /// Generates `length` i.i.d. uniform symbols from a counter-based stream
    /// cipher RNG. Deterministic for a fixed `(length, seed)` across runs and
    /// platforms.
    pub fn generate(length: usize, seed: u64) -> Result<Self> {
        if length == 0 {
            return Err(Error::invalid("key length must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let symbols = (0..length)
            .map(|_| Symbol::ALL[rng.gen_range(0..4u32) as usize])
            .collect();
        Ok(Self { symbols, seed })
    }

    /// Wraps an explicit symbol sequence, recording the seed it came from.
    pub fn from_symbols(symbols: Vec<Symbol>, seed: u64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("key must contain at least one symbol"));
        }
        Ok(Self { symbols, seed })
    }

    /// Wraps symbols loaded from a file, where the original generator seed is
    /// unknown. The recorded seed is a 64-bit FNV-1a fingerprint of the
    /// symbol codes, so identical key contents always map to identical seeds.
    pub fn from_stored_symbols(symbols: Vec<Symbol>) -> Result<Self> {
        let fp = fingerprint(&symbols);
        Self::from_symbols(symbols, fp)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Occurrences of each symbol, indexed by symbol code.
    pub fn counts(&self) -> [usize; 4] {
        let mut counts = [0usize; 4];
        for &s in &self.symbols {
            counts[s.code() as usize] += 1;
        }
        counts
    }

    /// Positions at which two equal-length keys disagree.
    pub fn hamming_distance(&self, other: &RawKey) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::invalid("hamming distance requires equal key lengths"));
        }
        Ok(self
            .symbols
            .iter()
            .zip(&other.symbols)
            .filter(|(a, b)| a != b)
            .count())
    }
}

fn fingerprint(symbols: &[Symbol]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &s in symbols {
        hash ^= s.code() as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
