//! Product basis of single-spin `I_z` eigenstates.
//!
//! A [`BasisState`] stores an N-bit word in which bit `i - 1` is set when
//! spin `i` points up (`m_i = +1/2`). Basis numbering is 1-based and
//! enumerates patterns as
//!
//! ```text
//! k = 1 + Σ_i (1 - bit_i) · 2^(i-1)
//! ```
//!
//! so `Φ1` is all-up, `Φ2` has spin 1 down, `Φ3` has spin 2 down, `Φ5` has
//! spin 3 down and `Φ(2^N)` is all-down. Internally the zero-based offset
//! `k - 1` is simply the bitwise complement of the pattern.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported spin count. Dense matrices at this size already hold
/// `2^28` complex entries.
pub const MAX_SPINS: usize = 14;

/// Minimum number of spins for an interacting system.
pub const MIN_SPINS: usize = 2;

pub(crate) fn check_spin_count(n: usize) -> Result<()> {
    if !(1..=MAX_SPINS).contains(&n) {
        return Err(Error::Range {
            what: "spin count",
            value: n as i64,
            min: 1,
            max: MAX_SPINS as i64,
        });
    }
    Ok(())
}

/// A half-integer stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 % 2 == 0 {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// One product state `Φ_k`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    up: u32,
    n: u8,
}

impl BasisState {
    /// Spin pattern of `Φ_k`, with `k` in `1..=2^n`.
    pub fn from_index(k: usize, n: usize) -> Result<Self> {
        check_spin_count(n)?;
        let dim = 1usize << n;
        if !(1..=dim).contains(&k) {
            return Err(Error::Range {
                what: "basis index",
                value: k as i64,
                min: 1,
                max: dim as i64,
            });
        }
        Ok(Self::from_offset_unchecked(k - 1, n))
    }

    pub(crate) fn from_offset_unchecked(offset: usize, n: usize) -> Self {
        let mask = (1u32 << n) - 1;
        BasisState {
            up: !(offset as u32) & mask,
            n: n as u8,
        }
    }

    /// Builds a state from explicit spin orientations, `true` meaning up.
    /// `spins[0]` is spin 1.
    pub fn from_spins(spins: &[bool]) -> Result<Self> {
        check_spin_count(spins.len())?;
        let up = spins
            .iter()
            .enumerate()
            .fold(0u32, |acc, (i, &s)| acc | (u32::from(s) << i));
        Ok(BasisState {
            up,
            n: spins.len() as u8,
        })
    }

    pub fn n_spins(self) -> usize {
        usize::from(self.n)
    }

    /// 1-based basis number.
    pub fn index(self) -> usize {
        self.offset() + 1
    }

    /// 0-based position in state vectors and matrices.
    pub fn offset(self) -> usize {
        let mask = (1u32 << self.n) - 1;
        (!self.up & mask) as usize
    }

    /// Raw up-bit word, bit `i - 1` for spin `i`.
    pub fn up_bits(self) -> u32 {
        self.up
    }

    fn check_spin(self, i: usize) -> Result<()> {
        if !(1..=self.n_spins()).contains(&i) {
            return Err(Error::Range {
                what: "spin index",
                value: i as i64,
                min: 1,
                max: self.n_spins() as i64,
            });
        }
        Ok(())
    }

    pub fn is_up(self, i: usize) -> Result<bool> {
        self.check_spin(i)?;
        Ok(self.up >> (i - 1) & 1 == 1)
    }

    /// Projection `m_i = ±1/2` of spin `i`.
    pub fn m(self, i: usize) -> Result<f64> {
        Ok(if self.is_up(i)? { 0.5 } else { -0.5 })
    }

    pub fn spins(self) -> Vec<bool> {
        (0..self.n_spins()).map(|b| self.up >> b & 1 == 1).collect()
    }

    /// Total magnetic quantum number `Σ_i m_i`.
    pub fn m_total(self) -> HalfInt {
        let ups = self.up.count_ones() as i32;
        HalfInt(2 * ups - i32::from(self.n))
    }

    /// Inverts spin `i`.
    pub fn flip(self, i: usize) -> Result<Self> {
        self.check_spin(i)?;
        Ok(BasisState {
            up: self.up ^ (1 << (i - 1)),
            n: self.n,
        })
    }
}

impl fmt::Debug for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Φ{}({})", self.index(), self)
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.spins() {
            f.write_str(if s { "↑" } else { "↓" })?;
        }
        Ok(())
    }
}

/// The full product basis for `n` spins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Basis {
    n: usize,
}

impl Basis {
    pub fn new(n: usize) -> Result<Self> {
        check_spin_count(n)?;
        Ok(Basis { n })
    }

    pub fn n_spins(self) -> usize {
        self.n
    }

    pub fn dim(self) -> usize {
        1 << self.n
    }

    pub fn state(self, k: usize) -> Result<BasisState> {
        BasisState::from_index(k, self.n)
    }

    /// States in basis order `Φ1, Φ2, ...`.
    pub fn iter(self) -> impl ExactSizeIterator<Item = BasisState> + Clone {
        let n = self.n;
        (0..self.dim()).map(move |off| BasisState::from_offset_unchecked(off, n))
    }

    /// Table of `m_i` values indexed `[spin - 1][offset]`.
    pub fn projection_table(self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|b| {
                self.iter()
                    .map(|s| if s.up >> b & 1 == 1 { 0.5 } else { -0.5 })
                    .collect()
            })
            .collect()
    }
}
