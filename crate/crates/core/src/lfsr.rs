//! 64-bit Fibonacci LFSR that supplies one initial spin configuration per run.
//!
//! Feedback polynomial `x^64 + x^63 + x^61 + x^60 + 1` (taps 64, 63, 61, 60),
//! which is primitive, so the register cycles through all `2^64 - 1` non-zero
//! states. Each shift moves the register one bit towards the MSB and inserts
//! the feedback bit at bit 0.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::MAX_SPINS;

/// Feedback tap positions, numbered from 1 (the LSB) to 64 (the MSB).
pub const TAPS: [u32; 4] = [64, 63, 61, 60];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lfsr(u64);

impl Lfsr {
    pub fn new(reg: u64) -> Result<Self> {
        if reg == 0 {
            return Err(Error::ZeroLfsr);
        }
        Ok(Self(reg))
    }

    #[inline]
    pub fn reg(self) -> u64 {
        self.0
    }

    /// One shift.
    #[inline]
    pub fn next(self) -> Self {
        let r = self.0;
        let feedback = TAPS.iter().fold(0u64, |acc, &t| acc ^ (r >> (t - 1))) & 1;
        Self((r << 1) | feedback)
    }

    /// Rail voltages for the first `n` spins: 1.0 where the bit is set, 0.0 otherwise.
    pub fn init_voltages(self, n: usize) -> Result<Vec<f64>> {
        if n > MAX_SPINS {
            return Err(Error::TooManySpins {
                n,
                limit: MAX_SPINS,
            });
        }
        Ok((0..n)
            .map(|i| if self.0 >> i & 1 == 1 { 1.0 } else { 0.0 })
            .collect())
    }
}

/// Shifts a raw register value once, rejecting the absorbing all-zero state.
pub fn lfsr_next(reg: u64) -> Result<u64> {
    Lfsr::new(reg).map(|l| l.next().reg())
}

/// Initial node voltages taken from the low `n` bits of the register.
pub fn init_spins(lfsr: Lfsr, n: usize) -> Result<Vec<f64>> {
    lfsr.init_voltages(n)
}
