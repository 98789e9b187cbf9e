//! Size caps shared by every enumeration in the crate.
//!
//! The defaults keep exact computation at desk scale; every cap can be raised
//! by callers (the CLI exposes them as flags).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    /// Largest explicit outcome space (product alphabets, output laws, joints).
    pub outcome_cells: u64,
    /// Largest number of deterministic adaptive strategies enumerated.
    pub strategies: u64,
    /// Largest number of type classes held in memory and sorted.
    pub type_classes: u64,
    /// Largest number of type classes visited by the two-pass streaming path.
    pub streamed_type_classes: u64,
    /// Largest protocol state space (joint cells times local-randomness paths).
    pub protocol_states: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            outcome_cells: 10_000_000,
            strategies: 100_000,
            type_classes: 10_000_000,
            streamed_type_classes: 2_000_000_000,
            protocol_states: 10_000_000,
        }
    }
}

impl Caps {
    /// `SizeOverflow` when `size` exceeds `cap`.
    pub fn check(what: &'static str, size: u128, cap: u64) -> Result<()> {
        if size > cap as u128 {
            Err(Error::SizeOverflow { what, size, cap: cap as u128 })
        } else {
            Ok(())
        }
    }
}

/// `base^exp` in `u128`, saturating instead of overflowing.
pub(crate) fn saturating_pow(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}
