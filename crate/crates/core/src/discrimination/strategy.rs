use serde::{Deserialize, Serialize};

use crate::config::{saturating_pow, Caps};
use crate::error::{Error, Result};
use crate::prob::{Dmc, JointDistribution};

/// A deterministic adaptive input strategy of horizon `n`.
///
/// The input at time `t` (0-based) depends on the past outputs `y^t`. Choices
/// are stored level by level: level `t` holds `|Y|^t` entries indexed by the
/// mixed-radix rank of the history (first output most significant), starting
/// at offset `sum_{s<t} |Y|^s`. The strategy rank reads the whole choice array
/// as a base-`|X|` number with entry 0 most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptiveStrategy {
    n: usize,
    input_size: usize,
    output_size: usize,
    choices: Vec<usize>,
}

/// Number of entries in a strategy table: `sum_{t<n} |Y|^t`.
pub fn table_len(n: usize, output_size: usize) -> u128 {
    (0..n).map(|t| saturating_pow(output_size, t)).fold(0u128, |a, b| a.saturating_add(b))
}

/// Number of deterministic strategies, `|X|^(table_len)`.
pub fn strategy_count(n: usize, input_size: usize, output_size: usize) -> u128 {
    let len = table_len(n, output_size);
    if len > 128 {
        return if input_size <= 1 { 1 } else { u128::MAX };
    }
    saturating_pow(input_size, len as usize)
}

impl AdaptiveStrategy {
    pub fn new(n: usize, input_size: usize, output_size: usize, choices: Vec<usize>) -> Result<Self> {
        if n == 0 || input_size == 0 || output_size == 0 {
            return Err(Error::ParameterDomain("strategy sizes must be positive".into()));
        }
        if table_len(n, output_size) != choices.len() as u128 {
            return Err(Error::ParameterDomain(format!(
                "strategy of horizon {n} needs {} choices, got {}",
                table_len(n, output_size),
                choices.len()
            )));
        }
        if choices.iter().any(|&x| x >= input_size) {
            return Err(Error::ParameterDomain("strategy input outside the alphabet".into()));
        }
        Ok(AdaptiveStrategy { n, input_size, output_size, choices })
    }

    /// The strategy with the given rank (see type docs).
    pub fn from_rank(mut rank: u128, n: usize, input_size: usize, output_size: usize) -> Self {
        let len = table_len(n, output_size) as usize;
        let mut choices = vec![0; len];
        for c in choices.iter_mut().rev() {
            *c = (rank % input_size as u128) as usize;
            rank /= input_size as u128;
        }
        AdaptiveStrategy { n, input_size, output_size, choices }
    }

    /// Non-adaptive strategy sending `inputs[t]` at time `t`.
    pub fn open_loop(inputs: &[usize], input_size: usize, output_size: usize) -> Result<Self> {
        let mut choices = Vec::new();
        for (t, &x) in inputs.iter().enumerate() {
            choices.extend(std::iter::repeat_n(x, output_size.pow(t as u32)));
        }
        Self::new(inputs.len(), input_size, output_size, choices)
    }

    pub fn constant(x: usize, n: usize, input_size: usize, output_size: usize) -> Result<Self> {
        Self::open_loop(&vec![x; n], input_size, output_size)
    }

    pub fn horizon(&self) -> usize {
        self.n
    }

    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn rank(&self) -> u128 {
        self.choices.iter().fold(0u128, |acc, &c| acc.saturating_mul(self.input_size as u128).saturating_add(c as u128))
    }

    /// Input at time `t` after observing `history` (`history.len() == t`).
    pub fn choice(&self, history: &[usize]) -> usize {
        let t = history.len();
        let offset = table_len(t, self.output_size) as usize;
        let rank = history.iter().fold(0, |acc, &y| acc * self.output_size + y);
        self.choices[offset + rank]
    }
}

/// Exact law of `Y^n` when inputs follow `strategy` through `channel`.
pub fn induced_output_law(strategy: &AdaptiveStrategy, channel: &Dmc, caps: &Caps) -> Result<JointDistribution> {
    if strategy.input_size != channel.input_size() || strategy.output_size != channel.output_size() {
        return Err(Error::AlphabetMismatch {
            left: strategy.input_size * strategy.output_size,
            right: channel.input_size() * channel.output_size(),
        });
    }
    let ys = channel.output_size();
    Caps::check("output law", saturating_pow(ys, strategy.n), caps.outcome_cells)?;
    Ok(JointDistribution::from_computed(vec![ys; strategy.n], output_law_unchecked(strategy, channel)))
}

pub(crate) fn output_law_unchecked(strategy: &AdaptiveStrategy, channel: &Dmc) -> Vec<f64> {
    let ys = channel.output_size();
    let mut law = vec![1.0];
    let mut offset = 0;
    for _ in 0..strategy.n {
        let mut next = Vec::with_capacity(law.len() * ys);
        for (h, &m) in law.iter().enumerate() {
            let row = channel.row(strategy.choices[offset + h]).probs();
            next.extend(row.iter().map(|&w| m * w));
        }
        offset += law.len();
        law = next;
    }
    law
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{product_power, Distribution};

    fn channel() -> Dmc {
        Dmc::new(vec![vec![0.7, 0.3], vec![0.2, 0.8]]).unwrap()
    }

    #[test]
    fn rank_roundtrip_and_counts() {
        assert_eq!(strategy_count(2, 2, 2), 8);
        assert_eq!(strategy_count(3, 2, 4), 1 << 21);
        for r in 0..8 {
            assert_eq!(AdaptiveStrategy::from_rank(r, 2, 2, 2).rank(), r);
        }
        let s = AdaptiveStrategy::from_rank(0b101, 2, 2, 2);
        assert_eq!(s.choice(&[]), 1);
        assert_eq!(s.choice(&[0]), 0);
        assert_eq!(s.choice(&[1]), 1);
    }

    #[test]
    fn constant_strategy_gives_product() {
        let w = channel();
        let s = AdaptiveStrategy::constant(1, 3, 2, 2).unwrap();
        let law = induced_output_law(&s, &w, &Caps::default()).unwrap();
        let prod = product_power(w.row(1), 3, &Caps::default()).unwrap();
        for (a, b) in law.probs().iter().zip(prod.probs()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_is_a_row() {
        let s = AdaptiveStrategy::constant(0, 1, 2, 2).unwrap();
        let law = induced_output_law(&s, &channel(), &Caps::default()).unwrap();
        assert_eq!(law.probs(), channel().row(0).probs());
    }

    #[test]
    fn two_step_path_sum() {
        // x1 = 0; x2 = y1
        let s = AdaptiveStrategy::new(2, 2, 2, vec![0, 0, 1]).unwrap();
        let law = induced_output_law(&s, &channel(), &Caps::default()).unwrap();
        let w = channel();
        for y1 in 0..2 {
            for y2 in 0..2 {
                let want = w.prob(0, y1) * w.prob(y1, y2);
                assert!((law.prob(&[y1, y2]) - want).abs() < 1e-15);
            }
        }
        let _ = Distribution::uniform(2);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(AdaptiveStrategy::new(2, 2, 2, vec![0, 0]).is_err());
        assert!(AdaptiveStrategy::new(1, 2, 2, vec![2]).is_err());
    }
}
