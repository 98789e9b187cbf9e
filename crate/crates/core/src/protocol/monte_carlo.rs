use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::code::WiretapCode;
use super::exact::ComponentMap;
use crate::error::{Error, Result};
use crate::wiretap::WiretapKernel;

/// Trials per independent random stream.
const BLOCK: u64 = 1 << 16;

/// Sampled outcomes, keyed by the flat cell index of the matching
/// [`ProtocolJoint`](super::ProtocolJoint) layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub seed: u64,
    pub trials: u64,
    pub sizes: Vec<usize>,
    pub map: ComponentMap,
    pub counts: BTreeMap<usize, u64>,
}

/// A binomial proportion with a 3-sigma band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
    pub lo: f64,
    pub hi: f64,
}

fn sample(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples `trials` runs of the protocol. Trials are split into fixed blocks
/// with one ChaCha stream each, so the result depends only on `seed`.
pub fn simulate(code: &WiretapCode, w: &WiretapKernel, trials: u64, seed: u64) -> Result<MonteCarloResult> {
    if code.input_size() != w.input_size() || code.output_size() != w.y_size() {
        return Err(Error::AlphabetMismatch { left: code.input_size(), right: w.input_size() });
    }
    let n = code.n();
    let map = ComponentMap { n };
    let mut sizes = vec![code.msg_count()];
    sizes.extend(std::iter::repeat_n(w.input_size(), n));
    sizes.extend(std::iter::repeat_n(w.y_size(), n));
    sizes.extend(std::iter::repeat_n(w.z_size(), n));
    sizes.extend(std::iter::repeat_n(code.feedback_size(), n));
    let cells = sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128));
    if cells > usize::MAX as u128 {
        return Err(Error::SizeOverflow { what: "protocol cells", size: cells, cap: usize::MAX as u128 });
    }
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len() - 1).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let blocks = trials.div_ceil(BLOCK);
    let uniform_m = vec![1.0 / code.msg_count() as f64; code.msg_count()];
    let partials: Vec<BTreeMap<usize, u64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let len = BLOCK.min(trials - b * BLOCK);
            let mut counts = BTreeMap::new();
            let (mut y, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n));
            for _ in 0..len {
                y.clear();
                f.clear();
                let m = sample(&mut rng, &uniform_m);
                let ux = sample(&mut rng, code.ux().probs());
                let uy = sample(&mut rng, code.uy().probs());
                f.push(code.feedback(0, &[], uy));
                let mut idx = m * strides[0] + f[0] * strides[map.f(0)];
                for t in 0..n {
                    let x = code.encode(t, m, ux, &f);
                    let c = sample(&mut rng, w.as_dmc().row(x).probs());
                    let (yv, zv) = (c / w.z_size(), c % w.z_size());
                    y.push(yv);
                    idx += x * strides[map.x(t)] + yv * strides[map.y(t)] + zv * strides[map.z(t)];
                    if t + 1 < n {
                        let fv = code.feedback(t + 1, &y, uy);
                        idx += fv * strides[map.f(t + 1)];
                        f.push(fv);
                    }
                }
                *counts.entry(idx).or_insert(0) += 1;
            }
            counts
        })
        .collect();
    let mut counts = BTreeMap::new();
    for part in partials {
        for (k, v) in part {
            *counts.entry(k).or_insert(0) += v;
        }
    }
    Ok(MonteCarloResult { seed, trials, sizes, map, counts })
}

impl MonteCarloResult {
    pub fn cell_of(&self, mut flat: usize) -> Vec<usize> {
        let mut cell = vec![0; self.sizes.len()];
        for (c, &s) in cell.iter_mut().zip(&self.sizes).rev() {
            *c = flat % s;
            flat /= s;
        }
        cell
    }

    /// Fraction of trials whose outcome satisfies `event`.
    pub fn estimate(&self, event: impl Fn(&[usize]) -> bool) -> Estimate {
        let hits: u64 = self.counts.iter().filter(|(k, _)| event(&self.cell_of(**k))).map(|(_, v)| v).sum();
        let t = self.trials.max(1) as f64;
        let value = hits as f64 / t;
        let std_err = (value * (1.0 - value) / t).sqrt();
        Estimate { value, std_err, lo: (value - 3.0 * std_err).max(0.0), hi: (value + 3.0 * std_err).min(1.0) }
    }

    /// Empirical marginal over `components` as `(cell, count)` pairs.
    pub fn marginal_counts(&self, components: &[usize]) -> BTreeMap<Vec<usize>, u64> {
        let mut out = BTreeMap::new();
        for (&k, &v) in &self.counts {
            let cell = self.cell_of(k);
            *out.entry(components.iter().map(|&i| cell[i]).collect()).or_insert(0) += v;
        }
        out
    }

    /// Empirical error probability for `decode`, with a 3-sigma band.
    pub fn error_estimate(&self, decode: impl Fn(&[usize]) -> usize) -> Estimate {
        let ys = self.map.ys();
        self.estimate(|c| {
            let y: Vec<usize> = ys.iter().map(|&i| c[i]).collect();
            decode(&y) != c[ComponentMap::M]
        })
    }
}
