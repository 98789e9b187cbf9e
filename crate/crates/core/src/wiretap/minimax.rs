//! Numerical check of the identity
//! `min_{V1} max_P D(W1||V1|P W2) = max_P min_{V1} D(W1||V1|P W2) = max_P I(X;Y|Z)`
//! by nested golden-section searches that never use the closed-form minimizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cmi::{max_cmi_with, MaxCmiOptions};
use super::WiretapKernel;
use crate::error::{Error, Result};
use crate::prob::{Distribution, ZERO_MASS};

const GOLDEN_ITERS: usize = 90;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimaxReport {
    pub max_min: f64,
    pub min_max: f64,
    pub max_cmi: f64,
    /// Largest absolute difference between `max_cmi` and the two nested values.
    pub gap: f64,
}

fn golden_min(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..GOLDEN_ITERS {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// Terms `W(y,z|x)` and `log2 W(y|x,z)` per cell, so that objectives can be
/// evaluated against arbitrary `V1` without building intermediate kernels.
struct Terms {
    xs: usize,
    zs: usize,
    /// `(x, y, z, mass, log2 W(y|x,z))` over the support
    cells: Vec<(usize, usize, usize, f64, f64)>,
}

impl Terms {
    fn new(w: &WiretapKernel) -> Self {
        let w2 = w.z_marginal();
        let mut cells = Vec::new();
        for x in 0..w.input_size() {
            for y in 0..w.y_size() {
                for z in 0..w.z_size() {
                    let m = w.prob(x, y, z);
                    if m > ZERO_MASS {
                        cells.push((x, y, z, m, (m / w2.prob(x, z)).log2()));
                    }
                }
            }
        }
        Terms { xs: w.input_size(), zs: w.z_size(), cells }
    }

    /// `D(W_x || V_x)` for each `x`, with `V1(0|z) = v[z]` (binary `Y`).
    fn rows(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.xs];
        for &(x, y, z, m, lc) in &self.cells {
            let q = if y == 0 { v[z] } else { 1.0 - v[z] };
            out[x] += m * (lc - q.log2());
        }
        out
    }

    /// `D(W1 || V1 | P W2)` restricted to the terms with eavesdropper symbol `z`.
    fn slice(&self, p: &[f64], z: usize, v: f64) -> f64 {
        let mut total = 0.0;
        for &(x, y, zz, m, lc) in &self.cells {
            if zz == z && p[x] > 0.0 {
                let q = if y == 0 { v } else { 1.0 - v };
                total += p[x] * m * (lc - q.log2());
            }
        }
        total
    }

    fn inner_min(&self, p: &[f64]) -> f64 {
        (0..self.zs).map(|z| golden_min(|v| self.slice(p, z, v), 0.0, 1.0).1).sum()
    }
}

fn max_min(t: &Terms) -> f64 {
    match t.xs {
        1 => t.inner_min(&[1.0]),
        2 => -golden_min(|a| -t.inner_min(&[a, 1.0 - a]), 0.0, 1.0).1,
        _ => {
            let along = |a: f64| -golden_min(|b| -t.inner_min(&[a, (1.0 - a) * b, (1.0 - a) * (1.0 - b)]), 0.0, 1.0).1;
            -golden_min(|a| -along(a), 0.0, 1.0).1
        }
    }
}

fn min_max(t: &Terms, fixed: &mut Vec<f64>) -> f64 {
    if fixed.len() == t.zs {
        return t.rows(fixed).into_iter().fold(f64::NEG_INFINITY, f64::max);
    }
    golden_min(
        |v| {
            fixed.push(v);
            let r = min_max(t, fixed);
            fixed.pop();
            r
        },
        0.0,
        1.0,
    )
    .1
}

/// Evaluates `max_P min_{V1}`, `min_{V1} max_P` and `max_P I(X;Y|Z)` on one
/// kernel. Supports `|X| <= 3`, `|Y| = 2` and `|Z| <= 3`.
pub fn minimax_identity_check(w: &WiretapKernel, opts: &MaxCmiOptions) -> Result<MinimaxReport> {
    if w.input_size() > 3 || w.y_size() != 2 || w.z_size() > 3 {
        return Err(Error::ParameterDomain("minimax check supports |X| <= 3, |Y| = 2 and |Z| <= 3".into()));
    }
    let cmi = max_cmi_with(w, opts, &Distribution::uniform(w.input_size()))?.require_converged()?;
    let t = Terms::new(w);
    let max_min = max_min(&t);
    let min_max = min_max(&t, &mut Vec::with_capacity(t.zs));
    let gap = (max_min - cmi.value).abs().max((min_max - cmi.value).abs());
    Ok(MinimaxReport { max_min, min_max, max_cmi: cmi.value, gap })
}

/// Runs the check on `trials` seeded random strictly positive 2x2x2 kernels.
pub fn minimax_identity_sweep(trials: usize, seed: u64, opts: &MaxCmiOptions) -> Result<Vec<MinimaxReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kernels: Vec<WiretapKernel> = (0..trials).map(|_| crate::random::positive_kernel(&mut rng, 2, 2, 2)).collect();
    kernels.par_iter().map(|w| minimax_identity_check(w, opts)).collect()
}
