//! Seeded generators for random instances used by self-tests and benches.

use rand::Rng;

use crate::discrimination::{table_len, AdaptiveStrategy};
use crate::prob::{Distribution, Dmc};
use crate::protocol::WiretapCode;
use crate::wiretap::{FactorizedKernel, WiretapKernel};

/// Uniform point of the probability simplex.
pub fn distribution(rng: &mut impl Rng, size: usize) -> Distribution {
    let w: Vec<f64> = (0..size).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-300).collect();
    Distribution::from_weights(&w).expect("positive weights")
}

/// Like [`distribution`], but each symbol is zeroed with probability
/// `zero_prob` (at least one symbol keeps mass).
pub fn sparse_distribution(rng: &mut impl Rng, size: usize, zero_prob: f64) -> Distribution {
    let keep = rng.random_range(0..size);
    let w: Vec<f64> = (0..size)
        .map(|i| {
            if i != keep && rng.random::<f64>() < zero_prob {
                0.0
            } else {
                -(1.0 - rng.random::<f64>()).ln() + 1e-300
            }
        })
        .collect();
    Distribution::from_weights(&w).expect("one positive weight")
}

pub fn dmc(rng: &mut impl Rng, inputs: usize, outputs: usize) -> Dmc {
    Dmc::from_rows((0..inputs).map(|_| distribution(rng, outputs)).collect()).expect("valid rows")
}

pub fn kernel(rng: &mut impl Rng, xs: usize, ys: usize, zs: usize) -> WiretapKernel {
    WiretapKernel::from_dmc(ys, zs, dmc(rng, xs, ys * zs)).expect("consistent sizes")
}

/// Kernel with every entry bounded away from zero.
pub fn positive_kernel(rng: &mut impl Rng, xs: usize, ys: usize, zs: usize) -> WiretapKernel {
    let rows = (0..xs)
        .map(|_| {
            let w: Vec<f64> = (0..ys * zs).map(|_| 0.02 + rng.random::<f64>()).collect();
            Distribution::from_weights(&w).expect("positive weights")
        })
        .collect();
    WiretapKernel::from_dmc(ys, zs, Dmc::from_rows(rows).expect("valid rows")).expect("consistent sizes")
}

pub fn factorized(rng: &mut impl Rng, xs: usize, ys: usize, zs: usize) -> FactorizedKernel {
    FactorizedKernel::new(dmc(rng, xs, zs), dmc(rng, zs, ys)).expect("consistent sizes")
}

pub fn strategy(rng: &mut impl Rng, n: usize, xs: usize, ys: usize) -> AdaptiveStrategy {
    let choices = (0..table_len(n, ys)).map(|_| rng.random_range(0..xs)).collect();
    AdaptiveStrategy::new(n, xs, ys, choices).expect("valid table")
}

/// Random code with random local randomness and tables.
#[allow(clippy::too_many_arguments)]
pub fn code(
    rng: &mut impl Rng,
    n: usize,
    msgs: usize,
    xs: usize,
    ys: usize,
    fs: usize,
    uxs: usize,
    uys: usize,
) -> WiretapCode {
    let ux = distribution(rng, uxs);
    let uy = distribution(rng, uys);
    let enc: Vec<Vec<usize>> =
        (0..n).map(|t| (0..msgs * uxs * fs.pow(t as u32 + 1)).map(|_| rng.random_range(0..xs)).collect()).collect();
    let fb: Vec<Vec<usize>> =
        (0..n).map(|t| (0..ys.pow(t as u32) * uys).map(|_| rng.random_range(0..fs)).collect()).collect();
    let dec: Vec<usize> = (0..ys.pow(n as u32)).map(|_| rng.random_range(0..msgs)).collect();
    WiretapCode::new(n, msgs, xs, ys, fs, ux, uy, enc, fb, dec).expect("valid tables")
}
