#![allow(dead_code, clippy::excessive_precision)]

use proptest::prelude::*;
use wiretap_core::{Distribution, Dmc, JointDistribution};

/// Binary entropy in bits.
pub fn h2(p: f64) -> f64 {
    let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    t(p) + t(1.0 - p)
}

// reference values from mpmath at 40 digits
pub const H_010: f64 = 0.468_995_593_589_281_22;
pub const H_026: f64 = 0.826_746_372_492_617_90;
pub const CASCADE_CMI: f64 = 0.357_750_778_903_336_67;
pub const D_HALF_VS_09: f64 = 0.736_965_594_166_206_17;
pub const INDEPENDENT_CONTROL: f64 = 0.182_453_362_837_131_55;

pub fn weights(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], 1..=max)
}

pub fn dist(max: usize) -> impl Strategy<Value = Distribution> {
    weights(max).prop_filter_map("all-zero weights", |w| Distribution::from_weights(&w).ok())
}

fn dist_of_len(k: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.01f64..1.0], k)
        .prop_filter_map("all-zero weights", |w| Distribution::from_weights(&w).ok())
}

pub fn dist_pair(max: usize) -> impl Strategy<Value = (Distribution, Distribution)> {
    (1..=max).prop_flat_map(|k| (dist_of_len(k), dist_of_len(k)))
}

pub fn dmc(xs: usize, ys: usize) -> impl Strategy<Value = Dmc> {
    prop::collection::vec(dist_of_len(ys), xs).prop_map(|rows| Dmc::from_rows(rows).unwrap())
}

pub fn joint(sizes: Vec<usize>) -> impl Strategy<Value = JointDistribution> {
    let total = sizes.iter().product();
    dist_of_len(total).prop_map(move |d| JointDistribution::new(sizes.clone(), d.probs().to_vec()).unwrap())
}

/// Minimum `Q[T]` over tests that accept a subset fully plus one outcome
/// partially, subject to `P[T] = 1 - eps`.
pub fn np_subset_oracle(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let k = p.len();
    let target = 1.0 - eps;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << k) {
        let (mut ps, mut qs) = (0.0, 0.0);
        for i in 0..k {
            if mask >> i & 1 == 1 {
                ps += p[i];
                qs += q[i];
            }
        }
        if ps >= target {
            best = best.min(qs);
        }
        for b in 0..k {
            if mask >> b & 1 == 0 && p[b] > 0.0 {
                let frac = (target - ps) / p[b];
                if (0.0..=1.0).contains(&frac) {
                    best = best.min(qs + frac * q[b]);
                }
            }
        }
    }
    best
}

/// Total variation as `max_A |P(A) - Q(A)|` over all subsets.
pub fn tv_subset_oracle(p: &[f64], q: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << p.len()) {
        let d: f64 = (0..p.len()).filter(|i| mask >> i & 1 == 1).map(|i| p[i] - q[i]).sum();
        best = best.max(d.abs());
    }
    best
}

/// `I(A;B|C)` for a three-component joint from the defining double sum.
pub fn cmi_oracle(j: &JointDistribution) -> f64 {
    let s = j.sizes();
    let (a, b, c) = (s[0], s[1], s[2]);
    let mut pac = vec![0.0; a * c];
    let mut pbc = vec![0.0; b * c];
    let mut pc = vec![0.0; c];
    for x in 0..a {
        for y in 0..b {
            for z in 0..c {
                let m = j.prob(&[x, y, z]);
                pac[x * c + z] += m;
                pbc[y * c + z] += m;
                pc[z] += m;
            }
        }
    }
    let mut total = 0.0;
    for x in 0..a {
        for y in 0..b {
            for z in 0..c {
                let m = j.prob(&[x, y, z]);
                if m > 0.0 {
                    total += m * (m * pc[z] / (pac[x * c + z] * pbc[y * c + z])).log2();
                }
            }
        }
    }
    total
}

/// Every sequence of length `n` over `0..k`, first coordinate most significant.
pub fn sequences(k: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|s| (0..k).map(move |x| [s.clone(), vec![x]].concat())).collect();
    }
    out
}
