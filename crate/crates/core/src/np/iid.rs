//! `beta_eps(P^n, Q^n)` by the method of types.
//!
//! Every sequence in a type class has the same probability under an i.i.d.
//! law, hence the same likelihood ratio, so the Neyman–Pearson optimum only
//! needs the per-class masses. Masses are kept in the log domain (log
//! factorials by summing logs) because `beta` underflows `f64` long before the
//! exponent converges.
//!
//! Two evaluation paths share one enumeration:
//! * materialized: all classes are collected, sorted by log-ratio, and swept;
//! * streamed: when the class count exceeds the in-memory cap, a first pass
//!   bins classes by log-ratio into fixed buckets (per-bucket `P` mass and
//!   scaled `Q` mass), the bucket holding the boundary is located, and a
//!   second pass sorts only that bucket's classes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_eps, same_ratio};
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::prob::{Distribution, ZERO_MASS};

const BUCKETS: usize = 1 << 14;
const CHUNKS: usize = 64;

/// The canonical optimal test on sequences: accept when the sequence
/// log-likelihood ratio `sum_i ln(p(x_i)/q(x_i))` (nats) exceeds
/// `log_ratio_threshold`, accept with probability `boundary_accept` when it
/// ties, reject otherwise. Sequences outside the support of `P^n` are rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTest {
    pub log_ratio_threshold: f64,
    pub boundary_accept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IidBetaResult {
    pub n: usize,
    pub beta: f64,
    pub log2_beta: f64,
    pub type1: f64,
    pub test: ThresholdTest,
    /// Type classes over the reduced alphabet (see [`type_class_count`]).
    pub type_classes: u128,
    pub streamed: bool,
}

/// Symbols after the sufficient-statistic reduction: symbols outside the
/// support of `p` are dropped, symbols with `q = 0` are pooled into one
/// infinite-ratio symbol, and symbols with equal finite ratio are merged.
struct Reduced {
    p_inf: f64,
    /// `(p, q, ln(p/q))`, ratio ascending.
    finite: Vec<(f64, f64, f64)>,
}

impl Reduced {
    fn new(p: &[f64], q: &[f64]) -> Self {
        let mut p_inf = 0.0;
        let mut syms: Vec<(f64, f64, f64)> = Vec::new();
        for (&a, &b) in p.iter().zip(q) {
            if a <= ZERO_MASS {
                continue;
            }
            if b <= ZERO_MASS {
                p_inf += a;
            } else {
                syms.push((a, b, (a / b).ln()));
            }
        }
        syms.sort_by(|x, y| x.2.total_cmp(&y.2));
        let mut finite: Vec<(f64, f64, f64)> = Vec::new();
        for s in syms {
            match finite.last_mut() {
                Some(last) if same_ratio(last.0 / last.1, s.0 / s.1) => {
                    last.0 += s.0;
                    last.1 += s.1;
                    last.2 = (last.0 / last.1).ln();
                }
                _ => finite.push(s),
            }
        }
        Reduced { p_inf, finite }
    }
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of type classes of length `n` over `k` symbols.
pub fn type_class_count(k: usize, n: usize) -> u128 {
    if k == 0 {
        return 0;
    }
    binomial((n + k - 1) as u128, (k - 1) as u128)
}

/// Classes whose log `P`-mass falls below this underflow `f64`; the streamed
/// path skips them (their `Q`-mass relative to their bucket scale underflows
/// as well).
const LOG_UNDERFLOW: f64 = -745.2;

/// Per-symbol tables `t ln p - ln t!` and `t a`, indexed by count `t`.
struct Tables {
    n: usize,
    ln_fact: Vec<f64>,
    probs: Vec<f64>,
    log_mass: Vec<Vec<f64>>,
    ratio: Vec<Vec<f64>>,
    /// `ln(p_j + .. + p_{k-1})`
    ln_tail: Vec<f64>,
}

impl Tables {
    fn new(syms: &[(f64, f64, f64)], n: usize) -> Self {
        let mut ln_fact = vec![0.0; n + 1];
        for t in 1..=n {
            ln_fact[t] = ln_fact[t - 1] + (t as f64).ln();
        }
        let log_mass =
            syms.iter().map(|&(p, _, _)| (0..=n).map(|t| t as f64 * p.ln() - ln_fact[t]).collect()).collect();
        let ratio = syms.iter().map(|&(_, _, a)| (0..=n).map(|t| t as f64 * a).collect()).collect();
        let probs: Vec<f64> = syms.iter().map(|s| s.0).collect();
        let ln_tail = (0..probs.len()).map(|j| probs[j..].iter().sum::<f64>().ln()).collect();
        Tables { n, ln_fact, probs, log_mass, ratio, ln_tail }
    }

    /// Calls `f(log P(class), S(class))` for every class whose first count
    /// lies in `first`. With `prune`, classes whose `P`-mass underflows are
    /// skipped, using the prefix marginal as an upper bound on every class
    /// below it.
    fn visit<F: FnMut(f64, f64)>(&self, first: std::ops::Range<usize>, prune: bool, f: &mut F) {
        let k = self.log_mass.len();
        let base = self.ln_fact[self.n];
        if k == 1 {
            if first.contains(&self.n) {
                f(base + self.log_mass[0][self.n], self.ratio[0][self.n]);
            }
            return;
        }
        for t in first {
            self.descend(1, self.n - t, base + self.log_mass[0][t], self.ratio[0][t], prune, f);
        }
    }

    fn descend<F: FnMut(f64, f64)>(&self, j: usize, rem: usize, lp: f64, s: f64, prune: bool, f: &mut F) {
        // log of the mass of all completions of this prefix
        if prune && lp - self.ln_fact[rem] + rem as f64 * self.ln_tail[j] < LOG_UNDERFLOW {
            return;
        }
        let last = self.log_mass.len() - 1;
        if j == last {
            f(lp + self.log_mass[j][rem], s + self.ratio[j][rem]);
            return;
        }
        if j + 1 == last {
            let (ma, mb) = (&self.log_mass[j], &self.log_mass[last]);
            let (ra, rb) = (&self.ratio[j], &self.ratio[last]);
            let point = |t: usize| (lp + ma[t] + mb[rem - t], s + ra[t] + rb[rem - t]);
            if !prune {
                for t in 0..=rem {
                    let (l, r) = point(t);
                    f(l, r);
                }
                return;
            }
            // log-concave in t: walk outward from the binomial mode
            let (pa, pb) = (self.probs[j], self.probs[last]);
            let mode = (((rem + 1) as f64 * pa / (pa + pb)) as usize).min(rem);
            for t in mode..=rem {
                let (l, r) = point(t);
                if l < LOG_UNDERFLOW {
                    break;
                }
                f(l, r);
            }
            for t in (0..mode).rev() {
                let (l, r) = point(t);
                if l < LOG_UNDERFLOW {
                    break;
                }
                f(l, r);
            }
            return;
        }
        for t in 0..=rem {
            self.descend(j + 1, rem - t, lp + self.log_mass[j][t], s + self.ratio[j][t], prune, f);
        }
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Running Neyman–Pearson sweep over groups in decreasing ratio order.
struct Sweep {
    target: f64,
    cum: f64,
    /// ln of accepted `Q` contributions
    log_terms: Vec<f64>,
    test: ThresholdTest,
    done: bool,
}

impl Sweep {
    fn new(target: f64) -> Self {
        Sweep {
            target,
            cum: 0.0,
            log_terms: Vec::new(),
            test: ThresholdTest { log_ratio_threshold: f64::INFINITY, boundary_accept: 0.0 },
            done: false,
        }
    }

    /// A group with `P`-mass `pm`, `ln Q`-mass `log_qm`, log-ratio `s`.
    fn group(&mut self, pm: f64, log_qm: f64, s: f64) {
        if self.done {
            return;
        }
        if self.cum >= self.target {
            self.done = true;
            return;
        }
        if self.cum + pm <= self.target {
            self.cum += pm;
            self.log_terms.push(log_qm);
            self.test = ThresholdTest { log_ratio_threshold: s, boundary_accept: 1.0 };
        } else {
            let frac = self.target - self.cum;
            self.cum = self.target;
            // Q/P = exp(-s) inside a group
            if s.is_finite() {
                self.log_terms.push(frac.ln() - s);
            }
            self.test = ThresholdTest { log_ratio_threshold: s, boundary_accept: frac / pm };
            self.done = true;
        }
    }

    /// Sweeps sorted `(S, log P)` classes, merging equal ratios.
    fn classes(&mut self, classes: &[(f64, f64)]) {
        let mut i = 0;
        while i < classes.len() && !self.done {
            let s = classes[i].0;
            let mut j = i;
            while j < classes.len() && same_log_ratio(s, classes[j].0) {
                j += 1;
            }
            let lps: Vec<f64> = classes[i..j].iter().map(|c| c.1).collect();
            let lp = log_sum_exp(&lps);
            self.group(lp.exp(), lp - s, s);
            i = j;
        }
    }
}

fn same_log_ratio(a: f64, b: f64) -> bool {
    (a - b).abs() <= super::RATIO_TIE * a.abs().max(b.abs()).max(1.0)
}

fn chunk_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    let chunks = CHUNKS.min(n + 1);
    (0..chunks).map(|c| (c * (n + 1) / chunks)..((c + 1) * (n + 1) / chunks)).collect()
}

/// `beta_eps(P^n, Q^n)`, equal to [`beta_exact`](super::beta_exact) on the
/// explicit product but without materializing `|X|^n` outcomes.
pub fn beta_product_iid(p: &Distribution, q: &Distribution, eps: f64, n: usize, caps: &Caps) -> Result<IidBetaResult> {
    if p.alphabet_size() != q.alphabet_size() {
        return Err(Error::AlphabetMismatch { left: p.alphabet_size(), right: q.alphabet_size() });
    }
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::ParameterDomain("n must be at least 1".into()));
    }
    let red = Reduced::new(p.probs(), q.probs());
    let k = red.finite.len();
    let classes = type_class_count(k, n);
    Caps::check("type classes", classes, caps.streamed_type_classes)?;
    let streamed = classes > caps.type_classes as u128;

    let target = 1.0 - eps;
    let mut sweep = Sweep::new(target);
    // sequences containing a q = 0 symbol: ratio +inf, no Q cost
    let inf_mass = if red.p_inf > 0.0 { -(n as f64 * (-red.p_inf).ln_1p()).exp_m1() } else { 0.0 };
    sweep.group(inf_mass, f64::NEG_INFINITY, f64::INFINITY);

    if eps == 0.0 {
        // accept the whole support of P^n
        let q_fin: f64 = red.finite.iter().map(|s| s.1).sum();
        let log_beta = if k == 0 { f64::NEG_INFINITY } else { n as f64 * q_fin.ln() };
        let thr = red.finite.first().map_or(f64::INFINITY, |s| n as f64 * s.2);
        return Ok(finish(
            n,
            log_beta,
            eps,
            ThresholdTest { log_ratio_threshold: thr, boundary_accept: 1.0 },
            classes,
            streamed,
        ));
    }

    if k > 0 && !sweep.done {
        let tables = Tables::new(&red.finite, n);
        if streamed {
            sweep_streamed(&tables, &red, &mut sweep);
        } else {
            let mut all: Vec<(f64, f64)> = Vec::with_capacity(classes as usize);
            tables.visit(0..n + 1, false, &mut |lp, s| all.push((s, lp)));
            all.sort_by(|a, b| b.0.total_cmp(&a.0));
            sweep.classes(&all);
        }
    }
    let log_beta = log_sum_exp(&sweep.log_terms);
    let type1 = (1.0 - sweep.cum).max(0.0);
    let mut r = finish(n, log_beta, eps, sweep.test, classes, streamed);
    r.type1 = type1;
    Ok(r)
}

fn finish(n: usize, log_beta: f64, eps: f64, test: ThresholdTest, type_classes: u128, streamed: bool) -> IidBetaResult {
    IidBetaResult {
        n,
        beta: log_beta.exp(),
        log2_beta: log_beta / std::f64::consts::LN_2,
        type1: eps,
        test,
        type_classes,
        streamed,
    }
}

fn sweep_streamed(tables: &Tables, red: &Reduced, sweep: &mut Sweep) {
    let n = tables.n;
    let s_min = n as f64 * red.finite[0].2;
    let s_max = n as f64 * red.finite[red.finite.len() - 1].2;
    let width = (s_max - s_min) / BUCKETS as f64;
    let inv_width = if width > 0.0 { 1.0 / width } else { 0.0 };
    let bucket_of = |s: f64| -> usize { (((s - s_min) * inv_width) as usize).min(BUCKETS - 1) };
    let lower = |b: usize| s_min + b as f64 * width;

    // pass 1: P mass and Q mass scaled by exp(lower edge) per bucket
    let partials: Vec<(Vec<f64>, Vec<f64>)> = chunk_ranges(n)
        .into_par_iter()
        .map(|range| {
            let mut pm = vec![0.0; BUCKETS];
            let mut qm = vec![0.0; BUCKETS];
            tables.visit(range, true, &mut |lp, s| {
                let b = bucket_of(s);
                pm[b] += lp.exp();
                qm[b] += (lp - (s - lower(b))).exp();
            });
            (pm, qm)
        })
        .collect();
    let mut pm = vec![0.0; BUCKETS];
    let mut qm = vec![0.0; BUCKETS];
    for (a, b) in &partials {
        for i in 0..BUCKETS {
            pm[i] += a[i];
            qm[i] += b[i];
        }
    }
    drop(partials);

    let mut boundary = None;
    for b in (0..BUCKETS).rev() {
        if sweep.done || sweep.cum >= sweep.target {
            sweep.done = true;
            break;
        }
        if sweep.cum + pm[b] <= sweep.target {
            sweep.cum += pm[b];
            if qm[b] > 0.0 {
                sweep.log_terms.push(qm[b].ln() - lower(b));
                sweep.test = ThresholdTest { log_ratio_threshold: lower(b), boundary_accept: 1.0 };
            }
        } else {
            boundary = Some(b);
            break;
        }
    }

    // pass 2: exact sweep inside the boundary bucket
    if let Some(b) = boundary {
        let mut members: Vec<(f64, f64)> = chunk_ranges(n)
            .into_par_iter()
            .map(|range| {
                let mut v = Vec::new();
                tables.visit(range, true, &mut |lp, s| {
                    if bucket_of(s) == b {
                        v.push((s, lp));
                    }
                });
                v
            })
            .flatten()
            .collect();
        members.sort_by(|x, y| y.0.total_cmp(&x.0));
        sweep.classes(&members);
    }
}
