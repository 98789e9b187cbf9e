//! Active hypothesis testing between two channels `W` and `V`.
//!
//! The feedback available to the input designer is taken to be the full past
//! output, which dominates any other feedback map. Three quantities are
//! computed:
//!
//! * [`beta_active_bruteforce`]: the best deterministic adaptive strategy
//!   (each scored with the exact Neyman–Pearson test on its output law);
//! * [`beta_active_exact`]: the infimum over randomized strategies, i.e. the
//!   lower convex envelope of every deterministic strategy's trade-off curve.
//!   A public random seed sent as the first feedback symbol realizes any
//!   mixture, and local randomness can always be revealed to the tester, so
//!   the envelope is the exact value of `beta_eps(W, V, n)`;
//! * [`beta_fixed_input`]: one input repeated `n` times, via type classes.

mod strategy;

pub use strategy::{induced_output_law, strategy_count, table_len, AdaptiveStrategy};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{saturating_pow, Caps};
use crate::error::{Error, Result};
use crate::np::{beta_exact_of, beta_product_iid, check_eps, eval_polyline, RocCurve};
use crate::prob::{kl_divergence, Distribution, Dmc};
use strategy::output_law_unchecked;

/// How a discrimination value was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyChoice {
    /// The same input at every time step.
    FixedInput(usize),
    Adaptive(AdaptiveStrategy),
    /// A randomized mixture of deterministic strategies `(weight, strategy)`.
    Mixture(Vec<(f64, AdaptiveStrategy)>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationResult {
    pub n: usize,
    pub eps: f64,
    pub beta: f64,
    pub log2_beta: f64,
    /// `-(1/n) log2 beta`
    pub exponent: f64,
    pub strategy: StrategyChoice,
}

impl DiscriminationResult {
    fn new(n: usize, eps: f64, beta: f64, log2_beta: f64, strategy: StrategyChoice) -> Self {
        DiscriminationResult { n, eps, beta, log2_beta, exponent: -log2_beta / n as f64, strategy }
    }
}

fn check_pair(w: &Dmc, v: &Dmc) -> Result<()> {
    if w.input_size() != v.input_size() {
        return Err(Error::AlphabetMismatch { left: w.input_size(), right: v.input_size() });
    }
    if w.output_size() != v.output_size() {
        return Err(Error::AlphabetMismatch { left: w.output_size(), right: v.output_size() });
    }
    Ok(())
}

fn check_bruteforce(w: &Dmc, n: usize, caps: &Caps) -> Result<u128> {
    if n == 0 {
        return Err(Error::ParameterDomain("n must be at least 1".into()));
    }
    Caps::check("output law", saturating_pow(w.output_size(), n), caps.outcome_cells)?;
    let count = strategy_count(n, w.input_size(), w.output_size());
    Caps::check("strategy space", count, caps.strategies)?;
    Ok(count)
}

fn strategy_beta(s: &AdaptiveStrategy, w: &Dmc, v: &Dmc, eps: f64) -> f64 {
    let pw = output_law_unchecked(s, w);
    let pv = output_law_unchecked(s, v);
    beta_exact_of(&pw, &pv, eps).map(|r| r.beta).unwrap_or(f64::NAN)
}

/// Minimum of `beta_eps` over all deterministic adaptive strategies; ties go
/// to the smallest strategy rank.
pub fn beta_active_bruteforce(w: &Dmc, v: &Dmc, eps: f64, n: usize, caps: &Caps) -> Result<DiscriminationResult> {
    check_pair(w, v)?;
    check_eps(eps)?;
    let count = check_bruteforce(w, n, caps)?;
    let (xs, ys) = (w.input_size(), w.output_size());
    let (beta, rank) = (0..count as u64)
        .into_par_iter()
        .map(|r| (strategy_beta(&AdaptiveStrategy::from_rank(r as u128, n, xs, ys), w, v, eps), r))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one strategy");
    let s = AdaptiveStrategy::from_rank(rank as u128, n, xs, ys);
    Ok(DiscriminationResult::new(n, eps, beta, beta.log2(), StrategyChoice::Adaptive(s)))
}

/// Minimum of `beta_eps` over open-loop input sequences `x^n`.
pub fn beta_open_loop_bruteforce(w: &Dmc, v: &Dmc, eps: f64, n: usize, caps: &Caps) -> Result<DiscriminationResult> {
    check_pair(w, v)?;
    check_eps(eps)?;
    check_bruteforce(w, n, caps)?;
    let (xs, ys) = (w.input_size(), w.output_size());
    let count = saturating_pow(xs, n) as u64;
    let sequence = |mut r: u64| {
        let mut seq = vec![0; n];
        for x in seq.iter_mut().rev() {
            *x = (r % xs as u64) as usize;
            r /= xs as u64;
        }
        AdaptiveStrategy::open_loop(&seq, xs, ys).expect("valid sequence")
    };
    let (beta, rank) = (0..count)
        .into_par_iter()
        .map(|r| (strategy_beta(&sequence(r), w, v, eps), r))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one sequence");
    Ok(DiscriminationResult::new(n, eps, beta, beta.log2(), StrategyChoice::Adaptive(sequence(rank))))
}

/// Lower convex envelope of every deterministic strategy's trade-off curve.
///
/// Built once per `(W, V, n)` and evaluated at any `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveEnvelope {
    n: usize,
    input_size: usize,
    output_size: usize,
    /// Hull vertices `(type1, beta, strategy rank)`, type-I error decreasing.
    vertices: Vec<(f64, f64, u128)>,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl ActiveEnvelope {
    pub fn build(w: &Dmc, v: &Dmc, n: usize, caps: &Caps) -> Result<Self> {
        check_pair(w, v)?;
        let count = check_bruteforce(w, n, caps)?;
        let (xs, ys) = (w.input_size(), w.output_size());
        let mut points: Vec<(f64, f64, u128)> = (0..count as u64)
            .into_par_iter()
            .map(|r| {
                let s = AdaptiveStrategy::from_rank(r as u128, n, xs, ys);
                let roc = RocCurve::new(&output_law_unchecked(&s, w), &output_law_unchecked(&s, v))
                    .expect("matching alphabets");
                roc.points().iter().map(|&(x, y)| (x, y, r as u128)).collect::<Vec<_>>()
            })
            .flatten()
            .collect();
        // ascending type-I error, then ascending beta, then rank
        points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut hull: Vec<(f64, f64, u128)> = Vec::new();
        for p in points {
            if let Some(last) = hull.last() {
                if last.0 == p.0 {
                    continue;
                }
            }
            while hull.len() >= 2 {
                let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
                if cross((a.0, a.1), (b.0, b.1), (p.0, p.1)) <= 0.0 {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(p);
        }
        hull.reverse();
        Ok(ActiveEnvelope { n, input_size: xs, output_size: ys, vertices: hull })
    }

    pub fn vertices(&self) -> &[(f64, f64, u128)] {
        &self.vertices
    }

    pub fn beta(&self, eps: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self.vertices.iter().map(|v| (v.0, v.1)).collect();
        eval_polyline(&pts, eps)
    }

    /// `beta_eps(W, V, n)` together with an optimal mixture of at most two
    /// deterministic strategies.
    pub fn evaluate(&self, eps: f64) -> Result<DiscriminationResult> {
        check_eps(eps)?;
        let beta = self.beta(eps);
        let strat = |r: u128| AdaptiveStrategy::from_rank(r, self.n, self.input_size, self.output_size);
        let v = &self.vertices;
        let mut mixture = vec![(1.0, strat(v[v.len() - 1].2))];
        for pair in v.windows(2) {
            let ((x0, _, r0), (x1, _, r1)) = (pair[0], pair[1]);
            if eps <= x0 && eps >= x1 {
                let t = if x0 == x1 { 0.0 } else { (x0 - eps) / (x0 - x1) };
                mixture = if t <= 0.0 || r0 == r1 {
                    vec![(1.0, strat(if t <= 0.0 { r0 } else { r1 }))]
                } else if t >= 1.0 {
                    vec![(1.0, strat(r1))]
                } else {
                    vec![(1.0 - t, strat(r0)), (t, strat(r1))]
                };
                break;
            }
        }
        Ok(DiscriminationResult::new(self.n, eps, beta, beta.log2(), StrategyChoice::Mixture(mixture)))
    }
}

/// Exact `beta_eps(W, V, n)` over all (possibly randomized) active tests.
pub fn beta_active_exact(w: &Dmc, v: &Dmc, eps: f64, n: usize, caps: &Caps) -> Result<DiscriminationResult> {
    check_eps(eps)?;
    ActiveEnvelope::build(w, v, n, caps)?.evaluate(eps)
}

/// `beta_eps(W_x^n, V_x^n)`: the non-adaptive test that always sends `x_star`.
pub fn beta_fixed_input(
    w: &Dmc,
    v: &Dmc,
    eps: f64,
    n: usize,
    x_star: usize,
    caps: &Caps,
) -> Result<DiscriminationResult> {
    check_pair(w, v)?;
    if x_star >= w.input_size() {
        return Err(Error::ParameterDomain(format!("input {x_star} outside the alphabet")));
    }
    let r = beta_product_iid(w.row(x_star), v.row(x_star), eps, n, caps)?;
    Ok(DiscriminationResult::new(n, eps, r.beta, r.log2_beta, StrategyChoice::FixedInput(x_star)))
}

/// The best constant input (smallest `beta`, ties to the smallest input).
pub fn beta_best_fixed_input(w: &Dmc, v: &Dmc, eps: f64, n: usize, caps: &Caps) -> Result<DiscriminationResult> {
    let mut best: Option<DiscriminationResult> = None;
    for x in 0..w.input_size() {
        let r = beta_fixed_input(w, v, eps, n, x, caps)?;
        if best.as_ref().is_none_or(|b| r.log2_beta < b.log2_beta) {
            best = Some(r);
        }
    }
    Ok(best.expect("non-empty input alphabet"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationExponent {
    /// `max_x D(W_x || V_x)` in bits; may be `+inf`.
    pub value: f64,
    pub x_star: usize,
    pub p_star: Distribution,
}

/// The optimal active-testing exponent `max_x D(W_x || V_x)`, attained by a
/// point mass since `D(W || V | P) = sum_x P(x) D(W_x || V_x)` is linear in `P`.
pub fn discrimination_exponent(w: &Dmc, v: &Dmc) -> Result<DiscriminationExponent> {
    check_pair(w, v)?;
    let mut best = (f64::NEG_INFINITY, 0);
    for x in 0..w.input_size() {
        let d = kl_divergence(w.row(x), v.row(x))?;
        if d > best.0 {
            best = (d, x);
        }
    }
    Ok(DiscriminationExponent { value: best.0, x_star: best.1, p_star: Distribution::point(w.input_size(), best.1) })
}

/// `D(W || V | P) = sum_x P(x) D(W_x || V_x)`.
pub fn conditional_divergence(w: &Dmc, v: &Dmc, p: &Distribution) -> Result<f64> {
    check_pair(w, v)?;
    if p.alphabet_size() != w.input_size() {
        return Err(Error::AlphabetMismatch { left: p.alphabet_size(), right: w.input_size() });
    }
    let mut total = 0.0;
    for x in 0..w.input_size() {
        if p.prob(x) > 0.0 {
            total += p.prob(x) * kl_divergence(w.row(x), v.row(x))?;
        }
    }
    Ok(total)
}
