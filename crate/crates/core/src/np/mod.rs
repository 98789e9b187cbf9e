//! Exact Neyman–Pearson computations.
//!
//! For a pair `(P, Q)` the optimal test accepts outcomes in decreasing order of
//! the likelihood ratio `P(x)/Q(x)` until the accepted `P`-mass reaches
//! `1 - eps`, randomizing on the boundary group. Outcomes whose ratios agree
//! to a relative `1e-12` are merged into one group, so the returned test is
//! canonical (the value does not depend on how ties are split).

mod iid;
mod stein;

pub use iid::{beta_product_iid, type_class_count, IidBetaResult, ThresholdTest};
pub use stein::{stein_exponent_curve, SteinPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{Distribution, ZERO_MASS};

pub(crate) const RATIO_TIE: f64 = 1e-12;

/// A stochastic test, `accept_null[x] = T(0|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryTest {
    accept_null: Vec<f64>,
}

impl BinaryTest {
    pub fn new(accept_null: Vec<f64>) -> Result<Self> {
        if accept_null.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::ParameterDomain("test values must lie in [0, 1]".into()));
        }
        Ok(BinaryTest { accept_null })
    }

    pub fn accept_null(&self) -> &[f64] {
        &self.accept_null
    }

    /// `sum_x m(x) T(0|x)`, i.e. `P[T]` or `Q[T]` depending on `m`.
    pub fn mass(&self, m: &[f64]) -> f64 {
        self.accept_null.iter().zip(m).map(|(t, p)| t * p).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaResult {
    pub beta: f64,
    pub log2_beta: f64,
    /// Achieved type-I error `1 - P[T]`.
    pub type1: f64,
    pub test: BinaryTest,
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::ParameterDomain(format!("eps = {eps} outside [0, 1)")));
    }
    Ok(())
}

pub(crate) fn same_ratio(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= RATIO_TIE * a.abs().max(b.abs())
}

/// Outcome groups of equal likelihood ratio, highest ratio first. Outcomes
/// outside the support of `p` are never accepted and are left out.
fn ratio_groups(p: &[f64], q: &[f64]) -> Vec<Vec<usize>> {
    let ratio = |x: usize| if q[x] <= ZERO_MASS { f64::INFINITY } else { p[x] / q[x] };
    let mut order: Vec<usize> = (0..p.len()).filter(|&x| p[x] > ZERO_MASS).collect();
    order.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for x in order {
        match groups.last_mut() {
            Some(g) if same_ratio(ratio(g[0]), ratio(x)) => g.push(x),
            _ => groups.push(vec![x]),
        }
    }
    groups
}

fn group_masses(g: &[usize], p: &[f64], q: &[f64]) -> (f64, f64) {
    let pm: f64 = g.iter().map(|&x| p[x]).sum();
    // outcomes with q below the zero threshold cost nothing
    let qm: f64 = g.iter().map(|&x| if q[x] <= ZERO_MASS { 0.0 } else { q[x] }).sum();
    (pm, qm)
}

/// `beta_eps(P, Q)` over raw mass vectors.
pub fn beta_exact_of(p: &[f64], q: &[f64], eps: f64) -> Result<BetaResult> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch { left: p.len(), right: q.len() });
    }
    check_eps(eps)?;
    let target = 1.0 - eps;
    let mut accept = vec![0.0; p.len()];
    let mut cum = 0.0;
    let mut beta = 0.0;
    for g in ratio_groups(p, q) {
        if cum >= target {
            break;
        }
        let (pm, qm) = group_masses(&g, p, q);
        if cum + pm <= target {
            g.iter().for_each(|&x| accept[x] = 1.0);
            cum += pm;
            beta += qm;
        } else {
            let frac_mass = target - cum;
            let gamma = frac_mass / pm;
            g.iter().for_each(|&x| accept[x] = gamma);
            beta += frac_mass * (qm / pm);
            break;
        }
    }
    let test = BinaryTest { accept_null: accept };
    let type1 = (1.0 - test.mass(p)).max(0.0);
    Ok(BetaResult { beta, log2_beta: beta.log2(), type1, test })
}

/// `beta_eps(P, Q) = inf { Q[T] : P[T] >= 1 - eps }`.
pub fn beta_exact(p: &Distribution, q: &Distribution, eps: f64) -> Result<BetaResult> {
    beta_exact_of(p.probs(), q.probs(), eps)
}

/// The full trade-off curve `eps -> beta_eps(P, Q)` as its vertices
/// `(type1, beta)`, type-I error decreasing from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    points: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn new(p: &[f64], q: &[f64]) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::AlphabetMismatch { left: p.len(), right: q.len() });
        }
        let mut points = vec![(1.0, 0.0)];
        let (mut cp, mut cq) = (0.0, 0.0);
        for g in ratio_groups(p, q) {
            let (pm, qm) = group_masses(&g, p, q);
            cp += pm;
            cq += qm;
            points.push(((1.0 - cp).max(0.0), cq));
        }
        Ok(RocCurve { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Piecewise-linear evaluation; below the last vertex the curve is flat.
    pub fn eval(&self, eps: f64) -> f64 {
        eval_polyline(&self.points, eps)
    }
}

/// Evaluates a polyline whose vertices have strictly decreasing abscissae.
pub(crate) fn eval_polyline(points: &[(f64, f64)], eps: f64) -> f64 {
    for w in points.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if eps <= x0 && eps >= x1 {
            if x0 == x1 {
                return y0.min(y1);
            }
            let t = (x0 - eps) / (x0 - x1);
            return y0 + t * (y1 - y0);
        }
    }
    if eps > points[0].0 {
        points[0].1
    } else {
        points[points.len() - 1].1
    }
}
