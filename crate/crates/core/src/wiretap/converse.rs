use serde::{Deserialize, Serialize};

use super::cmi::{induced_v1, max_cmi_with, MaxCmiOptions};
use super::{check_degraded, FactorizedKernel, WiretapKernel};
use crate::config::{saturating_pow, Caps};
use crate::discrimination::{
    beta_active_bruteforce, beta_best_fixed_input, strategy_count, ActiveEnvelope, StrategyChoice,
};
use crate::error::{Error, Result};
use crate::np::beta_exact_of;
use crate::prob::{total_variation_of, Distribution, Dmc, JointDistribution};

/// Default tolerance for degradedness checks.
pub const DEGRADED_TOL: f64 = 1e-9;

/// Slack (bits) allowed when comparing `log k` with a bound.
pub(crate) const BOUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaMethod {
    /// Exact infimum over all randomized adaptive tests.
    ActiveExact,
    /// Best constant input; an estimate, not a certified bound.
    FixedInputSurrogate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseBoundReport {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub n: usize,
    pub v_used: FactorizedKernel,
    /// `beta_{eps+delta+eta}(W, V, n)`
    pub beta_value: f64,
    pub log2_beta: f64,
    /// `-log2 beta + 2 log2(1/eta)`
    pub bound_bits: f64,
    pub per_symbol_rate: f64,
    pub surrogate: bool,
    pub method: BetaMethod,
    /// Best deterministic adaptive strategy, when enumerated.
    pub beta_deterministic: Option<f64>,
    /// Input used by the surrogate.
    pub x_star: Option<usize>,
}

pub(crate) fn check_error_budget(eps: f64, delta: f64, eta: f64) -> Result<()> {
    if !(eps >= 0.0 && delta >= 0.0 && eps + delta < 1.0) {
        return Err(Error::ParameterDomain(format!(
            "need eps >= 0, delta >= 0 and eps + delta < 1 (got eps={eps}, delta={delta})"
        )));
    }
    if !(eta > 0.0 && eta < 1.0 - eps - delta) {
        return Err(Error::ParameterDomain(format!(
            "need 0 < eta < 1 - eps - delta = {} (got eta={eta})",
            1.0 - eps - delta
        )));
    }
    Ok(())
}

/// `V2` = the `X -> Z` marginal of `w`, `V1` = `P_{Y|Z}` induced by `p_star`.
pub fn default_v(w: &WiretapKernel, p_star: &Distribution) -> Result<FactorizedKernel> {
    FactorizedKernel::new(w.z_marginal(), induced_v1(w, p_star)?)
}

fn check_v(w: &WiretapKernel, v: &FactorizedKernel) -> Result<()> {
    let (a, b) =
        ((v.v2.input_size(), v.v2.output_size(), v.v1.output_size()), (w.input_size(), w.z_size(), w.y_size()));
    if a != b {
        return Err(Error::AlphabetMismatch { left: a.0 * a.1 * a.2, right: b.0 * b.1 * b.2 });
    }
    Ok(())
}

/// Right-hand side of the finite-blocklength converse `log N <= -log beta + 2 log(1/eta)`.
///
/// Uses the exact active `beta` when the strategy space fits the caps and the
/// best constant-input `beta` (flagged as a surrogate) otherwise.
#[allow(clippy::too_many_arguments)]
pub fn converse_bound(
    w: &WiretapKernel,
    eps: f64,
    delta: f64,
    eta: f64,
    n: usize,
    v: Option<&FactorizedKernel>,
    caps: &Caps,
    opts: &MaxCmiOptions,
) -> Result<ConverseBoundReport> {
    check_error_budget(eps, delta, eta)?;
    if n == 0 {
        return Err(Error::ParameterDomain("n must be at least 1".into()));
    }
    let v = match v {
        Some(v) => {
            check_v(w, v)?;
            v.clone()
        }
        None => {
            let cmi = max_cmi_with(w, opts, &Distribution::uniform(w.input_size()))?;
            default_v(w, &cmi.p_star)?
        }
    };
    let vk = v.compose();
    let (wd, vd) = (w.as_dmc(), vk.as_dmc());
    let level = eps + delta + eta;
    let outputs = wd.output_size();
    let exact = strategy_count(n, wd.input_size(), outputs) <= caps.strategies as u128
        && saturating_pow(outputs, n) <= caps.outcome_cells as u128;
    let (beta, log2_beta, method, beta_det, x_star) = if exact {
        let env = ActiveEnvelope::build(wd, vd, n, caps)?;
        let b = env.beta(level);
        let det = beta_active_bruteforce(wd, vd, level, n, caps)?.beta;
        (b, b.log2(), BetaMethod::ActiveExact, Some(det), None)
    } else {
        let r = beta_best_fixed_input(wd, vd, level, n, caps)?;
        let x = match r.strategy {
            StrategyChoice::FixedInput(x) => Some(x),
            _ => None,
        };
        (r.beta, r.log2_beta, BetaMethod::FixedInputSurrogate, None, x)
    };
    let bound_bits = -log2_beta + 2.0 * (1.0 / eta).log2();
    Ok(ConverseBoundReport {
        eps,
        delta,
        eta,
        n,
        v_used: v,
        beta_value: beta,
        log2_beta,
        bound_bits,
        per_symbol_rate: bound_bits / n as f64,
        surrogate: method == BetaMethod::FixedInputSurrogate,
        method,
        beta_deterministic: beta_det,
        x_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkReductionReport {
    /// `log2 k`
    pub lhs: f64,
    /// `-log2 beta_{eps+delta+eta}(P, Q) + 2 log2(1/eta)`
    pub rhs: f64,
    pub holds: bool,
    pub measured_eps: f64,
    pub measured_delta: f64,
    pub beta: f64,
}

/// `Pr[K != K_hat]` and `||P_{KZ} - unif x P_Z||` for a joint over
/// `(K, K_hat, Z...)`; every component after the second is part of `Z`.
pub(crate) fn key_metrics(joint: &JointDistribution) -> Result<(f64, f64)> {
    let sizes = joint.sizes();
    let k = sizes[0];
    let z_parts: Vec<usize> = (2..sizes.len()).collect();
    let kkz = joint.marginal_grouped(&[vec![0], vec![1], z_parts.clone()])?;
    let zs = kkz.sizes()[2];
    let mut err = 0.0;
    let mut pkz = vec![0.0; k * zs];
    let mut pz = vec![0.0; zs];
    for a in 0..k {
        for b in 0..sizes[1] {
            for z in 0..zs {
                let m = kkz.prob(&[a, b, z]);
                if a != b {
                    err += m;
                }
                pkz[a * zs + z] += m;
                pz[z] += m;
            }
        }
    }
    let ideal: Vec<f64> = (0..k * zs).map(|c| pz[c % zs] / k as f64).collect();
    Ok((err, total_variation_of(&pkz, &ideal)?))
}

/// Checks `Q(k, k_hat, z) Q(z) = Q(k, z) Q(k_hat, z)` cell by cell.
pub(crate) fn factorization_defect(q: &JointDistribution) -> Result<f64> {
    let sizes = q.sizes();
    let z_parts: Vec<usize> = (2..sizes.len()).collect();
    let g = q.marginal_grouped(&[vec![0], vec![1], z_parts])?;
    let (ka, kb, zs) = (g.sizes()[0], g.sizes()[1], g.sizes()[2]);
    let mut qaz = vec![0.0; ka * zs];
    let mut qbz = vec![0.0; kb * zs];
    let mut qz = vec![0.0; zs];
    for a in 0..ka {
        for b in 0..kb {
            for z in 0..zs {
                let m = g.prob(&[a, b, z]);
                qaz[a * zs + z] += m;
                qbz[b * zs + z] += m;
                qz[z] += m;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..ka {
        for b in 0..kb {
            for z in 0..zs {
                let d = g.prob(&[a, b, z]) * qz[z] - qaz[a * zs + z] * qbz[b * zs + z];
                worst = worst.max(d.abs());
            }
        }
    }
    Ok(worst)
}

/// Secret-key reduction inequality `log k <= -log beta_{eps+delta+eta}(P, Q) + 2 log(1/eta)`
/// for `P = P_{K K_hat Z}` and a factorized `Q`.
pub fn sk_reduction_check(
    joint: &JointDistribution,
    k_size: usize,
    eps: f64,
    delta: f64,
    eta: f64,
    q: &JointDistribution,
) -> Result<SkReductionReport> {
    check_error_budget(eps, delta, eta)?;
    let sizes = joint.sizes();
    if sizes.len() < 3 || sizes[0] != k_size || sizes[1] != k_size {
        return Err(Error::ParameterDomain("joint must be over (K, K_hat, Z) with |K| = |K_hat| = k".into()));
    }
    if q.sizes() != sizes {
        return Err(Error::AlphabetMismatch { left: q.probs().len(), right: joint.probs().len() });
    }
    let defect = factorization_defect(q)?;
    if defect > 1e-9 {
        return Err(Error::HypothesisViolation(format!("Q does not factorize given Z (defect {defect:.3e})")));
    }
    let (measured_eps, measured_delta) = key_metrics(joint)?;
    if measured_eps > eps + 1e-12 || measured_delta > delta + 1e-12 {
        return Err(Error::HypothesisViolation(format!(
            "joint has Pr[K != K_hat] = {measured_eps} and leakage {measured_delta}, above ({eps}, {delta})"
        )));
    }
    let beta = beta_exact_of(joint.probs(), q.probs(), eps + delta + eta)?.beta;
    let lhs = (k_size as f64).log2();
    let rhs = -beta.log2() + 2.0 * (1.0 / eta).log2();
    Ok(SkReductionReport { lhs, rhs, holds: lhs <= rhs + BOUND_SLACK, measured_eps, measured_delta, beta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityCase {
    /// `0 < eps < 1 - delta`: `max_P I(X;Y|Z)`
    Secrecy,
    /// `1 - delta <= eps < 1`: `max_P I(X;Y)`
    Channel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub value: f64,
    pub case: CapacityCase,
    pub p_star: Distribution,
    pub gap: f64,
    pub converged: bool,
}

/// `(eps, delta)`-capacity of a degraded wiretap channel.
pub fn capacity_formula(w: &WiretapKernel, eps: f64, delta: f64, opts: &MaxCmiOptions) -> Result<CapacityReport> {
    if !(eps > 0.0 && eps < 1.0 && (0.0..1.0).contains(&delta)) {
        return Err(Error::ParameterDomain(format!(
            "need 0 < eps < 1 and 0 <= delta < 1 (got eps={eps}, delta={delta})"
        )));
    }
    if !check_degraded(w, DEGRADED_TOL).is_degraded {
        return Err(Error::NotDegraded);
    }
    let (kernel, case) = if eps < 1.0 - delta {
        (w.clone(), CapacityCase::Secrecy)
    } else {
        (WiretapKernel::from_dmc(w.y_size(), 1, w.y_marginal())?, CapacityCase::Channel)
    };
    let r = max_cmi_with(&kernel, opts, &Distribution::uniform(w.input_size()))?;
    Ok(CapacityReport { value: r.value, case, p_star: r.p_star, gap: r.gap, converged: r.converged })
}

/// Capacity `max_P I(X;Y)` of a plain DMC, via a trivial eavesdropper.
pub fn channel_capacity(w: &Dmc, opts: &MaxCmiOptions) -> Result<f64> {
    let k = WiretapKernel::from_dmc(w.output_size(), 1, w.clone())?;
    Ok(max_cmi_with(&k, opts, &Distribution::uniform(w.input_size()))?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::entropy_of;

    fn h(p: f64) -> f64 {
        entropy_of(&[p, 1.0 - p])
    }

    fn cascade() -> WiretapKernel {
        WiretapKernel::degraded(&Dmc::bsc(0.1).unwrap(), &Dmc::bsc(0.2).unwrap()).unwrap()
    }

    #[test]
    fn bound_assembles_from_parts() {
        let w = cascade();
        let caps = Caps::default();
        let r = converse_bound(&w, 0.0, 0.0, 0.5, 1, None, &caps, &MaxCmiOptions::default()).unwrap();
        assert_eq!(r.method, BetaMethod::ActiveExact);
        assert!(!r.surrogate);
        assert!((r.bound_bits - (-r.beta_value.log2() + 2.0)).abs() < 1e-12);
        // n = 1: the envelope of the per-input curves is below each of them
        let vk = r.v_used.compose();
        for x in 0..2 {
            let b = beta_exact_of(w.as_dmc().row(x).probs(), vk.as_dmc().row(x).probs(), 0.5).unwrap();
            assert!(r.beta_value <= b.beta + 1e-15);
        }
        assert!(r.beta_value <= r.beta_deterministic.unwrap() + 1e-15);
    }

    #[test]
    fn identical_channels() {
        let w = cascade();
        let v = FactorizedKernel::new(Dmc::bsc(0.26).unwrap(), Dmc::bsc(0.3).unwrap()).unwrap();
        let same = v.compose();
        let (eps, delta, eta) = (0.1, 0.05, 0.2);
        let r =
            converse_bound(&same, eps, delta, eta, 2, Some(&v), &Caps::default(), &MaxCmiOptions::default()).unwrap();
        let want = -(1.0 - (eps + delta + eta)).log2() + 2.0 * (1.0 / eta).log2();
        assert!((r.bound_bits - want).abs() < 1e-12);
        let _ = w;
    }

    #[test]
    fn domain_errors() {
        let w = cascade();
        let caps = Caps::default();
        let o = MaxCmiOptions::default();
        assert!(converse_bound(&w, 0.5, 0.5, 0.1, 1, None, &caps, &o).is_err());
        assert!(converse_bound(&w, 0.3, 0.3, 0.4, 1, None, &caps, &o).is_err());
        assert!(converse_bound(&w, 0.3, 0.3, 0.0, 1, None, &caps, &o).is_err());
    }

    #[test]
    fn surrogate_above_caps() {
        let w = cascade();
        let caps = Caps { strategies: 10, ..Caps::default() };
        let r = converse_bound(&w, 0.05, 0.05, 0.1, 3, None, &caps, &MaxCmiOptions::default()).unwrap();
        assert!(r.surrogate);
        assert_eq!(r.method, BetaMethod::FixedInputSurrogate);
        assert!(r.x_star.is_some());
    }

    fn perfect_key(k: usize, zs: usize) -> JointDistribution {
        let mut probs = vec![0.0; k * k * zs];
        for a in 0..k {
            for z in 0..zs {
                probs[(a * k + a) * zs + z] = 1.0 / (k * zs) as f64;
            }
        }
        JointDistribution::new(vec![k, k, zs], probs).unwrap()
    }

    #[test]
    fn perfect_secret_key() {
        let p = perfect_key(4, 2);
        let q = JointDistribution::new(vec![4, 4, 2], vec![1.0 / 32.0; 32]).unwrap();
        for eta in [0.1, 0.5, 0.9] {
            let r = sk_reduction_check(&p, 4, 0.0, 0.0, eta, &q).unwrap();
            assert!(r.holds);
            assert_eq!(r.lhs, 2.0);
        }
    }

    #[test]
    fn single_key_value() {
        let p = perfect_key(1, 3);
        let r = sk_reduction_check(&p, 1, 0.0, 0.0, 0.3, &p).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.holds);
    }

    #[test]
    fn sk_hypothesis_violations() {
        let p = perfect_key(2, 1);
        let bad_q = JointDistribution::new(vec![2, 2, 1], vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(sk_reduction_check(&p, 2, 0.0, 0.0, 0.5, &bad_q), Err(Error::HypothesisViolation(_))));
        // K leaks: Z = K
        let mut probs = vec![0.0; 8];
        probs[0] = 0.5;
        probs[7] = 0.5;
        let leaky = JointDistribution::new(vec![2, 2, 2], probs).unwrap();
        let q = JointDistribution::new(vec![2, 2, 2], vec![0.125; 8]).unwrap();
        assert!(matches!(sk_reduction_check(&leaky, 2, 0.0, 0.1, 0.5, &q), Err(Error::HypothesisViolation(_))));
        let r = sk_reduction_check(&leaky, 2, 0.0, 0.5, 0.25, &q).unwrap();
        assert!((r.measured_delta - 0.5).abs() < 1e-15);
        assert!(r.holds);
    }

    #[test]
    fn capacity_cases() {
        let w = cascade();
        let o = MaxCmiOptions::default();
        let c = capacity_formula(&w, 0.05, 0.05, &o).unwrap();
        assert_eq!(c.case, CapacityCase::Secrecy);
        assert!((c.value - (h(0.26) - h(0.1))).abs() < 1e-9);
        let c = capacity_formula(&w, 0.97, 0.05, &o).unwrap();
        assert_eq!(c.case, CapacityCase::Channel);
        assert!((c.value - (1.0 - h(0.1))).abs() < 1e-9);
        let zy = WiretapKernel::eavesdropper_sees_y(&Dmc::bsc(0.1).unwrap()).unwrap();
        assert!(capacity_formula(&zy, 0.01, 0.01, &o).unwrap().value.abs() < 1e-12);
        let nd = WiretapKernel::independent(&Dmc::bsc(0.1).unwrap(), &Dmc::identity(2)).unwrap();
        assert_eq!(capacity_formula(&nd, 0.1, 0.1, &o), Err(Error::NotDegraded));
        assert!(capacity_formula(&w, 0.0, 0.1, &o).is_err());
        assert!((channel_capacity(&Dmc::bsc(0.1).unwrap(), &o).unwrap() - (1.0 - h(0.1))).abs() < 1e-9);
    }
}
