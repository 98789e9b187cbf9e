use serde::{Deserialize, Serialize};

use super::beta_product_iid;
use crate::config::Caps;
use crate::error::{Error, Result};
use crate::prob::{kl_divergence, Distribution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteinPoint {
    pub n: usize,
    pub beta: f64,
    pub log2_beta: f64,
    /// `-(1/n) log2 beta`
    pub exponent: f64,
}

/// `-(1/n) log2 beta_eps(P^n, Q^n)` for each requested `n`; the series tends
/// to `D(P || Q)`.
pub fn stein_exponent_curve(
    p: &Distribution,
    q: &Distribution,
    eps: f64,
    n_values: &[usize],
    caps: &Caps,
) -> Result<Vec<SteinPoint>> {
    if !kl_divergence(p, q)?.is_finite() {
        return Err(Error::ParameterDomain("D(p || q) is infinite".into()));
    }
    n_values
        .iter()
        .map(|&n| {
            let r = beta_product_iid(p, q, eps, n, caps)?;
            Ok(SteinPoint { n, beta: r.beta, log2_beta: r.log2_beta, exponent: -r.log2_beta / n as f64 })
        })
        .collect()
}
