use serde::{Deserialize, Serialize};

use super::code::WiretapCode;
use super::exact::{execute_exact, key_joint, metrics, CodeMetrics};
use crate::config::Caps;
use crate::discrimination::ActiveEnvelope;
use crate::error::{Error, Result};
use crate::np::beta_exact_of;
use crate::wiretap::{default_v, max_cmi_with, FactorizedKernel, MaxCmiOptions, WiretapKernel};

const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverseValidation {
    pub log_n: f64,
    pub metrics: CodeMetrics,
    pub eta: f64,
    /// `-log2 beta_{eps+delta+eta}(P_{M M_hat Z^n F}, Q_{M M_hat Z^n F}) + 2 log2(1/eta)`
    pub code_bound: f64,
    /// `-log2 beta_{eps+delta+eta}(W, V, n) + 2 log2(1/eta)`
    pub bound: f64,
    /// `log_n <= bound`
    pub holds: bool,
    /// `log_n <= code_bound <= bound`
    pub chain_holds: bool,
}

/// Checks the converse for many codes of one blocklength against a fixed
/// channel pair; the active envelope is computed once.
#[derive(Debug, Clone)]
pub struct ConverseValidator {
    w: WiretapKernel,
    v: FactorizedKernel,
    vk: WiretapKernel,
    envelope: ActiveEnvelope,
    n: usize,
    caps: Caps,
}

impl ConverseValidator {
    /// `v = None` selects the default `V` built from the maximizer of `I(X;Y|Z)`.
    pub fn new(
        w: &WiretapKernel,
        n: usize,
        v: Option<&FactorizedKernel>,
        caps: &Caps,
        opts: &MaxCmiOptions,
    ) -> Result<Self> {
        let v = match v {
            Some(v) => v.clone(),
            None => default_v(w, &max_cmi_with(w, opts, &crate::prob::Distribution::uniform(w.input_size()))?.p_star)?,
        };
        let vk = v.compose();
        if vk.input_size() != w.input_size() || vk.y_size() != w.y_size() || vk.z_size() != w.z_size() {
            return Err(Error::AlphabetMismatch { left: vk.as_dmc().output_size(), right: w.as_dmc().output_size() });
        }
        let envelope = ActiveEnvelope::build(w.as_dmc(), vk.as_dmc(), n, caps)?;
        Ok(ConverseValidator { w: w.clone(), v, vk, envelope, n, caps: *caps })
    }

    pub fn v(&self) -> &FactorizedKernel {
        &self.v
    }

    pub fn validate(&self, code: &WiretapCode, eta: f64) -> Result<ConverseValidation> {
        if code.n() != self.n {
            return Err(Error::ParameterDomain(format!(
                "code blocklength {} differs from validator blocklength {}",
                code.n(),
                self.n
            )));
        }
        let p = execute_exact(code, &self.w, &self.caps)?;
        let m = metrics(&p, |y| code.decode(y))?;
        let level = m.error_prob + m.leakage + eta;
        if !(eta > 0.0 && level < 1.0) {
            return Err(Error::ParameterDomain(format!("need 0 < eta and eps + delta + eta < 1 (got {level})")));
        }
        let q = execute_exact(code, &self.vk, &self.caps)?;
        let (pk, qk) = (key_joint(&p, code), key_joint(&q, code));
        let penalty = 2.0 * (1.0 / eta).log2();
        let code_bound = -beta_exact_of(pk.probs(), qk.probs(), level)?.beta.log2() + penalty;
        let bound = -self.envelope.beta(level).log2() + penalty;
        let log_n = (code.msg_count() as f64).log2();
        Ok(ConverseValidation {
            log_n,
            metrics: m,
            eta,
            code_bound,
            bound,
            holds: log_n <= bound + SLACK,
            chain_holds: log_n <= code_bound + SLACK && code_bound <= bound + SLACK,
        })
    }
}

/// Measures `(eps, delta)` of `code` on `w` and checks
/// `log N <= -log beta_{eps+delta+eta}(W, V, n) + 2 log(1/eta)` for the default `V`.
pub fn validate_converse(
    code: &WiretapCode,
    w: &WiretapKernel,
    eta: f64,
    caps: &Caps,
    opts: &MaxCmiOptions,
) -> Result<ConverseValidation> {
    ConverseValidator::new(w, code.n(), None, caps, opts)?.validate(code, eta)
}
