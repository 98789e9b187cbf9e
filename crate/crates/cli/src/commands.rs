use anyhow::{Context, Result};
use rayon::prelude::*;
use wiretap_core::discrimination::{
    beta_active_bruteforce, beta_best_fixed_input, beta_open_loop_bruteforce, discrimination_exponent, ActiveEnvelope,
    DiscriminationResult,
};
use wiretap_core::prob::kl_divergence;
use wiretap_core::protocol::{execute_exact, metrics, ConverseValidator, DeterministicCodeSpace};
use wiretap_core::wiretap::{
    capacity_formula, check_degraded, converse_bound, max_cmi_multistart, MaxCmiOptions, DEGRADED_TOL,
};
use wiretap_core::{stein_exponent_curve, Error};

use crate::config::ExperimentConfig;
use crate::table::{Cell, ResultTable};

/// A finished command: its table and any property violations it found.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: ResultTable,
    pub failures: Vec<String>,
}

impl Outcome {
    fn ok(table: ResultTable) -> Self {
        Outcome { table, failures: Vec::new() }
    }
}

/// Adds the metadata lines needed to rerun a command exactly.
pub fn stamp(table: &mut ResultTable, command: &str, cfg: &ExperimentConfig) {
    table.meta("tool", "wiretap-converse");
    table.meta("version", env!("CARGO_PKG_VERSION"));
    table.meta("command", command);
    table.meta("seed", cfg.seed().to_string());
    table.meta(
        "timestamp",
        std::env::var("SOURCE_DATE_EPOCH").unwrap_or_else(|_| "unset (set SOURCE_DATE_EPOCH to record one)".into()),
    );
    table.meta("config", cfg.canonical_json());
}

/// `(n, beta, log2 beta, exponent)` rows from the type-class computation.
pub fn cmd_beta(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.check_command("beta")?;
    let p = cfg.require(&cfg.inputs.p, "p")?;
    let q = cfg.require(&cfg.inputs.q, "q")?;
    let eps = cfg.eps(0.1)?;
    let ns = cfg.n_values(&[1, 10, 100, 1000])?;
    let d = kl_divergence(&p, &q)?;
    let curve = stein_exponent_curve(&p, &q, eps, &ns, &cfg.params.caps)?;
    let mut t = ResultTable::new(&["n", "eps", "beta", "log2_beta", "exponent", "kl_divergence"]);
    for pt in curve {
        t.push(vec![pt.n.into(), eps.into(), pt.beta.into(), pt.log2_beta.into(), pt.exponent.into(), d.into()])?;
    }
    Ok(Outcome::ok(t))
}

fn rel_le(a: f64, b: f64) -> bool {
    a <= b * (1.0 + 1e-9) + 1e-300
}

/// Brute-force, open-loop and fixed-input `beta` per `n`, with the exponent target.
pub fn cmd_discriminate(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.check_command("discriminate")?;
    let w = cfg.require(&cfg.inputs.w, "w")?;
    let v = cfg.require(&cfg.inputs.v, "v")?;
    let eps = cfg.eps(0.1)?;
    let ns = cfg.n_values(&[1, 2, 3])?;
    let caps = cfg.params.caps;
    let target = discrimination_exponent(&w, &v)?;
    let mut t = ResultTable::new(&[
        "n",
        "eps",
        "method",
        "beta",
        "log2_beta",
        "exponent",
        "target_exponent",
        "x_star",
        "status",
    ]);
    let mut failures = Vec::new();
    for &n in &ns {
        let runs: Vec<(&str, wiretap_core::Result<DiscriminationResult>)> = vec![
            ("active_exact", ActiveEnvelope::build(&w, &v, n, &caps).and_then(|e| e.evaluate(eps))),
            ("adaptive_deterministic", beta_active_bruteforce(&w, &v, eps, n, &caps)),
            ("open_loop", beta_open_loop_bruteforce(&w, &v, eps, n, &caps)),
            ("fixed_input", beta_best_fixed_input(&w, &v, eps, n, &caps)),
        ];
        let mut betas = Vec::new();
        for (method, r) in runs {
            match r {
                Ok(r) => {
                    betas.push(Some(r.beta));
                    t.push(vec![
                        n.into(),
                        eps.into(),
                        method.into(),
                        r.beta.into(),
                        r.log2_beta.into(),
                        r.exponent.into(),
                        target.value.into(),
                        target.x_star.into(),
                        "ok".into(),
                    ])?;
                }
                Err(e @ Error::SizeOverflow { .. }) => {
                    betas.push(None);
                    t.push(vec![
                        n.into(),
                        eps.into(),
                        method.into(),
                        Cell::Empty,
                        Cell::Empty,
                        Cell::Empty,
                        target.value.into(),
                        target.x_star.into(),
                        format!("skipped: {e}").into(),
                    ])?;
                }
                Err(e) => return Err(e).context(format!("{method} at n = {n}")),
            }
        }
        let present: Vec<f64> = betas.into_iter().flatten().collect();
        for pair in present.windows(2) {
            if !rel_le(pair[0], pair[1]) {
                failures.push(format!("containment violated at n = {n}: {} > {}", pair[0], pair[1]));
            }
        }
    }
    Ok(Outcome { table: t, failures })
}

const WIRETAP_COLUMNS: [&str; 6] = ["section", "quantity", "n", "eta", "value", "status"];

fn row(section: &str, quantity: &str, n: Option<usize>, eta: Option<f64>, value: Cell, status: &str) -> Vec<Cell> {
    vec![section.into(), quantity.into(), n.into(), eta.into(), value, status.into()]
}

/// Degradedness, `max I(X;Y|Z)`, capacity, converse bounds and optional code checks.
pub fn cmd_wiretap(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.check_command("wiretap")?;
    let w = cfg.require(&cfg.inputs.kernel, "kernel")?;
    let fv = cfg.optional(&cfg.inputs.factorized_v, "factorized_v")?;
    let code = cfg.optional(&cfg.inputs.code, "code")?;
    let eps = cfg.eps(0.05)?;
    let delta = cfg.params.delta.unwrap_or(0.05);
    let etas = cfg.params.eta.clone().unwrap_or_else(|| vec![0.05, 0.1, 0.2]);
    let ns = cfg.n_values(&[1, 2])?;
    let caps = cfg.params.caps;
    let opts = MaxCmiOptions { tol: cfg.tol()?, ..MaxCmiOptions::default() };
    let mut t = ResultTable::new(&WIRETAP_COLUMNS);
    let mut failures = Vec::new();

    let deg = check_degraded(&w, DEGRADED_TOL);
    t.push(row("degraded", "is_degraded", None, None, deg.is_degraded.into(), "ok"))?;
    t.push(row("degraded", "max_deviation", None, None, deg.max_deviation.into(), "ok"))?;

    let ms = max_cmi_multistart(&w, &opts, cfg.params.restarts.unwrap_or(20).max(1), cfg.seed())?;
    let status = if ms.best.converged { "ok" } else { "not converged" };
    t.push(row("max_cmi", "value", None, None, ms.best.value.into(), status))?;
    t.push(row("max_cmi", "gap", None, None, ms.best.gap.into(), status))?;
    t.push(row("max_cmi", "restart_spread", None, None, ms.spread.into(), status))?;
    let p_star: Vec<String> = ms.best.p_star.probs().iter().map(|v| v.to_string()).collect();
    t.push(row("max_cmi", "p_star", None, None, p_star.join(";").into(), status))?;

    match capacity_formula(&w, eps, delta, &opts) {
        Ok(c) => {
            let case = format!("{:?}", c.case).to_lowercase();
            t.push(row("capacity", &case, None, None, c.value.into(), "ok"))?;
        }
        Err(Error::NotDegraded) => t.push(row("capacity", "value", None, None, Cell::Empty, "not degraded"))?,
        Err(e) => t.push(row("capacity", "value", None, None, Cell::Empty, &format!("skipped: {e}")))?,
    }

    for &n in &ns {
        for &eta in &etas {
            match converse_bound(&w, eps, delta, eta, n, fv.as_ref(), &caps, &opts) {
                Ok(r) => {
                    let method = if r.surrogate { "surrogate" } else { "exact" };
                    t.push(row("bound", "bound_bits", Some(n), Some(eta), r.bound_bits.into(), method))?;
                    t.push(row("bound", "per_symbol_rate", Some(n), Some(eta), r.per_symbol_rate.into(), method))?;
                    t.push(row("bound", "log2_beta", Some(n), Some(eta), r.log2_beta.into(), method))?;
                }
                Err(e @ Error::ParameterDomain(_)) => {
                    t.push(row("bound", "bound_bits", Some(n), Some(eta), Cell::Empty, &format!("skipped: {e}")))?
                }
                Err(e) => return Err(e).context(format!("converse bound at n = {n}, eta = {eta}")),
            }
        }
    }

    if let Some(code) = code {
        let n = code.n();
        let pj = execute_exact(&code, &w, &caps)?;
        let m = metrics(&pj, |y| code.decode(y))?;
        t.push(row("code", "error_prob", Some(n), None, m.error_prob.into(), "ok"))?;
        t.push(row("code", "leakage", Some(n), None, m.leakage.into(), "ok"))?;
        let validator = ConverseValidator::new(&w, n, fv.as_ref(), &caps, &opts)?;
        for &eta in &etas {
            match validator.validate(&code, eta) {
                Ok(r) => {
                    t.push(row("code", "log_n", Some(n), Some(eta), r.log_n.into(), "ok"))?;
                    t.push(row("code", "code_bound", Some(n), Some(eta), r.code_bound.into(), "ok"))?;
                    t.push(row("code", "bound", Some(n), Some(eta), r.bound.into(), "ok"))?;
                    t.push(row("code", "holds", Some(n), Some(eta), (r.holds && r.chain_holds).into(), "ok"))?;
                    if !(r.holds && r.chain_holds) {
                        failures.push(format!("converse violated for the supplied code at eta = {eta}"));
                    }
                }
                Err(e @ Error::ParameterDomain(_)) => {
                    t.push(row("code", "holds", Some(n), Some(eta), Cell::Empty, &format!("skipped: {e}")))?
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    if let Some(sweep) = &cfg.params.sweep {
        let (xs, ys) = (w.input_size(), w.y_size());
        for n in 1..=sweep.n_max {
            let validator = ConverseValidator::new(&w, n, fv.as_ref(), &caps, &opts)?;
            let space = DeterministicCodeSpace::new(n, sweep.msg_count, xs, ys, sweep.feedback_size);
            let count = space.count();
            wiretap_core::Caps::check("code space", count, caps.protocol_states)?;
            for &eta in &etas {
                let (checked, violations, margin) = (0..count as u64)
                    .into_par_iter()
                    .map(|r| match validator.validate(&space.code(r as u128), eta) {
                        Ok(v) => Ok((1u64, u64::from(!(v.holds && v.chain_holds)), v.bound - v.log_n)),
                        Err(Error::ParameterDomain(_)) => Ok((0, 0, f64::INFINITY)),
                        Err(e) => Err(e),
                    })
                    .try_reduce(|| (0, 0, f64::INFINITY), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2.min(b.2))))?;
                let holds = violations == 0;
                t.push(row("sweep", "codes", Some(n), Some(eta), (count as u64).into(), "ok"))?;
                t.push(row("sweep", "checked", Some(n), Some(eta), checked.into(), "ok"))?;
                t.push(row("sweep", "min_margin_bits", Some(n), Some(eta), margin.into(), "ok"))?;
                t.push(row("sweep", "holds", Some(n), Some(eta), holds.into(), "ok"))?;
                if !holds {
                    failures.push(format!("{violations} codes violate the converse at n = {n}, eta = {eta}"));
                }
            }
        }
    }
    Ok(Outcome { table: t, failures })
}
