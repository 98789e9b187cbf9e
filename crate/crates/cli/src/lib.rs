//! Experiment drivers behind the `wiretap-converse` binary.

pub mod commands;
pub mod config;
pub mod selftest;
pub mod table;

pub use commands::{cmd_beta, cmd_discriminate, cmd_wiretap, stamp, Outcome};
pub use config::ExperimentConfig;
pub use selftest::{run_checks, selftest_table, Check, SelftestOptions};
pub use table::{Cell, ResultTable};

/// Runs the invariant suite and reports one row per property.
pub fn cmd_selftest(cfg: &ExperimentConfig) -> anyhow::Result<Outcome> {
    cfg.check_command("selftest")?;
    let kernel = cfg.optional(&cfg.inputs.kernel, "kernel")?;
    let checks = run_checks(&SelftestOptions { seed: cfg.seed(), scale: cfg.params.scale.unwrap_or(1.0), kernel });
    let failures = checks
        .iter()
        .filter(|c| !c.passed())
        .map(|c| format!("property {} failed: worst {} > tolerance {}", c.name, c.worst, c.tol))
        .collect();
    Ok(Outcome { table: selftest_table(&checks), failures })
}
