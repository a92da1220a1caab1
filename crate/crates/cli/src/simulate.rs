//! Monte Carlo runs driven by a scenario file.

use std::io::Write;

use qudos_core::attack_sim::{estimate_success, sweep, SimError, SuccessEstimate};

use crate::scenario::{Scenario, ScenarioError};
use crate::{fmt_f64, CliError};

pub const HEADER: &str = "value,gamma_hat,ci_low,ci_high,successes,iterations,seed";

/// Rows of `(swept value, estimate)`; the value is `None` without a sweep.
pub fn run(scenario: &Scenario) -> Result<Vec<(Option<u64>, SuccessEstimate)>, CliError> {
    let invalid = |e: SimError| -> CliError {
        match scenario.sweep_line {
            Some(line) => ScenarioError::Invalid { line, message: e.to_string() }.into(),
            None => CliError::Usage(e.to_string()),
        }
    };
    match &scenario.sweep {
        None => {
            let resolved = scenario.template.resolve().map_err(invalid)?;
            Ok(vec![(None, estimate_success(&resolved).map_err(invalid)?)])
        }
        Some(s) => Ok(sweep(&scenario.template, s.parameter, &s.values)
            .map_err(invalid)?
            .into_iter()
            .map(|(v, e)| (Some(v), e))
            .collect()),
    }
}

pub fn write_csv(out: &mut dyn Write, rows: &[(Option<u64>, SuccessEstimate)]) -> std::io::Result<()> {
    writeln!(out, "{HEADER}")?;
    for (value, e) in rows {
        let value = value.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{value},{},{},{},{},{},{}",
            fmt_f64(e.gamma_hat),
            fmt_f64(e.ci_low),
            fmt_f64(e.ci_high),
            e.successes,
            e.iterations,
            e.master_seed
        )?;
    }
    Ok(())
}
