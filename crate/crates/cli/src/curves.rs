//! Analytic selection curves.

use std::io::Write;

use qudos_core::metrics::selection_at_least_one;

use crate::{fmt_f64, CliError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurveSpec {
    pub pool_size: u64,
    pub corrupted: Vec<u64>,
    pub chosen: Vec<u64>,
}

impl CurveSpec {
    pub fn figure_6a() -> Self {
        Self { pool_size: 100, corrupted: vec![1, 5, 10, 50], chosen: (1..=10).collect() }
    }

    pub fn figure_6b() -> Self {
        Self { pool_size: 100_000, corrupted: vec![1, 5, 10, 50], chosen: vec![50, 150, 250, 500, 750, 1000] }
    }

    /// `(m, c, p)` rows, grouped by `c`.
    pub fn rows(&self) -> Result<Vec<(u64, u64, f64)>, CliError> {
        let mut rows = Vec::with_capacity(self.corrupted.len() * self.chosen.len());
        for &c in &self.corrupted {
            for &m in &self.chosen {
                let p = selection_at_least_one(self.pool_size, c, m)
                    .map_err(|e| CliError::Usage(format!("n={} c={c} m={m}: {e}", self.pool_size)))?;
                rows.push((m, c, p));
            }
        }
        Ok(rows)
    }
}

/// Parse `a..b` (inclusive), `a..=b`, or a comma-separated list.
pub fn parse_list(text: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("`{text}` is not a list like 1,5,10 or a range like 1..10");
    if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(format!("range `{text}` is empty"));
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|v| v.trim().parse().map_err(|_| bad())).collect()
}

pub fn write_csv(out: &mut dyn Write, rows: &[(u64, u64, f64)]) -> std::io::Result<()> {
    writeln!(out, "m,c,p")?;
    for (m, c, p) in rows {
        writeln!(out, "{m},{c},{}", fmt_f64(*p))?;
    }
    Ok(())
}
