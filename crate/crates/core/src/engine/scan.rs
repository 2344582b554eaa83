//! Steady-state trace distance over a grid of drive frequencies or gaps.

use rayon::prelude::*;
use serde::Serialize;

use super::config::SimConfig;
use super::integrate::integrate;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanAxis {
    Omega,
    H,
}

impl std::str::FromStr for ScanAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "omega" => Ok(ScanAxis::Omega),
            "h" => Ok(ScanAxis::H),
            other => Err(Error::Config(format!("unknown scan axis `{other}` (expected omega or h)"))),
        }
    }
}

impl ScanAxis {
    pub fn name(self) -> &'static str {
        match self {
            ScanAxis::Omega => "omega",
            ScanAxis::H => "h",
        }
    }
}

/// Frequencies used when no grid is given.
pub const DEFAULT_OMEGA_GRID: [f64; 6] = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0];
/// Gaps used when no grid is given.
pub const DEFAULT_H_GRID: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];

/// One scan point. Failures are recorded rather than aborting the scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub value: f64,
    pub d_avg: f64,
    pub d_max: f64,
    pub with_cd: bool,
    pub error: Option<String>,
}

/// Configuration for one grid point.
pub fn point_config(base: &SimConfig, axis: ScanAxis, value: f64) -> SimConfig {
    let mut cfg = base.clone();
    match axis {
        ScanAxis::Omega => cfg.protocol.set_omega(value),
        ScanAxis::H => cfg.protocol.set_gap(value),
    }
    cfg.periods = cfg.periods.max(cfg.discard_periods + 1);
    cfg
}

/// `(d_avg, d_max)` over the last full period of one run, after at least
/// `discard_periods` transient periods.
pub fn steady_state(cfg: &SimConfig) -> Result<(f64, f64)> {
    Ok(integrate(cfg)?.last_period_stats())
}

/// Run every grid point on a pool of `workers` threads; rows keep grid order.
pub fn scan(base: &SimConfig, axis: ScanAxis, grid: &[f64], workers: usize) -> Result<Vec<ScanRow>> {
    base.check()?;
    if grid.is_empty() {
        return Err(Error::Config("scan grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Config(format!("scan values must be positive, got {bad}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| {
        grid.par_iter()
            .map(|&value| {
                let cfg = point_config(base, axis, value);
                match steady_state(&cfg) {
                    Ok((d_avg, d_max)) => ScanRow { value, d_avg, d_max, with_cd: cfg.with_cd, error: None },
                    Err(e) => ScanRow { value, d_avg: f64::NAN, d_max: f64::NAN, with_cd: cfg.with_cd, error: Some(e.to_string()) },
                }
            })
            .collect()
    });
    Ok(rows)
}

/// Parse a comma-separated list of numbers.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("invalid grid value `{s}`"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.1, 0.2,1").unwrap(), vec![0.1, 0.2, 1.0]);
        assert!(parse_grid("0.1,x").is_err());
        assert_eq!("omega".parse::<ScanAxis>().unwrap(), ScanAxis::Omega);
        assert!("theta".parse::<ScanAxis>().is_err());
    }

    #[test]
    fn single_point_matches_direct_run() {
        let mut base = SimConfig::rotating_qubit(0.5, true);
        base.periods = 6;
        let rows = scan(&base, ScanAxis::Omega, &[0.5], 1).unwrap();
        let (avg, max) = steady_state(&point_config(&base, ScanAxis::Omega, 0.5)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].d_avg, avg);
        assert_eq!(rows[0].d_max, max);
        assert!(rows[0].with_cd);
    }

    #[test]
    fn failures_are_recorded_per_row() {
        let mut base = SimConfig::rotating_qubit(0.5, false);
        base.periods = 6;
        base.integrator.max_steps_per_period = base.integrator.steps_per_period;
        let rows = scan(&base, ScanAxis::Omega, &[0.5, 1.0], 2).unwrap();
        assert!(rows.iter().all(|r| r.error.is_some()));
        assert_eq!(rows[1].value, 1.0);
    }
}
