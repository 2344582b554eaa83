//! CSV emission. Every file starts with `#` metadata lines (config echo,
//! code version, seed) followed by a header row; floats use 17 significant
//! digits so reruns diff bit for bit.

use std::io::Write;

use super::config::SimConfig;
use super::expand::ExpandTable;
use super::integrate::Trajectory;
use super::scan::{ScanAxis, ScanRow};
use crate::error::Result;
use crate::liouville::{coherence_pairs, StateVec};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Round-trip float format: one leading digit and 16 decimals.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_metadata(w: &mut dyn Write, config: &SimConfig, extra: &[(&str, String)]) -> Result<()> {
    writeln!(w, "# config: {}", config.to_json())?;
    writeln!(w, "# version: {VERSION}")?;
    writeln!(w, "# seed: {}", config.seed)?;
    let init = &config.initial;
    writeln!(w, "# initial_populations_ascending_energy: {:?}", init.pop)?;
    for (k, v) in extra {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

fn state_columns(prefix: &str, n: usize) -> Vec<String> {
    let mut cols: Vec<String> = (1..=n).map(|k| format!("{prefix}pop_{k}")).collect();
    for (m, l) in coherence_pairs(n) {
        cols.push(format!("{prefix}re_coh_{}_{}", m + 1, l + 1));
        cols.push(format!("{prefix}im_coh_{}_{}", m + 1, l + 1));
    }
    cols
}

fn state_values(s: &StateVec) -> Vec<String> {
    let mut v: Vec<String> = s.pop.iter().map(|p| fmt(p.re)).collect();
    for z in &s.coh {
        v.push(fmt(z.re));
        v.push(fmt(z.im));
    }
    v
}

/// Columns `t, d, pop_*, re/im coh_*, trace_err`; states in the eigenbasis
/// of the bare Hamiltonian, ascending energy.
pub fn write_trajectory(w: &mut dyn Write, config: &SimConfig, traj: &Trajectory) -> Result<()> {
    let dg = &traj.diagnostics;
    write_metadata(
        w,
        config,
        &[
            ("steps_per_period", dg.steps_per_period.to_string()),
            ("refinement_difference", fmt(dg.refinement_difference)),
            ("max_trace_error", fmt(dg.max_trace_error)),
            ("max_hermiticity_error", fmt(dg.max_hermiticity_error)),
            ("min_eigenvalue", fmt(dg.min_eigenvalue)),
        ],
    )?;
    let n = traj.states.first().map_or(2, StateVec::dim);
    let mut header = vec!["t".to_string(), "d".to_string()];
    header.extend(state_columns("", n));
    header.push("trace_err".into());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..traj.times.len() {
        let mut row = vec![fmt(traj.times[i]), fmt(traj.distance[i])];
        row.extend(state_values(&traj.states[i]));
        row.push(fmt(traj.trace_error[i]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Columns `<axis>, d_avg, d_max, with_cd, error`.
pub fn write_scan(w: &mut dyn Write, config: &SimConfig, axis: ScanAxis, rows: &[ScanRow]) -> Result<()> {
    write_metadata(w, config, &[("axis", axis.name().into()), ("discard_periods", config.discard_periods.to_string())])?;
    writeln!(w, "{},d_avg,d_max,with_cd,error", axis.name())?;
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        writeln!(w, "{},{},{},{},{}", fmt(r.value), fmt(r.d_avg), fmt(r.d_max), r.with_cd, err)?;
    }
    Ok(())
}

/// Columns `t, difference`, then the perturbative state (`exp_` prefix) and
/// the integrated state (`int_` prefix).
pub fn write_expansion(w: &mut dyn Write, config: &SimConfig, table: &ExpandTable) -> Result<()> {
    write_metadata(w, config, &[("order", table.order.to_string())])?;
    let n = table.rows.first().map_or(2, |r| r.integrated.dim());
    let mut header = vec!["t".to_string(), "difference".to_string()];
    header.extend(state_columns("exp_", n));
    header.extend(state_columns("int_", n));
    writeln!(w, "{}", header.join(","))?;
    for r in &table.rows {
        let mut row = vec![fmt(r.t), fmt(r.difference)];
        row.extend(state_values(&r.perturbative));
        row.extend(state_values(&r.integrated));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
