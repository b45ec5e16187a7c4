//! On-disk artifacts of a run.
//!
//! | file                    | contents                                                    |
//! |-------------------------|-------------------------------------------------------------|
//! | `series.csv`            | `t,E0,meanU,hamE,hamF,minUx,xi,alpha,dt` at record times    |
//! | `report.json`           | criteria, termination, fits, drifts, resolved configuration |
//! | `snapshots/t_<t>.csv`   | `x,u,rho` on the grid                                       |
//! | `characteristics.csv`   | `t,seed,q,qx,log_qx`, one row per seed and record time      |
//!
//! Numbers are written with 17 significant digits so that they parse back to
//! the same `f64`; rows end in `\n`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::characteristics::CharacteristicEnsemble;
use crate::criteria::{CriterionReport, RateEstimate};
use crate::error::{io_error, Result};
use crate::model::State;
use crate::scenario::{Family, Outcome, Scenario};
use crate::timestepper::{SimResult, Termination};

use super::config::scenario_config;

/// Round-trip formatting used for every CSV number.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| io_error(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| io_error(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

pub fn write_series(path: &Path, r: &SimResult) -> Result<()> {
    let rows = r.invariants.iter().zip(&r.record_steps).map(|(inv, &step)| {
        let s = r.slope_trace.sample(step);
        [inv.t, inv.e0, inv.mean_u, inv.ham_e, inv.ham_f, s.m, s.xi, s.alpha, r.dts[step]]
            .map(fmt_real)
    });
    write_rows(
        path,
        &["t", "E0", "meanU", "hamE", "hamF", "minUx", "xi", "alpha", "dt"],
        rows,
    )
}

/// File name of the snapshot at time `t`.
pub fn snapshot_name(t: f64) -> String {
    format!("t_{t}.csv")
}

pub fn write_snapshot(path: &Path, s: &State) -> Result<()> {
    let grid = s.grid();
    let rows = (0..grid.n()).map(|j| {
        [grid.node(j), s.u.values()[j], s.rho.values()[j]].map(fmt_real)
    });
    write_rows(path, &["x", "u", "rho"], rows)
}

pub fn write_characteristics(path: &Path, e: &CharacteristicEnsemble) -> Result<()> {
    let rows = e.times.iter().enumerate().flat_map(|(i, &t)| {
        e.seeds.iter().enumerate().map(move |(j, &x0)| {
            [t, x0, e.q[i][j], e.qx[i][j], e.log_qx[i][j]].map(fmt_real)
        })
    });
    write_rows(path, &["t", "seed", "q", "qx", "log_qx"], rows)
}

#[derive(Debug, Serialize)]
pub struct Drift {
    /// Relative drift of `E0`.
    pub e0: f64,
    /// Absolute drifts.
    pub mean_u: f64,
    pub ham_e: f64,
    pub ham_f: f64,
}

impl Drift {
    pub fn of(r: &SimResult) -> Self {
        let first = &r.invariants[0];
        let abs = |f: fn(&crate::model::InvariantRecord) -> f64| {
            r.invariants
                .iter()
                .map(|x| (f(x) - f(first)).abs())
                .fold(0.0, f64::max)
        };
        Self {
            e0: r.max_e0_drift(),
            mean_u: r.max_mean_drift(),
            ham_e: abs(|x| x.ham_e),
            ham_f: abs(|x| x.ham_f),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct LyapunovSummary {
    pub holds: bool,
    pub violations: usize,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest `|m(t)| / envelope(t)` over the run.
    pub max_ratio: f64,
}

#[derive(Debug, Serialize)]
pub struct TransportSummary {
    pub seeds: usize,
    pub residual: f64,
    pub monotone: bool,
    pub sign_preserved: bool,
}

/// Contents of `report.json`.
#[derive(Debug, Serialize)]
pub struct Report<'a> {
    pub scenario: &'a str,
    /// Initial-data family with automatic amplitudes resolved.
    pub family: &'a Family,
    pub criteria: &'a CriterionReport,
    pub termination: &'a Termination,
    /// Blow-up detection time, if any.
    pub t_sim: Option<f64>,
    pub final_time: f64,
    pub steps: usize,
    pub numerical_fault: bool,
    pub rate_estimate: Option<RateEstimate>,
    pub rate_error: Option<String>,
    pub lyapunov: Option<LyapunovSummary>,
    pub lyapunov_error: Option<String>,
    pub drift: Drift,
    pub transport: Option<TransportSummary>,
    pub config: BTreeMap<String, String>,
}

impl<'a> Report<'a> {
    pub fn new(sc: &'a Scenario, o: &'a Outcome) -> Self {
        let (rate_estimate, rate_error) = match &o.rate {
            Some(Ok(r)) => (Some(*r), None),
            Some(Err(e)) => (None, Some(e.to_string())),
            None => (None, None),
        };
        let (lyapunov, lyapunov_error) = match &o.lyapunov {
            Some(Ok(l)) => {
                let max_ratio = o
                    .result
                    .slope_trace
                    .m
                    .iter()
                    .zip(&l.envelope)
                    .map(|(m, env)| m.abs() / env)
                    .fold(0.0, f64::max);
                let summary = LyapunovSummary {
                    holds: l.holds(),
                    violations: l.violations.len(),
                    beta: l.beta,
                    c1: l.c1,
                    c2: l.c2,
                    max_ratio,
                };
                (Some(summary), None)
            }
            Some(Err(e)) => (None, Some(e.to_string())),
            None => (None, None),
        };
        Self {
            scenario: &sc.name,
            family: &o.family,
            criteria: &o.report,
            termination: &o.result.termination,
            t_sim: o.t_sim(),
            final_time: o.result.final_time,
            steps: o.result.steps(),
            numerical_fault: o.numerical_fault(),
            rate_estimate,
            rate_error,
            lyapunov,
            lyapunov_error,
            drift: Drift::of(&o.result),
            transport: o.transport.as_ref().map(|t| TransportSummary {
                seeds: t.ensemble.seeds.len(),
                residual: t.residual,
                monotone: t.monotone,
                sign_preserved: t.sign_preserved,
            }),
            config: scenario_config(sc).entries().clone(),
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

/// Writes every artifact of `o` into `dir`, creating it if needed.
pub fn write_outcome(dir: &Path, sc: &Scenario, o: &Outcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    write_series(&dir.join("series.csv"), &o.result)?;
    if !o.result.snapshots.is_empty() {
        let snaps = dir.join("snapshots");
        fs::create_dir_all(&snaps).map_err(|e| io_error(&snaps, e))?;
        for (t, s) in &o.result.snapshots {
            write_snapshot(&snaps.join(snapshot_name(*t)), s)?;
        }
    }
    if let Some(t) = &o.transport {
        write_characteristics(&dir.join("characteristics.csv"), &t.ensemble)?;
    }
    write_json(&dir.join("report.json"), &Report::new(sc, o))
}
