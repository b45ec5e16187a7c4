//! Command-line front end: `run`, `criteria`, `sweep` and `selftest`.
//!
//! Exit status is 0 on success (a detected blow-up is a success), 2 for a
//! configuration error, 3 for an I/O error and 4 when a run hit a non-finite
//! state without first steepening towards blow-up. A failing self test
//! exits with 1.

pub mod config;
pub mod output;
pub mod selftest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::criteria::{evaluate_criteria, CriterionReport};
use crate::error::{io_error, Error, Result};
use crate::grid::PeriodicGrid;
use crate::scenario::{build_initial_data, resolve_family, run_scenario, Family, Scenario};

use config::{scenario_config, Config};
use output::{write_json, write_outcome};

#[derive(Debug, Parser)]
#[command(name = "dgh", version, about = "Two-component DGH simulator and criteria checker")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory receiving the artifacts.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Seed for the random trial fields of `selftest`.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print nothing but errors.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario.
    Run { config: PathBuf },
    /// Evaluate the blow-up and global-existence criteria without simulating.
    Criteria { config: PathBuf },
    /// Run a scenario for evenly spaced values of one key, in parallel.
    Sweep {
        config: PathBuf,
        /// `key=lo:hi:count`, e.g. `scenario.b=0.5:2:4`.
        #[arg(long, value_name = "KEY=LO:HI:N")]
        param: String,
    },
    /// Check the numerics against independent oracles.
    Selftest,
}

pub const EXIT_FAILED_SELFTEST: u8 = 1;
pub const EXIT_NUMERICAL_FAULT: u8 = 4;

pub fn load_config(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    Config::parse(&text)
}

/// Parses `key=lo:hi:n` into the key and its `n` values.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<f64>)> {
    let bad = |reason: &str| Error::Config {
        key: "--param".into(),
        reason: format!("{reason} in `{spec}`; expected key=lo:hi:n"),
    };
    let (key, range) = spec.split_once('=').ok_or_else(|| bad("missing `=`"))?;
    let parts: Vec<&str> = range.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(bad("expected three `:`-separated fields"));
    };
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|x| x.is_finite());
    let (Some(lo), Some(hi)) = (num(lo), num(hi)) else {
        return Err(bad("bounds must be finite numbers"));
    };
    let n: usize = n.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
    if n == 0 || key.trim().is_empty() {
        return Err(bad("count must be positive and the key non-empty"));
    }
    let values = if n == 1 {
        vec![lo]
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    };
    Ok((key.trim().to_string(), values))
}

fn run_one(sc: &Scenario, dir: &Path, quiet: bool) -> Result<u8> {
    let o = run_scenario(sc)?;
    write_outcome(dir, sc, &o)?;
    if !quiet {
        let bound = o
            .report
            .riccati_t
            .map_or("none".to_string(), |t| format!("{t:.6}"));
        println!(
            "{}: {} at t = {:.6} after {} steps; E0 drift {:.3e}; blow-up time bound {}",
            sc.name,
            o.result.termination.name(),
            o.result.final_time,
            o.result.steps(),
            o.result.max_e0_drift(),
            bound,
        );
    }
    Ok(if o.numerical_fault() { EXIT_NUMERICAL_FAULT } else { 0 })
}

#[derive(Serialize)]
struct CriteriaOnly<'a> {
    scenario: &'a str,
    family: &'a Family,
    criteria: &'a CriterionReport,
    config: std::collections::BTreeMap<String, String>,
}

fn criteria_only(sc: &Scenario, dir: &Path, quiet: bool) -> Result<u8> {
    let grid = PeriodicGrid::new(sc.sim.n)?;
    let family = resolve_family(&sc.family, &grid, &sc.params)?;
    let s0 = build_initial_data(&family, &grid, &sc.params)?;
    let report = evaluate_criteria(&s0.u, &s0.rho, &sc.params, &sc.eps_list)?;
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let doc = CriteriaOnly {
        scenario: &sc.name,
        family: &family,
        criteria: &report,
        config: scenario_config(sc).entries().clone(),
    };
    write_json(&dir.join("report.json"), &doc)?;
    if !quiet {
        println!("E0 = {:.6}, min u0' = {:.6} at x = {:.6}", report.e0, report.m0, report.xi0);
        for v in &report.verdicts {
            let bound = v.time_bound.map_or(String::new(), |t| format!(", T <= {t:.6}"));
            println!("  {:<24} {:?}{bound}", v.criterion, v.predicted);
        }
    }
    Ok(0)
}

fn sweep(base: &Config, spec: &str, out: &Path, quiet: bool) -> Result<u8> {
    let (key, values) = parse_sweep(spec)?;
    let base_name = base.to_scenario()?.name;
    let width = values.len().to_string().len();
    let scenarios = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = base.clone();
            c.set(key.clone(), v.to_string());
            c.set("scenario.name", format!("{base_name}-{i:0width$}"));
            c.to_scenario()
        })
        .collect::<Result<Vec<_>>>()?;
    let codes: Vec<Result<u8>> = scenarios
        .par_iter()
        .map(|sc| run_one(sc, &out.join(&sc.name), quiet))
        .collect();
    let mut status = 0;
    for code in codes {
        status = status.max(code?);
    }
    Ok(status)
}

fn selftest(seed: u64, quiet: bool) -> u8 {
    let checks = selftest::run_all(seed);
    let mut ok = true;
    for c in &checks {
        ok &= c.passed;
        if !quiet || !c.passed {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            println!("{tag} {} ({:.3e} vs {:.1e})", c.name, c.value, c.tolerance);
        }
    }
    if ok {
        0
    } else {
        EXIT_FAILED_SELFTEST
    }
}

/// Executes a parsed command line and returns the exit status.
pub fn execute(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Run { config } => {
            let sc = load_config(config)?.to_scenario()?;
            run_one(&sc, &cli.out_dir, cli.quiet)
        }
        Command::Criteria { config } => {
            let sc = load_config(config)?.to_scenario()?;
            criteria_only(&sc, &cli.out_dir, cli.quiet)
        }
        Command::Sweep { config, param } => sweep(&load_config(config)?, param, &cli.out_dir, cli.quiet),
        Command::Selftest => Ok(selftest(cli.seed, cli.quiet)),
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_spec() {
        let (k, v) = parse_sweep("scenario.b=0.5:2:4").unwrap();
        assert_eq!(k, "scenario.b");
        assert_eq!(v, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(parse_sweep("sim.n=64:64:1").unwrap().1, vec![64.0]);
        for bad in ["scenario.b", "scenario.b=1:2", "scenario.b=1:x:3", "scenario.b=1:2:0", "=1:2:3"] {
            assert!(matches!(parse_sweep(bad), Err(Error::Config { .. })), "{bad}");
        }
    }
}
