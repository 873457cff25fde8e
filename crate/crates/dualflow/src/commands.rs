//! The `run`, `table` and `certify` commands.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use dualflow_core::{certify, evolve, ExtendedValue, FlowError, LagrangianSpec, Trajectory};

use crate::config::{base_dir, load, LagrangianConfig, RunConfig};
use crate::fields::{format_value, read_flux, read_scalar, write_flux, write_scalar};
use crate::report::{step_records, to_json, CertificateRecord, Summary};

/// Result of a command that completed without configuration or IO errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Certified,
    CertificateFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Certified => 0,
            Outcome::CertificateFailure => 2,
        }
    }
}

/// Validates the thread-count variable. The solver runs on one thread; the
/// value is accepted for forward compatibility.
pub fn check_threads(value: Option<&str>) -> Result<Option<usize>> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => bail!("DUALFLOW_THREADS must be a positive integer, got '{v}'"),
        },
    }
}

/// Output files of `run`, relative to the output directory.
pub const SUMMARY_FILE: &str = "summary.json";
pub const CERTIFICATES_FILE: &str = "certificates.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

pub fn state_file(step: usize) -> String {
    format!("state_{step:06}.csv")
}

pub fn flux_file(step: usize) -> String {
    format!("flux_{step:06}.csv")
}

/// Runs the flow described by the configuration at `config_path` and writes
/// its outputs. Returns the summary text alongside the outcome.
pub fn run(config_path: &Path) -> Result<(Outcome, String)> {
    let cfg: RunConfig = load(config_path)?;
    let base = base_dir(config_path);
    let setup = cfg.setup(&base).with_context(|| format!("{}", config_path.display()))?;
    let (traj, converged) = match evolve(&setup.flow, &setup.solver) {
        Ok(t) => (t, true),
        Err(FlowError::NotConverged { step, gap, iterations, partial }) => {
            eprintln!("step {step} did not converge after {iterations} iterations (gap {gap:e}); writing the partial trajectory");
            (*partial, false)
        }
        Err(FlowError::Invalid(e)) => return Err(anyhow!("{}: {e}", config_path.display())),
    };
    let dir = &setup.output_directory;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write_trajectory(dir, &traj, setup.state_every)?;
    let summary = to_json(&Summary::new(&traj, converged))?;
    fs::write(dir.join(SUMMARY_FILE), &summary).with_context(|| format!("writing {}", dir.display()))?;
    let outcome = if converged && traj.all_certified() {
        Outcome::Certified
    } else {
        Outcome::CertificateFailure
    };
    Ok((outcome, summary))
}

fn write_trajectory(dir: &Path, traj: &Trajectory, every: usize) -> Result<()> {
    let last = traj.states.len() - 1;
    for (k, u) in traj.states.iter().enumerate() {
        if k % every == 0 || k == last {
            write_scalar(&dir.join(state_file(k)), u)?;
            if k > 0 {
                if let Some(z) = traj.fluxes.get(k - 1) {
                    write_flux(&dir.join(flux_file(k)), z)?;
                }
            }
        }
    }
    let mut csv = String::from("step,time,energy,mean\n");
    for (k, u) in traj.states.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{k},{},{},{}",
            format_value(traj.times[k]),
            format_value(traj.energies[k]),
            format_value(u.mean())
        );
    }
    fs::write(dir.join(TRAJECTORY_FILE), csv)?;
    fs::write(dir.join(CERTIFICATES_FILE), to_json(&step_records(traj))?)?;
    Ok(())
}

/// Reads `ξ` samples: one comma-separated row per sample, one or two
/// columns. A first row that is not numeric is taken as a header.
fn read_samples(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut seen_row = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = match parsed {
            Ok(r) => r,
            Err(_) if !seen_row => {
                seen_row = true;
                continue;
            }
            Err(e) => bail!("{}:{}: {e}", path.display(), i + 1),
        };
        seen_row = true;
        if row.iter().any(|v| !v.is_finite()) {
            bail!("{}:{}: samples must be finite", path.display(), i + 1);
        }
        if row.is_empty() || row.len() > 2 {
            bail!("{}:{}: expected 1 or 2 columns, found {}", path.display(), i + 1, row.len());
        }
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                bail!("{}:{}: expected {} columns, found {}", path.display(), i + 1, first.len(), row.len());
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn extended(v: ExtendedValue) -> String {
    match v {
        ExtendedValue::Finite(x) => format_value(x),
        ExtendedValue::PosInfinity => "inf".to_string(),
    }
}

/// One row per sample: `ξ`, `f(ξ)`, `f⁰(ξ)`, `f*(ξ)` and the Fenchel–Young
/// residual `f(η) + f*(ζ) − ζ·η` at `η = prox_f(ξ)`, `ζ = ξ − η`.
pub fn table_rows(lag: &LagrangianSpec, samples: &[Vec<f64>]) -> Result<String> {
    let dim = samples.first().map_or(1, Vec::len);
    let mut out = String::new();
    for k in 0..dim {
        let _ = write!(out, "xi_{k},");
    }
    out.push_str("f,f0,fstar,fy_residual\n");
    for xi in samples {
        let f = lag.eval(0, xi)?;
        let f0 = lag.asymptotic(0, xi)?;
        let fstar = lag.conjugate(0, xi)?;
        let eta = lag.prox_primal(0, xi, 1.0)?;
        let zeta: Vec<f64> = xi.iter().zip(&eta).map(|(a, b)| a - b).collect();
        let fy = lag.fenchel_young_residual(0, &eta, &zeta)?;
        for v in xi {
            let _ = write!(out, "{},", format_value(*v));
        }
        let _ = writeln!(out, "{},{},{},{}", format_value(f), format_value(f0), extended(fstar), extended(fy));
    }
    Ok(out)
}

pub fn table(lagrangian_path: &Path, samples_path: &Path) -> Result<String> {
    let cfg: LagrangianConfig = load(lagrangian_path)?;
    let samples = read_samples(samples_path)?;
    let dim = samples.first().map_or(1, Vec::len);
    let lag = cfg
        .build("lagrangian", dim, None, &base_dir(lagrangian_path))
        .with_context(|| format!("{}", lagrangian_path.display()))?;
    table_rows(&lag, &samples)
}

/// Optional overrides for `certify`: the data `g` and the step `τ`. By
/// default the pair is checked against the first step of the configured run.
#[derive(Debug, Clone, Default)]
pub struct CertifyOverrides<'a> {
    pub data: Option<&'a Path>,
    pub tau: Option<f64>,
}

pub fn certify_files(state: &Path, flux: &Path, config_path: &Path, over: &CertifyOverrides) -> Result<(Outcome, String)> {
    let cfg: RunConfig = load(config_path)?;
    let base = base_dir(config_path);
    let setup = cfg.setup(&base).with_context(|| format!("{}", config_path.display()))?;
    let grid = *setup.flow.u0().grid();
    let g = match over.data {
        Some(p) => read_scalar(p, grid)?,
        None => setup.flow.u0().clone(),
    };
    let tau = match over.tau {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => bail!("--tau must be positive and finite, got {t}"),
        None => setup.flow.steps()[0],
    };
    let problem = setup.flow.step_problem(g, tau)?;
    let u = read_scalar(state, grid)?;
    let z = read_flux(flux, grid)?;
    let report = certify(&problem, &u, &z, setup.certificate_tolerance)?;
    let outcome = if report.verdict.passed() {
        Outcome::Certified
    } else {
        Outcome::CertificateFailure
    };
    Ok((outcome, to_json(&CertificateRecord::from(&report))?))
}
