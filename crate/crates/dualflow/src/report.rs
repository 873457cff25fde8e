//! JSON records written by the command-line tool.
//!
//! Numbers are emitted with 17 significant digits; `+∞` and NaN become the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use dualflow_core::{CertificateReport, ExtendedValue, Trajectory};
use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::fields::format_value;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_nan() {
            s.serialize_str("nan")
        } else if v.is_infinite() {
            s.serialize_str(if v > 0.0 { "inf" } else { "-inf" })
        } else {
            let raw = RawValue::from_string(format_value(v)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        }
    }
}

impl From<ExtendedValue> for Fixed {
    fn from(v: ExtendedValue) -> Self {
        match v {
            ExtendedValue::Finite(x) => Fixed(x),
            ExtendedValue::PosInfinity => Fixed(f64::INFINITY),
        }
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictRecord {
    pub fenchel_young: &'static str,
    pub divergence: &'static str,
    pub boundary: &'static str,
    pub gap: &'static str,
    pub overall: &'static str,
    pub tolerance: Fixed,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateRecord {
    pub gap: Fixed,
    pub fy_total: Fixed,
    pub fy_max_face: Fixed,
    pub div_residual: Fixed,
    pub bdry_residual: Fixed,
    pub bdry_feas_max: Fixed,
    pub verdict: VerdictRecord,
}

impl From<&CertificateReport> for CertificateRecord {
    fn from(r: &CertificateReport) -> Self {
        let v = &r.verdict;
        CertificateRecord {
            gap: r.gap.into(),
            fy_total: r.fenchel_young_total.into(),
            fy_max_face: r.fenchel_young_max_face.into(),
            div_residual: Fixed(r.divergence_residual),
            bdry_residual: Fixed(r.boundary_residual),
            bdry_feas_max: Fixed(r.boundary_feasibility_max),
            verdict: VerdictRecord {
                fenchel_young: pass(v.fenchel_young),
                divergence: pass(v.divergence),
                boundary: pass(v.boundary),
                gap: pass(v.gap),
                overall: pass(v.passed()),
                tolerance: Fixed(v.tolerance),
            },
        }
    }
}

/// One implicit step of a run.
#[derive(Debug, Clone, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: Fixed,
    pub tau: Fixed,
    pub iterations: usize,
    pub energy: Fixed,
    pub step_norm: Fixed,
    pub certificate: CertificateRecord,
}

pub fn step_records(traj: &Trajectory) -> Vec<StepRecord> {
    (0..traj.taus.len())
        .map(|k| StepRecord {
            step: k + 1,
            time: Fixed(traj.times[k + 1]),
            tau: Fixed(traj.taus[k]),
            iterations: traj.iterations[k],
            energy: Fixed(traj.energies[k + 1]),
            step_norm: Fixed(traj.step_norms[k]),
            certificate: (&traj.certificates[k]).into(),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub final_time: Fixed,
    pub final_energy: Fixed,
    pub max_gap: Fixed,
    pub conserved_mean_drift: Fixed,
    pub steady_state_time: Option<Fixed>,
    pub steps: usize,
    pub converged: bool,
    pub all_certified: bool,
    pub energy_monotone: bool,
    pub step_norm_monotone: bool,
}

impl Summary {
    pub fn new(traj: &Trajectory, converged: bool) -> Self {
        let mean0 = traj.states[0].mean();
        let drift = traj.states.iter().map(|u| (u.mean() - mean0).abs()).fold(0.0, f64::max);
        Summary {
            final_time: Fixed(traj.final_time()),
            final_energy: Fixed(*traj.energies.last().expect("initial energy")),
            max_gap: traj.max_gap().into(),
            conserved_mean_drift: Fixed(drift),
            steady_state_time: dualflow_core::steady_state(traj).map(|(_, t)| Fixed(t)),
            steps: traj.taus.len(),
            converged,
            all_certified: traj.all_certified(),
            energy_monotone: traj.energy_monotone,
            step_norm_monotone: traj.step_norm_monotone,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
