//! Implicit-Euler time stepping `u^{k+1} = (I + τ_k A)⁻¹ u^k` with a
//! certificate per step.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

use crate::certify::{certify, CertificateReport, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::grid::{weighted_distance, BoundaryCondition, FluxField, ScalarField};
use crate::lagrangian::LagrangianSpec;
use crate::resolvent::{functional_raw, solve_warm, Layout, ResolventProblem, SolverOptions};

/// Steps used when no step size is given: `τ = T / DEFAULT_STEPS`.
pub const DEFAULT_STEPS: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum StepPolicy {
    /// Constant `τ`, as many steps as needed to reach the horizon.
    Fixed(f64),
    /// Explicit `τ_k`, consumed in order until the horizon is reached.
    Schedule(Vec<f64>),
}

impl StepPolicy {
    pub fn default_for(horizon: f64) -> Self {
        StepPolicy::Fixed(horizon / DEFAULT_STEPS as f64)
    }

    /// Step sizes covering `[0, horizon]`.
    pub fn steps(&self, horizon: f64) -> Result<Vec<f64>> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidSchedule("horizon must be positive"));
        }
        let reach = horizon * (1.0 - 1e-12);
        match self {
            StepPolicy::Fixed(tau) => {
                if !(tau.is_finite() && *tau > 0.0) {
                    return Err(Error::InvalidTimeStep(*tau));
                }
                let mut n = libm::ceil(horizon / tau) as usize;
                while n > 1 && (n - 1) as f64 * tau >= reach {
                    n -= 1;
                }
                Ok(alloc::vec![*tau; n.max(1)])
            }
            StepPolicy::Schedule(taus) => {
                let mut out = Vec::new();
                let mut t = 0.0;
                for &tau in taus {
                    if !(tau.is_finite() && tau > 0.0) {
                        return Err(Error::InvalidTimeStep(tau));
                    }
                    if t >= reach {
                        break;
                    }
                    out.push(tau);
                    t += tau;
                }
                if t < reach {
                    return Err(Error::InvalidSchedule("schedule ends before the horizon"));
                }
                Ok(out)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowProblem {
    lagrangian: LagrangianSpec,
    bc: BoundaryCondition,
    u0: ScalarField,
    horizon: f64,
    steps: Vec<f64>,
    store_flux: bool,
    certificate_tolerance: f64,
}

impl FlowProblem {
    pub fn new(lagrangian: LagrangianSpec, bc: BoundaryCondition, u0: ScalarField, horizon: f64, policy: StepPolicy) -> Result<Self> {
        let steps = policy.steps(horizon)?;
        // Validates the grid, integrand and boundary datum once.
        ResolventProblem::new(lagrangian.clone(), bc.clone(), u0.clone(), steps[0])?;
        Ok(FlowProblem {
            lagrangian,
            bc,
            u0,
            horizon,
            steps,
            store_flux: false,
            certificate_tolerance: DEFAULT_TOLERANCE,
        })
    }

    pub fn with_flux_storage(mut self, store: bool) -> Self {
        self.store_flux = store;
        self
    }

    pub fn with_certificate_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(Error::InvalidOptions("certificate tolerance must be positive"));
        }
        self.certificate_tolerance = tol;
        Ok(self)
    }

    pub fn lagrangian(&self) -> &LagrangianSpec {
        &self.lagrangian
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn u0(&self) -> &ScalarField {
        &self.u0
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> &[f64] {
        &self.steps
    }

    pub fn certificate_tolerance(&self) -> f64 {
        self.certificate_tolerance
    }

    /// The resolvent problem for one step from `g`.
    pub fn step_problem(&self, g: ScalarField, tau: f64) -> Result<ResolventProblem> {
        ResolventProblem::new(self.lagrangian.clone(), self.bc.clone(), g, tau)
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ScalarField>,
    /// One flux per step when storage is enabled, otherwise empty.
    pub fluxes: Vec<FluxField>,
    /// `ℱ(u^k)` per state.
    pub energies: Vec<f64>,
    /// `‖u^{k+1} − u^k‖ / τ_k` per step.
    pub step_norms: Vec<f64>,
    pub taus: Vec<f64>,
    pub certificates: Vec<CertificateReport>,
    pub iterations: Vec<usize>,
    pub energy_monotone: bool,
    pub step_norm_monotone: bool,
    /// Solver tolerance the trajectory was computed with.
    pub tolerance: f64,
}

impl Trajectory {
    fn start(u0: ScalarField, energy: f64, tolerance: f64) -> Self {
        Trajectory {
            times: alloc::vec![0.0],
            states: alloc::vec![u0],
            fluxes: Vec::new(),
            energies: alloc::vec![energy],
            step_norms: Vec::new(),
            taus: Vec::new(),
            certificates: Vec::new(),
            iterations: Vec::new(),
            energy_monotone: true,
            step_norm_monotone: true,
            tolerance,
        }
    }

    pub fn final_state(&self) -> &ScalarField {
        self.states.last().expect("trajectory starts with u0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory starts at 0")
    }

    pub fn max_gap(&self) -> crate::lagrangian::ExtendedValue {
        self.certificates
            .iter()
            .fold(crate::lagrangian::ExtendedValue::Finite(0.0), |a, c| a.max(c.gap))
    }

    pub fn all_certified(&self) -> bool {
        self.certificates.iter().all(|c| c.verdict.passed())
    }
}

#[derive(Debug, Clone)]
pub enum FlowError {
    Invalid(Error),
    /// A step did not reach the tolerance; `partial` holds every completed step.
    NotConverged {
        step: usize,
        gap: f64,
        iterations: usize,
        partial: Box<Trajectory>,
    },
}

impl From<Error> for FlowError {
    fn from(e: Error) -> Self {
        FlowError::Invalid(e)
    }
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::Invalid(e) => write!(f, "{e}"),
            FlowError::NotConverged { step, gap, iterations, .. } => {
                write!(f, "step {step} did not converge after {iterations} iterations (gap {gap:e})")
            }
        }
    }
}

impl core::error::Error for FlowError {}

/// Runs the flow to the horizon.
pub fn evolve(problem: &FlowProblem, opts: &SolverOptions) -> core::result::Result<Trajectory, FlowError> {
    let first = problem.step_problem(problem.u0.clone(), problem.steps[0])?;
    opts.step_sizes(first.grid())?;
    let layout = Layout::new(&first);
    let grid = *problem.u0.grid();
    let m = grid.cell_measure();
    let tol = opts.tolerance;
    let e0 = functional_raw(&first, &layout, problem.u0.values());
    let mut traj = Trajectory::start(problem.u0.clone(), e0, tol);
    let mut warm: Option<FluxField> = None;
    let mut t = 0.0;
    for (k, &tau) in problem.steps.iter().enumerate() {
        let g = traj.final_state().clone();
        let step = problem.step_problem(g.clone(), tau)?;
        let sol = solve_warm(&step, opts, warm.as_ref())?;
        if !sol.converged {
            return Err(FlowError::NotConverged {
                step: k,
                gap: sol.gap,
                iterations: sol.iterations,
                partial: Box::new(traj),
            });
        }
        let report = certify(&step, &sol.u, &sol.z, problem.certificate_tolerance)?;
        let energy = functional_raw(&step, &layout, sol.u.values());
        let step_norm = weighted_distance(sol.u.values(), g.values(), m) / tau;

        let prev_energy = *traj.energies.last().expect("nonempty");
        if energy > prev_energy + 10.0 * tol * (1.0 + libm::fabs(prev_energy)) {
            traj.energy_monotone = false;
        }
        if let (Some(&prev), Some(&prev_tau)) = (traj.step_norms.last(), traj.taus.last()) {
            if prev_tau == tau && step_norm > prev + 10.0 * tol * (1.0 + prev) {
                traj.step_norm_monotone = false;
            }
        }

        t += tau;
        traj.times.push(t);
        traj.energies.push(energy);
        traj.step_norms.push(step_norm);
        traj.taus.push(tau);
        traj.certificates.push(report);
        traj.iterations.push(sol.iterations);
        if problem.store_flux {
            traj.fluxes.push(sol.z.clone());
        }
        traj.states.push(sol.u);
        warm = Some(sol.z);
    }
    Ok(traj)
}

/// First state reached with `‖u^{k+1} − u^k‖/τ ≤ tol·(1 + ‖u^k‖)`, and its time.
pub fn steady_state(trajectory: &Trajectory) -> Option<(&ScalarField, f64)> {
    let tol = trajectory.tolerance;
    trajectory
        .step_norms
        .iter()
        .enumerate()
        .find(|(k, &s)| s <= tol * (1.0 + trajectory.states[*k].norm()))
        .map(|(k, _)| (&trajectory.states[k + 1], trajectory.times[k + 1]))
}
