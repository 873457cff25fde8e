//! Residuals of the weak-solution conditions for a candidate pair `(u, z)`.
//!
//! For any pair the duality gap splits exactly as
//!
//! ```text
//! P(u) − D(z) = Σ_c [f(∇u_c) + f*(z_c) − z_c·∇u_c]·|c|
//!             + Σ_{∂ faces} [f⁰(ν)|h − u| − [z, ν](h − u)]·|face|
//!             + (1/2τ)‖u − g − τ div z‖²
//! ```
//!
//! and every term is nonnegative on the dual domain.

use crate::error::Result;
use crate::grid::{BoundaryCondition, FluxField, ScalarField};
use crate::lagrangian::ExtendedValue;
use crate::resolvent::{dual_energy_of_flux, gradient_arrays, interior_arrays, primal_energy_raw, DualEnergy, Layout, ResolventProblem};
use crate::MAX_DIM;

/// Default verdict threshold, relative to `1 + |P(u)|`.
pub const DEFAULT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub fenchel_young: bool,
    pub divergence: bool,
    pub boundary: bool,
    pub gap: bool,
    pub tolerance: f64,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.fenchel_young && self.divergence && self.boundary && self.gap
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateReport {
    /// `P(u) − D(z)`; `+∞` when `z` is outside the dual domain.
    pub gap: ExtendedValue,
    pub fenchel_young_total: ExtendedValue,
    /// Largest pointwise Fenchel–Young residual over cells.
    pub fenchel_young_max_face: ExtendedValue,
    /// `‖u − g − τ div z‖ / (1 + ‖g‖)`.
    pub divergence_residual: f64,
    /// Dirichlet: the boundary gap term. Neumann: `max |[z, ν]|`.
    pub boundary_residual: f64,
    /// Dirichlet: `max (|[z, ν]| − f⁰(x, ν))`. Neumann: `max |[z, ν]|`.
    pub boundary_feasibility_max: f64,
    pub primal_energy: f64,
    /// `(1/2τ)‖u − g − τ div z‖²`.
    pub quadratic_mismatch: f64,
    pub verdict: Verdict,
}

/// Certificate for a Neumann problem.
pub fn certify_neumann(problem: &ResolventProblem, u: &ScalarField, z: &FluxField, tol: f64) -> Result<CertificateReport> {
    certify(problem, u, z, tol)
}

/// Certificate for a Dirichlet problem.
pub fn certify_dirichlet(problem: &ResolventProblem, u: &ScalarField, z: &FluxField, tol: f64) -> Result<CertificateReport> {
    certify(problem, u, z, tol)
}

/// Certificate for either boundary condition.
pub fn certify(problem: &ResolventProblem, u: &ScalarField, z: &FluxField, tol: f64) -> Result<CertificateReport> {
    problem.check_scalar(u)?;
    problem.check_flux(z)?;
    let grid = *problem.grid();
    let layout = Layout::new(problem);
    let lag = problem.lagrangian();
    let m = grid.cell_measure();
    let tau = problem.tau();
    let uv = u.values();
    let gv = problem.g().values();

    let grad = gradient_arrays(&grid, uv);
    let flux = interior_arrays(z);
    let mut xi = [0.0; MAX_DIM];
    let mut zeta = [0.0; MAX_DIM];
    let mut fy_total = ExtendedValue::Finite(0.0);
    let mut fy_max = ExtendedValue::Finite(0.0);
    for c in 0..grid.cell_count() {
        layout.gather(c, &grad, &mut xi);
        layout.gather(c, &flux, &mut zeta);
        let w = lag.weight_unchecked(c);
        let r = lag.weighted_fenchel_young(w, &xi[..layout.dim], &zeta[..layout.dim])?;
        fy_total = fy_total + r.map(|v| v * m);
        fy_max = fy_max.max(r);
    }

    let d = crate::resolvent::divergence_raw(problem, &layout, z);
    let mismatch_sq: f64 = uv
        .iter()
        .zip(gv)
        .zip(&d)
        .map(|((u, g), d)| {
            let r = u - g - tau * d;
            r * r
        })
        .sum::<f64>()
        * m;
    let g_norm = problem.g().norm();
    let divergence_residual = libm::sqrt(mismatch_sq) / (1.0 + g_norm);
    let quadratic_mismatch = mismatch_sq / (2.0 * tau);

    let (boundary_residual, boundary_feasibility_max, recession_max) = match problem.bc() {
        BoundaryCondition::Neumann => {
            let t = layout
                .faces
                .iter()
                .map(|f| libm::fabs(z.normal_trace(f)))
                .fold(0.0, f64::max);
            (t, t, 0.0)
        }
        BoundaryCondition::Dirichlet(h) => {
            let mut residual = 0.0;
            let mut feas = f64::NEG_INFINITY;
            let mut rmax: f64 = 0.0;
            for (f, &r) in layout.faces.iter().zip(&layout.recession) {
                let t = z.normal_trace(f);
                let jump = h[f.index] - uv[f.cell];
                residual += (r * libm::fabs(jump) - t * jump) * grid.face_measure(f.axis);
                feas = feas.max(libm::fabs(t) - r);
                rmax = rmax.max(r);
            }
            (residual, feas, rmax)
        }
    };

    let primal = primal_energy_raw(problem, &layout, uv);
    let gap = match dual_energy_of_flux(problem, &layout, z)? {
        DualEnergy::Feasible(dual) => ExtendedValue::Finite(primal - dual),
        DualEnergy::Infeasible(_) => ExtendedValue::PosInfinity,
    };

    let scale = tol * (1.0 + libm::fabs(primal));
    let boundary_ok = match problem.bc() {
        BoundaryCondition::Neumann => boundary_feasibility_max <= tol,
        BoundaryCondition::Dirichlet(_) => boundary_residual <= scale && boundary_feasibility_max <= tol * (1.0 + recession_max),
    };
    let verdict = Verdict {
        fenchel_young: fy_total.le(scale),
        divergence: divergence_residual <= tol,
        boundary: boundary_ok,
        gap: gap.le(scale),
        tolerance: tol,
    };
    Ok(CertificateReport {
        gap,
        fenchel_young_total: fy_total,
        fenchel_young_max_face: fy_max,
        divergence_residual,
        boundary_residual,
        boundary_feasibility_max,
        primal_energy: primal,
        quadratic_mismatch,
        verdict,
    })
}
