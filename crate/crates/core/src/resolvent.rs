//! One implicit-Euler step: the resolvent `u = (I + τA)⁻¹ g`.
//!
//! The step minimizes the primal energy
//!
//! ```text
//! P(u) = Σ_cells f(x_c, ∇u_c)·|c| + Σ_{∂ faces} f⁰(x, ν)|h − u_c|·|face| + (1/2τ)‖u − g‖²
//! ```
//!
//! (the boundary sum only for Dirichlet) and certifies the answer with the
//! dual objective over fluxes `z`
//!
//! ```text
//! D(z) = −Σ_cells f*(x_c, z_c)·|c| − ⟨g, div z⟩ − (τ/2)‖div z‖² + Σ_{∂ faces} h·[z, ν]·|face|
//! ```
//!
//! subject to `[z, ν] = 0` (Neumann) or `|[z, ν]| ≤ f⁰(x, ν)` (Dirichlet).
//! `D(z) ≤ P(u)` for every feasible pair and the two meet at the optimum,
//! where `u = g + τ div z` and `z ∈ ∂_ξ f(x, ∇u)`. In terms of the dual
//! variable `p = −z` this is the usual Fenchel–Rockafellar dual
//! `−E*(−p) − G*(A*p)`.
//!
//! `∇u_c` is the vector of forward differences on the faces `c + ½e_k`; the
//! component is absent (taken as zero) when `c` touches the high side along
//! `k`. The same grouping is used for `z_c`, so each interior face belongs
//! to exactly one cell.
//!
//! The solver is a primal–dual hybrid gradient iteration with exact
//! pointwise proximal maps: `prox_{σ f*}` per cell on the dual side and the
//! quadratic-plus-kinks shrinkage per cell on the primal side. Step sizes
//! follow the accelerated schedule for the `1/τ`-strongly convex quadratic
//! term and restart whenever the certificate improves by a fixed factor, or
//! when no restart has happened for a while.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{divergence_axis_add, gradient_axis, BoundaryCondition, BoundaryFace, FluxField, GridSpec, ScalarField};
use crate::lagrangian::LagrangianSpec;
use crate::scalar::{shrink_kinks, Kink};
use crate::MAX_DIM;

/// Slack on dual feasibility checks, relative to `1 + f⁰(x, ν)`.
pub const FEASIBILITY_TOL: f64 = 1e-9;

const NO_FACE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct ResolventProblem {
    grid: GridSpec,
    lagrangian: LagrangianSpec,
    bc: BoundaryCondition,
    g: ScalarField,
    tau: f64,
}

impl ResolventProblem {
    pub fn new(lagrangian: LagrangianSpec, bc: BoundaryCondition, g: ScalarField, tau: f64) -> Result<Self> {
        let grid = *g.grid();
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidTimeStep(tau));
        }
        bc.validate(&grid)?;
        lagrangian.check_grid(grid.dim(), grid.cell_count())?;
        Ok(ResolventProblem {
            grid,
            lagrangian,
            bc,
            g,
            tau,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lagrangian(&self) -> &LagrangianSpec {
        &self.lagrangian
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Same integrand and boundary condition, new data.
    pub fn with_data(&self, g: ScalarField, tau: f64) -> Result<Self> {
        if *g.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidTimeStep(tau));
        }
        Ok(ResolventProblem {
            grid: self.grid,
            lagrangian: self.lagrangian.clone(),
            bc: self.bc.clone(),
            g,
            tau,
        })
    }

    pub(crate) fn check_scalar(&self, u: &ScalarField) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub(crate) fn check_flux(&self, p: &FluxField) -> Result<()> {
        if *p.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative duality gap `gap ≤ tolerance·(1 + |P|)`; also bounds the
    /// divergence residual `‖u − g − τ div z‖ ≤ tolerance·(1 + ‖g‖)`.
    pub tolerance: f64,
    /// Primal step `ρ`; `0.99/‖∇‖` when `None`.
    pub primal_step: Option<f64>,
    /// Dual step `σ`; `0.99/‖∇‖` when `None`.
    pub dual_step: Option<f64>,
    /// Scale the dual step on axis `k` by `h_k²‖∇‖²/(4d)`, so that every
    /// axis contributes equally to `σ·ρ·‖∇‖² ≤ 1`. Matters only on grids
    /// with unequal spacings.
    pub precondition: bool,
    /// Extrapolation weight for the non-accelerated iteration.
    pub over_relaxation: f64,
    /// Use the strong convexity `1/τ` of the quadratic term to adapt the
    /// step sizes every iteration.
    pub accelerate: bool,
    /// Iterations between duality-gap evaluations.
    pub check_every: usize,
    /// Step sizes are reset to their initial values, and the extrapolation
    /// dropped, whenever the certificate score falls below this fraction of
    /// its value at the previous reset. `0` disables resets.
    pub restart_factor: f64,
    /// Forced reset after this many iterations without one. `0` disables.
    pub restart_period: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 20_000,
            tolerance: 1e-7,
            primal_step: None,
            dual_step: None,
            precondition: true,
            over_relaxation: 1.0,
            accelerate: true,
            check_every: 10,
            restart_factor: 0.5,
            restart_period: 1000,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    /// Resolved `(σ, ρ)` for `grid`, validated against `σ·ρ·‖∇‖² ≤ 1`.
    pub fn step_sizes(&self, grid: &GridSpec) -> Result<(f64, f64)> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidOptions("tolerance must be positive"));
        }
        if self.check_every == 0 {
            return Err(Error::InvalidOptions("check_every must be at least 1"));
        }
        if !(self.over_relaxation.is_finite() && self.over_relaxation >= 0.0 && self.over_relaxation <= 1.0) {
            return Err(Error::InvalidOptions("over_relaxation must lie in [0, 1]"));
        }
        if !(self.restart_factor.is_finite() && (0.0..1.0).contains(&self.restart_factor)) {
            return Err(Error::InvalidOptions("restart_factor must lie in [0, 1)"));
        }
        let l2 = grid.gradient_norm_sq_bound();
        let auto = 0.99 / libm::sqrt(l2);
        let sigma = self.dual_step.unwrap_or(auto);
        let rho = self.primal_step.unwrap_or(auto);
        if !(sigma.is_finite() && sigma > 0.0 && rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidOptions("step sizes must be positive"));
        }
        let product = sigma * rho * l2;
        if product > 1.0 + 1e-12 {
            return Err(Error::InvalidStepSizes { product });
        }
        Ok((sigma, rho))
    }

    /// Per-axis factors applied to the dual step.
    pub fn axis_scales(&self, grid: &GridSpec) -> [f64; MAX_DIM] {
        let mut scales = [1.0; MAX_DIM];
        let h = grid.spacing();
        if self.precondition && h.iter().any(|v| *v != h[0]) {
            let l2 = grid.gradient_norm_sq_bound();
            for (s, hk) in scales.iter_mut().zip(h) {
                *s = hk * hk * l2 / (4.0 * h.len() as f64);
            }
        }
        scales
    }
}

#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub u: ScalarField,
    /// Certifying flux; boundary faces carry `[z, ν]` for Dirichlet and are
    /// zero for Neumann.
    pub z: FluxField,
    pub primal_energy: f64,
    pub dual_energy: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Gap checks at which the primal energy of the iterate went up.
    pub energy_increases: usize,
}

/// Why a flux is outside the dual domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Infeasibility {
    /// `f*(x_c, z_c) = +∞`.
    Conjugate { cell: usize },
    /// Boundary trace violates its constraint by `excess`.
    Boundary { face: usize, excess: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualEnergy {
    Feasible(f64),
    Infeasible(Infeasibility),
}

impl DualEnergy {
    pub fn value(self) -> Option<f64> {
        match self {
            DualEnergy::Feasible(v) => Some(v),
            DualEnergy::Infeasible(_) => None,
        }
    }
}

/// Precomputed per-problem geometry.
pub(crate) struct Layout {
    pub(crate) dim: usize,
    /// Forward interior face per cell and axis, `NO_FACE` when absent.
    pub(crate) forward: Vec<[usize; MAX_DIM]>,
    pub(crate) faces: Vec<BoundaryFace>,
    /// `f⁰(x_c, ν)` per boundary face.
    pub(crate) recession: Vec<f64>,
    /// Boundary cells with their faces (indices into `faces`), Dirichlet only.
    pub(crate) boundary_cells: Vec<(usize, Vec<usize>)>,
}

impl Layout {
    pub(crate) fn new(problem: &ResolventProblem) -> Self {
        let grid = &problem.grid;
        let dim = grid.dim();
        let forward = (0..grid.cell_count())
            .map(|c| {
                let mut f = [NO_FACE; MAX_DIM];
                for (k, slot) in f.iter_mut().enumerate().take(dim) {
                    *slot = grid.forward_face(k, c).unwrap_or(NO_FACE);
                }
                f
            })
            .collect();
        let faces = grid.boundary_faces();
        let recession = faces
            .iter()
            .map(|f| {
                let mut nu = [0.0; MAX_DIM];
                nu[f.axis] = f.outward;
                let w = problem.lagrangian.weight_unchecked(f.cell);
                problem.lagrangian.weighted_asymptotic(w, &nu[..dim])
            })
            .collect();
        let mut boundary_cells: Vec<(usize, Vec<usize>)> = Vec::new();
        if matches!(problem.bc, BoundaryCondition::Dirichlet(_)) {
            let mut per_cell: Vec<Vec<usize>> = vec![Vec::new(); grid.cell_count()];
            for (i, f) in faces.iter().enumerate() {
                per_cell[f.cell].push(i);
            }
            boundary_cells = per_cell
                .into_iter()
                .enumerate()
                .filter(|(_, v)| !v.is_empty())
                .collect();
        }
        Layout {
            dim,
            forward,
            faces,
            recession,
            boundary_cells,
        }
    }

    /// `v_c` gathered from per-axis interior arrays; absent components are 0.
    #[inline]
    pub(crate) fn gather(&self, cell: usize, axes: &[Vec<f64>], out: &mut [f64; MAX_DIM]) {
        for k in 0..self.dim {
            let f = self.forward[cell][k];
            out[k] = if f == NO_FACE { 0.0 } else { axes[k][f] };
        }
    }
}

pub(crate) fn interior_arrays(p: &FluxField) -> Vec<Vec<f64>> {
    (0..p.grid().dim()).map(|k| p.interior(k).to_vec()).collect()
}

pub(crate) fn gradient_arrays(grid: &GridSpec, u: &[f64]) -> Vec<Vec<f64>> {
    (0..grid.dim())
        .map(|k| {
            let mut out = vec![0.0; grid.interior_face_count(k)];
            gradient_axis(grid, k, u, &mut out);
            out
        })
        .collect()
}

/// `Σ_c f(x_c, ∇u_c)` without the measure factor.
fn integrand_sum(problem: &ResolventProblem, layout: &Layout, grad: &[Vec<f64>]) -> f64 {
    let mut xi = [0.0; MAX_DIM];
    let mut sum = 0.0;
    for c in 0..problem.grid.cell_count() {
        layout.gather(c, grad, &mut xi);
        let w = problem.lagrangian.weight_unchecked(c);
        sum += problem.lagrangian.weighted_value(w, &xi[..layout.dim]);
    }
    sum
}

fn boundary_penalty(problem: &ResolventProblem, layout: &Layout, u: &[f64]) -> f64 {
    match &problem.bc {
        BoundaryCondition::Neumann => 0.0,
        BoundaryCondition::Dirichlet(h) => layout
            .faces
            .iter()
            .zip(&layout.recession)
            .map(|(f, r)| r * libm::fabs(h[f.index] - u[f.cell]) * problem.grid.face_measure(f.axis))
            .sum(),
    }
}

pub(crate) fn primal_energy_raw(problem: &ResolventProblem, layout: &Layout, u: &[f64]) -> f64 {
    let m = problem.grid.cell_measure();
    let grad = gradient_arrays(&problem.grid, u);
    let quad: f64 = u
        .iter()
        .zip(problem.g.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    m * integrand_sum(problem, layout, &grad) + boundary_penalty(problem, layout, u) + m * quad / (2.0 * problem.tau)
}

/// `ℱ(u) + (1/2τ)‖u − g‖²`.
pub fn primal_energy(problem: &ResolventProblem, u: &ScalarField) -> Result<f64> {
    problem.check_scalar(u)?;
    let layout = Layout::new(problem);
    Ok(primal_energy_raw(problem, &layout, u.values()))
}

/// `ℱ(u)`: the integrand plus, for Dirichlet, the boundary penalty.
pub fn functional(problem: &ResolventProblem, u: &ScalarField) -> Result<f64> {
    problem.check_scalar(u)?;
    let layout = Layout::new(problem);
    Ok(functional_raw(problem, &layout, u.values()))
}

pub(crate) fn functional_raw(problem: &ResolventProblem, layout: &Layout, u: &[f64]) -> f64 {
    let grad = gradient_arrays(&problem.grid, u);
    problem.grid.cell_measure() * integrand_sum(problem, layout, &grad) + boundary_penalty(problem, layout, u)
}

/// Divergence of `z`: interior faces plus, for Dirichlet, the stored traces.
pub(crate) fn divergence_raw(problem: &ResolventProblem, layout: &Layout, z: &FluxField) -> Vec<f64> {
    let grid = &problem.grid;
    let mut d = vec![0.0; grid.cell_count()];
    for k in 0..grid.dim() {
        divergence_axis_add(grid, k, z.interior(k), &mut d);
    }
    if matches!(problem.bc, BoundaryCondition::Dirichlet(_)) {
        for f in &layout.faces {
            d[f.cell] += z.normal_trace(f) / grid.spacing()[f.axis];
        }
    }
    d
}

/// Dual objective at `z` (note the sign: `z = −p`).
pub(crate) fn dual_energy_of_flux(problem: &ResolventProblem, layout: &Layout, z: &FluxField) -> Result<DualEnergy> {
    let grid = &problem.grid;
    let m = grid.cell_measure();
    match &problem.bc {
        BoundaryCondition::Neumann => {
            for (i, f) in layout.faces.iter().enumerate() {
                let t = libm::fabs(z.normal_trace(f));
                if t > FEASIBILITY_TOL {
                    return Ok(DualEnergy::Infeasible(Infeasibility::Boundary { face: i, excess: t }));
                }
            }
        }
        BoundaryCondition::Dirichlet(_) => {
            for (i, (f, r)) in layout.faces.iter().zip(&layout.recession).enumerate() {
                let excess = libm::fabs(z.normal_trace(f)) - r;
                if excess > FEASIBILITY_TOL * (1.0 + r) {
                    return Ok(DualEnergy::Infeasible(Infeasibility::Boundary { face: i, excess }));
                }
            }
        }
    }
    let axes = interior_arrays(z);
    let mut zeta = [0.0; MAX_DIM];
    let mut conj = 0.0;
    for c in 0..grid.cell_count() {
        layout.gather(c, &axes, &mut zeta);
        let w = problem.lagrangian.weight_unchecked(c);
        match problem.lagrangian.weighted_conjugate(w, &zeta[..layout.dim])?.finite() {
            Some(v) => conj += v,
            None => return Ok(DualEnergy::Infeasible(Infeasibility::Conjugate { cell: c })),
        }
    }
    let d = divergence_raw(problem, layout, z);
    let tau = problem.tau;
    let quad: f64 = problem
        .g
        .values()
        .iter()
        .zip(&d)
        .map(|(g, d)| g * d + 0.5 * tau * d * d)
        .sum();
    let boundary = match &problem.bc {
        BoundaryCondition::Neumann => 0.0,
        BoundaryCondition::Dirichlet(h) => layout
            .faces
            .iter()
            .map(|f| h[f.index] * z.normal_trace(f) * grid.face_measure(f.axis))
            .sum(),
    };
    Ok(DualEnergy::Feasible(-m * conj - m * quad + boundary))
}

/// Dual objective at `p = p̄*`, i.e. at the flux `z = −p`. Fluxes outside the
/// dual domain are reported as infeasible.
pub fn dual_energy(problem: &ResolventProblem, p: &FluxField) -> Result<DualEnergy> {
    problem.check_flux(p)?;
    let layout = Layout::new(problem);
    dual_energy_of_flux(problem, &layout, &p.scaled(-1.0))
}

/// Chooses Dirichlet traces maximizing the dual for the given interior flux
/// and returns the implied state `g + τ div z`.
fn complete_flux(problem: &ResolventProblem, layout: &Layout, z: &mut FluxField) -> Vec<f64> {
    let grid = &problem.grid;
    let tau = problem.tau;
    z.set_boundary_zero();
    let mut d0 = vec![0.0; grid.cell_count()];
    for k in 0..grid.dim() {
        divergence_axis_add(grid, k, z.interior(k), &mut d0);
    }
    let mut implied: Vec<f64> = problem
        .g
        .values()
        .iter()
        .zip(&d0)
        .map(|(g, d)| g + tau * d)
        .collect();
    let BoundaryCondition::Dirichlet(h) = &problem.bc else {
        return implied;
    };
    let mut kinks = [Kink { center: 0.0, weight: 0.0 }; 2 * MAX_DIM];
    for (cell, faces) in &layout.boundary_cells {
        let b = implied[*cell];
        for (slot, &fi) in kinks.iter_mut().zip(faces) {
            let f = &layout.faces[fi];
            *slot = Kink {
                center: h[f.index],
                weight: layout.recession[fi] / grid.spacing()[f.axis],
            };
        }
        let n = faces.len();
        let u = shrink_kinks(1.0 / tau, b, &kinks[..n]);
        // Traces pinned by the sign of h − u; ties share what remains.
        let mut pinned = 0.0;
        let mut tied_weight = 0.0;
        for (k, &fi) in kinks[..n].iter().zip(faces) {
            let f = &layout.faces[fi];
            if k.center == u {
                tied_weight += k.weight;
            } else {
                let t = if k.center > u { layout.recession[fi] } else { -layout.recession[fi] };
                z.set_normal_trace(f, t);
                pinned += t / grid.spacing()[f.axis];
            }
        }
        if tied_weight > 0.0 {
            let lambda = (((u - b) / tau - pinned) / tied_weight).clamp(-1.0, 1.0);
            for (k, &fi) in kinks[..n].iter().zip(faces) {
                if k.center == u {
                    z.set_normal_trace(&layout.faces[fi], lambda * layout.recession[fi]);
                }
            }
        }
        implied[*cell] = u;
    }
    implied
}

/// Solves the resolvent step from a zero initial flux.
pub fn solve(problem: &ResolventProblem, opts: &SolverOptions) -> Result<ResolventSolution> {
    solve_warm(problem, opts, None)
}

/// Solves the resolvent step starting from the interior values of `warm`.
pub fn solve_warm(problem: &ResolventProblem, opts: &SolverOptions, warm: Option<&FluxField>) -> Result<ResolventSolution> {
    let grid = problem.grid;
    let (sigma0, rho0) = opts.step_sizes(&grid)?;
    let (mut sigma, mut rho) = (sigma0, rho0);
    let scales = opts.axis_scales(&grid);
    let mut sigmas = [0.0; MAX_DIM];
    let mut restart_score = f64::INFINITY;
    let mut restarted_at = 0;
    let mut last_interval = 0;
    if let Some(w) = warm {
        problem.check_flux(w)?;
    }
    let layout = Layout::new(problem);
    let n = grid.cell_count();
    let dim = grid.dim();
    let tau = problem.tau;
    let gamma = 1.0 / tau;
    let g = problem.g.values();
    let m = grid.cell_measure();
    let g_norm = libm::sqrt(g.iter().map(|v| v * v).sum::<f64>() * m);
    let lag = &problem.lagrangian;
    let dirichlet = problem.bc.datum();

    let mut z = match warm {
        Some(w) => w.clone(),
        None => FluxField::zeros(grid),
    };
    let mut u = g.to_vec();
    let mut u_old = vec![0.0; n];
    let mut ubar = u.clone();
    let mut axes = interior_arrays(&z);
    let mut grad: Vec<Vec<f64>> = (0..dim).map(|k| vec![0.0; grid.interior_face_count(k)]).collect();
    let mut div = vec![0.0; n];
    let mut kinks = [Kink { center: 0.0, weight: 0.0 }; 2 * MAX_DIM];
    // Per-cell kink lists for the primal prox.
    let mut cell_kinks: Vec<(usize, usize, usize)> = Vec::new();
    let mut kink_store: Vec<Kink> = Vec::new();
    if let Some(h) = dirichlet {
        for (cell, faces) in &layout.boundary_cells {
            let start = kink_store.len();
            for &fi in faces {
                let f = &layout.faces[fi];
                kink_store.push(Kink {
                    center: h[f.index],
                    weight: layout.recession[fi] / grid.spacing()[f.axis],
                });
            }
            cell_kinks.push((*cell, start, kink_store.len()));
        }
    }

    let mut best: Option<Candidate> = None;
    let mut last_primal = f64::INFINITY;
    let mut energy_increases = 0;
    let mut iteration = 0;
    loop {
        let check = iteration % opts.check_every == 0 || iteration == opts.max_iterations;
        if check {
            for (k, a) in axes.iter().enumerate() {
                z.interior_mut(k).copy_from_slice(a);
            }
            let cand = evaluate(problem, &layout, &z, &u, g_norm, iteration)?;
            if cand.iterate_primal > last_primal + 1e-14 * (1.0 + libm::fabs(last_primal)) {
                energy_increases += 1;
            }
            last_primal = cand.iterate_primal;
            let done = cand.converged(opts.tolerance);
            let score = cand.score();
            let since = iteration - restarted_at;
            let stale = opts.restart_period > 0 && since >= opts.restart_period.max(2 * last_interval);
            if (opts.restart_factor > 0.0 && score <= opts.restart_factor * restart_score) || stale {
                restart_score = score;
                last_interval = since;
                restarted_at = iteration;
                sigma = sigma0;
                rho = rho0;
                ubar.copy_from_slice(&u);
            }
            let better = best.as_ref().is_none_or(|b| cand.score() < b.score());
            if better || done {
                best = Some(cand);
            }
            if done || iteration == opts.max_iterations {
                let b = best.take().expect("at least one candidate");
                return Ok(b.into_solution(problem, iteration, opts.tolerance, energy_increases));
            }
        }

        // Dual ascent: z ← prox_{σ f*}(z + σ ∇ū), σ per axis.
        for k in 0..dim {
            sigmas[k] = sigma * scales[k];
        }
        for (k, gk) in grad.iter_mut().enumerate() {
            gradient_axis(&grid, k, &ubar, gk);
        }
        let mut zeta = [0.0; MAX_DIM];
        let mut step = [0.0; MAX_DIM];
        for c in 0..n {
            layout.gather(c, &axes, &mut zeta);
            layout.gather(c, &grad, &mut step);
            for k in 0..dim {
                zeta[k] += sigmas[k] * step[k];
            }
            let w = lag.weight_unchecked(c);
            lag.prox_conjugate_diag_in_place(w, &mut zeta[..dim], &sigmas[..dim])?;
            scatter(&layout, c, &zeta, &mut axes);
        }

        // Primal descent: u ← prox_{ρG}(u + ρ div z).
        div.iter_mut().for_each(|v| *v = 0.0);
        for (k, a) in axes.iter().enumerate() {
            divergence_axis_add(&grid, k, a, &mut div);
        }
        u_old.copy_from_slice(&u);
        let alpha = 1.0 / rho + gamma;
        for c in 0..n {
            let v = u[c] + rho * div[c];
            u[c] = (v / rho + g[c] * gamma) / alpha;
        }
        for &(cell, start, end) in &cell_kinks {
            let v = u_old[cell] + rho * div[cell];
            let b = (v / rho + g[cell] * gamma) / alpha;
            let len = end - start;
            kinks[..len].copy_from_slice(&kink_store[start..end]);
            u[cell] = shrink_kinks(alpha, b, &kinks[..len]);
        }

        let theta = if opts.accelerate {
            let t = 1.0 / libm::sqrt(1.0 + 2.0 * gamma * rho);
            rho *= t;
            sigma /= t;
            t
        } else {
            opts.over_relaxation
        };
        for c in 0..n {
            ubar[c] = u[c] + theta * (u[c] - u_old[c]);
        }
        iteration += 1;
    }
}

#[inline]
fn scatter(layout: &Layout, cell: usize, v: &[f64; MAX_DIM], axes: &mut [Vec<f64>]) {
    for k in 0..layout.dim {
        let f = layout.forward[cell][k];
        if f != NO_FACE {
            axes[k][f] = v[k];
        }
    }
}

struct Candidate {
    u: Vec<f64>,
    z: FluxField,
    primal: f64,
    dual: f64,
    residual: f64,
    g_norm: f64,
    iterate_primal: f64,
}

impl Candidate {
    fn gap(&self) -> f64 {
        self.primal - self.dual
    }

    fn score(&self) -> f64 {
        (self.gap() / (1.0 + libm::fabs(self.primal))).max(self.residual / (1.0 + self.g_norm))
    }

    fn converged(&self, tol: f64) -> bool {
        self.gap() <= tol * (1.0 + libm::fabs(self.primal)) && self.residual <= tol * (1.0 + self.g_norm)
    }

    fn into_solution(self, problem: &ResolventProblem, iterations: usize, tol: f64, energy_increases: usize) -> ResolventSolution {
        let converged = self.converged(tol);
        let gap = self.gap();
        ResolventSolution {
            u: ScalarField::from_raw(problem.grid, self.u),
            z: self.z,
            primal_energy: self.primal,
            dual_energy: self.dual,
            gap,
            iterations,
            converged,
            energy_increases,
        }
    }
}

/// Certifies the current iterate: completes the flux, evaluates the dual,
/// and keeps whichever of `u` and the implied state `g + τ div z` has the
/// smaller gap.
fn evaluate(problem: &ResolventProblem, layout: &Layout, z_interior: &FluxField, u: &[f64], g_norm: f64, _iteration: usize) -> Result<Candidate> {
    let mut z = z_interior.clone();
    let implied = complete_flux(problem, layout, &mut z);
    let dual = match dual_energy_of_flux(problem, layout, &z)? {
        DualEnergy::Feasible(v) => v,
        DualEnergy::Infeasible(_) => f64::NEG_INFINITY,
    };
    let m = problem.grid.cell_measure();
    let iterate_primal = primal_energy_raw(problem, layout, u);
    let implied_primal = primal_energy_raw(problem, layout, &implied);
    let d = divergence_raw(problem, layout, &z);
    let residual_of = |v: &[f64]| -> f64 {
        libm::sqrt(
            v.iter()
                .zip(problem.g.values())
                .zip(&d)
                .map(|((u, g), d)| {
                    let r = u - g - problem.tau * d;
                    r * r
                })
                .sum::<f64>()
                * m,
        )
    };
    let implied_residual = residual_of(&implied);
    let iterate_residual = residual_of(u);
    let score = |p: f64, r: f64| ((p - dual) / (1.0 + libm::fabs(p))).max(r / (1.0 + g_norm));
    let (u, primal, residual) = if score(implied_primal, implied_residual) <= score(iterate_primal, iterate_residual) {
        (implied, implied_primal, implied_residual)
    } else {
        (u.to_vec(), iterate_primal, iterate_residual)
    };
    Ok(Candidate {
        u,
        z,
        primal,
        dual,
        residual,
        g_norm,
        iterate_primal,
    })
}
