//! Certified implicit-Euler solver for gradient flows of convex functionals
//! with linear growth,
//!
//! ```text
//!     u_t = div ∂_ξ f(x, Du)     in Ω,
//! ```
//!
//! on rectangular 1D/2D grids with Neumann or relaxed Dirichlet boundary
//! conditions. Every implicit step `u + τ A(u) ∋ g` is solved by a
//! primal–dual iteration on the Fenchel–Rockafellar pair, and the result
//! carries the certifying flux `z` and a duality gap. The [`certify`] module
//! turns a `(u, z)` pair into pointwise residuals of the weak-solution
//! conditions.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, configuration
//! and the command-line front end live in the `dualflow` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod scalar;

pub mod certify;
pub mod flow;
pub mod grid;
pub mod lagrangian;
pub mod resolvent;

pub use certify::{certify, certify_dirichlet, certify_neumann, CertificateReport, Verdict};
pub use error::{Error, Result};
pub use flow::{evolve, steady_state, FlowError, FlowProblem, StepPolicy, Trajectory};
pub use grid::{BoundaryCondition, BoundaryKind, FluxField, GridSpec, ScalarField};
pub use lagrangian::{ExtendedValue, Kind, LagrangianSpec, RadialProfile};
pub use resolvent::{
    dual_energy, functional, primal_energy, solve, solve_warm, DualEnergy, Infeasibility, ResolventProblem,
    ResolventSolution, SolverOptions,
};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;
