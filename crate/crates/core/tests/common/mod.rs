//! Shared test helpers: a dual coordinate-ascent oracle for small 1D
//! problems and random problem generators.

#![allow(dead_code)]

pub mod props;

use dualflow_core::{BoundaryCondition, GridSpec, LagrangianSpec, ResolventProblem, ScalarField};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleKind {
    Tv,
    /// `2|ξ|` in 1D.
    Anisotropic,
    Area,
    Plasticity,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] = [OracleKind::Tv, OracleKind::Anisotropic, OracleKind::Area, OracleKind::Plasticity];

    pub fn lagrangian(self) -> LagrangianSpec {
        match self {
            OracleKind::Tv => LagrangianSpec::tv(),
            OracleKind::Anisotropic => LagrangianSpec::anisotropic_tv(&[2.0]).unwrap(),
            OracleKind::Area => LagrangianSpec::area(),
            OracleKind::Plasticity => LagrangianSpec::plasticity(),
        }
    }

    /// Closed interval containing dom f*.
    fn bound(self) -> f64 {
        match self {
            OracleKind::Anisotropic => 2.0,
            OracleKind::Area => 1.0 - 1e-15,
            _ => 1.0,
        }
    }

    /// `−(f*)'(z)` on the domain.
    fn neg_conjugate_slope(self, z: f64) -> f64 {
        match self {
            OracleKind::Tv | OracleKind::Anisotropic => 0.0,
            OracleKind::Area => -z / (1.0 - z * z).sqrt(),
            OracleKind::Plasticity => -z,
        }
    }

    fn recession(self) -> f64 {
        match self {
            OracleKind::Anisotropic => 2.0,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub kind: OracleKind,
    pub h: f64,
    pub tau: f64,
    pub g: Vec<f64>,
    /// Data on the low and high boundary faces.
    pub dirichlet: Option<[f64; 2]>,
}

impl Case {
    pub fn random(rng: &mut impl Rng, kind: OracleKind, dirichlet: bool) -> Self {
        let n = rng.gen_range(2..=6);
        Case {
            kind,
            h: rng.gen_range(0.25..1.0),
            tau: rng.gen_range(0.1..2.0),
            g: (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect(),
            dirichlet: dirichlet.then(|| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]),
        }
    }

    pub fn problem(&self) -> ResolventProblem {
        let grid = GridSpec::new(&[self.g.len()], &[self.h]).unwrap();
        let bc = match self.dirichlet {
            Some(d) => BoundaryCondition::Dirichlet(d.to_vec()),
            None => BoundaryCondition::Neumann,
        };
        ResolventProblem::new(self.kind.lagrangian(), bc, ScalarField::new(grid, self.g.clone()).unwrap(), self.tau).unwrap()
    }
}

/// Maximizes the dual objective by exact coordinate ascent.
///
/// Variables: interior fluxes `z_i` between cells `i` and `i+1`, and for
/// Dirichlet the outward traces `(t_L, t_R)`. Returns `u = g + τ d`, `z` and
/// the traces.
pub fn oracle_1d(case: &Case) -> (Vec<f64>, Vec<f64>, [f64; 2]) {
    let n = case.g.len();
    let (h, tau) = (case.h, case.tau);
    let mut z = vec![0.0; n - 1];
    let mut t = [0.0; 2];
    let div = |z: &[f64], t: &[f64; 2]| -> Vec<f64> {
        (0..n)
            .map(|c| {
                let out = if c + 1 < n { z[c] } else { 0.0 };
                let inn = if c > 0 { z[c - 1] } else { 0.0 };
                let mut d = (out - inn) / h;
                if c == 0 {
                    d += t[0] / h;
                }
                if c == n - 1 {
                    d += t[1] / h;
                }
                d
            })
            .collect()
    };
    let bound = case.kind.bound();
    for _ in 0..2_000_000 {
        let mut change: f64 = 0.0;
        for i in 0..n - 1 {
            let slope = |zi: f64, z: &mut Vec<f64>| -> f64 {
                z[i] = zi;
                let d = div(z, &t);
                h * case.kind.neg_conjugate_slope(zi) - (case.g[i] + tau * d[i]) + (case.g[i + 1] + tau * d[i + 1])
            };
            let old = z[i];
            let (mut lo, mut hi) = (-bound, bound);
            let new = if slope(hi, &mut z) >= 0.0 {
                hi
            } else if slope(lo, &mut z) <= 0.0 {
                lo
            } else {
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if slope(mid, &mut z) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            };
            z[i] = new;
            change = change.max((new - old).abs());
        }
        if let Some(data) = case.dirichlet {
            let f0 = case.kind.recession();
            for (side, cell) in [(0usize, 0usize), (1, n - 1)] {
                let old = t[side];
                t[side] = 0.0;
                let base = div(&z, &t)[cell];
                // −(g + τ(base + t/h)) + datum = 0.
                let new = ((data[side] - case.g[cell] - tau * base) * h / tau).clamp(-f0, f0);
                t[side] = new;
                change = change.max((new - old).abs());
            }
        }
        if change <= 1e-15 {
            break;
        }
    }
    let d = div(&z, &t);
    let u = case.g.iter().zip(&d).map(|(g, d)| g + tau * d).collect();
    (u, z, t)
}
