//! Rectangular grids, cell-centered scalars and face-centered fluxes.
//!
//! Cells are stored row-major (the last axis varies fastest). A flux stores,
//! for every axis `k`:
//!
//! * `interior[k]`: the faces between cells `c` and `c + e_k`, ordered
//!   row-major over the face lattice whose extent along `k` is `n_k − 1`;
//! * `boundary[k]`: `2·∏_{j≠k} n_j` faces on `∂Ω` normal to `e_k`, first the
//!   low side (`x_k = 0`) then the high side, each row-major over the
//!   remaining axes.
//!
//! [`gradient`] and [`divergence`] are exact negative adjoints:
//!
//! ```text
//! ⟨∇u, p⟩_faces + ⟨u, div p⟩_cells = Σ_{∂ faces} u_cell · [p, ν] · |face|
//! ```
//!
//! for every `u` and `p`, which is the discrete Green formula. Boundary-face
//! fluxes enter only through `div` and the trace; `∇u` is zero there.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::MAX_DIM;

/// Default upper bound on the number of cells.
pub const DEFAULT_CELL_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    cells: [usize; MAX_DIM],
    spacing: [f64; MAX_DIM],
}

impl GridSpec {
    pub fn new(cells: &[usize], spacing: &[f64]) -> Result<Self> {
        Self::with_cap(cells, spacing, DEFAULT_CELL_CAP)
    }

    pub fn with_cap(cells: &[usize], spacing: &[f64], cap: usize) -> Result<Self> {
        if cells.is_empty() || cells.len() > MAX_DIM {
            return Err(Error::InvalidGrid("dimension must be 1 or 2"));
        }
        if spacing.len() != cells.len() {
            return Err(Error::DimensionMismatch {
                expected: cells.len(),
                found: spacing.len(),
            });
        }
        if cells.contains(&0) {
            return Err(Error::InvalidGrid("every axis needs at least one cell"));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid("spacing must be positive and finite"));
        }
        let total = cells
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .unwrap_or(usize::MAX);
        if total > cap {
            return Err(Error::TooManyCells { cells: total, cap });
        }
        let mut c = [1; MAX_DIM];
        let mut h = [1.0; MAX_DIM];
        c[..cells.len()].copy_from_slice(cells);
        h[..cells.len()].copy_from_slice(spacing);
        Ok(GridSpec {
            dim: cells.len(),
            cells: c,
            spacing: h,
        })
    }

    /// Uniform grid on `[0, extent_0] × …`.
    pub fn on_box(cells: &[usize], extent: &[f64]) -> Result<Self> {
        if extent.len() != cells.len() {
            return Err(Error::DimensionMismatch {
                expected: cells.len(),
                found: extent.len(),
            });
        }
        let mut spacing = [0.0; MAX_DIM];
        for k in 0..cells.len() {
            spacing[k] = extent[k] / cells[k].max(1) as f64;
        }
        Self::new(cells, &spacing[..cells.len()])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn cell_count(&self) -> usize {
        self.cells().iter().product()
    }

    /// `∏ h_k`.
    pub fn cell_measure(&self) -> f64 {
        self.spacing().iter().product()
    }

    /// Measure of a face normal to `axis`: `∏_{j≠axis} h_j`.
    pub fn face_measure(&self, axis: usize) -> f64 {
        self.cell_measure() / self.spacing[axis]
    }

    /// Number of faces normal to `axis` on one side of the box.
    pub fn transverse_count(&self, axis: usize) -> usize {
        self.cell_count() / self.cells[axis]
    }

    pub fn interior_face_count(&self, axis: usize) -> usize {
        (self.cells[axis] - 1) * self.transverse_count(axis)
    }

    pub fn boundary_face_count(&self, axis: usize) -> usize {
        2 * self.transverse_count(axis)
    }

    pub fn total_boundary_faces(&self) -> usize {
        (0..self.dim).map(|k| self.boundary_face_count(k)).sum()
    }

    /// Upper bound on `‖∇‖²` in the unweighted Euclidean norm: `Σ 4/h_k²`.
    pub fn gradient_norm_sq_bound(&self) -> f64 {
        self.spacing().iter().map(|h| 4.0 / (h * h)).sum()
    }

    /// Row-major stride of `axis` in the cell array.
    pub fn stride(&self, axis: usize) -> usize {
        self.cells[axis + 1..self.dim].iter().product()
    }

    /// Multi-index of a cell.
    pub fn cell_index(&self, cell: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        let mut rest = cell;
        for k in (0..self.dim).rev() {
            idx[k] = rest % self.cells[k];
            rest /= self.cells[k];
        }
        idx
    }

    /// Cell center coordinates with the box anchored at the origin.
    pub fn cell_center(&self, cell: usize) -> [f64; MAX_DIM] {
        let idx = self.cell_index(cell);
        let mut x = [0.0; MAX_DIM];
        for k in 0..self.dim {
            x[k] = (idx[k] as f64 + 0.5) * self.spacing[k];
        }
        x
    }

    /// Index of the interior face `c + ½e_axis`, if `c` is not on the high
    /// side along `axis`.
    pub fn forward_face(&self, axis: usize, cell: usize) -> Option<usize> {
        let idx = self.cell_index(cell);
        if idx[axis] + 1 >= self.cells[axis] {
            return None;
        }
        Some(self.face_index(axis, &idx))
    }

    /// Row-major index of a face whose low-side cell has multi-index `idx`.
    fn face_index(&self, axis: usize, idx: &[usize; MAX_DIM]) -> usize {
        let mut flat = 0;
        for (k, (&n, &i)) in self.cells[..self.dim].iter().zip(idx).enumerate() {
            let extent = if k == axis { n - 1 } else { n };
            flat = flat * extent + i;
        }
        flat
    }

    /// Row-major index over the axes other than `axis`.
    fn transverse_index(&self, axis: usize, idx: &[usize; MAX_DIM]) -> usize {
        let mut flat = 0;
        for (k, (&n, &i)) in self.cells[..self.dim].iter().zip(idx).enumerate() {
            if k != axis {
                flat = flat * n + i;
            }
        }
        flat
    }

    /// All boundary faces in storage order: axis by axis, low side then
    /// high side.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let mut out = Vec::with_capacity(self.total_boundary_faces());
        let mut offset = 0;
        for axis in 0..self.dim {
            let t = self.transverse_count(axis);
            let mut low = vec![BoundaryFace::default(); t];
            let mut high = vec![BoundaryFace::default(); t];
            for cell in 0..self.cell_count() {
                let idx = self.cell_index(cell);
                let ti = self.transverse_index(axis, &idx);
                if idx[axis] == 0 {
                    low[ti] = BoundaryFace {
                        axis,
                        outward: -1.0,
                        cell,
                        index: offset + ti,
                        local: ti,
                    };
                }
                if idx[axis] + 1 == self.cells[axis] {
                    high[ti] = BoundaryFace {
                        axis,
                        outward: 1.0,
                        cell,
                        index: offset + t + ti,
                        local: t + ti,
                    };
                }
            }
            out.extend(low);
            out.extend(high);
            offset += 2 * t;
        }
        out
    }

    /// Boundary face centers in storage order.
    pub fn boundary_face_centers(&self) -> Vec<[f64; MAX_DIM]> {
        self.boundary_faces()
            .iter()
            .map(|f| {
                let mut x = self.cell_center(f.cell);
                let h = self.spacing[f.axis];
                x[f.axis] += 0.5 * h * f.outward;
                x
            })
            .collect()
    }
}

/// Geometry of one boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundaryFace {
    pub axis: usize,
    /// `ν·e_axis`, `−1` on the low side and `+1` on the high side.
    pub outward: f64,
    /// Adjacent cell.
    pub cell: usize,
    /// Position in the flattened boundary layout (all axes).
    pub index: usize,
    /// Position within `FluxField::boundary[axis]`.
    pub local: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::LayoutMismatch {
                expected: grid.cell_count(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField {
            values: vec![0.0; grid.cell_count()],
            grid,
        }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        ScalarField {
            values: vec![value; grid.cell_count()],
            grid,
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; MAX_DIM]) -> f64) -> Result<Self> {
        let values = (0..grid.cell_count()).map(|c| f(grid.cell_center(c))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count());
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `∫ u dx / |Ω|`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Cell-weighted L² norm.
    pub fn norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.cell_measure())
    }

    /// Cell-weighted L² distance.
    pub fn distance(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(weighted_distance(&self.values, &other.values, self.grid.cell_measure()))
    }

    pub fn max_abs_difference(&self, other: &ScalarField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| libm::fabs(a - b))
            .fold(0.0, f64::max))
    }
}

pub(crate) fn weighted_distance(a: &[f64], b: &[f64], measure: f64) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() * measure)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxField {
    grid: GridSpec,
    interior: Vec<Vec<f64>>,
    boundary: Vec<Vec<f64>>,
}

impl FluxField {
    pub fn zeros(grid: GridSpec) -> Self {
        let interior = (0..grid.dim())
            .map(|k| vec![0.0; grid.interior_face_count(k)])
            .collect();
        let boundary = (0..grid.dim())
            .map(|k| vec![0.0; grid.boundary_face_count(k)])
            .collect();
        FluxField {
            grid,
            interior,
            boundary,
        }
    }

    pub fn new(grid: GridSpec, interior: Vec<Vec<f64>>, boundary: Vec<Vec<f64>>) -> Result<Self> {
        if interior.len() != grid.dim() || boundary.len() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                found: interior.len().min(boundary.len()),
            });
        }
        for k in 0..grid.dim() {
            if interior[k].len() != grid.interior_face_count(k) {
                return Err(Error::LayoutMismatch {
                    expected: grid.interior_face_count(k),
                    found: interior[k].len(),
                });
            }
            if boundary[k].len() != grid.boundary_face_count(k) {
                return Err(Error::LayoutMismatch {
                    expected: grid.boundary_face_count(k),
                    found: boundary[k].len(),
                });
            }
        }
        if interior.iter().chain(&boundary).flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("flux field"));
        }
        Ok(FluxField {
            grid,
            interior,
            boundary,
        })
    }

    /// Flat layout: per axis, interior faces, then low and high boundary.
    pub fn from_flat(grid: GridSpec, values: &[f64]) -> Result<Self> {
        let expected = Self::flat_len(&grid);
        if values.len() != expected {
            return Err(Error::LayoutMismatch {
                expected,
                found: values.len(),
            });
        }
        let mut interior = Vec::with_capacity(grid.dim());
        let mut boundary = Vec::with_capacity(grid.dim());
        let mut at = 0;
        for k in 0..grid.dim() {
            let ni = grid.interior_face_count(k);
            let nb = grid.boundary_face_count(k);
            interior.push(values[at..at + ni].to_vec());
            boundary.push(values[at + ni..at + ni + nb].to_vec());
            at += ni + nb;
        }
        Self::new(grid, interior, boundary)
    }

    pub fn flat_len(grid: &GridSpec) -> usize {
        (0..grid.dim())
            .map(|k| grid.interior_face_count(k) + grid.boundary_face_count(k))
            .sum()
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::flat_len(&self.grid));
        for k in 0..self.grid.dim() {
            out.extend_from_slice(&self.interior[k]);
            out.extend_from_slice(&self.boundary[k]);
        }
        out
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn interior(&self, axis: usize) -> &[f64] {
        &self.interior[axis]
    }

    pub fn interior_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.interior[axis]
    }

    /// Stored boundary values of `axis` (low side then high side); these are
    /// components along `+e_axis`, not normal traces.
    pub fn boundary(&self, axis: usize) -> &[f64] {
        &self.boundary[axis]
    }

    pub fn boundary_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.boundary[axis]
    }

    pub fn set_boundary_zero(&mut self) {
        for b in &mut self.boundary {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn scaled(&self, s: f64) -> FluxField {
        let mut out = self.clone();
        for v in out.interior.iter_mut().chain(out.boundary.iter_mut()).flatten() {
            *v *= s;
        }
        out
    }

    pub fn max_abs_boundary(&self) -> f64 {
        self.boundary.iter().flatten().map(|v| libm::fabs(*v)).fold(0.0, f64::max)
    }

    /// Normal trace on a boundary face, `[p, ν]`.
    pub fn normal_trace(&self, face: &BoundaryFace) -> f64 {
        face.outward * self.boundary[face.axis][face.local]
    }

    /// Sets the stored boundary value so that `[p, ν] = trace`.
    pub fn set_normal_trace(&mut self, face: &BoundaryFace, trace: f64) {
        self.boundary[face.axis][face.local] = face.outward * trace;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// Neumann (`[z, ν] = 0`) or relaxed Dirichlet with datum `h` given on every
/// boundary face, in the flattened boundary layout of [`GridSpec::boundary_faces`].
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    Neumann,
    Dirichlet(Vec<f64>),
}

impl BoundaryCondition {
    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundaryCondition::Neumann => BoundaryKind::Neumann,
            BoundaryCondition::Dirichlet(_) => BoundaryKind::Dirichlet,
        }
    }

    pub fn datum(&self) -> Option<&[f64]> {
        match self {
            BoundaryCondition::Neumann => None,
            BoundaryCondition::Dirichlet(h) => Some(h),
        }
    }

    /// Dirichlet datum sampled from a function of the face center.
    pub fn dirichlet_from_fn(grid: &GridSpec, h: impl Fn([f64; MAX_DIM]) -> f64) -> Result<Self> {
        let datum = grid.boundary_face_centers().into_iter().map(h).collect();
        let bc = BoundaryCondition::Dirichlet(datum);
        bc.validate(grid)?;
        Ok(bc)
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        if let BoundaryCondition::Dirichlet(h) = self {
            if h.len() != grid.total_boundary_faces() {
                return Err(Error::LayoutMismatch {
                    expected: grid.total_boundary_faces(),
                    found: h.len(),
                });
            }
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("dirichlet datum"));
            }
        }
        Ok(())
    }
}

/// Forward differences on interior faces; boundary faces are zero.
pub fn gradient(u: &ScalarField) -> FluxField {
    let grid = u.grid;
    let mut out = FluxField::zeros(grid);
    for k in 0..grid.dim() {
        gradient_axis(&grid, k, &u.values, &mut out.interior[k]);
    }
    out
}

pub(crate) fn gradient_axis(grid: &GridSpec, axis: usize, u: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / grid.spacing[axis];
    let stride = grid.stride(axis);
    let n = grid.cells[axis];
    // Cells split into `outer` blocks of `n·stride`; faces into blocks of
    // `(n − 1)·stride`.
    let outer = grid.cell_count() / (n * stride);
    for o in 0..outer {
        let cbase = o * n * stride;
        let fbase = o * (n - 1) * stride;
        for i in 0..n - 1 {
            let c = cbase + i * stride;
            let f = fbase + i * stride;
            for s in 0..stride {
                out[f + s] = (u[c + stride + s] - u[c + s]) * inv_h;
            }
        }
    }
}

/// `Σ_k (p_out − p_in)/h_k` per cell, reading boundary-face values from the
/// flux for Dirichlet and treating them as zero for Neumann.
pub fn divergence(p: &FluxField, bc: &BoundaryCondition) -> ScalarField {
    let include_boundary = matches!(bc, BoundaryCondition::Dirichlet(_));
    let mut out = vec![0.0; p.grid.cell_count()];
    divergence_into(p, include_boundary, &mut out);
    ScalarField::from_raw(p.grid, out)
}

/// Divergence using every stored boundary value.
pub fn divergence_with_boundary(p: &FluxField) -> ScalarField {
    let mut out = vec![0.0; p.grid.cell_count()];
    divergence_into(p, true, &mut out);
    ScalarField::from_raw(p.grid, out)
}

pub(crate) fn divergence_into(p: &FluxField, include_boundary: bool, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let grid = &p.grid;
    for k in 0..grid.dim() {
        divergence_axis_add(grid, k, &p.interior[k], out);
    }
    if include_boundary {
        for face in grid.boundary_faces() {
            let h = grid.spacing[face.axis];
            out[face.cell] += p.normal_trace(&face) / h;
        }
    }
}

/// Adds the interior-face contribution of `axis` to `out`.
pub(crate) fn divergence_axis_add(grid: &GridSpec, axis: usize, p: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / grid.spacing[axis];
    let stride = grid.stride(axis);
    let n = grid.cells[axis];
    let outer = grid.cell_count() / (n * stride);
    for o in 0..outer {
        let cbase = o * n * stride;
        let fbase = o * (n - 1) * stride;
        for i in 0..n - 1 {
            let c = cbase + i * stride;
            let f = fbase + i * stride;
            for s in 0..stride {
                let v = p[f + s] * inv_h;
                out[c + s] += v;
                out[c + stride + s] -= v;
            }
        }
    }
}

/// Normal traces `[p, ν]` on all boundary faces, flattened.
pub fn boundary_trace(p: &FluxField) -> Vec<f64> {
    p.grid
        .boundary_faces()
        .iter()
        .map(|f| p.normal_trace(f))
        .collect()
}

/// `∫ u v dx` with cell measure `∏ h_k`.
pub fn inner_product(u: &ScalarField, v: &ScalarField) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    Ok(u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>() * u.grid.cell_measure())
}

/// Pairing of interior-face values weighted by face measure × spacing, which
/// is the cell measure for every axis. Boundary faces do not enter.
pub fn face_inner_product(p: &FluxField, q: &FluxField) -> Result<f64> {
    if p.grid != q.grid {
        return Err(Error::GridMismatch);
    }
    let sum: f64 = (0..p.grid.dim())
        .map(|k| p.interior[k].iter().zip(&q.interior[k]).map(|(a, b)| a * b).sum::<f64>())
        .sum();
    Ok(sum * p.grid.cell_measure())
}

/// `Σ_{∂ faces} u_cell · [p, ν] · |face|`, the boundary side of the Green
/// formula.
pub fn boundary_pairing(u: &ScalarField, p: &FluxField) -> Result<f64> {
    if u.grid != p.grid {
        return Err(Error::GridMismatch);
    }
    let grid = &u.grid;
    Ok(grid
        .boundary_faces()
        .iter()
        .map(|f| u.values[f.cell] * p.normal_trace(f) * grid.face_measure(f.axis))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize, h: f64) -> GridSpec {
        GridSpec::new(&[n], &[h]).unwrap()
    }

    #[test]
    fn gradient_examples() {
        let g = grid1(3, 1.0);
        let u = ScalarField::new(g, vec![1.0, 2.0, 4.0]).unwrap();
        let p = gradient(&u);
        assert_eq!(p.interior(0), &[1.0, 2.0]);
        assert_eq!(p.boundary(0), &[0.0, 0.0]);

        let c = ScalarField::constant(g, 3.5);
        assert!(gradient(&c).to_flat().iter().all(|v| *v == 0.0));

        let g2 = GridSpec::new(&[2, 2], &[1.0, 1.0]).unwrap();
        let u = ScalarField::new(g2, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let p = gradient(&u);
        assert_eq!(p.interior(0), &[2.0, 2.0]);
        assert_eq!(p.interior(1), &[1.0, 1.0]);
    }

    #[test]
    fn divergence_examples() {
        let g = grid1(3, 1.0);
        let p = FluxField::new(g, vec![vec![1.0, -1.0]], vec![vec![0.0, 0.0]]).unwrap();
        let d = divergence(&p, &BoundaryCondition::Neumann);
        assert_eq!(d.values(), &[1.0, -2.0, 1.0]);
        let zero = FluxField::zeros(g);
        assert!(divergence(&zero, &BoundaryCondition::Neumann).values().iter().all(|v| *v == 0.0));

        let u = ScalarField::new(g, vec![1.0, 2.0, 4.0]).unwrap();
        let lhs = face_inner_product(&gradient(&u), &p).unwrap();
        let rhs = -inner_product(&u, &d).unwrap();
        assert_eq!(lhs, -1.0);
        assert_eq!(rhs, -1.0);
    }

    #[test]
    fn neumann_divergence_ignores_stored_boundary() {
        let g = grid1(3, 1.0);
        let p = FluxField::new(g, vec![vec![1.0, -1.0]], vec![vec![5.0, 7.0]]).unwrap();
        assert_eq!(divergence(&p, &BoundaryCondition::Neumann).values(), &[1.0, -2.0, 1.0]);
        let d = divergence(&p, &BoundaryCondition::Dirichlet(vec![0.0, 0.0]));
        // left trace −5, right trace +7
        assert_eq!(d.values(), &[-4.0, -2.0, 8.0]);
    }

    #[test]
    fn trace_examples() {
        let g = grid1(3, 1.0);
        let p = FluxField::new(g, vec![vec![0.3, 0.1]], vec![vec![2.0, 3.0]]).unwrap();
        assert_eq!(boundary_trace(&p), vec![-2.0, 3.0]);
        assert!(boundary_trace(&FluxField::zeros(g)).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn inner_product_examples() {
        let g = grid1(3, 1.0);
        let one = ScalarField::constant(g, 1.0);
        assert_eq!(inner_product(&one, &one).unwrap(), 3.0);
        let g = grid1(2, 0.5);
        let u = ScalarField::new(g, vec![1.0, 2.0]).unwrap();
        let v = ScalarField::new(g, vec![3.0, -1.0]).unwrap();
        assert_eq!(inner_product(&u, &v).unwrap(), 0.5);
        let a = ScalarField::new(g, vec![1.0, 0.0]).unwrap();
        let b = ScalarField::new(g, vec![0.0, 1.0]).unwrap();
        assert_eq!(inner_product(&a, &b).unwrap(), 0.0);
        let other = grid1(2, 1.0);
        assert_eq!(inner_product(&u, &ScalarField::zeros(other)), Err(Error::GridMismatch));
    }

    #[test]
    fn boundary_face_layout_2d() {
        let g = GridSpec::new(&[2, 3], &[1.0, 1.0]).unwrap();
        let faces = g.boundary_faces();
        assert_eq!(faces.len(), 2 * 3 + 2 * 2);
        // axis 0 low side touches row 0
        assert_eq!(faces[0].cell, 0);
        assert_eq!(faces[2].cell, 2);
        // axis 0 high side touches row 1
        assert_eq!(faces[3].cell, 3);
        // axis 1 low side touches column 0 of each row
        assert_eq!(faces[6].cell, 0);
        assert_eq!(faces[7].cell, 3);
        assert_eq!(faces[8].cell, 2);
        assert_eq!(faces[9].cell, 5);
        for (i, f) in faces.iter().enumerate() {
            assert_eq!(f.index, i);
        }
        assert_eq!(g.forward_face(0, 1), Some(1));
        assert_eq!(g.forward_face(0, 4), None);
        assert_eq!(g.forward_face(1, 4), Some(3));
        assert_eq!(g.forward_face(1, 5), None);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(&[], &[]).is_err());
        assert!(GridSpec::new(&[2, 2, 2], &[1.0; 3]).is_err());
        assert!(GridSpec::new(&[4], &[0.0]).is_err());
        assert!(GridSpec::new(&[4], &[1.0, 1.0]).is_err());
        assert_eq!(
            GridSpec::with_cap(&[100, 100], &[1.0, 1.0], 1000),
            Err(Error::TooManyCells { cells: 10_000, cap: 1000 })
        );
        assert!(ScalarField::new(grid1(2, 1.0), vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn flat_round_trip_layout() {
        let g = GridSpec::new(&[2, 3], &[0.5, 0.25]).unwrap();
        let flat: Vec<f64> = (0..FluxField::flat_len(&g)).map(|i| i as f64).collect();
        let p = FluxField::from_flat(g, &flat).unwrap();
        assert_eq!(p.interior(0).len(), 3);
        assert_eq!(p.boundary(0).len(), 6);
        assert_eq!(p.interior(1).len(), 4);
        assert_eq!(p.boundary(1).len(), 4);
        assert_eq!(p.to_flat(), flat);
    }
}
