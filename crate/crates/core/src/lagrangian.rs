//! Convex integrands of linear growth.
//!
//! An integrand is `f(x, ξ) = w(x)·b(ξ)` with a spatially uniform base `b`
//! and an optional positive weight field `w` indexed by grid cell. For each
//! base the module evaluates `b`, its recession function `b⁰(ξ) = lim_{t→0⁺}
//! t·b(ξ/t)`, its convex conjugate `b*` and both proximal maps.
//!
//! | kind             | `b(ξ)`                      | `b⁰(ξ)`          | `b*(ζ)`                         |
//! |------------------|-----------------------------|------------------|---------------------------------|
//! | `tv`             | `|ξ|`                       | `|ξ|`            | `0` on `|ζ| ≤ 1`                |
//! | `anisotropic_tv` | `|Aξ|`, `A = diag(weights)` | `|Aξ|`           | `0` on `|A⁻¹ζ| ≤ 1`             |
//! | `area`           | `√(1 + |ξ|²)`               | `|ξ|`            | `−√(1 − |ζ|²)` on `|ζ| ≤ 1`     |
//! | `plasticity`     | `½|ξ|²` / `|ξ| − ½`         | `|ξ|`            | `½|ζ|²` on `|ζ| ≤ 1`            |
//! | `radial_custom`  | `φ(|ξ|)`                    | `φ'(∞)·|ξ|`      | `φ*(|ζ|)`                       |
//!
//! Outside the listed sets the conjugate is `+∞`.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::scalar::{increasing_root, increasing_root_from};
use crate::MAX_DIM;

/// Relative slack when testing membership in the effective domain of a
/// conjugate. Projections land on the boundary up to rounding.
pub const DOMAIN_TOL: f64 = 1e-12;

/// Absolute tolerance of the safeguarded scalar solves for custom profiles.
pub const RADIAL_TOL: f64 = 1e-12;

/// A real number or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedValue {
    Finite(f64),
    PosInfinity,
}

impl ExtendedValue {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::PosInfinity => None,
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> ExtendedValue {
        match self {
            ExtendedValue::Finite(v) => ExtendedValue::Finite(f(v)),
            ExtendedValue::PosInfinity => ExtendedValue::PosInfinity,
        }
    }

    /// `self ≤ bound` with `+∞ ≤ bound` false for every finite bound.
    pub fn le(self, bound: f64) -> bool {
        match self {
            ExtendedValue::Finite(v) => v <= bound,
            ExtendedValue::PosInfinity => false,
        }
    }

    pub fn max(self, other: ExtendedValue) -> ExtendedValue {
        match (self, other) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => ExtendedValue::Finite(a.max(b)),
            _ => ExtendedValue::PosInfinity,
        }
    }
}

impl core::ops::Add for ExtendedValue {
    type Output = ExtendedValue;
    fn add(self, rhs: ExtendedValue) -> ExtendedValue {
        match (self, rhs) {
            (ExtendedValue::Finite(a), ExtendedValue::Finite(b)) => ExtendedValue::Finite(a + b),
            _ => ExtendedValue::PosInfinity,
        }
    }
}

impl core::ops::Add<f64> for ExtendedValue {
    type Output = ExtendedValue;
    fn add(self, rhs: f64) -> ExtendedValue {
        self.map(|v| v + rhs)
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::PosInfinity => f.write_str("+inf"),
        }
    }
}

/// A convex nondecreasing profile `φ: [0, ∞) → ℝ` with linear growth.
pub trait RadialProfile: Send + Sync {
    fn value(&self, r: f64) -> f64;
    /// Right derivative `φ'(r⁺)`.
    fn derivative(&self, r: f64) -> f64;
}

/// Integrand family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Tv,
    AnisotropicTv,
    Area,
    Plasticity,
    RadialCustom,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Tv => "tv",
            Kind::AnisotropicTv => "anisotropic_tv",
            Kind::Area => "area",
            Kind::Plasticity => "plasticity",
            Kind::RadialCustom => "radial_custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Kind> {
        Some(match name {
            "tv" => Kind::Tv,
            "anisotropic_tv" => Kind::AnisotropicTv,
            "area" => Kind::Area,
            "plasticity" => Kind::Plasticity,
            "radial_custom" => Kind::RadialCustom,
            _ => return None,
        })
    }
}

#[derive(Clone)]
struct Radial {
    profile: Arc<dyn RadialProfile>,
    growth: f64,
    /// `lim_{r→∞} φ'(r)`.
    slope: f64,
    /// `φ'(0⁺)`.
    slope0: f64,
}

#[derive(Clone)]
enum Base {
    Tv,
    AnisotropicTv(Vec<f64>),
    Area,
    Plasticity,
    Radial(Radial),
}

/// Immutable description of `f(x, ξ) = w(x)·b(ξ)`.
#[derive(Clone)]
pub struct LagrangianSpec {
    base: Base,
    spatial_weight: Option<Vec<f64>>,
}

impl fmt::Debug for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_struct("LagrangianSpec");
        s.field("kind", &self.kind());
        if let Base::AnisotropicTv(w) = &self.base {
            s.field("weights", w);
        }
        s.field("spatially_weighted", &self.spatial_weight.is_some());
        s.finish()
    }
}

impl LagrangianSpec {
    pub fn tv() -> Self {
        Self::from_base(Base::Tv)
    }

    pub fn area() -> Self {
        Self::from_base(Base::Area)
    }

    pub fn plasticity() -> Self {
        Self::from_base(Base::Plasticity)
    }

    /// `|diag(weights)·ξ|`; one strictly positive weight per axis.
    pub fn anisotropic_tv(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.len() > MAX_DIM {
            return Err(Error::InvalidLagrangian("anisotropic_tv needs one weight per axis"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidLagrangian("anisotropic_tv weights must be positive and finite"));
        }
        Ok(Self::from_base(Base::AnisotropicTv(weights.to_vec())))
    }

    /// `φ(|ξ|)` for a user profile with declared growth constant `M`.
    ///
    /// The profile is sampled on `[0, 10⁶]`: it must be nondecreasing,
    /// have a nondecreasing derivative and satisfy `φ(r) ≤ M(1 + r)`.
    pub fn radial_custom(profile: Arc<dyn RadialProfile>, growth: f64) -> Result<Self> {
        if !(growth.is_finite() && growth > 0.0) {
            return Err(Error::InvalidLagrangian("growth constant must be positive"));
        }
        let mut previous = f64::NEG_INFINITY;
        for i in 0..=400 {
            // Dense near zero, geometric beyond one.
            let r = if i <= 200 {
                i as f64 / 200.0
            } else {
                libm::pow(10.0, (i - 200) as f64 * 6.0 / 200.0)
            };
            let value = profile.value(r);
            let slope = profile.derivative(r);
            if !(value.is_finite() && slope.is_finite()) {
                return Err(Error::InvalidLagrangian("profile is not finite on the sampled range"));
            }
            if libm::fabs(value) > growth * (1.0 + r) * (1.0 + 1e-12) {
                return Err(Error::InvalidLagrangian("profile violates the linear growth bound"));
            }
            if slope < previous - 1e-12 * (1.0 + libm::fabs(previous)) {
                return Err(Error::InvalidLagrangian("profile derivative is not nondecreasing"));
            }
            if i == 0 && slope < 0.0 {
                return Err(Error::InvalidLagrangian("profile must be nondecreasing"));
            }
            previous = slope;
        }
        // The derivative is monotone and bounded by M, so it converges.
        let slope = profile.derivative(1e15).max(previous);
        let slope0 = profile.derivative(0.0);
        Ok(Self::from_base(Base::Radial(Radial {
            profile,
            growth,
            slope,
            slope0,
        })))
    }

    fn from_base(base: Base) -> Self {
        LagrangianSpec {
            base,
            spatial_weight: None,
        }
    }

    /// Attach a per-cell positive weight `w(x)`.
    pub fn with_spatial_weight(mut self, weight: Vec<f64>) -> Result<Self> {
        if weight.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidLagrangian("spatial weight must be positive and finite"));
        }
        self.spatial_weight = Some(weight);
        Ok(self)
    }

    pub fn kind(&self) -> Kind {
        match self.base {
            Base::Tv => Kind::Tv,
            Base::AnisotropicTv(_) => Kind::AnisotropicTv,
            Base::Area => Kind::Area,
            Base::Plasticity => Kind::Plasticity,
            Base::Radial(_) => Kind::RadialCustom,
        }
    }

    /// Per-axis weights of `anisotropic_tv`.
    pub fn axis_weights(&self) -> Option<&[f64]> {
        match &self.base {
            Base::AnisotropicTv(w) => Some(w),
            _ => None,
        }
    }

    pub fn spatial_weight(&self) -> Option<&[f64]> {
        self.spatial_weight.as_deref()
    }

    /// Growth constant `M` with `|f(x, ξ)| ≤ M(1 + |ξ|)`.
    pub fn growth_bound(&self) -> f64 {
        let base = match &self.base {
            Base::Tv | Base::Plasticity => 1.0,
            Base::Area => core::f64::consts::SQRT_2,
            Base::AnisotropicTv(w) => w.iter().copied().fold(0.0, f64::max),
            Base::Radial(r) => r.growth,
        };
        let wmax = self
            .spatial_weight
            .as_ref()
            .map(|w| w.iter().copied().fold(0.0, f64::max))
            .unwrap_or(1.0);
        base * wmax
    }

    /// Checks that the integrand can be evaluated on a grid with `dim` axes
    /// and `cells` cells.
    pub fn check_grid(&self, dim: usize, cells: usize) -> Result<()> {
        if let Base::AnisotropicTv(w) = &self.base {
            if w.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: w.len(),
                });
            }
        }
        if let Some(w) = &self.spatial_weight {
            if w.len() != cells {
                return Err(Error::LayoutMismatch {
                    expected: cells,
                    found: w.len(),
                });
            }
        }
        Ok(())
    }

    /// `w(x)` at `cell`; `1` without a weight field.
    pub fn weight(&self, cell: usize) -> Result<f64> {
        match &self.spatial_weight {
            None => Ok(1.0),
            Some(w) => w.get(cell).copied().ok_or(Error::LayoutMismatch {
                expected: w.len(),
                found: cell + 1,
            }),
        }
    }

    #[inline]
    pub(crate) fn weight_unchecked(&self, cell: usize) -> f64 {
        match &self.spatial_weight {
            None => 1.0,
            Some(w) => w[cell],
        }
    }

    fn check_vector(&self, v: &[f64]) -> Result<()> {
        let expected = match &self.base {
            Base::AnisotropicTv(w) => w.len(),
            _ => v.len().clamp(1, MAX_DIM),
        };
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `f(x, ξ)` at grid cell `cell`.
    pub fn eval(&self, cell: usize, xi: &[f64]) -> Result<f64> {
        self.check_vector(xi)?;
        let w = self.weight(cell)?;
        Ok(w * self.base_value(xi))
    }

    /// Recession function `f⁰(x, ξ)`, positively 1-homogeneous in `ξ`.
    pub fn asymptotic(&self, cell: usize, xi: &[f64]) -> Result<f64> {
        self.check_vector(xi)?;
        let w = self.weight(cell)?;
        Ok(w * self.base_asymptotic(xi))
    }

    /// Convex conjugate `f*(x, ζ) = sup_ξ ζ·ξ − f(x, ξ)`.
    pub fn conjugate(&self, cell: usize, zeta: &[f64]) -> Result<ExtendedValue> {
        self.check_vector(zeta)?;
        let w = self.weight(cell)?;
        self.weighted_conjugate(w, zeta)
    }

    /// `argmin_η λ·f(x, η) + ½|η − ξ|²`.
    pub fn prox_primal(&self, cell: usize, xi: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.check_vector(xi)?;
        check_step(lambda)?;
        let w = self.weight(cell)?;
        let mut out = xi.to_vec();
        self.prox_primal_in_place(w, &mut out, lambda)?;
        Ok(out)
    }

    /// `argmin_p σ·f*(x, p) + ½|p − ζ|²`.
    pub fn prox_conjugate(&self, cell: usize, zeta: &[f64], sigma: f64) -> Result<Vec<f64>> {
        self.check_vector(zeta)?;
        check_step(sigma)?;
        let w = self.weight(cell)?;
        let mut out = zeta.to_vec();
        self.prox_conjugate_in_place(w, &mut out, sigma)?;
        Ok(out)
    }

    /// `f(x, ξ) + f*(x, ζ) − ξ·ζ`, zero exactly when `ζ ∈ ∂_ξ f(x, ξ)`.
    pub fn fenchel_young_residual(&self, cell: usize, xi: &[f64], zeta: &[f64]) -> Result<ExtendedValue> {
        self.check_vector(xi)?;
        self.check_vector(zeta)?;
        let w = self.weight(cell)?;
        self.weighted_fenchel_young(w, xi, zeta)
    }

    // ---- kernels on already-validated input; `w` is the local weight ----

    pub(crate) fn weighted_value(&self, w: f64, xi: &[f64]) -> f64 {
        w * self.base_value(xi)
    }

    pub(crate) fn weighted_asymptotic(&self, w: f64, xi: &[f64]) -> f64 {
        w * self.base_asymptotic(xi)
    }

    pub(crate) fn weighted_fenchel_young(&self, w: f64, xi: &[f64], zeta: &[f64]) -> Result<ExtendedValue> {
        let dot: f64 = xi.iter().zip(zeta).map(|(a, b)| a * b).sum();
        Ok(self.weighted_conjugate(w, zeta)? + (w * self.base_value(xi) - dot))
    }

    /// `w·b*(ζ/w)`.
    pub(crate) fn weighted_conjugate(&self, w: f64, zeta: &[f64]) -> Result<ExtendedValue> {
        let r = norm(zeta) / w;
        let inside = |t: f64| t <= 1.0 + DOMAIN_TOL;
        Ok(match &self.base {
            Base::Tv => {
                if inside(r) {
                    ExtendedValue::Finite(0.0)
                } else {
                    ExtendedValue::PosInfinity
                }
            }
            Base::AnisotropicTv(a) => {
                let t = libm::sqrt(
                    zeta.iter()
                        .zip(a)
                        .map(|(z, ak)| {
                            let s = z / (ak * w);
                            s * s
                        })
                        .sum(),
                );
                if inside(t) {
                    ExtendedValue::Finite(0.0)
                } else {
                    ExtendedValue::PosInfinity
                }
            }
            Base::Area => {
                if inside(r) {
                    let q = r.min(1.0);
                    ExtendedValue::Finite(-w * libm::sqrt((1.0 - q) * (1.0 + q)))
                } else {
                    ExtendedValue::PosInfinity
                }
            }
            Base::Plasticity => {
                if inside(r) {
                    let q = r.min(1.0);
                    ExtendedValue::Finite(0.5 * w * q * q)
                } else {
                    ExtendedValue::PosInfinity
                }
            }
            Base::Radial(rad) => rad.conjugate(r)?.map(|v| w * v),
        })
    }

    /// In-place `prox_{λ w b}`.
    pub(crate) fn prox_primal_in_place(&self, w: f64, xi: &mut [f64], lambda: f64) -> Result<()> {
        let mu = lambda * w;
        match &self.base {
            Base::AnisotropicTv(a) => {
                // Moreau: prox_{μ|A·|}(ξ) = ξ − μ·P_E(ξ/μ), E = {|A⁻¹ζ| ≤ 1}.
                let mut scaled = [0.0; MAX_DIM];
                for (s, x) in scaled.iter_mut().zip(xi.iter()) {
                    *s = x / mu;
                }
                let n = xi.len();
                project_ellipsoid(&mut scaled[..n], a, 1.0)?;
                for (x, s) in xi.iter_mut().zip(scaled.iter()) {
                    *x -= mu * s;
                }
                Ok(())
            }
            _ => {
                let r = norm(xi);
                if r == 0.0 {
                    return Ok(());
                }
                let s = match &self.base {
                    Base::Tv => (r - mu).max(0.0),
                    Base::Plasticity => {
                        if r <= 1.0 + mu {
                            r / (1.0 + mu)
                        } else {
                            r - mu
                        }
                    }
                    Base::Area => area_prox_radius(r, mu),
                    Base::Radial(rad) => rad.prox_radius(r, mu)?,
                    Base::AnisotropicTv(_) => unreachable!(),
                };
                scale(xi, s / r);
                Ok(())
            }
        }
    }

    /// In-place `prox_{σ f*}` with `f* = w·b*(·/w)`, i.e.
    /// `w·prox_{(σ/w) b*}(ζ/w)`.
    pub(crate) fn prox_conjugate_in_place(&self, w: f64, zeta: &mut [f64], sigma: f64) -> Result<()> {
        match &self.base {
            Base::Tv => {
                let r = norm(zeta);
                if r > w {
                    scale(zeta, w / r);
                }
                Ok(())
            }
            Base::AnisotropicTv(a) => project_ellipsoid(zeta, a, w),
            Base::Plasticity => {
                let r = norm(zeta);
                if r == 0.0 {
                    return Ok(());
                }
                let s = sigma / w;
                let q = (r / w / (1.0 + s)).min(1.0);
                scale(zeta, w * q / r);
                Ok(())
            }
            Base::Area => {
                let r = norm(zeta);
                if r == 0.0 {
                    return Ok(());
                }
                let q = area_conjugate_prox_radius(r / w, sigma / w)?;
                scale(zeta, w * q / r);
                Ok(())
            }
            Base::Radial(_) => {
                // Moreau: prox_{σ f*}(ζ) = ζ − σ·prox_{f/σ}(ζ/σ).
                let n = zeta.len();
                let mut tmp = [0.0; MAX_DIM];
                for (t, z) in tmp.iter_mut().zip(zeta.iter()) {
                    *t = z / sigma;
                }
                self.prox_primal_in_place(w, &mut tmp[..n], 1.0 / sigma)?;
                for (z, t) in zeta.iter_mut().zip(tmp.iter()) {
                    *z -= sigma * t;
                }
                Ok(())
            }
        }
    }

    /// In-place `prox_{f*}` in the metric `Σ⁻¹`, `Σ = diag(sigmas)`:
    /// `argmin_η f*(η) + ½ Σ_k (η_k − ζ_k)²/σ_k`.
    ///
    /// The minimizer has the form `η_k = ζ_k/(1 + σ_k ν)` for one scalar
    /// `ν ≥ 0`, found by a bracketed root solve. Equal steps reduce to
    /// [`prox_conjugate_in_place`](Self::prox_conjugate_in_place).
    pub(crate) fn prox_conjugate_diag_in_place(&self, w: f64, zeta: &mut [f64], sigmas: &[f64]) -> Result<()> {
        let n = zeta.len();
        if sigmas[..n].iter().all(|s| *s == sigmas[0]) {
            return self.prox_conjugate_in_place(w, zeta, sigmas[0]);
        }
        if zeta.iter().all(|z| *z == 0.0) {
            return Ok(());
        }
        match &self.base {
            Base::Tv => project_ball_diag(zeta, sigmas, w, 0.0),
            Base::AnisotropicTv(a) => {
                // With ζ'_k = ζ_k/a_k and σ'_k = σ_k/a_k² the ellipsoid
                // becomes the ball of radius w.
                let mut s = [0.0; MAX_DIM];
                for k in 0..n {
                    zeta[k] /= a[k];
                    s[k] = sigmas[k] / (a[k] * a[k]);
                }
                project_ball_diag(zeta, &s[..n], w, 0.0)?;
                for k in 0..n {
                    zeta[k] *= a[k];
                }
                Ok(())
            }
            // f*(η) = |η|²/(2w) on |η| ≤ w: ν = 1/w plus the ball multiplier.
            Base::Plasticity => project_ball_diag(zeta, sigmas, w, 1.0 / w),
            Base::Area => {
                // f*(η) = −√(w² − |η|²), so ν = 1/√(w² − |η|²), i.e.
                // w² − |η(ν)|² − 1/ν² = 0, increasing in ν ≥ 1/w.
                let eval = |nu: f64| {
                    let (e2, de2) = shrunk_norm_sq(zeta, sigmas, nu);
                    (w * w - e2 - 1.0 / (nu * nu), -de2 + 2.0 / (nu * nu * nu))
                };
                let lo = 1.0 / w;
                let hi = bracket_above(lo, |nu| eval(nu).0)?;
                let nu = increasing_root(eval, lo, hi, 1e-16)?;
                shrink(zeta, sigmas, nu);
                let e = norm(zeta);
                if e >= w {
                    scale(zeta, w * (1.0 - f64::EPSILON) / e);
                }
                Ok(())
            }
            Base::Radial(rad) => {
                // η ∈ w∂φ(|p|) with p_k = ζ_k ν/(1 + σ_k ν): the map
                // ν ↦ w φ'(|p(ν)|) − |η(ν)| is increasing.
                if norm(zeta) <= w * rad.slope0 {
                    return Ok(());
                }
                let phi = &rad.profile;
                let eval = |nu: f64| {
                    let mut p2 = 0.0;
                    let mut e2 = 0.0;
                    for k in 0..n {
                        let d = 1.0 + sigmas[k] * nu;
                        let e = zeta[k] / d;
                        e2 += e * e;
                        p2 += (e * nu) * (e * nu);
                    }
                    (w * phi.derivative(libm::sqrt(p2)) - libm::sqrt(e2), 0.0)
                };
                let hi = bracket_above(1.0, |nu| eval(nu).0)?;
                let nu = increasing_root(eval, 0.0, hi, RADIAL_TOL)?;
                shrink(zeta, sigmas, nu);
                let e = norm(zeta);
                if e > w * rad.slope {
                    scale(zeta, w * rad.slope / e);
                }
                Ok(())
            }
        }
    }

    fn base_value(&self, xi: &[f64]) -> f64 {
        match &self.base {
            Base::Tv => norm(xi),
            Base::AnisotropicTv(a) => weighted_norm(xi, a),
            Base::Area => {
                let r = norm(xi);
                libm::sqrt(1.0 + r * r)
            }
            Base::Plasticity => {
                let r = norm(xi);
                if r <= 1.0 {
                    0.5 * r * r
                } else {
                    r - 0.5
                }
            }
            Base::Radial(rad) => rad.profile.value(norm(xi)),
        }
    }

    fn base_asymptotic(&self, xi: &[f64]) -> f64 {
        match &self.base {
            Base::Tv | Base::Area | Base::Plasticity => norm(xi),
            Base::AnisotropicTv(a) => weighted_norm(xi, a),
            Base::Radial(rad) => rad.slope * norm(xi),
        }
    }
}

impl Radial {
    /// Solves `s + μ φ'(s) = r` for `s ∈ [0, r]`.
    fn prox_radius(&self, r: f64, mu: f64) -> Result<f64> {
        if r <= mu * self.slope0 {
            return Ok(0.0);
        }
        let phi = &self.profile;
        increasing_root(
            |s| {
                let d = phi.derivative(s);
                let h = 1e-7 * (1.0 + s);
                let curvature = ((phi.derivative(s + h) - d) / h).max(0.0);
                (s + mu * d - r, 1.0 + mu * curvature)
            },
            0.0,
            r,
            RADIAL_TOL,
        )
    }

    /// `φ*(ρ) = sup_{s ≥ 0} ρ s − φ(s)`.
    fn conjugate(&self, rho: f64) -> Result<ExtendedValue> {
        let phi = &self.profile;
        if rho <= self.slope0 {
            return Ok(ExtendedValue::Finite(-phi.value(0.0)));
        }
        if rho < self.slope {
            // Bracket the maximizer where φ'(s) crosses ρ.
            let mut hi = 1.0;
            while phi.derivative(hi) < rho {
                hi *= 2.0;
                if hi > 1.0 / RADIAL_TOL {
                    break;
                }
            }
            if phi.derivative(hi) >= rho {
                let s = increasing_root(|s| (phi.derivative(s) - rho, 0.0), 0.0, hi, RADIAL_TOL)?;
                return Ok(ExtendedValue::Finite(rho * s - phi.value(s)));
            }
        }
        if rho > self.slope * (1.0 + RADIAL_TOL) + RADIAL_TOL {
            return Ok(ExtendedValue::PosInfinity);
        }
        // ρ at the recession slope: the supremand is nondecreasing, and
        // bounded only if it levels off. Within the domain slack ρ counts as
        // the slope itself.
        let rho = rho.min(self.slope);
        let far = 1.0 / RADIAL_TOL;
        let value = rho * far - phi.value(far);
        let further = 2.0 * rho * far - phi.value(2.0 * far);
        if !value.is_finite() || further - value > 1e-6 * (1.0 + libm::fabs(value)) {
            Ok(ExtendedValue::PosInfinity)
        } else {
            Ok(ExtendedValue::Finite(value))
        }
    }
}

/// Radius `s` with `s + μ s/√(1+s²) = r`.
fn area_prox_radius(r: f64, mu: f64) -> f64 {
    // g(s) is increasing and concave; Newton from a point left of the root
    // increases monotonically to it.
    let mut s = (r - mu).max(0.0);
    for _ in 0..100 {
        let q = libm::sqrt(1.0 + s * s);
        let g = s + mu * s / q - r;
        let dg = 1.0 + mu / (q * q * q);
        let next = s - g / dg;
        if next.partial_cmp(&s) != Some(core::cmp::Ordering::Greater) {
            break;
        }
        let done = next - s <= 1e-16 * (1.0 + next);
        s = next;
        if done {
            break;
        }
    }
    s.min(r)
}

/// Radius `q ∈ [0, 1)` with `q + s·q/√(1−q²) = r`.
fn area_conjugate_prox_radius(r: f64, s: f64) -> Result<f64> {
    let hi = r.min(1.0);
    increasing_root(
        |q| {
            let c = libm::sqrt(((1.0 - q) * (1.0 + q)).max(0.0));
            if c == 0.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            (q + s * q / c - r, 1.0 + s / (c * c * c))
        },
        0.0,
        hi,
        1e-16,
    )
}

/// Euclidean projection of `zeta` onto `{p : Σ (p_k / (radius·a_k))² ≤ 1}`.
fn project_ellipsoid(zeta: &mut [f64], axes: &[f64], radius: f64) -> Result<()> {
    let n = zeta.len();
    let mut semi = [0.0; MAX_DIM];
    for (s, a) in semi.iter_mut().zip(axes) {
        *s = a * radius;
    }
    let semi = &semi[..n];
    let level: f64 = zeta.iter().zip(semi).map(|(z, s)| (z / s) * (z / s)).sum();
    if level <= 1.0 {
        return Ok(());
    }
    // p_k = ζ_k s_k² / (s_k² + μ); φ(μ) = Σ (ζ_k s_k / (s_k² + μ))² − 1 is
    // convex decreasing, so Newton from a point left of the root increases
    // monotonically. `|ζ∘s| − max s²` is such a point.
    let smax = semi.iter().copied().fold(0.0, f64::max);
    let zs = libm::sqrt(zeta.iter().zip(semi).map(|(z, s)| z * z * s * s).sum::<f64>());
    let mut mu = (zs - smax * smax).max(0.0);
    let mut converged = false;
    for _ in 0..crate::scalar::MAX_ITERATIONS {
        let mut phi = -1.0;
        let mut dphi = 0.0;
        for (z, s) in zeta.iter().zip(semi) {
            let d = s * s + mu;
            let t = z * s / d;
            phi += t * t;
            dphi -= 2.0 * t * t / d;
        }
        if phi <= 4.0 * f64::EPSILON || dphi == 0.0 {
            converged = true;
            break;
        }
        let next = mu - phi / dphi;
        if next - mu <= 1e-16 * next {
            mu = next;
            converged = true;
            break;
        }
        mu = next;
    }
    if !converged {
        return Err(Error::ProxNotConverged {
            iterations: crate::scalar::MAX_ITERATIONS,
        });
    }
    for (z, s) in zeta.iter_mut().zip(semi) {
        *z *= s * s / (s * s + mu);
    }
    // Newton stops left of the root; a final radial rescale puts the point on
    // the boundary.
    let level: f64 = zeta.iter().zip(semi).map(|(z, s)| (z / s) * (z / s)).sum();
    if level > 1.0 {
        scale(zeta, 1.0 / libm::sqrt(level));
    }
    Ok(())
}

/// `η_k ← ζ_k/(1 + σ_k ν)`.
fn shrink(zeta: &mut [f64], sigmas: &[f64], nu: f64) {
    for (z, s) in zeta.iter_mut().zip(sigmas) {
        *z /= 1.0 + s * nu;
    }
}

/// `|η(ν)|²` and its derivative in `ν` for `η_k = ζ_k/(1 + σ_k ν)`.
fn shrunk_norm_sq(zeta: &[f64], sigmas: &[f64], nu: f64) -> (f64, f64) {
    let mut e2 = 0.0;
    let mut de2 = 0.0;
    for (z, s) in zeta.iter().zip(sigmas) {
        let d = 1.0 + s * nu;
        let e = z / d;
        e2 += e * e;
        de2 -= 2.0 * e * e * s / d;
    }
    (e2, de2)
}

/// Doubles `start` until `eval` turns positive.
fn bracket_above(start: f64, eval: impl Fn(f64) -> f64) -> Result<f64> {
    let mut hi = start.max(f64::MIN_POSITIVE);
    for _ in 0..2100 {
        if eval(hi) > 0.0 {
            return Ok(hi);
        }
        hi *= 2.0;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::ProxNotConverged {
        iterations: crate::scalar::MAX_ITERATIONS,
    })
}

/// `η_k = ζ_k/(1 + σ_k ν)` with the least `ν ≥ floor` such that `|η| ≤ radius`.
fn project_ball_diag(zeta: &mut [f64], sigmas: &[f64], radius: f64, floor: f64) -> Result<()> {
    let (e2, _) = shrunk_norm_sq(zeta, sigmas, floor);
    if e2 > radius * radius {
        // 1/|η(ν)| is affine in ν for equal steps, and nearly so otherwise.
        let eval = |nu: f64| {
            let (e2, de2) = shrunk_norm_sq(zeta, sigmas, nu);
            let inv = 1.0 / libm::sqrt(e2);
            (inv - 1.0 / radius, -0.5 * de2 * inv * inv * inv)
        };
        let z2: f64 = zeta.iter().map(|z| z * z).sum();
        let mean: f64 = zeta.iter().zip(sigmas).map(|(z, s)| z * z * s).sum::<f64>() / z2;
        let guess = (libm::sqrt(z2) / radius - 1.0) / mean;
        let smin = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = (libm::sqrt(z2) / radius / smin).max(floor) + floor;
        let hi = bracket_above(hi, |nu| eval(nu).0)?;
        let nu = increasing_root_from(eval, floor, hi, guess, 1e-16)?;
        shrink(zeta, sigmas, nu);
        // The root is only bracketed to rounding; land inside the ball.
        let e = norm(zeta);
        if e > radius {
            scale(zeta, radius / e);
        }
    } else {
        shrink(zeta, sigmas, floor);
    }
    Ok(())
}

fn check_step(step: f64) -> Result<()> {
    if step.is_finite() && step > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidOptions("proximal step must be positive and finite"))
    }
}

#[inline]
pub(crate) fn norm(v: &[f64]) -> f64 {
    match v {
        [a] => libm::fabs(*a),
        [a, b] => libm::hypot(*a, *b),
        _ => libm::sqrt(v.iter().map(|x| x * x).sum()),
    }
}

fn weighted_norm(v: &[f64], a: &[f64]) -> f64 {
    libm::sqrt(v.iter().zip(a).map(|(x, w)| (x * w) * (x * w)).sum())
}

fn scale(v: &mut [f64], s: f64) {
    for x in v {
        *x *= s;
    }
}
