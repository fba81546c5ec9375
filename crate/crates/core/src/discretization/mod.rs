//! Grids, quadrature and the fourth-order linear operator.
//!
//! Two truncations of the whole space are supported. A `Line` grid is the
//! periodic box `[-L, L)` in one dimension, where derivatives are evaluated
//! spectrally. A `Radial` grid is the ball of radius `R` in `N` dimensions
//! (2 ≤ N ≤ 7) restricted to radially symmetric functions, sampled at cell
//! centres and discretised with the conservative second-order Laplacian.
//!
//! All operators are self-adjoint with respect to the grid's quadrature
//! weights, so the discrete quadratic form `∫ f Δ²f` equals `∫ (Δf)²` exactly.

mod radial;
mod spectral;

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub use radial::unit_sphere_area;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GridKind {
    Line,
    Radial,
}

impl GridKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GridKind::Line => "line",
            GridKind::Radial => "radial",
        }
    }
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "line" => Ok(GridKind::Line),
            "radial" => Ok(GridKind::Radial),
            other => Err(Error::Parse(format!("unknown grid kind `{other}`"))),
        }
    }
}

/// Descriptor of a discretisation. Two grids are interchangeable exactly when
/// their descriptors are equal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    pub n: usize,
    /// Half-length `L` for line grids, radius `R` for radial grids.
    pub extent: f64,
    pub dim: usize,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            GridKind::Line if self.dim != 1 => return Err(Error::InvalidDimension { dim: self.dim, kind: "line" }),
            GridKind::Radial if !(2..=7).contains(&self.dim) => {
                return Err(Error::InvalidDimension { dim: self.dim, kind: "radial" })
            }
            _ => {}
        }
        if self.n < 8 {
            return Err(Error::InvalidSize(format!("n = {} (need n >= 8)", self.n)));
        }
        if !(self.extent.is_finite() && self.extent > 0.0) {
            return Err(Error::InvalidSize(format!("extent = {} (need a positive finite value)", self.extent)));
        }
        Ok(())
    }

    /// Node spacing: `2L/n` on a line, `R/n` radially.
    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Line => 2.0 * self.extent / self.n as f64,
            GridKind::Radial => self.extent / self.n as f64,
        }
    }

    /// Measure of the truncated domain.
    pub fn domain_measure(&self) -> f64 {
        match self.kind {
            GridKind::Line => 2.0 * self.extent,
            GridKind::Radial => unit_sphere_area(self.dim) * self.extent.powi(self.dim as i32) / self.dim as f64,
        }
    }
}

enum Operators {
    Spectral(spectral::Spectral),
    Radial(radial::Radial),
}

struct GridData {
    spec: GridSpec,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ops: Operators,
}

/// A constructed grid. Cloning is cheap; the FFT plan or stencil is shared
/// immutably between clones.
#[derive(Clone)]
pub struct Grid(Arc<GridData>);

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("spec", &self.0.spec).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

pub fn make_grid(kind: GridKind, n: usize, extent: f64, dim: usize) -> Result<Grid> {
    Grid::new(GridSpec { kind, n, extent, dim })
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Grid> {
        spec.validate()?;
        let (nodes, weights, ops) = match spec.kind {
            GridKind::Line => {
                let h = spec.spacing();
                let nodes = (0..spec.n).map(|i| -spec.extent + i as f64 * h).collect();
                let weights = vec![h; spec.n];
                (nodes, weights, Operators::Spectral(spectral::Spectral::new(spec.n, spec.extent)))
            }
            GridKind::Radial => {
                let r = radial::Radial::new(spec.n, spec.extent, spec.dim);
                let nodes = r.nodes();
                let weights = r.weights().to_vec();
                (nodes, weights, Operators::Radial(r))
            }
        };
        Ok(Grid(Arc::new(GridData { spec, nodes, weights, ops })))
    }

    pub fn spec(&self) -> &GridSpec {
        &self.0.spec
    }

    pub fn kind(&self) -> GridKind {
        self.0.spec.kind
    }

    pub fn dim(&self) -> usize {
        self.0.spec.dim
    }

    pub fn len(&self) -> usize {
        self.0.spec.n
    }

    pub fn is_empty(&self) -> bool {
        self.0.spec.n == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn zeros(&self) -> Field {
        Field { grid: self.clone(), values: vec![0.0; self.len()] }
    }

    pub fn field_from_fn(&self, f: impl Fn(f64) -> f64) -> Field {
        let values = self.nodes().iter().map(|&x| f(x)).collect();
        Field { grid: self.clone(), values }
    }

    /// Weighted sum `Σ w_i f_i`.
    pub fn integrate(&self, f: &Field) -> Result<f64> {
        self.check(f)?;
        Ok(self.quad(&f.values))
    }

    pub(crate) fn quad(&self, values: &[f64]) -> f64 {
        self.weights().iter().zip(values).map(|(w, f)| w * f).sum()
    }

    /// `∫ a b` on raw sample slices.
    pub(crate) fn quad2(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights().iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
    }

    fn check(&self, f: &Field) -> Result<()> {
        if &f.grid == self {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub(crate) fn laplacian_raw(&self, f: &[f64]) -> Vec<f64> {
        match &self.0.ops {
            Operators::Spectral(s) => s.multiply(f, |k| -k * k),
            Operators::Radial(r) => r.laplacian(f),
        }
    }

    pub(crate) fn bilaplacian_raw(&self, f: &[f64]) -> Vec<f64> {
        match &self.0.ops {
            Operators::Spectral(s) => s.multiply(f, |k| k.powi(4)),
            Operators::Radial(r) => r.laplacian(&r.laplacian(f)),
        }
    }

    /// Upper bound on the max-row-sum norm of the discrete `Δ²`.
    pub fn bilaplacian_norm_bound(&self) -> f64 {
        match &self.0.ops {
            Operators::Spectral(s) => s.max_wavenumber().powi(4),
            Operators::Radial(r) => r.laplacian_norm_bound().powi(2),
        }
    }

    /// Solves `(Δ² + λ) w = f`. `lambda` must already be validated as positive.
    pub(crate) fn solve_shifted_raw(&self, f: &[f64], lambda: f64) -> Vec<f64> {
        match &self.0.ops {
            Operators::Spectral(s) => s.multiply(f, |k| 1.0 / (k.powi(4) + lambda)),
            Operators::Radial(r) => r.solve_shifted(f, lambda),
        }
    }

    /// `∫ Δa Δb + λ ∫ a b` on raw slices.
    pub(crate) fn inner_raw(&self, a: &[f64], b: &[f64], lambda: f64) -> f64 {
        let la = self.laplacian_raw(a);
        let lb = if std::ptr::eq(a, b) { la.clone() } else { self.laplacian_raw(b) };
        self.quad2(&la, &lb) + lambda * self.quad2(a, b)
    }

    pub fn laplacian(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(Field { grid: self.clone(), values: self.laplacian_raw(&f.values) })
    }

    pub fn apply_bilaplacian(&self, f: &Field) -> Result<Field> {
        self.check(f)?;
        Ok(Field { grid: self.clone(), values: self.bilaplacian_raw(&f.values) })
    }

    pub fn solve_shifted_bilaplacian(&self, f: &Field, lambda: f64) -> Result<Field> {
        self.check(f)?;
        check_shift(lambda)?;
        Ok(Field { grid: self.clone(), values: self.solve_shifted_raw(&f.values, lambda) })
    }

    /// The weighted inner product `⟨f₁, f₂⟩_λ = ∫ Δf₁ Δf₂ + λ ∫ f₁ f₂`.
    pub fn inner_product_j(&self, f1: &Field, f2: &Field, lambda: f64) -> Result<f64> {
        self.check(f1)?;
        self.check(f2)?;
        check_shift(lambda)?;
        Ok(self.inner_raw(&f1.values, &f2.values, lambda))
    }

    pub fn norm_j(&self, f: &Field, lambda: f64) -> Result<f64> {
        self.inner_product_j(f, f, lambda).map(f64::sqrt)
    }

    /// Periodic translation `x ↦ f(x - shift)` by exact Fourier phase shift.
    pub fn spectral_shift(&self, f: &Field, shift: f64) -> Result<Field> {
        self.check(f)?;
        match &self.0.ops {
            Operators::Spectral(s) => Ok(Field { grid: self.clone(), values: s.shift(&f.values, shift) }),
            Operators::Radial(_) => Err(Error::RequiresLineGrid),
        }
    }

    /// Evaluates the field's continuous interpolant at arbitrary coordinates:
    /// the trigonometric interpolant on line grids (periodic), cubic Lagrange
    /// interpolation with even reflection at the origin and odd reflection at
    /// `R` on radial grids (zero outside the ball).
    pub fn interpolate(&self, f: &Field, points: &[f64]) -> Result<Vec<f64>> {
        self.check(f)?;
        Ok(match &self.0.ops {
            Operators::Spectral(s) => s.evaluate(&f.values, points),
            Operators::Radial(r) => r.interpolate(&f.values, points),
        })
    }
}

fn check_shift(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("shift lambda must be > 0, got {lambda}")))
    }
}

/// Free-function form of [`Grid::integrate`].
pub fn integrate(g: &Grid, f: &Field) -> Result<f64> {
    g.integrate(f)
}

pub fn apply_bilaplacian(g: &Grid, f: &Field) -> Result<Field> {
    g.apply_bilaplacian(f)
}

pub fn solve_shifted_bilaplacian(g: &Grid, f: &Field, lambda: f64) -> Result<Field> {
    g.solve_shifted_bilaplacian(f, lambda)
}

pub fn inner_product_j(g: &Grid, f1: &Field, f2: &Field, lambda: f64) -> Result<f64> {
    g.inner_product_j(f1, f2, lambda)
}

/// Real samples on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return Err(Error::InvalidSize(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite field value at node {i}")));
        }
        Ok(Field { grid: grid.clone(), values })
    }

    /// Skips the finiteness scan; for values produced by grid operators.
    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scale(&self, a: f64) -> Field {
        self.map(|v| a * v)
    }

    pub fn abs(&self) -> Field {
        self.map(f64::abs)
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Field) -> Result<Field> {
        self.zip_with(other, |x, y| x + a * y)
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Field { grid: self.grid.clone(), values })
    }

    /// Changes sign anywhere beyond `tol · sup|f|` in both directions.
    pub fn changes_sign(&self, tol: f64) -> bool {
        let thresh = tol * self.sup_norm();
        let pos = self.values.iter().any(|&v| v > thresh);
        let neg = self.values.iter().any(|&v| v < -thresh);
        pos && neg
    }
}
