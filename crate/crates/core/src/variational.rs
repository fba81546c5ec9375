//! Energy functional, Nehari functionals, derivatives and Nehari projection.
//!
//! For a state `s = (u, v)` and parameters `(λ₁, λ₂, β)`:
//!
//! ```text
//! Φ(s)  = ½‖u‖₁² − ¼∫u⁴ + ½‖v‖₂² − ⅙∫|v|³ − ½β∫u²v
//! Ψ(s)  = Φ'(s)[s] = ‖s‖² − ∫u⁴ − ½∫|v|³ − (3/2)β∫u²v
//! ```
//!
//! with `‖f‖_j² = ∫(Δf)² + λ_j∫f²`. The absolute values are kept
//! sign-exact; nothing is smoothed.

use crate::discretization::{Field, Grid, GridKind};
use crate::error::{Error, Result};

/// Relative tolerance for declaring a state on the Nehari manifold:
/// `|Ψ(s)| ≤ TOL_PSI · ‖s‖²`.
pub const TOL_PSI: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub dim: usize,
}

impl Params {
    pub fn new(lambda1: f64, lambda2: f64, beta: f64, dim: usize) -> Result<Params> {
        let p = Params { lambda1, lambda2, beta, dim };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda1.is_finite() && self.lambda1 > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda1 must be > 0, got {}", self.lambda1)));
        }
        if !(self.lambda2.is_finite() && self.lambda2 > 0.0) {
            return Err(Error::InvalidParameter(format!("lambda2 must be > 0, got {}", self.lambda2)));
        }
        if !self.beta.is_finite() {
            return Err(Error::InvalidParameter(format!("beta must be finite, got {}", self.beta)));
        }
        if !(1..=7).contains(&self.dim) {
            return Err(Error::InvalidDimension { dim: self.dim, kind: "parameter" });
        }
        Ok(())
    }

    /// The existence results assume a positive coupling.
    pub fn outside_theorem_range(&self) -> bool {
        self.beta <= 0.0
    }

    pub fn with_beta(self, beta: f64) -> Params {
        Params { beta, ..self }
    }

    pub fn with_lambda2(self, lambda2: f64) -> Params {
        Params { lambda2, ..self }
    }

    /// Checks that the grid discretises the space these parameters live in:
    /// a line grid for `N = 1`, a radial grid of matching dimension otherwise.
    pub fn check_grid(&self, g: &Grid) -> Result<()> {
        let ok = match g.kind() {
            GridKind::Line => self.dim == 1,
            GridKind::Radial => self.dim == g.dim(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDimension { dim: self.dim, kind: g.kind().as_str() })
        }
    }
}

/// An element `(u, v)` of the product space.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn new(u: Field, v: Field) -> Result<State> {
        if u.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(State { u, v })
    }

    pub fn zeros(g: &Grid) -> State {
        State { u: g.zeros(), v: g.zeros() }
    }

    /// The semi-trivial state `(0, v)`.
    pub fn semi_trivial(v: &Field) -> State {
        State { u: v.grid().zeros(), v: v.clone() }
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    pub fn scale(&self, a: f64) -> State {
        State { u: self.u.scale(a), v: self.v.scale(a) }
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &State) -> Result<State> {
        Ok(State { u: self.u.axpy(a, &other.u)?, v: self.v.axpy(a, &other.v)? })
    }

    pub fn abs(&self) -> State {
        State { u: self.u.abs(), v: self.v.abs() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.sup_norm().max(self.v.sup_norm())
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }

    fn check(&self, other: &State) -> Result<()> {
        if self.grid() == other.grid() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// The product inner product `⟨s₁, s₂⟩ = ⟨u₁, u₂⟩₁ + ⟨v₁, v₂⟩₂`.
pub fn inner(p: &Params, a: &State, b: &State) -> Result<f64> {
    a.check(b)?;
    let g = a.grid();
    Ok(g.inner_raw(a.u.values(), b.u.values(), p.lambda1) + g.inner_raw(a.v.values(), b.v.values(), p.lambda2))
}

pub fn norm_sq(p: &Params, s: &State) -> f64 {
    let g = s.grid();
    g.inner_raw(s.u.values(), s.u.values(), p.lambda1) + g.inner_raw(s.v.values(), s.v.values(), p.lambda2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown {
    pub phi: f64,
    pub i1: f64,
    pub i2: f64,
    /// `−½β∫u²v`.
    pub coupling: f64,
    /// `‖s‖² = ‖u‖₁² + ‖v‖₂²`.
    pub norm_sq: f64,
    pub norm_u_sq: f64,
    pub norm_v_sq: f64,
    /// `∫u⁴`.
    pub quartic: f64,
    /// `∫|v|³`.
    pub cubic_abs: f64,
    /// `∫u²v`.
    pub cross: f64,
}

impl EnergyBreakdown {
    pub fn psi(&self, beta: f64) -> f64 {
        self.norm_sq - self.quartic - 0.5 * self.cubic_abs - 1.5 * beta * self.cross
    }

    pub fn psi_derivative_diag(&self, beta: f64) -> f64 {
        2.0 * self.norm_sq - 4.0 * self.quartic - 1.5 * self.cubic_abs - 4.5 * beta * self.cross
    }

    /// The cubic coefficient of the projection quadratic,
    /// `½∫|v|³ + (3/2)β∫u²v`.
    pub fn projection_cubic(&self, beta: f64) -> f64 {
        0.5 * self.cubic_abs + 1.5 * beta * self.cross
    }

    pub fn on_manifold(&self, beta: f64) -> bool {
        self.psi(beta).abs() <= TOL_PSI * self.norm_sq
    }
}

fn check_state(p: &Params, s: &State) -> Result<()> {
    p.check_grid(s.grid())
}

pub fn energy(p: &Params, s: &State) -> Result<EnergyBreakdown> {
    check_state(p, s)?;
    let g = s.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let norm_u_sq = g.inner_raw(u, u, p.lambda1);
    let norm_v_sq = g.inner_raw(v, v, p.lambda2);
    let mut quartic = 0.0;
    let mut cubic_abs = 0.0;
    let mut cross = 0.0;
    for ((w, &a), &b) in g.weights().iter().zip(u).zip(v) {
        let a2 = a * a;
        quartic += w * a2 * a2;
        cubic_abs += w * (b * b * b).abs();
        cross += w * a2 * b;
    }
    let i1 = 0.5 * norm_u_sq - 0.25 * quartic;
    let i2 = 0.5 * norm_v_sq - cubic_abs / 6.0;
    let coupling = -0.5 * p.beta * cross;
    Ok(EnergyBreakdown {
        phi: i1 + i2 + coupling,
        i1,
        i2,
        coupling,
        norm_sq: norm_u_sq + norm_v_sq,
        norm_u_sq,
        norm_v_sq,
        quartic,
        cubic_abs,
        cross,
    })
}

/// `Ψ(s) = Φ'(s)[s]`.
pub fn nehari_value(p: &Params, s: &State) -> Result<f64> {
    Ok(energy(p, s)?.psi(p.beta))
}

/// `Ψ'(s)[s]`.
pub fn nehari_derivative_diag(p: &Params, s: &State) -> Result<f64> {
    Ok(energy(p, s)?.psi_derivative_diag(p.beta))
}

/// Riesz representative of `Φ'(s)` in the product inner product:
/// `(u − (Δ²+λ₁)⁻¹(u³ + βuv), v − (Δ²+λ₂)⁻¹(½|v|v + ½βu²))`.
pub fn gradient(p: &Params, s: &State) -> Result<State> {
    check_state(p, s)?;
    let g = s.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let fu: Vec<f64> = u.iter().zip(v).map(|(&a, &b)| a * a * a + p.beta * a * b).collect();
    let fv: Vec<f64> = u.iter().zip(v).map(|(&a, &b)| 0.5 * b.abs() * b + 0.5 * p.beta * a * a).collect();
    let ku = g.solve_shifted_raw(&fu, p.lambda1);
    let kv = g.solve_shifted_raw(&fv, p.lambda2);
    let gu = u.iter().zip(&ku).map(|(a, k)| a - k).collect();
    let gv = v.iter().zip(&kv).map(|(b, k)| b - k).collect();
    Ok(State { u: Field::from_raw(g, gu), v: Field::from_raw(g, gv) })
}

/// `Φ'(s)[h]` evaluated directly from the derivative formula.
pub fn derivative(p: &Params, s: &State, h: &State) -> Result<f64> {
    check_state(p, s)?;
    s.check(h)?;
    let g = s.grid();
    let (u, v, h1, h2) = (s.u.values(), s.v.values(), h.u.values(), h.v.values());
    let lin = g.inner_raw(u, h1, p.lambda1) + g.inner_raw(v, h2, p.lambda2);
    let mut nl = 0.0;
    for i in 0..u.len() {
        let (a, b) = (u[i], v[i]);
        nl += g.weights()[i]
            * ((a * a * a + p.beta * a * b) * h1[i] + (0.5 * b.abs() * b + 0.5 * p.beta * a * a) * h2[i]);
    }
    Ok(lin - nl)
}

/// `Ψ'(s)[h] = 2⟨s,h⟩ − 4∫u³h₁ − (3/2)∫|v|v h₂ − 3β∫uv h₁ − (3/2)β∫u²h₂`.
pub fn nehari_derivative(p: &Params, s: &State, h: &State) -> Result<f64> {
    check_state(p, s)?;
    s.check(h)?;
    let g = s.grid();
    let (u, v, h1, h2) = (s.u.values(), s.v.values(), h.u.values(), h.v.values());
    let lin = 2.0 * (g.inner_raw(u, h1, p.lambda1) + g.inner_raw(v, h2, p.lambda2));
    let mut nl = 0.0;
    for i in 0..u.len() {
        let (a, b) = (u[i], v[i]);
        nl += g.weights()[i]
            * ((4.0 * a * a * a + 3.0 * p.beta * a * b) * h1[i] + (1.5 * b.abs() * b + 1.5 * p.beta * a * a) * h2[i]);
    }
    Ok(lin - nl)
}

/// Riesz representative of `Ψ'(s)`, the normal of the Nehari manifold at `s`.
pub fn nehari_normal(p: &Params, s: &State) -> Result<State> {
    check_state(p, s)?;
    let g = s.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let fu: Vec<f64> = u.iter().zip(v).map(|(&a, &b)| 4.0 * a * a * a + 3.0 * p.beta * a * b).collect();
    let fv: Vec<f64> = u.iter().zip(v).map(|(&a, &b)| 1.5 * b.abs() * b + 1.5 * p.beta * a * a).collect();
    let ku = g.solve_shifted_raw(&fu, p.lambda1);
    let kv = g.solve_shifted_raw(&fv, p.lambda2);
    let nu = u.iter().zip(&ku).map(|(a, k)| 2.0 * a - k).collect();
    let nv = v.iter().zip(&kv).map(|(b, k)| 2.0 * b - k).collect();
    Ok(State { u: Field::from_raw(g, nu), v: Field::from_raw(g, nv) })
}

/// Gradient of `Φ` restricted to the Nehari manifold: the Riesz gradient
/// with its component along the manifold normal removed.
pub fn constrained_gradient(p: &Params, s: &State) -> Result<State> {
    let grad = gradient(p, s)?;
    let normal = nehari_normal(p, s)?;
    let nn = inner(p, &normal, &normal)?;
    if nn == 0.0 {
        return Ok(grad);
    }
    let c = inner(p, &grad, &normal)? / nn;
    grad.axpy(-c, &normal)
}

/// `Φ''(s)[h]² = ‖h‖² − 3∫u²h₁² − ∫|v|h₂² − β∫v h₁² − 2β∫u h₁h₂`.
pub fn hessian_form(p: &Params, s: &State, h: &State) -> Result<f64> {
    check_state(p, s)?;
    s.check(h)?;
    let g = s.grid();
    let (u, v, h1, h2) = (s.u.values(), s.v.values(), h.u.values(), h.v.values());
    let quad = norm_sq(p, h);
    let mut rest = 0.0;
    for i in 0..u.len() {
        let (a, b, x, y) = (u[i], v[i], h1[i], h2[i]);
        rest +=
            g.weights()[i] * (3.0 * a * a * x * x + b.abs() * y * y + p.beta * b * x * x + 2.0 * p.beta * a * x * y);
    }
    Ok(quad - rest)
}

/// Positive root of `A − B t² − C t = 0`, the scaling that places `t·s` on
/// the Nehari manifold when `A = ‖s‖²`, `B = ∫u⁴`,
/// `C = ½∫|v|³ + (3/2)β∫u²v`.
pub fn nehari_scaling(a: f64, b: f64, c: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::ZeroState);
    }
    if b == 0.0 {
        return if c > 0.0 { Ok(a / c) } else { Err(Error::NoPositiveRoot { cubic: c }) };
    }
    let disc = (c * c + 4.0 * a * b).sqrt();
    // The two algebraically equal forms avoid cancellation for either sign of C.
    Ok(if c >= 0.0 { 2.0 * a / (c + disc) } else { (disc - c) / (2.0 * b) })
}

/// Scales `s` onto the Nehari manifold. Returns the scaling `t` and `t·s`.
pub fn nehari_project(p: &Params, s: &State) -> Result<(f64, State)> {
    if s.is_zero() {
        return Err(Error::ZeroState);
    }
    let e = energy(p, s)?;
    let t = nehari_scaling(e.norm_sq, e.quartic, e.projection_cubic(p.beta))?;
    Ok((t, s.scale(t)))
}

/// `Φ` restricted to the manifold, `⅙‖s‖² + (1/12)∫u⁴`.
pub fn constrained_energy(p: &Params, s: &State) -> Result<f64> {
    let e = energy(p, s)?;
    let psi = e.psi(p.beta);
    let allowed = TOL_PSI * e.norm_sq;
    if psi.abs() > allowed || e.norm_sq == 0.0 {
        return Err(Error::OffManifold { psi: psi.abs(), allowed });
    }
    Ok(constrained_energy_from_moments(e.norm_sq, e.quartic))
}

pub fn constrained_energy_from_moments(norm_sq: f64, quartic: f64) -> f64 {
    norm_sq / 6.0 + quartic / 12.0
}
