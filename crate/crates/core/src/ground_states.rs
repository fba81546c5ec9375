//! Scalar and coupled ground states by projected gradient descent on the
//! Nehari manifold.
//!
//! Each iterate is `s ← P(s − τ ∇Φ(s))` where `∇Φ` is the Riesz gradient and
//! `P` the Nehari scaling; `τ` starts at `step0` and is halved until the
//! Armijo condition `Φ(P(s − τ∇Φ)) ≤ Φ(s) − c τ ‖∇Φ‖²` holds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{Field, Grid, GridKind};
use crate::error::{Error, Result};
use crate::variational::{self, EnergyBreakdown, Params, State};

/// Smallest Armijo step tried before an iteration is declared stalled.
const MIN_STEP: f64 = 1e-14;
/// Relative energy slack accepted per step; covers quadrature rounding.
const DESCENT_SLACK: f64 = 1e-12;
/// Iterations the energy must stay within `tol_energy` before convergence.
const CALM_ITERS: usize = 3;
/// Iterations without a 0.1% improvement of the best gradient norm before
/// the descent gives up at the rounding floor.
const STALL_ITERS: usize = 500;
/// Relative tail size allowed at the edge of the sampled region when
/// rescaling a profile.
const SUPPORT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub tol_grad: f64,
    pub tol_energy: f64,
    pub step0: f64,
    pub armijo: f64,
    pub multistart: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_iters: 20_000,
            tol_grad: 1e-7,
            tol_energy: 1e-12,
            step0: 1.0,
            armijo: 1e-4,
            multistart: 3,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.tol_grad > 0.0) {
            return bad("tol_grad must be > 0");
        }
        if !(self.tol_energy > 0.0) {
            return bad("tol_energy must be > 0");
        }
        if !(self.step0 > 0.0) {
            return bad("step0 must be > 0");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        if self.multistart < 1 {
            return bad("multistart must be >= 1");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iters: usize,
    pub final_energy: f64,
    /// Sup-norm of the Riesz gradient at the returned state.
    pub grad_norm: f64,
    /// Sup-norm of the strong-form residual of the stationary system.
    pub residual_sup: f64,
    /// `|Ψ| / ‖s‖²` at the returned state.
    pub psi_rel: f64,
    /// Smallest `‖s‖²` over accepted iterates.
    pub nehari_floor: f64,
    /// Largest Nehari scaling applied to an accepted iterate.
    pub t_history_max: f64,
    pub sign_fix_applied: bool,
    /// Scaling that projects `(|u|, |v|)` on the grid, if that projection exists.
    pub sign_fix_t: Option<f64>,
    /// Scaling for `(|u|, |v|)` from the moments of the converged state with
    /// `‖(|u|,|v|)‖` replaced by `‖(u,v)‖`, the form used in the sign argument.
    pub sign_fix_t_moment: Option<f64>,
    /// Whether either component of the returned state changes sign.
    pub changes_sign: bool,
    pub projection_failures: usize,
    /// Index of the initialisation that produced the result.
    pub start_index: usize,
    /// `Φ` over accepted iterates of the winning run.
    pub energy_trace: Vec<f64>,
}

fn relative_slack(phi: f64) -> f64 {
    DESCENT_SLACK * phi.abs().max(1.0)
}

/// Core descent loop on a state. `scalar_only` keeps `u ≡ 0`.
fn descend(p: &Params, init: &State, o: &SolveOptions) -> Result<(State, SolveReport)> {
    let (t0, mut s) = variational::nehari_project(p, init)?;
    let mut e = variational::energy(p, &s)?;
    let mut g = variational::gradient(p, &s)?;
    let mut gsup = g.sup_norm();
    let mut gg = variational::inner(p, &g, &g)?;
    let mut report = SolveReport {
        converged: false,
        iters: 0,
        final_energy: e.phi,
        grad_norm: gsup,
        residual_sup: 0.0,
        psi_rel: 0.0,
        nehari_floor: e.norm_sq,
        t_history_max: t0,
        sign_fix_applied: false,
        sign_fix_t: None,
        sign_fix_t_moment: None,
        changes_sign: false,
        projection_failures: 0,
        start_index: 0,
        energy_trace: vec![e.phi],
    };
    let mut calm = 0usize;
    let mut best_g = gsup;
    let mut stalled = 0usize;
    for it in 0..o.max_iters {
        if gsup <= o.tol_grad && calm >= CALM_ITERS {
            report.converged = true;
            break;
        }
        report.iters = it + 1;
        let mut tau = o.step0;
        let mut accepted = None;
        while tau >= MIN_STEP {
            match s.axpy(-tau, &g).and_then(|trial| variational::nehari_project(p, &trial)) {
                Ok((t, cand)) => {
                    let ec = variational::energy(p, &cand)?;
                    if ec.phi <= e.phi - o.armijo * tau * gg + relative_slack(e.phi) {
                        accepted = Some((t, cand, ec));
                        break;
                    }
                }
                Err(_) => report.projection_failures += 1,
            }
            tau *= 0.5;
        }
        let Some((t, cand, ec)) = accepted else {
            // No decrease is measurable any more; converged only if the gradient is.
            report.converged = gsup <= o.tol_grad;
            break;
        };
        let dphi = (e.phi - ec.phi).abs();
        calm = if dphi <= o.tol_energy * e.phi.abs().max(1.0) { calm + 1 } else { 0 };
        s = cand;
        e = ec;
        g = variational::gradient(p, &s)?;
        gsup = g.sup_norm();
        gg = variational::inner(p, &g, &g)?;
        report.t_history_max = report.t_history_max.max(t);
        report.nehari_floor = report.nehari_floor.min(e.norm_sq);
        report.energy_trace.push(e.phi);
        if gsup < 0.999 * best_g {
            best_g = gsup;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_ITERS {
                break;
            }
        }
    }
    if !report.converged && gsup <= o.tol_grad && calm >= CALM_ITERS {
        report.converged = true;
    }
    report.final_energy = e.phi;
    report.grad_norm = gsup;
    Ok((s, report))
}

/// Replaces `s` by the projection of `(|u|, |v|)` when that does not raise
/// the energy. Records both the grid scaling and the moment-form scaling.
fn apply_sign_fix(p: &Params, s: State, report: &mut SolveReport) -> Result<State> {
    let e = variational::energy(p, &s)?;
    let abs = s.abs();
    let cross_abs: f64 = {
        let g = s.grid();
        let uv: Vec<f64> = s.u.values().iter().zip(s.v.values()).map(|(a, b)| a * a * b.abs()).collect();
        g.quad(&uv)
    };
    report.sign_fix_t_moment =
        variational::nehari_scaling(e.norm_sq, e.quartic, 0.5 * e.cubic_abs + 1.5 * p.beta * cross_abs).ok();
    let negative = s.u.values().iter().chain(s.v.values()).any(|&x| x < 0.0);
    match variational::nehari_project(p, &abs) {
        Ok((t, cand)) => {
            report.sign_fix_t = Some(t);
            if !negative {
                return Ok(s);
            }
            let ec = variational::energy(p, &cand)?;
            if ec.phi <= e.phi + relative_slack(e.phi) {
                report.sign_fix_applied = true;
                report.final_energy = ec.phi;
                return Ok(cand);
            }
            Ok(s)
        }
        Err(_) => Ok(s),
    }
}

/// Sup-norm of the strong residuals of both equations.
pub fn strong_residual(p: &Params, s: &State) -> Result<f64> {
    p.check_grid(s.grid())?;
    let g = s.grid();
    let (u, v) = (s.u.values(), s.v.values());
    let du = g.bilaplacian_raw(u);
    let dv = g.bilaplacian_raw(v);
    let mut worst: f64 = 0.0;
    for i in 0..u.len() {
        let (a, b) = (u[i], v[i]);
        let r1 = du[i] + p.lambda1 * a - a * a * a - p.beta * a * b;
        let r2 = dv[i] + p.lambda2 * b - 0.5 * b.abs() * b - 0.5 * p.beta * a * a;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    Ok(worst)
}

fn finish(p: &Params, s: &State, report: &mut SolveReport) -> Result<()> {
    let e: EnergyBreakdown = variational::energy(p, s)?;
    report.final_energy = e.phi;
    report.psi_rel = e.psi(p.beta).abs() / e.norm_sq;
    report.residual_sup = strong_residual(p, s)?;
    report.grad_norm = variational::gradient(p, s)?.sup_norm();
    report.changes_sign = s.u.changes_sign(1e-12) || s.v.changes_sign(1e-12);
    Ok(())
}

fn scalar_params(lambda: f64, g: &Grid) -> Result<Params> {
    let dim = match g.kind() {
        GridKind::Line => 1,
        GridKind::Radial => g.dim(),
    };
    Params::new(lambda, lambda, 0.0, dim)
}

/// Positive Gaussian bump of amplitude `2λ` and width `λ^{-1/4}`.
pub fn scalar_initial_guess(lambda: f64, g: &Grid) -> Field {
    let width = lambda.powf(-0.25);
    g.field_from_fn(|x| 2.0 * lambda * (-(x / width).powi(2)).exp())
}

/// Ground state of `Δ²v + λv = ½|v|v`: minimiser of
/// `I(v) = ½‖v‖² − ⅙∫|v|³` over `{‖v‖² = ½∫|v|³}`.
pub fn solve_scalar_ground(lambda: f64, g: &Grid, o: &SolveOptions) -> Result<(Field, SolveReport)> {
    solve_scalar_ground_from(lambda, &scalar_initial_guess(lambda, g), o)
}

pub fn solve_scalar_ground_from(lambda: f64, init: &Field, o: &SolveOptions) -> Result<(Field, SolveReport)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be > 0, got {lambda}")));
    }
    o.validate()?;
    let g = init.grid();
    let cubic: f64 = g.quad(&init.values().iter().map(|v| (v * v * v).abs()).collect::<Vec<_>>());
    if !(cubic > 0.0) {
        return Err(Error::DegenerateInit("∫|v|³ = 0 for the initial guess".into()));
    }
    let p = scalar_params(lambda, g)?;
    let (s, mut report) = descend(&p, &State::semi_trivial(init), o)?;
    finish(&p, &s, &mut report)?;
    Ok((s.v, report))
}

/// `x ↦ λ₂ V(λ₂^{1/4} x)` sampled on `target`.
pub fn rescale_ground_onto(v: &Field, lambda2: f64, target: &Grid) -> Result<Field> {
    if !(lambda2.is_finite() && lambda2 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda2 must be > 0, got {lambda2}")));
    }
    let source = v.grid();
    if source.kind() != target.kind() || source.dim() != target.dim() {
        return Err(Error::GridMismatch);
    }
    if lambda2 == 1.0 && source == target {
        return Ok(v.clone());
    }
    let stretch = lambda2.powf(0.25);
    let reach = stretch * target.spec().extent;
    let rho = 0.9 * reach.min(source.spec().extent);
    let tail =
        source.nodes().iter().zip(v.values()).filter(|(x, _)| x.abs() >= rho).fold(0.0f64, |m, (_, f)| m.max(f.abs()));
    if tail > SUPPORT_TOL * v.sup_norm() {
        return Err(Error::Support(format!(
            "profile still has relative size {:.3e} at |x| = {rho:.3} (lambda2 = {lambda2})",
            tail / v.sup_norm()
        )));
    }
    let points: Vec<f64> = target.nodes().iter().map(|x| stretch * x).collect();
    let values = source.interpolate(v, &points)?.into_iter().map(|f| lambda2 * f).collect();
    Field::new(target, values)
}

pub fn rescale_ground(v: &Field, lambda2: f64) -> Result<Field> {
    rescale_ground_onto(v, lambda2, v.grid())
}

/// `∫V₂^p = λ₂^{p − N/4} ∫V^p`.
pub fn scaled_moment(m_p: f64, p: f64, lambda2: f64, dim: usize) -> Result<f64> {
    if !(lambda2.is_finite() && lambda2 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda2 must be > 0, got {lambda2}")));
    }
    Ok(lambda2.powf(p - dim as f64 / 4.0) * m_p)
}

/// Default initialisations: `(0.1 V₂, V₂)`, `(V₂, V₂)` and a seeded random
/// pair of positive bumps, truncated to `multistart` entries.
pub fn default_initializations(v2: &Field, lambda2: f64, o: &SolveOptions) -> Vec<State> {
    let g = v2.grid();
    let mut inits = vec![State { u: v2.scale(0.1), v: v2.clone() }, State { u: v2.clone(), v: v2.clone() }];
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    let amp = v2.sup_norm().max(2.0 * lambda2);
    let width = lambda2.powf(-0.25);
    let line = g.kind() == GridKind::Line;
    while inits.len() < o.multistart {
        let mut bump = || {
            let a = amp * rng.gen_range(0.5..1.5);
            let w = width * rng.gen_range(0.7..1.5);
            let c = if line { width * rng.gen_range(-0.5..0.5) } else { 0.0 };
            g.field_from_fn(move |x| a * (-((x - c) / w).powi(2)).exp())
        };
        let u = bump();
        let v = bump();
        inits.push(State { u, v });
    }
    inits.truncate(o.multistart);
    inits
}

/// Coupled ground state: minimiser of `Φ` on the Nehari manifold.
pub fn solve_coupled_ground(p: &Params, g: &Grid, o: &SolveOptions) -> Result<(State, SolveReport)> {
    p.validate()?;
    p.check_grid(g)?;
    o.validate()?;
    let (v2, _) = solve_scalar_ground(p.lambda2, g, o)?;
    let inits = default_initializations(&v2, p.lambda2, o);
    solve_coupled_ground_from(p, &inits, o)
}

/// Runs the descent from each initialisation, applies the sign fix to each
/// result and returns the lowest-energy outcome (converged runs first).
pub fn solve_coupled_ground_from(p: &Params, inits: &[State], o: &SolveOptions) -> Result<(State, SolveReport)> {
    p.validate()?;
    o.validate()?;
    if inits.is_empty() {
        return Err(Error::InvalidParameter("at least one initialization is required".into()));
    }
    let mut best: Option<(State, SolveReport)> = None;
    let mut last_err = None;
    for (idx, init) in inits.iter().enumerate() {
        p.check_grid(init.grid())?;
        let (s, mut report) = match descend(p, init, o) {
            Ok(r) => r,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let s = apply_sign_fix(p, s, &mut report)?;
        finish(p, &s, &mut report)?;
        report.start_index = idx;
        let better = match &best {
            None => true,
            Some((_, b)) => {
                (report.converged && !b.converged)
                    || (report.converged == b.converged && report.final_energy < b.final_energy)
            }
        };
        if better {
            best = Some((s, report));
        }
    }
    best.ok_or_else(|| last_err.unwrap_or(Error::NonConvergence("no initialization succeeded".into())))
}
