//! Critical coupling, classification of the semi-trivial solution, the
//! explicit trial state `w = t(V₂, V₂)` and a string-method estimate of the
//! mountain-pass level between `v₂ = (0, V₂)` and a ground state.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::{Field, Grid, GridKind};
use crate::error::{Error, Result};
use crate::ground_states::{rescale_ground, SolveOptions};
use crate::variational::{self, Params, State};

/// Relative change of the Rayleigh quotient that stops the inverse iteration.
const RAYLEIGH_TOL: f64 = 1e-10;
/// Relative classification tolerance on `Q(h) / ‖h‖²`.
const CLASSIFY_TOL: f64 = 1e-8;

/// A smooth random field: three Gaussian bumps with random signs, centres and
/// widths on the length scale `length`. Radial centres are non-negative.
pub fn smooth_random_field(g: &Grid, length: f64, rng: &mut impl Rng) -> Field {
    let line = g.kind() == GridKind::Line;
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let a = rng.gen_range(-1.0..1.0);
            let c = if line { rng.gen_range(-3.0..3.0) } else { rng.gen_range(0.0..3.0) } * length;
            let w = rng.gen_range(0.3..1.5) * length;
            (a, c, w)
        })
        .collect();
    g.field_from_fn(|x| bumps.iter().map(|&(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())
}

#[derive(Clone, Debug)]
pub struct CriticalCoupling {
    /// `Λ = inf ‖φ‖₁² / ∫V₂φ²`.
    pub lambda: f64,
    /// Minimiser normalised to `‖h̃‖₁ = 1`.
    pub minimizer: Field,
    pub iters: usize,
}

/// `‖φ‖₁² / ∫V₂φ²`, or an error if the denominator is not positive.
pub fn rayleigh_quotient(lambda1: f64, v2: &Field, phi: &Field) -> Result<f64> {
    let g = v2.grid();
    if phi.grid() != g {
        return Err(Error::GridMismatch);
    }
    let num = g.inner_raw(phi.values(), phi.values(), lambda1);
    let den = weighted_square(v2, phi);
    if !(den > 0.0) {
        return Err(Error::NonPositiveWeight(den));
    }
    Ok(num / den)
}

fn weighted_square(v2: &Field, phi: &Field) -> f64 {
    let g = v2.grid();
    let prod: Vec<f64> = v2.values().iter().zip(phi.values()).map(|(v, f)| v * f * f).collect();
    g.quad(&prod)
}

/// Inverse iteration `φ ← (Δ² + λ₁)⁻¹(V₂ φ)` for the smallest quotient.
///
/// The operator is compact and self-adjoint in `⟨·,·⟩₁`, so the iteration
/// converges to the eigenfunction with the largest eigenvalue `1/Λ`.
pub fn lambda_threshold(lambda1: f64, v2: &Field, o: &SolveOptions) -> Result<CriticalCoupling> {
    if !(lambda1.is_finite() && lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda1 must be > 0, got {lambda1}")));
    }
    let g = v2.grid();
    let mut phi = v2.abs();
    let mut prev = rayleigh_quotient(lambda1, v2, &phi)?;
    for it in 1..=o.max_iters.max(1) {
        let rhs: Vec<f64> = v2.values().iter().zip(phi.values()).map(|(v, f)| v * f).collect();
        let next = g.solve_shifted_raw(&rhs, lambda1);
        let norm = g.inner_raw(&next, &next, lambda1).sqrt();
        if !(norm > 0.0) {
            return Err(Error::NonPositiveWeight(0.0));
        }
        phi = Field::from_raw(g, next.into_iter().map(|x| x / norm).collect());
        let q = rayleigh_quotient(lambda1, v2, &phi)?;
        if (q - prev).abs() <= RAYLEIGH_TOL * q {
            return Ok(CriticalCoupling { lambda: q, minimizer: phi, iters: it });
        }
        prev = q;
    }
    Err(Error::NonConvergence(format!("inverse iteration for the critical coupling after {} steps", o.max_iters)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    LocalMin,
    Saddle,
    Marginal,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::LocalMin => "local-min",
            Verdict::Saddle => "saddle",
            Verdict::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub lambda_crit: f64,
    pub beta: f64,
    pub verdict: Verdict,
    /// Hessian form at `(0, V₂)` along `(h̃, 0)`.
    pub witness_value: f64,
    /// `∫V₂h̃²`.
    pub witness_weight: f64,
    pub tangent_samples: usize,
    /// Number of random tangent samples with a normalised value above tolerance.
    pub positive_samples: usize,
    /// Smallest `Q(h) / ‖h‖²` over the random tangent samples.
    pub min_sample: f64,
    /// Largest `|Ψ'(v₂)[h] − J₂'(V₂)[h₂]| / ‖h‖` over the samples.
    pub tangency_defect: f64,
}

/// `J₂'(V₂)[h] = 2⟨V₂, h⟩₂ − (3/2)∫|V₂|V₂h`.
pub fn scalar_nehari_derivative(lambda2: f64, v2: &Field, h: &Field) -> f64 {
    let g = v2.grid();
    let nl: Vec<f64> = v2.values().iter().zip(h.values()).map(|(v, h)| v.abs() * v * h).collect();
    2.0 * g.inner_raw(v2.values(), h.values(), lambda2) - 1.5 * g.quad(&nl)
}

/// Classifies `v₂ = (0, V₂)` by the sign of the Hessian form on the tangent
/// space of the Nehari manifold.
///
/// The witness direction is `(h̃, 0)`. Random directions `(h₁, h₂)` have
/// `h₂` projected so that `J₂'(V₂)[h₂] = 0`. Values are compared relative to
/// `‖h‖²`.
pub fn classify_semitrivial(
    p: &Params,
    v2: &Field,
    cc: &CriticalCoupling,
    samples: usize,
    seed: u64,
) -> Result<Classification> {
    p.check_grid(v2.grid())?;
    let g = v2.grid();
    let base = State::semi_trivial(v2);
    let h_tilde = State { u: cc.minimizer.clone(), v: g.zeros() };
    let witness_value = variational::hessian_form(p, &base, &h_tilde)?;
    let witness_weight = weighted_square(v2, &cc.minimizer);
    let witness_rel = witness_value / variational::norm_sq(p, &h_tilde);

    let denom = scalar_nehari_derivative(p.lambda2, v2, v2);
    if denom == 0.0 {
        return Err(Error::DegenerateInit("J2'(V2)[V2] = 0; V2 is not a ground state".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = p.lambda2.powf(-0.25);
    let mut min_sample = f64::INFINITY;
    let mut positive = 0;
    let mut tangency_defect: f64 = 0.0;
    for _ in 0..samples {
        let h1 = smooth_random_field(g, length, &mut rng);
        let raw = smooth_random_field(g, length, &mut rng);
        let c = scalar_nehari_derivative(p.lambda2, v2, &raw) / denom;
        let h2 = raw.axpy(-c, v2)?;
        let h = State { u: h1, v: h2 };
        let hn = variational::norm_sq(p, &h);
        let q = variational::hessian_form(p, &base, &h)? / hn;
        let defect = (variational::nehari_derivative(p, &base, &h)? - scalar_nehari_derivative(p.lambda2, v2, &h.v))
            .abs()
            / hn.sqrt();
        tangency_defect = tangency_defect.max(defect);
        min_sample = min_sample.min(q);
        if q > CLASSIFY_TOL {
            positive += 1;
        }
    }
    let verdict = if witness_rel < -CLASSIFY_TOL {
        Verdict::Saddle
    } else if witness_rel > CLASSIFY_TOL && positive == samples {
        Verdict::LocalMin
    } else {
        Verdict::Marginal
    };
    Ok(Classification {
        lambda_crit: cc.lambda,
        beta: p.beta,
        verdict,
        witness_value,
        witness_weight,
        tangent_samples: samples,
        positive_samples: positive,
        min_sample,
        tangency_defect,
    })
}

/// Moments of the unit-parameter ground state `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitMoments {
    /// `∫V²`
    pub quad: f64,
    /// `∫V³`
    pub cubic: f64,
    /// `∫|V|³`; equals `cubic` when `V ≥ 0`.
    pub cubic_abs: f64,
    /// `∫V⁴`
    pub quartic: f64,
}

impl UnitMoments {
    pub fn from_field(v: &Field) -> UnitMoments {
        let g = v.grid();
        let mut m = UnitMoments { quad: 0.0, cubic: 0.0, cubic_abs: 0.0, quartic: 0.0 };
        for (w, &x) in g.weights().iter().zip(v.values()) {
            let x2 = x * x;
            m.quad += w * x2;
            m.cubic += w * x2 * x;
            m.cubic_abs += w * (x2 * x).abs();
            m.quartic += w * x2 * x2;
        }
        m
    }

    /// Moments of a non-negative profile: `∫|V|³ = ∫V³`.
    pub fn positive(quad: f64, cubic: f64, quartic: f64) -> UnitMoments {
        UnitMoments { quad, cubic, cubic_abs: cubic, quartic }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem8Report {
    pub lambda2: f64,
    pub beta: f64,
    pub moments: UnitMoments,
    /// Positive root of the scaled Nehari condition for `w = t(V₂, V₂)`.
    pub t_star: Option<f64>,
    pub phi_w: Option<f64>,
    pub phi_v2: f64,
    pub inequality_holds: bool,
}

/// Evaluates the trial state `w = t(V₂, V₂)` from the moments of `V`.
///
/// With `ε = (λ₁ − λ₂)/λ₂`, `t` is the positive root of
/// `λ₂B t² + ½(C_abs + 3βC) t − (C_abs + εA) = 0` and
/// `Φ(w) = ⅙ t² λ₂^{3−N/4}(C_abs + εA) + (1/12) t⁴ λ₂^{4−N/4} B`,
/// `Φ(v₂) = (1/12) λ₂^{3−N/4} C_abs`. The inequality tested is
/// `t²(C_abs + εA) + ½ t⁴ λ₂ B − ½ C_abs < 0`, which is `Φ(w) < Φ(v₂)`
/// multiplied by `6λ₂^{N/4−3}`.
pub fn theorem8_candidate(m: &UnitMoments, p: &Params) -> Result<Theorem8Report> {
    p.validate()?;
    if !(m.quartic > 0.0) {
        return Err(Error::InvalidParameter("the quartic moment must be > 0".into()));
    }
    let l2 = p.lambda2;
    let eps = (p.lambda1 - l2) / l2;
    let constant = m.cubic_abs + eps * m.quad;
    let scale3 = l2.powf(3.0 - p.dim as f64 / 4.0);
    let phi_v2 = scale3 * m.cubic_abs / 12.0;
    let mut report = Theorem8Report {
        lambda2: l2,
        beta: p.beta,
        moments: *m,
        t_star: None,
        phi_w: None,
        phi_v2,
        inequality_holds: false,
    };
    if !(constant > 0.0) {
        return Ok(report);
    }
    let t = variational::nehari_scaling(constant, l2 * m.quartic, 0.5 * (m.cubic_abs + 3.0 * p.beta * m.cubic))?;
    let t2 = t * t;
    report.t_star = Some(t);
    report.phi_w = Some(scale3 * (t2 * constant / 6.0 + t2 * t2 * l2 * m.quartic / 12.0));
    report.inequality_holds = t2 * constant + 0.5 * t2 * t2 * l2 * m.quartic - 0.5 * m.cubic_abs < 0.0;
    Ok(report)
}

/// Direct grid evaluation of the trial state.
#[derive(Clone, Debug)]
pub struct TrialCheck {
    pub state: State,
    pub phi_grid: f64,
    pub phi_v2_grid: f64,
    /// `|Ψ(w)| / ‖w‖²`.
    pub psi_rel: f64,
    /// `|Φ_grid(w) − Φ_analytic(w)| / |Φ_analytic(w)|`.
    pub phi_rel_defect: f64,
}

/// Builds `w = t*(V₂, V₂)` with `V₂` rescaled from `v` and evaluates `Φ` on
/// the grid.
pub fn theorem8_grid_check(report: &Theorem8Report, p: &Params, v: &Field) -> Result<TrialCheck> {
    let (Some(t), Some(phi_w)) = (report.t_star, report.phi_w) else {
        return Err(Error::NoPositiveRoot { cubic: report.moments.cubic });
    };
    let v2 = rescale_ground(v, report.lambda2)?;
    let p = p.with_lambda2(report.lambda2);
    let state = State { u: v2.scale(t), v: v2.scale(t) };
    let e = variational::energy(&p, &state)?;
    let phi_v2_grid = variational::energy(&p, &State::semi_trivial(&v2))?.phi;
    Ok(TrialCheck {
        phi_grid: e.phi,
        phi_v2_grid,
        psi_rel: e.psi(p.beta).abs() / e.norm_sq,
        phi_rel_defect: (e.phi - phi_w).abs() / phi_w.abs(),
        state,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem8Sweep {
    pub rows: Vec<Theorem8Report>,
    /// Least `λ₂` from which the inequality holds through the end of the
    /// sweep, refined by bisection.
    pub threshold: Option<f64>,
    /// Number of sign changes of `holds` along the sweep beyond the first.
    pub monotonicity_violations: usize,
}

/// `λ₂ ∈ {lo·2^k}` up to `hi`, inclusive.
pub fn geometric_grid(lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("sweep range {lo}:{hi} is not 0 < lo <= hi")));
    }
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi * (1.0 + 1e-12) {
        out.push(x);
        x *= 2.0;
    }
    Ok(out)
}

/// Sweeps `λ₂` over `grid`, then bisects `bisections` times between the last
/// failing point and the first point of the final holding run.
pub fn theorem8_sweep(m: &UnitMoments, p: &Params, grid: &[f64], bisections: usize) -> Result<Theorem8Sweep> {
    let rows = grid.iter().map(|&l2| theorem8_candidate(m, &p.with_lambda2(l2))).collect::<Result<Vec<_>>>()?;
    let flips = rows.windows(2).filter(|w| w[0].inequality_holds != w[1].inequality_holds).count();
    let violations = if rows.first().is_some_and(|r| r.inequality_holds) { flips } else { flips.saturating_sub(1) };
    let start = rows.iter().rposition(|r| !r.inequality_holds).map_or(0, |i| i + 1);
    let threshold = if start >= rows.len() {
        None
    } else if start == 0 {
        Some(rows[0].lambda2)
    } else {
        let (mut lo, mut hi) = (rows[start - 1].lambda2, rows[start].lambda2);
        for _ in 0..bisections {
            let mid = 0.5 * (lo + hi);
            if theorem8_candidate(m, &p.with_lambda2(mid))?.inequality_holds {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    };
    Ok(Theorem8Sweep { rows, threshold, monotonicity_violations: violations })
}

#[derive(Clone, Debug)]
pub struct MountainPassReport {
    pub level_m: f64,
    pub bead_count: usize,
    pub argmax_index: usize,
    pub argmax_state: State,
    pub endpoint_energies: (f64, f64),
    /// `‖·‖`-norm of the constrained gradient at the argmax bead.
    pub saddle_grad_norm: f64,
    pub bead_energies: Vec<f64>,
    pub string_iters: usize,
    pub climb_iters: usize,
    pub converged: bool,
}

/// Options of the string method on top of the common solver options.
#[derive(Clone, Debug, PartialEq)]
pub struct StringOptions {
    pub beads: usize,
    pub max_iters: usize,
    /// Level changes below this (relative) for `calm_iters` iterations stop the string.
    pub level_tol: f64,
    pub calm_iters: usize,
    /// Target constrained gradient norm for the climbing refinement.
    pub climb_tol: f64,
    pub climb_iters: usize,
}

impl Default for StringOptions {
    fn default() -> Self {
        StringOptions { beads: 17, max_iters: 300, level_tol: 1e-10, calm_iters: 5, climb_tol: 1e-6, climb_iters: 5000 }
    }
}

fn state_norm(p: &Params, s: &State) -> f64 {
    variational::norm_sq(p, s).sqrt()
}

fn on_manifold_or_err(p: &Params, s: &State) -> Result<f64> {
    let e = variational::energy(p, s)?;
    let psi = e.psi(p.beta).abs();
    let allowed = variational::TOL_PSI * e.norm_sq;
    if psi > allowed || e.norm_sq == 0.0 {
        return Err(Error::OffManifold { psi, allowed });
    }
    Ok(e.phi)
}

/// Redistributes interior beads at equal arclength along the piecewise
/// linear path and projects them back onto the manifold.
fn reparametrize(p: &Params, beads: &mut [State]) -> Result<()> {
    let n = beads.len();
    if n < 3 {
        return Ok(());
    }
    let mut arc = vec![0.0; n];
    for k in 1..n {
        arc[k] = arc[k - 1] + state_norm(p, &beads[k].axpy(-1.0, &beads[k - 1])?);
    }
    let total = arc[n - 1];
    if !(total > 0.0) {
        return Ok(());
    }
    let old = beads.to_vec();
    let mut seg = 0;
    for (k, bead) in beads.iter_mut().enumerate().take(n - 1).skip(1) {
        let target = total * k as f64 / (n - 1) as f64;
        while seg + 1 < n - 1 && arc[seg + 1] < target {
            seg += 1;
        }
        let len = arc[seg + 1] - arc[seg];
        let a = if len > 0.0 { (target - arc[seg]) / len } else { 0.0 };
        let mixed = old[seg].scale(1.0 - a).axpy(a, &old[seg + 1])?;
        *bead = variational::nehari_project(p, &mixed)?.1;
    }
    Ok(())
}

/// Unit tangent of the path at interior bead `k` by centred differences.
fn path_tangent(p: &Params, beads: &[State], k: usize) -> Result<State> {
    let d = beads[k + 1].axpy(-1.0, &beads[k - 1])?;
    let n = state_norm(p, &d);
    Ok(if n > 0.0 { d.scale(1.0 / n) } else { d })
}

/// Constrained gradient with the component along `tau` scaled by `along`
/// (`0` removes it, `-1` reverses it for climbing).
fn path_force(p: &Params, s: &State, tau: &State, along: f64) -> Result<(State, f64)> {
    let g = variational::constrained_gradient(p, s)?;
    let c = variational::inner(p, &g, tau)?;
    let dir = g.axpy((along - 1.0) * c, tau)?;
    Ok((dir, state_norm(p, &g)))
}

/// String method between two states on the Nehari manifold, followed by a
/// climbing refinement of the highest bead.
pub fn mountain_pass_estimate(
    p: &Params,
    endpoint_a: &State,
    endpoint_b: &State,
    so: &StringOptions,
    o: &SolveOptions,
) -> Result<MountainPassReport> {
    p.validate()?;
    o.validate()?;
    if so.beads < 2 {
        return Err(Error::InvalidParameter("at least 2 beads are required".into()));
    }
    let ea = on_manifold_or_err(p, endpoint_a)?;
    let eb = on_manifold_or_err(p, endpoint_b)?;
    let n = so.beads;
    let mut beads = Vec::with_capacity(n);
    for k in 0..n {
        let a = k as f64 / (n - 1) as f64;
        if k == 0 {
            beads.push(endpoint_a.clone());
        } else if k == n - 1 {
            beads.push(endpoint_b.clone());
        } else {
            let mixed = endpoint_a.scale(1.0 - a).axpy(a, endpoint_b)?;
            beads.push(variational::nehari_project(p, &mixed)?.1);
        }
    }
    let energies =
        |beads: &[State]| -> Result<Vec<f64>> { beads.iter().map(|b| Ok(variational::energy(p, b)?.phi)).collect() };
    let argmax = |e: &[f64]| e.iter().enumerate().fold(0, |m, (i, &x)| if x > e[m] { i } else { m });

    let mut phis = energies(&beads)?;
    let mut level = phis[argmax(&phis)];
    let mut calm = 0;
    let mut string_iters = 0;
    let mut converged = n < 3;
    while !converged && string_iters < so.max_iters {
        string_iters += 1;
        let mut moved = beads.clone();
        for k in 1..n - 1 {
            let tau = path_tangent(p, &beads, k)?;
            let (dir, _) = path_force(p, &beads[k], &tau, 0.0)?;
            let slope = variational::inner(p, &dir, &dir)?;
            let mut step = o.step0;
            while step >= 1e-12 {
                if let Ok((_, cand)) = beads[k].axpy(-step, &dir).and_then(|x| variational::nehari_project(p, &x)) {
                    let e = variational::energy(p, &cand)?.phi;
                    if e <= phis[k] - o.armijo * step * slope {
                        moved[k] = cand;
                        break;
                    }
                }
                step *= 0.5;
            }
        }
        reparametrize(p, &mut moved)?;
        beads = moved;
        phis = energies(&beads)?;
        let new_level = phis[argmax(&phis)];
        calm = if (new_level - level).abs() <= so.level_tol * level.abs().max(1.0) { calm + 1 } else { 0 };
        level = new_level;
        converged = calm >= so.calm_iters;
    }

    let k = argmax(&phis);
    let mut climb_iters = 0;
    let mut grad_norm = state_norm(p, &variational::constrained_gradient(p, &beads[k])?);
    if k > 0 && k < n - 1 {
        let mut step = 0.5 * o.step0;
        while climb_iters < so.climb_iters && grad_norm > so.climb_tol && step > 1e-8 {
            climb_iters += 1;
            let tau = path_tangent(p, &beads, k)?;
            let (dir, _) = path_force(p, &beads[k], &tau, -1.0)?;
            let cand = variational::nehari_project(p, &beads[k].axpy(-step, &dir)?)?.1;
            let gn = state_norm(p, &variational::constrained_gradient(p, &cand)?);
            if gn < grad_norm {
                beads[k] = cand;
                grad_norm = gn;
                step = (step * 1.1).min(o.step0);
            } else {
                step *= 0.5;
            }
        }
        phis[k] = variational::energy(p, &beads[k])?.phi;
    }
    let k = argmax(&phis);
    let saddle_grad_norm = state_norm(p, &variational::constrained_gradient(p, &beads[k])?);
    Ok(MountainPassReport {
        level_m: phis[k],
        bead_count: n,
        argmax_index: k,
        argmax_state: beads[k].clone(),
        endpoint_energies: (ea, eb),
        saddle_grad_norm,
        bead_energies: phis,
        string_iters,
        climb_iters,
        converged,
    })
}
