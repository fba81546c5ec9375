mod common;

use common::*;
use skdv::analysis::*;
use skdv::ground_states::{solve_scalar_ground, SolveOptions};
use skdv::variational::{self, energy, hessian_form, nehari_project, Params, State};
use skdv::{Error, Field, Grid};

fn opts() -> SolveOptions {
    SolveOptions { tol_grad: 1e-9, ..SolveOptions::default() }
}

fn ground(lambda2: f64, g: &Grid) -> Field {
    solve_scalar_ground(lambda2, g, &opts()).unwrap().0
}

fn weighted(v2: &Field, phi: &Field) -> f64 {
    let w = v2.zip_with(phi, |a, b| a * b * b).unwrap();
    v2.grid().integrate(&w).unwrap()
}

#[test]
fn constant_potential_gives_closed_form_threshold() {
    let g = line(256, 10.0);
    let c = g.field_from_fn(|_| 4.0);
    let cc = lambda_threshold(2.0, &c, &opts()).unwrap();
    assert!((cc.lambda - 0.5).abs() < 1e-10);
    let m = cc.minimizer.values();
    assert!(m.iter().all(|x| (x - m[0]).abs() <= 1e-12 * m[0].abs()));
}

#[test]
fn threshold_is_the_infimum_of_the_quotient() {
    let g = line(2048, 40.0);
    let v2 = ground(1.0, &g);
    let cc = lambda_threshold(1.0, &v2, &opts()).unwrap();
    let h = &cc.minimizer;
    let num = g.norm_j(h, 1.0).unwrap().powi(2);
    assert!((num - cc.lambda * weighted(&v2, h)).abs() <= 1e-9 * num);
    let mut r = rng(17);
    let mut tested = 0;
    while tested < 500 {
        let phi = bumps(&g, &mut r, 1.0);
        match rayleigh_quotient(1.0, &v2, &phi) {
            Ok(q) => {
                assert!(q >= cc.lambda * (1.0 - 1e-8), "{q} < {}", cc.lambda);
                tested += 1;
            }
            Err(Error::NonPositiveWeight(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn threshold_rejects_non_positive_potential() {
    let g = line(128, 10.0);
    let v = g.field_from_fn(|_| -1.0);
    assert!(matches!(lambda_threshold(1.0, &v, &opts()), Err(Error::NonPositiveWeight(_))));
    assert!(lambda_threshold(0.0, &v, &opts()).is_err());
}

fn classify_at(p: &Params, v2: &Field, cc: &CriticalCoupling) -> Classification {
    classify_semitrivial(p, v2, cc, 200, 7).unwrap()
}

#[test]
fn classification_examples() {
    let g = line(2048, 40.0);
    let v2 = ground(1.0, &g);
    let cc = lambda_threshold(1.0, &v2, &opts()).unwrap();
    let base = Params::new(1.0, 1.0, 0.0, 1).unwrap();

    let c = classify_at(&base.with_beta(2.0 * cc.lambda), &v2, &cc);
    assert_eq!(c.verdict, Verdict::Saddle);
    let expected = -cc.lambda * weighted(&v2, &cc.minimizer);
    assert!(rel(c.witness_value, expected) < 1e-8);

    let c = classify_at(&base.with_beta(0.5 * cc.lambda), &v2, &cc);
    assert_eq!(c.verdict, Verdict::LocalMin);
    assert_eq!(c.positive_samples, 200);
    assert!(rel(c.witness_value, (c.lambda_crit - c.beta) * c.witness_weight) < 1e-8);
    assert!(c.tangency_defect <= 1e-10);
}

#[test]
fn tangent_directions_in_v_see_only_the_scalar_hessian() {
    let g = line(2048, 40.0);
    let v2 = ground(1.0, &g);
    let p = Params::new(1.0, 1.0, 0.3, 1).unwrap();
    let base = State::semi_trivial(&v2);
    let denom = scalar_nehari_derivative(1.0, &v2, &v2);
    let mut r = rng(23);
    for _ in 0..50 {
        let raw = bumps(&g, &mut r, 1.0);
        let h2 = raw.axpy(-scalar_nehari_derivative(1.0, &v2, &raw) / denom, &v2).unwrap();
        assert!(scalar_nehari_derivative(1.0, &v2, &h2).abs() <= 1e-10 * g.norm_j(&h2, 1.0).unwrap());
        let h = State::new(g.zeros(), h2.clone()).unwrap();
        let q = hessian_form(&p, &base, &h).unwrap();
        // ‖h₂‖₂² − ∫|V₂|h₂², assembled from the discretisation primitives.
        let lin = g.norm_j(&h2, 1.0).unwrap().powi(2);
        let pot = g.integrate(&v2.zip_with(&h2, |a, b| a.abs() * b * b).unwrap()).unwrap();
        assert!(rel(q, lin - pot) < 1e-12);
        assert!(q > 0.0);
    }
}

#[test]
fn verdict_flips_across_the_threshold() {
    let g = line(2048, 40.0);
    for (l1, l2) in [(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)] {
        let v2 = ground(l2, &g);
        let cc = lambda_threshold(l1, &v2, &opts()).unwrap();
        let p = Params::new(l1, l2, 0.0, 1).unwrap();
        assert_eq!(classify_at(&p.with_beta(0.9 * cc.lambda), &v2, &cc).verdict, Verdict::LocalMin);
        assert_eq!(classify_at(&p.with_beta(1.1 * cc.lambda), &v2, &cc).verdict, Verdict::Saddle);
    }
    let g = radial(1024, 30.0, 3);
    let v2 = ground(1.0, &g);
    let cc = lambda_threshold(1.0, &v2, &opts()).unwrap();
    let p = Params::new(1.0, 1.0, 0.0, 3).unwrap();
    assert_eq!(classify_at(&p.with_beta(0.9 * cc.lambda), &v2, &cc).verdict, Verdict::LocalMin);
    assert_eq!(classify_at(&p.with_beta(1.1 * cc.lambda), &v2, &cc).verdict, Verdict::Saddle);
}

#[test]
fn at_the_threshold_the_verdict_is_marginal() {
    let g = line(1024, 30.0);
    let v2 = ground(1.0, &g);
    let cc = lambda_threshold(1.0, &v2, &opts()).unwrap();
    let p = Params::new(1.0, 1.0, cc.lambda, 1).unwrap();
    assert_eq!(classify_at(&p, &v2, &cc).verdict, Verdict::Marginal);
}

#[test]
fn trial_state_quadratic_example() {
    let m = UnitMoments::positive(1.0, 2.0, 1.0);
    let p = Params::new(1.0, 1.0, 1.0, 1).unwrap();
    let r = theorem8_candidate(&m, &p).unwrap();
    let t = r.t_star.unwrap();
    assert!((t - (6f64.sqrt() - 2.0)).abs() < 1e-14);
    assert!((t * t + 4.0 * t - 2.0).abs() < 1e-14);
    assert!((r.phi_v2 - 2.0 / 12.0).abs() < 1e-15);
    assert_eq!(r.inequality_holds, r.phi_w.unwrap() < r.phi_v2);
}

#[test]
fn trial_state_without_positive_root() {
    // C_abs + ((λ₁−λ₂)/λ₂) A = 1 − 0.99·10 < 0.
    let m = UnitMoments::positive(10.0, 1.0, 1.0);
    let p = Params::new(0.1, 10.0, 1.0, 1).unwrap();
    let r = theorem8_candidate(&m, &p).unwrap();
    assert_eq!(r.t_star, None);
    assert!(!r.inequality_holds);
    let g = line(64, 5.0);
    assert!(theorem8_grid_check(&r, &p, &g.zeros()).is_err());
}

#[test]
fn trial_state_from_computed_profile() {
    let g = line(2048, 40.0);
    let v = ground(1.0, &g);
    let m = UnitMoments::from_field(&v);
    let cc = lambda_threshold(1.0, &v, &opts()).unwrap();
    let p = Params::new(1.0, 1.0, 0.2 * cc.lambda, 1).unwrap();
    let sweep = theorem8_sweep(&m, &p, &geometric_grid(2f64.powi(-12), 4096.0).unwrap(), 20).unwrap();
    assert_eq!(sweep.monotonicity_violations, 0);
    assert!(!sweep.rows[0].inequality_holds);
    assert!(sweep.rows.last().unwrap().inequality_holds);
    let thr = sweep.threshold.unwrap();
    assert!(thr > sweep.rows[0].lambda2 && thr.is_finite());
    for lambda2 in [thr, 2.0 * thr] {
        let r = theorem8_candidate(&m, &p.with_lambda2(lambda2)).unwrap();
        assert!(r.inequality_holds);
        let check = theorem8_grid_check(&r, &p, &v).unwrap();
        assert!(check.psi_rel <= variational::TOL_PSI);
        assert!(check.phi_rel_defect < 1e-6);
        assert!(check.phi_grid < check.phi_v2_grid);
    }
    let below = theorem8_candidate(&m, &p.with_lambda2(0.98 * thr)).unwrap();
    assert!(!below.inequality_holds);
}

#[test]
fn sweep_reports_non_monotone_patterns() {
    // A sweep that never holds has no threshold.
    let m = UnitMoments::positive(10.0, 1.0, 1.0);
    let p = Params::new(0.1, 1.0, 1.0, 1).unwrap();
    let s = theorem8_sweep(&m, &p, &[8.0, 16.0], 5).unwrap();
    assert!(s.rows.iter().all(|r| !r.inequality_holds));
    assert_eq!(s.threshold, None);
}

#[test]
fn geometric_grid_layout() {
    assert_eq!(geometric_grid(1.0, 8.0).unwrap(), vec![1.0, 2.0, 4.0, 8.0]);
    assert_eq!(geometric_grid(1.0, 4096.0).unwrap().len(), 13);
    assert!(geometric_grid(0.0, 1.0).is_err());
    assert!(geometric_grid(2.0, 1.0).is_err());
}

fn mp_setup() -> (Params, State, State) {
    let g = line(512, 20.0);
    let v2 = ground(1.0, &g);
    let p = Params::new(1.0, 1.0, 0.2, 1).unwrap();
    let a = nehari_project(&p, &State::semi_trivial(&v2)).unwrap().1;
    let u = g.field_from_fn(|x| 1.4 * (-x * x / 2.0).exp());
    let b = nehari_project(&p, &State::new(u, v2.scale(0.05)).unwrap()).unwrap().1;
    (p, a, b)
}

#[test]
fn two_bead_string_reports_endpoint_maximum() {
    let (p, a, b) = mp_setup();
    let so = StringOptions { beads: 2, ..StringOptions::default() };
    let r = mountain_pass_estimate(&p, &a, &b, &so, &opts()).unwrap();
    let ea = energy(&p, &a).unwrap().phi;
    let eb = energy(&p, &b).unwrap().phi;
    assert_eq!(r.level_m, ea.max(eb));
    assert_eq!(r.bead_count, 2);
}

#[test]
fn string_level_dominates_endpoints() {
    let (p, a, b) = mp_setup();
    let so = StringOptions { beads: 7, max_iters: 20, climb_iters: 20, ..StringOptions::default() };
    let r = mountain_pass_estimate(&p, &a, &b, &so, &opts()).unwrap();
    assert!(r.level_m >= r.endpoint_energies.0.max(r.endpoint_energies.1) - 1e-12);
    assert_eq!(r.bead_energies.len(), 7);
    assert!(energy(&p, &r.argmax_state).unwrap().on_manifold(p.beta));
}

#[test]
fn string_requires_on_manifold_endpoints() {
    let (p, a, b) = mp_setup();
    let so = StringOptions::default();
    let off = a.scale(2.0);
    assert!(matches!(mountain_pass_estimate(&p, &off, &b, &so, &opts()), Err(Error::OffManifold { .. })));
    let one = StringOptions { beads: 1, ..so };
    assert!(mountain_pass_estimate(&p, &a, &b, &one, &opts()).is_err());
}
