mod common;

use common::*;
use skdv::analysis::lambda_threshold;
use skdv::ground_states::*;
use skdv::variational::{self, energy, Params, State};
use skdv::{Error, Field, Grid};

fn opts() -> SolveOptions {
    SolveOptions { tol_grad: 1e-9, ..SolveOptions::default() }
}

fn unit_profile(g: &Grid) -> (Field, SolveReport) {
    solve_scalar_ground(1.0, g, &opts()).unwrap()
}

fn moment(f: &Field, p: i32) -> f64 {
    let vals: Vec<f64> = f.values().iter().map(|x| x.powi(p)).collect();
    f.grid().integrate(&Field::new(f.grid(), vals).unwrap()).unwrap()
}

fn abs_cubic(f: &Field) -> f64 {
    moment(&f.abs(), 3)
}

fn scalar_params(lambda: f64, dim: usize) -> Params {
    Params::new(lambda, lambda, 0.0, dim).unwrap()
}

#[test]
fn scalar_ground_state_on_the_line() {
    let g = line(2048, 40.0);
    let (v, r) = unit_profile(&g);
    assert!(r.converged);
    assert!(r.grad_norm <= 1e-9);
    assert!(r.residual_sup < 1e-7, "residual {}", r.residual_sup);
    let e = energy(&scalar_params(1.0, 1), &State::semi_trivial(&v)).unwrap();
    let c = abs_cubic(&v);
    assert!(rel(e.norm_v_sq, 0.5 * c) < 1e-8);
    assert!(rel(e.phi, c / 12.0) < 1e-8);
    // ∫|V|³ = 2‖V‖₂² ≥ 2∫V² because ‖V‖₂² ≥ λ∫V² with λ = 1.
    assert!(c > 2.0 * moment(&v, 2) * (1.0 + 1e-6));
    assert!(moment(&v, 3) > 2.0 * moment(&v, 2) * (1.0 + 1e-6));
    assert_eq!(r.changes_sign, v.min_value() < -1e-12 * v.sup_norm());
    assert!(v.max_value() > 0.0);
}

#[test]
fn scalar_ground_state_on_a_radial_grid() {
    let g = radial(1024, 30.0, 3);
    let (v, r) = unit_profile(&g);
    assert!(r.converged);
    assert!(r.residual_sup < 1e-7, "residual {}", r.residual_sup);
    let e = energy(&scalar_params(1.0, 3), &State::semi_trivial(&v)).unwrap();
    assert!(rel(e.norm_v_sq, 0.5 * abs_cubic(&v)) < 1e-8);
    // The profile peaks at the origin.
    let imax = v.values().iter().enumerate().fold(0, |m, (i, &x)| if x > v.values()[m] { i } else { m });
    assert_eq!(imax, 0);
}

#[test]
fn scalar_energy_is_stable_under_grid_doubling() {
    let (v1, _) = unit_profile(&line(1024, 20.0));
    let (v2, _) = unit_profile(&line(2048, 40.0));
    let p = scalar_params(1.0, 1);
    let e1 = energy(&p, &State::semi_trivial(&v1)).unwrap().phi;
    let e2 = energy(&p, &State::semi_trivial(&v2)).unwrap().phi;
    assert!(rel(e1, e2) < 1e-4);
    assert!(rel(v1.max_value(), v2.max_value()) < 1e-4);
}

#[test]
fn rescaling_identity_and_amplitude() {
    let g = line(2048, 40.0);
    let (v, _) = unit_profile(&g);
    assert_eq!(rescale_ground(&v, 1.0).unwrap(), v);
    // x = 0 is a node, so the peak value is sampled exactly up to rounding.
    let w = rescale_ground(&v, 4.0).unwrap();
    assert!(rel(w.max_value(), 4.0 * v.max_value()) < 1e-12);
}

#[test]
fn rescaled_profile_matches_direct_solve() {
    let g = line(2048, 40.0);
    let (v, _) = unit_profile(&g);
    for lambda2 in [0.25, 4.0] {
        let scaled = rescale_ground(&v, lambda2).unwrap();
        let (direct, r) = solve_scalar_ground(lambda2, &g, &opts()).unwrap();
        assert!(r.converged);
        let diff = scaled.axpy(-1.0, &direct).unwrap().sup_norm();
        assert!(diff <= 1e-3 * direct.sup_norm(), "λ₂ = {lambda2}: {diff}");
        for p in [2, 3, 4] {
            let predicted = scaled_moment(moment(&v, p), p as f64, lambda2, 1).unwrap();
            assert!(rel(predicted, moment(&direct, p)) < 1e-3, "λ₂ = {lambda2}, p = {p}");
        }
    }
}

#[test]
fn rescaling_rejects_profiles_that_do_not_fit() {
    let g = line(2048, 40.0);
    let (v, _) = unit_profile(&g);
    // λ₂^{1/4} = 0.1 stretches the profile tenfold: its bulk leaves the box.
    assert!(matches!(rescale_ground(&v, 1e-4), Err(Error::Support(_))));
    assert!(matches!(rescale_ground(&v, 0.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(rescale_ground(&v, -1.0), Err(Error::InvalidParameter(_))));
}

#[test]
fn moment_scaling_examples() {
    assert!((scaled_moment(1.0, 3.0, 16.0, 1).unwrap() - 2048.0).abs() < 1e-9);
    assert_eq!(scaled_moment(5.5, 3.0, 1.0, 3).unwrap(), 5.5);
    assert!((scaled_moment(1.0, 2.0, 9.0, 4).unwrap() - 9.0).abs() < 1e-12);
    assert!(scaled_moment(1.0, 2.0, 0.0, 1).is_err());
}

#[test]
fn scalar_solver_input_errors() {
    let g = line(256, 20.0);
    assert!(matches!(solve_scalar_ground(0.0, &g, &opts()), Err(Error::InvalidParameter(_))));
    assert!(matches!(solve_scalar_ground_from(1.0, &g.zeros(), &opts()), Err(Error::DegenerateInit(_))));
    let bad = SolveOptions { armijo: 1.5, ..opts() };
    assert!(solve_scalar_ground(1.0, &g, &bad).is_err());
    let bad = SolveOptions { multistart: 0, ..opts() };
    assert!(bad.validate().is_err());
}

#[test]
fn iteration_cap_returns_best_iterate_unconverged() {
    let g = line(512, 20.0);
    let o = SolveOptions { max_iters: 2, ..opts() };
    let (v, r) = solve_scalar_ground(1.0, &g, &o).unwrap();
    assert!(!r.converged);
    assert!(r.iters <= 2);
    assert!(v.sup_norm() > 0.0);
}

#[test]
fn semi_trivial_start_is_a_critical_point() {
    let g = line(2048, 40.0);
    let (v, _) = unit_profile(&g);
    let p = Params::new(1.0, 1.0, 0.7, 1).unwrap();
    let (s, r) = solve_coupled_ground_from(&p, &[State::semi_trivial(&v)], &opts()).unwrap();
    assert!(r.converged);
    assert_eq!(s.u.sup_norm(), 0.0);
    assert!(s.v.axpy(-1.0, &v).unwrap().sup_norm() <= 1e-8 * v.sup_norm());
}

fn check_coupled(g: &Grid, dim: usize) {
    let (v, _) = unit_profile(g);
    let cc = lambda_threshold(1.0, &v, &opts()).unwrap();
    let p = Params::new(1.0, 1.0, 2.0 * cc.lambda, dim).unwrap();
    let (s, r) = solve_coupled_ground(&p, g, &opts()).unwrap();
    let phi_v2 = energy(&p, &State::semi_trivial(&v)).unwrap().phi;
    assert!(r.converged);
    assert!(r.final_energy <= phi_v2 - 1e-6 * phi_v2.abs());
    assert!(s.u.sup_norm() > 1e-2 && s.v.sup_norm() > 1e-2);
    let e = energy(&p, &s).unwrap();
    assert!(e.on_manifold(p.beta));
    assert!(rel(variational::constrained_energy(&p, &s).unwrap(), e.phi) < 1e-8);
    assert!(r.nehari_floor > 1e-8);
    assert!(r.t_history_max.is_finite());
    for w in r.energy_trace.windows(2) {
        assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "energy rose: {} -> {}", w[0], w[1]);
    }
}

#[test]
fn coupled_ground_state_above_critical_coupling_line() {
    check_coupled(&line(2048, 40.0), 1);
}

#[test]
fn coupled_ground_state_above_critical_coupling_radial() {
    check_coupled(&radial(1024, 30.0, 3), 3);
}

#[test]
fn coupled_solve_is_deterministic() {
    let g = line(512, 20.0);
    let p = Params::new(1.0, 1.0, 1.5, 1).unwrap();
    let o = SolveOptions { seed: 42, ..opts() };
    let (a, ra) = solve_coupled_ground(&p, &g, &o).unwrap();
    let (b, rb) = solve_coupled_ground(&p, &g, &o).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
}

#[test]
fn default_initialisations_follow_multistart() {
    let g = line(256, 20.0);
    let v = g.field_from_fn(|x| (-x * x).exp());
    for k in 1..=5 {
        let o = SolveOptions { multistart: k, ..opts() };
        assert_eq!(default_initializations(&v, 1.0, &o).len(), k);
    }
}

#[test]
fn empty_initialisation_list_is_rejected() {
    let p = Params::new(1.0, 1.0, 1.0, 1).unwrap();
    assert!(solve_coupled_ground_from(&p, &[], &opts()).is_err());
}
