use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use skdv_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(skdv_last_error()) }.to_string_lossy().into_owned()
}

unsafe fn grid(kind: SkdvGridKind, n: usize, extent: f64, dim: usize) -> *mut SkdvGrid {
    let mut g = ptr::null_mut();
    assert_eq!(skdv_grid_new(kind as u32, n, extent, dim, &mut g), SkdvStatus::Ok);
    g
}

unsafe fn field(g: *const SkdvGrid, f: impl Fn(f64) -> f64) -> *mut SkdvField {
    let n = skdv_grid_len(g);
    let mut x = vec![0.0; n];
    assert_eq!(skdv_grid_nodes(g, x.as_mut_ptr(), n), SkdvStatus::Ok);
    let vals: Vec<f64> = x.iter().map(|&t| f(t)).collect();
    let mut out = ptr::null_mut();
    assert_eq!(skdv_field_new(g, vals.as_ptr(), n, &mut out), SkdvStatus::Ok);
    out
}

unsafe fn values(f: *const SkdvField) -> Vec<f64> {
    let n = skdv_field_len(f);
    let mut buf = vec![0.0; n];
    assert_eq!(skdv_field_values(f, buf.as_mut_ptr(), n), SkdvStatus::Ok);
    buf
}

fn params(beta: f64) -> SkdvParams {
    SkdvParams { lambda1: 1.0, lambda2: 1.0, beta, dim: 1 }
}

#[test]
fn grid_and_field_round_trip() {
    unsafe {
        let g = grid(SkdvGridKind::Line, 64, 5.0, 1);
        assert_eq!(skdv_grid_len(g), 64);
        let f = field(g, |x| x * x);
        let v = values(f);
        assert_eq!(v.len(), 64);
        assert_eq!(v[0], 25.0);

        let mut small = [0.0; 3];
        assert_eq!(skdv_field_values(f, small.as_mut_ptr(), 3), SkdvStatus::BufferTooSmall);
        assert!(last_error().contains("64"));

        skdv_field_free(f);
        skdv_grid_free(g);
        skdv_grid_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_report_codes_and_messages() {
    unsafe {
        let mut g = ptr::null_mut();
        assert_eq!(skdv_grid_new(SkdvGridKind::Line as u32, 3, 5.0, 1, &mut g), SkdvStatus::InvalidArgument);
        assert!(g.is_null());
        assert!(last_error().contains("n = 3"));
        assert_eq!(skdv_grid_new(7, 64, 5.0, 1, &mut g), SkdvStatus::InvalidArgument);
        assert_eq!(skdv_grid_new(SkdvGridKind::Line as u32, 64, 5.0, 1, ptr::null_mut()), SkdvStatus::NullPointer);
        assert_eq!(skdv_grid_len(ptr::null()), 0);

        let a = grid(SkdvGridKind::Line, 64, 5.0, 1);
        let b = grid(SkdvGridKind::Line, 32, 5.0, 1);
        let (fa, fb) = (field(a, f64::cos), field(b, f64::cos));
        let mut s = ptr::null_mut();
        assert_eq!(skdv_state_new(fa, fb, &mut s), SkdvStatus::GridMismatch);
        assert_eq!(skdv_state_new(fa, ptr::null(), &mut s), SkdvStatus::NullPointer);
        let vals = [1.0; 10];
        let mut f = ptr::null_mut();
        assert_eq!(skdv_field_new(a, vals.as_ptr(), 10, &mut f), SkdvStatus::InvalidArgument);

        // The zero state has no Nehari scaling.
        let z = field(a, |_| 0.0);
        assert_eq!(skdv_state_new(z, z, &mut s), SkdvStatus::Ok);
        let mut t = 0.0;
        let mut w = ptr::null_mut();
        assert_eq!(skdv_nehari_project(&params(1.0), s, &mut t, &mut w), SkdvStatus::NoProjection);
        let bad = SkdvParams { lambda1: -1.0, ..params(1.0) };
        let mut e = SkdvEnergy::default();
        assert_eq!(skdv_energy(&bad, s, &mut e), SkdvStatus::InvalidArgument);
        assert_eq!(skdv_state_component(s, 2, &mut f), SkdvStatus::InvalidArgument);

        for h in [fa, fb, z] {
            skdv_field_free(h);
        }
        skdv_state_free(s);
        skdv_grid_free(a);
        skdv_grid_free(b);
    }
}

#[test]
fn projection_and_energy_agree_with_the_library() {
    unsafe {
        let g = grid(SkdvGridKind::Line, 256, 20.0, 1);
        let u = field(g, |x| (-x * x).exp());
        let v = field(g, |x| 0.5 * (-(x - 1.0).powi(2)).exp());
        let mut s = ptr::null_mut();
        assert_eq!(skdv_state_new(u, v, &mut s), SkdvStatus::Ok);
        let p = params(0.8);
        let (mut t, mut w) = (0.0, ptr::null_mut());
        assert_eq!(skdv_nehari_project(&p, s, &mut t, &mut w), SkdvStatus::Ok);
        assert!(t > 0.0);
        let mut e = SkdvEnergy::default();
        assert_eq!(skdv_energy(&p, w, &mut e), SkdvStatus::Ok);
        assert!(e.psi.abs() <= 1e-12 * e.norm_sq);
        assert!(e.phi > 0.0);

        // Same numbers through the Rust API.
        let gr = skdv::make_grid(skdv::GridKind::Line, 256, 20.0, 1).unwrap();
        let st = skdv::State::new(
            gr.field_from_fn(|x| (-x * x).exp()),
            gr.field_from_fn(|x| 0.5 * (-(x - 1.0).powi(2)).exp()),
        )
        .unwrap();
        let rp = skdv::Params::new(1.0, 1.0, 0.8, 1).unwrap();
        let (rt, rw) = skdv::variational::nehari_project(&rp, &st).unwrap();
        assert_eq!(t, rt);
        assert_eq!(e.phi, skdv::variational::energy(&rp, &rw).unwrap().phi);

        let mut comp = ptr::null_mut();
        assert_eq!(skdv_state_component(w, 0, &mut comp), SkdvStatus::Ok);
        assert_eq!(values(comp), rw.u.values());
        skdv_field_free(comp);
        skdv_state_free(w);
        skdv_state_free(s);
        skdv_field_free(u);
        skdv_field_free(v);
        skdv_grid_free(g);
    }
}

#[test]
fn solvers_through_the_c_interface() {
    unsafe {
        let g = grid(SkdvGridKind::Line, 512, 20.0, 1);
        let mut o = skdv_solve_options_default();
        o.tol_grad = 1e-9;
        let mut v2 = ptr::null_mut();
        let mut r = SkdvSolveReport::default();
        assert_eq!(skdv_solve_scalar(1.0, g, &o, &mut v2, &mut r), SkdvStatus::Ok);
        assert!(r.converged && r.residual_sup < 1e-6);

        let (mut lambda, mut h) = (0.0, ptr::null_mut());
        assert_eq!(skdv_lambda_threshold(1.0, v2, &o, &mut lambda, &mut h), SkdvStatus::Ok);
        assert!(lambda > 0.0 && !h.is_null());
        assert_eq!(skdv_lambda_threshold(1.0, v2, &o, &mut lambda, ptr::null_mut()), SkdvStatus::Ok);

        let p = params(2.0 * lambda);
        let mut s = ptr::null_mut();
        let mut rc = SkdvSolveReport::default();
        assert_eq!(skdv_solve_coupled(&p, g, &o, &mut s, &mut rc), SkdvStatus::Ok);
        let mut semi = ptr::null_mut();
        let zero = field(g, |_| 0.0);
        assert_eq!(skdv_state_new(zero, v2, &mut semi), SkdvStatus::Ok);
        let mut e = SkdvEnergy::default();
        assert_eq!(skdv_energy(&p, semi, &mut e), SkdvStatus::Ok);
        assert!(rc.final_energy < e.phi);

        // A two-iteration cap still hands back the iterate.
        o.max_iters = 2;
        let mut capped = ptr::null_mut();
        assert_eq!(skdv_solve_scalar(1.0, g, &o, &mut capped, ptr::null_mut()), SkdvStatus::NonConvergence);
        assert!(!capped.is_null());
        o.armijo = 2.0;
        assert_eq!(skdv_solve_scalar(1.0, g, &o, &mut capped, ptr::null_mut()), SkdvStatus::InvalidArgument);

        for f in [v2, h, zero, capped] {
            skdv_field_free(f);
        }
        skdv_state_free(s);
        skdv_state_free(semi);
        skdv_grid_free(g);
    }
}

#[test]
fn generated_header_compiles_as_c_and_cpp() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    assert!(include.join("skdv.h").is_file());
    let src = r#"
#include "skdv.h"
int main(void) {
    SkdvGrid *g = 0;
    SkdvSolveOptions o = skdv_solve_options_default();
    SkdvStatus s = skdv_grid_new(SKDV_GRID_KIND_LINE, 64, 5.0, 1, &g);
    (void)o;
    skdv_grid_free(g);
    return s == SKDV_STATUS_OK ? 0 : 1;
}
"#;
    let dir = tempfile::tempdir().unwrap();
    for (compiler, name) in [("cc", "t.c"), ("c++", "t.cpp")] {
        let file = dir.path().join(name);
        std::fs::write(&file, src).unwrap();
        let status = match Command::new(compiler)
            .arg("-fsyntax-only")
            .arg("-Wall")
            .arg("-Werror")
            .arg("-I")
            .arg(&include)
            .arg(&file)
            .status()
        {
            Ok(s) => s,
            Err(_) => {
                eprintln!("{compiler} not available; header check skipped");
                continue;
            }
        };
        assert!(status.success(), "{compiler} rejected the header");
    }
}
