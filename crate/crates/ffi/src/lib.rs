//! C interface to `skdv`.
//!
//! Grids, fields and states cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns an [`SkdvStatus`]; on failure a message is available from
//! [`skdv_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skdv::analysis::lambda_threshold;
use skdv::ground_states::{solve_coupled_ground, solve_scalar_ground, SolveOptions, SolveReport};
use skdv::variational::{self, Params};
use skdv::{make_grid, Error, Field, Grid, GridKind, State};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkdvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    GridMismatch = 3,
    NoProjection = 4,
    OffManifold = 5,
    NonConvergence = 6,
    BufferTooSmall = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkdvGridKind {
    Line = 0,
    Radial = 1,
}

/// Opaque grid handle.
pub struct SkdvGrid(Grid);
/// Opaque handle to a scalar field on a grid.
pub struct SkdvField(Field);
/// Opaque handle to a pair `(u, v)` on a common grid.
pub struct SkdvState(State);

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SkdvParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta: f64,
    pub dim: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SkdvSolveOptions {
    pub max_iters: usize,
    pub tol_grad: f64,
    pub tol_energy: f64,
    pub step0: f64,
    pub armijo: f64,
    pub multistart: usize,
    pub seed: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SkdvEnergy {
    pub phi: f64,
    pub psi: f64,
    pub norm_sq: f64,
    pub norm_u_sq: f64,
    pub norm_v_sq: f64,
    pub quartic: f64,
    pub cubic_abs: f64,
    pub cross: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SkdvSolveReport {
    pub converged: bool,
    pub iters: usize,
    pub final_energy: f64,
    pub grad_norm: f64,
    pub residual_sup: f64,
    pub psi_rel: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SkdvStatus {
    match e {
        Error::GridMismatch => SkdvStatus::GridMismatch,
        Error::ZeroState | Error::NoPositiveRoot { .. } => SkdvStatus::NoProjection,
        Error::OffManifold { .. } => SkdvStatus::OffManifold,
        Error::NonConvergence(_) => SkdvStatus::NonConvergence,
        Error::Io(_) => SkdvStatus::Internal,
        _ => SkdvStatus::InvalidArgument,
    }
}

struct Fail(SkdvStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SkdvStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SkdvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SkdvStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SkdvStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = value;
    Ok(())
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err(Fail(SkdvStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

fn params(p: &SkdvParams) -> Result<Params, Fail> {
    Ok(Params::new(p.lambda1, p.lambda2, p.beta, p.dim)?)
}

fn options(o: &SkdvSolveOptions) -> Result<SolveOptions, Fail> {
    let o = SolveOptions {
        max_iters: o.max_iters,
        tol_grad: o.tol_grad,
        tol_energy: o.tol_energy,
        step0: o.step0,
        armijo: o.armijo,
        multistart: o.multistart,
        seed: o.seed,
    };
    o.validate()?;
    Ok(o)
}

fn report(r: &SolveReport) -> SkdvSolveReport {
    SkdvSolveReport {
        converged: r.converged,
        iters: r.iters,
        final_energy: r.final_energy,
        grad_norm: r.grad_norm,
        residual_sup: r.residual_sup,
        psi_rel: r.psi_rel,
    }
}

/// Message of the last failing call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn skdv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn skdv_solve_options_default() -> SkdvSolveOptions {
    let d = SolveOptions::default();
    SkdvSolveOptions {
        max_iters: d.max_iters,
        tol_grad: d.tol_grad,
        tol_energy: d.tol_energy,
        step0: d.step0,
        armijo: d.armijo,
        multistart: d.multistart,
        seed: d.seed,
    }
}

/// Creates a grid of `n` nodes: `[-extent, extent)` for a line grid, `(0, extent)`
/// for a radial grid in dimension `dim`. `kind` takes an [`SkdvGridKind`] value.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_grid_new(
    kind: u32,
    n: usize,
    extent: f64,
    dim: usize,
    out: *mut *mut SkdvGrid,
) -> SkdvStatus {
    guard(|| {
        let kind = match kind {
            k if k == SkdvGridKind::Line as u32 => GridKind::Line,
            k if k == SkdvGridKind::Radial as u32 => GridKind::Radial,
            k => return Err(Fail(SkdvStatus::InvalidArgument, format!("unknown grid kind {k}"))),
        };
        put(out, SkdvGrid(make_grid(kind, n, extent, dim)?))
    })
}

/// # Safety
/// `grid` must be null or a handle from `skdv_grid_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn skdv_grid_free(grid: *mut SkdvGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_grid_len(grid: *const SkdvGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// Copies the node coordinates into `buf`, which holds `len` values.
///
/// # Safety
/// `grid` must be a live grid handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skdv_grid_nodes(grid: *const SkdvGrid, buf: *mut f64, len: usize) -> SkdvStatus {
    guard(|| copy_out(get(grid, "grid")?.0.nodes(), buf, len))
}

/// Creates a field from `len` nodal values; `len` must equal the grid size.
///
/// # Safety
/// `grid` must be a live grid handle and `values` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skdv_field_new(
    grid: *const SkdvGrid,
    values: *const f64,
    len: usize,
    out: *mut *mut SkdvField,
) -> SkdvStatus {
    guard(|| {
        let g = get(grid, "grid")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let vals = std::slice::from_raw_parts(values, len).to_vec();
        put(out, SkdvField(Field::new(&g.0, vals)?))
    })
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_field_free(field: *mut SkdvField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` must be null or a live field handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_field_len(field: *const SkdvField) -> usize {
    field.as_ref().map_or(0, |f| f.0.values().len())
}

/// # Safety
/// `field` must be a live field handle and `buf` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn skdv_field_values(field: *const SkdvField, buf: *mut f64, len: usize) -> SkdvStatus {
    guard(|| copy_out(get(field, "field")?.0.values(), buf, len))
}

/// Builds a state from copies of two fields on the same grid.
///
/// # Safety
/// `u` and `v` must be live field handles.
#[no_mangle]
pub unsafe extern "C" fn skdv_state_new(
    u: *const SkdvField,
    v: *const SkdvField,
    out: *mut *mut SkdvState,
) -> SkdvStatus {
    guard(|| {
        let (u, v) = (get(u, "u")?, get(v, "v")?);
        put(out, SkdvState(State::new(u.0.clone(), v.0.clone())?))
    })
}

/// # Safety
/// `state` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_state_free(state: *mut SkdvState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Copies component `which` (0 for `u`, 1 for `v`) into a new field.
///
/// # Safety
/// `state` must be a live state handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_state_component(
    state: *const SkdvState,
    which: u32,
    out: *mut *mut SkdvField,
) -> SkdvStatus {
    guard(|| {
        let s = &get(state, "state")?.0;
        let f = match which {
            0 => s.u.clone(),
            1 => s.v.clone(),
            _ => return Err(Fail(SkdvStatus::InvalidArgument, format!("component {which} (expected 0 or 1)"))),
        };
        put(out, SkdvField(f))
    })
}

/// # Safety
/// `p` and `state` must be valid; `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn skdv_energy(
    p: *const SkdvParams,
    state: *const SkdvState,
    out: *mut SkdvEnergy,
) -> SkdvStatus {
    guard(|| {
        let p = params(get(p, "params")?)?;
        let e = variational::energy(&p, &get(state, "state")?.0)?;
        write(
            out,
            SkdvEnergy {
                phi: e.phi,
                psi: e.psi(p.beta),
                norm_sq: e.norm_sq,
                norm_u_sq: e.norm_u_sq,
                norm_v_sq: e.norm_v_sq,
                quartic: e.quartic,
                cubic_abs: e.cubic_abs,
                cross: e.cross,
            },
        )
    })
}

/// Scales `state` onto the Nehari manifold, returning the factor and the
/// projected state.
///
/// # Safety
/// All pointers must be valid; `out_state` receives a new handle.
#[no_mangle]
pub unsafe extern "C" fn skdv_nehari_project(
    p: *const SkdvParams,
    state: *const SkdvState,
    out_t: *mut f64,
    out_state: *mut *mut SkdvState,
) -> SkdvStatus {
    guard(|| {
        let p = params(get(p, "params")?)?;
        let (t, w) = variational::nehari_project(&p, &get(state, "state")?.0)?;
        write(out_t, t)?;
        put(out_state, SkdvState(w))
    })
}

/// Ground state of the single fourth-order equation with parameter `lambda2`.
/// An unconverged solve still returns its best iterate with status
/// `NonConvergence`; the report says how far it got.
///
/// # Safety
/// `grid` and `opts` must be valid; `out` receives a new field handle and
/// `report` may be null.
#[no_mangle]
pub unsafe extern "C" fn skdv_solve_scalar(
    lambda2: f64,
    grid: *const SkdvGrid,
    opts: *const SkdvSolveOptions,
    out: *mut *mut SkdvField,
    report_out: *mut SkdvSolveReport,
) -> SkdvStatus {
    guard(|| {
        let o = options(get(opts, "options")?)?;
        let (v, r) = solve_scalar_ground(lambda2, &get(grid, "grid")?.0, &o)?;
        if !report_out.is_null() {
            *report_out = report(&r);
        }
        put(out, SkdvField(v))?;
        converged(&r)
    })
}

/// Ground state of the coupled system from the default initialisations.
///
/// # Safety
/// As for [`skdv_solve_scalar`].
#[no_mangle]
pub unsafe extern "C" fn skdv_solve_coupled(
    p: *const SkdvParams,
    grid: *const SkdvGrid,
    opts: *const SkdvSolveOptions,
    out: *mut *mut SkdvState,
    report_out: *mut SkdvSolveReport,
) -> SkdvStatus {
    guard(|| {
        let p = params(get(p, "params")?)?;
        let o = options(get(opts, "options")?)?;
        let (s, r) = solve_coupled_ground(&p, &get(grid, "grid")?.0, &o)?;
        if !report_out.is_null() {
            *report_out = report(&r);
        }
        put(out, SkdvState(s))?;
        converged(&r)
    })
}

fn converged(r: &SolveReport) -> Result<(), Fail> {
    if r.converged {
        Ok(())
    } else {
        Err(Fail(SkdvStatus::NonConvergence, format!("no convergence after {} iterations", r.iters)))
    }
}

/// Critical coupling `inf ‖φ‖₁² / ∫v2 φ²` for the profile `v2`. The
/// minimiser is returned through `out_minimizer` unless it is null.
///
/// # Safety
/// `v2` and `opts` must be valid handles; `out_lambda` must be writable.
#[no_mangle]
pub unsafe extern "C" fn skdv_lambda_threshold(
    lambda1: f64,
    v2: *const SkdvField,
    opts: *const SkdvSolveOptions,
    out_lambda: *mut f64,
    out_minimizer: *mut *mut SkdvField,
) -> SkdvStatus {
    guard(|| {
        let o = options(get(opts, "options")?)?;
        let cc = lambda_threshold(lambda1, &get(v2, "v2")?.0, &o)?;
        write(out_lambda, cc.lambda)?;
        if !out_minimizer.is_null() {
            put(out_minimizer, SkdvField(cc.minimizer))?;
        }
        Ok(())
    })
}
