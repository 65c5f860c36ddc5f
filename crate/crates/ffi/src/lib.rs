//! C ABI over `cliffham`.
//!
//! Objects are handed out as opaque pointers and released with the matching
//! `_free` function. Every fallible call returns a [`CliffhamStatus`]; the
//! message for the most recent failure on the calling thread is available
//! from [`cliffham_last_error_message`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cliffham::config::SimulationConfig;
use cliffham::dynamics::{energy_drift, integrate, Trajectory};
use cliffham::hamiltonian::{self, ExprAst};
use cliffham::structures::{make_structure, BlockIndex, StateVector, StructureId, StructureSet, BLOCKS};
use cliffham::verify::{run_catalog, CheckStatus, VerifyOptions};
use cliffham::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CliffhamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Domain = 4,
    Divergence = 5,
    Aborted = 6,
    Io = 7,
    VerifyFailed = 8,
    Panic = 9,
}

/// A parsed Hamiltonian.
pub struct CliffhamExpr {
    inner: ExprAst,
}

/// An integrated trajectory.
pub struct CliffhamTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> CliffhamStatus {
    match e {
        Error::Syntax { .. } | Error::VariableOutOfRange { .. } | Error::UnknownFunction(_) => CliffhamStatus::Parse,
        Error::Domain(_) | Error::NonConstantCoefficient(_) | Error::DegenerateForm { .. } => CliffhamStatus::Domain,
        Error::MidpointDivergence { .. } => CliffhamStatus::Divergence,
        Error::Aborted { .. } => CliffhamStatus::Aborted,
        Error::Io(_) => CliffhamStatus::Io,
        _ => CliffhamStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> CliffhamStatus {
    let status = status_of(&e);
    set_error(e.to_string());
    status
}

/// Runs `f`, turning panics into [`CliffhamStatus::Panic`].
fn guard(f: impl FnOnce() -> CliffhamStatus) -> CliffhamStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic");
            CliffhamStatus::Panic
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            set_error(concat!("`", stringify!($p), "` is null"));
            return CliffhamStatus::NullPointer;
        })+
    };
}

fn structure_from(id: u32) -> Option<StructureId> {
    match id {
        1 => Some(StructureId::J1),
        2 => Some(StructureId::J2),
        3 => Some(StructureId::J3),
        _ => None,
    }
}

unsafe fn str_arg<'a>(s: *const c_char) -> Result<&'a str, CliffhamStatus> {
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        CliffhamStatus::InvalidArgument
    })
}

unsafe fn state_arg(n: usize, x: *const f64, len: usize) -> Result<StateVector, CliffhamStatus> {
    let v = std::slice::from_raw_parts(x, len).to_vec();
    StateVector::from_vec(n, v).map_err(fail)
}

unsafe fn write_out(out: *mut f64, out_len: usize, values: &[f64]) -> CliffhamStatus {
    if out_len < values.len() {
        set_error(format!("output buffer holds {out_len} values, need {}", values.len()));
        return CliffhamStatus::InvalidArgument;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    CliffhamStatus::Ok
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next `cliffham_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cliffham_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses `source` as a Hamiltonian on `R^{8n}`.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cliffham_expr_parse(
    source: *const c_char,
    n: usize,
    out: *mut *mut CliffhamExpr,
) -> CliffhamStatus {
    guard(|| {
        non_null!(source, out);
        let src = match str_arg(source) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match hamiltonian::parse(src, n) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CliffhamExpr { inner }));
                CliffhamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `expr` must be NULL or a pointer from [`cliffham_expr_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cliffham_expr_free(expr: *mut CliffhamExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Dimension `8n` of the state space of `expr`, or 0 for NULL.
///
/// # Safety
/// `expr` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cliffham_expr_dim(expr: *const CliffhamExpr) -> usize {
    expr.as_ref().map_or(0, |e| BLOCKS * e.inner.n())
}

/// Evaluates `H(x)`.
///
/// # Safety
/// `expr` must be a live handle, `x` must point to `len` doubles and `out`
/// to one writable double.
#[no_mangle]
pub unsafe extern "C" fn cliffham_expr_eval(
    expr: *const CliffhamExpr,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> CliffhamStatus {
    guard(|| {
        non_null!(expr, x, out);
        let h = &(*expr).inner;
        let state = match state_arg(h.n(), x, len) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match hamiltonian::eval(h, &state) {
            Ok(v) => {
                *out = v;
                CliffhamStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Writes `∇H(x)` (8n values) to `out`.
///
/// # Safety
/// As [`cliffham_expr_eval`], with `out` pointing to `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cliffham_expr_grad(
    expr: *const CliffhamExpr,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> CliffhamStatus {
    guard(|| {
        non_null!(expr, x, out);
        let h = &(*expr).inner;
        let state = match state_arg(h.n(), x, len) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match hamiltonian::grad(h, &state) {
            Ok(g) => write_out(out, out_len, g.components()),
            Err(e) => fail(e),
        }
    })
}

/// Writes the Hamiltonian vector field of `expr` for structure
/// `structure` (1, 2 or 3) at `x` to `out`.
///
/// # Safety
/// As [`cliffham_expr_grad`].
#[no_mangle]
pub unsafe extern "C" fn cliffham_hamiltonian_field(
    expr: *const CliffhamExpr,
    structure: u32,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> CliffhamStatus {
    guard(|| {
        non_null!(expr, x, out);
        let Some(id) = structure_from(structure) else {
            set_error(format!("structure must be 1, 2 or 3, got {structure}"));
            return CliffhamStatus::InvalidArgument;
        };
        let h = &(*expr).inner;
        let state = match state_arg(h.n(), x, len) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match hamiltonian::hamiltonian_field(id, h, &state) {
            Ok(v) => write_out(out, out_len, v.components()),
            Err(e) => fail(e),
        }
    })
}

/// Image of `block` (0..7) under structure `structure`: target block and
/// sign (+1 or -1).
///
/// # Safety
/// `target` and `sign` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cliffham_structure_entry(
    structure: u32,
    block: u8,
    target: *mut u8,
    sign: *mut i8,
) -> CliffhamStatus {
    guard(|| {
        non_null!(target, sign);
        let (Some(id), Some(b)) = (structure_from(structure), BlockIndex::new(block)) else {
            set_error(format!("no entry for structure {structure}, block {block}"));
            return CliffhamStatus::InvalidArgument;
        };
        let map = make_structure(id);
        *target = map.target(b).get() as u8;
        *sign = map.sign(b).value();
        CliffhamStatus::Ok
    })
}

/// Integrates the JSON configuration `config_json`.
///
/// On [`CliffhamStatus::Aborted`] `*out` still receives the partial
/// trajectory, flagged invalid; on other failures it is set to NULL.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cliffham_simulate(
    config_json: *const c_char,
    out: *mut *mut CliffhamTrajectory,
) -> CliffhamStatus {
    guard(|| {
        non_null!(config_json, out);
        *out = ptr::null_mut();
        let text = match str_arg(config_json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let cfg = match SimulationConfig::from_json(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        match integrate(&cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CliffhamTrajectory { inner }));
                CliffhamStatus::Ok
            }
            Err(Error::Aborted { step, cause, partial }) => {
                set_error(format!("aborted at step {step}: {cause}"));
                *out = Box::into_raw(Box::new(CliffhamTrajectory { inner: *partial }));
                CliffhamStatus::Aborted
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `traj` must be NULL or a pointer from [`cliffham_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_free(traj: *mut CliffhamTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of samples, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_len(traj: *const CliffhamTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.len())
}

/// State dimension `8n`, or 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_dim(traj: *const CliffhamTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.inner.dim())
}

/// False for NULL and for trajectories cut short by an error.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_is_valid(traj: *const CliffhamTrajectory) -> bool {
    traj.as_ref().is_some_and(|t| t.inner.meta.valid)
}

/// Copies sample `index`: time, state (into `x`, `x_len` ≥ 8n) and energy.
///
/// # Safety
/// `traj` must be a live handle; `t`, `energy` writable; `x` must point to
/// `x_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_sample(
    traj: *const CliffhamTrajectory,
    index: usize,
    t: *mut f64,
    x: *mut f64,
    x_len: usize,
    energy: *mut f64,
) -> CliffhamStatus {
    guard(|| {
        non_null!(traj, t, x, energy);
        let Some(s) = (&(*traj).inner.samples).get(index) else {
            set_error(format!("sample {index} out of range"));
            return CliffhamStatus::InvalidArgument;
        };
        let st = write_out(x, x_len, &s.x);
        if st == CliffhamStatus::Ok {
            *t = s.t;
            *energy = s.energy;
        }
        st
    })
}

/// `max |H(x_t) - H(x_0)|` over the trajectory; NaN for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_energy_drift(traj: *const CliffhamTrajectory) -> f64 {
    traj.as_ref().map_or(f64::NAN, |t| energy_drift(&t.inner))
}

/// Writes the trajectory as CSV to `path`.
///
/// # Safety
/// `traj` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cliffham_trajectory_write_csv(
    traj: *const CliffhamTrajectory,
    path: *const c_char,
) -> CliffhamStatus {
    guard(|| {
        non_null!(traj, path);
        let p = match str_arg(path) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match std::fs::write(p, (*traj).inner.to_csv_string()) {
            Ok(()) => CliffhamStatus::Ok,
            Err(e) => fail(e.into()),
        }
    })
}

/// Runs the certification catalog for the `ns_len` values in `ns`.
/// Returns [`CliffhamStatus::VerifyFailed`] if any check fails and stores
/// the number of failed checks in `failed` when it is not NULL.
///
/// # Safety
/// `ns` must point to `ns_len` values; `failed` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn cliffham_verify(
    ns: *const usize,
    ns_len: usize,
    seed: u64,
    points: usize,
    failed: *mut u32,
) -> CliffhamStatus {
    guard(|| {
        non_null!(ns);
        let opts = VerifyOptions {
            ns: std::slice::from_raw_parts(ns, ns_len).to_vec(),
            seed,
            points,
        };
        let report = match run_catalog(&StructureSet::standard(), &opts) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        let count = report
            .records
            .iter()
            .filter(|r| r.status == CheckStatus::Fail)
            .count() as u32;
        if !failed.is_null() {
            *failed = count;
        }
        if count == 0 {
            CliffhamStatus::Ok
        } else {
            set_error(report.render_text());
            CliffhamStatus::VerifyFailed
        }
    })
}
