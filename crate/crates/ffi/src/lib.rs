//! C interface to the algebroid calculus: opaque system handles, integer
//! status codes, and caller-owned UTF-8 strings. The committed header
//! `include/pncalc.h` mirrors this surface by hand; keep the two in sync.
//!
//! Conventions: every call returns a `PN_*` status code (or a pointer where
//! documented), failures leave a message readable through `pn_last_error`,
//! and every `char*` handed out is owned by the caller and released with
//! `pn_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use pncalc::error::Error;
use pncalc::flows;
use pncalc::hierarchy;
use pncalc::suite::System;

pub const PN_OK: i32 = 0;
/// The identity suite ran and at least one check exceeded its tolerance.
pub const PN_ERR_CHECK_FAILED: i32 = 1;
/// A null pointer, a length mismatch, or an argument the system rejects.
pub const PN_ERR_INVALID_ARGUMENT: i32 = 2;
/// The target is neither a built-in example nor a loadable JSON config.
pub const PN_ERR_UNKNOWN_SYSTEM: i32 = 3;
/// Evaluation failed (singular matrix, domain violation, and the like).
pub const PN_ERR_EVAL: i32 = 4;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

/// A loaded system behind the C interface. Opaque: only this library reads
/// its layout.
pub struct PnSystem(System);

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().take());
}

fn fail(code: i32, message: &str) -> i32 {
    let owned = CString::new(message.replace('\0', " ")).expect("NULs stripped");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(owned));
    code
}

/// Calls made after a handle exists map config and validity complaints to
/// bad arguments; anything else is an evaluation failure.
fn runtime_fail(e: &Error) -> i32 {
    let code = match e {
        Error::Config(_) | Error::Invalid(_) => PN_ERR_INVALID_ARGUMENT,
        _ => PN_ERR_EVAL,
    };
    fail(code, &e.to_string())
}

fn own_string(s: &str) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("NULs stripped")
        .into_raw()
}

/// The most recent failure message on this thread as a caller-owned copy,
/// or null when the last call succeeded. Release with `pn_string_free`.
#[no_mangle]
pub extern "C" fn pn_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => own_string(&msg.to_string_lossy()),
        None => std::ptr::null_mut(),
    })
}

/// Releases a string returned by this library. Null is tolerated.
///
/// # Safety
/// `s` must be null or a pointer previously returned by this library and
/// not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a built-in example (`toda-physical[-n]`, `toda-extended[-n]`,
/// `toda-flaschka[-n]`, `toda-algebroid[-n]`) or a JSON config path and
/// writes the handle to `out`.
///
/// # Safety
/// `target` must be a NUL-terminated string and `out` a valid location for
/// one pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_system_open(
    target: *const c_char,
    out: *mut *mut PnSystem,
) -> i32 {
    if target.is_null() || out.is_null() {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_system_open: null pointer");
    }
    let Ok(target) = CStr::from_ptr(target).to_str() else {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_system_open: target is not UTF-8");
    };
    match System::load(target) {
        Ok(sys) => {
            *out = Box::into_raw(Box::new(PnSystem(sys)));
            clear_error();
            PN_OK
        }
        Err(e) => fail(PN_ERR_UNKNOWN_SYSTEM, &e.to_string()),
    }
}

/// Releases a system handle. Null is tolerated.
///
/// # Safety
/// `sys` must be null or an open handle, and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pn_system_free(sys: *mut PnSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// The system's name as a caller-owned string, or null for a null handle.
///
/// # Safety
/// `sys` must be null or an open handle.
#[no_mangle]
pub unsafe extern "C" fn pn_system_name(sys: *const PnSystem) -> *mut c_char {
    if sys.is_null() {
        return std::ptr::null_mut();
    }
    own_string((*sys).0.name())
}

/// Base dimension (coordinate count), or -1 for a null handle.
///
/// # Safety
/// `sys` must be null or an open handle.
#[no_mangle]
pub unsafe extern "C" fn pn_system_dim(sys: *const PnSystem) -> i32 {
    if sys.is_null() {
        return -1;
    }
    (*sys).0.algebroid().dim() as i32
}

/// Frame rank (anchor section count), or -1 for a null handle.
///
/// # Safety
/// `sys` must be null or an open handle.
#[no_mangle]
pub unsafe extern "C" fn pn_system_rank(sys: *const PnSystem) -> i32 {
    if sys.is_null() {
        return -1;
    }
    (*sys).0.algebroid().rank() as i32
}

/// Runs the identity suite for the system's formulation over `points`
/// seeded samples. When `out_json` is non-null it receives the full report
/// as a caller-owned JSON string whether or not the checks pass. Returns
/// `PN_OK` when every check passes and `PN_ERR_CHECK_FAILED` otherwise.
///
/// # Safety
/// `sys` must be an open handle; `out_json` must be null or a valid
/// location for one pointer.
#[no_mangle]
pub unsafe extern "C" fn pn_system_validate(
    sys: *const PnSystem,
    points: usize,
    tolerance: f64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> i32 {
    if sys.is_null() {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_system_validate: null handle");
    }
    let report = match (*sys).0.standard_report(points, tolerance, seed) {
        Ok(r) => r,
        Err(e) => return runtime_fail(&e),
    };
    if !out_json.is_null() {
        *out_json = own_string(&report.to_json());
    }
    if report.all_pass() {
        clear_error();
        PN_OK
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        fail(
            PN_ERR_CHECK_FAILED,
            &format!("{failed} of {} checks failed", report.checks.len()),
        )
    }
}

unsafe fn with_point<'a>(
    sys: *const PnSystem,
    point: *const f64,
    len: usize,
    who: &str,
) -> Result<(&'a System, &'a [f64]), i32> {
    if sys.is_null() || point.is_null() {
        return Err(fail(PN_ERR_INVALID_ARGUMENT, &format!("{who}: null pointer")));
    }
    let system = &(*sys).0;
    let dim = system.algebroid().dim();
    if len != dim {
        return Err(fail(
            PN_ERR_INVALID_ARGUMENT,
            &format!("{who}: point has {len} coordinates, expected {dim}"),
        ));
    }
    Ok((system, std::slice::from_raw_parts(point, len)))
}

/// Evaluates the ladder Hamiltonian `h_index` (index -1 and beyond through
/// negative powers, 0 for the log-determinant, positive for traces) at a
/// point with `len == pn_system_dim` coordinates, writing the value to
/// `out`.
///
/// # Safety
/// `sys` must be an open handle, `point` must hold `len` doubles, and
/// `out` must be a valid location for one double.
#[no_mangle]
pub unsafe extern "C" fn pn_hamiltonian_value(
    sys: *const PnSystem,
    index: i64,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if out.is_null() {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_hamiltonian_value: null out");
    }
    let (system, pt) = match with_point(sys, point, len, "pn_hamiltonian_value") {
        Ok(x) => x,
        Err(code) => return code,
    };
    let (_, n) = match system.recursion_data() {
        Ok(x) => x,
        Err(e) => return runtime_fail(&e),
    };
    let hams = hierarchy::hamiltonians(n, index, index);
    match hams[&index].value(pt) {
        Ok(v) => {
            *out = v;
            clear_error();
            PN_OK
        }
        Err(e) => runtime_fail(&e),
    }
}

/// Evaluates the hierarchy vector field `X^(index)` pushed down to the
/// base coordinates at a point, writing `len` doubles (one per coordinate)
/// to `out`.
///
/// # Safety
/// `sys` must be an open handle, and `point` and `out` must each hold
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pn_hierarchy_field(
    sys: *const PnSystem,
    index: i64,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> i32 {
    if out.is_null() {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_hierarchy_field: null out");
    }
    let (system, pt) = match with_point(sys, point, len, "pn_hierarchy_field") {
        Ok(x) => x,
        Err(code) => return code,
    };
    let (pi, n) = match system.recursion_data() {
        Ok(x) => x,
        Err(e) => return runtime_fail(&e),
    };
    let comps =
        match hierarchy::covered_hierarchy_field(system.algebroid(), pi, n, index) {
            Ok(c) => c,
            Err(e) => return runtime_fail(&e),
        };
    for (i, comp) in comps.iter().enumerate() {
        match comp.value(pt) {
            Ok(v) => *out.add(i) = v,
            Err(e) => return runtime_fail(&e),
        }
    }
    clear_error();
    PN_OK
}

/// Integrates the flow of the ladder Hamiltonian `h_hamiltonian` along the
/// bracket `N^bracket pi0` from `x0` (or the domain midpoint when `x0` is
/// null) to time `t` with step `dt`. Writes the final state to `out_state`
/// and the worst relative drift among the conserved ladder to `out_drift`;
/// either output may be null to skip it. The state has `len ==
/// pn_system_dim` coordinates.
///
/// # Safety
/// `sys` must be an open handle; `x0` and `out_state` must each be null or
/// hold `len` doubles; `out_drift` must be null or a valid location for
/// one double.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn pn_flow_final_state(
    sys: *const PnSystem,
    hamiltonian: i64,
    bracket: i64,
    x0: *const f64,
    len: usize,
    t: f64,
    dt: f64,
    out_state: *mut f64,
    out_drift: *mut f64,
) -> i32 {
    if sys.is_null() {
        return fail(PN_ERR_INVALID_ARGUMENT, "pn_flow_final_state: null handle");
    }
    let setup = match (*sys).0.ladder_flow(hamiltonian, bracket) {
        Ok(s) => s,
        Err(e) => return runtime_fail(&e),
    };
    let flow_dim = setup.coords.len();
    if (!x0.is_null() || !out_state.is_null()) && len != flow_dim {
        return fail(
            PN_ERR_INVALID_ARGUMENT,
            &format!("pn_flow_final_state: state has {len} coordinates, expected {flow_dim}"),
        );
    }
    let start: Vec<f64> = if x0.is_null() {
        setup.start.clone()
    } else {
        std::slice::from_raw_parts(x0, len).to_vec()
    };
    let traj = match flows::integrate(&setup.field, &start, t, dt) {
        Ok(traj) => traj,
        Err(e) => return runtime_fail(&e),
    };
    let drift = match flows::conservation_report(&traj, &setup.conserved) {
        Ok(d) => d,
        Err(e) => return runtime_fail(&e),
    };
    if !out_state.is_null() {
        for (i, v) in traj.last_state().iter().enumerate() {
            *out_state.add(i) = *v;
        }
    }
    if !out_drift.is_null() {
        *out_drift = drift.iter().map(|d| d.max_drift).fold(0.0, f64::max);
    }
    clear_error();
    PN_OK
}
