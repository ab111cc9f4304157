//! C ABI over the planner.
//!
//! Objects cross the boundary as opaque handles that the caller frees with the
//! matching `_free` function. Every call returns an [`OmpcStatus`]; on failure
//! `ompc_last_error` holds a message for the calling thread. Panics are caught
//! at the boundary and reported as [`OmpcStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use orbitope_mpc::conic::SolveStatus;
use orbitope_mpc::export::write_trajectory_csv;
use orbitope_mpc::mpc::{plan, receding_horizon, RhcStop, Trajectory};
use orbitope_mpc::numerics::SmallMatrix;
use orbitope_mpc::scenario::{load_scenario, parse_scenario, ScenarioFile};
use orbitope_mpc::{cones, Error};

/// Result of every call. The solver outcomes share their numbers with the
/// command-line exit codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmpcStatus {
    Ok = 0,
    /// Numerical failure or an unbounded relaxation.
    Other = 1,
    Infeasible = 2,
    /// Solver iteration/node limit, or the closed loop ran out of steps.
    IterLimit = 3,
    InvalidInput = 4,
    NullPointer = 5,
    Io = 6,
    Panic = 7,
}

/// A parsed scenario file.
pub struct OmpcScenario {
    file: ScenarioFile,
}

/// A planned or executed trajectory.
pub struct OmpcTrajectory {
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: OmpcStatus, msg: impl Into<String>) -> OmpcStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> OmpcStatus {
    let status = match e {
        Error::InvalidInput(_) | Error::Scenario { .. } | Error::Parse { .. } => OmpcStatus::InvalidInput,
        Error::Io { .. } => OmpcStatus::Io,
        Error::Numerical(_) => OmpcStatus::Other,
    };
    fail(status, e.to_string())
}

fn from_solve(status: SolveStatus) -> OmpcStatus {
    match status {
        SolveStatus::Optimal => OmpcStatus::Ok,
        SolveStatus::Infeasible => fail(OmpcStatus::Infeasible, "problem is infeasible"),
        SolveStatus::IterLimit => fail(OmpcStatus::IterLimit, "iteration or node limit reached"),
        SolveStatus::Unbounded => fail(OmpcStatus::Other, "relaxation is unbounded"),
    }
}

/// Runs `f`, turning a panic into a status.
fn guard(f: impl FnOnce() -> OmpcStatus) -> OmpcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(OmpcStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, OmpcStatus> {
    if p.is_null() {
        return Err(fail(OmpcStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(OmpcStatus::InvalidInput, "string argument is not UTF-8"))
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(OmpcStatus::NullPointer, concat!("null ", stringify!($p))),
        }
    };
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ompc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static, NUL-terminated crate version.
#[no_mangle]
pub extern "C" fn ompc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn store<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

/// Loads a TOML scenario from `path`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ompc_scenario_load(path: *const c_char, out: *mut *mut OmpcScenario) -> OmpcStatus {
    guard(|| {
        if out.is_null() {
            return fail(OmpcStatus::NullPointer, "null out");
        }
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_scenario(Path::new(path)) {
            Ok(file) => {
                store(out, OmpcScenario { file });
                OmpcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Parses a TOML scenario held in memory.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ompc_scenario_parse(text: *const c_char, out: *mut *mut OmpcScenario) -> OmpcStatus {
    guard(|| {
        if out.is_null() {
            return fail(OmpcStatus::NullPointer, "null out");
        }
        let text = match c_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_scenario(text) {
            Ok(file) => {
                store(out, OmpcScenario { file });
                OmpcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Overrides the solver tolerance, which must lie in (0, 1).
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ompc_scenario_set_tol(scenario: *mut OmpcScenario, tol: f64) -> OmpcStatus {
    let s = match unsafe { scenario.as_mut() } {
        Some(s) => s,
        None => return fail(OmpcStatus::NullPointer, "null scenario"),
    };
    if !(tol > 0.0 && tol < 1.0) {
        return fail(OmpcStatus::InvalidInput, format!("tolerance must lie in (0, 1), got {tol}"));
    }
    s.file.mip.solver.tol = tol;
    OmpcStatus::Ok
}

/// Spatial dimension (2 or 3).
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ompc_scenario_dim(scenario: *const OmpcScenario, out: *mut usize) -> OmpcStatus {
    let s = deref!(scenario);
    if out.is_null() {
        return fail(OmpcStatus::NullPointer, "null out");
    }
    *out = s.file.scenario.dim;
    OmpcStatus::Ok
}

/// # Safety
/// `scenario` must be null or a handle from `ompc_scenario_load`/`_parse`
/// that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn ompc_scenario_free(scenario: *mut OmpcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// One-shot solve. `*out` receives a trajectory whenever the solve ran, also
/// when the status is `INFEASIBLE` or `ITER_LIMIT`; it stays null on errors.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ompc_plan(scenario: *const OmpcScenario, out: *mut *mut OmpcTrajectory) -> OmpcStatus {
    guard(|| {
        let s = deref!(scenario);
        if out.is_null() {
            return fail(OmpcStatus::NullPointer, "null out");
        }
        *out = ptr::null_mut();
        match plan(&s.file.scenario, &s.file.mip) {
            Ok(p) => {
                let status = p.trajectory.status;
                store(out, OmpcTrajectory { traj: p.trajectory });
                from_solve(status)
            }
            Err(e) => from_error(e),
        }
    })
}

/// Receding-horizon run of the scenario's `[rhc]` section. Returns `OK` when
/// the goal was captured and `ITER_LIMIT` when the step budget ran out;
/// `*out` holds the executed trajectory in both cases.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ompc_rhc(scenario: *const OmpcScenario, out: *mut *mut OmpcTrajectory) -> OmpcStatus {
    guard(|| {
        let s = deref!(scenario);
        if out.is_null() {
            return fail(OmpcStatus::NullPointer, "null out");
        }
        *out = ptr::null_mut();
        let (Some(settings), Some(cfg)) = (s.file.rhc_settings(), s.file.rhc.as_ref()) else {
            return fail(OmpcStatus::InvalidInput, "scenario has no [rhc] section");
        };
        match receding_horizon(&s.file.scenario, &|t| cfg.goal.at(t), &settings) {
            Ok(r) => {
                let status = match r.stop {
                    RhcStop::Captured { .. } => OmpcStatus::Ok,
                    RhcStop::StepLimit => fail(OmpcStatus::IterLimit, "step limit reached before capture"),
                    RhcStop::Aborted { step, status } => {
                        let code = from_solve(status);
                        set_error(format!("solve at step {step} ended {status:?}"));
                        if code == OmpcStatus::Ok {
                            OmpcStatus::Other
                        } else {
                            code
                        }
                    }
                };
                store(out, OmpcTrajectory { traj: r.trajectory });
                status
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `traj` must be null or a handle from `ompc_plan`/`ompc_rhc` that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_free(traj: *mut OmpcTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Number of rows (time instants), horizon + 1 for a plan.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_len(traj: *const OmpcTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.steps.len())
}

/// Spatial dimension of the rows, 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_dim(traj: *const OmpcTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.traj.dim)
}

/// Objective value of the solve (a plan) or the accumulated cost (a run).
///
/// # Safety
/// `traj` must be null or a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_objective(traj: *const OmpcTrajectory, out: *mut f64) -> OmpcStatus {
    let t = deref!(traj);
    if out.is_null() {
        return fail(OmpcStatus::NullPointer, "null out");
    }
    *out = t.traj.objective;
    OmpcStatus::Ok
}

/// Copies one row: `position` takes `dim` values, `rotation` `dim*dim`
/// row-major, `det` one. Any output pointer may be null to skip it.
///
/// # Safety
/// Non-null outputs must have room for the counts above.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_row(
    traj: *const OmpcTrajectory,
    row: usize,
    position: *mut f64,
    rotation: *mut f64,
    det: *mut f64,
) -> OmpcStatus {
    let t = deref!(traj);
    let Some(step) = t.traj.steps.get(row) else {
        return fail(OmpcStatus::InvalidInput, format!("row {row} out of range ({} rows)", t.traj.steps.len()));
    };
    if !position.is_null() {
        ptr::copy_nonoverlapping(step.position.as_ptr(), position, step.position.len());
    }
    if !rotation.is_null() {
        let r = step.rotation.as_slice();
        ptr::copy_nonoverlapping(r.as_ptr(), rotation, r.len());
    }
    if !det.is_null() {
        *det = step.det;
    }
    OmpcStatus::Ok
}

/// Input applied at `row` (zeros on the last row). Writes up to `cap` values
/// and stores the input length in `len`; a short buffer is an error.
///
/// # Safety
/// `input` must have room for `cap` values; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_input(
    traj: *const OmpcTrajectory,
    row: usize,
    input: *mut f64,
    cap: usize,
    len: *mut usize,
) -> OmpcStatus {
    let t = deref!(traj);
    if len.is_null() || input.is_null() {
        return fail(OmpcStatus::NullPointer, "null output buffer");
    }
    let Some(step) = t.traj.steps.get(row) else {
        return fail(OmpcStatus::InvalidInput, format!("row {row} out of range"));
    };
    *len = step.input.len();
    if cap < step.input.len() {
        return fail(OmpcStatus::InvalidInput, format!("buffer holds {cap}, input has {}", step.input.len()));
    }
    ptr::copy_nonoverlapping(step.input.as_ptr(), input, step.input.len());
    OmpcStatus::Ok
}

/// Writes the trajectory table (same format as the command-line export).
///
/// # Safety
/// `traj` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ompc_trajectory_write_csv(traj: *const OmpcTrajectory, path: *const c_char) -> OmpcStatus {
    guard(|| {
        let t = deref!(traj);
        let path = match c_str(path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        let written = File::create(path).and_then(|f| write_trajectory_csv(&t.traj, BufWriter::new(f), true));
        match written {
            Ok(()) => OmpcStatus::Ok,
            Err(e) => fail(OmpcStatus::Io, format!("{path}: {e}")),
        }
    })
}

/// Nearest rotation to the `n×n` row-major matrix `m` (n = 2 or 3) in the
/// Frobenius norm. `rotation` receives `n*n` values; `distance` and `unique`
/// may be null.
///
/// # Safety
/// `m` and `rotation` must hold `n*n` values.
#[no_mangle]
pub unsafe extern "C" fn ompc_project_to_son(
    n: usize,
    m: *const f64,
    rotation: *mut f64,
    distance: *mut f64,
    unique: *mut bool,
) -> OmpcStatus {
    guard(|| {
        if m.is_null() || rotation.is_null() {
            return fail(OmpcStatus::NullPointer, "null matrix");
        }
        if !(n == 2 || n == 3) {
            return fail(OmpcStatus::InvalidInput, format!("n must be 2 or 3, got {n}"));
        }
        let data = std::slice::from_raw_parts(m, n * n).to_vec();
        let p = match SmallMatrix::from_row_major(n, n, data).and_then(|s| cones::project_to_son(&s)) {
            Ok(p) => p,
            Err(e) => return from_error(e),
        };
        ptr::copy_nonoverlapping(p.rotation.as_slice().as_ptr(), rotation, n * n);
        if !distance.is_null() {
            *distance = p.distance;
        }
        if !unique.is_null() {
            *unique = p.unique;
        }
        OmpcStatus::Ok
    })
}
