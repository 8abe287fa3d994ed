//! C ABI over the `cecbs` planner.
//!
//! Scenarios and solutions cross the boundary as opaque handles. Every
//! fallible call returns a [`CecbsStatus`]; on failure the message is kept in
//! thread-local storage and can be read with [`cecbs_last_error`]. Panics are
//! caught and reported as [`CecbsStatus::Panic`].
//!
//! Handles must be released with their matching `*_free` function. Strings
//! returned by the library are released with [`cecbs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cecbs::cecbs::{solve, validate_solution, Solution};
use cecbs::scenario::{load_scenario, write_solution, Scenario, SolutionRecord};
use cecbs::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CecbsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed parameters or geometry.
    InvalidInput = 3,
    /// The scenario failed validation.
    InvalidScenario = 4,
    /// The search gave up without a collision-free solution.
    Unsolved = 5,
    Io = 6,
    Json = 7,
    /// An agent index was past the end.
    OutOfRange = 8,
    /// The output buffer is too small.
    BufferTooSmall = 9,
    /// Internal panic; the library state is still usable.
    Panic = 10,
}

/// Loaded, validated scenario.
pub struct CecbsScenario(Scenario);

/// Solved scenario together with the paths of all agents.
pub struct CecbsSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> CecbsStatus {
    match e {
        Error::InvalidScenario { .. } => CecbsStatus::InvalidScenario,
        Error::Io { .. } => CecbsStatus::Io,
        Error::Json(_) => CecbsStatus::Json,
        e if e.is_unsolved() => CecbsStatus::Unsolved,
        _ => CecbsStatus::InvalidInput,
    }
}

struct Fail(CecbsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CecbsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CecbsStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            CecbsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail(CecbsStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail(CecbsStatus::NullArgument, format!("`{name}` is null")))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(CecbsStatus::NullArgument, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(CecbsStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

fn agent_index(sol: &Solution, index: usize) -> Result<&cecbs::planner::PlanResult, Fail> {
    sol.paths.values().nth(index).ok_or_else(|| {
        Fail(
            CecbsStatus::OutOfRange,
            format!("agent index {index} out of range (have {})", sol.paths.len()),
        )
    })
}

/// Message of the last failed call on this thread, or null if it succeeded.
///
/// The pointer stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn cecbs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cecbs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_scenario_from_json(
    json: *const c_char,
    out_scenario: *mut *mut CecbsScenario,
) -> CecbsStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        *slot = ptr::null_mut();
        let s = Scenario::from_json(str_arg(json, "json")?)?;
        *slot = Box::into_raw(Box::new(CecbsScenario(s)));
        Ok(())
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_scenario` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_scenario_load(
    path: *const c_char,
    out_scenario: *mut *mut CecbsScenario,
) -> CecbsStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        *slot = ptr::null_mut();
        let s = load_scenario(str_arg(path, "path")?)?;
        *slot = Box::into_raw(Box::new(CecbsScenario(s)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cecbs_scenario_free(scenario: *mut CecbsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of agents; 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cecbs_scenario_agent_count(scenario: *const CecbsScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.0.agents.len())
}

/// Solves the scenario with its stored parameters and the given seed.
///
/// # Safety
/// `scenario` must be a live handle; `out_solution` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solve(
    scenario: *const CecbsScenario,
    seed: u64,
    out_solution: *mut *mut CecbsSolution,
) -> CecbsStatus {
    guard(|| {
        let slot = out(out_solution, "out_solution")?;
        *slot = ptr::null_mut();
        let s = &deref(scenario, "scenario")?.0;
        let mut params = s.params.clone();
        params.planner.seed = seed;
        let sol = solve(s, &params)?;
        *slot = Box::into_raw(Box::new(CecbsSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_free(solution: *mut CecbsSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Sum of path costs; NaN for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_soc(solution: *const CecbsSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.0.soc)
}

/// Constraint-tree nodes expanded; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_iterations(solution: *const CecbsSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.iterations)
}

/// Number of agent paths; 0 for a null handle.
///
/// # Safety
/// `solution` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_agent_count(solution: *const CecbsSolution) -> usize {
    solution.as_ref().map_or(0, |s| s.0.paths.len())
}

/// Id and path cost of the agent at `index` (agents are ordered by id).
///
/// # Safety
/// `solution` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_agent(
    solution: *const CecbsSolution,
    index: usize,
    out_id: *mut u32,
    out_cost: *mut f64,
) -> CecbsStatus {
    guard(|| {
        let sol = &deref(solution, "solution")?.0;
        let (id, plan) = sol.paths.iter().nth(index).ok_or_else(|| {
            Fail(CecbsStatus::OutOfRange, format!("agent index {index} out of range"))
        })?;
        *out(out_id, "out_id")? = id.0;
        *out(out_cost, "out_cost")? = plan.cost;
        Ok(())
    })
}

/// Copies the smoothed path of agent `index` as interleaved `x, y` pairs.
///
/// `*inout_len` holds the capacity of `xy` in points on entry and the path
/// length in points on return. Pass a null `xy` to query the length only;
/// a short buffer yields `BufferTooSmall` with the required length stored.
///
/// # Safety
/// `xy` must be null or point to `2 * *inout_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_path(
    solution: *const CecbsSolution,
    index: usize,
    xy: *mut f64,
    inout_len: *mut usize,
) -> CecbsStatus {
    guard(|| {
        let sol = &deref(solution, "solution")?.0;
        let len = out(inout_len, "inout_len")?;
        let points = agent_index(sol, index)?.smooth_path.points();
        let cap = std::mem::replace(len, points.len());
        if xy.is_null() {
            return Ok(());
        }
        if cap < points.len() {
            return Err(Fail(
                CecbsStatus::BufferTooSmall,
                format!("buffer holds {cap} points, path has {}", points.len()),
            ));
        }
        let buf = std::slice::from_raw_parts_mut(xy, 2 * points.len());
        for (pair, p) in buf.chunks_exact_mut(2).zip(points) {
            pair[0] = p.x;
            pair[1] = p.y;
        }
        Ok(())
    })
}

/// Serializes the solution record as JSON. Free the string with [`cecbs_string_free`].
///
/// # Safety
/// Handles must be live; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_to_json(
    scenario: *const CecbsScenario,
    solution: *const CecbsSolution,
    include_timing: bool,
    out_json: *mut *mut c_char,
) -> CecbsStatus {
    guard(|| {
        let slot = out(out_json, "out_json")?;
        *slot = ptr::null_mut();
        let rec = SolutionRecord::from_solution(
            &deref(scenario, "scenario")?.0,
            &deref(solution, "solution")?.0,
            include_timing,
        )?;
        let text = CString::new(rec.to_json()?)
            .map_err(|e| Fail(CecbsStatus::Json, e.to_string()))?;
        *slot = text.into_raw();
        Ok(())
    })
}

/// Writes the solution record to a JSON file.
///
/// # Safety
/// Handles must be live; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cecbs_solution_write(
    scenario: *const CecbsScenario,
    solution: *const CecbsSolution,
    path: *const c_char,
    include_timing: bool,
) -> CecbsStatus {
    guard(|| {
        let rec = SolutionRecord::from_solution(
            &deref(scenario, "scenario")?.0,
            &deref(solution, "solution")?.0,
            include_timing,
        )?;
        write_solution(&rec, str_arg(path, "path")?)?;
        Ok(())
    })
}

/// Re-checks a solution by dense-time simulation. `dt_factor` scales the
/// step `r_min / v_max`; `*out_passed` is set to whether every check held.
///
/// # Safety
/// Handles must be live; `out_passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cecbs_validate(
    scenario: *const CecbsScenario,
    solution: *const CecbsSolution,
    dt_factor: f64,
    out_passed: *mut bool,
) -> CecbsStatus {
    guard(|| {
        let passed = out(out_passed, "out_passed")?;
        if !(dt_factor > 0.0 && dt_factor.is_finite()) {
            return Err(Fail(
                CecbsStatus::InvalidInput,
                format!("dt_factor must be positive, got {dt_factor}"),
            ));
        }
        let report = validate_solution(&deref(scenario, "scenario")?.0, &deref(solution, "solution")?.0, dt_factor);
        *passed = report.passed();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn cecbs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
