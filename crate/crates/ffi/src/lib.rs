//! C ABI over the `stealthlp` core.
//!
//! Every fallible call returns an [`SlpStatus`]; on failure the message is
//! retrievable through [`slp_last_error`] on the same thread. Handles are
//! opaque and owned by the caller once returned; release them with the
//! matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stealthlp::attack::{self, AttackProblem, AttackSolution, AttackStatus, Scenario, SolveOptions};
use stealthlp::cli::io::parse_system;
use stealthlp::lp::{self, LinearProgram, LpStatus};
use stealthlp::lti::{close_loop, pulse_response, ClosedLoopMaps, Matrix, PulseResponse, StateSpaceModel};
use stealthlp::vulnerability::{actuator_attack_existence, sensor_attack_existence, RationalTransfer, Verdict};
use stealthlp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Stability = 4,
    Numerical = 5,
    Parse = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpVerdict {
    Safe = 0,
    UnboundedAttackExists = 2,
    Marginal = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpLpStatus {
    Optimal = 0,
    Infeasible = 1,
    Unbounded = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlpAttackStatus {
    Bounded = 0,
    UnboundedAttack = 1,
}

/// A closed loop read from a system document.
pub struct SlpSystem {
    maps: ClosedLoopMaps,
}

pub struct SlpAttackProblem {
    inner: AttackProblem,
}

pub struct SlpAttackSolution {
    inner: AttackSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> SlpStatus {
    match e {
        Error::Dimension(_) => SlpStatus::Dimension,
        Error::NonFinite(_) | Error::InvalidArgument(_) | Error::Horizon { .. } => SlpStatus::InvalidArgument,
        Error::Stability(_) | Error::WellPosedness { .. } => SlpStatus::Stability,
        _ => SlpStatus::Numerical,
    }
}

struct Fail(SlpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SlpStatus::NullPointer, format!("{what} is null"))
}

/// Run `f`, record any failure, and never unwind across the boundary.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SlpStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlpStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            SlpStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Last error message on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn slp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Maximize `c'x` subject to `A x <= b` and `lower <= x <= upper`.
///
/// `a` is `m x n` row-major. Infinite bounds are allowed. On `Optimal`, `x`
/// (length `n`) and `value` are written; otherwise `value` receives `+inf`
/// for unbounded and NaN for infeasible and `x` is untouched.
///
/// # Safety
/// All array pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn slp_lp_solve(
    n: usize,
    c: *const f64,
    m: usize,
    a: *const f64,
    b: *const f64,
    lower: *const f64,
    upper: *const f64,
    x: *mut f64,
    value: *mut f64,
    status: *mut SlpLpStatus,
) -> SlpStatus {
    guard(|| {
        let c = slice(c, n, "c")?;
        let a = slice(a, m * n, "a")?;
        let b = slice(b, m, "b")?;
        let lower = slice(lower, n, "lower")?;
        let upper = slice(upper, n, "upper")?;
        let value = out(value, "value")?;
        let status = out(status, "status")?;
        let mut prob = LinearProgram::new(n);
        prob.maximize(c.to_vec());
        for i in 0..m {
            prob.add_le(a[i * n..(i + 1) * n].to_vec(), b[i]);
        }
        for j in 0..n {
            prob.set_bounds(j, lower[j], upper[j]);
        }
        let sol = lp::solve(&prob)?;
        *value = sol.value;
        *status = match sol.status {
            LpStatus::Optimal => {
                if n > 0 && x.is_null() {
                    return Err(null("x"));
                }
                if n > 0 {
                    std::slice::from_raw_parts_mut(x, n).copy_from_slice(&sol.x);
                }
                SlpLpStatus::Optimal
            }
            LpStatus::Infeasible => SlpLpStatus::Infeasible,
            LpStatus::Unbounded => SlpLpStatus::Unbounded,
        };
        Ok(())
    })
}

fn verdict_of(v: Verdict) -> SlpVerdict {
    match v {
        Verdict::Safe => SlpVerdict::Safe,
        Verdict::UnboundedAttackExists => SlpVerdict::UnboundedAttackExists,
        Verdict::Marginal => SlpVerdict::Marginal,
    }
}

unsafe fn transfer_verdict(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    tol: f64,
    verdict: *mut SlpVerdict,
    sensor: bool,
) -> SlpStatus {
    guard(|| {
        let p = RationalTransfer::new(slice(num, num_len, "num")?, slice(den, den_len, "den")?)?;
        let verdict = out(verdict, "verdict")?;
        let r = if sensor {
            sensor_attack_existence(&p, tol)?
        } else {
            actuator_attack_existence(&p, tol)?
        };
        *verdict = verdict_of(r.verdict);
        Ok(())
    })
}

/// Actuator-channel verdict for `P = num/den`, coefficients in descending powers of `z`.
///
/// # Safety
/// `num` and `den` must be valid for their lengths; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slp_actuator_verdict(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    tol: f64,
    verdict: *mut SlpVerdict,
) -> SlpStatus {
    transfer_verdict(num, num_len, den, den_len, tol, verdict, false)
}

/// Sensor-channel verdict for `P = num/den`.
///
/// # Safety
/// As for [`slp_actuator_verdict`].
#[no_mangle]
pub unsafe extern "C" fn slp_sensor_verdict(
    num: *const f64,
    num_len: usize,
    den: *const f64,
    den_len: usize,
    tol: f64,
    verdict: *mut SlpVerdict,
) -> SlpStatus {
    transfer_verdict(num, num_len, den, den_len, tol, verdict, true)
}

/// Parse a system document (NUL-terminated JSON) and close its loop.
/// A missing controller is an error unless `open_loop` is nonzero.
///
/// # Safety
/// `json` must be a valid C string; `system` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slp_system_from_json(json: *const c_char, open_loop: i32, system: *mut *mut SlpSystem) -> SlpStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let system = out(system, "system")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Fail(SlpStatus::Parse, e.to_string()))?;
        let file = parse_system(text, "<memory>").map_err(|e| Fail(SlpStatus::Parse, e.to_string()))?;
        let plant = file.plant()?;
        let k = match file.controller(&plant)? {
            Some(k) => k,
            None if open_loop != 0 => StateSpaceModel::static_gain(Matrix::zeros(plant.m_u(), plant.p_y())),
            None => return Err(Fail(SlpStatus::InvalidArgument, "system has no controller".into())),
        };
        let maps = close_loop(&plant, &k)?;
        *system = Box::into_raw(Box::new(SlpSystem { maps }));
        Ok(())
    })
}

/// # Safety
/// `system` must come from [`slp_system_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn slp_system_free(system: *mut SlpSystem) {
    if !system.is_null() {
        drop(Box::from_raw(system));
    }
}

fn scenario(n: u32) -> Result<Scenario, Fail> {
    u8::try_from(n)
        .ok()
        .and_then(Scenario::from_number)
        .ok_or_else(|| Fail(SlpStatus::InvalidArgument, format!("scenario {n} is not 1, 2 or 3")))
}

/// Attack problem on a closed loop with explicit windows.
///
/// # Safety
/// `system` must be a live handle, `theta` valid for `theta_len`, and
/// `problem` writable.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_problem_from_system(
    system: *const SlpSystem,
    scenario_number: u32,
    t_a: usize,
    t_zd: usize,
    t_psi_d: usize,
    theta: *const f64,
    theta_len: usize,
    alpha: f64,
    problem: *mut *mut SlpAttackProblem,
) -> SlpStatus {
    guard(|| {
        let sys = system.as_ref().ok_or_else(|| null("system"))?;
        let theta = slice(theta, theta_len, "theta")?;
        let problem = out(problem, "problem")?;
        let horizon = t_a + t_zd.max(t_psi_d);
        let inner = AttackProblem::new(
            pulse_response(&sys.maps.phi_zd, horizon),
            pulse_response(&sys.maps.phi_psi_d, horizon),
            t_a,
            t_zd,
            t_psi_d,
            theta,
            alpha,
            scenario(scenario_number)?,
        )?;
        *problem = Box::into_raw(Box::new(SlpAttackProblem { inner }));
        Ok(())
    })
}

unsafe fn markov(data: *const f64, rows: usize, cols: usize, horizon: usize, what: &str) -> Result<PulseResponse, Fail> {
    let flat = slice(data, rows * cols * (horizon + 1), what)?;
    let samples = flat
        .chunks(rows * cols)
        .map(|c| Matrix::from_row_slice(rows, cols, c))
        .collect();
    Ok(PulseResponse::new(samples)?)
}

/// Attack problem from Markov parameters.
///
/// `phi_zd` holds `horizon + 1` samples of `p_z x m_d`, `phi_psi_d` the same
/// count of `q x m_d`, each sample row-major.
///
/// # Safety
/// Arrays must be valid for the stated sizes and `problem` writable.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_problem_from_markov(
    m_d: usize,
    p_z: usize,
    q: usize,
    horizon: usize,
    phi_zd: *const f64,
    phi_psi_d: *const f64,
    scenario_number: u32,
    t_a: usize,
    t_zd: usize,
    t_psi_d: usize,
    theta: *const f64,
    theta_len: usize,
    alpha: f64,
    problem: *mut *mut SlpAttackProblem,
) -> SlpStatus {
    guard(|| {
        let zd = markov(phi_zd, p_z, m_d, horizon, "phi_zd")?;
        let psi = markov(phi_psi_d, q, m_d, horizon, "phi_psi_d")?;
        let theta = slice(theta, theta_len, "theta")?;
        let problem = out(problem, "problem")?;
        let inner = AttackProblem::new(zd, psi, t_a, t_zd, t_psi_d, theta, alpha, scenario(scenario_number)?)?;
        *problem = Box::into_raw(Box::new(SlpAttackProblem { inner }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from an `slp_attack_problem_*` constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_problem_free(problem: *mut SlpAttackProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solve with `jobs` worker threads (0 means 1).
///
/// # Safety
/// `problem` must be a live handle and `solution` writable.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_solve(
    problem: *const SlpAttackProblem,
    jobs: usize,
    solution: *mut *mut SlpAttackSolution,
) -> SlpStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let solution = out(solution, "solution")?;
        let opts = SolveOptions {
            jobs: jobs.max(1),
            ..Default::default()
        };
        let inner = attack::solve_with(&p.inner, &opts)?;
        *solution = Box::into_raw(Box::new(SlpAttackSolution { inner }));
        Ok(())
    })
}

/// # Safety
/// `solution` must come from [`slp_attack_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_solution_free(solution: *mut SlpAttackSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

/// Worst-case impact; `+inf` for an unbounded attack, NaN for a null handle.
///
/// # Safety
/// `solution` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_solution_mu(solution: *const SlpAttackSolution) -> f64 {
    solution.as_ref().map_or(f64::NAN, |s| s.inner.mu)
}

/// Status, critical row and critical component of a solution.
///
/// # Safety
/// `solution` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_solution_summary(
    solution: *const SlpAttackSolution,
    status: *mut SlpAttackStatus,
    n_star: *mut usize,
    component: *mut usize,
) -> SlpStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.inner;
        *out(status, "status")? = match s.status {
            AttackStatus::Bounded => SlpAttackStatus::Bounded,
            AttackStatus::UnboundedAttack => SlpAttackStatus::UnboundedAttack,
        };
        *out(n_star, "n_star")? = s.n_star;
        *out(component, "component")? = s.critical_component;
        Ok(())
    })
}

/// Copy the worst attack into `buf` as `len x width` samples, sample-major.
///
/// `*written` always receives the required length; a short buffer returns
/// `BufferTooSmall` without writing, so a null `buf` with `cap = 0` queries
/// the size.
///
/// # Safety
/// `solution` must be a live handle, `buf` valid for `cap` doubles, and
/// `written` and `width` writable.
#[no_mangle]
pub unsafe extern "C" fn slp_attack_solution_d_hat(
    solution: *const SlpAttackSolution,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
    width: *mut usize,
) -> SlpStatus {
    guard(|| {
        let s = &solution.as_ref().ok_or_else(|| null("solution"))?.inner;
        let flat = s.d_hat.as_flat();
        *out(written, "written")? = flat.len();
        *out(width, "width")? = s.d_hat.width();
        if cap < flat.len() {
            return Err(Fail(
                SlpStatus::BufferTooSmall,
                format!("buffer holds {cap} values, {} needed", flat.len()),
            ));
        }
        if !flat.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            std::slice::from_raw_parts_mut(buf, flat.len()).copy_from_slice(flat);
        }
        Ok(())
    })
}
