use std::ffi::{CStr, CString};
use std::ptr;

use stealthlp_ffi::*;

fn last_error() -> String {
    let p = slp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(slp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn lp_statuses() {
    // max x + y, x + 2y <= 4, 3x + y <= 6, 0 <= x, y
    let c = [1.0, 1.0];
    let a = [1.0, 2.0, 3.0, 1.0];
    let b = [4.0, 6.0];
    let lo = [0.0, 0.0];
    let inf = [f64::INFINITY; 2];
    let mut x = [0.0; 2];
    let mut v = 0.0;
    let mut st = SlpLpStatus::Infeasible;
    let rc = unsafe { slp_lp_solve(2, c.as_ptr(), 2, a.as_ptr(), b.as_ptr(), lo.as_ptr(), inf.as_ptr(), x.as_mut_ptr(), &mut v, &mut st) };
    assert_eq!(rc, SlpStatus::Ok);
    assert_eq!(st, SlpLpStatus::Optimal);
    assert!((v - 2.8).abs() < 1e-12);
    assert!((x[0] - 1.6).abs() < 1e-12 && (x[1] - 1.2).abs() < 1e-12);

    let rc = unsafe { slp_lp_solve(2, c.as_ptr(), 0, ptr::null(), ptr::null(), lo.as_ptr(), inf.as_ptr(), x.as_mut_ptr(), &mut v, &mut st) };
    assert_eq!(rc, SlpStatus::Ok);
    assert_eq!(st, SlpLpStatus::Unbounded);
    assert_eq!(v, f64::INFINITY);

    let a = [1.0, 1.0];
    let b = [-1.0];
    let rc = unsafe { slp_lp_solve(2, c.as_ptr(), 1, a.as_ptr(), b.as_ptr(), lo.as_ptr(), inf.as_ptr(), x.as_mut_ptr(), &mut v, &mut st) };
    assert_eq!(rc, SlpStatus::Ok);
    assert_eq!(st, SlpLpStatus::Infeasible);
    assert!(v.is_nan());
}

#[test]
fn null_arguments_are_reported() {
    let mut v = 0.0;
    let mut st = SlpLpStatus::Optimal;
    let rc = unsafe { slp_lp_solve(1, ptr::null(), 0, ptr::null(), ptr::null(), ptr::null(), ptr::null(), ptr::null_mut(), &mut v, &mut st) };
    assert_eq!(rc, SlpStatus::NullPointer);
    assert!(last_error().contains("c is null"));

    assert!(unsafe { slp_attack_solution_mu(ptr::null()) }.is_nan());
    unsafe {
        slp_system_free(ptr::null_mut());
        slp_attack_problem_free(ptr::null_mut());
        slp_attack_solution_free(ptr::null_mut());
    }
}

#[test]
fn verdicts() {
    let mut v = SlpVerdict::Safe;
    let num = [1.0, -2.0];
    let den = [1.0, -0.5, 0.0];
    assert_eq!(unsafe { slp_actuator_verdict(num.as_ptr(), 2, den.as_ptr(), 3, 1e-7, &mut v) }, SlpStatus::Ok);
    assert_eq!(v, SlpVerdict::UnboundedAttackExists);
    assert_eq!(unsafe { slp_sensor_verdict(num.as_ptr(), 2, den.as_ptr(), 3, 1e-7, &mut v) }, SlpStatus::Ok);
    assert_eq!(v, SlpVerdict::Safe);

    let num = [1.0, -1.0];
    assert_eq!(unsafe { slp_actuator_verdict(num.as_ptr(), 2, den.as_ptr(), 3, 1e-7, &mut v) }, SlpStatus::Ok);
    assert_eq!(v, SlpVerdict::Marginal);

    // Improper transfer.
    let den = [1.0];
    assert_eq!(unsafe { slp_actuator_verdict(num.as_ptr(), 2, den.as_ptr(), 1, 1e-7, &mut v) }, SlpStatus::InvalidArgument);
    assert!(!last_error().is_empty());
}

#[test]
fn attack_from_markov_parameters() {
    // Phi_zd = 1 + z^-1, Phi_psi = 1, t_a = t_zd = t_psi = 1, theta = 1, alpha = 2.
    let zd = [1.0, 1.0, 0.0];
    let psi = [1.0, 0.0, 0.0];
    let theta = [1.0];
    let mut p = ptr::null_mut();
    let rc = unsafe { slp_attack_problem_from_markov(1, 1, 1, 2, zd.as_ptr(), psi.as_ptr(), 1, 1, 1, 1, theta.as_ptr(), 1, 2.0, &mut p) };
    assert_eq!(rc, SlpStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { slp_attack_solve(p, 0, &mut s) }, SlpStatus::Ok);
    assert!((unsafe { slp_attack_solution_mu(s) } - 2.0).abs() < 1e-12);

    let (mut st, mut n, mut comp) = (SlpAttackStatus::UnboundedAttack, 9, 9);
    assert_eq!(unsafe { slp_attack_solution_summary(s, &mut st, &mut n, &mut comp) }, SlpStatus::Ok);
    assert_eq!((st, n, comp), (SlpAttackStatus::Bounded, 1, 0));

    let (mut written, mut width) = (0, 0);
    let rc = unsafe { slp_attack_solution_d_hat(s, ptr::null_mut(), 0, &mut written, &mut width) };
    assert_eq!(rc, SlpStatus::BufferTooSmall);
    assert_eq!((written, width), (3, 1));
    let mut buf = vec![f64::NAN; written];
    let rc = unsafe { slp_attack_solution_d_hat(s, buf.as_mut_ptr(), buf.len(), &mut written, &mut width) };
    assert_eq!(rc, SlpStatus::Ok);
    assert!((buf[0] - 1.0).abs() < 1e-12 && (buf[1] - 1.0).abs() < 1e-12 && buf[2] == 0.0);

    unsafe {
        slp_attack_solution_free(s);
        slp_attack_problem_free(p);
    }
}

#[test]
fn bad_scenario_and_s3_windows() {
    let zd = [1.0, 1.0];
    let psi = [1.0, 0.0];
    let theta = [1.0];
    let mut p = ptr::null_mut();
    let rc = unsafe { slp_attack_problem_from_markov(1, 1, 1, 1, zd.as_ptr(), psi.as_ptr(), 4, 1, 0, 0, theta.as_ptr(), 1, 2.0, &mut p) };
    assert_eq!(rc, SlpStatus::InvalidArgument);
    assert!(p.is_null());
    let rc = unsafe { slp_attack_problem_from_markov(1, 1, 1, 1, zd.as_ptr(), psi.as_ptr(), 3, 0, 1, 0, theta.as_ptr(), 1, 2.0, &mut p) };
    assert_eq!(rc, SlpStatus::InvalidArgument);
}

#[test]
fn system_documents() {
    let json = CString::new(
        r#"{"name": "a", "plant": {"a": [[0.0]], "b_d": [[1.0]], "b_u": [[0.0]], "c_z": [[1.0]], "c_y": [[0.0]],
            "d_zd": [[1.0]], "d_zu": [[0.0]], "d_yd": [[1.0]], "d_yu": [[0.0]]}}"#,
    )
    .unwrap();
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { slp_system_from_json(json.as_ptr(), 0, &mut sys) }, SlpStatus::InvalidArgument);
    assert!(last_error().contains("controller"));
    assert_eq!(unsafe { slp_system_from_json(json.as_ptr(), 1, &mut sys) }, SlpStatus::Ok);

    let theta = [1.0];
    let mut p = ptr::null_mut();
    let rc = unsafe { slp_attack_problem_from_system(sys, 2, 1, 1, 0, theta.as_ptr(), 1, 2.0, &mut p) };
    assert_eq!(rc, SlpStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { slp_attack_solve(p, 2, &mut s) }, SlpStatus::Ok);
    assert!((unsafe { slp_attack_solution_mu(s) } - 2.0).abs() < 1e-12);
    unsafe {
        slp_attack_solution_free(s);
        slp_attack_problem_free(p);
        slp_system_free(sys);
    }

    let bad = CString::new("{\"name\": 1}").unwrap();
    assert_eq!(unsafe { slp_system_from_json(bad.as_ptr(), 1, &mut sys) }, SlpStatus::Parse);
    assert!(last_error().contains("<memory>:1:"));
}

#[test]
fn errors_are_thread_local() {
    let mut v = SlpVerdict::Safe;
    let den = [1.0];
    let num = [1.0, 0.0];
    unsafe { slp_actuator_verdict(num.as_ptr(), 2, den.as_ptr(), 1, 1e-7, &mut v) };
    assert!(!slp_last_error().is_null());
    std::thread::spawn(|| assert!(slp_last_error().is_null())).join().unwrap();
}
