use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use recruit_ffi::*;

fn builtin(id: &str) -> *mut RcScenario {
    let id = CString::new(id).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rc_scenario_builtin(id.as_ptr(), &mut s) }, RcStatus::Ok);
    assert!(!s.is_null());
    s
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(rc_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn version_is_a_string() {
    let v = unsafe { CStr::from_ptr(rc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn p3_indices_and_outcome() {
    let s = builtin("P3");
    let mut idx = RcIndex::default();
    assert_eq!(unsafe { rc_gittins_index(s, RcCategory::B, 0, 0, &mut idx) }, RcStatus::Ok);
    assert!((idx.value - 0.958904).abs() < 1e-6);
    assert_eq!(unsafe { rc_search_index(s, &mut idx) }, RcStatus::Ok);
    assert!((idx.value - 0.382428 / 0.522181).abs() < 1e-6);
    let mut out = RcOutcome::default();
    assert_eq!(unsafe { rc_exact_outcome(s, &mut out) }, RcStatus::Ok);
    assert!(out.pa_lo <= 0.0892319 + 1e-6 && out.pa_hi >= 0.0892319 - 1e-6);
    unsafe { rc_scenario_free(s) };
}

#[test]
fn compare_reports_backfire() {
    let (b, a) = (builtin("P1.before"), builtin("P1.after"));
    let mut c = std::mem::MaybeUninit::<RcComparison>::uninit();
    assert_eq!(unsafe { rc_compare(b, a, c.as_mut_ptr()) }, RcStatus::Ok);
    let c = unsafe { c.assume_init() };
    assert_eq!(c.verdict, RcVerdict::Backfires);
    assert!(c.diff_a_hi < 0.0);
    unsafe {
        rc_scenario_free(b);
        rc_scenario_free(a);
    }
}

#[test]
fn parse_round_trip_and_set() {
    let s = builtin("P2");
    let mut doc = ptr::null_mut();
    assert_eq!(unsafe { rc_scenario_to_string(s, &mut doc) }, RcStatus::Ok);
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { rc_scenario_parse(doc, &mut t) }, RcStatus::Ok);
    let key = CString::new("A.qH").unwrap();
    let mut x = 0.0;
    assert_eq!(unsafe { rc_scenario_get(t, key.as_ptr(), &mut x) }, RcStatus::Ok);
    assert_eq!(x, 0.2);
    assert_eq!(unsafe { rc_scenario_set(t, key.as_ptr(), 1.2) }, RcStatus::Ok);
    let (mut hard, mut soft) = (0usize, 0usize);
    assert_eq!(unsafe { rc_validate(t, &mut hard, &mut soft) }, RcStatus::Ok);
    assert!(hard > 0);
    let mut out = RcOutcome::default();
    assert_eq!(unsafe { rc_exact_outcome(t, &mut out) }, RcStatus::InvalidScenario);
    unsafe {
        rc_string_free(doc);
        rc_scenario_free(t);
        rc_scenario_free(s);
    }
}

#[test]
fn errors_are_codes_with_messages() {
    let doc = CString::new("delta = 0.9\n[A]\np0 = 0.5\nv = 1\nqH = 1.2\nqL = 1\nPbar = 0.9\n").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rc_scenario_parse(doc.as_ptr(), &mut s) }, RcStatus::Parse);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let mut x = 0.0;
    assert_eq!(
        unsafe { rc_posterior(ptr::null(), RcCategory::A, 0, 0, &mut x) },
        RcStatus::NullPointer
    );
    let p = builtin("P1");
    assert_eq!(
        unsafe { rc_posterior(p, RcCategory::B, 1, 1, &mut x) },
        RcStatus::ImpossibleHistory
    );
    let mut m = RcEstimate::default();
    assert_eq!(unsafe { rc_monte_carlo(p, 0, 1, 10, &mut m) }, RcStatus::InvalidArgument);
    assert_eq!(unsafe { rc_monte_carlo(p, 1000, 1, 1000, &mut m) }, RcStatus::Ok);
    assert_eq!(m.trials, 1000);
    let unknown = CString::new("P9").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rc_scenario_builtin(unknown.as_ptr(), &mut s) }, RcStatus::InvalidArgument);
    assert!(last_error().contains("P9"));
    unsafe { rc_scenario_free(p) };
}

#[test]
fn header_is_generated_and_compiles() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/recruit.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in ["rc_scenario_builtin", "rc_exact_outcome", "RC_STATUS_OK", "typedef struct RcScenario RcScenario"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(status) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .status()
    else {
        return;
    };
    assert!(status.success());
}
