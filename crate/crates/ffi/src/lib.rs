//! C interface to the recruit engine.
//!
//! Scenarios are opaque `RcScenario` handles created by
//! `rc_scenario_builtin` or `rc_scenario_parse` and released with
//! `rc_scenario_free`. Every fallible call returns an `RcStatus`; on a
//! nonzero status `rc_last_error` describes the failure. Strings handed out
//! by the library are released with `rc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use recruit::{evaluator, indices, model, scenario_io, Category, Error, Scenario, Verdict};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidScenario = 4,
    ImpossibleHistory = 5,
    HorizonInsufficient = 6,
    OracleInapplicable = 7,
    InvalidArgument = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcCategory {
    A = 0,
    B = 1,
}

impl From<RcCategory> for Category {
    fn from(c: RcCategory) -> Self {
        match c {
            RcCategory::A => Category::A,
            RcCategory::B => Category::B,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcVerdict {
    Backfires = 0,
    Helps = 1,
    Indeterminate = 2,
}

impl From<Verdict> for RcVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Backfires => RcVerdict::Backfires,
            Verdict::Helps => RcVerdict::Helps,
            Verdict::Indeterminate => RcVerdict::Indeterminate,
        }
    }
}

/// Opaque scenario handle.
pub struct RcScenario {
    inner: Scenario,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcIndex {
    pub value: f64,
    pub achieved_tol: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcMyopicValues {
    pub blank_a: f64,
    pub blank_b: f64,
    pub search: f64,
}

/// Certified bounds on the hiring outcome.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcOutcome {
    pub pa_lo: f64,
    pub pa_hi: f64,
    pub pb_lo: f64,
    pub pb_hi: f64,
    pub pnone_lo: f64,
    pub pnone_hi: f64,
    pub truncation_mass: f64,
}

impl From<evaluator::OutcomeDistribution> for RcOutcome {
    fn from(d: evaluator::OutcomeDistribution) -> Self {
        RcOutcome {
            pa_lo: d.pa_lo,
            pa_hi: d.pa_hi,
            pb_lo: d.pb_lo,
            pb_hi: d.pb_hi,
            pnone_lo: d.pnone_lo,
            pnone_hi: d.pnone_hi,
            truncation_mass: d.truncation_mass,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RcEstimate {
    pub pa: f64,
    pub pb: f64,
    pub pnone: f64,
    pub stderr_a: f64,
    pub stderr_b: f64,
    pub stderr_none: f64,
    pub trials: u64,
    pub censored: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RcComparison {
    pub before: RcOutcome,
    pub after: RcOutcome,
    pub diff_a_lo: f64,
    pub diff_a_hi: f64,
    pub verdict: RcVerdict,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Fail(RcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => RcStatus::Parse,
            Error::InvalidScenario(_) => RcStatus::InvalidScenario,
            Error::ImpossibleHistory { .. } => RcStatus::ImpossibleHistory,
            Error::HorizonInsufficient { .. } | Error::InsufficientHorizon { .. } => RcStatus::HorizonInsufficient,
            Error::OracleInapplicable(_) => RcStatus::OracleInapplicable,
            _ => RcStatus::InvalidArgument,
        };
        Fail(code, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(RcStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RcStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            RcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(RcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn scenario<'a>(s: *const RcScenario) -> Result<&'a Scenario, Fail> {
    s.as_ref().map(|s| &s.inner).ok_or_else(|| null("scenario"))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(v);
    Ok(())
}

fn boxed(s: Scenario) -> *mut RcScenario {
    Box::into_raw(Box::new(RcScenario { inner: s }))
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn rc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn rc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `id` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_builtin(id: *const c_char, out: *mut *mut RcScenario) -> RcStatus {
    guard(|| {
        let id = text(id, "id")?;
        let s = scenario_io::builtin_scenario(id)
            .ok_or_else(|| Fail(RcStatus::InvalidArgument, format!("unknown builtin `{id}`")))?;
        write(out, boxed(s))
    })
}

/// Parses a scenario document.
///
/// # Safety
/// `doc` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_parse(doc: *const c_char, out: *mut *mut RcScenario) -> RcStatus {
    guard(|| {
        let s = scenario_io::parse_scenario(text(doc, "document")?)?;
        write(out, boxed(s))
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_free(s: *mut RcScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Serializes a scenario; release the string with `rc_string_free`.
///
/// # Safety
/// `s` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_to_string(s: *const RcScenario, out: *mut *mut c_char) -> RcStatus {
    guard(|| {
        let doc = scenario_io::serialize_scenario(scenario(s)?);
        let c = CString::new(doc).map_err(|e| Fail(RcStatus::InvalidArgument, e.to_string()))?;
        write(out, c.into_raw())
    })
}

/// # Safety
/// `p` must come from this library and not be used afterwards. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn rc_string_free(p: *mut c_char) {
    if !p.is_null() {
        drop(CString::from_raw(p));
    }
}

/// Reads a numeric parameter by document key, e.g. `"A.qH"`.
///
/// # Safety
/// `s` must be a live handle, `key` a NUL-terminated string, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_get(s: *const RcScenario, key: *const c_char, out: *mut f64) -> RcStatus {
    guard(|| {
        let v = scenario_io::get_param(scenario(s)?, text(key, "key")?)?;
        write(out, v)
    })
}

/// Sets a numeric parameter by document key. Invalid values are reported
/// by `rc_validate` and refused by the evaluators.
///
/// # Safety
/// `s` must be a live handle and `key` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rc_scenario_set(s: *mut RcScenario, key: *const c_char, value: f64) -> RcStatus {
    guard(|| {
        let s = s.as_mut().ok_or_else(|| null("scenario"))?;
        scenario_io::set_param(&mut s.inner, text(key, "key")?, value)?;
        Ok(())
    })
}

/// Counts invariant and assumption violations. When there are any, their
/// messages are available from `rc_last_error`.
///
/// # Safety
/// `s` must be a live handle; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn rc_validate(s: *const RcScenario, invariants: *mut usize, assumptions: *mut usize) -> RcStatus {
    guard(|| {
        let v = model::validate(scenario(s)?);
        let hard = v.iter().filter(|x| x.severity == model::Severity::Invariant).count();
        write(invariants, hard)?;
        write(assumptions, v.len() - hard)?;
        if !v.is_empty() {
            let msgs: Vec<String> = v.iter().map(|x| format!("{}: {}", x.code, x.message)).collect();
            set_error(msgs.join("; "));
        }
        Ok(())
    })
}

/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_posterior(
    s: *const RcScenario,
    category: RcCategory,
    n1: u32,
    n0: u32,
    out: *mut f64,
) -> RcStatus {
    guard(|| {
        let p = model::posterior(scenario(s)?.cat(category.into()), n1, n0)?;
        write(out, p)
    })
}

/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_gittins_index(
    s: *const RcScenario,
    category: RcCategory,
    n1: u32,
    n0: u32,
    out: *mut RcIndex,
) -> RcStatus {
    guard(|| {
        let sc = scenario(s)?;
        let r = indices::gittins_index(sc.cat(category.into()), n1, n0, sc.delta, &sc.tolerances)?;
        write(
            out,
            RcIndex {
                value: r.value,
                achieved_tol: r.achieved_tol,
            },
        )
    })
}

/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_search_index(s: *const RcScenario, out: *mut RcIndex) -> RcStatus {
    guard(|| {
        let sc = scenario(s)?;
        let r = indices::search_index(sc, &sc.tolerances)?;
        write(
            out,
            RcIndex {
                value: r.value,
                achieved_tol: r.achieved_tol,
            },
        )
    })
}

/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_myopic_values(s: *const RcScenario, out: *mut RcMyopicValues) -> RcStatus {
    guard(|| {
        let m = indices::myopic_values(scenario(s)?)?;
        write(
            out,
            RcMyopicValues {
                blank_a: m.ua_blank,
                blank_b: m.ub_blank,
                search: m.u_search,
            },
        )
    })
}

/// Certified outcome bounds using the scenario's tolerances. On
/// `RC_STATUS_HORIZON_INSUFFICIENT` the bounds reached are still written.
///
/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_exact_outcome(s: *const RcScenario, out: *mut RcOutcome) -> RcStatus {
    guard(|| {
        let sc = scenario(s)?;
        if out.is_null() {
            return Err(null("output pointer"));
        }
        match recruit::exact_outcome(sc, &sc.tolerances) {
            Ok(d) => write(out, d.into()),
            Err(Error::InsufficientHorizon { achieved }) => {
                write(out, (*achieved).into())?;
                Err(Error::InsufficientHorizon { achieved }.into())
            }
            Err(e) => Err(e.into()),
        }
    })
}

/// Seeded Monte Carlo estimate; trials longer than `horizon` periods are
/// counted as no hire.
///
/// # Safety
/// `s` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_monte_carlo(
    s: *const RcScenario,
    trials: u64,
    seed: u64,
    horizon: u64,
    out: *mut RcEstimate,
) -> RcStatus {
    guard(|| {
        let m = recruit::monte_carlo(scenario(s)?, trials, seed, horizon)?;
        write(
            out,
            RcEstimate {
                pa: m.pa,
                pb: m.pb,
                pnone: m.pnone,
                stderr_a: m.stderr_a,
                stderr_b: m.stderr_b,
                stderr_none: m.stderr_none,
                trials: m.n,
                censored: m.censored,
            },
        )
    })
}

/// Compares two scenarios that differ only in arrival probabilities.
///
/// # Safety
/// Both handles must be live and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn rc_compare(
    before: *const RcScenario,
    after: *const RcScenario,
    out: *mut RcComparison,
) -> RcStatus {
    guard(|| {
        let (b, a) = (scenario(before)?, scenario(after)?);
        let c = recruit::compare(b, a, &b.tolerances)?;
        write(
            out,
            RcComparison {
                before: c.before.into(),
                after: c.after.into(),
                diff_a_lo: c.diff_a.0,
                diff_a_hi: c.diff_a.1,
                verdict: c.verdict.into(),
            },
        )
    })
}
