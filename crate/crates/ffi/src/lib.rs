//! C ABI for `cng-core`.
//!
//! Instances and results are opaque handles created by this library and
//! released with the matching `*_free` function. Every fallible call
//! returns a [`CngCode`]; on failure a message is available from
//! [`cng_last_error`] on the same thread. Strings returned through out
//! parameters are owned by the caller and freed with [`cng_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::time::Duration;

use cng_core::io::{instance_from_json, instance_to_json, to_canonical_json, ResultFile};
use cng_core::{
    price_of_aggression, price_of_security, solve, CngError, CutRule, EquilibriumResult, MasterObjective, SolveConfig,
    SolveStatus,
};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CngCode {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Json = 3,
    InvalidInstance = 4,
    InvalidArgument = 5,
    SizeLimit = 6,
    /// The price ratio is undefined; outputs are still written, the ratio as +inf.
    DivisionByZero = 7,
    Io = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CngObjective {
    Defender = 0,
    Attacker = 1,
    Social = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CngCutRule {
    /// Defender's cut if it deviates, otherwise the attacker's.
    First = 0,
    /// One cut per deviating player.
    All = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CngSolveStatus {
    ProvedOptimalNe = 0,
    IncumbentOnLimit = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CngSolveOptions {
    pub objective: CngObjective,
    /// Seconds; must be positive.
    pub time_limit_s: f64,
    pub phi_increment: f64,
    pub cut_rule: CngCutRule,
}

/// A validated game instance.
pub struct CngInstance(cng_core::CngInstance);

/// The outcome of one equilibrium solve.
pub struct CngResult(EquilibriumResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CngCode, String);

impl From<CngError> for Failure {
    fn from(e: CngError) -> Self {
        let code = match &e {
            CngError::Json(_) => CngCode::Json,
            CngError::Io(_) => CngCode::Io,
            CngError::SizeLimitExceeded { .. } => CngCode::SizeLimit,
            CngError::DivisionByZero => CngCode::DivisionByZero,
            CngError::InvalidConfig(_) => CngCode::InvalidArgument,
            _ => CngCode::InvalidInstance,
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn guard(f: impl FnOnce() -> Result<CngCode, Failure>) -> CngCode {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(code)) => code,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            CngCode::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CngCode::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(CngCode::InvalidUtf8, "string contains a nul byte".into()))
}

impl CngSolveOptions {
    fn config(&self) -> Result<SolveConfig, Failure> {
        let objective = match self.objective {
            CngObjective::Defender => MasterObjective::DefenderPayoff,
            CngObjective::Attacker => MasterObjective::AttackerPayoff,
            CngObjective::Social => MasterObjective::SocialWelfare,
        };
        let time_limit = Duration::try_from_secs_f64(self.time_limit_s).map_err(|_| {
            Failure(
                CngCode::InvalidArgument,
                format!("bad time limit {}", self.time_limit_s),
            )
        })?;
        let config = SolveConfig {
            objective,
            time_limit,
            phi_increment: self.phi_increment,
            cut_rule: match self.cut_rule {
                CngCutRule::First => CutRule::FirstViolated,
                CngCutRule::All => CutRule::AllViolated,
            },
            ..SolveConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

/// Message of the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cng_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Defaults: defender objective, 100 s, slack increment 1.
#[no_mangle]
pub extern "C" fn cng_solve_options_default() -> CngSolveOptions {
    let d = SolveConfig::default();
    CngSolveOptions {
        objective: CngObjective::Defender,
        time_limit_s: d.time_limit.as_secs_f64(),
        phi_increment: d.phi_increment,
        cut_rule: CngCutRule::First,
    }
}

/// Parses and validates an instance from a nul-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cng_instance_from_json(json: *const c_char, out: *mut *mut CngInstance) -> CngCode {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(CngCode::InvalidUtf8, "json is not utf-8".into()))?;
        let inst = instance_from_json(text)?;
        put(out, Box::into_raw(Box::new(CngInstance(inst))), "out")?;
        Ok(CngCode::Ok)
    })
}

/// Canonical JSON of an instance.
///
/// # Safety
/// `inst` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cng_instance_to_json(inst: *const CngInstance, out: *mut *mut c_char) -> CngCode {
    guard(|| {
        let inst = borrow(inst, "instance")?;
        let s = into_c_string(instance_to_json(&inst.0)?)?;
        put(out, s, "out")?;
        Ok(CngCode::Ok)
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_instance_n(inst: *const CngInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.n)
}

/// # Safety
/// `inst` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cng_instance_free(inst: *mut CngInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

unsafe fn profile_from(
    inst: &cng_core::CngInstance,
    x: *const u8,
    alpha: *const u8,
    len: usize,
) -> Result<cng_core::StrategyProfile, Failure> {
    if len != inst.n {
        return Err(Failure(
            CngCode::InvalidArgument,
            format!("profile length {len}, expected {}", inst.n),
        ));
    }
    if x.is_null() || alpha.is_null() {
        return Err(null("profile"));
    }
    let xs = std::slice::from_raw_parts(x, len);
    let als = std::slice::from_raw_parts(alpha, len);
    Ok(cng_core::StrategyProfile::from_bits(xs, als))
}

/// Both payoffs of a profile given as 0/1 byte arrays of length `len`.
///
/// # Safety
/// `x` and `alpha` must point to `len` bytes; outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cng_payoffs(
    inst: *const CngInstance,
    x: *const u8,
    alpha: *const u8,
    len: usize,
    defender: *mut f64,
    attacker: *mut f64,
) -> CngCode {
    guard(|| {
        let inst = &borrow(inst, "instance")?.0;
        let p = profile_from(inst, x, alpha, len)?;
        let fd = inst.defender_payoff(&p.defense, &p.attack)?;
        let fa = inst.attacker_payoff(&p.defense, &p.attack)?;
        put(defender, fd, "defender")?;
        put(attacker, fa, "attacker")?;
        Ok(CngCode::Ok)
    })
}

/// Computes the objective-best equilibrium.
///
/// # Safety
/// `inst` must come from this library; `opts` may be null for defaults.
#[no_mangle]
pub unsafe extern "C" fn cng_solve(
    inst: *const CngInstance,
    opts: *const CngSolveOptions,
    out: *mut *mut CngResult,
) -> CngCode {
    guard(|| {
        let inst = &borrow(inst, "instance")?.0;
        let opts = opts.as_ref().copied().unwrap_or_else(|| cng_solve_options_default());
        let result = solve(inst, &opts.config()?)?;
        put(out, Box::into_raw(Box::new(CngResult(result))), "out")?;
        Ok(CngCode::Ok)
    })
}

unsafe fn price(
    inst: *const CngInstance,
    opts: *const CngSolveOptions,
    ratio: *mut f64,
    out: *mut *mut CngResult,
    objective: CngObjective,
) -> CngCode {
    guard(|| {
        let inst = &borrow(inst, "instance")?.0;
        let mut opts = opts.as_ref().copied().unwrap_or_else(|| cng_solve_options_default());
        opts.objective = objective;
        let config = opts.config()?;
        let report = match objective {
            CngObjective::Attacker => price_of_aggression(inst, &config)?,
            _ => price_of_security(inst, &config)?,
        };
        put(ratio, report.ratio, "ratio")?;
        let undefined = report.denominator == 0.0;
        if !out.is_null() {
            out.write(Box::into_raw(Box::new(CngResult(report.equilibrium))));
        }
        if undefined {
            set_error(CngError::DivisionByZero.to_string());
            Ok(CngCode::DivisionByZero)
        } else {
            Ok(CngCode::Ok)
        }
    })
}

/// Price of Security. `out` may be null when the equilibrium is not needed;
/// `opts->objective` is ignored.
///
/// # Safety
/// Pointers must be valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn cng_price_of_security(
    inst: *const CngInstance,
    opts: *const CngSolveOptions,
    ratio: *mut f64,
    out: *mut *mut CngResult,
) -> CngCode {
    price(inst, opts, ratio, out, CngObjective::Defender)
}

/// Price of Aggression; see [`cng_price_of_security`].
///
/// # Safety
/// Pointers must be valid or null where allowed.
#[no_mangle]
pub unsafe extern "C" fn cng_price_of_aggression(
    inst: *const CngInstance,
    opts: *const CngSolveOptions,
    ratio: *mut f64,
    out: *mut *mut CngResult,
) -> CngCode {
    price(inst, opts, ratio, out, CngObjective::Attacker)
}

/// # Safety
/// `r` must be null or come from this library, and is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn cng_result_free(r: *mut CngResult) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_status(r: *const CngResult) -> CngSolveStatus {
    match (*r).0.status {
        SolveStatus::ProvedOptimalNe => CngSolveStatus::ProvedOptimalNe,
        SolveStatus::IncumbentOnLimit => CngSolveStatus::IncumbentOnLimit,
    }
}

/// Certified regret of the returned profile.
///
/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_phi(r: *const CngResult) -> f64 {
    (*r).0.phi
}

/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_objective_value(r: *const CngResult) -> f64 {
    (*r).0.objective_value
}

/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_defender_payoff(r: *const CngResult) -> f64 {
    (*r).0.defender_value
}

/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_attacker_payoff(r: *const CngResult) -> f64 {
    (*r).0.attacker_value
}

/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_iterations(r: *const CngResult) -> usize {
    (*r).0.iterations
}

/// Number of nodes of the profile.
///
/// # Safety
/// `r` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn cng_result_n(r: *const CngResult) -> usize {
    (*r).0.profile.defense.len()
}

/// Copies the profile into two 0/1 byte arrays of length `len`.
///
/// # Safety
/// `x` and `alpha` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cng_result_profile(r: *const CngResult, x: *mut u8, alpha: *mut u8, len: usize) -> CngCode {
    guard(|| {
        let p = &borrow(r, "result")?.0.profile;
        if len != p.defense.len() {
            return Err(Failure(
                CngCode::InvalidArgument,
                format!("buffer length {len}, expected {}", p.defense.len()),
            ));
        }
        if x.is_null() || alpha.is_null() {
            return Err(null("buffer"));
        }
        let xs = std::slice::from_raw_parts_mut(x, len);
        let als = std::slice::from_raw_parts_mut(alpha, len);
        for i in 0..len {
            xs[i] = u8::from(p.defense[i]);
            als[i] = u8::from(p.attack[i]);
        }
        Ok(CngCode::Ok)
    })
}

/// The result in the `cng solve` JSON format.
///
/// # Safety
/// `r` must come from this library; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cng_result_to_json(r: *const CngResult, out: *mut *mut c_char) -> CngCode {
    guard(|| {
        let r = &borrow(r, "result")?.0;
        let s = into_c_string(to_canonical_json(&ResultFile::from(r))?)?;
        put(out, s, "out")?;
        Ok(CngCode::Ok)
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn cng_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
