//! C interface to the monitors.
//!
//! Models and monitors are opaque handles created by `*_new`/`*_parse` and
//! released by the matching `*_free`. Every fallible call returns an
//! [`MdpmonStatus`]; on failure, `mdpmon_last_error` describes it until the
//! next call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;
use std::time::Duration;

use mdpmon::filtering::{Mode, MonitorSession};
use mdpmon::model_io::parse_model;
use mdpmon::monitor::{Monitor, RiskValue};
use mdpmon::rational::format_rational;
use mdpmon::risk::RiskSpec;
use mdpmon::unrolling::{Engine, UnrollingSession, DEFAULT_EPSILON};
use mdpmon::{Error, Mdp, RiskVector};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdpmonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Model text or risk specification did not parse or validate.
    InvalidInput = 3,
    UnknownObservation = 4,
    TraceImpossible = 5,
    Timeout = 6,
    /// The monitor failed earlier and accepts no more observations.
    Closed = 7,
    Unsupported = 8,
    Internal = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MdpmonMethod {
    /// Belief-set filtering with hull reduction.
    FilterHull = 0,
    FilterNoHull = 1,
    /// Support tracking, for models without probabilities that matter.
    FilterSupport = 2,
    /// Single belief, for models with one action per state.
    FilterChain = 3,
    UnrollExact = 4,
    UnrollInterval = 5,
}

/// Risk after one observation. Exact methods report `lower == upper`.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MdpmonRisk {
    pub lower: f64,
    pub upper: f64,
    pub exact: bool,
    /// Number of observations consumed so far.
    pub step: usize,
}

pub struct MdpmonModel {
    inner: Arc<Mdp>,
}

pub struct MdpmonMonitor {
    model: Arc<Mdp>,
    inner: Box<dyn Monitor>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MdpmonStatus {
    match e {
        Error::UnknownObservation { .. } => MdpmonStatus::UnknownObservation,
        Error::TraceImpossible { .. } => MdpmonStatus::TraceImpossible,
        Error::Timeout { .. } => MdpmonStatus::Timeout,
        Error::SessionClosed => MdpmonStatus::Closed,
        Error::Unsupported(_) | Error::AlphabetMismatch(_) => MdpmonStatus::Unsupported,
        Error::Syntax { .. }
        | Error::UndeclaredSymbol { .. }
        | Error::DuplicateDeclaration { .. }
        | Error::Validation(_)
        | Error::UnknownLabel(_)
        | Error::InvalidRiskSpec(_)
        | Error::EmptyTrace => MdpmonStatus::InvalidInput,
        _ => MdpmonStatus::Internal,
    }
}

/// Runs `f`, records any failure and converts panics into `Internal`.
fn guarded(f: impl FnOnce() -> Result<(), (MdpmonStatus, String)>) -> MdpmonStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MdpmonStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal error");
            MdpmonStatus::Internal
        }
    }
}

fn lib(e: Error) -> (MdpmonStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MdpmonStatus, String) {
    (MdpmonStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (MdpmonStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| (MdpmonStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library from this thread.
#[no_mangle]
pub extern "C" fn mdpmon_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses and validates a model in the text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_model_parse(text: *const c_char, out: *mut *mut MdpmonModel) -> MdpmonStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = parse_model(read_str(text, "text")?).map_err(lib)?;
        *out = Box::into_raw(Box::new(MdpmonModel { inner: Arc::new(m) }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`mdpmon_model_parse`] and not be freed already.
/// Monitors created from it stay valid.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_model_free(model: *mut MdpmonModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_model_num_states(model: *const MdpmonModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_states())
}

/// # Safety
/// `model` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_model_num_observations(model: *const MdpmonModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_observations())
}

/// Looks up an observation symbol by name.
///
/// # Safety
/// `model` must be a live handle, `name` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_model_observation_id(
    model: *const MdpmonModel,
    name: *const c_char,
    out: *mut usize,
) -> MdpmonStatus {
    guarded(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let name = read_str(name, "name")?;
        let id = m.inner.observation_id(name).ok_or_else(|| {
            (MdpmonStatus::UnknownObservation, format!("unknown observation `{name}`"))
        })?;
        *out = id;
        Ok(())
    })
}

/// Creates a monitor. `risk` is a specification such as
/// `reach-max(crash,8)`; null selects the risk embedded in the model.
/// `step_limit_ms` bounds each observation, 0 for no limit.
///
/// # Safety
/// `model` must be a live handle, `risk` null or NUL-terminated, and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_monitor_new(
    model: *const MdpmonModel,
    risk: *const c_char,
    method: MdpmonMethod,
    step_limit_ms: u64,
    out: *mut *mut MdpmonMonitor,
) -> MdpmonStatus {
    guarded(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mdp = m.inner.clone();
        let r: RiskVector = if risk.is_null() {
            mdp.risk()
                .cloned()
                .ok_or_else(|| (MdpmonStatus::InvalidInput, "model has no embedded risk".to_string()))?
        } else {
            RiskSpec::parse(read_str(risk, "risk")?).and_then(|s| s.resolve(&mdp)).map_err(lib)?
        };
        let limit = (step_limit_ms > 0).then(|| Duration::from_millis(step_limit_ms));
        let filter = |mode| MonitorSession::new(mdp.clone(), r.clone(), mode).map(|s| s.with_step_limit(limit));
        let inner: Box<dyn Monitor> = match method {
            MdpmonMethod::FilterHull => Box::new(filter(Mode::Mdp).map_err(lib)?),
            MdpmonMethod::FilterNoHull => Box::new(filter(Mode::Mdp).map_err(lib)?.without_hull()),
            MdpmonMethod::FilterSupport => Box::new(filter(Mode::Ks).map_err(lib)?),
            MdpmonMethod::FilterChain => Box::new(filter(Mode::Mc).map_err(lib)?),
            MdpmonMethod::UnrollExact => {
                Box::new(UnrollingSession::new(&mdp, &r, Engine::ExactPi).map_err(lib)?.with_step_limit(limit))
            }
            MdpmonMethod::UnrollInterval => Box::new(
                UnrollingSession::new(&mdp, &r, Engine::IntervalVi { epsilon: DEFAULT_EPSILON })
                    .map_err(lib)?
                    .with_step_limit(limit),
            ),
        };
        *out = Box::into_raw(Box::new(MdpmonMonitor { model: mdp, inner }));
        Ok(())
    })
}

/// # Safety
/// `monitor` must come from [`mdpmon_monitor_new`] and not be freed already.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_monitor_free(monitor: *mut MdpmonMonitor) {
    if !monitor.is_null() {
        drop(Box::from_raw(monitor));
    }
}

fn to_risk(step: usize, v: &RiskValue) -> MdpmonRisk {
    match v {
        RiskValue::Exact(_) => {
            let x = v.approx();
            MdpmonRisk { lower: x, upper: x, exact: true, step }
        }
        RiskValue::Bounds { lower, upper } => MdpmonRisk { lower: *lower, upper: *upper, exact: false, step },
    }
}

/// Feeds one observation by id. `out` may be null.
///
/// # Safety
/// `monitor` must be a live handle and `out` writable or null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_monitor_feed(
    monitor: *mut MdpmonMonitor,
    observation: usize,
    out: *mut MdpmonRisk,
) -> MdpmonStatus {
    guarded(|| {
        let mon = monitor.as_mut().ok_or_else(|| null("monitor"))?;
        if observation >= mon.model.num_observations() {
            return Err((MdpmonStatus::UnknownObservation, format!("observation id {observation} out of range")));
        }
        let rep = mon.inner.feed(observation).map_err(lib)?;
        if let Some(out) = out.as_mut() {
            *out = to_risk(rep.step, &rep.risk);
        }
        Ok(())
    })
}

/// Feeds one observation by name. `out` may be null.
///
/// # Safety
/// `monitor` must be a live handle, `name` NUL-terminated and `out`
/// writable or null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_monitor_feed_name(
    monitor: *mut MdpmonMonitor,
    name: *const c_char,
    out: *mut MdpmonRisk,
) -> MdpmonStatus {
    let lookup = || -> Result<usize, (MdpmonStatus, String)> {
        let mon = monitor.as_ref().ok_or_else(|| null("monitor"))?;
        let name = read_str(name, "name")?;
        mon.model
            .observation_id(name)
            .ok_or_else(|| (MdpmonStatus::UnknownObservation, format!("unknown observation `{name}`")))
    };
    let mut id = 0;
    let status = guarded(|| {
        id = lookup()?;
        Ok(())
    });
    if status != MdpmonStatus::Ok {
        return status;
    }
    mdpmon_monitor_feed(monitor, id, out)
}

/// Exact risk after the latest observation as `p/q`, or null when there is
/// none yet or the method only gives bounds. Release with
/// [`mdpmon_string_free`].
///
/// # Safety
/// `monitor` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_monitor_exact_risk(monitor: *const MdpmonMonitor) -> *mut c_char {
    let Some(mon) = monitor.as_ref() else { return ptr::null_mut() };
    match mon.inner.history().last().and_then(|r| r.risk.exact()) {
        Some(v) => CString::new(format_rational(v)).map_or(ptr::null_mut(), CString::into_raw),
        None => ptr::null_mut(),
    }
}

/// # Safety
/// `s` must come from this library and not be freed already, or be null.
#[no_mangle]
pub unsafe extern "C" fn mdpmon_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
