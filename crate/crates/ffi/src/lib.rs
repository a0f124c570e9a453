//! C ABI for qlidar.
//!
//! Every function returns a [`QlStatus`]; results come back through out
//! pointers. On failure, [`ql_last_error_message`] describes the error for
//! the calling thread. Handles are opaque and must be released with their
//! `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use qlidar::gaussian::{lossy_qfi_closed_form, lossy_qfi_pipeline, LossScenario};
use qlidar::measurement::{
    fisher_info_closed_form, fisher_info_counting, mle_estimate, sample_photon_pairs, DetectionEvent,
};
use qlidar::qfi_quantum::{classify_regime, ln_advantage_ratio, qfi_quantum, Regime, RegimeThresholds};
use qlidar::{Error, SpectralParams};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    BracketEdge = 4,
    IndexOutOfRange = 5,
    Panic = 6,
}

/// Opaque spectral parameter set.
pub struct QlParams {
    inner: SpectralParams,
}

/// Opaque list of detected signal/idler pairs.
pub struct QlEventList {
    events: Vec<DetectionEvent>,
}

/// Summary of the exact QFI series.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlQfiBreakdown {
    pub z_omega: f64,
    pub z_sigma: f64,
    pub j_q: f64,
    pub ln_j_q: f64,
    pub photon_number: f64,
    pub ln_photon_number: f64,
    pub bandwidth_share: f64,
    pub truncation_bound: f64,
    pub n_terms_used: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlRegime {
    NoEntanglement = 0,
    HighEntanglement = 1,
    HighSqueezing = 2,
    Mixed = 3,
    Indeterminate = 4,
}

/// Regime with asymptotic and exact advantage. `asymptotic_ratio` and
/// `relative_gap` are NaN when `has_asymptote` is false.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QlRegimeReport {
    pub regime: QlRegime,
    pub has_asymptote: bool,
    pub asymptotic_ratio: f64,
    pub exact_ratio: f64,
    pub relative_gap: f64,
    pub ln_exact_ratio: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> QlStatus {
    match e {
        Error::BracketEdge { .. } => QlStatus::BracketEdge,
        e if e.is_input_error() => QlStatus::InvalidArgument,
        _ => QlStatus::NumericalFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), QlStatus>>(f: F) -> QlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QlStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            QlStatus::Panic
        }
    }
}

fn lift<T>(r: qlidar::Result<T>) -> Result<T, QlStatus> {
    r.map_err(|e| {
        set_error(&e.to_string());
        status_of(&e)
    })
}

fn null(what: &str) -> QlStatus {
    set_error(&format!("null pointer: {what}"));
    QlStatus::NullPointer
}

unsafe fn params_ref<'a>(p: *const QlParams) -> Result<&'a SpectralParams, QlStatus> {
    p.as_ref().map(|p| &p.inner).ok_or_else(|| null("params"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), QlStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread; empty after success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ql_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ql_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a parameter set from explicit bandwidths.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ql_params_new(
    omega0: f64,
    sigma: f64,
    epsilon: f64,
    xi: f64,
    mu: f64,
    out: *mut *mut QlParams,
) -> QlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lift(SpectralParams::new(omega0, sigma, epsilon, xi, mu))?;
        out.write(Box::into_raw(Box::new(QlParams { inner })));
        Ok(())
    })
}

/// Creates a parameter set from the Schmidt number and the relative
/// bandwidth sqrt(sigma eps)/omega0.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ql_params_from_schmidt(
    omega0: f64,
    k: f64,
    rel_bw: f64,
    xi: f64,
    mu: f64,
    out: *mut *mut QlParams,
) -> QlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lift(SpectralParams::from_schmidt_number(omega0, k, rel_bw, xi, mu))?;
        out.write(Box::into_raw(Box::new(QlParams { inner })));
        Ok(())
    })
}

/// Releases a parameter set. Null is ignored.
///
/// # Safety
/// `p` must come from a `ql_params_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ql_params_free(p: *mut QlParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Reads back (sigma, epsilon, schmidt number).
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_params_get(
    p: *const QlParams,
    sigma: *mut f64,
    epsilon: *mut f64,
    schmidt_number: *mut f64,
) -> QlStatus {
    guard(|| {
        let p = params_ref(p)?;
        write(sigma, p.sigma, "sigma")?;
        write(epsilon, p.epsilon, "epsilon")?;
        write(schmidt_number, p.schmidt_number(), "schmidt_number")
    })
}

/// Exact quantum Fisher information series.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_qfi_quantum(p: *const QlParams, out: *mut QlQfiBreakdown) -> QlStatus {
    guard(|| {
        let b = lift(qfi_quantum(params_ref(p)?))?;
        write(
            out,
            QlQfiBreakdown {
                z_omega: b.z_omega,
                z_sigma: b.z_sigma,
                j_q: b.j_q,
                ln_j_q: b.ln_j_q,
                photon_number: b.photon_number,
                ln_photon_number: b.ln_photon_number,
                bandwidth_share: b.bandwidth_share,
                truncation_bound: b.truncation_bound,
                n_terms_used: b.n_terms_used,
            },
            "out",
        )
    })
}

/// J_q / J_c against the matched coherent probe, and its logarithm.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle. `ln_ratio` may be null.
#[no_mangle]
pub unsafe extern "C" fn ql_advantage_ratio(p: *const QlParams, ratio: *mut f64, ln_ratio: *mut f64) -> QlStatus {
    guard(|| {
        let l = lift(ln_advantage_ratio(params_ref(p)?))?;
        write(ratio, l.exp(), "ratio")?;
        if !ln_ratio.is_null() {
            ln_ratio.write(l);
        }
        Ok(())
    })
}

/// Regime classification with the default thresholds.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_classify_regime(p: *const QlParams, out: *mut QlRegimeReport) -> QlStatus {
    guard(|| {
        let r = lift(classify_regime(params_ref(p)?, &RegimeThresholds::default()))?;
        let regime = match r.regime {
            Regime::NoEntanglement => QlRegime::NoEntanglement,
            Regime::HighEntanglement => QlRegime::HighEntanglement,
            Regime::HighSqueezing => QlRegime::HighSqueezing,
            Regime::Mixed => QlRegime::Mixed,
            Regime::Indeterminate => QlRegime::Indeterminate,
        };
        write(
            out,
            QlRegimeReport {
                regime,
                has_asymptote: r.asymptotic_ratio.is_some(),
                asymptotic_ratio: r.asymptotic_ratio.unwrap_or(f64::NAN),
                exact_ratio: r.exact_ratio,
                relative_gap: r.relative_gap.unwrap_or(f64::NAN),
                ln_exact_ratio: r.ln_exact_ratio,
            },
            "out",
        )
    })
}

/// Lossy QFI by the closed form and by the covariance pipeline. Only
/// omega0 and sigma*epsilon of `p` enter. `pipeline` may be null to skip
/// the (slower) pipeline evaluation.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_lossy_qfi(
    p: *const QlParams,
    eta: f64,
    mu0: f64,
    ns0: f64,
    ns1: f64,
    closed_form: *mut f64,
    pipeline: *mut f64,
) -> QlStatus {
    guard(|| {
        let sc = lift(LossScenario::new(eta, mu0, ns0, ns1, *params_ref(p)?))?;
        write(closed_form, lossy_qfi_closed_form(&sc), "closed_form")?;
        if !pipeline.is_null() {
            pipeline.write(lift(lossy_qfi_pipeline(&sc))?.value);
        }
        Ok(())
    })
}

/// Photon-counting Fisher information at `mu` by quadrature and closed form.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_fisher_info(
    p: *const QlParams,
    mu: f64,
    quadrature: *mut f64,
    closed_form: *mut f64,
) -> QlStatus {
    guard(|| {
        let params = params_ref(p)?;
        let q = lift(fisher_info_counting(mu, params))?;
        write(quadrature, q.value, "quadrature")?;
        write(closed_form, fisher_info_closed_form(mu, params), "closed_form")
    })
}

/// Samples `m` detected pairs at Doppler parameter `mu`.
///
/// # Safety
/// Pointers must be valid; `p` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_sample_pairs(
    p: *const QlParams,
    mu: f64,
    m: usize,
    seed: u64,
    out: *mut *mut QlEventList,
) -> QlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let events = lift(sample_photon_pairs(mu, params_ref(p)?, m, seed))?;
        out.write(Box::into_raw(Box::new(QlEventList { events })));
        Ok(())
    })
}

/// Number of events in a list (0 for null).
///
/// # Safety
/// `list` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_event_list_len(list: *const QlEventList) -> usize {
    list.as_ref().map_or(0, |l| l.events.len())
}

/// Reads event `index`.
///
/// # Safety
/// Pointers must be valid; `list` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ql_event_list_get(
    list: *const QlEventList,
    index: usize,
    omega: *mut f64,
    omega_tilde: *mut f64,
) -> QlStatus {
    guard(|| {
        let l = list.as_ref().ok_or_else(|| null("list"))?;
        let e = l.events.get(index).ok_or_else(|| {
            set_error(&format!("index {index} out of range for {} events", l.events.len()));
            QlStatus::IndexOutOfRange
        })?;
        write(omega, e.omega, "omega")?;
        write(omega_tilde, e.omega_tilde, "omega_tilde")
    })
}

/// Releases an event list. Null is ignored.
///
/// # Safety
/// `list` must come from `ql_sample_pairs` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn ql_event_list_free(list: *mut QlEventList) {
    if !list.is_null() {
        drop(Box::from_raw(list));
    }
}

/// Maximum-likelihood estimate of mu on the bracket [lo, hi].
///
/// # Safety
/// Pointers must be valid; handles must be live.
#[no_mangle]
pub unsafe extern "C" fn ql_mle(
    list: *const QlEventList,
    p: *const QlParams,
    lo: f64,
    hi: f64,
    mu_hat: *mut f64,
) -> QlStatus {
    guard(|| {
        let l = list.as_ref().ok_or_else(|| null("list"))?;
        let run = lift(mle_estimate(&l.events, params_ref(p)?, (lo, hi)))?;
        write(mu_hat, run.mu_hat, "mu_hat")
    })
}
