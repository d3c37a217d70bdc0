//! C interface to the simulator and the steady-state models.
//!
//! Objects are opaque handles created and destroyed through this API. Every
//! fallible call returns a [`CidcStatus`]; the message for the most recent
//! failure on the calling thread is available from
//! [`cidc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cidc_core::analytics;
use cidc_core::dcf::run_round;
use cidc_core::mac::trace::RoundResult;
use cidc_core::mac::{entry_point, Outcome, Protocol};
use cidc_core::{Error, ProtocolParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    BeyondSaturation = 3,
    Numeric = 4,
    OutOfRange = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidcProtocol {
    Cidc = 0,
    Dcf = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CidcOutcome {
    Sent = 0,
    Collided = 1,
    Expired = 2,
}

/// Scenario parameters. Create with [`cidc_params_new`].
pub struct CidcParams(ProtocolParams);

/// Packets and traces of one simulated round.
pub struct CidcRound(RoundResult);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CidcCounts {
    pub generated: u64,
    pub sent: u64,
    pub collided: u64,
    pub expired: u64,
}

/// One packet. Delays are in seconds and negative when the packet never
/// reached the channel; `start_tx` is -1 in that case.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CidcPacket {
    pub vehicle: u64,
    pub generation: u64,
    pub gen_slot: u64,
    pub entry_point: u32,
    pub start_tx: i64,
    pub outcome: CidcOutcome,
    pub d_o: f64,
    pub d_c: f64,
}

/// Steady-state model outputs. Times in seconds.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CidcSteadyState {
    pub c_s: f64,
    pub d_o: f64,
    pub d_c: f64,
    pub upsilon_s: f64,
    pub n_s: f64,
    pub p_col: f64,
    pub p_col_ub: f64,
    pub n_sat: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CidcStatus, msg: impl Into<String>) -> CidcStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> CidcStatus {
    let status = match e {
        Error::BeyondSaturation(_) => CidcStatus::BeyondSaturation,
        Error::Numeric { .. } | Error::AmbiguousStationary { .. } => CidcStatus::Numeric,
        Error::InvalidParam(_) | Error::NonIntegralK { .. } | Error::TooManyVehicles { .. } | Error::Config { .. } => {
            CidcStatus::InvalidParam
        }
        _ => CidcStatus::Internal,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CidcStatus) -> CidcStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CidcStatus::Internal, "panic inside cidc"))
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(CidcStatus::NullPointer, concat!("`", stringify!($p), "` is null")),
        }
    };
}

macro_rules! deref_mut {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(CidcStatus::NullPointer, concat!("`", stringify!($p), "` is null")),
        }
    };
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cidc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cidc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters: 100 vehicles, 10 Hz, M = 2, K = 24, 160 cycles.
#[no_mangle]
pub extern "C" fn cidc_params_new() -> *mut CidcParams {
    Box::into_raw(Box::new(CidcParams(ProtocolParams::default())))
}

/// # Safety
/// `params` must come from [`cidc_params_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cidc_params_free(params: *mut CidcParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Sets the scalar fields. Nothing is changed unless the result validates.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn cidc_params_set(
    params: *mut CidcParams,
    n_vehicles: usize,
    lambda: f64,
    m_param: u32,
    w_window: u32,
    delta_churn: f64,
    n_cycles: u32,
    rng_seed: u64,
) -> CidcStatus {
    guard(|| {
        let p = deref_mut!(params);
        let next = ProtocolParams { n_vehicles, lambda, m_param, w_window, delta_churn, n_cycles, rng_seed, ..p.0.clone() };
        match next.validate() {
            Ok(()) => {
                p.0 = next;
                CidcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Sets the frame airtime in seconds and derives the busy-slot length.
///
/// # Safety
/// `params` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cidc_params_set_t_tx(params: *mut CidcParams, t_tx: f64) -> CidcStatus {
    guard(|| {
        let p = deref_mut!(params);
        let mut next = p.0.clone();
        match next.set_t_tx(t_tx) {
            Ok(()) => {
                p.0 = next;
                CidcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Busy-slot length in mini-slots, 0 for a null handle.
///
/// # Safety
/// `params` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cidc_params_k_busy(params: *const CidcParams) -> u32 {
    params.as_ref().map_or(0, |p| p.0.k_busy)
}

/// Initial back-off counter for `estimated` contending messages.
#[no_mangle]
pub extern "C" fn cidc_entry_point(estimated: u32, m_param: u32) -> u32 {
    entry_point(estimated, m_param)
}

/// Simulates one round. On success `*out` owns a new handle.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cidc_run_round(
    params: *const CidcParams,
    protocol: CidcProtocol,
    round: u32,
    out: *mut *mut CidcRound,
) -> CidcStatus {
    guard(|| {
        let p = deref!(params);
        let out = deref_mut!(out);
        *out = ptr::null_mut();
        let proto = match protocol {
            CidcProtocol::Cidc => Protocol::Cidc,
            CidcProtocol::Dcf => Protocol::Dcf,
        };
        match run_round(&p.0, proto, round, false) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(CidcRound(r)));
                CidcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `round` must come from [`cidc_run_round`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cidc_round_free(round: *mut CidcRound) {
    if !round.is_null() {
        drop(Box::from_raw(round));
    }
}

/// Number of packet records, 0 for a null handle.
///
/// # Safety
/// `round` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn cidc_round_packet_count(round: *const CidcRound) -> usize {
    round.as_ref().map_or(0, |r| r.0.packets.len())
}

/// # Safety
/// `round` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cidc_round_counts(round: *const CidcRound, out: *mut CidcCounts) -> CidcStatus {
    guard(|| {
        let r = &deref!(round).0;
        let out = deref_mut!(out);
        *out = CidcCounts {
            generated: r.packets.len() as u64,
            sent: r.count(Outcome::Sent) as u64,
            collided: r.count(Outcome::Collided) as u64,
            expired: r.count(Outcome::Expired) as u64,
        };
        CidcStatus::Ok
    })
}

/// # Safety
/// `round` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cidc_round_packet(round: *const CidcRound, index: usize, out: *mut CidcPacket) -> CidcStatus {
    guard(|| {
        let r = &deref!(round).0;
        let out = deref_mut!(out);
        let Some(p) = r.packets.get(index) else {
            return fail(CidcStatus::OutOfRange, format!("packet {index} of {}", r.packets.len()));
        };
        *out = CidcPacket {
            vehicle: p.vehicle as u64,
            generation: p.generation,
            gen_slot: p.gen_slot,
            entry_point: p.entry_point,
            start_tx: p.start_tx.map_or(-1, |s| s as i64),
            outcome: match p.outcome {
                Outcome::Sent => CidcOutcome::Sent,
                Outcome::Collided => CidcOutcome::Collided,
                Outcome::Expired => CidcOutcome::Expired,
            },
            d_o: p.d_o.unwrap_or(-1.0),
            d_c: p.d_c.unwrap_or(-1.0),
        };
        CidcStatus::Ok
    })
}

/// Solves the delay and collision models for `params`.
///
/// # Safety
/// `params` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cidc_steady_state(params: *const CidcParams, out: *mut CidcSteadyState) -> CidcStatus {
    guard(|| {
        let p = deref!(params);
        let out = deref_mut!(out);
        match analytics::steady_state(&p.0) {
            Ok(s) => {
                *out = CidcSteadyState {
                    c_s: s.c_s,
                    d_o: s.d_o,
                    d_c: s.d_c,
                    upsilon_s: s.upsilon_s,
                    n_s: s.n_s,
                    p_col: s.p_col,
                    p_col_ub: s.p_col_ub,
                    n_sat: s.n_sat,
                };
                CidcStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
