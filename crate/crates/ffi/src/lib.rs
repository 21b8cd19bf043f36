//! C ABI for `dapc`.
//!
//! Objects are opaque handles created by `dapc_*_new`/`dapc_*_from_json`
//! style functions and released with the matching `dapc_*_free`. Every
//! fallible function returns a [`DapcStatus`]; on failure a message is
//! available from [`dapc_last_error_message`] on the same thread. Strings
//! returned through `char **` out-parameters are owned by the caller and must
//! be released with [`dapc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dapc::affinity::{self, ReductionMap};
use dapc::bounds;
use dapc::channel::ChannelParams;
use dapc::codebook::{self, Codebook};
use dapc::idcodec::{self, DecoderParams};
use dapc::Error;

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DapcStatus {
    Ok = 0,
    InvalidArgument = 1,
    DimensionMismatch = 2,
    RankDeficient = 3,
    TooManySubsets = 4,
    TooFewCodewords = 5,
    Numerical = 6,
    Checksum = 7,
    Parse = 8,
    Io = 9,
    NullPointer = 10,
    Panic = 11,
}

impl From<&Error> for DapcStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidArgument(_) => DapcStatus::InvalidArgument,
            Error::DimensionMismatch(_) => DapcStatus::DimensionMismatch,
            Error::RankDeficient(_) => DapcStatus::RankDeficient,
            Error::TooManySubsets { .. } => DapcStatus::TooManySubsets,
            Error::TooFewCodewords => DapcStatus::TooFewCodewords,
            Error::Numerical(_) => DapcStatus::Numerical,
            Error::Checksum(_) => DapcStatus::Checksum,
            Error::Parse(_) => DapcStatus::Parse,
            Error::Io { .. } => DapcStatus::Io,
        }
    }
}

/// Channel parameters (affinity matrix, gains, background rates).
pub struct DapcChannel {
    inner: ChannelParams,
}

/// Rank-revealing reduction of a channel's effective matrix.
pub struct DapcReduction {
    inner: ReductionMap,
}

/// Identification codebook.
pub struct DapcCodebook {
    inner: Codebook,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(DapcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(DapcStatus::from(&e), e.to_string())
    }
}

type FfiResult = std::result::Result<(), Failure>;

fn null(what: &str) -> Failure {
    Failure(DapcStatus::NullPointer, format!("{what} is NULL"))
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult) -> DapcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            DapcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            DapcStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(DapcStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn as_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn to_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Failure(DapcStatus::Numerical, "string contains NUL".into()))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn dapc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dapc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dapc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Identity channel with `n` molecule types, uniform gain `v` and
/// background rate `lambda`.
///
/// # Safety
/// `out_channel` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_identity(n: usize, v: f64, lambda: f64, out_channel: *mut *mut DapcChannel) -> DapcStatus {
    guard(|| {
        let slot = out(out_channel, "out_channel")?;
        let inner = ChannelParams::uniform(affinity::gen_identity(n)?, v, lambda)?;
        *slot = boxed(DapcChannel { inner });
        Ok(())
    })
}

/// Channel from its JSON serialization.
///
/// # Safety
/// `json` must be NUL-terminated; `out_channel` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_from_json(json: *const c_char, out_channel: *mut *mut DapcChannel) -> DapcStatus {
    guard(|| {
        let slot = out(out_channel, "out_channel")?;
        let inner = ChannelParams::from_json(as_str(json, "json")?)?;
        *slot = boxed(DapcChannel { inner });
        Ok(())
    })
}

/// Serialize a channel to JSON; free the result with [`dapc_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_to_json(channel: *const DapcChannel, out_json: *mut *mut c_char) -> DapcStatus {
    guard(|| {
        let ch = as_ref(channel, "channel")?;
        *out(out_json, "out_json")? = to_c_string(ch.inner.to_json())?;
        Ok(())
    })
}

/// # Safety
/// `channel` must come from this library; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_free(channel: *mut DapcChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Number of receptors `k` and molecule types `n`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_dims(channel: *const DapcChannel, out_k: *mut usize, out_n: *mut usize) -> DapcStatus {
    guard(|| {
        let ch = as_ref(channel, "channel")?;
        *out(out_k, "out_k")? = ch.inner.k();
        *out(out_n, "out_n")? = ch.inner.n();
        Ok(())
    })
}

/// Draw one channel output for input `x` (length `n`) into `out_y` (length
/// `k`), using a generator seeded with `seed`.
///
/// # Safety
/// `x` must hold `x_len` values and `out_y` room for `y_len` values.
#[no_mangle]
pub unsafe extern "C" fn dapc_channel_sample(
    channel: *const DapcChannel,
    x: *const f64,
    x_len: usize,
    seed: u64,
    out_y: *mut u64,
    y_len: usize,
) -> DapcStatus {
    guard(|| {
        let ch = &as_ref(channel, "channel")?.inner;
        let x = as_slice(x, x_len, "x")?;
        if y_len != ch.k() {
            return Err(Error::dims(format!("output buffer holds {y_len} counts, K = {}", ch.k())).into());
        }
        if out_y.is_null() {
            return Err(null("out_y"));
        }
        let y = ch.sample(x, &mut dapc::rng::seeded(seed))?;
        std::slice::from_raw_parts_mut(out_y, y_len).copy_from_slice(&y);
        Ok(())
    })
}

/// SVD reduction of the channel's effective matrix.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_reduction_new(channel: *const DapcChannel, out_reduction: *mut *mut DapcReduction) -> DapcStatus {
    guard(|| {
        let ch = as_ref(channel, "channel")?;
        let slot = out(out_reduction, "out_reduction")?;
        let inner = affinity::svd_reduction(ch.inner.abar())?;
        *slot = boxed(DapcReduction { inner });
        Ok(())
    })
}

/// Numerical rank `T` of the reduction.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_reduction_rank(reduction: *const DapcReduction, out_t: *mut usize) -> DapcStatus {
    guard(|| {
        *out(out_t, "out_t")? = as_ref(reduction, "reduction")?.inner.t();
        Ok(())
    })
}

/// # Safety
/// `reduction` must come from this library; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn dapc_reduction_free(reduction: *mut DapcReduction) {
    if !reduction.is_null() {
        drop(Box::from_raw(reduction));
    }
}

/// Packing scale `epsilon_t` and radius `r0` for rank `t`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_packing_radius(
    a: f64,
    b: f64,
    kappa: f64,
    l: f64,
    t: usize,
    out_epsilon_t: *mut f64,
    out_r0: *mut f64,
) -> DapcStatus {
    guard(|| {
        let pr = codebook::packing_radius(a, b, kappa, l, t)?;
        *out(out_epsilon_t, "out_epsilon_t")? = pr.epsilon_t;
        *out(out_r0, "out_r0")? = pr.r0;
        Ok(())
    })
}

/// Lower and upper capacity bounds at `(kappa, l)`; the lower bound is
/// returned unclamped.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_capacity_bounds(kappa: f64, l: f64, out_lower: *mut f64, out_upper: *mut f64) -> DapcStatus {
    guard(|| {
        let b = bounds::capacity_bounds(kappa, l)?;
        *out(out_lower, "out_lower")? = b.lower;
        *out(out_upper, "out_upper")? = b.upper;
        Ok(())
    })
}

/// Greedy sphere-packing codebook.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_greedy(
    channel: *const DapcChannel,
    reduction: *const DapcReduction,
    c_avg: f64,
    c_max: f64,
    r0: f64,
    candidate_budget: usize,
    seed: u64,
    out_codebook: *mut *mut DapcCodebook,
) -> DapcStatus {
    guard(|| {
        let ch = as_ref(channel, "channel")?;
        let red = as_ref(reduction, "reduction")?;
        let slot = out(out_codebook, "out_codebook")?;
        let inner = codebook::construct_greedy(&ch.inner, &red.inner, c_avg, c_max, r0, candidate_budget, seed)?;
        *slot = boxed(DapcCodebook { inner });
        Ok(())
    })
}

/// Codebook from its JSON serialization; checksums are verified against the
/// given channel and reduction.
///
/// # Safety
/// Pointers must be valid; `json` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_from_json(
    json: *const c_char,
    channel: *const DapcChannel,
    reduction: *const DapcReduction,
    out_codebook: *mut *mut DapcCodebook,
) -> DapcStatus {
    guard(|| {
        let text = as_str(json, "json")?;
        let ch = as_ref(channel, "channel")?;
        let red = as_ref(reduction, "reduction")?;
        let slot = out(out_codebook, "out_codebook")?;
        let inner = Codebook::from_json(text, &ch.inner, &red.inner)?;
        *slot = boxed(DapcCodebook { inner });
        Ok(())
    })
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_to_json(codebook: *const DapcCodebook, out_json: *mut *mut c_char) -> DapcStatus {
    guard(|| {
        let cb = as_ref(codebook, "codebook")?;
        *out(out_json, "out_json")? = to_c_string(cb.inner.to_json())?;
        Ok(())
    })
}

/// # Safety
/// `codebook` must come from this library; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_free(codebook: *mut DapcCodebook) {
    if !codebook.is_null() {
        drop(Box::from_raw(codebook));
    }
}

/// Number of codewords `m`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_size(codebook: *const DapcCodebook, out_m: *mut usize) -> DapcStatus {
    guard(|| {
        *out(out_m, "out_m")? = as_ref(codebook, "codebook")?.inner.m();
        Ok(())
    })
}

/// Smallest pairwise distance between reduced codewords; fails with
/// `TooFewCodewords` when `m < 2`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_codebook_min_distance(codebook: *const DapcCodebook, out_distance: *mut f64) -> DapcStatus {
    guard(|| {
        let cb = as_ref(codebook, "codebook")?;
        *out(out_distance, "out_distance")? = codebook::min_distance_reduced(&cb.inner)?;
        Ok(())
    })
}

/// Decoder settings shared by the identification calls.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DapcDecoderConfig {
    pub a: f64,
    pub b: f64,
    pub kappa: f64,
    pub l: f64,
}

unsafe fn decoder(config: *const DapcDecoderConfig, red: &ReductionMap) -> Result<DecoderParams, Failure> {
    let c = as_ref(config, "config")?;
    Ok(DecoderParams::new(c.a, c.b, c.kappa, c.l, red)?)
}

/// Threshold test: does output `y` (length `k`) identify message `j`?
///
/// # Safety
/// Pointers must be valid; `y` must hold `y_len` counts.
#[no_mangle]
pub unsafe extern "C" fn dapc_identify(
    codebook: *const DapcCodebook,
    channel: *const DapcChannel,
    reduction: *const DapcReduction,
    config: *const DapcDecoderConfig,
    y: *const u64,
    y_len: usize,
    j: usize,
    out_accept: *mut bool,
) -> DapcStatus {
    guard(|| {
        let cb = as_ref(codebook, "codebook")?;
        let ch = as_ref(channel, "channel")?;
        let red = as_ref(reduction, "reduction")?;
        let dp = decoder(config, &red.inner)?;
        let y = as_slice(y, y_len, "y")?;
        *out(out_accept, "out_accept")? = idcodec::identify(y, j, &cb.inner, &ch.inner, &dp)?;
        Ok(())
    })
}

/// Monte Carlo type I/II error estimate, returned as a JSON object.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dapc_estimate_errors(
    codebook: *const DapcCodebook,
    channel: *const DapcChannel,
    reduction: *const DapcReduction,
    config: *const DapcDecoderConfig,
    trials: usize,
    seed: u64,
    pair_cap: usize,
    out_json: *mut *mut c_char,
) -> DapcStatus {
    guard(|| {
        let cb = as_ref(codebook, "codebook")?;
        let ch = as_ref(channel, "channel")?;
        let red = as_ref(reduction, "reduction")?;
        let dp = decoder(config, &red.inner)?;
        let slot = out(out_json, "out_json")?;
        let est = idcodec::estimate_errors(&cb.inner, &ch.inner, &dp, trials, seed, pair_cap)?;
        let json = serde_json::to_string(&est).map_err(Error::from)?;
        *slot = to_c_string(json)?;
        Ok(())
    })
}
