//! C ABI over `ap3lab`.
//!
//! Sets and weight functions cross the boundary as opaque handles owned by
//! the caller and released with the matching `_free`. Every entry point
//! returns an [`Ap3Status`]; on failure, [`ap3_last_error_message`] describes
//! the most recent error on the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ap3lab::ap_count::{count_3aps_naive, count_3aps_spectral};
use ap3lab::bohr::{bohr_element, convolve, BohrSpec, SmoothingProgression};
use ap3lab::constructions::two_interval_set;
use ap3lab::critical::exhaustive_critical;
use ap3lab::rounding::{round_weights, RoundingOptions};
use ap3lab::{longest_ap, Error, PrimeModulus, ResidueSet, WeightFunction};

/// Result code of every `ap3_*` call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ap3Status {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotFound = 3,
    Exhausted = 4,
    Precondition = 5,
    Consistency = 6,
    Internal = 7,
    Panic = 8,
}

/// A subset of Z/pZ.
pub struct Ap3Set(ResidueSet);

/// A map from Z/pZ to [0, 1].
pub struct Ap3Weights(WeightFunction);

/// Progression counts with ordered differences, `m = 0` included.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ap3Count {
    pub total: u64,
    pub trivial: u64,
    pub nontrivial: u64,
}

/// `start, start + step, ..., start + (length - 1) step` mod p.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Ap3Run {
    pub start: u64,
    pub step: u64,
    pub length: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> Ap3Status {
    match e {
        Error::Stage { source, .. } => status_of(source),
        e if e.is_validation() => Ap3Status::InvalidArgument,
        Error::NotFound => Ap3Status::NotFound,
        Error::RetryExhausted { .. } | Error::DrawsExhausted { .. } => Ap3Status::Exhausted,
        Error::Precondition(_) => Ap3Status::Precondition,
        Error::Consistency(_) => Ap3Status::Consistency,
        _ => Ap3Status::Internal,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> Ap3Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => Ap3Status::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            Ap3Status::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            Ap3Status::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|e| Fail::Lib(Error::InvalidArgument(e.to_string())))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ap3_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from an `ap3_*` function and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn ap3_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a set from `len` integers, each reduced mod `p`.
///
/// # Safety
/// `members` must point to `len` readable values; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_new(
    p: u64,
    members: *const i64,
    len: usize,
    out_set: *mut *mut Ap3Set,
) -> Ap3Status {
    guard(|| {
        let out_set = out(out_set, "out_set")?;
        let members = slice(members, len, "members")?;
        let m = PrimeModulus::new(p)?;
        *out_set = boxed(Ap3Set(ResidueSet::new(m, members.iter().copied())));
        Ok(())
    })
}

/// Parses the JSON or text set format.
///
/// # Safety
/// `text` must be a nul-terminated string; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_parse(
    text: *const c_char,
    out_set: *mut *mut Ap3Set,
) -> Ap3Status {
    guard(|| {
        let out_set = out(out_set, "out_set")?;
        if text.is_null() {
            return Err(Fail::Null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Error::Parse(e.to_string()))?;
        *out_set = boxed(Ap3Set(ResidueSet::parse(text)?));
        Ok(())
    })
}

/// Canonical JSON for the set; release with [`ap3_string_free`].
///
/// # Safety
/// `set` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_to_json(
    set: *const Ap3Set,
    out_json: *mut *mut c_char,
) -> Ap3Status {
    guard(|| {
        let set = deref(set, "set")?;
        let out_json = out(out_json, "out_json")?;
        *out_json = to_c_string(set.0.to_json())?;
        Ok(())
    })
}

/// # Safety
/// `set` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_free(set: *mut Ap3Set) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle; `out_p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_modulus(set: *const Ap3Set, out_p: *mut u64) -> Ap3Status {
    guard(|| {
        *out(out_p, "out_p")? = deref(set, "set")?.0.p();
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_cardinality(set: *const Ap3Set, out_len: *mut usize) -> Ap3Status {
    guard(|| {
        *out(out_len, "out_len")? = deref(set, "set")?.0.len();
        Ok(())
    })
}

/// Writes up to `cap` members in ascending order to `buf` and the
/// cardinality to `out_len`. Call with `cap = 0` to size the buffer.
///
/// # Safety
/// `buf` must have room for `cap` values; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_members(
    set: *const Ap3Set,
    buf: *mut u64,
    cap: usize,
    out_len: *mut usize,
) -> Ap3Status {
    guard(|| {
        let set = deref(set, "set")?;
        let out_len = out(out_len, "out_len")?;
        if cap > 0 && buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        for (i, r) in set.0.iter().take(cap).enumerate() {
            *buf.add(i) = r;
        }
        *out_len = set.0.len();
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle; `out_set` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_set_complement(
    set: *const Ap3Set,
    out_set: *mut *mut Ap3Set,
) -> Ap3Status {
    guard(|| {
        let set = deref(set, "set")?;
        *out(out_set, "out_set")? = boxed(Ap3Set(set.0.complement()));
        Ok(())
    })
}

/// Exact bitset count.
///
/// # Safety
/// `set` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_count_naive(
    set: *const Ap3Set,
    out_count: *mut Ap3Count,
) -> Ap3Status {
    guard(|| {
        let c = count_3aps_naive(&deref(set, "set")?.0);
        *out(out_count, "out_count")? = Ap3Count {
            total: c.total,
            trivial: c.trivial,
            nontrivial: c.nontrivial,
        };
        Ok(())
    })
}

/// Real part of `p^{-1} sum_a S^(a)^2 S^(-2a)`.
///
/// # Safety
/// `set` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_count_spectral(set: *const Ap3Set, out_value: *mut f64) -> Ap3Status {
    guard(|| {
        let c = count_3aps_spectral(&deref(set, "set")?.0)?;
        *out(out_value, "out_value")? = c.real;
        Ok(())
    })
}

/// # Safety
/// `set` must be a live handle; `out_run` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_longest_ap(set: *const Ap3Set, out_run: *mut Ap3Run) -> Ap3Status {
    guard(|| {
        let r = longest_ap(&deref(set, "set")?.0);
        *out(out_run, "out_run")? = Ap3Run {
            start: r.start,
            step: r.step,
            length: r.length,
        };
        Ok(())
    })
}

/// Smallest `n` in `[1, p-1]` with `||a n / p|| < eps` for every frequency.
///
/// # Safety
/// `freqs` must point to `k` readable values; `out_n` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_bohr_element(
    p: u64,
    freqs: *const u64,
    k: usize,
    eps: f64,
    out_n: *mut u64,
) -> Ap3Status {
    guard(|| {
        let out_n = out(out_n, "out_n")?;
        let freqs = slice(freqs, k, "freqs")?;
        let spec = BohrSpec::new(PrimeModulus::new(p)?, freqs.to_vec(), eps)?;
        *out_n = bohr_element(&spec)?;
        Ok(())
    })
}

/// # Safety
/// `values` must point to `len` readable values; `out_weights` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_weights_new(
    p: u64,
    values: *const f64,
    len: usize,
    out_weights: *mut *mut Ap3Weights,
) -> Ap3Status {
    guard(|| {
        let out_weights = out(out_weights, "out_weights")?;
        let values = slice(values, len, "values")?;
        let w = WeightFunction::new(PrimeModulus::new(p)?, values.to_vec())?;
        *out_weights = boxed(Ap3Weights(w));
        Ok(())
    })
}

/// # Safety
/// `w` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ap3_weights_free(w: *mut Ap3Weights) {
    if !w.is_null() {
        drop(Box::from_raw(w));
    }
}

/// Copies the `p` values into `buf`, which must hold `cap >= p` entries.
///
/// # Safety
/// `buf` must have room for `cap` values.
#[no_mangle]
pub unsafe extern "C" fn ap3_weights_values(
    w: *const Ap3Weights,
    buf: *mut f64,
    cap: usize,
) -> Ap3Status {
    guard(|| {
        let w = deref(w, "weights")?;
        let values = w.0.values();
        if cap < values.len() {
            return Err(Error::InvalidArgument(format!(
                "buffer holds {cap} values, need {}",
                values.len()
            ))
            .into());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        Ok(())
    })
}

/// `(S * N)(m) = |S ∩ (m - N)| / |N|` for `N = {0, n0, ..., (length-1) n0}`.
///
/// # Safety
/// `set` must be a live handle; `out_weights` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_convolve(
    set: *const Ap3Set,
    n0: u64,
    length: u64,
    out_weights: *mut *mut Ap3Weights,
) -> Ap3Status {
    guard(|| {
        let set = deref(set, "set")?;
        let out_weights = out(out_weights, "out_weights")?;
        let n = SmoothingProgression::new(set.0.modulus(), n0, length)?;
        *out_weights = boxed(Ap3Weights(convolve(&set.0, &n)?));
        Ok(())
    })
}

/// Bernoulli rounding with retries until every Fourier coefficient is
/// within `bound_factor * ln p * sqrt p` of the weights' transform.
///
/// # Safety
/// `w` must be a live handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_round_weights(
    w: *const Ap3Weights,
    seed: u64,
    bound_factor: f64,
    out_set: *mut *mut Ap3Set,
    out_deviation: *mut f64,
) -> Ap3Status {
    guard(|| {
        let w = deref(w, "weights")?;
        let out_set = out(out_set, "out_set")?;
        let out_deviation = out(out_deviation, "out_deviation")?;
        let (set, cert) = round_weights(
            &w.0,
            seed,
            &RoundingOptions::with_bound_factor(bound_factor),
        )?;
        *out_deviation = cert.max_spectral_deviation;
        *out_set = boxed(Ap3Set(set));
        Ok(())
    })
}

/// `Ubar = [0, θp/2] ∪ [p/2, p/2 + θp/2]` and its complement `U`.
///
/// # Safety
/// Both out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_two_interval(
    p: u64,
    theta: f64,
    out_u: *mut *mut Ap3Set,
    out_ubar: *mut *mut Ap3Set,
) -> Ap3Status {
    guard(|| {
        let out_u = out(out_u, "out_u")?;
        let out_ubar = out(out_ubar, "out_ubar")?;
        let t = two_interval_set(PrimeModulus::new(p)?, theta)?;
        *out_u = boxed(Ap3Set(t.u));
        *out_ubar = boxed(Ap3Set(t.ubar));
        Ok(())
    })
}

/// Minimum count over all `s`-subsets and the lexicographically first
/// minimizer.
///
/// # Safety
/// The out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ap3_exhaustive_critical(
    p: u64,
    s: usize,
    out_min_count: *mut u64,
    out_minimizer: *mut *mut Ap3Set,
) -> Ap3Status {
    guard(|| {
        let out_min_count = out(out_min_count, "out_min_count")?;
        let out_minimizer = out(out_minimizer, "out_minimizer")?;
        let mut r = exhaustive_critical(PrimeModulus::new(p)?, s, 1)?;
        *out_min_count = r.min_count;
        *out_minimizer = boxed(Ap3Set(r.minimizers.remove(0)));
        Ok(())
    })
}
