//! C ABI for `sgl-mixing`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`SglStatus`]; on failure the message is kept per thread and can
//! be read with [`sgl_last_error_message`]. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sgl_mixing::config::RunConfig;
use sgl_mixing::doeblin::{self, FiniteKernel, SmallSetCertificate};
use sgl_mixing::integrator::{ode_comparison, SimulationParams, Simulator, StepForcing};
use sgl_mixing::{Error, SpectralField};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SglStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    AssumptionViolation = 4,
    BlowUp = 5,
    NotFound = 6,
    NonUniqueStationary = 7,
    BufferTooSmall = 8,
    Io = 9,
    Panic = 10,
}

impl From<&Error> for SglStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Spectrum(_) => Self::AssumptionViolation,
            Error::BlowUp { .. } => Self::BlowUp,
            Error::Config { .. } | Error::Parse(_) => Self::ParseError,
            Error::NonUniqueStationary => Self::NonUniqueStationary,
            Error::Io(_) => Self::Io,
            _ => Self::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: SglStatus, message: impl Into<String>) -> SglStatus {
    set_error(message.into());
    status
}

fn fail_with(e: Error) -> SglStatus {
    let status = SglStatus::from(&e);
    fail(status, e.to_string())
}

/// Runs `f`, converting panics into [`SglStatus::Panic`].
fn guard(f: impl FnOnce() -> SglStatus) -> SglStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(SglStatus::Panic, "internal panic"),
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SglStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Copies the last error message of this thread into `buf` (nul-terminated,
/// truncated to `len`). Returns the full message length without the nul, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sgl_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let slot = slot.borrow();
        let Some(msg) = slot.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sgl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, SglStatus> {
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(SglStatus::InvalidArgument, "string is not valid UTF-8"))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize) -> &'a [T] {
    if len == 0 {
        &[]
    } else {
        slice::from_raw_parts(p, len)
    }
}

fn write_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> SglStatus {
    if len < src.len() {
        return fail(
            SglStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    // SAFETY: caller guarantees `out` holds `len >= src.len()` elements.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    SglStatus::Ok
}

/// A finite Markov kernel.
pub struct SglKernel(FiniteKernel);

/// A minorization certificate `(K, m, δ, ν, δ')`.
pub struct SglCertificate(SmallSetCertificate);

/// A validated SPDE model with precomputed step operators.
pub struct SglSimulator(Simulator);

fn boxed<T>(value: T, out: *mut *mut T) -> SglStatus {
    // SAFETY: `out` checked non-null by every caller.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    SglStatus::Ok
}

/// Builds a kernel from `n * n` row-major probabilities.
///
/// # Safety
/// `entries` must point to `n * n` doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sgl_kernel_new(
    n: usize,
    entries: *const f64,
    out: *mut *mut SglKernel,
) -> SglStatus {
    guard(|| {
        non_null!(entries, out);
        let Some(len) = n.checked_mul(n) else {
            return fail(SglStatus::InvalidArgument, "state count overflows");
        };
        match FiniteKernel::new(n, read_slice(entries, len).to_vec()) {
            Ok(k) => boxed(SglKernel(k), out),
            Err(e) => fail_with(e),
        }
    })
}

/// Parses a kernel file body (first line `n`, then `n` rows).
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sgl_kernel_parse(
    text: *const c_char,
    out: *mut *mut SglKernel,
) -> SglStatus {
    guard(|| {
        non_null!(text, out);
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match doeblin::parse_kernel(text) {
            Ok(k) => boxed(SglKernel(k), out),
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `kernel` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn sgl_kernel_free(kernel: *mut SglKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Number of states, 0 for a null handle.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_kernel_size(kernel: *const SglKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.0.n())
}

/// Writes the unique stationary distribution into `out[..n]`.
///
/// # Safety
/// `kernel` must be a live handle and `out` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgl_invariant_measure(
    kernel: *const SglKernel,
    out: *mut f64,
    len: usize,
) -> SglStatus {
    guard(|| {
        non_null!(kernel, out);
        match doeblin::invariant_measure(&(*kernel).0) {
            Ok(mu) => write_out(&mu, out, len),
            Err(e) => fail_with(e),
        }
    })
}

fn certificate_result(
    found: sgl_mixing::Result<Option<SmallSetCertificate>>,
    out: *mut *mut SglCertificate,
) -> SglStatus {
    match found {
        Ok(Some(c)) => boxed(SglCertificate(c), out),
        Ok(None) => fail(SglStatus::NotFound, "no certificate exists for this input"),
        Err(e) => fail_with(e),
    }
}

/// Column-minima certificate for `P^m` on `set`. Returns
/// [`SglStatus::NotFound`] when the rows share no mass.
///
/// # Safety
/// `kernel` must be live, `set` point to `set_len` indices, `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_minorization(
    kernel: *const SglKernel,
    set: *const usize,
    set_len: usize,
    m: usize,
    out: *mut *mut SglCertificate,
) -> SglStatus {
    guard(|| {
        non_null!(kernel, set, out);
        certificate_result(
            doeblin::minorization(&(*kernel).0, read_slice(set, set_len), m),
            out,
        )
    })
}

/// One-step certificate on `set` together with `δ' = min_x P(x, set)`.
///
/// # Safety
/// As for [`sgl_minorization`].
#[no_mangle]
pub unsafe extern "C" fn sgl_doeblin_certificate(
    kernel: *const SglKernel,
    set: *const usize,
    set_len: usize,
    out: *mut *mut SglCertificate,
) -> SglStatus {
    guard(|| {
        non_null!(kernel, set, out);
        certificate_result(
            doeblin::doeblin_certificate(&(*kernel).0, read_slice(set, set_len)),
            out,
        )
    })
}

/// Two-step small set from densities against the reference weights `mu0[..n]`.
///
/// # Safety
/// `kernel` must be live, `mu0` point to `n` doubles, `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_small_set_search(
    kernel: *const SglKernel,
    mu0: *const f64,
    out: *mut *mut SglCertificate,
) -> SglStatus {
    guard(|| {
        non_null!(kernel, mu0, out);
        let k = &(*kernel).0;
        let found =
            doeblin::small_set_search(k, read_slice(mu0, k.n())).map(|o| o.map(|c| c.certificate));
        certificate_result(found, out)
    })
}

/// Parses a `key = value` certificate block.
///
/// # Safety
/// `text` must be nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_parse(
    text: *const c_char,
    out: *mut *mut SglCertificate,
) -> SglStatus {
    guard(|| {
        non_null!(text, out);
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match doeblin::parse_certificate(text) {
            Ok(c) => boxed(SglCertificate(c), out),
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_free(cert: *mut SglCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}

/// `δ`, or NaN for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_delta(cert: *const SglCertificate) -> f64 {
    cert.as_ref().map_or(f64::NAN, |c| c.0.delta)
}

/// `δ'`, or NaN when absent.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_delta_prime(cert: *const SglCertificate) -> f64 {
    cert.as_ref()
        .and_then(|c| c.0.delta_prime)
        .unwrap_or(f64::NAN)
}

/// Step count `m`, 0 for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_steps(cert: *const SglCertificate) -> usize {
    cert.as_ref().map_or(0, |c| c.0.m)
}

/// Copies `ν` into `out`.
///
/// # Safety
/// `cert` must be live and `out` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_nu(
    cert: *const SglCertificate,
    out: *mut f64,
    len: usize,
) -> SglStatus {
    guard(|| {
        non_null!(cert, out);
        write_out(&(*cert).0.nu, out, len)
    })
}

/// Exact elementwise validation of `cert` against `kernel`.
///
/// # Safety
/// Both handles must be live.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_verify(
    cert: *const SglCertificate,
    kernel: *const SglKernel,
) -> SglStatus {
    guard(|| {
        non_null!(cert, kernel);
        match (*cert).0.verify(&(*kernel).0) {
            Ok(()) => SglStatus::Ok,
            Err(e) => fail_with(e),
        }
    })
}

/// The certificate as a `key = value` block; free with [`sgl_string_free`].
/// Returns null for a null handle.
///
/// # Safety
/// `cert` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_certificate_format(cert: *const SglCertificate) -> *mut c_char {
    match cert.as_ref() {
        Some(c) => CString::new(doeblin::format_certificate(&c.0))
            .map(CString::into_raw)
            .unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SglContraction {
    /// `1 - δδ'`.
    pub factor: f64,
    /// Worst two-step ratio over Dirac pairs.
    pub worst_ratio: f64,
    pub lower_bound_slack: f64,
    pub holds: bool,
}

/// Two-step contraction check for a one-step certificate carrying `δ'`.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_contraction_check(
    kernel: *const SglKernel,
    cert: *const SglCertificate,
    out: *mut SglContraction,
) -> SglStatus {
    guard(|| {
        non_null!(kernel, cert, out);
        match doeblin::contraction_check(&(*kernel).0, &(*cert).0) {
            Ok(r) => {
                *out = SglContraction {
                    factor: r.factor,
                    worst_ratio: r.worst_ratio,
                    lower_bound_slack: r.lower_bound_slack,
                    holds: r.holds(),
                };
                SglStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SglOdeComparison {
    pub y: f64,
    pub literal_bound: f64,
    pub corrected_bound: f64,
    pub literal_holds: bool,
    pub corrected_holds: bool,
}

/// `y' = -c y^q + f` with constant forcing `f`, integrated to `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_ode_comparison(
    q: u32,
    c: f64,
    y0: f64,
    forcing: f64,
    t: f64,
    out: *mut SglOdeComparison,
) -> SglStatus {
    guard(|| {
        non_null!(out);
        let f = match StepForcing::new(&[(0.0, forcing)]) {
            Ok(f) => f,
            Err(e) => return fail_with(e),
        };
        match ode_comparison(q, c, y0, &f, t) {
            Ok(r) => {
                *out = SglOdeComparison {
                    y: r.y,
                    literal_bound: r.literal_bound,
                    corrected_bound: r.corrected_bound,
                    literal_holds: r.literal_holds,
                    corrected_holds: r.corrected_holds,
                };
                SglStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// The default model (`P(u) = u³ - u`, `h = 1/256`, degenerate spectrum)
/// with `n_modes` modes, horizon `t_final` and `seed`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_simulator_new_default(
    n_modes: usize,
    t_final: f64,
    seed: u64,
    out: *mut *mut SglSimulator,
) -> SglStatus {
    guard(|| {
        non_null!(out);
        let mut params = SimulationParams::default_model();
        params.n_modes = n_modes;
        params.spectrum = sgl_mixing::NoiseSpectrum::default_degenerate(n_modes);
        params.t_final = t_final;
        params.seed = seed;
        match Simulator::new(params) {
            Ok(s) => boxed(SglSimulator(s), out),
            Err(e) => fail_with(e),
        }
    })
}

/// Builds the model from the `[model]` section of a configuration text.
///
/// # Safety
/// `config` must be nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sgl_simulator_from_config(
    config: *const c_char,
    out: *mut *mut SglSimulator,
) -> SglStatus {
    guard(|| {
        non_null!(config, out);
        let text = match read_str(config) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match RunConfig::parse(text)
            .and_then(|c| c.model.params())
            .and_then(Simulator::new)
        {
            Ok(s) => boxed(SglSimulator(s), out),
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_simulator_free(sim: *mut SglSimulator) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Coefficients per state, `2N + 1`; 0 for a null handle.
///
/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgl_simulator_state_len(sim: *const SglSimulator) -> usize {
    sim.as_ref().map_or(0, |s| 2 * s.0.params().n_modes + 1)
}

/// Runs trajectory `trajectory` from `x` and writes the states at integer
/// times `0..=⌊T⌋` back to back into `out` (`(⌊T⌋ + 1) · (2N + 1)` doubles).
///
/// # Safety
/// `sim` must be live, `x` point to `2N + 1` doubles and `out` to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgl_simulator_run(
    sim: *const SglSimulator,
    x: *const f64,
    trajectory: u64,
    out: *mut f64,
    len: usize,
) -> SglStatus {
    guard(|| {
        non_null!(sim, x, out);
        let sim = &(*sim).0;
        let size = 2 * sim.params().n_modes + 1;
        let x = match SpectralField::from_coeffs(read_slice(x, size).to_vec()) {
            Ok(x) => x,
            Err(e) => return fail_with(e),
        };
        match sim.simulate(&x, trajectory) {
            Ok(traj) => {
                let flat: Vec<f64> = traj
                    .states
                    .iter()
                    .flat_map(|u| u.coeffs().iter().copied())
                    .collect();
                write_out(&flat, out, len)
            }
            Err(e) => fail_with(e),
        }
    })
}
