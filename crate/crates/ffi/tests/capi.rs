use std::ffi::{CStr, CString};
use std::ptr;

use sgl_mixing_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { sgl_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_str()
        .unwrap()
        .to_owned()
}

fn kernel(n: usize, entries: &[f64]) -> *mut SglKernel {
    let mut k = ptr::null_mut();
    assert_eq!(
        unsafe { sgl_kernel_new(n, entries.as_ptr(), &mut k) },
        SglStatus::Ok
    );
    k
}

const TWO_STATE: [f64; 4] = [0.7, 0.3, 0.4, 0.6];

#[test]
fn two_state_certificate_and_contraction() {
    let k = kernel(2, &TWO_STATE);
    let set = [0usize, 1];
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            sgl_doeblin_certificate(k, set.as_ptr(), 2, &mut c),
            SglStatus::Ok
        );
        // Column minima 0.4 and 0.3.
        assert!((sgl_certificate_delta(c) - 0.7).abs() < 1e-15);
        assert!((sgl_certificate_delta_prime(c) - 1.0).abs() < 1e-15);
        assert_eq!(sgl_certificate_steps(c), 1);
        let mut nu = [0.0; 2];
        assert_eq!(sgl_certificate_nu(c, nu.as_mut_ptr(), 2), SglStatus::Ok);
        assert!((nu[0] - 4.0 / 7.0).abs() < 1e-15 && (nu[1] - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(sgl_certificate_verify(c, k), SglStatus::Ok);

        let mut r = SglContraction::default();
        assert_eq!(sgl_contraction_check(k, c, &mut r), SglStatus::Ok);
        assert!(r.holds);
        assert!((r.factor - 0.3).abs() < 1e-15);

        let mut pi = [0.0; 2];
        assert_eq!(sgl_invariant_measure(k, pi.as_mut_ptr(), 2), SglStatus::Ok);
        assert!((pi[0] - 4.0 / 7.0).abs() < 1e-12);

        sgl_certificate_free(c);
        sgl_kernel_free(k);
    }
}

#[test]
fn certificate_text_round_trip() {
    let k = kernel(2, &TWO_STATE);
    let set = [0usize];
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(
            sgl_minorization(k, set.as_ptr(), 1, 2, &mut c),
            SglStatus::Ok
        );
        let text = sgl_certificate_format(c);
        assert!(!text.is_null());
        let mut back = ptr::null_mut();
        assert_eq!(sgl_certificate_parse(text, &mut back), SglStatus::Ok);
        assert_eq!(sgl_certificate_delta(back), sgl_certificate_delta(c));
        assert_eq!(sgl_certificate_steps(back), 2);
        assert_eq!(sgl_certificate_verify(back, k), SglStatus::Ok);
        sgl_string_free(text);
        sgl_certificate_free(back);
        sgl_certificate_free(c);
        sgl_kernel_free(k);
    }
}

#[test]
fn inflated_certificate_is_rejected() {
    let k = kernel(2, &TWO_STATE);
    let text = CString::new("K = 0, 1\nm = 1\ndelta = 0.8\nnu = 0.5, 0.5\n").unwrap();
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(sgl_certificate_parse(text.as_ptr(), &mut c), SglStatus::Ok);
        assert_ne!(sgl_certificate_verify(c, k), SglStatus::Ok);
        sgl_certificate_free(c);
        sgl_kernel_free(k);
    }
}

#[test]
fn kernel_parse_errors_name_the_line() {
    let text = CString::new("2\n0.5 0.5\n0.5 x\n").unwrap();
    let mut k = ptr::null_mut();
    let status = unsafe { sgl_kernel_parse(text.as_ptr(), &mut k) };
    assert_eq!(status, SglStatus::ParseError);
    assert!(k.is_null());
    assert!(last_error().contains('3'), "{}", last_error());
}

#[test]
fn invalid_inputs_report_status() {
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(
            sgl_kernel_new(2, ptr::null(), &mut k),
            SglStatus::NullPointer
        );
        assert!(last_error().contains("entries"));
        assert_eq!(
            sgl_kernel_new(2, [0.5, 0.6, 0.5, 0.5].as_ptr(), &mut k),
            SglStatus::InvalidArgument
        );
        let k = kernel(2, &[1.0, 0.0, 0.0, 1.0]);
        let mut c = ptr::null_mut();
        let set = [0usize, 1];
        assert_eq!(
            sgl_minorization(k, set.as_ptr(), 2, 1, &mut c),
            SglStatus::NotFound
        );
        let mut pi = [0.0; 2];
        assert_eq!(
            sgl_invariant_measure(k, pi.as_mut_ptr(), 2),
            SglStatus::NonUniqueStationary
        );
        let mut small = [0.0; 1];
        let k2 = kernel(2, &TWO_STATE);
        assert_eq!(
            sgl_invariant_measure(k2, small.as_mut_ptr(), 1),
            SglStatus::BufferTooSmall
        );
        sgl_kernel_free(k);
        sgl_kernel_free(k2);
        sgl_kernel_free(ptr::null_mut());
    }
}

#[test]
fn small_set_search_verifies() {
    let k = kernel(3, &[0.5, 0.25, 0.25, 0.2, 0.6, 0.2, 0.3, 0.3, 0.4]);
    let mu0 = [1.0 / 3.0; 3];
    let mut c = ptr::null_mut();
    unsafe {
        assert_eq!(sgl_small_set_search(k, mu0.as_ptr(), &mut c), SglStatus::Ok);
        assert_eq!(sgl_certificate_steps(c), 2);
        assert!(sgl_certificate_delta(c) > 0.0);
        assert_eq!(sgl_certificate_verify(c, k), SglStatus::Ok);
        sgl_certificate_free(c);
        sgl_kernel_free(k);
    }
}

#[test]
fn ode_comparison_default_witness() {
    let mut r = SglOdeComparison::default();
    let status = unsafe { sgl_ode_comparison(3, 1.0, 10.0, 0.0, 0.5, &mut r) };
    assert_eq!(status, SglStatus::Ok);
    assert!(r.corrected_holds);
    assert!(!r.literal_holds);
    // Exact solution 1/sqrt(1/y0² + 2t).
    assert!((r.y - 1.0 / (0.01f64 + 1.0).sqrt()).abs() < 1e-8);
}

#[test]
fn simulator_is_deterministic() {
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(sgl_simulator_new_default(8, 2.0, 7, &mut s), SglStatus::Ok);
        let len = sgl_simulator_state_len(s);
        assert_eq!(len, 17);
        let x = vec![0.0; len];
        let mut a = vec![0.0; 3 * len];
        let mut b = vec![0.0; 3 * len];
        assert_eq!(
            sgl_simulator_run(s, x.as_ptr(), 4, a.as_mut_ptr(), a.len()),
            SglStatus::Ok
        );
        assert_eq!(
            sgl_simulator_run(s, x.as_ptr(), 4, b.as_mut_ptr(), b.len()),
            SglStatus::Ok
        );
        assert_eq!(a, b);
        assert!(a[..len].iter().all(|&v| v == 0.0));
        assert!(a[len..].iter().any(|&v| v != 0.0));
        assert_eq!(
            sgl_simulator_run(s, x.as_ptr(), 4, a.as_mut_ptr(), len),
            SglStatus::BufferTooSmall
        );
        sgl_simulator_free(s);
    }
}

#[test]
fn simulator_from_config_reports_violations() {
    let ok = CString::new("[model]\nn_modes = 4\nt_final = 1\n").unwrap();
    let bad = CString::new("[model]\nbeta = 0.9\n").unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            sgl_simulator_from_config(ok.as_ptr(), &mut s),
            SglStatus::Ok
        );
        assert_eq!(sgl_simulator_state_len(s), 9);
        sgl_simulator_free(s);
        let mut t = ptr::null_mut();
        let status = sgl_simulator_from_config(bad.as_ptr(), &mut t);
        assert_eq!(status, SglStatus::AssumptionViolation);
        assert!(last_error().contains("beta"), "{}", last_error());
        assert!(t.is_null());
    }
}
