use std::ffi::{CStr, CString};
use std::ptr;

use dapc_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(dapc_last_error_message()) }.to_string_lossy().into_owned()
}

struct Fixture {
    ch: *mut DapcChannel,
    red: *mut DapcReduction,
    cb: *mut DapcCodebook,
}

impl Fixture {
    fn new(n: usize) -> Self {
        let mut f = Fixture {
            ch: ptr::null_mut(),
            red: ptr::null_mut(),
            cb: ptr::null_mut(),
        };
        unsafe {
            assert_eq!(dapc_channel_identity(n, 1.0, 1.0, &mut f.ch), DapcStatus::Ok);
            assert_eq!(dapc_reduction_new(f.ch, &mut f.red), DapcStatus::Ok);
            let (mut eps, mut r0) = (0.0, 0.0);
            assert_eq!(dapc_packing_radius(1.0, 0.4, 1.0, 0.0, n, &mut eps, &mut r0), DapcStatus::Ok);
            assert_eq!(dapc_codebook_greedy(f.ch, f.red, 3.0, 3.0, r0, 400, 5, &mut f.cb), DapcStatus::Ok);
        }
        f
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        unsafe {
            dapc_codebook_free(self.cb);
            dapc_reduction_free(self.red);
            dapc_channel_free(self.ch);
        }
    }
}

const CONFIG: DapcDecoderConfig = DapcDecoderConfig {
    a: 1.0,
    b: 0.4,
    kappa: 1.0,
    l: 0.0,
};

#[test]
fn bounds_and_radius() {
    let (mut lo, mut hi) = (0.0, 0.0);
    unsafe {
        assert_eq!(dapc_capacity_bounds(1.0, 0.1, &mut lo, &mut hi), DapcStatus::Ok);
        assert!((lo - 0.15).abs() < 1e-12 && (hi - 1.6).abs() < 1e-12);
        assert_eq!(dapc_capacity_bounds(1.5, 0.0, &mut lo, &mut hi), DapcStatus::InvalidArgument);
        assert!(last_error().contains("kappa"));
        let (mut eps, mut r0) = (0.0, 0.0);
        assert_eq!(dapc_packing_radius(1.0, 0.0, 1.0, 0.0, 4, &mut eps, &mut r0), DapcStatus::Ok);
        assert!((eps - 0.5).abs() < 1e-15 && (r0 - 2f64.sqrt()).abs() < 1e-15);
        assert!(last_error().is_empty());
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(dapc_channel_identity(4, 1.0, 1.0, ptr::null_mut()), DapcStatus::NullPointer);
        assert!(last_error().contains("out_channel"));
        let mut t = 0;
        assert_eq!(dapc_reduction_rank(ptr::null(), &mut t), DapcStatus::NullPointer);
        dapc_channel_free(ptr::null_mut());
        dapc_string_free(ptr::null_mut());
    }
}

#[test]
fn channel_round_trip_and_sampling() {
    let f = Fixture::new(4);
    unsafe {
        let (mut k, mut n) = (0, 0);
        assert_eq!(dapc_channel_dims(f.ch, &mut k, &mut n), DapcStatus::Ok);
        assert_eq!((k, n), (4, 4));
        let mut json = ptr::null_mut();
        assert_eq!(dapc_channel_to_json(f.ch, &mut json), DapcStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(dapc_channel_from_json(json, &mut copy), DapcStatus::Ok);
        dapc_string_free(json);
        dapc_channel_free(copy);

        let bad = CString::new("{not json").unwrap();
        assert_eq!(dapc_channel_from_json(bad.as_ptr(), &mut copy), DapcStatus::Parse);

        let x = [1.0, 0.0, 2.0, 0.5];
        let (mut y1, mut y2) = ([0u64; 4], [0u64; 4]);
        assert_eq!(dapc_channel_sample(f.ch, x.as_ptr(), 4, 9, y1.as_mut_ptr(), 4), DapcStatus::Ok);
        assert_eq!(dapc_channel_sample(f.ch, x.as_ptr(), 4, 9, y2.as_mut_ptr(), 4), DapcStatus::Ok);
        assert_eq!(y1, y2);
        assert_eq!(dapc_channel_sample(f.ch, x.as_ptr(), 4, 9, y1.as_mut_ptr(), 3), DapcStatus::DimensionMismatch);
        assert_eq!(dapc_channel_sample(f.ch, x.as_ptr(), 3, 9, y1.as_mut_ptr(), 4), DapcStatus::DimensionMismatch);
    }
}

#[test]
fn codebook_identify_and_errors() {
    let f = Fixture::new(8);
    unsafe {
        let mut m = 0;
        assert_eq!(dapc_codebook_size(f.cb, &mut m), DapcStatus::Ok);
        assert!(m >= 2);
        let mut d = 0.0;
        assert_eq!(dapc_codebook_min_distance(f.cb, &mut d), DapcStatus::Ok);
        assert!(d > 0.0);

        let mut json = ptr::null_mut();
        assert_eq!(dapc_codebook_to_json(f.cb, &mut json), DapcStatus::Ok);
        let mut copy = ptr::null_mut();
        assert_eq!(dapc_codebook_from_json(json, f.ch, f.red, &mut copy), DapcStatus::Ok);
        let mut m2 = 0;
        dapc_codebook_size(copy, &mut m2);
        assert_eq!(m, m2);
        dapc_codebook_free(copy);
        dapc_string_free(json);

        let y = [1u64; 8];
        let mut accept = false;
        assert_eq!(dapc_identify(f.cb, f.ch, f.red, &CONFIG, y.as_ptr(), 8, 0, &mut accept), DapcStatus::Ok);
        assert_eq!(dapc_identify(f.cb, f.ch, f.red, &CONFIG, y.as_ptr(), 8, m, &mut accept), DapcStatus::InvalidArgument);

        let mut out = ptr::null_mut();
        assert_eq!(dapc_estimate_errors(f.cb, f.ch, f.red, &CONFIG, 200, 1, 20, &mut out), DapcStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert!(v["type1_max"].as_f64().unwrap() <= 1.0);
        dapc_string_free(out);
    }
}

#[test]
fn single_codeword_has_no_min_distance() {
    unsafe {
        let mut ch = ptr::null_mut();
        let mut red = ptr::null_mut();
        let mut cb = ptr::null_mut();
        dapc_channel_identity(2, 1.0, 1.0, &mut ch);
        dapc_reduction_new(ch, &mut red);
        assert_eq!(dapc_codebook_greedy(ch, red, 1.0, 1.0, 1.1, 50, 1, &mut cb), DapcStatus::Ok);
        let mut d = 0.0;
        assert_eq!(dapc_codebook_min_distance(cb, &mut d), DapcStatus::TooFewCodewords);
        dapc_codebook_free(cb);
        dapc_reduction_free(red);
        dapc_channel_free(ch);
    }
}

#[test]
fn version_is_set() {
    let v = unsafe { CStr::from_ptr(dapc_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
