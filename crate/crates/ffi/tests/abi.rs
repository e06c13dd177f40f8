use std::ffi::{CStr, CString};
use std::ptr;

use bsm_ffi::*;

fn last_error() -> String {
    let p = bsm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn small_params() -> BsmDesignParams {
    BsmDesignParams { fmin_hz: 500.0, fmax_hz: 3000.0, fstep_hz: 500.0, num_directions: 60, ..bsm_design_params_default() }
}

#[test]
fn design_save_load_render() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(bsm_geometry_semicircle(6, 0.1, &mut geom), BsmStatus::Ok);
        assert_eq!(bsm_geometry_num_mics(geom), 6);
        let mut hrtf = ptr::null_mut();
        let src = CString::new("surrogate:0.0875").unwrap();
        assert_eq!(bsm_hrtf_open(src.as_ptr(), &mut hrtf), BsmStatus::Ok);
        let mut bank = ptr::null_mut();
        assert_eq!(bsm_design(geom, hrtf, &small_params(), &mut bank), BsmStatus::Ok);
        assert_eq!(bsm_filter_bank_num_freqs(bank), 6);
        assert_eq!(bsm_filter_bank_num_mics(bank), 6);
        let mut f = 0.0;
        assert_eq!(bsm_filter_bank_freq(bank, 2, &mut f), BsmStatus::Ok);
        assert_eq!(f, 1500.0);

        let dir = tempfile::tempdir().unwrap();
        let path = CString::new(dir.path().to_str().unwrap()).unwrap();
        assert_eq!(bsm_filter_bank_save(bank, path.as_ptr()), BsmStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(bsm_filter_bank_load(path.as_ptr(), &mut loaded), BsmStatus::Ok);
        let (mut re, mut im) = (vec![0.0; 6], vec![0.0; 6]);
        let (mut re2, mut im2) = (vec![0.0; 6], vec![0.0; 6]);
        assert_eq!(bsm_filter_bank_coefficients(bank, 1, BsmEar::Right, re.as_mut_ptr(), im.as_mut_ptr(), 6), BsmStatus::Ok);
        assert_eq!(bsm_filter_bank_coefficients(loaded, 1, BsmEar::Right, re2.as_mut_ptr(), im2.as_mut_ptr(), 6), BsmStatus::Ok);
        for m in 0..6 {
            assert_eq!(re[m] as f32 as f64, re2[m]);
            assert_eq!(im[m] as f32 as f64, im2[m]);
        }

        let mut renderer = ptr::null_mut();
        assert_eq!(bsm_renderer_new(bank, 256, 48000.0, &mut renderer), BsmStatus::Ok);
        assert_eq!(bsm_renderer_latency(renderer), 128);
        let frames = 1000;
        let input: Vec<f64> = (0..frames * 6).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let n = bsm_renderer_output_len(renderer, frames);
        assert_eq!(n, frames + 255);
        let (mut l, mut r) = (vec![0.0; n], vec![0.0; n]);
        assert_eq!(bsm_renderer_process(renderer, input.as_ptr(), frames, 6, 48000.0, l.as_mut_ptr(), r.as_mut_ptr(), n), BsmStatus::Ok);
        assert!(l.iter().any(|v| *v != 0.0) && r.iter().any(|v| *v != 0.0));
        assert_eq!(
            bsm_renderer_process(renderer, input.as_ptr(), frames, 6, 48000.0, l.as_mut_ptr(), r.as_mut_ptr(), n - 1),
            BsmStatus::Config
        );

        bsm_renderer_free(renderer);
        bsm_filter_bank_free(loaded);
        bsm_filter_bank_free(bank);
        bsm_hrtf_free(hrtf);
        bsm_geometry_free(geom);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut geom = ptr::null_mut();
        assert_eq!(bsm_geometry_semicircle(6, 0.1, ptr::null_mut()), BsmStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(bsm_geometry_semicircle(1, 0.1, &mut geom), BsmStatus::Config);
        assert!(geom.is_null());
        let missing = CString::new("/nonexistent/geometry.json").unwrap();
        assert_eq!(bsm_geometry_load(missing.as_ptr(), &mut geom), BsmStatus::Io);
        assert!(last_error().contains("nonexistent"));
        let bad = CString::new("surrogate:abc").unwrap();
        let mut hrtf = ptr::null_mut();
        assert_eq!(bsm_hrtf_open(bad.as_ptr(), &mut hrtf), BsmStatus::Config);
        let mut bank = ptr::null_mut();
        assert_eq!(bsm_design(ptr::null(), ptr::null(), &small_params(), &mut bank), BsmStatus::NullPointer);
        assert_eq!(bsm_filter_bank_num_freqs(ptr::null()), 0);
        bsm_filter_bank_free(ptr::null_mut());
    }
}

#[test]
fn binaural_measures() {
    let fs = 48000.0;
    let right: Vec<f64> = (0..4800).map(|i| ((i * 7919) % 211) as f64 / 211.0 - 0.5).collect();
    let mut left = vec![0.0; 10];
    left.extend_from_slice(&right[..right.len() - 10]);
    let (mut itd, mut ild) = (0.0, 0.0);
    unsafe {
        assert_eq!(bsm_itd(left.as_ptr(), right.as_ptr(), right.len(), fs, &mut itd), BsmStatus::Ok);
        let half: Vec<f64> = right.iter().map(|v| v * 0.5).collect();
        assert_eq!(bsm_ild(right.as_ptr(), half.as_ptr(), right.len(), fs, &mut ild), BsmStatus::Ok);
        let silent = vec![0.0; 100];
        assert_eq!(bsm_itd(silent.as_ptr(), silent.as_ptr(), 100, fs, &mut itd), BsmStatus::Numeric);
    }
    assert!((itd - 10.0 / fs).abs() < 1e-12 || itd == 0.0);
    assert!((ild - 20.0 * 2f64.log10()).abs() < 1e-9);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bsm_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
