//! C ABI over the `bsm` library.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released with the matching `*_free`. Every fallible function returns a
//! [`BsmStatus`]; the message of the most recent failure on the calling
//! thread is available from [`bsm_last_error`]. Panics never cross the
//! boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use bsm::array::{semi_circular_preset, ArrayGeometry};
use bsm::design::{design_filter_bank, frequency_grid, load_filter_bank, save_filter_bank, DesignSpec, FilterBank};
use bsm::hrtf::{resolve_hrtf_source, HrtfSet};
use bsm::metrics::{estimate_ild, estimate_itd, ITD_LOWPASS_HZ};
use bsm::render::Renderer;
use bsm::sh::spiral_sampling;
use bsm::signal::{BinauralSignal, MultichannelSignal};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsmStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid argument or configuration.
    Config = 2,
    /// Numerical failure (singular system, silent input, ...).
    Numeric = 3,
    /// File or format error.
    Io = 4,
    /// Internal panic; the handle involved should be discarded.
    Panic = 5,
}

/// Left or right ear.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsmEar {
    Left = 0,
    Right = 1,
}

/// Microphone array geometry.
pub struct BsmGeometry(ArrayGeometry);
/// Two-ear HRTF set.
pub struct BsmHrtf(HrtfSet);
/// Per-frequency filters of both ears.
pub struct BsmFilterBank(FilterBank);
/// FIR renderer built from a filter bank.
pub struct BsmRenderer(Renderer);

/// Design parameters. Obtain defaults from [`bsm_design_params_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsmDesignParams {
    pub snr_db: f64,
    /// MagLS at and above this frequency; `INFINITY` disables MagLS.
    pub cutoff_hz: f64,
    /// Head yaw compensated at playback, degrees.
    pub head_yaw_deg: f64,
    /// Array yaw compensated at recording, degrees.
    pub array_yaw_deg: f64,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub fstep_hz: f64,
    /// Number of spiral design directions.
    pub num_directions: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &bsm::Error) -> BsmStatus {
    match e.exit_code() {
        3 => BsmStatus::Numeric,
        4 => BsmStatus::Io,
        _ => BsmStatus::Config,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FfiError>) -> BsmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsmStatus::Ok,
        Ok(Err(FfiError::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BsmStatus::NullPointer
        }
        Ok(Err(FfiError::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            BsmStatus::Panic
        }
    }
}

enum FfiError {
    Null(&'static str),
    Lib(bsm::Error),
}

impl From<bsm::Error> for FfiError {
    fn from(e: bsm::Error) -> Self {
        FfiError::Lib(e)
    }
}

fn config(msg: impl Into<String>) -> FfiError {
    FfiError::Lib(bsm::Error::InvalidArgument(msg.into()))
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    p.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, FfiError> {
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| config(format!("{what} is not valid UTF-8")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], FfiError> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), FfiError> {
    if out.is_null() {
        return Err(FfiError::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn bsm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bsm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Semicircular rigid-sphere array of `mics` microphones at `radius` metres.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bsm_geometry_semicircle(mics: usize, radius: f64, out: *mut *mut BsmGeometry) -> BsmStatus {
    guard(|| put(out, BsmGeometry(semi_circular_preset(mics, radius)?)))
}

/// Loads a geometry JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_geometry_load(path: *const c_char, out: *mut *mut BsmGeometry) -> BsmStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        put(out, BsmGeometry(ArrayGeometry::load(Path::new(path))?))
    })
}

/// Number of microphones, or 0 for a null handle.
///
/// # Safety
/// `geom` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsm_geometry_num_mics(geom: *const BsmGeometry) -> usize {
    geom.as_ref().map_or(0, |g| g.0.num_mics())
}

/// # Safety
/// `geom` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bsm_geometry_free(geom: *mut BsmGeometry) {
    if !geom.is_null() {
        drop(Box::from_raw(geom));
    }
}

/// Opens an HRTF source: `surrogate`, `surrogate:<radius_m>` or the
/// directory of a stored set.
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_hrtf_open(source: *const c_char, out: *mut *mut BsmHrtf) -> BsmStatus {
    guard(|| {
        let source = c_str(source, "source")?;
        let set = resolve_hrtf_source(source, &spiral_sampling(240), &frequency_grid(75.0, 10000.0, 75.0))?;
        put(out, BsmHrtf(set))
    })
}

/// # Safety
/// `hrtf` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bsm_hrtf_free(hrtf: *mut BsmHrtf) {
    if !hrtf.is_null() {
        drop(Box::from_raw(hrtf));
    }
}

/// Default design parameters: 20 dB SNR, MagLS from 1.5 kHz, no rotation,
/// 75 to 10000 Hz in 75 Hz steps, 240 spiral directions.
#[no_mangle]
pub extern "C" fn bsm_design_params_default() -> BsmDesignParams {
    BsmDesignParams {
        snr_db: 20.0,
        cutoff_hz: 1500.0,
        head_yaw_deg: 0.0,
        array_yaw_deg: 0.0,
        fmin_hz: 75.0,
        fmax_hz: 10000.0,
        fstep_hz: 75.0,
        num_directions: 240,
    }
}

/// Designs a filter bank.
///
/// # Safety
/// `geom`, `hrtf` and `params` must be live pointers and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_design(
    geom: *const BsmGeometry,
    hrtf: *const BsmHrtf,
    params: *const BsmDesignParams,
    out: *mut *mut BsmFilterBank,
) -> BsmStatus {
    guard(|| {
        let geom = deref(geom, "geom")?;
        let hrtf = deref(hrtf, "hrtf")?;
        let p = deref(params, "params")?;
        if !(p.fstep_hz > 0.0) || !(p.fmax_hz >= p.fmin_hz) || !(p.fmin_hz >= 0.0) {
            return Err(config("frequency grid needs 0 <= fmin <= fmax and fstep > 0"));
        }
        if p.num_directions == 0 {
            return Err(config("num_directions must be positive"));
        }
        let mut spec = DesignSpec::new(
            geom.0.clone(),
            spiral_sampling(p.num_directions),
            frequency_grid(p.fmin_hz, p.fmax_hz, p.fstep_hz),
        );
        spec.snr_db = p.snr_db;
        spec.cutoff_hz = p.cutoff_hz;
        spec.rotation = (0.0, p.head_yaw_deg.to_radians());
        spec.array_rotation = p.array_yaw_deg.to_radians();
        put(out, BsmFilterBank(design_filter_bank(&spec, &hrtf.0)?))
    })
}

/// Loads a bank written by [`bsm_filter_bank_save`] or the command-line tool.
///
/// # Safety
/// `dir` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_load(dir: *const c_char, out: *mut *mut BsmFilterBank) -> BsmStatus {
    guard(|| {
        let dir = c_str(dir, "dir")?;
        put(out, BsmFilterBank(load_filter_bank(Path::new(dir))?))
    })
}

/// # Safety
/// `bank` must be a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_save(bank: *const BsmFilterBank, dir: *const c_char) -> BsmStatus {
    guard(|| {
        let bank = deref(bank, "bank")?;
        let dir = c_str(dir, "dir")?;
        save_filter_bank(&bank.0, Path::new(dir))?;
        Ok(())
    })
}

/// Number of design frequencies, or 0 for a null handle.
///
/// # Safety
/// `bank` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_num_freqs(bank: *const BsmFilterBank) -> usize {
    bank.as_ref().map_or(0, |b| b.0.len())
}

/// Number of microphones, or 0 for a null handle.
///
/// # Safety
/// `bank` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_num_mics(bank: *const BsmFilterBank) -> usize {
    bank.as_ref().map_or(0, |b| b.0.num_mics())
}

/// Frequency in Hz of bin `index`.
///
/// # Safety
/// `bank` must be a live handle and `out_hz` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_freq(bank: *const BsmFilterBank, index: usize, out_hz: *mut f64) -> BsmStatus {
    guard(|| {
        let bank = deref(bank, "bank")?;
        let f = *bank.0.freqs.get(index).ok_or_else(|| config(format!("bin {index} out of range")))?;
        *out_hz.as_mut().ok_or(FfiError::Null("out_hz"))? = f;
        Ok(())
    })
}

/// Copies the filter of one ear at bin `index` into `re` and `im`, each of
/// length `num_mics`.
///
/// # Safety
/// `bank` must be a live handle; `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_coefficients(
    bank: *const BsmFilterBank,
    index: usize,
    ear: BsmEar,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> BsmStatus {
    guard(|| {
        let bank = deref(bank, "bank")?;
        let side = match ear {
            BsmEar::Left => &bank.0.left,
            BsmEar::Right => &bank.0.right,
        };
        let c = side.get(index).ok_or_else(|| config(format!("bin {index} out of range")))?;
        if len != c.len() {
            return Err(config(format!("buffer length {len}, bank has {} microphones", c.len())));
        }
        if re.is_null() || im.is_null() {
            return Err(FfiError::Null("re/im"));
        }
        for (m, v) in c.iter().enumerate() {
            *re.add(m) = v.re;
            *im.add(m) = v.im;
        }
        Ok(())
    })
}

/// # Safety
/// `bank` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bsm_filter_bank_free(bank: *mut BsmFilterBank) {
    if !bank.is_null() {
        drop(Box::from_raw(bank));
    }
}

/// FIR renderer with filters of length `nfft` (a power of two) at
/// `sample_rate`.
///
/// # Safety
/// `bank` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_renderer_new(
    bank: *const BsmFilterBank,
    nfft: usize,
    sample_rate: f64,
    out: *mut *mut BsmRenderer,
) -> BsmStatus {
    guard(|| {
        let bank = deref(bank, "bank")?;
        put(out, BsmRenderer(Renderer::from_bank(&bank.0, nfft, sample_rate)?))
    })
}

/// Output length for an input of `frames` samples, or 0 for a null handle.
///
/// # Safety
/// `renderer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsm_renderer_output_len(renderer: *const BsmRenderer, frames: usize) -> usize {
    renderer.as_ref().map_or(0, |r| r.0.output_len(frames))
}

/// Delay in samples introduced by the filters, or 0 for a null handle.
///
/// # Safety
/// `renderer` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bsm_renderer_latency(renderer: *const BsmRenderer) -> usize {
    renderer.as_ref().map_or(0, |r| r.0.latency())
}

/// Renders `frames` samples of interleaved `num_mics`-channel input into
/// `left` and `right`, each of length [`bsm_renderer_output_len`].
///
/// # Safety
/// `input` must hold `frames * num_mics` doubles; `left` and `right` must
/// hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn bsm_renderer_process(
    renderer: *const BsmRenderer,
    input: *const f64,
    frames: usize,
    num_mics: usize,
    sample_rate: f64,
    left: *mut f64,
    right: *mut f64,
    out_len: usize,
) -> BsmStatus {
    guard(|| {
        let r = deref(renderer, "renderer")?;
        if num_mics != r.0.num_mics() {
            return Err(FfiError::Lib(bsm::Error::ChannelMismatch { expected: r.0.num_mics(), found: num_mics }));
        }
        let data = slice(input, frames * num_mics, "input")?;
        let channels = (0..num_mics).map(|m| data.iter().skip(m).step_by(num_mics).copied().collect()).collect();
        let y = r.0.render(&MultichannelSignal::new(sample_rate, channels)?)?;
        if out_len != y.len() {
            return Err(config(format!("output buffers hold {out_len} samples, need {}", y.len())));
        }
        if left.is_null() || right.is_null() {
            return Err(FfiError::Null("left/right"));
        }
        ptr::copy_nonoverlapping(y.left.as_ptr(), left, out_len);
        ptr::copy_nonoverlapping(y.right.as_ptr(), right, out_len);
        Ok(())
    })
}

/// # Safety
/// `renderer` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bsm_renderer_free(renderer: *mut BsmRenderer) {
    if !renderer.is_null() {
        drop(Box::from_raw(renderer));
    }
}

unsafe fn binaural(left: *const f64, right: *const f64, len: usize, sample_rate: f64) -> Result<BinauralSignal, FfiError> {
    Ok(BinauralSignal {
        sample_rate,
        left: slice(left, len, "left")?.to_vec(),
        right: slice(right, len, "right")?.to_vec(),
    })
}

/// Interaural time difference in seconds (positive when the left channel
/// lags), from the cross-correlation peak after a 1.5 kHz low-pass.
///
/// # Safety
/// `left` and `right` must hold `len` doubles; `out_seconds` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_itd(
    left: *const f64,
    right: *const f64,
    len: usize,
    sample_rate: f64,
    out_seconds: *mut f64,
) -> BsmStatus {
    guard(|| {
        if !(sample_rate > 0.0) {
            return Err(config("sample rate must be positive"));
        }
        let p = binaural(left, right, len, sample_rate)?;
        let itd = estimate_itd(&p, ITD_LOWPASS_HZ)?;
        *out_seconds.as_mut().ok_or(FfiError::Null("out_seconds"))? = itd;
        Ok(())
    })
}

/// Interaural level difference in dB averaged over 29 ERB bands.
///
/// # Safety
/// `left` and `right` must hold `len` doubles; `out_db` writable.
#[no_mangle]
pub unsafe extern "C" fn bsm_ild(
    left: *const f64,
    right: *const f64,
    len: usize,
    sample_rate: f64,
    out_db: *mut f64,
) -> BsmStatus {
    guard(|| {
        if !(sample_rate > 0.0) {
            return Err(config("sample rate must be positive"));
        }
        let p = binaural(left, right, len, sample_rate)?;
        *out_db.as_mut().ok_or(FfiError::Null("out_db"))? = estimate_ild(&p).mean_db;
        Ok(())
    })
}
