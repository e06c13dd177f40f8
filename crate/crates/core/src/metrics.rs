//! Objective and perceptual error measures: normalized errors, effective
//! SH order, interaural time and level differences, and CSV curves.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::dsp::RealFft;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::linalg::{adjoint_mul, norm_sqr, CMatrix, CVector};
use crate::sh::ShVector;
use crate::signal::BinauralSignal;

/// Reported in place of `−∞ dB`.
pub const DB_FLOOR: f64 = -200.0;
/// Guard for level ratios involving a silent channel.
pub const ILD_GUARD_DB: f64 = 120.0;
/// Peak level below which a channel counts as silent (−120 dBFS).
pub const SILENCE: f64 = 1e-6;
pub const ITD_LOWPASS_HZ: f64 = 1500.0;
pub const ITD_MAX_LAG_S: f64 = 1e-3;
pub const ILD_BANDS: usize = 29;
pub const ILD_RANGE_HZ: (f64, f64) = (50.0, 6000.0);

fn to_db(ratio: f64) -> f64 {
    if ratio <= 0.0 {
        DB_FLOOR
    } else {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    }
}

fn check_dims(v: &CMatrix, c: &CVector, h: &CVector) -> Result<()> {
    if v.nrows() != c.len() || v.ncols() != h.len() {
        return Err(Error::InvalidArgument(format!(
            "steering matrix {}×{} does not match filter {} and HRTF {}",
            v.nrows(),
            v.ncols(),
            c.len(),
            h.len()
        )));
    }
    Ok(())
}

/// Normalized error `(σ_s²‖V^H c − h*‖² + σ_n²‖c‖²) / (σ_s²‖h‖²)` in dB.
pub fn nmse_with_variances(v: &CMatrix, c: &CVector, h: &CVector, signal_var: f64, noise_var: f64) -> Result<f64> {
    check_dims(v, c, h)?;
    let h_energy = norm_sqr(h.iter().map(|x| x.norm_sqr()));
    if h_energy == 0.0 {
        return Err(Error::ZeroHrtfNorm);
    }
    let y = adjoint_mul(v, c);
    let fit = norm_sqr(y.iter().zip(h.iter()).map(|(a, b)| (a - b.conj()).norm_sqr()));
    let noise = norm_sqr(c.iter().map(|x| x.norm_sqr()));
    Ok(to_db((signal_var * fit + noise_var * noise) / (signal_var * h_energy)))
}

/// Magnitude-only counterpart of [`nmse_with_variances`].
pub fn magnitude_nmse_with_variances(v: &CMatrix, c: &CVector, h: &CVector, signal_var: f64, noise_var: f64) -> Result<f64> {
    check_dims(v, c, h)?;
    let h_energy = norm_sqr(h.iter().map(|x| x.norm_sqr()));
    if h_energy == 0.0 {
        return Err(Error::ZeroHrtfNorm);
    }
    let y = adjoint_mul(v, c);
    let fit = norm_sqr(y.iter().zip(h.iter()).map(|(a, b)| {
        let d = a.norm() - b.norm();
        d * d
    }));
    let noise = norm_sqr(c.iter().map(|x| x.norm_sqr()));
    Ok(to_db((signal_var * fit + noise_var * noise) / (signal_var * h_energy)))
}

/// Normalized error with unit signal variance and noise variance set by
/// `snr_db`.
pub fn nmse(v: &CMatrix, c: &CVector, h: &CVector, snr_db: f64) -> Result<f64> {
    nmse_with_variances(v, c, h, 1.0, 10f64.powf(-snr_db / 10.0))
}

pub fn magnitude_nmse(v: &CMatrix, c: &CVector, h: &CVector, snr_db: f64) -> Result<f64> {
    magnitude_nmse_with_variances(v, c, h, 1.0, 10f64.powf(-snr_db / 10.0))
}

/// Smallest order whose normalized cumulative energy is closest to
/// `percent / 100`.
pub fn effective_sh_order(coeffs: &ShVector, percent: f64) -> Result<usize> {
    if !(percent > 0.0 && percent <= 100.0) {
        return Err(Error::InvalidArgument(format!("percentage {percent} outside (0, 100]")));
    }
    let order = coeffs.order();
    let mut cumulative = Vec::with_capacity(order + 1);
    let mut acc = 0.0;
    for n in 0..=order {
        acc += coeffs.coeffs()[n * n..(n + 1) * (n + 1)].iter().map(|x| x.norm_sqr()).sum::<f64>();
        cumulative.push(acc);
    }
    let total = cumulative.iter().cloned().fold(0.0, f64::max);
    if total == 0.0 {
        return Err(Error::ZeroCoefficients);
    }
    let target = percent / 100.0;
    let mut best = (f64::INFINITY, 0);
    for (n, e) in cumulative.iter().enumerate() {
        let d = (e / total - target).abs();
        if d < best.0 {
            best = (d, n);
        }
    }
    Ok(best.1)
}

/// Second-order section `b0 + b1 z⁻¹ + b2 z⁻²` over `1 + a1 z⁻¹ + a2 z⁻²`.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    fn run(&self, x: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let y = self.b[0] * *v + z1;
            z1 = self.b[1] * *v - self.a[0] * y + z2;
            z2 = self.b[2] * *v - self.a[1] * y;
            *v = y;
        }
    }
}

/// Digital Butterworth low-pass of even `order` by the bilinear transform.
pub fn butterworth_lowpass(order: usize, cutoff_hz: f64, sample_rate: f64) -> Vec<Biquad> {
    assert!(order % 2 == 0 && order > 0, "even order required");
    let k = 2.0 * sample_rate;
    let wc = k * (PI * cutoff_hz / sample_rate).tan();
    (0..order / 2)
        .map(|i| {
            // Analog pole pair at angle π(2i + N + 1) / 2N.
            let angle = PI * (2 * i + order + 1) as f64 / (2 * order) as f64;
            let alpha = -2.0 * angle.cos() * wc;
            let w2 = wc * wc;
            let a0 = k * k + alpha * k + w2;
            Biquad {
                b: [w2 / a0, 2.0 * w2 / a0, w2 / a0],
                a: [(2.0 * w2 - 2.0 * k * k) / a0, (k * k - alpha * k + w2) / a0],
            }
        })
        .collect()
}

/// Forward then backward filtering through every section (zero phase).
pub fn filtfilt(sections: &[Biquad], x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    for s in sections {
        s.run(&mut y);
    }
    y.reverse();
    for s in sections {
        s.run(&mut y);
    }
    y.reverse();
    y
}

fn is_silent(x: &[f64]) -> bool {
    x.iter().all(|v| v.abs() < SILENCE)
}

/// Lag of the interaural cross-correlation peak, in seconds. Positive when
/// the left channel lags the right one.
pub fn estimate_itd(p: &BinauralSignal, lpf_cutoff: f64) -> Result<f64> {
    if is_silent(&p.left) && is_silent(&p.right) {
        return Err(Error::SilentInput);
    }
    let sections = butterworth_lowpass(8, lpf_cutoff, p.sample_rate);
    let l = filtfilt(&sections, &p.left);
    let r = filtfilt(&sections, &p.right);
    let max_lag = (ITD_MAX_LAG_S * p.sample_rate).round() as isize;
    let n = l.len().min(r.len()) as isize;
    let mut best = (f64::NEG_INFINITY, 0isize);
    for tau in -max_lag..=max_lag {
        // Σ_t l(t + τ) r(t)
        let lo = 0.max(-tau);
        let hi = n.min(n - tau);
        let mut acc = 0.0;
        for t in lo..hi {
            acc += l[(t + tau) as usize] * r[t as usize];
        }
        let better = acc > best.0 || (acc == best.0 && tau.abs() < best.1.abs());
        if better {
            best = (acc, tau);
        }
    }
    Ok(best.1 as f64 / p.sample_rate)
}

pub fn itd_error(p: &BinauralSignal, reference: &BinauralSignal) -> Result<f64> {
    Ok((estimate_itd(p, ITD_LOWPASS_HZ)? - estimate_itd(reference, ITD_LOWPASS_HZ)?).abs())
}

/// ERB-rate scale (Glasberg and Moore).
pub fn erb_rate(f: f64) -> f64 {
    21.4 * (4.37 * f / 1000.0 + 1.0).log10()
}

pub fn erb_rate_inverse(e: f64) -> f64 {
    (10f64.powf(e / 21.4) - 1.0) * 1000.0 / 4.37
}

/// Equivalent rectangular bandwidth at `f`.
pub fn erb_bandwidth(f: f64) -> f64 {
    24.7 * (4.37 * f / 1000.0 + 1.0)
}

/// `count` centre frequencies equally spaced on the ERB-rate scale.
pub fn erb_centres(count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let (a, b) = (erb_rate(lo), erb_rate(hi));
    (0..count)
        .map(|i| erb_rate_inverse(a + (b - a) * i as f64 / (count - 1).max(1) as f64))
        .collect()
}

/// Magnitude of the fourth-order all-pole gammatone approximation.
pub fn gammatone_magnitude(f: f64, centre: f64) -> f64 {
    let b = 1.019 * erb_bandwidth(centre);
    let x = (f - centre) / b;
    (1.0 + x * x).powi(-2)
}

/// Frequency above `centre` where the band response is 60 dB down.
pub fn band_upper_edge(centre: f64) -> f64 {
    // (1 + x²)^-2 = 10^-3  =>  x = sqrt(10^1.5 - 1)
    centre + (10f64.powf(1.5) - 1.0).sqrt() * 1.019 * erb_bandwidth(centre)
}

#[derive(Debug, Clone)]
pub struct IldEstimate {
    pub centres: Vec<f64>,
    pub bands_db: Vec<f64>,
    pub mean_db: f64,
}

fn band_powers(x: &[f64], sample_rate: f64, centres: &[f64]) -> Vec<f64> {
    let n = x.len().max(2);
    let spec = RealFft::new(n).forward(x);
    centres
        .iter()
        .map(|&fc| {
            let top = band_upper_edge(fc);
            spec.iter()
                .enumerate()
                .take_while(|(k, _)| *k as f64 * sample_rate / n as f64 <= top)
                .map(|(k, s)| {
                    let g = gammatone_magnitude(k as f64 * sample_rate / n as f64, fc);
                    g * g * s.norm_sqr()
                })
                .sum()
        })
        .collect()
}

fn level_ratio_db(l: f64, r: f64) -> f64 {
    match (l > 0.0, r > 0.0) {
        (true, true) => (10.0 * (l / r).log10()).clamp(-ILD_GUARD_DB, ILD_GUARD_DB),
        (true, false) => ILD_GUARD_DB,
        (false, true) => -ILD_GUARD_DB,
        (false, false) => 0.0,
    }
}

/// Per-band left-over-right level ratios of 29 ERB-spaced bands and their
/// arithmetic mean.
pub fn estimate_ild(p: &BinauralSignal) -> IldEstimate {
    let centres = erb_centres(ILD_BANDS, ILD_RANGE_HZ.0, ILD_RANGE_HZ.1);
    let l = band_powers(&p.left, p.sample_rate, &centres);
    let r = band_powers(&p.right, p.sample_rate, &centres);
    let bands_db: Vec<f64> = l.iter().zip(&r).map(|(&a, &b)| level_ratio_db(a, b)).collect();
    let mean_db = bands_db.iter().sum::<f64>() / bands_db.len() as f64;
    IldEstimate { centres, bands_db, mean_db }
}

/// Mean over bands of the absolute ILD difference.
pub fn ild_error(p: &BinauralSignal, reference: &BinauralSignal) -> f64 {
    let a = estimate_ild(p);
    let b = estimate_ild(reference);
    a.bands_db.iter().zip(&b.bands_db).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.bands_db.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    FrequencyHz,
    AzimuthDeg,
    ShOrder,
}

/// One metric as a function of an axis, for one method and optionally one
/// ear.
#[derive(Debug, Clone)]
pub struct MetricCurve {
    pub axis: Axis,
    pub metric: String,
    pub method: String,
    /// `(axis value, metric value, ear)`.
    pub points: Vec<(f64, f64, Option<&'static str>)>,
}

impl MetricCurve {
    pub fn new(axis: Axis, metric: impl Into<String>, method: impl Into<String>) -> Self {
        MetricCurve { axis, metric: metric.into(), method: method.into(), points: Vec::new() }
    }

    pub fn push(&mut self, x: f64, value: f64, ear: Option<&'static str>) {
        self.points.push((x, value, ear));
    }

    /// Values for one ear (or all points when `ear` is `None`).
    pub fn values(&self, ear: Option<&str>) -> Vec<f64> {
        self.points.iter().filter(|p| ear.is_none() || p.2 == ear).map(|p| p.1).collect()
    }
}

pub const CSV_HEADER: [&str; 5] = ["axis", "value", "ear", "metric", "method"];

#[derive(Serialize)]
struct CsvRow<'a> {
    axis: f64,
    value: f64,
    ear: &'a str,
    metric: &'a str,
    method: &'a str,
}

/// Serialises curves as CSV with header `axis,value,ear,metric,method`;
/// the `axis` column holds the axis coordinate of each point.
pub fn curves_to_csv(curves: &[MetricCurve]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for c in curves {
        for &(x, v, ear) in &c.points {
            w.serialize(CsvRow { axis: x, value: v, ear: ear.unwrap_or(""), metric: &c.metric, method: &c.method })
                .expect("in-memory write");
        }
    }
    let mut out = w.into_inner().expect("in-memory flush");
    out.flush().expect("in-memory flush");
    out
}

pub fn write_curves(path: &Path, curves: &[MetricCurve]) -> Result<()> {
    write_atomic(path, &curves_to_csv(curves))
}

/// Peak of `|x|` in dB relative to full scale.
pub fn peak_dbfs(x: &[f64]) -> f64 {
    to_db(x.iter().fold(0.0_f64, |m, v| m.max(v.abs())).powi(2))
}

/// Spectrum of a signal at `freq` for analysis of rendered outputs.
pub fn spectrum_at(x: &[f64], freq: f64, sample_rate: f64) -> Complex64 {
    crate::scene::dtft(x, freq, sample_rate)
}
