//! Free-field plane-wave scenes: array recordings, reference ear signals and
//! plane-wave density coefficients.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Deserialize;

use crate::array::{series_order, wavenumber, ArrayGeometry, SteeringEvaluator, SPEED_OF_SOUND};
use crate::dsp::{bin_frequencies, RealFft};
use crate::error::{Error, Result};
use crate::hrtf::{HrtfLookup, HrtfSet};
use crate::linalg::CMatrix;
use crate::sh::{num_coeffs, sh_row, Direction, DirectionSet, ShVector};
use crate::signal::{read_wav, BinauralSignal, MultichannelSignal};

/// Analysis block length of the scene synthesis.
pub const BLOCK: usize = 2048;
const HOP: usize = BLOCK / 2;
/// Blocks processed together before overlap-adding into the output.
const BATCH: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSignal {
    Samples(Vec<f64>),
    /// Unit impulse at `t = 0`.
    Impulse,
    /// Seeded Gaussian noise with a low-pass tilt.
    Noise,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub direction: Direction,
    pub signal: SourceSignal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub sources: Vec<Source>,
    /// Sensor SNR; `None` for noiseless recordings.
    pub snr_db: Option<f64>,
    pub sample_rate: f64,
    pub duration: f64,
    pub seed: u64,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        if self.sources.is_empty() {
            return Err(Error::InvalidArgument("scene needs at least one source".into()));
        }
        if !(self.sample_rate > 0.0) || !(self.duration > 0.0) {
            return Err(Error::InvalidArgument("sample rate and duration must be positive".into()));
        }
        if self.snr_db.is_some_and(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument("SNR must be finite".into()));
        }
        Ok(())
    }

    pub fn num_samples(&self) -> usize {
        (self.duration * self.sample_rate).round() as usize
    }

    /// Time signal of every source, `num_samples` long.
    pub fn source_signals(&self) -> Vec<Vec<f64>> {
        let n = self.num_samples();
        self.sources
            .iter()
            .enumerate()
            .map(|(q, s)| match &s.signal {
                SourceSignal::Samples(x) => {
                    let mut v = x.clone();
                    v.resize(n, 0.0);
                    v
                }
                SourceSignal::Impulse => {
                    let mut v = vec![0.0; n];
                    if n > 0 {
                        v[0] = 1.0;
                    }
                    v
                }
                SourceSignal::Noise => tilted_noise(n, self.seed, q as u64 + 1),
            })
            .collect()
    }
}

/// Gaussian noise through a one-pole low-pass, scaled to RMS 0.1. The tilt
/// roughly follows the long-term spectrum of speech.
fn tilted_noise(n: usize, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut state = 0.0;
    let mut out: Vec<f64> = (0..n)
        .map(|_| {
            let w: f64 = StandardNormal.sample(&mut rng);
            state = 0.9 * state + w;
            state
        })
        .collect();
    let rms = (out.iter().map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt();
    if rms > 0.0 {
        for v in &mut out {
            *v *= 0.1 / rms;
        }
    }
    out
}

/// Filters every source through per-bin transfer matrices (`outputs ×
/// sources`) with 50%-overlapping periodic Hann blocks. Output samples
/// before a block start (non-causal responses) wrap from the top `advance`
/// bins of each inverse transform.
fn block_filter(inputs: &[Vec<f64>], transfer: &[CMatrix], fft: &RealFft, advance: usize, len: usize) -> Vec<Vec<f64>> {
    let n_out = transfer[0].nrows();
    let nfft = fft.len();
    let window: Vec<f64> = (0..BLOCK).map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / BLOCK as f64).cos()).collect();
    let starts: Vec<isize> = (0..).map(|b| b as isize * HOP as isize - HOP as isize).take_while(|&s| s < len as isize).collect();
    let mut out = vec![vec![0.0; len]; n_out];
    for batch in starts.chunks(BATCH) {
        let blocks: Vec<Vec<Vec<f64>>> = batch
            .par_iter()
            .map(|&s0| {
                let spectra: Vec<Vec<Complex64>> = inputs
                    .iter()
                    .map(|x| {
                        let seg: Vec<f64> = (0..BLOCK)
                            .map(|i| {
                                let t = s0 + i as isize;
                                if t >= 0 && (t as usize) < x.len() {
                                    x[t as usize] * window[i]
                                } else {
                                    0.0
                                }
                            })
                            .collect();
                        fft.forward(&seg)
                    })
                    .collect();
                (0..n_out)
                    .map(|o| {
                        let half: Vec<Complex64> = transfer
                            .iter()
                            .enumerate()
                            .map(|(k, t)| (0..inputs.len()).map(|q| t[(o, q)] * spectra[q][k]).sum())
                            .collect();
                        fft.inverse(&half)
                    })
                    .collect()
            })
            .collect();
        for (&s0, block) in batch.iter().zip(blocks) {
            for (o, y) in block.into_iter().enumerate() {
                for (i, v) in y.into_iter().enumerate() {
                    let offset = if i >= nfft - advance { i as isize - nfft as isize } else { i as isize };
                    let t = s0 + offset;
                    if t >= 0 && (t as usize) < len {
                        out[o][t as usize] += v;
                    }
                }
            }
        }
    }
    out
}

/// Samples of acoustic lead ahead of the origin for a receiver at `radius`.
fn lead_samples(radius: f64, sample_rate: f64) -> usize {
    (radius / SPEED_OF_SOUND * sample_rate).ceil() as usize + 64
}

fn source_directions(scene: &Scene) -> DirectionSet {
    DirectionSet::from_directions(scene.sources.iter().map(|s| s.direction).collect())
}

/// Array recording `x = V s + n`.
pub fn simulate_array(scene: &Scene, geom: &ArrayGeometry, max_order: usize) -> Result<MultichannelSignal> {
    scene.validate()?;
    geom.validate()?;
    let fs = scene.sample_rate;
    let len = scene.num_samples();
    let nfft = 2 * BLOCK;
    let fft = RealFft::new(nfft);
    let dirs = source_directions(scene);
    let transfer: Vec<CMatrix> = bin_frequencies(nfft, fs)
        .par_iter()
        .map(|&f| {
            let order = max_order.max(series_order(wavenumber(f) * geom.max_radius()));
            let eval = SteeringEvaluator::new(geom, f, order);
            let mut scratch = Vec::new();
            CMatrix::from_fn(geom.num_mics(), dirs.len(), |m, q| eval.transfer(m, &dirs.directions()[q], &mut scratch))
        })
        .collect();
    let advance = lead_samples(geom.max_radius(), fs);
    let mut channels = block_filter(&scene.source_signals(), &transfer, &fft, advance, len);
    if let Some(snr) = scene.snr_db {
        let power = channels.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>() / len.max(1) as f64).sum::<f64>()
            / channels.len() as f64;
        let sigma = (power * 10f64.powf(-snr / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(scene.seed);
        rng.set_stream(0);
        for c in &mut channels {
            for v in c.iter_mut() {
                let n: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * n;
            }
        }
    }
    MultichannelSignal::new(fs, channels)
}

/// Noiseless ear signals `p = h^T s`, with the HRTFs looked up at the source
/// directions shifted by `rotation`.
pub fn simulate_reference_binaural(scene: &Scene, hrtf: &HrtfSet, rotation: (f64, f64)) -> Result<BinauralSignal> {
    scene.validate()?;
    let fs = scene.sample_rate;
    let len = scene.num_samples();
    let dirs = source_directions(scene);
    let lookup = HrtfLookup::new(hrtf, &dirs, rotation);
    let signals = scene.source_signals();

    let (transfer, fft, advance): (Vec<CMatrix>, RealFft, usize) = if let Some(model) = hrtf.model() {
        let nfft = 2 * BLOCK;
        let transfer = bin_frequencies(nfft, fs)
            .par_iter()
            .map(|&f| {
                let (l, r) = lookup.at(f);
                CMatrix::from_fn(2, dirs.len(), |e, q| if e == 0 { l[q] } else { r[q] })
            })
            .collect();
        (transfer, RealFft::new(nfft), lead_samples(model.radius, fs))
    } else if let Some((ir_len, _)) = hrtf.stored_impulse_response(0).map(|(l, r)| (l.len(), r.len())) {
        // Measured sets: exact linear convolution with the stored responses.
        if (hrtf.sample_rate() - fs).abs() > 1e-9 * fs {
            return Err(Error::SampleRateMismatch { expected: fs, found: hrtf.sample_rate() });
        }
        let nfft = (BLOCK + ir_len).next_power_of_two();
        let fft = RealFft::new(nfft);
        let spectra: Vec<[Vec<Complex64>; 2]> = lookup
            .indices()
            .iter()
            .map(|&i| {
                let (l, r) = hrtf.stored_impulse_response(i).expect("stored responses");
                let to64 = |x: &[f32]| x.iter().map(|&v| v as f64).collect::<Vec<f64>>();
                [fft.forward(&to64(l)), fft.forward(&to64(r))]
            })
            .collect();
        let transfer =
            (0..=nfft / 2).map(|k| CMatrix::from_fn(2, dirs.len(), |e, q| spectra[q][e][k])).collect();
        (transfer, fft, 0)
    } else {
        let nfft = 2 * BLOCK;
        let transfer = bin_frequencies(nfft, fs)
            .par_iter()
            .map(|&f| {
                let (l, r) = lookup.at(f);
                CMatrix::from_fn(2, dirs.len(), |e, q| if e == 0 { l[q] } else { r[q] })
            })
            .collect();
        (transfer, RealFft::new(nfft), 0)
    };
    let mut out = block_filter(&signals, &transfer, &fft, advance, len);
    let right = out.pop().expect("two ears");
    let left = out.pop().expect("two ears");
    Ok(BinauralSignal { sample_rate: fs, left, right })
}

/// Spectrum `Σ_t x[t] e^{-2πi f t / fs}` of a real signal at `freq`.
pub fn dtft(x: &[f64], freq: f64, sample_rate: f64) -> Complex64 {
    let step = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq / sample_rate);
    let mut rot = Complex64::new(1.0, 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, &v) in x.iter().enumerate() {
        if t % 1024 == 0 {
            rot = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq * t as f64 / sample_rate);
        }
        acc += rot * v;
        rot *= step;
    }
    acc
}

/// Plane-wave density coefficients `a_nm(f) = Σ_q S_q(f) conj(Y_n^m(Ω_q))`
/// at each frequency in `freqs`.
pub fn scene_to_sh(scene: &Scene, order: usize, freqs: &[f64]) -> Result<Vec<ShVector>> {
    scene.validate()?;
    let signals = scene.source_signals();
    let rows: Vec<Vec<Complex64>> = scene.sources.iter().map(|s| sh_row(order, &s.direction)).collect();
    freqs
        .iter()
        .map(|&f| {
            let mut coeffs = vec![Complex64::new(0.0, 0.0); num_coeffs(order)];
            for (x, row) in signals.iter().zip(&rows) {
                let s = dtft(x, f, scene.sample_rate);
                for (c, y) in coeffs.iter_mut().zip(row) {
                    *c += s * y.conj();
                }
            }
            ShVector::from_coeffs(order, coeffs)
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct SceneFile {
    sources: Vec<SourceEntry>,
    #[serde(default)]
    snr_db: Option<f64>,
    duration_s: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    sample_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct SourceEntry {
    theta_deg: f64,
    phi_deg: f64,
    #[serde(default)]
    signal: Option<String>,
    #[serde(default)]
    wav_path: Option<PathBuf>,
}

/// Reads a scene description. Relative WAV paths resolve against the
/// directory of the scene file.
pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SceneFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut sample_rate = file.sample_rate;
    let mut sources = Vec::with_capacity(file.sources.len());
    for s in file.sources {
        let signal = match (s.signal.as_deref(), s.wav_path) {
            (Some("impulse"), None) => SourceSignal::Impulse,
            (Some("noise"), None) => SourceSignal::Noise,
            (Some(other), None) => load_source_wav(&base.join(other), &mut sample_rate)?,
            (None, Some(p)) => load_source_wav(&base.join(p), &mut sample_rate)?,
            _ => {
                return Err(Error::InvalidArgument(
                    "each source needs exactly one of \"signal\" or \"wav_path\"".into(),
                ))
            }
        };
        sources.push(Source { direction: Direction::from_degrees(s.theta_deg, s.phi_deg), signal });
    }
    let scene = Scene {
        sources,
        snr_db: file.snr_db,
        sample_rate: sample_rate.unwrap_or(48_000.0),
        duration: file.duration_s,
        seed: file.seed,
    };
    scene.validate()?;
    Ok(scene)
}

fn load_source_wav(path: &Path, sample_rate: &mut Option<f64>) -> Result<SourceSignal> {
    let sig = read_wav(path)?;
    match *sample_rate {
        Some(fs) if (fs - sig.sample_rate).abs() > 1e-9 => {
            return Err(Error::SampleRateMismatch { expected: fs, found: sig.sample_rate })
        }
        _ => *sample_rate = Some(sig.sample_rate),
    }
    Ok(SourceSignal::Samples(sig.channels.into_iter().next().unwrap_or_default()))
}
