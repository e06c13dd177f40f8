//! Time-domain realization of filter banks, block convolution and the
//! SH-domain reference renderer.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::design::FilterBank;
use crate::dsp::{bin_frequencies, RealFft};
use crate::error::{Error, Result};
use crate::hrtf::HrtfShCoeffs;
use crate::sh::{sh_index, ShVector};
use crate::signal::{BinauralSignal, MultichannelSignal};

pub const DEFAULT_NFFT: usize = 2048;

/// Per-mic impulse responses of both ears.
#[derive(Debug, Clone)]
pub struct ImpulseResponses {
    pub nfft: usize,
    /// Delay in samples introduced by the causality shift.
    pub latency: usize,
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
}

impl ImpulseResponses {
    pub fn num_mics(&self) -> usize {
        self.left.len()
    }
}

/// Linear interpolation of `values` (sampled at increasing `freqs`) at `f`,
/// holding the end values outside the band.
pub(crate) fn interpolate(freqs: &[f64], values: &[Complex64], f: f64) -> Complex64 {
    let last = freqs.len() - 1;
    if f <= freqs[0] {
        return values[0];
    }
    if f >= freqs[last] {
        return values[last];
    }
    let hi = freqs.partition_point(|&x| x <= f);
    let lo = hi - 1;
    let t = (f - freqs[lo]) / (freqs[hi] - freqs[lo]);
    values[lo] * (1.0 - t) + values[hi] * t
}

/// Converts a bank to FIR filters of length `nfft`. The applied response of
/// mic `m` is `conj(c_m(f))` (the estimate is `c^H x`), interpolated onto the
/// `nfft` grid, made Hermitian, inverse transformed and circularly shifted by
/// `nfft / 2` samples.
pub fn bank_to_impulse_responses(bank: &FilterBank, nfft: usize, sample_rate: f64) -> Result<ImpulseResponses> {
    if nfft < 2 || !nfft.is_power_of_two() {
        return Err(Error::InvalidFftSize(nfft));
    }
    if bank.is_empty() {
        return Err(Error::InvalidArgument("filter bank is empty".into()));
    }
    let fft = RealFft::new(nfft);
    let grid = bin_frequencies(nfft, sample_rate);
    let half = nfft / 2;
    let to_ir = |filters: &[nalgebra::DVector<Complex64>], m: usize| -> Vec<f64> {
        let values: Vec<Complex64> = filters.iter().map(|c| c[m].conj()).collect();
        let spectrum: Vec<Complex64> = grid.iter().map(|&f| interpolate(&bank.freqs, &values, f)).collect();
        let raw = fft.inverse(&spectrum);
        let mut ir = vec![0.0; nfft];
        for (t, v) in raw.into_iter().enumerate() {
            ir[(t + half) % nfft] = v;
        }
        ir
    };
    let m = bank.num_mics();
    Ok(ImpulseResponses {
        nfft,
        latency: half,
        left: (0..m).map(|i| to_ir(&bank.left, i)).collect(),
        right: (0..m).map(|i| to_ir(&bank.right, i)).collect(),
    })
}

/// Overlap-save convolution of M channels with per-ear FIR filters, summed
/// over channels. The transform size is fixed at twice the filter length and
/// the hop equals the filter length, so the output does not depend on how
/// the input is chunked.
pub struct Renderer {
    fft: RealFft,
    hop: usize,
    /// Spectra of the zero-padded filters, `[ear][mic][bin]`.
    spectra: [Vec<Vec<Complex64>>; 2],
    latency: usize,
}

impl Renderer {
    pub fn new(irs: &ImpulseResponses) -> Self {
        let hop = irs.nfft;
        let fft = RealFft::new(2 * hop);
        let spectra = [
            irs.left.iter().map(|h| fft.forward(h)).collect(),
            irs.right.iter().map(|h| fft.forward(h)).collect(),
        ];
        Renderer { fft, hop, spectra, latency: irs.latency }
    }

    pub fn from_bank(bank: &FilterBank, nfft: usize, sample_rate: f64) -> Result<Self> {
        Ok(Self::new(&bank_to_impulse_responses(bank, nfft, sample_rate)?))
    }

    pub fn num_mics(&self) -> usize {
        self.spectra[0].len()
    }

    /// Length of the output for `frames` input samples.
    pub fn output_len(&self, frames: usize) -> usize {
        frames + self.hop - 1
    }

    pub fn latency(&self) -> usize {
        self.latency
    }

    /// Output block `b` (samples `b·hop .. (b+1)·hop`) from the input span
    /// `[(b−1)·hop, (b+1)·hop)` of every channel.
    fn block(&self, frame: &[Vec<f64>]) -> [Vec<f64>; 2] {
        let bins = self.hop + 1;
        let mut acc = [vec![Complex64::new(0.0, 0.0); bins], vec![Complex64::new(0.0, 0.0); bins]];
        for (m, x) in frame.iter().enumerate() {
            let spec = self.fft.forward(x);
            for (ear, a) in acc.iter_mut().enumerate() {
                for ((o, s), h) in a.iter_mut().zip(&spec).zip(&self.spectra[ear][m]) {
                    *o += s * h;
                }
            }
        }
        let keep = |a: &[Complex64]| self.fft.inverse(a)[self.hop..].to_vec();
        [keep(&acc[0]), keep(&acc[1])]
    }

    /// Full convolution, output length `T + nfft − 1`.
    pub fn render(&self, x: &MultichannelSignal) -> Result<BinauralSignal> {
        if x.num_channels() != self.num_mics() {
            return Err(Error::ChannelMismatch { expected: self.num_mics(), found: x.num_channels() });
        }
        let hop = self.hop;
        let total = x.len() + hop - 1;
        let blocks = total.div_ceil(hop);
        let outputs: Vec<[Vec<f64>; 2]> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let frame: Vec<Vec<f64>> = x
                    .channels
                    .iter()
                    .map(|ch| {
                        (0..2 * hop)
                            .map(|i| {
                                let t = (b * hop + i) as isize - hop as isize;
                                if t >= 0 && (t as usize) < ch.len() {
                                    ch[t as usize]
                                } else {
                                    0.0
                                }
                            })
                            .collect()
                    })
                    .collect();
                self.block(&frame)
            })
            .collect();
        let mut left = Vec::with_capacity(blocks * hop);
        let mut right = Vec::with_capacity(blocks * hop);
        for [l, r] in outputs {
            left.extend(l);
            right.extend(r);
        }
        left.truncate(total);
        right.truncate(total);
        Ok(BinauralSignal { sample_rate: x.sample_rate, left, right })
    }

    /// Incremental interface over the same block computation.
    pub fn stream(&self) -> RenderStream<'_> {
        RenderStream {
            renderer: self,
            history: vec![vec![0.0; self.hop]; self.num_mics()],
            pending: vec![Vec::new(); self.num_mics()],
            consumed: 0,
            blocks: 0,
        }
    }
}

/// Chunked rendering; produces exactly the samples of [`Renderer::render`].
pub struct RenderStream<'a> {
    renderer: &'a Renderer,
    /// Input of the previous hop, per channel.
    history: Vec<Vec<f64>>,
    pending: Vec<Vec<f64>>,
    consumed: usize,
    blocks: usize,
}

impl RenderStream<'_> {
    /// Appends one chunk per channel and returns the completed output blocks.
    pub fn push(&mut self, chunk: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
        if chunk.len() != self.pending.len() {
            return Err(Error::ChannelMismatch { expected: self.pending.len(), found: chunk.len() });
        }
        let len = chunk.first().map(Vec::len).unwrap_or(0);
        if chunk.iter().any(|c| c.len() != len) {
            return Err(Error::InvalidArgument("chunk channels differ in length".into()));
        }
        for (p, c) in self.pending.iter_mut().zip(chunk) {
            p.extend_from_slice(c);
        }
        self.consumed += len;
        let hop = self.renderer.hop;
        let (mut left, mut right) = (Vec::new(), Vec::new());
        while self.pending.first().map(Vec::len).unwrap_or(0) >= hop {
            let [l, r] = self.next_block();
            left.extend(l);
            right.extend(r);
        }
        Ok((left, right))
    }

    fn next_block(&mut self) -> [Vec<f64>; 2] {
        let hop = self.renderer.hop;
        let mut frame = Vec::with_capacity(self.history.len());
        for (h, p) in self.history.iter_mut().zip(self.pending.iter_mut()) {
            let take = p.len().min(hop);
            let mut current: Vec<f64> = p.drain(..take).collect();
            current.resize(hop, 0.0);
            let mut f = Vec::with_capacity(2 * hop);
            f.extend_from_slice(h);
            f.extend_from_slice(&current);
            frame.push(f);
            *h = current;
        }
        self.blocks += 1;
        self.renderer.block(&frame)
    }

    /// Flushes the tail; the concatenated output has length `T + nfft − 1`.
    pub fn finish(mut self) -> (Vec<f64>, Vec<f64>) {
        let hop = self.renderer.hop;
        let total = self.consumed + hop - 1;
        let emitted = self.blocks * hop;
        let (mut left, mut right) = (Vec::new(), Vec::new());
        while self.blocks * hop < total {
            let [l, r] = self.next_block();
            left.extend(l);
            right.extend(r);
        }
        left.truncate(total - emitted);
        right.truncate(total - emitted);
        (left, right)
    }
}

/// Renders `x` through `bank` with FIR filters of length `nfft`.
pub fn render(bank: &FilterBank, x: &MultichannelSignal, nfft: usize) -> Result<BinauralSignal> {
    if x.num_channels() != bank.num_mics() {
        return Err(Error::ChannelMismatch { expected: bank.num_mics(), found: x.num_channels() });
    }
    Renderer::from_bank(bank, nfft, x.sample_rate)?.render(x)
}

/// Ear spectra on a frequency axis.
#[derive(Debug, Clone)]
pub struct BinauralSpectrum {
    pub freqs: Vec<f64>,
    pub left: Vec<Complex64>,
    pub right: Vec<Complex64>,
}

/// `p = Σ_{n ≤ N} Σ_m (−1)^m a_{n,−m} h_nm` per frequency, the binaural
/// signal of a sound field with plane-wave density coefficients `a_nm`.
pub fn render_hoa_reference(a_nm: &[ShVector], hrtf_sh: &HrtfShCoeffs, order: usize) -> Result<BinauralSpectrum> {
    if a_nm.len() != hrtf_sh.freqs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} field spectra for {} HRTF frequencies",
            a_nm.len(),
            hrtf_sh.freqs.len()
        )));
    }
    let available = a_nm.iter().map(ShVector::order).min().unwrap_or(0).min(hrtf_sh.order);
    if order > available {
        return Err(Error::OrderMismatch { requested: order, available });
    }
    let project = |a: &ShVector, h: &ShVector| {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..=order {
            let ni = n as i64;
            for m in -ni..=ni {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += a.coeffs()[sh_index(n, -m)] * h.coeffs()[sh_index(n, m)] * sign;
            }
        }
        acc
    };
    let left = a_nm.iter().zip(&hrtf_sh.left).map(|(a, h)| project(a, h)).collect();
    let right = a_nm.iter().zip(&hrtf_sh.right).map(|(a, h)| project(a, h)).collect();
    Ok(BinauralSpectrum { freqs: hrtf_sh.freqs.clone(), left, right })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{BankMeta, FilterMode};
    use crate::linalg::CVector;
    use std::f64::consts::PI;

    fn bank_from(freqs: Vec<f64>, f: impl Fn(f64, usize) -> Complex64, m: usize) -> FilterBank {
        let left: Vec<CVector> = freqs.iter().map(|&fr| CVector::from_fn(m, |i, _| f(fr, i))).collect();
        FilterBank {
            right: left.clone(),
            left,
            modes: vec![FilterMode::ComplexLs; freqs.len()],
            diagnostics: vec![Default::default(); freqs.len()],
            meta: BankMeta { cutoff_hz: f64::INFINITY, snr_db: 20.0, rotation: (0.0, 0.0), array_rotation: 0.0 },
            freqs,
        }
    }

    #[test]
    fn unit_filter_gives_centred_impulse() {
        let bank = bank_from(vec![0.0, 24000.0], |_, _| Complex64::new(1.0, 0.0), 1);
        let irs = bank_to_impulse_responses(&bank, 64, 48000.0).unwrap();
        for (t, v) in irs.left[0].iter().enumerate() {
            let expect = if t == 32 { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn applied_delay_shifts_impulse() {
        let fs = 48000.0;
        let d = 5.0 / fs;
        let freqs: Vec<f64> = (0..=32).map(|k| k as f64 * fs / 64.0).collect();
        let bank = bank_from(freqs, |f, _| Complex64::from_polar(1.0, 2.0 * PI * f * d), 1);
        let irs = bank_to_impulse_responses(&bank, 64, fs).unwrap();
        let peak = irs.left[0].iter().enumerate().fold((0, 0.0), |b, (i, &v)| if v.abs() > b.1 { (i, v.abs()) } else { b });
        assert_eq!(peak.0, 37);
        assert!((peak.1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let bank = bank_from(vec![100.0], |_, _| Complex64::new(1.0, 0.0), 1);
        assert!(matches!(bank_to_impulse_responses(&bank, 1000, 48000.0), Err(Error::InvalidFftSize(1000))));
    }

    #[test]
    fn identity_bank_delays_first_channel() {
        let bank = bank_from(vec![0.0, 1000.0], |_, i| Complex64::new(if i == 0 { 1.0 } else { 0.0 }, 0.0), 2);
        let x: Vec<f64> = (0..300).map(|t| ((t * 13) % 17) as f64 - 8.0).collect();
        let sig = MultichannelSignal::new(48000.0, vec![x.clone(), vec![1.0; 300]]).unwrap();
        let out = render(&bank, &sig, 32).unwrap();
        assert_eq!(out.len(), 300 + 31);
        for t in 0..out.len() {
            let expect = if t >= 16 && t - 16 < 300 { x[t - 16] } else { 0.0 };
            assert!((out.left[t] - expect).abs() < 1e-9);
            assert!((out.right[t] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn streaming_matches_whole_signal_bitwise() {
        let bank = bank_from(vec![0.0, 5000.0, 24000.0], |f, i| Complex64::from_polar(1.0 + i as f64, f * 1e-4), 3);
        let x: Vec<Vec<f64>> = (0..3).map(|c| (0..1000).map(|t| (((t + c) * 7919) % 101) as f64 / 50.0 - 1.0).collect()).collect();
        let sig = MultichannelSignal::new(48000.0, x.clone()).unwrap();
        let renderer = Renderer::from_bank(&bank, 64, 48000.0).unwrap();
        let whole = renderer.render(&sig).unwrap();
        for chunk in [1, 37, 64, 256, 1000] {
            let mut s = renderer.stream();
            let (mut l, mut r) = (Vec::new(), Vec::new());
            for start in (0..1000).step_by(chunk) {
                let end = (start + chunk).min(1000);
                let piece: Vec<Vec<f64>> = x.iter().map(|c| c[start..end].to_vec()).collect();
                let (a, b) = s.push(&piece).unwrap();
                l.extend(a);
                r.extend(b);
            }
            let (a, b) = s.finish();
            l.extend(a);
            r.extend(b);
            assert_eq!(l, whole.left, "chunk {chunk}");
            assert_eq!(r, whole.right, "chunk {chunk}");
        }
    }

    #[test]
    fn channel_mismatch() {
        let bank = bank_from(vec![0.0], |_, _| Complex64::new(1.0, 0.0), 2);
        let sig = MultichannelSignal::new(48000.0, vec![vec![0.0; 10]]).unwrap();
        assert!(matches!(render(&bank, &sig, 32), Err(Error::ChannelMismatch { expected: 2, found: 1 })));
    }

    #[test]
    fn zeroth_order_reference_is_single_product() {
        let a = ShVector::from_coeffs(0, vec![Complex64::new((4.0 * PI).sqrt(), 0.0)]).unwrap();
        let h = ShVector::from_coeffs(0, vec![Complex64::new(1.0, 0.0)]).unwrap();
        let coeffs = HrtfShCoeffs { order: 0, freqs: vec![100.0], left: vec![h.clone()], right: vec![h] };
        let out = render_hoa_reference(&[a], &coeffs, 0).unwrap();
        assert!((out.left[0] - (4.0 * PI).sqrt()).norm() < 1e-15);
        assert!(matches!(render_hoa_reference(&[ShVector::zeros(0)], &coeffs, 1), Err(Error::OrderMismatch { .. })));
    }
}
