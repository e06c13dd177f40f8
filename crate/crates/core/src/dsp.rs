//! Real-signal FFT helpers on top of `rustfft`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans of one transform size.
#[derive(Clone)]
pub struct RealFft {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RealFft {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        RealFft { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// `X[k] = Σ x[t] e^{-2πi kt/n}` for `k = 0..=n/2`; `x` is zero-padded
    /// or truncated to `n`.
    pub fn forward(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = (0..self.n).map(|t| Complex64::new(x.get(t).copied().unwrap_or(0.0), 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.n / 2 + 1);
        buf
    }

    /// Inverse of [`RealFft::forward`] from the `n/2+1` non-negative bins,
    /// imposing Hermitian symmetry (imaginary parts of DC and Nyquist are
    /// dropped).
    pub fn inverse(&self, half: &[Complex64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(half.len(), n / 2 + 1, "half spectrum length");
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        for k in 1..half.len() {
            if 2 * k == n {
                buf[k] = Complex64::new(half[k].re, 0.0);
            } else {
                buf[k] = half[k];
                buf[n - k] = half[k].conj();
            }
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }
}

/// `n` bin frequencies `k · fs / nfft` for `k = 0..=nfft/2`.
pub fn bin_frequencies(nfft: usize, sample_rate: f64) -> Vec<f64> {
    (0..=nfft / 2).map(|k| k as f64 * sample_rate / nfft as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft() {
        let x: Vec<f64> = (0..12).map(|t| ((t * 7 % 5) as f64 - 2.0) * 0.3).collect();
        let fft = RealFft::new(12);
        let spec = fft.forward(&x);
        for (k, s) in spec.iter().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &v) in x.iter().enumerate() {
                acc += Complex64::from_polar(v, -2.0 * std::f64::consts::PI * (k * t) as f64 / 12.0);
            }
            assert!((acc - s).norm() < 1e-12);
        }
        let back = fft.inverse(&spec);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
