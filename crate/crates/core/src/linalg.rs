//! Dense complex linear algebra shared by the transform and design code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Truncated-SVD pseudo-inverse.
pub struct PseudoInverse {
    pub pinv: CMatrix,
    /// Largest over smallest singular value (infinite when a value is zero).
    pub condition: f64,
    /// Number of singular values kept above the relative threshold.
    pub rank: usize,
}

/// Pseudo-inverse dropping singular values below `rel_threshold * s_max`.
pub fn pseudo_inverse(a: &CMatrix, rel_threshold: f64) -> PseudoInverse {
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let s_max = s.iter().cloned().fold(0.0_f64, f64::max);
    let s_min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let cutoff = rel_threshold * s_max;
    let full_rank = s.len() == a.nrows().min(a.ncols()) && s.iter().all(|&si| si > cutoff && si > 0.0);
    if full_rank {
        // The SVD only reconstructs `a` to about 1e-10 relative, so the
        // untruncated inverse comes from Householder QR instead.
        if let Some(pinv) = full_rank_pseudo_inverse(a) {
            return PseudoInverse { pinv, condition, rank: s.len() };
        }
    }
    let mut pinv = CMatrix::zeros(a.ncols(), a.nrows());
    let mut rank = 0;
    for (i, &si) in s.iter().enumerate() {
        if si <= cutoff || si == 0.0 {
            continue;
        }
        rank += 1;
        let inv = 1.0 / si;
        // pinv += v_i * (1/s_i) * u_i^H
        let vi = v_t.row(i).adjoint();
        let ui = u.column(i);
        for c in 0..a.nrows() {
            let uc = ui[c].conj() * inv;
            for r in 0..a.ncols() {
                pinv[(r, c)] += vi[r] * uc;
            }
        }
    }
    PseudoInverse { pinv, condition, rank }
}

/// `R⁻¹Q^H` for tall `a = QR`, `Q R⁻ᴴ` for wide `a^H = QR`.
fn full_rank_pseudo_inverse(a: &CMatrix) -> Option<CMatrix> {
    if a.nrows() >= a.ncols() {
        let qr = a.clone().qr();
        qr.r().solve_upper_triangular(&qr.q().adjoint())
    } else {
        let qr = a.adjoint().qr();
        let x = qr.r().solve_upper_triangular(&qr.q().adjoint())?;
        Some(x.adjoint())
    }
}

/// Singular values of `a` in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.clone().singular_values().iter().cloned().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Squared Euclidean norm with compensated (Neumaier) summation.
pub fn norm_sqr(v: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in v {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `V^H c` without materialising the adjoint.
pub fn adjoint_mul(v: &CMatrix, c: &CVector) -> CVector {
    let (m, q) = v.shape();
    let mut out = CVector::zeros(q);
    for j in 0..q {
        let col = v.column(j);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..m {
            acc += col[i].conj() * c[i];
        }
        out[j] = acc;
    }
    out
}
