//! Spherical Bessel and Hankel functions of integer order.
//!
//! `h_n` denotes the spherical Hankel function of the second kind,
//! `h_n = j_n - i y_n`, which is the outgoing wave for the `e^{+iωt}` time
//! convention implied by plane waves of the form `e^{+i k r̂·d}`.

use num_complex::Complex64;

/// Below this argument the leading terms of the power series are used.
pub const SMALL_ARGUMENT: f64 = 1e-4;

/// `j_0(x) ..= j_nmax(x)`.
pub fn spherical_jn(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x.abs() < SMALL_ARGUMENT {
        // x^n / (2n+1)!! * (1 - x² / (2(2n+3)))
        let mut lead = 1.0;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= x / (2 * n + 1) as f64;
            }
            *o = lead * (1.0 - x * x / (2.0 * (2 * n + 3) as f64));
        }
        return out;
    }
    // Miller's downward recurrence with rescaling, normalised against the
    // larger of the closed-form j_0 and j_1.
    let start = nmax + x.abs().ceil() as usize + 32;
    let mut next = 0.0_f64;
    let mut cur = 1e-300_f64;
    let mut vals = vec![0.0; start + 1];
    vals[start] = cur;
    for n in (1..=start).rev() {
        let prev = (2 * n + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        vals[n - 1] = cur;
        if cur.abs() > 1e250 {
            for v in vals[n - 1..].iter_mut() {
                *v *= 1e-250;
            }
            cur *= 1e-250;
            next *= 1e-250;
        }
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let scale = if j0.abs() >= j1.abs() { j0 / vals[0] } else { j1 / vals[1] };
    for (o, v) in out.iter_mut().zip(vals.iter()) {
        *o = v * scale;
    }
    out
}

/// `y_0(x) ..= y_nmax(x)` by upward recurrence. Values may overflow to
/// `-inf` for large orders at small arguments.
pub fn spherical_yn(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x.abs() < SMALL_ARGUMENT {
        // -(2n-1)!! / x^{n+1}
        let mut lead = -1.0 / x;
        for (n, o) in out.iter_mut().enumerate() {
            if n > 0 {
                lead *= (2 * n - 1) as f64 / x;
            }
            *o = lead;
        }
        return out;
    }
    let (s, c) = x.sin_cos();
    out[0] = -c / x;
    if nmax >= 1 {
        out[1] = -c / (x * x) - s / x;
    }
    for n in 1..nmax {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
    }
    out
}

/// `h_n(x) = j_n(x) - i y_n(x)` for `n = 0..=nmax`.
pub fn spherical_h2(nmax: usize, x: f64) -> Vec<Complex64> {
    let j = spherical_jn(nmax, x);
    let y = spherical_yn(nmax, x);
    j.iter().zip(y.iter()).map(|(&a, &b)| Complex64::new(a, -b)).collect()
}

/// Derivatives from a table `f_0..=f_{N+1}` via `f_n' = f_{n-1} - (n+1)/x f_n`
/// (and `f_0' = -f_1`); returns `N+1` values.
pub fn derivatives<T>(f: &[T], x: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    assert!(f.len() >= 2);
    let n_out = f.len() - 1;
    (0..n_out)
        .map(|n| if n == 0 { -f[1] } else { f[n - 1] - f[n] * ((n + 1) as f64 / x) })
        .collect()
}

/// `i^n`.
pub fn i_pow(n: usize) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}
