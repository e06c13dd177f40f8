//! Spherical coordinates, complex spherical harmonics and discrete spherical
//! Fourier transforms.
//!
//! Conventions used throughout the crate:
//!
//! * `theta` is the polar angle measured from +z (0..π), `phi` the azimuth
//!   measured from +x towards +y, normalised into [0, 2π).
//! * `Y_n^m` are complex, orthonormal over the unit sphere and include the
//!   Condon–Shortley phase, so `Y_n^{-m} = (-1)^m conj(Y_n^m)`.
//! * Coefficient vectors are stored in the linear order `n² + n + m`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{pseudo_inverse, singular_values, CMatrix};

const TWO_PI: f64 = 2.0 * PI;
pub const FOUR_PI: f64 = 4.0 * PI;

/// Relative singular-value threshold of the least-squares transform.
pub const SVD_TRUNCATION: f64 = 1e-10;
/// Condition number beyond which the least-squares transform is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Wraps an azimuth into [0, 2π).
pub fn wrap_azimuth(phi: f64) -> f64 {
    let w = phi.rem_euclid(TWO_PI);
    if w >= TWO_PI {
        0.0
    } else {
        w
    }
}

/// A point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    pub theta: f64,
    pub phi: f64,
}

impl Direction {
    /// Builds a direction, clamping `theta` into [0, π] and wrapping `phi`.
    pub fn new(theta: f64, phi: f64) -> Self {
        Direction { theta: theta.clamp(0.0, PI), phi: wrap_azimuth(phi) }
    }

    pub fn from_degrees(theta_deg: f64, phi_deg: f64) -> Self {
        Self::new(theta_deg.to_radians(), phi_deg.to_radians())
    }

    /// Horizontal-plane direction (`theta = π/2`).
    pub fn horizontal(phi: f64) -> Self {
        Self::new(PI / 2.0, phi)
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// Cosine of the great-circle angle between two directions.
    pub fn cos_angle_to(&self, other: &Direction) -> f64 {
        let a = self.unit_vector();
        let b = other.unit_vector();
        (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).clamp(-1.0, 1.0)
    }

    /// Literal index shift `(theta + dtheta, phi + dphi)`. A polar angle
    /// leaving [0, π] is reflected about the pole and the azimuth flipped.
    pub fn shifted(&self, dtheta: f64, dphi: f64) -> Direction {
        let mut theta = self.theta + dtheta;
        let mut phi = self.phi + dphi;
        theta = theta.rem_euclid(TWO_PI);
        if theta > PI {
            theta = TWO_PI - theta;
            phi += PI;
        }
        Direction::new(theta, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeTag {
    Spiral,
    EqualAngle,
    TableImport,
    Custom,
}

/// Directions with optional quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Vec<Direction>,
    weights: Option<Vec<f64>>,
    scheme: SchemeTag,
}

impl DirectionSet {
    pub fn new(directions: Vec<Direction>, weights: Option<Vec<f64>>, scheme: SchemeTag) -> Result<Self> {
        if let Some(w) = &weights {
            if w.len() != directions.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} weights for {} directions",
                    w.len(),
                    directions.len()
                )));
            }
            if w.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
            }
            let sum: f64 = w.iter().sum();
            if ((sum - FOUR_PI) / FOUR_PI).abs() > 1e-6 {
                return Err(Error::InvalidArgument(format!("weights sum to {sum}, expected 4π")));
            }
        }
        Ok(DirectionSet { directions, weights, scheme })
    }

    /// An unweighted custom set.
    pub fn from_directions(directions: Vec<Direction>) -> Self {
        DirectionSet { directions, weights: None, scheme: SchemeTag::Custom }
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn scheme(&self) -> SchemeTag {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Whether the weights are meant as an exact quadrature rule. Spiral
    /// weights are nominal area weights and do not integrate SH products
    /// exactly, so spiral sets always go through the least-squares path.
    pub fn has_quadrature(&self) -> bool {
        self.weights.is_some() && self.scheme != SchemeTag::Spiral
    }
}

/// Number of coefficients up to and including `order`.
pub fn num_coeffs(order: usize) -> usize {
    (order + 1) * (order + 1)
}

/// Linear index of `(n, m)`, `|m| <= n`.
pub fn sh_index(n: usize, m: i64) -> usize {
    ((n * n + n) as i64 + m) as usize
}

/// Order of a coefficient vector of length `len`, if `len` is a perfect square.
pub fn order_from_len(len: usize) -> Option<usize> {
    let n = (len as f64).sqrt().round() as usize;
    (n >= 1 && n * n == len).then(|| n - 1)
}

/// Spherical-harmonic coefficients `f_nm` up to `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShVector {
    order: usize,
    coeffs: Vec<Complex64>,
}

impl ShVector {
    pub fn zeros(order: usize) -> Self {
        ShVector { order, coeffs: vec![Complex64::new(0.0, 0.0); num_coeffs(order)] }
    }

    pub fn from_coeffs(order: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != num_coeffs(order) {
            return Err(Error::InvalidArgument(format!(
                "order {order} needs {} coefficients, got {}",
                num_coeffs(order),
                coeffs.len()
            )));
        }
        Ok(ShVector { order, coeffs })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, n: usize, m: i64) -> Complex64 {
        self.coeffs[sh_index(n, m)]
    }

    pub fn set(&mut self, n: usize, m: i64, value: Complex64) {
        self.coeffs[sh_index(n, m)] = value;
    }

    /// Truncated (or zero-padded) copy at another order.
    pub fn with_order(&self, order: usize) -> ShVector {
        let mut out = ShVector::zeros(order);
        let k = num_coeffs(order.min(self.order));
        out.coeffs[..k].copy_from_slice(&self.coeffs[..k]);
        out
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Orthonormal associated Legendre values `P̄_n^m(cos θ)` for `0 <= m <= n <= order`,
/// Condon–Shortley phase included, stored at `n(n+1)/2 + m`. Then
/// `Y_n^m(θ, φ) = P̄_n^m(cos θ) e^{imφ}` for `m >= 0`.
pub fn normalized_legendre(order: usize, cos_theta: f64, sin_theta: f64) -> Vec<f64> {
    let tri = |n: usize, m: usize| n * (n + 1) / 2 + m;
    let mut p = vec![0.0; (order + 1) * (order + 2) / 2];
    p[0] = 1.0 / FOUR_PI.sqrt();
    for m in 1..=order {
        let mf = m as f64;
        p[tri(m, m)] = -((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_theta * p[tri(m - 1, m - 1)];
    }
    for m in 0..order {
        let mf = m as f64;
        p[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * cos_theta * p[tri(m, m)];
        for n in (m + 2)..=order {
            let nf = n as f64;
            let a = ((4.0 * nf * nf - 1.0) / (nf * nf - mf * mf)).sqrt();
            let n1 = nf - 1.0;
            let b = ((n1 * n1 - mf * mf) / (4.0 * n1 * n1 - 1.0)).sqrt();
            p[tri(n, m)] = a * (cos_theta * p[tri(n - 1, m)] - b * p[tri(n - 2, m)]);
        }
    }
    p
}

/// All `Y_n^m(dir)` up to `order` in linear order.
pub fn sh_row(order: usize, dir: &Direction) -> Vec<Complex64> {
    let (st, ct) = dir.theta.sin_cos();
    let p = normalized_legendre(order, ct, st);
    let mut row = vec![Complex64::new(0.0, 0.0); num_coeffs(order)];
    for n in 0..=order {
        for m in 0..=n {
            let val = p[n * (n + 1) / 2 + m];
            let e = Complex64::from_polar(1.0, m as f64 * dir.phi);
            let y = e * val;
            row[sh_index(n, m as i64)] = y;
            if m > 0 {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                row[sh_index(n, -(m as i64))] = y.conj() * sign;
            }
        }
    }
    row
}

/// `Q × (order+1)²` matrix with row `q` holding `Y_n^m(Ω_q)`.
pub fn sh_basis_matrix(dirs: &DirectionSet, order: usize) -> CMatrix {
    let k = num_coeffs(order);
    let mut y = CMatrix::zeros(dirs.len(), k);
    for (q, d) in dirs.directions().iter().enumerate() {
        for (j, v) in sh_row(order, d).into_iter().enumerate() {
            y[(q, j)] = v;
        }
    }
    y
}

/// Condition number of the SH basis matrix.
pub fn basis_condition(dirs: &DirectionSet, order: usize) -> f64 {
    let s = singular_values(&sh_basis_matrix(dirs, order));
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Precomputed analysis operator of a direction set, reusable across many
/// fields sampled on the same directions.
#[derive(Debug, Clone)]
pub struct ShTransform {
    order: usize,
    /// `(order+1)² × Q` analysis matrix.
    analysis: CMatrix,
    condition: Option<f64>,
}

impl ShTransform {
    /// Weighted quadrature when the set carries exact quadrature weights,
    /// truncated-SVD least squares otherwise.
    pub fn new(dirs: &DirectionSet, order: usize) -> Result<Self> {
        let y = sh_basis_matrix(dirs, order);
        if dirs.has_quadrature() {
            let w = dirs.weights().expect("quadrature sets carry weights");
            let mut analysis = y.adjoint();
            for (q, &wq) in w.iter().enumerate() {
                analysis.column_mut(q).scale_mut(wq);
            }
            return Ok(ShTransform { order, analysis, condition: None });
        }
        Self::least_squares_from_basis(&y, order)
    }

    /// Least-squares transform regardless of weights.
    pub fn least_squares(dirs: &DirectionSet, order: usize) -> Result<Self> {
        Self::least_squares_from_basis(&sh_basis_matrix(dirs, order), order)
    }

    fn least_squares_from_basis(y: &CMatrix, order: usize) -> Result<Self> {
        let required = num_coeffs(order);
        if y.nrows() < required {
            return Err(Error::InsufficientSamples { available: y.nrows(), required });
        }
        let pi = pseudo_inverse(y, SVD_TRUNCATION);
        if pi.condition > MAX_CONDITION {
            return Err(Error::RankDeficient { condition: pi.condition, limit: MAX_CONDITION });
        }
        Ok(ShTransform { order, analysis: pi.pinv, condition: Some(pi.condition) })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Basis condition number (least-squares path only).
    pub fn condition(&self) -> Option<f64> {
        self.condition
    }

    pub fn analysis_matrix(&self) -> &CMatrix {
        &self.analysis
    }

    pub fn forward(&self, values: &[Complex64]) -> Result<ShVector> {
        if values.len() != self.analysis.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} directions",
                values.len(),
                self.analysis.ncols()
            )));
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0); self.analysis.nrows()];
        for (q, &v) in values.iter().enumerate() {
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let col = self.analysis.column(q);
            for (c, a) in coeffs.iter_mut().zip(col.iter()) {
                *c += a * v;
            }
        }
        Ok(ShVector { order: self.order, coeffs })
    }
}

/// Spherical Fourier transform of `values` sampled on `dirs`.
pub fn sft_forward(values: &[Complex64], dirs: &DirectionSet, order: usize) -> Result<ShVector> {
    ShTransform::new(dirs, order)?.forward(values)
}

/// Synthesis `Σ f_nm Y_n^m(Ω_q)` at every direction.
pub fn sft_inverse(coeffs: &ShVector, dirs: &DirectionSet) -> Vec<Complex64> {
    dirs.directions().iter().map(|d| evaluate(coeffs, d)).collect()
}

/// Synthesis at a single direction.
pub fn evaluate(coeffs: &ShVector, dir: &Direction) -> Complex64 {
    sh_row(coeffs.order, dir).iter().zip(coeffs.coeffs.iter()).map(|(y, c)| y * c).sum()
}

/// Saff–Kuijlaars spiral with nominal area weights `4π / count`.
pub fn spiral_sampling(count: usize) -> DirectionSet {
    assert!(count >= 1, "spiral needs at least one point");
    let weights = Some(vec![FOUR_PI / count as f64; count]);
    if count == 1 {
        return DirectionSet { directions: vec![Direction::new(0.0, 0.0)], weights, scheme: SchemeTag::Spiral };
    }
    let n = count as f64;
    let mut dirs = Vec::with_capacity(count);
    let mut phi = 0.0_f64;
    for k in 0..count {
        let h = -1.0 + 2.0 * k as f64 / (n - 1.0);
        let theta = h.clamp(-1.0, 1.0).acos();
        if k == 0 || k == count - 1 {
            phi = 0.0;
        } else {
            phi = (phi + 3.6 / n.sqrt() / (1.0 - h * h).sqrt()).rem_euclid(TWO_PI);
        }
        dirs.push(Direction::new(theta, phi));
    }
    DirectionSet { directions: dirs, weights, scheme: SchemeTag::Spiral }
}

/// Driscoll–Healy equal-angle grid of `(2N+2)²` points with weights that
/// integrate products of order-`N` harmonics exactly.
pub fn equal_angle_sampling(order: usize) -> DirectionSet {
    let l = 2 * (order + 1);
    let mut theta_w = Vec::with_capacity(l);
    for j in 0..l {
        let theta = PI * j as f64 / l as f64;
        let s: f64 = (0..=order)
            .map(|q| ((2 * q + 1) as f64 * theta).sin() / (2 * q + 1) as f64)
            .sum();
        theta_w.push((theta, theta.sin() * s));
    }
    // Normalise so that the polar weights integrate sin θ dθ over [0, π] to 2.
    let total: f64 = theta_w.iter().map(|t| t.1).sum();
    let scale = 2.0 / total;
    let mut dirs = Vec::with_capacity(l * l);
    let mut weights = Vec::with_capacity(l * l);
    for &(theta, w) in &theta_w {
        for k in 0..l {
            dirs.push(Direction::new(theta, TWO_PI * k as f64 / l as f64));
            weights.push(w * scale * TWO_PI / l as f64);
        }
    }
    DirectionSet { directions: dirs, weights: Some(weights), scheme: SchemeTag::EqualAngle }
}

/// Shifts every direction by `(dtheta, dphi)`; weights and scheme are kept.
pub fn rotate_directions(dirs: &DirectionSet, dtheta: f64, dphi: f64) -> DirectionSet {
    DirectionSet {
        directions: dirs.directions.iter().map(|d| d.shifted(dtheta, dphi)).collect(),
        weights: dirs.weights.clone(),
        scheme: dirs.scheme,
    }
}

/// Parses a direction table: one `theta_deg phi_deg [weight]` row per line,
/// `#` starts a comment. Without a weight column the weights are `4π/Q`.
pub fn parse_direction_table(text: &str) -> Result<DirectionSet> {
    let mut dirs = Vec::new();
    let mut weights = Vec::new();
    let mut weighted: Option<bool> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("line {}: {e}", lineno + 1)))?;
        let has_weight = match fields.len() {
            2 => false,
            3 => true,
            n => return Err(Error::InvalidArgument(format!("line {}: expected 2 or 3 columns, got {n}", lineno + 1))),
        };
        if *weighted.get_or_insert(has_weight) != has_weight {
            return Err(Error::InvalidArgument(format!("line {}: inconsistent weight column", lineno + 1)));
        }
        dirs.push(Direction::from_degrees(fields[0], fields[1]));
        if has_weight {
            weights.push(fields[2]);
        }
    }
    if dirs.is_empty() {
        return Err(Error::InvalidArgument("direction table is empty".into()));
    }
    let weights = if weighted == Some(true) { weights } else { vec![FOUR_PI / dirs.len() as f64; dirs.len()] };
    DirectionSet::new(dirs, Some(weights), SchemeTag::TableImport)
}

pub fn load_direction_set(path: &Path) -> Result<DirectionSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_direction_table(&text)
}
