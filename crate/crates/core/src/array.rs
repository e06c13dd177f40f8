//! Analytic array transfer functions for free-field and rigid-sphere arrays.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::linalg::CMatrix;
use crate::sh::{Direction, DirectionSet, FOUR_PI};
use crate::special::{derivatives, i_pow, spherical_h2, spherical_jn};

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;

/// Series order used for rigid-sphere transfer functions unless overridden.
pub const DEFAULT_MAX_ORDER: usize = 30;

/// Ratio `|b_N| / max_n |b_n|` above which a steering matrix is flagged as
/// under-resolved.
pub const TRUNCATION_WARNING: f64 = 1e-6;

/// Series order that resolves a scatterer of electrical size `kr`.
pub fn series_order(kr: f64) -> usize {
    DEFAULT_MAX_ORDER.max((1.5 * kr.abs()).ceil() as usize + 15)
}

pub fn wavenumber(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz / SPEED_OF_SOUND
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayKind {
    FreeField,
    RigidSphere,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Microphone {
    pub radius: f64,
    pub direction: Direction,
}

impl Microphone {
    pub fn position(&self) -> [f64; 3] {
        let u = self.direction.unit_vector();
        [u[0] * self.radius, u[1] * self.radius, u[2] * self.radius]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pub name: String,
    pub kind: ArrayKind,
    /// Scatterer radius in metres; ignored for free-field arrays.
    pub sphere_radius: f64,
    pub mics: Vec<Microphone>,
}

impl ArrayGeometry {
    pub fn new(name: impl Into<String>, kind: ArrayKind, sphere_radius: f64, mics: Vec<Microphone>) -> Result<Self> {
        let g = ArrayGeometry { name: name.into(), kind, sphere_radius, mics };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mics.is_empty() {
            return Err(Error::InvalidArgument("array needs at least one microphone".into()));
        }
        if self.kind == ArrayKind::RigidSphere {
            if !(self.sphere_radius > 0.0) {
                return Err(Error::InvalidArgument("rigid sphere radius must be positive".into()));
            }
            if let Some(m) = self.mics.iter().find(|m| m.radius < self.sphere_radius * (1.0 - 1e-12)) {
                return Err(Error::InvalidArgument(format!(
                    "microphone at r={} lies inside the sphere of radius {}",
                    m.radius, self.sphere_radius
                )));
            }
        }
        Ok(())
    }

    pub fn num_mics(&self) -> usize {
        self.mics.len()
    }

    pub fn max_radius(&self) -> f64 {
        self.mics.iter().map(|m| m.radius).fold(0.0, f64::max)
    }
}

/// `M × Q` array transfer functions at one frequency.
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    pub freq: f64,
    pub wavenumber: f64,
    pub values: CMatrix,
    /// Set when the rigid-sphere series was truncated too early.
    pub truncation_warning: bool,
}

/// Radial coefficients `b_n` of the plane-wave expansion at one mic radius.
fn radial_terms(kind: ArrayKind, k: f64, r: f64, a: f64, max_order: usize) -> Vec<Complex64> {
    let kr = k * r;
    match kind {
        ArrayKind::FreeField => {
            let j = spherical_jn(max_order, kr);
            (0..=max_order).map(|n| i_pow(n) * (FOUR_PI * j[n])).collect()
        }
        ArrayKind::RigidSphere => {
            let ka = k * a;
            let h_a = spherical_h2(max_order + 1, ka);
            let hd_a = derivatives(&h_a, ka);
            if (r - a).abs() <= 1e-12 * a {
                // Wronskian form on the surface: 4π i^n (-i) / ((ka)² h_n'(ka)).
                (0..=max_order)
                    .map(|n| {
                        let denom = hd_a[n] * (ka * ka);
                        if denom.re.is_finite() && denom.im.is_finite() {
                            i_pow(n) * Complex64::new(0.0, -FOUR_PI) / denom
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            } else {
                let j_r = spherical_jn(max_order, kr);
                let h_r = spherical_h2(max_order, kr);
                let j_a = spherical_jn(max_order + 1, ka);
                let jd_a = derivatives(&j_a, ka);
                (0..=max_order)
                    .map(|n| {
                        let ratio = h_r[n] / hd_a[n];
                        let scattered =
                            if ratio.re.is_finite() && ratio.im.is_finite() { ratio * jd_a[n] } else { Complex64::new(0.0, 0.0) };
                        i_pow(n) * ((Complex64::new(j_r[n], 0.0) - scattered) * FOUR_PI)
                    })
                    .collect()
            }
        }
    }
}

/// Legendre polynomials `P_0(x) ..= P_nmax(x)`.
fn legendre(nmax: usize, x: f64, out: &mut Vec<f64>) {
    out.clear();
    out.push(1.0);
    if nmax >= 1 {
        out.push(x);
    }
    for n in 1..nmax {
        let nf = n as f64;
        let next = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
        out.push(next);
    }
}

/// Per-frequency evaluator that caches the radial terms of every mic.
pub struct SteeringEvaluator<'a> {
    geom: &'a ArrayGeometry,
    k: f64,
    radial: Vec<Vec<Complex64>>,
    truncation_warning: bool,
}

impl<'a> SteeringEvaluator<'a> {
    pub fn new(geom: &'a ArrayGeometry, freq: f64, max_order: usize) -> Self {
        let k = wavenumber(freq);
        let mut radial = Vec::new();
        let mut truncation_warning = false;
        if geom.kind == ArrayKind::RigidSphere && freq > 0.0 {
            for mic in &geom.mics {
                let b = radial_terms(geom.kind, k, mic.radius, geom.sphere_radius, max_order);
                let peak = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
                if peak > 0.0 && b[max_order].norm() / peak > TRUNCATION_WARNING {
                    truncation_warning = true;
                }
                radial.push(b);
            }
        }
        SteeringEvaluator { geom, k, radial, truncation_warning }
    }

    pub fn truncation_warning(&self) -> bool {
        self.truncation_warning
    }

    /// Transfer function from a plane wave arriving from `dir` to mic `m`.
    pub fn transfer(&self, m: usize, dir: &Direction, scratch: &mut Vec<f64>) -> Complex64 {
        if self.k == 0.0 {
            return Complex64::new(1.0, 0.0);
        }
        let mic = &self.geom.mics[m];
        match self.geom.kind {
            ArrayKind::FreeField => {
                let u = dir.unit_vector();
                let p = mic.position();
                Complex64::from_polar(1.0, self.k * (u[0] * p[0] + u[1] * p[1] + u[2] * p[2]))
            }
            ArrayKind::RigidSphere => {
                let b = &self.radial[m];
                let n_max = b.len() - 1;
                legendre(n_max, dir.cos_angle_to(&mic.direction), scratch);
                // Addition theorem: Σ_m Y_n^m(Ω)* Y_n^m(Ω') = (2n+1)/(4π) P_n(cos γ).
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..=n_max {
                    acc += b[n] * ((2 * n + 1) as f64 / FOUR_PI * scratch[n]);
                }
                acc
            }
        }
    }
}

/// Array transfer functions for every mic and direction at `freq`.
pub fn steering_matrix(geom: &ArrayGeometry, dirs: &DirectionSet, freq: f64, max_order: usize) -> SteeringMatrix {
    let eval = SteeringEvaluator::new(geom, freq, max_order);
    let mut values = CMatrix::zeros(geom.num_mics(), dirs.len());
    let mut scratch = Vec::with_capacity(max_order + 1);
    for (q, d) in dirs.directions().iter().enumerate() {
        for m in 0..geom.num_mics() {
            values[(m, q)] = eval.transfer(m, d, &mut scratch);
        }
    }
    SteeringMatrix { freq, wavenumber: wavenumber(freq), values, truncation_warning: eval.truncation_warning() }
}

/// Rigid yaw of every microphone about +z.
pub fn rotate_array(geom: &ArrayGeometry, dphi: f64) -> ArrayGeometry {
    let mut out = geom.clone();
    for m in &mut out.mics {
        m.direction = Direction::new(m.direction.theta, m.direction.phi + dphi);
    }
    out
}

/// `M` microphones on the horizontal semicircle of a rigid sphere, from
/// +90° (left) to −90° (right) azimuth.
pub fn semi_circular_preset(m: usize, radius: f64) -> Result<ArrayGeometry> {
    if m < 2 {
        return Err(Error::InvalidArgument("semicircular array needs at least two microphones".into()));
    }
    let mics = (0..m)
        .map(|i| Microphone {
            radius,
            direction: Direction::new(PI / 2.0, PI / 2.0 - PI * i as f64 / (m - 1) as f64),
        })
        .collect();
    ArrayGeometry::new(format!("semicircle-{m}"), ArrayKind::RigidSphere, radius, mics)
}

#[derive(Debug, Serialize, Deserialize)]
struct GeometryFile {
    name: String,
    kind: ArrayKind,
    #[serde(default)]
    sphere_radius_m: Option<f64>,
    mics: Vec<MicEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MicEntry {
    r_m: f64,
    theta_deg: f64,
    phi_deg: f64,
}

impl ArrayGeometry {
    pub fn to_json(&self) -> String {
        let file = GeometryFile {
            name: self.name.clone(),
            kind: self.kind,
            sphere_radius_m: (self.kind == ArrayKind::RigidSphere).then_some(self.sphere_radius),
            mics: self
                .mics
                .iter()
                .map(|m| MicEntry {
                    r_m: m.radius,
                    theta_deg: m.direction.theta.to_degrees(),
                    phi_deg: m.direction.phi.to_degrees(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("geometry serialises")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        let f: GeometryFile = serde_json::from_str(text)?;
        let mics = f
            .mics
            .iter()
            .map(|m| Microphone { radius: m.r_m, direction: Direction::from_degrees(m.theta_deg, m.phi_deg) })
            .collect();
        Ok(ArrayGeometry { name: f.name, kind: f.kind, sphere_radius: f.sphere_radius_m.unwrap_or(0.0), mics })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let g = Self::from_json(&text).map_err(|e| Error::json(path, e))?;
        g.validate()?;
        Ok(g)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}
