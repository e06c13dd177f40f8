//! Filter design: regularized least squares below the cutoff, magnitude
//! least squares above it, and the beamformer view of the same solution.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{rotate_array, steering_matrix, ArrayGeometry, DEFAULT_MAX_ORDER};
use crate::error::{Error, Result};
use crate::hrtf::{HrtfLookup, HrtfSet};
use crate::io::{ensure_dir, write_atomic};
use crate::linalg::{adjoint_mul, norm_sqr, pseudo_inverse, CMatrix, CVector};
use crate::sh::{num_coeffs, sh_basis_matrix, DirectionSet, SVD_TRUNCATION};

/// Condition number of `VV^H + reg I` above which the solve switches from
/// Cholesky to the SVD of `V`.
pub const CHOLESKY_CONDITION_LIMIT: f64 = 1e10;
/// Singular values of `V` below this fraction of the largest count as zero
/// when deciding whether an unregularized system is solvable.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `σ_n² / σ_s²` for a signal-to-noise ratio in dB.
pub fn regularization_from_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `W = (VV^H + reg I)^{-1} V`, the `M × Q` matrix whose columns are the
/// per-direction beamformers.
pub fn bfbr_decompose(v: &CMatrix, reg: f64) -> Result<CMatrix> {
    if !(reg >= 0.0) || !reg.is_finite() {
        return Err(Error::InvalidArgument(format!("regularization {reg} must be finite and nonnegative")));
    }
    let m = v.nrows();
    if reg == 0.0 {
        let s = crate::linalg::singular_values(v);
        let s_max = s.first().copied().unwrap_or(0.0);
        let rank = s.iter().filter(|&&x| x > RANK_TOLERANCE * s_max && x > 0.0).count();
        if rank < m {
            return Err(Error::SingularSystem { rank, required: m });
        }
    }
    let mut a = v * v.adjoint();
    for i in 0..m {
        a[(i, i)] += reg;
    }
    let eig = a.clone().symmetric_eigenvalues();
    let lmax = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lmin = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if lmin > 0.0 { lmax / lmin } else { f64::INFINITY };
    if condition <= CHOLESKY_CONDITION_LIMIT {
        if let Some(chol) = a.cholesky() {
            return Ok(chol.solve(v));
        }
    }
    // W = U diag(s / (s² + reg)) Z^H from the thin SVD V = U S Z^H.
    let svd = v.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let z_h = svd.v_t.expect("v_t requested");
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let mut w = CMatrix::zeros(m, v.ncols());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= RANK_TOLERANCE * s_max || s == 0.0 {
            continue;
        }
        let g = s / (s * s + reg);
        w += (u.column(i) * z_h.row(i)) * Complex64::new(g, 0.0);
    }
    Ok(w)
}

/// Complex least-squares filter `c = (VV^H + reg I)^{-1} V conj(h)`.
pub fn bsm_ls_filter(v: &CMatrix, h: &CVector, reg: f64) -> Result<CVector> {
    check_len(v, h.len())?;
    Ok(bfbr_decompose(v, reg)? * h.map(|x| x.conj()))
}

fn check_len(v: &CMatrix, q: usize) -> Result<()> {
    if v.ncols() != q {
        return Err(Error::InvalidArgument(format!("steering matrix has {} directions, vector has {q}", v.ncols())));
    }
    Ok(())
}

/// `‖|V^H c| − h_mag‖² + reg ‖c‖²` (signal variance normalised to one).
pub fn magnitude_objective(v: &CMatrix, c: &CVector, h_mag: &[f64], reg: f64) -> f64 {
    let y = adjoint_mul(v, c);
    objective_from(&y, c, h_mag, reg)
}

fn objective_from(y: &CVector, c: &CVector, h_mag: &[f64], reg: f64) -> f64 {
    let fit = norm_sqr(y.iter().zip(h_mag).map(|(a, &b)| {
        let d = a.norm() - b;
        d * d
    }));
    fit + reg * norm_sqr(c.iter().map(|x| x.norm_sqr()))
}

/// Settings of the variable-exchange iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaglsOptions {
    pub init_phase: f64,
    /// Stop once the objective decreases by less than this amount.
    pub tol: f64,
    pub max_iters: usize,
    /// Also iterate from the phase of the complex least-squares response and
    /// keep whichever run ends with the lower objective. The iteration only
    /// finds local minima, and a constant initial phase can end well above
    /// the least-squares solution.
    #[serde(default = "default_true")]
    pub ls_warm_start: bool,
}

fn default_true() -> bool {
    true
}

impl Default for MaglsOptions {
    fn default() -> Self {
        MaglsOptions { init_phase: PI / 2.0, tol: 1e-20, max_iters: 100_000, ls_warm_start: true }
    }
}

#[derive(Debug, Clone)]
pub struct MaglsResult {
    pub filter: CVector,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after the last iteration.
    pub objective: f64,
    /// Largest increase of the objective between consecutive iterations
    /// (zero for a monotone run).
    pub max_increase: f64,
    /// Objective after each iteration, when recorded.
    pub trace: Vec<f64>,
}

/// Magnitude least squares by variable exchange: alternate between the
/// least-squares filter for a target with fixed phase, and the phase of the
/// filter's response.
pub fn magls_filter(
    v: &CMatrix,
    h_mag: &[f64],
    h_phase_init: &[f64],
    reg: f64,
    tol: f64,
    max_iters: usize,
) -> Result<MaglsResult> {
    check_len(v, h_mag.len())?;
    check_len(v, h_phase_init.len())?;
    if h_mag.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("target magnitudes must be nonnegative".into()));
    }
    let w = bfbr_decompose(v, reg)?;
    Ok(variable_exchange(v, &w, h_mag, h_phase_init.to_vec(), reg, tol, max_iters, true))
}

#[allow(clippy::too_many_arguments)]
fn variable_exchange(
    v: &CMatrix,
    w: &CMatrix,
    h_mag: &[f64],
    mut phase: Vec<f64>,
    reg: f64,
    tol: f64,
    max_iters: usize,
    record: bool,
) -> MaglsResult {
    let target = |phase: &[f64]| CVector::from_iterator(h_mag.len(), h_mag.iter().zip(phase).map(|(&m, &p)| Complex64::from_polar(m, p)));
    let mut c = w * target(&phase);
    let mut y = adjoint_mul(v, &c);
    let mut objective = objective_from(&y, &c, h_mag, reg);
    let mut trace = if record { vec![objective] } else { Vec::new() };
    let mut iterations = 1;
    let mut converged = false;
    let mut max_increase = 0.0_f64;
    while iterations < max_iters.max(1) {
        for (p, yq) in phase.iter_mut().zip(y.iter()) {
            if yq.norm_sqr() > 0.0 {
                *p = yq.arg();
            }
        }
        let c_next = w * target(&phase);
        let y_next = adjoint_mul(v, &c_next);
        let next = objective_from(&y_next, &c_next, h_mag, reg);
        iterations += 1;
        let decrease = objective - next;
        max_increase = max_increase.max(-decrease);
        c = c_next;
        y = y_next;
        objective = next;
        if record {
            trace.push(objective);
        }
        if decrease < tol {
            converged = true;
            break;
        }
    }
    MaglsResult { filter: c, iterations, converged, objective, max_increase, trace }
}

/// Everything needed to design a filter bank.
#[derive(Debug, Clone)]
pub struct DesignSpec {
    pub geom: ArrayGeometry,
    pub design_dirs: DirectionSet,
    pub snr_db: f64,
    pub freqs: Vec<f64>,
    /// Bins at or above this frequency use magnitude least squares.
    pub cutoff_hz: f64,
    /// Head rotation `(Δθ, Δφ)` applied to the HRTF lookup.
    pub rotation: (f64, f64),
    /// Yaw of the array relative to its reference orientation.
    pub array_rotation: f64,
    pub magls: MaglsOptions,
    /// Series order of rigid-sphere transfer functions.
    pub max_order: usize,
}

impl DesignSpec {
    pub fn new(geom: ArrayGeometry, design_dirs: DirectionSet, freqs: Vec<f64>) -> Self {
        DesignSpec {
            geom,
            design_dirs,
            snr_db: 20.0,
            freqs,
            cutoff_hz: 1500.0,
            rotation: (0.0, 0.0),
            array_rotation: 0.0,
            magls: MaglsOptions::default(),
            max_order: DEFAULT_MAX_ORDER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geom.validate()?;
        if self.design_dirs.is_empty() {
            return Err(Error::InvalidArgument("design needs at least one direction".into()));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::InvalidArgument("SNR must be finite".into()));
        }
        if self.freqs.is_empty() || self.freqs.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument("frequency grid must be nonempty, finite and nonnegative".into()));
        }
        if self.freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("frequency grid must be strictly increasing".into()));
        }
        if self.cutoff_hz.is_nan() {
            return Err(Error::InvalidArgument("cutoff must be a number".into()));
        }
        Ok(())
    }

    pub fn regularization(&self) -> f64 {
        regularization_from_snr(self.snr_db)
    }
}

/// Uniform grid `start, start+step, ..` up to and including `stop`.
pub fn frequency_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    ComplexLs,
    Magls,
}

/// Design parameters recorded with a bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BankMeta {
    pub cutoff_hz: f64,
    pub snr_db: f64,
    /// Head rotation in radians.
    pub rotation: (f64, f64),
    pub array_rotation: f64,
}

/// Per-bin solver diagnostics.
#[derive(Debug, Clone, Default)]
pub struct BinDiagnostics {
    /// MagLS iterations for the left and right ear (zero for LS bins).
    pub iterations: [usize; 2],
    pub converged: [bool; 2],
    pub max_objective_increase: f64,
    pub truncation_warning: bool,
}

/// Per-frequency filters for both ears.
#[derive(Debug, Clone)]
pub struct FilterBank {
    pub freqs: Vec<f64>,
    pub left: Vec<CVector>,
    pub right: Vec<CVector>,
    pub modes: Vec<FilterMode>,
    pub meta: BankMeta,
    pub diagnostics: Vec<BinDiagnostics>,
}

impl FilterBank {
    pub fn num_mics(&self) -> usize {
        self.left.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn count_mode(&self, mode: FilterMode) -> usize {
        self.modes.iter().filter(|&&m| m == mode).count()
    }
}

/// Designs left and right filters at every frequency of `spec`.
pub fn design_filter_bank(spec: &DesignSpec, hrtf: &HrtfSet) -> Result<FilterBank> {
    spec.validate()?;
    if hrtf.model().is_none() {
        let stored = hrtf.freqs();
        let spacing = if stored.len() > 1 { stored[1] - stored[0] } else { 0.0 };
        let top = stored.last().copied().unwrap_or(0.0) + spacing;
        if let Some(&f) = spec.freqs.iter().find(|&&f| f > top) {
            return Err(Error::InvalidArgument(format!("HRTF set ends at {top} Hz, design needs {f} Hz")));
        }
    }
    let geom = rotate_array(&spec.geom, spec.array_rotation);
    let lookup = HrtfLookup::new(hrtf, &spec.design_dirs, spec.rotation);
    let reg = spec.regularization();
    let bins: Result<Vec<_>> = spec
        .freqs
        .par_iter()
        .map(|&f| design_bin(spec, &geom, &lookup, f, reg).map_err(|e| e.at_frequency(f)))
        .collect();
    let mut bank = FilterBank {
        freqs: spec.freqs.clone(),
        left: Vec::with_capacity(spec.freqs.len()),
        right: Vec::with_capacity(spec.freqs.len()),
        modes: Vec::with_capacity(spec.freqs.len()),
        meta: BankMeta {
            cutoff_hz: spec.cutoff_hz,
            snr_db: spec.snr_db,
            rotation: spec.rotation,
            array_rotation: spec.array_rotation,
        },
        diagnostics: Vec::with_capacity(spec.freqs.len()),
    };
    for (l, r, mode, diag) in bins? {
        bank.left.push(l);
        bank.right.push(r);
        bank.modes.push(mode);
        bank.diagnostics.push(diag);
    }
    Ok(bank)
}

fn design_bin(
    spec: &DesignSpec,
    geom: &ArrayGeometry,
    lookup: &HrtfLookup,
    f: f64,
    reg: f64,
) -> Result<(CVector, CVector, FilterMode, BinDiagnostics)> {
    let v = steering_matrix(geom, &spec.design_dirs, f, spec.max_order);
    let (hl, hr) = lookup.at(f);
    let w = bfbr_decompose(&v.values, reg)?;
    let mut diag = BinDiagnostics { truncation_warning: v.truncation_warning, ..Default::default() };
    if f == 0.0 || f < spec.cutoff_hz {
        let l = &w * hl.map(|x| x.conj());
        let r = &w * hr.map(|x| x.conj());
        return Ok((l, r, FilterMode::ComplexLs, diag));
    }
    let q = spec.design_dirs.len();
    let mut out = Vec::with_capacity(2);
    for (ear, h) in [hl, hr].iter().enumerate() {
        let mag: Vec<f64> = h.iter().map(|x| x.norm()).collect();
        let run = |phase: Vec<f64>| {
            variable_exchange(&v.values, &w, &mag, phase, reg, spec.magls.tol, spec.magls.max_iters, false)
        };
        let mut res = run(vec![spec.magls.init_phase; q]);
        if spec.magls.ls_warm_start {
            let ls = &w * h.map(|x| x.conj());
            let warm = run(adjoint_mul(&v.values, &ls).iter().map(|y| y.arg()).collect());
            if warm.objective < res.objective {
                res = warm;
            }
        }
        diag.iterations[ear] = res.iterations;
        diag.converged[ear] = res.converged;
        diag.max_objective_increase = diag.max_objective_increase.max(res.max_increase);
        out.push(res.filter);
    }
    let r = out.pop().expect("two ears");
    let l = out.pop().expect("two ears");
    Ok((l, r, FilterMode::Magls, diag))
}

/// Spatial samples of the array and head responses used to test whether
/// they are order limited.
#[derive(Debug, Clone)]
pub struct OrderProbe {
    pub dirs: DirectionSet,
    /// `M × P` array transfer functions.
    pub atf: CMatrix,
    /// Left and right HRTFs at the probe directions.
    pub hrtf: [CVector; 2],
}

impl OrderProbe {
    /// Samples `geom` and `hrtf` on `dirs` at `freq`.
    pub fn from_models(geom: &ArrayGeometry, hrtf: &HrtfSet, dirs: &DirectionSet, freq: f64, max_order: usize) -> Self {
        let atf = steering_matrix(geom, dirs, freq, max_order).values;
        let (l, r) = HrtfLookup::new(hrtf, dirs, (0.0, 0.0)).at(freq);
        OrderProbe { dirs: dirs.clone(), atf, hrtf: [l, r] }
    }
}

/// Relative residual of an order-limited fit above which a response is not
/// considered order limited.
pub const ORDER_LIMIT_RESIDUAL: f64 = 1e-3;
/// Bound on `‖Y†Y − I‖_F` for an aliasing-free design set.
pub const ALIASING_RESIDUAL: f64 = 1e-8;
pub const DEFAULT_SNR_THRESHOLD_DB: f64 = 20.0;

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct GeneralizationReport {
    pub atf_order: usize,
    pub hrtf_order: usize,
    pub conditions: Vec<ConditionCheck>,
}

impl GeneralizationReport {
    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }
}

impl fmt::Display for GeneralizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "generalization check (N_V={}, N_H={}): {}",
            self.atf_order,
            self.hrtf_order,
            if self.passed() { "pass" } else { "fail" }
        )?;
        for (i, c) in self.conditions.iter().enumerate() {
            writeln!(f, "  {}. {:<24} {:<4} {}", i + 1, c.name, if c.passed { "ok" } else { "FAIL" }, c.detail)?;
        }
        Ok(())
    }
}

/// Relative residual of the best order-`order` fit of each row of `values`
/// (rows are fields sampled on `dirs`).
fn order_fit_residual(rows: &[CVector], dirs: &DirectionSet, order: usize) -> Option<f64> {
    if dirs.len() < num_coeffs(order) {
        return None;
    }
    let y = sh_basis_matrix(dirs, order);
    let pinv = pseudo_inverse(&y, SVD_TRUNCATION).pinv;
    let mut worst = 0.0_f64;
    for r in rows {
        let fit = &y * (&pinv * r);
        let err = norm_sqr((r - fit).iter().map(|x| x.norm_sqr()));
        let norm = norm_sqr(r.iter().map(|x| x.norm_sqr()));
        if norm > 0.0 {
            worst = worst.max((err / norm).sqrt());
        }
    }
    Some(worst)
}

/// Evaluates the five conditions under which filters designed on the
/// design directions generalize to arbitrary sound fields.
pub fn check_generalization(
    spec: &DesignSpec,
    atf_order: usize,
    hrtf_order: usize,
    probe: Option<&OrderProbe>,
    snr_threshold_db: f64,
) -> GeneralizationReport {
    let mut conditions = Vec::with_capacity(5);
    conditions.push(ConditionCheck {
        name: "sufficient SNR",
        passed: spec.snr_db >= snr_threshold_db,
        detail: format!("{:.1} dB (threshold {:.1} dB)", spec.snr_db, snr_threshold_db),
    });

    conditions.push(match probe {
        Some(p) => {
            let rows: Vec<CVector> = (0..p.atf.nrows()).map(|m| p.atf.row(m).transpose()).collect();
            let atf = order_fit_residual(&rows, &p.dirs, atf_order);
            let hrtf = order_fit_residual(&p.hrtf, &p.dirs, hrtf_order);
            match (atf, hrtf) {
                (Some(a), Some(h)) => ConditionCheck {
                    name: "order-limited responses",
                    passed: a <= ORDER_LIMIT_RESIDUAL && h <= ORDER_LIMIT_RESIDUAL,
                    detail: format!("fit residual ATF {a:.2e}, HRTF {h:.2e} (limit {ORDER_LIMIT_RESIDUAL:.0e})"),
                },
                _ => ConditionCheck {
                    name: "order-limited responses",
                    passed: false,
                    detail: format!("probe of {} directions cannot resolve the orders", p.dirs.len()),
                },
            }
        }
        None => ConditionCheck {
            name: "order-limited responses",
            passed: true,
            detail: "assumed (no probe supplied)".into(),
        },
    });

    let q = spec.design_dirs.len();
    let required = num_coeffs(atf_order).max(num_coeffs(hrtf_order));
    conditions.push(ConditionCheck {
        name: "enough design directions",
        passed: q >= required,
        detail: format!("Q={q}, need {required}"),
    });

    conditions.push(if q >= num_coeffs(atf_order) {
        let y = sh_basis_matrix(&spec.design_dirs, atf_order);
        let pi = pseudo_inverse(&y, SVD_TRUNCATION);
        let n = y.ncols();
        let residual = (&pi.pinv * &y - DMatrix::<Complex64>::identity(n, n)).norm();
        ConditionCheck {
            name: "aliasing-free design set",
            passed: residual < ALIASING_RESIDUAL && pi.condition.is_finite(),
            detail: format!("cond {:.3e}, |Y+Y - I|_F {:.2e}", pi.condition, residual),
        }
    } else {
        ConditionCheck {
            name: "aliasing-free design set",
            passed: false,
            detail: format!("Q={q} < {} coefficients", num_coeffs(atf_order)),
        }
    });

    conditions.push(ConditionCheck {
        name: "ATF order covers HRTF",
        passed: atf_order >= hrtf_order,
        detail: format!("N_V={atf_order}, N_H={hrtf_order}"),
    });

    GeneralizationReport { atf_order, hrtf_order, conditions }
}

#[derive(Debug, Serialize, Deserialize)]
struct BankHeader {
    #[serde(rename = "M")]
    m: usize,
    freqs_hz: Vec<f64>,
    /// `null` for an infinite cutoff.
    cutoff_hz: Option<f64>,
    snr_db: f64,
    rotation_deg: [f64; 2],
    #[serde(default)]
    array_rotation_deg: f64,
    modes: Vec<FilterMode>,
}

pub const FILTER_HEADER: &str = "filters.json";
pub const FILTER_PAYLOAD: &str = "filters.c64";

/// Writes `filters.json` and `filters.c64` (complex float32 pairs laid out
/// `[freq][ear][mic]`) into `dir`.
pub fn save_filter_bank(bank: &FilterBank, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let header = BankHeader {
        m: bank.num_mics(),
        freqs_hz: bank.freqs.clone(),
        cutoff_hz: bank.meta.cutoff_hz.is_finite().then_some(bank.meta.cutoff_hz),
        snr_db: bank.meta.snr_db,
        rotation_deg: [bank.meta.rotation.0.to_degrees(), bank.meta.rotation.1.to_degrees()],
        array_rotation_deg: bank.meta.array_rotation.to_degrees(),
        modes: bank.modes.clone(),
    };
    let mut bytes = Vec::with_capacity(bank.len() * 2 * bank.num_mics() * 8);
    for (l, r) in bank.left.iter().zip(&bank.right) {
        for c in l.iter().chain(r.iter()) {
            bytes.extend_from_slice(&(c.re as f32).to_le_bytes());
            bytes.extend_from_slice(&(c.im as f32).to_le_bytes());
        }
    }
    write_atomic(&dir.join(FILTER_PAYLOAD), &bytes)?;
    write_atomic(&dir.join(FILTER_HEADER), serde_json::to_string_pretty(&header).expect("header serialises").as_bytes())
}

pub fn load_filter_bank(dir: &Path) -> Result<FilterBank> {
    let header_path = dir.join(FILTER_HEADER);
    let text = std::fs::read_to_string(&header_path).map_err(|e| Error::io(&header_path, e))?;
    let header: BankHeader = serde_json::from_str(&text).map_err(|e| Error::json(&header_path, e))?;
    let payload_path = dir.join(FILTER_PAYLOAD);
    let bytes = std::fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let f = header.freqs_hz.len();
    let m = header.m;
    if bytes.len() != f * 2 * m * 8 || header.modes.len() != f {
        return Err(Error::MalformedContainer(format!(
            "{}: expected {} bytes for {f} frequencies × 2 ears × {m} mics",
            payload_path.display(),
            f * 2 * m * 8
        )));
    }
    let vals: Vec<Complex64> = bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    let mut left = Vec::with_capacity(f);
    let mut right = Vec::with_capacity(f);
    for k in 0..f {
        let base = k * 2 * m;
        left.push(CVector::from_column_slice(&vals[base..base + m]));
        right.push(CVector::from_column_slice(&vals[base + m..base + 2 * m]));
    }
    Ok(FilterBank {
        freqs: header.freqs_hz,
        left,
        right,
        modes: header.modes,
        meta: BankMeta {
            cutoff_hz: header.cutoff_hz.unwrap_or(f64::INFINITY),
            snr_db: header.snr_db,
            rotation: (header.rotation_deg[0].to_radians(), header.rotation_deg[1].to_radians()),
            array_rotation: header.array_rotation_deg.to_radians(),
        },
        diagnostics: vec![BinDiagnostics::default(); f],
    })
}
