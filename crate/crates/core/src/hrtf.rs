//! Head-related transfer function sets: storage, directional lookup with
//! head rotation, SH coefficients and an analytic rigid-sphere head.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{series_order, wavenumber, ArrayGeometry, ArrayKind, Microphone, SteeringEvaluator};
use crate::dsp::{bin_frequencies, RealFft};
use crate::error::{Error, Result};
use crate::io::{ensure_dir, write_atomic};
use crate::linalg::{CMatrix, CVector};
use crate::sh::{Direction, DirectionSet, SchemeTag, ShTransform, ShVector};

pub const DEFAULT_HEAD_RADIUS: f64 = 0.0875;
/// Ear azimuth of the sphere head, left ear at `+`, right ear at `-`.
pub const DEFAULT_EAR_AZIMUTH: f64 = 100.0 * PI / 180.0;
/// Sample rate assigned to analytic sets.
pub const DEFAULT_SAMPLE_RATE: f64 = 48_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ear {
    Left,
    Right,
}

/// Rigid sphere with two point receivers on its horizontal equator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereHeadModel {
    pub radius: f64,
    /// Azimuths of the left and right ear.
    pub ear_azimuths: (f64, f64),
}

impl SphereHeadModel {
    pub fn new(radius: f64) -> Self {
        SphereHeadModel { radius, ear_azimuths: (DEFAULT_EAR_AZIMUTH, -DEFAULT_EAR_AZIMUTH) }
    }

    fn geometry(&self) -> ArrayGeometry {
        let ear = |phi| Microphone { radius: self.radius, direction: Direction::horizontal(phi) };
        ArrayGeometry {
            name: "sphere-head".into(),
            kind: ArrayKind::RigidSphere,
            sphere_radius: self.radius,
            mics: vec![ear(self.ear_azimuths.0), ear(self.ear_azimuths.1)],
        }
    }

    /// Surface pressure at both ears for plane waves from `dirs`.
    pub fn response(&self, dirs: &[Direction], freq: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let geom = self.geometry();
        let order = series_order(wavenumber(freq) * self.radius);
        let eval = SteeringEvaluator::new(&geom, freq, order);
        let mut scratch = Vec::with_capacity(order + 1);
        let mut left = Vec::with_capacity(dirs.len());
        let mut right = Vec::with_capacity(dirs.len());
        for d in dirs {
            left.push(eval.transfer(0, d, &mut scratch));
            right.push(eval.transfer(1, d, &mut scratch));
        }
        (left, right)
    }
}

/// Impulse responses as read from a container, kept for lossless rewrites.
#[derive(Debug, Clone)]
struct RawContainer {
    ir_length: usize,
    grid_deg: Vec<(f64, f64, Option<f64>)>,
    irs: Vec<f32>,
}

/// Two-ear transfer functions on a direction grid and frequency axis.
#[derive(Debug, Clone)]
pub struct HrtfSet {
    grid: DirectionSet,
    freqs: Vec<f64>,
    /// `Q_grid × F`.
    left: CMatrix,
    right: CMatrix,
    sample_rate: f64,
    metadata: BTreeMap<String, String>,
    model: Option<SphereHeadModel>,
    raw: Option<RawContainer>,
}

impl HrtfSet {
    pub fn new(grid: DirectionSet, freqs: Vec<f64>, left: CMatrix, right: CMatrix, sample_rate: f64) -> Result<Self> {
        let shape = (grid.len(), freqs.len());
        if left.shape() != shape || right.shape() != shape {
            return Err(Error::InvalidArgument(format!(
                "HRTF matrices must be {}×{}, got {:?} and {:?}",
                shape.0,
                shape.1,
                left.shape(),
                right.shape()
            )));
        }
        if freqs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("HRTF frequencies must be strictly increasing".into()));
        }
        Ok(HrtfSet { grid, freqs, left, right, sample_rate, metadata: BTreeMap::new(), model: None, raw: None })
    }

    /// Builds a set from impulse responses laid out `[direction][ear][sample]`.
    pub fn from_impulse_responses(grid: DirectionSet, sample_rate: f64, ir_length: usize, irs: &[f32]) -> Result<Self> {
        let q = grid.len();
        if irs.len() != q * 2 * ir_length || ir_length == 0 {
            return Err(Error::MalformedContainer(format!(
                "expected {} samples ({} directions × 2 ears × {}), found {}",
                q * 2 * ir_length,
                q,
                ir_length,
                irs.len()
            )));
        }
        let fft = RealFft::new(ir_length);
        let freqs = bin_frequencies(ir_length, sample_rate);
        let f = freqs.len();
        let mut left = CMatrix::zeros(q, f);
        let mut right = CMatrix::zeros(q, f);
        let mut buf = vec![0.0; ir_length];
        for d in 0..q {
            for (ear, target) in [&mut left, &mut right].into_iter().enumerate() {
                let start = (d * 2 + ear) * ir_length;
                for (b, &s) in buf.iter_mut().zip(&irs[start..start + ir_length]) {
                    *b = s as f64;
                }
                for (k, v) in fft.forward(&buf).into_iter().enumerate() {
                    target[(d, k)] = v;
                }
            }
        }
        let mut set = HrtfSet::new(grid, freqs, left, right, sample_rate)?;
        set.raw = Some(RawContainer {
            ir_length,
            grid_deg: set
                .grid
                .directions()
                .iter()
                .enumerate()
                .map(|(i, d)| (d.theta.to_degrees(), d.phi.to_degrees(), set.grid.weights().map(|w| w[i])))
                .collect(),
            irs: irs.to_vec(),
        });
        Ok(set)
    }

    pub fn grid(&self) -> &DirectionSet {
        &self.grid
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn left(&self) -> &CMatrix {
        &self.left
    }

    pub fn right(&self) -> &CMatrix {
        &self.right
    }

    pub fn ear(&self, ear: Ear) -> &CMatrix {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn name(&self) -> &str {
        self.metadata.get("name").map(String::as_str).unwrap_or("")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.metadata.insert("name".into(), name.into());
        self
    }

    /// The analytic head model, when the set was generated from one.
    pub fn model(&self) -> Option<&SphereHeadModel> {
        self.model.as_ref()
    }

    /// Index of the stored frequency closest to `freq`.
    pub fn nearest_bin(&self, freq: f64) -> usize {
        let pos = self.freqs.partition_point(|&f| f < freq);
        if pos == 0 {
            0
        } else if pos == self.freqs.len() {
            pos - 1
        } else if (self.freqs[pos] - freq) < (freq - self.freqs[pos - 1]) {
            pos
        } else {
            pos - 1
        }
    }

    /// Index of the grid direction closest to `dir` (largest dot product).
    pub fn nearest_direction(&self, dir: &Direction) -> usize {
        let u = dir.unit_vector();
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, g) in self.grid.directions().iter().enumerate() {
            let v = g.unit_vector();
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            if dot > best.0 {
                best = (dot, i);
            }
        }
        best.1
    }

    /// Stored left and right impulse responses of grid direction `index`,
    /// available for sets read from a container.
    pub fn stored_impulse_response(&self, index: usize) -> Option<(&[f32], &[f32])> {
        let raw = self.raw.as_ref()?;
        let l = raw.ir_length;
        let base = index * 2 * l;
        Some((&raw.irs[base..base + l], &raw.irs[base + l..base + 2 * l]))
    }

    /// Impulse responses `[direction][ear][sample]`, either as loaded or by
    /// inverse DFT when the frequency axis is a full real-DFT grid.
    pub fn impulse_responses(&self) -> Result<(usize, Vec<f32>)> {
        if let Some(raw) = &self.raw {
            return Ok((raw.ir_length, raw.irs.clone()));
        }
        let f = self.freqs.len();
        let nfft = 2 * (f.max(1) - 1);
        let on_grid = nfft > 0
            && self.freqs.iter().zip(bin_frequencies(nfft, self.sample_rate)).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b));
        if !on_grid {
            return Err(Error::InvalidArgument(
                "impulse responses need a frequency axis of k·fs/nfft, k = 0..=nfft/2".into(),
            ));
        }
        let fft = RealFft::new(nfft);
        let mut irs = Vec::with_capacity(self.grid.len() * 2 * nfft);
        for d in 0..self.grid.len() {
            for m in [&self.left, &self.right] {
                let half: Vec<Complex64> = m.row(d).iter().copied().collect();
                irs.extend(fft.inverse(&half).into_iter().map(|x| x as f32));
            }
        }
        Ok((nfft, irs))
    }
}

/// Rigid-sphere head evaluated on `grid` at `freqs`.
pub fn sphere_head_surrogate(radius: f64, grid: &DirectionSet, freqs: &[f64], ear_azimuths: (f64, f64)) -> Result<HrtfSet> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument("head radius must be positive".into()));
    }
    let model = SphereHeadModel { radius, ear_azimuths };
    let columns: Vec<(Vec<Complex64>, Vec<Complex64>)> =
        freqs.par_iter().map(|&f| model.response(grid.directions(), f)).collect();
    let q = grid.len();
    let mut left = CMatrix::zeros(q, freqs.len());
    let mut right = CMatrix::zeros(q, freqs.len());
    for (k, (l, r)) in columns.into_iter().enumerate() {
        left.column_mut(k).copy_from_slice(&l);
        right.column_mut(k).copy_from_slice(&r);
    }
    let mut set = HrtfSet::new(grid.clone(), freqs.to_vec(), left, right, DEFAULT_SAMPLE_RATE)?
        .with_name(format!("sphere-head-{radius}"));
    set.model = Some(model);
    Ok(set)
}

/// Nearest-neighbour lookup of a fixed set of (rotated) directions, reused
/// across frequencies.
pub struct HrtfLookup<'a> {
    set: &'a HrtfSet,
    rotated: Vec<Direction>,
    indices: Vec<usize>,
}

impl<'a> HrtfLookup<'a> {
    /// Each design direction is shifted by `(Δθ, Δφ)` before the lookup.
    pub fn new(set: &'a HrtfSet, dirs: &DirectionSet, rotation: (f64, f64)) -> Self {
        let rotated: Vec<Direction> = dirs.directions().iter().map(|d| d.shifted(rotation.0, rotation.1)).collect();
        let indices = if set.model.is_some() { Vec::new() } else { rotated.iter().map(|d| set.nearest_direction(d)).collect() };
        HrtfLookup { set, rotated, indices }
    }

    pub fn rotated_directions(&self) -> &[Direction] {
        &self.rotated
    }

    /// Grid indices used for each direction (empty for analytic sets).
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Left and right HRTF vectors at `freq`. Stored sets use the nearest
    /// frequency bin; analytic sets are evaluated exactly.
    pub fn at(&self, freq: f64) -> (CVector, CVector) {
        if let Some(model) = &self.set.model {
            let (l, r) = model.response(&self.rotated, freq);
            return (CVector::from_vec(l), CVector::from_vec(r));
        }
        let k = self.set.nearest_bin(freq);
        let l = CVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| self.set.left[(i, k)]));
        let r = CVector::from_iterator(self.indices.len(), self.indices.iter().map(|&i| self.set.right[(i, k)]));
        (l, r)
    }
}

/// HRTF vectors at `dirs` shifted by `rotation`, at `freq`.
pub fn hrtf_vector(set: &HrtfSet, dirs: &DirectionSet, freq: f64, rotation: (f64, f64)) -> (CVector, CVector) {
    HrtfLookup::new(set, dirs, rotation).at(freq)
}

/// Per-frequency SH coefficients of both ears.
#[derive(Debug, Clone)]
pub struct HrtfShCoeffs {
    pub order: usize,
    pub freqs: Vec<f64>,
    pub left: Vec<ShVector>,
    pub right: Vec<ShVector>,
}

impl HrtfShCoeffs {
    pub fn ear(&self, ear: Ear) -> &[ShVector] {
        match ear {
            Ear::Left => &self.left,
            Ear::Right => &self.right,
        }
    }

    pub fn nearest_bin(&self, freq: f64) -> usize {
        let mut best = 0;
        for (i, f) in self.freqs.iter().enumerate() {
            if (f - freq).abs() < (self.freqs[best] - freq).abs() {
                best = i;
            }
        }
        best
    }
}

/// SH transform of both ears at every stored frequency.
pub fn hrtf_to_sh(set: &HrtfSet, order: usize) -> Result<HrtfShCoeffs> {
    let transform = ShTransform::new(&set.grid, order)?;
    let per_freq: Result<Vec<(ShVector, ShVector)>> = (0..set.freqs.len())
        .into_par_iter()
        .map(|k| {
            let l: Vec<Complex64> = set.left.column(k).iter().copied().collect();
            let r: Vec<Complex64> = set.right.column(k).iter().copied().collect();
            Ok((transform.forward(&l)?, transform.forward(&r)?))
        })
        .collect();
    let (left, right) = per_freq?.into_iter().unzip();
    Ok(HrtfShCoeffs { order, freqs: set.freqs.clone(), left, right })
}

/// Options for [`load_hrtf_with`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Grids with fewer directions are rejected.
    pub min_directions: usize,
    /// Reject containers recorded at another rate.
    pub expected_sample_rate: Option<f64>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions { min_directions: 4, expected_sample_rate: None }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct MetaFile {
    name: String,
    sample_rate: f64,
    ir_length: usize,
    grid: Vec<GridEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GridEntry {
    theta_deg: f64,
    phi_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
}

pub const META_FILE: &str = "meta.json";
pub const IRS_FILE: &str = "irs.f32";

pub fn load_hrtf(dir: &Path) -> Result<HrtfSet> {
    load_hrtf_with(dir, &LoadOptions::default())
}

pub fn load_hrtf_with(dir: &Path, opts: &LoadOptions) -> Result<HrtfSet> {
    let meta_path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: MetaFile =
        serde_json::from_str(&text).map_err(|e| Error::MalformedContainer(format!("{}: {e}", meta_path.display())))?;
    if !(meta.sample_rate > 0.0) {
        return Err(Error::MalformedContainer(format!("sample rate {} is not positive", meta.sample_rate)));
    }
    if let Some(expected) = opts.expected_sample_rate {
        if (expected - meta.sample_rate).abs() > 1e-9 * expected {
            return Err(Error::SampleRateMismatch { expected, found: meta.sample_rate });
        }
    }
    if meta.grid.len() < opts.min_directions {
        return Err(Error::GridDegenerate { count: meta.grid.len(), min: opts.min_directions });
    }
    let irs_path = dir.join(IRS_FILE);
    let bytes = std::fs::read(&irs_path).map_err(|e| Error::io(&irs_path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::MalformedContainer(format!("{} is not a whole number of float32 values", irs_path.display())));
    }
    let irs: Vec<f32> = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();

    let directions: Vec<Direction> = meta.grid.iter().map(|g| Direction::from_degrees(g.theta_deg, g.phi_deg)).collect();
    let weights: Option<Vec<f64>> = meta.grid.iter().map(|g| g.weight).collect();
    let grid = DirectionSet::new(directions, weights, SchemeTag::TableImport)
        .map_err(|e| Error::MalformedContainer(e.to_string()))?;
    let mut set = HrtfSet::from_impulse_responses(grid, meta.sample_rate, meta.ir_length, &irs)?.with_name(meta.name);
    if let Some(raw) = set.raw.as_mut() {
        raw.grid_deg = meta.grid.iter().map(|g| (g.theta_deg, g.phi_deg, g.weight)).collect();
    }
    Ok(set)
}

/// Writes `set` as a container directory (created if missing).
pub fn write_hrtf(set: &HrtfSet, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    let (ir_length, irs) = set.impulse_responses()?;
    let grid = match &set.raw {
        Some(raw) => raw
            .grid_deg
            .iter()
            .map(|&(t, p, w)| GridEntry { theta_deg: t, phi_deg: p, weight: w })
            .collect(),
        None => set
            .grid
            .directions()
            .iter()
            .enumerate()
            .map(|(i, d)| GridEntry {
                theta_deg: d.theta.to_degrees(),
                phi_deg: d.phi.to_degrees(),
                weight: set.grid.weights().map(|w| w[i]),
            })
            .collect(),
    };
    let meta = MetaFile { name: set.name().to_string(), sample_rate: set.sample_rate, ir_length, grid };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    let mut bytes = Vec::with_capacity(irs.len() * 4);
    for v in &irs {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(&dir.join(IRS_FILE), &bytes)?;
    write_atomic(&dir.join(META_FILE), json.as_bytes())
}

/// Resolves a CLI HRTF source: `surrogate:<radius_m>` or a container path.
/// Analytic sets are sampled on `grid` at `freqs`.
pub fn resolve_hrtf_source(spec: &str, grid: &DirectionSet, freqs: &[f64]) -> Result<HrtfSet> {
    if let Some(rest) = spec.strip_prefix("surrogate") {
        let radius = match rest.strip_prefix(':') {
            Some(r) => r
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad surrogate radius '{r}'")))?,
            None if rest.is_empty() => DEFAULT_HEAD_RADIUS,
            None => return Err(Error::InvalidArgument(format!("unknown HRTF source '{spec}'"))),
        };
        return sphere_head_surrogate(radius, grid, freqs, (DEFAULT_EAR_AZIMUTH, -DEFAULT_EAR_AZIMUTH));
    }
    load_hrtf(Path::new(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sh::{equal_angle_sampling, sft_inverse, spiral_sampling};

    fn surrogate(freqs: &[f64]) -> HrtfSet {
        sphere_head_surrogate(DEFAULT_HEAD_RADIUS, &spiral_sampling(240), freqs, (DEFAULT_EAR_AZIMUTH, -DEFAULT_EAR_AZIMUTH))
            .unwrap()
    }

    #[test]
    fn zero_frequency_is_unity() {
        let set = surrogate(&[0.0]);
        assert!(set.left().iter().chain(set.right().iter()).all(|x| (x - 1.0).norm() < 1e-15));
    }

    #[test]
    fn head_shadow_on_left_axis() {
        let model = SphereHeadModel::new(DEFAULT_HEAD_RADIUS);
        let (l, r) = model.response(&[Direction::horizontal(DEFAULT_EAR_AZIMUTH)], 3000.0);
        assert!(l[0].norm() > r[0].norm());
    }

    #[test]
    fn mirror_symmetry() {
        let set = surrogate(&[500.0, 2000.0, 7000.0]);
        let model = *set.model().unwrap();
        for d in set.grid().directions() {
            let mirrored = Direction::new(d.theta, -d.phi);
            for f in [500.0, 2000.0, 7000.0] {
                let (l, _) = model.response(&[*d], f);
                let (_, r) = model.response(&[mirrored], f);
                assert!((l[0] - r[0]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plain_and_grid_lookup() {
        let freqs = [1000.0, 2000.0];
        let set = surrogate(&freqs);
        let (l, r) = hrtf_vector(&set, set.grid(), 2000.0, (0.0, 0.0));
        for q in 0..set.grid().len() {
            assert_eq!(l[q], set.left()[(q, 1)]);
            assert_eq!(r[q], set.right()[(q, 1)]);
        }
    }

    #[test]
    fn rotated_analytic_lookup() {
        let set = surrogate(&[1500.0]);
        let dirs = spiral_sampling(50);
        let rot = 30f64.to_radians();
        let (l, _) = hrtf_vector(&set, &dirs, 1500.0, (0.0, rot));
        let shifted: Vec<Direction> = dirs.directions().iter().map(|d| d.shifted(0.0, rot)).collect();
        let (expect, _) = set.model().unwrap().response(&shifted, 1500.0);
        for (a, b) in l.iter().zip(&expect) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_round_trip_uses_same_cells() {
        let grid = equal_angle_sampling(6);
        let freqs = vec![0.0, 100.0];
        let q = grid.len();
        let left = CMatrix::from_fn(q, 2, |i, k| Complex64::new(i as f64, k as f64));
        let set = HrtfSet::new(grid.clone(), freqs, left.clone(), left, 1000.0).unwrap();
        let rot = PI / 7.0;
        let once = HrtfLookup::new(&set, &grid, (0.0, rot));
        let rotated = DirectionSet::from_directions(once.rotated_directions().to_vec());
        let back = HrtfLookup::new(&set, &rotated, (0.0, -rot));
        let plain = HrtfLookup::new(&set, &grid, (0.0, 0.0));
        assert_eq!(back.indices(), plain.indices());
    }

    #[test]
    fn nearest_bin_selection() {
        let set = HrtfSet::new(
            DirectionSet::from_directions(vec![Direction::new(0.0, 0.0)]),
            vec![0.0, 100.0, 200.0],
            CMatrix::zeros(1, 3),
            CMatrix::zeros(1, 3),
            400.0,
        )
        .unwrap();
        assert_eq!(set.nearest_bin(-5.0), 0);
        assert_eq!(set.nearest_bin(140.0), 1);
        assert_eq!(set.nearest_bin(160.0), 2);
        assert_eq!(set.nearest_bin(1e6), 2);
    }

    #[test]
    fn constant_field_has_only_dc_coefficient() {
        let grid = equal_angle_sampling(4);
        let q = grid.len();
        let c = Complex64::new(0.7, -0.2);
        let m = CMatrix::from_element(q, 1, c);
        let set = HrtfSet::new(grid, vec![100.0], m.clone(), m, 48000.0).unwrap();
        let sh = hrtf_to_sh(&set, 4).unwrap();
        let coeffs = sh.left[0].coeffs();
        assert!((coeffs[0] - c * (4.0 * PI).sqrt()).norm() < 1e-12);
        assert!(coeffs[1..].iter().all(|x| x.norm() < 1e-12));
    }

    #[test]
    fn surrogate_sh_round_trip_at_order_14() {
        let grid = equal_angle_sampling(20);
        let set = sphere_head_surrogate(DEFAULT_HEAD_RADIUS, &grid, &[1000.0], (DEFAULT_EAR_AZIMUTH, -DEFAULT_EAR_AZIMUTH))
            .unwrap();
        let sh = hrtf_to_sh(&set, 14).unwrap();
        let synth = sft_inverse(&sh.left[0], &grid);
        let err: f64 = synth.iter().zip(set.left().column(0).iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm: f64 = set.left().column(0).iter().map(|x| x.norm_sqr()).sum();
        assert!(10.0 * (err / norm).log10() < -40.0);
    }

    #[test]
    fn rejects_unsorted_frequencies() {
        let grid = DirectionSet::from_directions(vec![Direction::new(0.0, 0.0)]);
        assert!(HrtfSet::new(grid, vec![2.0, 1.0], CMatrix::zeros(1, 2), CMatrix::zeros(1, 2), 8.0).is_err());
    }

    #[test]
    fn surrogate_source_parsing() {
        let grid = spiral_sampling(8);
        let set = resolve_hrtf_source("surrogate:0.09", &grid, &[100.0]).unwrap();
        assert_eq!(set.model().unwrap().radius, 0.09);
        assert!(resolve_hrtf_source("surrogate:abc", &grid, &[100.0]).is_err());
    }
}
