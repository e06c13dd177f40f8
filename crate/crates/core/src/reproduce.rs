//! Simulation study of the six-microphone semi-circular array: error
//! curves versus frequency and perceptual measures versus azimuth, emitted
//! as [`MetricCurve`]s.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::array::{semi_circular_preset, series_order, steering_matrix, wavenumber, ArrayGeometry, DEFAULT_MAX_ORDER};
use crate::design::{design_filter_bank, frequency_grid, DesignSpec, FilterBank};
use crate::dsp::{bin_frequencies, RealFft};
use crate::error::{Error, Result};
use crate::hrtf::{hrtf_to_sh, resolve_hrtf_source, HrtfLookup, HrtfSet};
use crate::io::ensure_dir;
use crate::linalg::CVector;
use crate::metrics::{
    effective_sh_order, estimate_ild, estimate_itd, itd_error, ild_error, magnitude_nmse, nmse, write_curves, Axis,
    MetricCurve, ITD_LOWPASS_HZ,
};
use crate::render::interpolate;
use crate::sh::{equal_angle_sampling, spiral_sampling, DirectionSet, ShTransform, ShVector, Direction};
use crate::signal::BinauralSignal;

pub const PRESET_MICS: usize = 6;
pub const PRESET_RADIUS: f64 = 0.1;
pub const PRESET_DIRECTIONS: usize = 240;
pub const ROTATIONS_DEG: [f64; 3] = [0.0, 30.0, 60.0];
/// Order of the equal-angle grid used for effective-order analysis.
pub const ANALYSIS_ORDER: usize = 30;
pub const ANALYSIS_PERCENT: f64 = 99.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    /// Normalized error of complex least-squares filters versus frequency.
    Fig4,
    /// Effective SH order of the HRTF and of one array transfer function.
    Fig5,
    /// Magnitude error of least-squares and MagLS filters under head rotation.
    Fig6,
    /// ITD and ITD error versus azimuth.
    Fig7,
    /// ILD and ILD error versus azimuth.
    Fig8,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig4, Figure::Fig5, Figure::Fig6, Figure::Fig7, Figure::Fig8];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
            Figure::Fig7 => "fig7",
            Figure::Fig8 => "fig8",
        }
    }

    pub fn rotates(self) -> bool {
        matches!(self, Figure::Fig6 | Figure::Fig7 | Figure::Fig8)
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown figure '{s}'")))
    }
}

/// Parameters of the study; [`StudyConfig::default`] is the six-microphone
/// preset.
#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub geom: ArrayGeometry,
    pub design_dirs: DirectionSet,
    pub freqs: Vec<f64>,
    pub snr_db: f64,
    /// Crossover used for MagLS filters in the azimuth studies.
    pub cutoff_hz: f64,
    pub hrtf_source: String,
    /// Transform size of the binaural impulse responses.
    pub nfft: usize,
    pub max_order: usize,
    pub azimuths_deg: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            geom: semi_circular_preset(PRESET_MICS, PRESET_RADIUS).expect("valid preset"),
            design_dirs: spiral_sampling(PRESET_DIRECTIONS),
            freqs: frequency_grid(75.0, 10000.0, 75.0),
            snr_db: 20.0,
            cutoff_hz: 1500.0,
            hrtf_source: "surrogate".into(),
            nfft: 2048,
            max_order: DEFAULT_MAX_ORDER,
            azimuths_deg: (0..360).map(f64::from).collect(),
        }
    }
}

type BankKey = (u64, u64);

/// A configured study with its HRTF set and a cache of designed banks.
pub struct Study {
    pub config: StudyConfig,
    pub hrtf: HrtfSet,
    banks: Mutex<HashMap<BankKey, Arc<FilterBank>>>,
}

impl Study {
    pub fn new(config: StudyConfig) -> Result<Self> {
        let hrtf = resolve_hrtf_source(&config.hrtf_source, &config.design_dirs, &config.freqs)?;
        Ok(Study { config, hrtf, banks: Mutex::new(HashMap::new()) })
    }

    pub fn with_hrtf(config: StudyConfig, hrtf: HrtfSet) -> Self {
        Study { config, hrtf, banks: Mutex::new(HashMap::new()) }
    }

    pub fn sample_rate(&self) -> f64 {
        self.hrtf.sample_rate()
    }

    /// Filter bank with the given crossover and head yaw in degrees.
    /// `f64::INFINITY` gives complex least squares in every bin.
    pub fn bank(&self, cutoff_hz: f64, rotation_deg: f64) -> Result<Arc<FilterBank>> {
        let key = (cutoff_hz.to_bits(), rotation_deg.to_bits());
        if let Some(b) = self.banks.lock().expect("bank cache").get(&key) {
            return Ok(b.clone());
        }
        let mut spec = DesignSpec::new(self.config.geom.clone(), self.config.design_dirs.clone(), self.config.freqs.clone());
        spec.snr_db = self.config.snr_db;
        spec.cutoff_hz = cutoff_hz;
        spec.rotation = (0.0, rotation_deg.to_radians());
        spec.max_order = self.config.max_order;
        log::info!("designing bank: cutoff {cutoff_hz} Hz, rotation {rotation_deg}°");
        let bank = Arc::new(design_filter_bank(&spec, &self.hrtf)?);
        self.banks.lock().expect("bank cache").insert(key, bank.clone());
        Ok(bank)
    }

    /// Per-ear error of `bank` on the design grid, against HRTFs rotated by
    /// `rotation_deg`. `magnitude` selects the magnitude-only measure.
    pub fn error_curves(&self, bank: &FilterBank, rotation_deg: f64, magnitude: bool, method: &str) -> Result<Vec<MetricCurve>> {
        let metric = if magnitude { "mag_nmse_db" } else { "nmse_db" };
        let lookup = HrtfLookup::new(&self.hrtf, &self.config.design_dirs, (0.0, rotation_deg.to_radians()));
        let rows: Result<Vec<(f64, f64)>> = bank
            .freqs
            .par_iter()
            .enumerate()
            .map(|(k, &f)| {
                let v = steering_matrix(&self.config.geom, &self.config.design_dirs, f, self.config.max_order).values;
                let (hl, hr) = lookup.at(f);
                let measure = if magnitude { magnitude_nmse } else { nmse };
                let l = measure(&v, &bank.left[k], &hl, self.config.snr_db).map_err(|e| e.at_frequency(f))?;
                let r = measure(&v, &bank.right[k], &hr, self.config.snr_db).map_err(|e| e.at_frequency(f))?;
                Ok((l, r))
            })
            .collect();
        let rows = rows?;
        let mut left = MetricCurve::new(Axis::FrequencyHz, metric, method);
        let mut right = MetricCurve::new(Axis::FrequencyHz, metric, method);
        for (&f, (l, r)) in bank.freqs.iter().zip(rows) {
            left.push(f, l, Some("left"));
            right.push(f, r, Some("right"));
        }
        Ok(vec![left, right])
    }

    fn azimuth_dirs(&self) -> DirectionSet {
        DirectionSet::from_directions(
            self.config.azimuths_deg.iter().map(|&a| Direction::from_degrees(90.0, a)).collect(),
        )
    }

    /// Binaural impulse responses for a unit plane wave from each study
    /// azimuth: the rotated HRTFs when `bank` is `None`, otherwise the
    /// array response filtered by `bank`.
    pub fn plane_wave_responses(&self, bank: Option<&FilterBank>, rotation_deg: f64) -> Result<Vec<BinauralSignal>> {
        let nfft = self.config.nfft;
        if nfft < 2 || !nfft.is_power_of_two() {
            return Err(Error::InvalidFftSize(nfft));
        }
        let fs = self.sample_rate();
        let dirs = self.azimuth_dirs();
        let grid = bin_frequencies(nfft, fs);
        let lookup = HrtfLookup::new(&self.hrtf, &dirs, (0.0, rotation_deg.to_radians()));
        let filters = bank.map(|b| {
            let pick = |side: &[CVector], m: usize| -> Vec<Complex64> { side.iter().map(|c| c[m]).collect() };
            let m = b.num_mics();
            ((0..m).map(|i| pick(&b.left, i)).collect::<Vec<_>>(), (0..m).map(|i| pick(&b.right, i)).collect::<Vec<_>>())
        });
        // spectra[k] = (left per direction, right per direction)
        let spectra: Vec<(Vec<Complex64>, Vec<Complex64>)> = grid
            .par_iter()
            .map(|&f| match (&filters, bank) {
                (Some((fl, fr)), Some(b)) => {
                    let order = self.config.max_order.max(series_order(wavenumber(f) * self.config.geom.max_radius()));
                    let v = steering_matrix(&self.config.geom, &dirs, f, order).values;
                    let cl: Vec<Complex64> = fl.iter().map(|vals| interpolate(&b.freqs, vals, f).conj()).collect();
                    let cr: Vec<Complex64> = fr.iter().map(|vals| interpolate(&b.freqs, vals, f).conj()).collect();
                    let apply = |c: &[Complex64]| -> Vec<Complex64> {
                        (0..dirs.len()).map(|q| (0..c.len()).map(|m| c[m] * v[(m, q)]).sum()).collect()
                    };
                    (apply(&cl), apply(&cr))
                }
                _ => {
                    let (l, r) = lookup.at(f);
                    (l.iter().copied().collect(), r.iter().copied().collect())
                }
            })
            .collect();
        let fft = RealFft::new(nfft);
        let to_time = |half: Vec<Complex64>| -> Vec<f64> {
            let raw = fft.inverse(&half);
            let mut out = vec![0.0; nfft];
            for (t, v) in raw.into_iter().enumerate() {
                out[(t + nfft / 2) % nfft] = v;
            }
            out
        };
        Ok((0..dirs.len())
            .into_par_iter()
            .map(|q| BinauralSignal {
                sample_rate: fs,
                left: to_time(spectra.iter().map(|s| s.0[q]).collect()),
                right: to_time(spectra.iter().map(|s| s.1[q]).collect()),
            })
            .collect())
    }

    /// Normalized error of complex least-squares filters, both ears.
    pub fn fig4(&self) -> Result<Vec<MetricCurve>> {
        let bank = self.bank(f64::INFINITY, 0.0)?;
        self.error_curves(&bank, 0.0, false, "bsm")
    }

    /// Effective SH order of the left-ear HRTF and of the first array
    /// transfer function, with `⌈kr⌉` for the array radius.
    pub fn fig5(&self) -> Result<Vec<MetricCurve>> {
        let freqs = &self.config.freqs;
        let grid = equal_angle_sampling(ANALYSIS_ORDER);
        let transform = ShTransform::new(&grid, ANALYSIS_ORDER)?;
        let stored_sh = match self.hrtf.model() {
            Some(_) => None,
            None => Some(hrtf_to_sh(&self.hrtf, ANALYSIS_ORDER)?),
        };
        let lookup = HrtfLookup::new(&self.hrtf, &grid, (0.0, 0.0));
        let rows: Result<Vec<(usize, usize)>> = freqs
            .par_iter()
            .map(|&f| {
                let hrtf_coeffs: ShVector = match &stored_sh {
                    Some(sh) => sh.left[sh.nearest_bin(f)].clone(),
                    None => transform.forward(lookup.at(f).0.as_slice())?,
                };
                let v = steering_matrix(&self.config.geom, &grid, f, self.config.max_order).values;
                let atf: Vec<Complex64> = v.row(0).iter().copied().collect();
                let atf_coeffs = transform.forward(&atf)?;
                Ok((
                    effective_sh_order(&hrtf_coeffs, ANALYSIS_PERCENT).map_err(|e| e.at_frequency(f))?,
                    effective_sh_order(&atf_coeffs, ANALYSIS_PERCENT).map_err(|e| e.at_frequency(f))?,
                ))
            })
            .collect();
        let mut hrtf = MetricCurve::new(Axis::FrequencyHz, "b99", "hrtf");
        let mut atf = MetricCurve::new(Axis::FrequencyHz, "b99", "atf");
        let mut kr = MetricCurve::new(Axis::FrequencyHz, "b99", "kr_ceil");
        for (&f, (h, a)) in freqs.iter().zip(rows?) {
            hrtf.push(f, h as f64, Some("left"));
            atf.push(f, a as f64, None);
            kr.push(f, (wavenumber(f) * self.config.geom.max_radius()).ceil(), None);
        }
        Ok(vec![hrtf, atf, kr])
    }

    /// Magnitude error of complex least-squares and full-band MagLS filters
    /// designed and evaluated for a head yaw of `rotation_deg`.
    pub fn fig6(&self, rotation_deg: f64) -> Result<Vec<MetricCurve>> {
        let ls = self.bank(f64::INFINITY, rotation_deg)?;
        let magls = self.bank(0.0, rotation_deg)?;
        let mut out = self.error_curves(&ls, rotation_deg, true, "bsm")?;
        out.extend(self.error_curves(&magls, rotation_deg, true, "bsm_magls")?);
        Ok(out)
    }

    fn azimuth_study(&self, rotation_deg: f64) -> Result<[Vec<BinauralSignal>; 3]> {
        let ls = self.bank(f64::INFINITY, rotation_deg)?;
        let magls = self.bank(self.config.cutoff_hz, rotation_deg)?;
        Ok([
            self.plane_wave_responses(None, rotation_deg)?,
            self.plane_wave_responses(Some(&ls), rotation_deg)?,
            self.plane_wave_responses(Some(&magls), rotation_deg)?,
        ])
    }

    /// ITD in µs of the reference and both reproductions, and the ITD
    /// errors of the reproductions.
    pub fn fig7(&self, rotation_deg: f64) -> Result<Vec<MetricCurve>> {
        let signals = self.azimuth_study(rotation_deg)?;
        let methods = ["reference", "bsm", "bsm_magls"];
        let mut out = Vec::new();
        for (sigs, method) in signals.iter().zip(methods) {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "itd_us", method);
            let values: Result<Vec<f64>> = sigs.par_iter().map(|p| estimate_itd(p, ITD_LOWPASS_HZ)).collect();
            for (&a, v) in self.config.azimuths_deg.iter().zip(values?) {
                c.push(a, v * 1e6, None);
            }
            out.push(c);
        }
        for (sigs, method) in signals[1..].iter().zip(&methods[1..]) {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "itd_error_us", *method);
            let values: Result<Vec<f64>> = sigs.par_iter().zip(&signals[0]).map(|(p, r)| itd_error(p, r)).collect();
            for (&a, v) in self.config.azimuths_deg.iter().zip(values?) {
                c.push(a, v * 1e6, None);
            }
            out.push(c);
        }
        Ok(out)
    }

    /// Band-averaged ILD of the reference and both reproductions, and the
    /// ILD errors of the reproductions.
    pub fn fig8(&self, rotation_deg: f64) -> Result<Vec<MetricCurve>> {
        let signals = self.azimuth_study(rotation_deg)?;
        let methods = ["reference", "bsm", "bsm_magls"];
        let mut out = Vec::new();
        for (sigs, method) in signals.iter().zip(methods) {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "ild_db", method);
            let values: Vec<f64> = sigs.par_iter().map(|p| estimate_ild(p).mean_db).collect();
            for (&a, v) in self.config.azimuths_deg.iter().zip(values) {
                c.push(a, v, None);
            }
            out.push(c);
        }
        for (sigs, method) in signals[1..].iter().zip(&methods[1..]) {
            let mut c = MetricCurve::new(Axis::AzimuthDeg, "ild_error_db", *method);
            let values: Vec<f64> = sigs.par_iter().zip(&signals[0]).map(|(p, r)| ild_error(p, r)).collect();
            for (&a, v) in self.config.azimuths_deg.iter().zip(values) {
                c.push(a, v, None);
            }
            out.push(c);
        }
        Ok(out)
    }

    /// Curves of `figure`; rotation is ignored by figures 4 and 5.
    pub fn curves(&self, figure: Figure, rotation_deg: f64) -> Result<Vec<MetricCurve>> {
        match figure {
            Figure::Fig4 => self.fig4(),
            Figure::Fig5 => self.fig5(),
            Figure::Fig6 => self.fig6(rotation_deg),
            Figure::Fig7 => self.fig7(rotation_deg),
            Figure::Fig8 => self.fig8(rotation_deg),
        }
    }
}

/// File name of a figure's CSV, e.g. `fig4.csv` or `fig6_rot30.csv`.
pub fn figure_file_name(figure: Figure, rotation_deg: f64) -> String {
    if figure.rotates() {
        format!("{}_rot{}.csv", figure.name(), rotation_deg.round() as i64)
    } else {
        format!("{}.csv", figure.name())
    }
}

/// Writes the CSV files of `figure` into `out_dir`: one file for figures 4
/// and 5, one per rotation otherwise.
pub fn reproduce(study: &Study, figure: Figure, rotations_deg: &[f64], out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let rotations: Vec<f64> = if figure.rotates() { rotations_deg.to_vec() } else { vec![0.0] };
    let mut written = Vec::new();
    for rot in rotations {
        let curves = study.curves(figure, rot)?;
        let path = out_dir.join(figure_file_name(figure, rot));
        write_curves(&path, &curves)?;
        written.push(path);
    }
    Ok(written)
}

/// Mean of a curve's values for one ear.
pub fn band_average(curve: &[MetricCurve], method: &str, ear: &str) -> Option<f64> {
    let values: Vec<f64> = curve
        .iter()
        .filter(|c| c.method == method)
        .flat_map(|c| c.values(Some(ear)))
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
