#![allow(dead_code)]

use std::f64::consts::PI;

use bsm::array::semi_circular_preset;
use bsm::design::{bsm_ls_filter, regularization_from_snr, DesignSpec};
use bsm::linalg::{CMatrix, CVector};
use bsm::metrics::nmse;
use bsm::sh::{num_coeffs, sh_basis_matrix, spiral_sampling, Direction, DirectionSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> CVector {
    CVector::from_fn(len, |_, _| complex_normal(rng))
}

pub fn white_noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Directions drawn uniformly on the sphere.
pub fn random_directions(rng: &mut ChaCha8Rng, count: usize) -> DirectionSet {
    DirectionSet::from_directions(
        (0..count)
            .map(|_| {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                Direction::new((1.0 - 2.0 * u).acos(), 2.0 * PI * v)
            })
            .collect(),
    )
}

/// `16` directions on the equator: too few distinct elevations to resolve
/// order 2.
pub fn equator(count: usize) -> DirectionSet {
    DirectionSet::from_directions((0..count).map(|i| Direction::horizontal(2.0 * PI * i as f64 / count as f64)).collect())
}

/// Array transfer functions whose SH expansion stops at `order`:
/// `V = A Yᵀ` for `M × (order+1)²` coefficients `A`.
pub fn order_limited_atf(coeffs: &CMatrix, order: usize, dirs: &DirectionSet) -> CMatrix {
    coeffs * sh_basis_matrix(dirs, order).transpose()
}

pub fn order_limited_field(coeffs: &CVector, order: usize, dirs: &DirectionSet) -> CVector {
    sh_basis_matrix(dirs, order) * coeffs
}

/// How the synthetic HRTF is built.
#[derive(Debug, Clone, Copy)]
pub enum HrtfModel {
    /// `h(Ω) = g^H v(Ω)`: exactly reproducible by the array.
    ArraySpan,
    /// Independent random SH coefficients up to the given order.
    Random(usize),
}

/// One synthetic generalization experiment.
#[derive(Debug, Clone)]
pub struct Constructed {
    pub label: &'static str,
    pub mics: usize,
    pub atf_order: usize,
    pub claimed_atf_order: usize,
    pub hrtf: HrtfModel,
    pub design_dirs: DirectionSet,
    pub snr_db: f64,
}

pub struct Outcome {
    /// NMSE in dB at the unseen directions.
    pub unseen_db: f64,
    pub design_db: f64,
    pub spec: DesignSpec,
    pub claimed_hrtf_order: usize,
    pub probe: bsm::design::OrderProbe,
}

impl Constructed {
    /// Order-2 responses, 12 microphones, 16-point spiral, 60 dB SNR.
    pub fn base() -> Self {
        Constructed {
            label: "constructed",
            mics: 12,
            atf_order: 2,
            claimed_atf_order: 2,
            hrtf: HrtfModel::ArraySpan,
            design_dirs: spiral_sampling(16),
            snr_db: 60.0,
        }
    }

    /// The base case and one case per violated condition, in checklist order.
    pub fn with_violations() -> Vec<Self> {
        let base = Self::base();
        vec![
            base.clone(),
            Constructed { label: "low SNR (0 dB)", snr_db: 0.0, ..base.clone() },
            Constructed { label: "ATF not order 2 (order 4)", atf_order: 4, hrtf: HrtfModel::Random(2), ..base.clone() },
            Constructed { label: "Q = 8 < 9", design_dirs: spiral_sampling(8), ..base.clone() },
            Constructed { label: "aliased set (equator)", design_dirs: equator(16), ..base.clone() },
            Constructed { label: "N_H = 3 > N_V", hrtf: HrtfModel::Random(3), ..base },
        ]
    }

    pub fn run(&self, seed: u64) -> Outcome {
        let mut rng = rng(seed);
        let unseen = random_directions(&mut rng, 50);
        let probe_dirs = bsm::sh::equal_angle_sampling(6);
        let a = random_matrix(&mut rng, self.mics, num_coeffs(self.atf_order));
        let g = random_vector(&mut rng, self.mics);
        let (b, hrtf_order) = match self.hrtf {
            HrtfModel::ArraySpan => (None, self.atf_order),
            HrtfModel::Random(n) => (Some(random_vector(&mut rng, num_coeffs(n))), n),
        };
        let model = |dirs: &DirectionSet| -> (CMatrix, CVector) {
            let v = order_limited_atf(&a, self.atf_order, dirs);
            let h = match &b {
                None => v.transpose() * g.map(|x| x.conj()),
                Some(b) => order_limited_field(b, hrtf_order, dirs),
            };
            (v, h)
        };
        let (vd, hd) = model(&self.design_dirs);
        let c = bsm_ls_filter(&vd, &hd, regularization_from_snr(self.snr_db)).expect("design");
        let (vu, hu) = model(&unseen);
        let (vp, hp) = model(&probe_dirs);
        let mut spec = DesignSpec::new(semi_circular_preset(6, 0.1).unwrap(), self.design_dirs.clone(), vec![1000.0]);
        spec.snr_db = self.snr_db;
        let claimed_hrtf_order = match self.hrtf {
            HrtfModel::ArraySpan => self.claimed_atf_order,
            HrtfModel::Random(n) => n,
        };
        Outcome {
            unseen_db: nmse(&vu, &c, &hu, self.snr_db).unwrap(),
            design_db: nmse(&vd, &c, &hd, self.snr_db).unwrap(),
            spec,
            claimed_hrtf_order,
            probe: bsm::design::OrderProbe { dirs: probe_dirs, atf: vp, hrtf: [hp.clone(), hp] },
        }
    }
}
