mod common;

use std::f64::consts::PI;

use bsm::array::{rotate_array, semi_circular_preset, steering_matrix, wavenumber, ArrayGeometry, ArrayKind, Microphone};
use bsm::sh::{rotate_directions, Direction, DirectionSet};
use num_complex::Complex64;

fn single_mic(kind: ArrayKind, sphere: f64, r: f64) -> ArrayGeometry {
    ArrayGeometry::new("probe", kind, sphere, vec![Microphone { radius: r, direction: Direction::new(PI / 2.0, 0.0) }])
        .unwrap()
}

fn arc(angles_deg: &[f64]) -> DirectionSet {
    DirectionSet::from_directions(angles_deg.iter().map(|&g| Direction::horizontal(g.to_radians())).collect())
}

#[test]
fn rigid_sphere_matches_high_precision_series() {
    let text = include_str!("data/rigid_sphere.csv");
    let mut checked = 0;
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (f, r, gamma) = (v[0], v[1], v[2]);
        let expected = Complex64::new(v[3], v[4]);
        let g = single_mic(ArrayKind::RigidSphere, 0.1, r);
        let got = steering_matrix(&g, &arc(&[gamma]), f, 30).values[(0, 0)];
        let rel = (got - expected).norm() / expected.norm();
        assert!(rel < 1e-8, "f={f} r={r} gamma={gamma}: {got} vs {expected} ({rel:e})");
        checked += 1;
    }
    assert_eq!(checked, 28);
}

#[test]
fn vanishing_sphere_is_a_plane_wave() {
    let r = 0.1;
    let g = single_mic(ArrayKind::RigidSphere, 1e-6, r);
    let angles: Vec<f64> = (0..12).map(|i| i as f64 * 30.0).collect();
    for f in [500.0, 2000.0] {
        let k = wavenumber(f);
        let v = steering_matrix(&g, &arc(&angles), f, 30).values;
        for (q, &a) in angles.iter().enumerate() {
            let expected = Complex64::from_polar(1.0, k * r * a.to_radians().cos());
            assert!((v[(0, q)] - expected).norm() < 1e-8, "f={f} angle={a}");
        }
    }
}

#[test]
fn rigid_surface_has_zero_normal_velocity() {
    let a = 0.1;
    let d = 1e-5 * a;
    let angles = [0.0, 45.0, 90.0, 135.0, 180.0];
    let dirs = arc(&angles);
    for f in [800.0, 3000.0] {
        let k = wavenumber(f);
        let p: Vec<_> = (0..3).map(|i| steering_matrix(&single_mic(ArrayKind::RigidSphere, a, a + i as f64 * d), &dirs, f, 40).values).collect();
        let free = steering_matrix(&single_mic(ArrayKind::FreeField, a, a), &dirs, f, 40).values;
        for q in 0..angles.len() {
            // second-order one-sided difference
            let dp = (p[0][(0, q)] * -3.0 + p[1][(0, q)] * 4.0 - p[2][(0, q)]) / (2.0 * d);
            assert!(dp.norm() / (k * p[0][(0, q)].norm()) < 1e-4, "f={f} angle={}", angles[q]);
            assert!(free[(0, q)].norm() > 0.99);
        }
    }
}

#[test]
fn rotating_the_array_counter_rotates_directions() {
    let g = semi_circular_preset(6, 0.1).unwrap();
    let dirs = common::random_directions(&mut common::rng(3), 20);
    for f in [300.0, 2500.0, 7000.0] {
        let a = steering_matrix(&rotate_array(&g, PI / 6.0), &dirs, f, 30).values;
        let b = steering_matrix(&g, &rotate_directions(&dirs, 0.0, -PI / 6.0), f, 30).values;
        let diff = (&a - &b).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-12, "f={f}: {diff}");
    }
}

#[test]
fn preset_is_mirror_symmetric() {
    // Mic i at azimuth φ sees the mirror image of mic M-1-i at -φ.
    let g = semi_circular_preset(6, 0.1).unwrap();
    let dirs = common::random_directions(&mut common::rng(4), 20);
    let mirrored = DirectionSet::from_directions(dirs.directions().iter().map(|d| Direction::new(d.theta, -d.phi)).collect());
    let a = steering_matrix(&g, &dirs, 1800.0, 30).values;
    let b = steering_matrix(&g, &mirrored, 1800.0, 30).values;
    for m in 0..6 {
        for q in 0..dirs.len() {
            assert!((a[(m, q)] - b[(5 - m, q)]).norm() < 1e-12);
        }
    }
}
