use std::f64::consts::PI;

use periwave_core::geometry::CellSpec;
use periwave_core::resonator::{
    truss_frequencies, truss_matrix_modes, truss_matrix_oracle, tune_gamma1, TrussResonator,
};
use periwave_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SHEAR_SPEED: f64 = 3192.3;

fn bridge() -> TrussResonator {
    TrussResonator::from_cell(&CellSpec::bridge_deck(true)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_truss(rng: &mut ChaCha8Rng) -> TrussResonator {
    TrussResonator {
        m1: 10f64.powf(rng.gen_range(1.0..3.0)),
        m2: 10f64.powf(rng.gen_range(1.0..3.0)),
        gamma: 10f64.powf(rng.gen_range(6.0..9.0)),
        gamma1: 10f64.powf(rng.gen_range(6.0..9.0)),
        beta: rng.gen_range(0.15..1.45),
    }
}

/// Root of the horizontal characteristic polynomial for `gamma1`, given `f_a`.
fn gamma1_for(r: &TrussResonator, f: f64) -> f64 {
    let w = (2.0 * PI * f).powi(2);
    let g = 2.0 * r.gamma * r.beta.sin().powi(2);
    (g - w * r.m1) * (g - w * r.m2) / (w * (r.m1 + r.m2) - 2.0 * g)
}

#[test]
fn bridge_spectrum() {
    let r = bridge();
    let s = truss_frequencies(&r).unwrap();
    assert!((s.f_a - 129.8).abs() < 0.1, "{s:?}");
    assert!((s.f_a * 4.0 / SHEAR_SPEED - 0.163).abs() < 1e-3);
    assert!(s.f_b < s.f_a);
    assert_eq!(s.f_star, s.f_b);
}

#[test]
fn closed_form_matches_matrix_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let start = std::time::Instant::now();
    let mut worst = 0.0f64;
    for r in std::iter::once(bridge()).chain((0..1000).map(|_| random_truss(&mut rng))) {
        let closed = truss_frequencies(&r).unwrap().sorted();
        let oracle = truss_matrix_oracle(&r).unwrap();
        for (a, b) in closed.iter().zip(&oracle) {
            worst = worst.max(rel(*a, *b));
        }
    }
    assert!(worst < 1e-8, "worst relative error {worst:.3e}");
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn vertical_modes_are_vertical() {
    let r = bridge();
    let s = truss_frequencies(&r).unwrap();
    for (f, shape) in truss_matrix_modes(&r).unwrap() {
        let (horizontal, vertical) = (shape[0].hypot(shape[2]), shape[1].hypot(shape[3]));
        if rel(f, s.f_c) < 1e-8 || rel(f, s.f_d) < 1e-8 {
            assert!(horizontal < 1e-8 * vertical, "f = {f}: {shape:?}");
        } else {
            assert!(vertical < 1e-8 * horizontal, "f = {f}: {shape:?}");
        }
    }
}

#[test]
fn no_stiffness_no_frequency() {
    let r = TrussResonator { gamma: 0.0, gamma1: 0.0, ..bridge() };
    assert!(truss_matrix_oracle(&r).unwrap().iter().all(|&f| f == 0.0));
    let s = truss_frequencies(&r).unwrap();
    assert_eq!(s.sorted(), [0.0; 4]);
}

#[test]
fn small_angle_limit() {
    let r = TrussResonator { beta: 1e-9, ..bridge() };
    let s = truss_frequencies(&r).unwrap();
    let fa = (r.gamma1 * (1.0 / r.m1 + 1.0 / r.m2) / (4.0 * PI * PI)).sqrt();
    assert!(s.f_b < 1e-6 && rel(s.f_a, fa) < 1e-12, "{s:?}");
}

#[test]
fn frozen_second_mass() {
    let r = TrussResonator { m2: 1e12, ..bridge() };
    let s = truss_frequencies(&r).unwrap();
    // M1 alone on a horizontal spring gamma1 + 2 gamma sin^2 beta.
    let single = ((r.gamma1 + 2.0 * r.gamma * r.beta.sin().powi(2)) / r.m1).sqrt() / (2.0 * PI);
    assert!(rel(s.f_a, single) < 1e-6, "{} vs {single}", s.f_a);
    assert!(s.f_b < 1e-2 && s.f_d < 1e-2);
}

#[test]
fn tune_is_a_fixed_point_at_current_gamma1() {
    let r = bridge();
    let f = truss_frequencies(&r).unwrap().f_a;
    assert!(rel(tune_gamma1(&r, f).unwrap(), r.gamma1) < 1e-8);
}

#[test]
fn tune_matches_symmetric_inverse() {
    let r = TrussResonator { m1: 120.0, m2: 120.0, gamma: 0.1e9, gamma1: 0.02e9, beta: 0.5 };
    for target in [110.0, 150.0, 400.0] {
        let g = tune_gamma1(&r, target).unwrap();
        let want = 2.0 * PI * PI * r.m1 * target * target - r.gamma * r.beta.sin().powi(2);
        assert!(rel(g, want) < 1e-9, "{g} vs {want}");
    }
}

#[test]
fn tune_bridge_to_wide_gap() {
    let r = bridge();
    let target = 0.1699 * SHEAR_SPEED / 4.0;
    let g = tune_gamma1(&r, target).unwrap();
    assert!(g > r.gamma1);
    assert!(rel(g, gamma1_for(&r, target)) < 1e-9);
    let back = truss_frequencies(&TrussResonator { gamma1: g, ..r }).unwrap().f_a;
    assert!(rel(back, target) < 1e-8);
}

#[test]
fn tune_below_range_is_infeasible() {
    assert!(matches!(tune_gamma1(&bridge(), 1.0), Err(Error::InfeasibleTarget { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ordering_and_scaling(seed in any::<u64>(), c in 0.1f64..10.0) {
        let r = random_truss(&mut ChaCha8Rng::seed_from_u64(seed));
        let s = truss_frequencies(&r).unwrap();
        prop_assert!(s.f_b <= s.f_a);
        prop_assert_eq!(s.f_star, s.f_b.min(s.f_c).min(s.f_d));
        let heavy = truss_frequencies(&TrussResonator { m1: c * r.m1, m2: c * r.m2, ..r }).unwrap();
        let stiff = truss_frequencies(&TrussResonator { gamma: c * r.gamma, gamma1: c * r.gamma1, ..r }).unwrap();
        for ((f, h), st) in s.sorted().iter().zip(heavy.sorted()).zip(stiff.sorted()) {
            prop_assert!(rel(h, f / c.sqrt()) < 1e-12);
            prop_assert!(rel(st, f * c.sqrt()) < 1e-12);
        }
    }

    #[test]
    fn tune_round_trip(seed in any::<u64>(), stretch in 1.0f64..3.0) {
        let r = random_truss(&mut ChaCha8Rng::seed_from_u64(seed));
        let base = truss_frequencies(&TrussResonator { gamma1: 0.0, ..r }).unwrap().f_a;
        let target = base * stretch;
        let g = tune_gamma1(&r, target).unwrap();
        let back = truss_frequencies(&TrussResonator { gamma1: g, ..r }).unwrap().f_a;
        prop_assert!(rel(back, target) < 1e-8);
    }
}
