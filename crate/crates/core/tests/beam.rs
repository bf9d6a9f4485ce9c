use std::f64::consts::PI;

use periwave_core::beam::{beam_band_edges, beam_dispersion, beam_frequency_at, cos_kd, support_transfer, BeamSpec};
use periwave_core::geometry::CellSpec;

fn deck() -> BeamSpec {
    BeamSpec::from_cell(&CellSpec::bridge_deck(false)).unwrap()
}

#[test]
fn transfer_matrix_agrees_with_scaled_formula() {
    let spec = deck();
    // The unscaled matrix loses digits like e^x, so stay at moderate x.
    for i in 1..150 {
        let x = 0.1 * i as f64;
        let p = support_transfer(&spec, spec.frequency(x));
        let half_trace = 0.5 * (p[0][0] + p[1][1]);
        let det = p[0][0] * p[1][1] - p[0][1] * p[1][0];
        // Characteristic polynomial lambda^2 - tr lambda + det must be palindromic.
        assert!((det - 1.0).abs() < 1e-8, "x = {x}: det {det}");
        assert!((half_trace - cos_kd(x)).abs() < 1e-8 * half_trace.abs().max(1.0), "x = {x}");
    }
}

#[test]
fn first_pass_band_opens_at_pinned_fundamental() {
    let spec = deck();
    let f1 = spec.pinned_fundamental();
    let above = beam_dispersion(&spec, f1 * (1.0 + 1e-6)).unwrap();
    assert_eq!(above.len(), 1);
    assert!((above[0] - PI).abs() < 1e-2);
    assert!(beam_dispersion(&spec, 0.5 * f1).unwrap().is_empty());
    assert!(beam_dispersion(&spec, f1 * (1.0 - 1e-6)).unwrap().is_empty());
}

#[test]
fn stop_bands_match_grid_scan() {
    // Brute force: pass band iff |tr P| <= 2 from the unscaled transfer matrix.
    let spec = deck();
    for i in 1..400 {
        let f = spec.frequency(0.05 * i as f64);
        let p = support_transfer(&spec, f);
        let pass = (p[0][0] + p[1][1]).abs() <= 2.0;
        let near_edge = ((p[0][0] + p[1][1]).abs() - 2.0).abs() < 1e-6;
        if !near_edge {
            assert_eq!(!beam_dispersion(&spec, f).unwrap().is_empty(), pass, "f = {f}");
        }
    }
}

#[test]
fn band_edges_sit_at_zone_centre_or_edge() {
    let spec = deck();
    let edges = beam_band_edges(&spec, 4).unwrap();
    let mut last = 0.0;
    for &(lo, hi) in &edges {
        assert!(last < lo && lo < hi);
        last = hi;
        for f in [lo * (1.0 + 1e-12), hi * (1.0 - 1e-12)] {
            let kd = beam_dispersion(&spec, f).unwrap();
            assert_eq!(kd.len(), 1, "f = {f}");
            assert!(kd[0].min(PI - kd[0]) < 1e-5, "{kd:?}");
        }
    }
    // First band: from the pinned-pinned frequency to the clamped-clamped one.
    let x_hi = spec.wave_parameter(edges[0].1);
    assert!((x_hi.cos() * x_hi.cosh() - 1.0).abs() < 1e-6, "x = {x_hi}");
}

#[test]
fn doubling_stiffness_scales_edges() {
    let spec = deck();
    let stiff = BeamSpec { ei: 2.0 * spec.ei, ..spec };
    for (a, b) in beam_band_edges(&spec, 3).unwrap().iter().zip(beam_band_edges(&stiff, 3).unwrap()) {
        assert!((b.0 / a.0 - 2f64.sqrt()).abs() < 1e-12);
        assert!((b.1 / a.1 - 2f64.sqrt()).abs() < 1e-9);
    }
}

#[test]
fn bridge_deck_standing_wave() {
    let spec = deck();
    let v = CellSpec::bridge_deck(false).host_material().unwrap().shear_speed();
    let lo = beam_band_edges(&spec, 1).unwrap()[0].0 * 4.0 / v;
    assert!((lo / 0.0358 - 1.0).abs() < 0.10, "F = {lo}");
}

#[test]
fn inverse_recovers_phase() {
    let spec = deck();
    for band in 1..=3 {
        let edges = beam_band_edges(&spec, band).unwrap()[band - 1];
        for i in 0..=8 {
            let kd = PI * i as f64 / 8.0;
            let f = beam_frequency_at(&spec, kd, band).unwrap();
            assert!(f >= edges.0 * (1.0 - 1e-12) && f <= edges.1 * (1.0 + 1e-12));
            let back = cos_kd(spec.wave_parameter(f));
            assert!((back - kd.cos()).abs() < 1e-9, "band {band} kd {kd}: {back}");
        }
    }
    assert!(beam_frequency_at(&spec, 4.0, 1).is_err());
}
