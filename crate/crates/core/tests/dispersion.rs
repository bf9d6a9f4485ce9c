use std::f64::consts::PI;
use std::sync::OnceLock;

use periwave_core::dispersion::{
    find_flat_bands, find_gaps, svg_plot, sweep, sweep_mesh, DispersionDiagram, SweepOptions, FLATNESS_THRESHOLD,
    GAP_FLOOR,
};
use periwave_core::fem::{apply_constraints, assemble, solve_modes};
use periwave_core::geometry::{build_cell, BoundaryTag, CellSpec, Resolution};
use periwave_core::resonator::{truss_frequencies, TrussResonator};

const F_MAX: f64 = 0.2;

fn opts(n_k: usize, n_bands: usize) -> SweepOptions {
    SweepOptions { n_k, n_bands, resolution: Resolution::default() }
}

fn resonator_deck() -> &'static DispersionDiagram {
    static D: OnceLock<DispersionDiagram> = OnceLock::new();
    D.get_or_init(|| sweep(&CellSpec::bridge_deck(true), &opts(17, 16)).unwrap())
}

fn fa_normalized() -> f64 {
    let spec = CellSpec::bridge_deck(true);
    let f = truss_frequencies(&TrussResonator::from_cell(&spec).unwrap()).unwrap().f_a;
    f * spec.period / spec.host_material().unwrap().shear_speed()
}

#[test]
fn free_strip_bends_with_quadratic_dispersion() {
    // No supports: the lowest branch is flexural, omega ~ k^2 while k s << 1.
    let mut mesh = build_cell(&CellSpec::bridge_deck(false), Resolution::default()).unwrap();
    mesh.pinned_nodes.clear();
    for e in &mut mesh.boundary_edges {
        if e.tag == BoundaryTag::Dirichlet {
            e.tag = BoundaryTag::TractionFree;
        }
    }
    let global = assemble(&mesh).unwrap();
    let pts: Vec<(f64, f64)> = (0..=8)
        .map(|i| {
            let kd = 0.2 * 10f64.powf(i as f64 / 8.0);
            let modes = solve_modes(&apply_constraints(&global, &mesh, kd / mesh.period).unwrap(), 1, None).unwrap();
            assert_eq!(modes.deflated, 0, "kd {kd}: {:?}", modes.frequencies);
            (kd.ln(), modes.frequencies[0].ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / n, sy / n);
    let slope =
        pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.1, "log-log slope {slope}");
}

#[test]
fn two_samples_solve_zone_centre_and_edge() {
    let spec = CellSpec::bridge_deck(false);
    let d = sweep(&spec, &opts(2, 3)).unwrap();
    assert_eq!(d.k.len(), 2);
    assert_eq!(d.kd(0), 0.0);
    assert!((d.kd(1) - PI).abs() < 1e-15);
    assert!(sweep(&spec, &opts(1, 3)).is_err());
}

#[test]
fn bands_ascend_and_normalize_exactly() {
    let d = resonator_deck();
    for row in &d.frequencies {
        assert_eq!(row.len(), 16);
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
        assert!(row[0] >= 0.0);
    }
    let j = 3;
    for (i, f) in d.band(j).iter().enumerate() {
        assert_eq!(*f, d.frequencies[i][j] * d.period / d.shear_speed);
    }
}

#[test]
fn gaps_and_bands_are_complementary() {
    let d = resonator_deck();
    let gaps = find_gaps(d, F_MAX, GAP_FLOOR);
    assert!(!gaps.is_empty());
    for g in &gaps {
        assert!(g.lo < g.hi && (g.width - (g.hi - g.lo)).abs() < 1e-15);
    }
    assert!(gaps.windows(2).all(|w| w[0].hi < w[1].lo));
    let samples: Vec<f64> = (0..d.n_bands()).flat_map(|j| d.band(j)).collect();
    // No sample strictly inside a gap.
    for f in &samples {
        assert!(gaps.iter().all(|g| !g.contains(*f)), "sample {f} inside a gap");
    }
    // Every point below F_MAX outside the gaps is within some band's range.
    let ranges: Vec<(f64, f64)> = (0..d.n_bands())
        .map(|j| {
            let b = d.band(j);
            (b.iter().copied().fold(f64::INFINITY, f64::min), b.iter().copied().fold(0.0, f64::max))
        })
        .collect();
    for i in 0..2000 {
        let f = F_MAX * (i as f64 + 0.5) / 2000.0;
        let in_gap = gaps.iter().any(|g| g.contains(f));
        let in_band = ranges.iter().any(|r| r.0 <= f && f <= r.1);
        let sliver = ranges.iter().any(|r| (f - r.0).abs() < GAP_FLOOR || (f - r.1).abs() < GAP_FLOOR);
        assert!(in_gap != in_band || sliver, "F = {f}: gap {in_gap}, band {in_band}");
    }
}

#[test]
fn resonator_gap_contains_truss_estimate() {
    let d = resonator_deck();
    assert!(d.reliable_ceiling() > F_MAX);
    let fa = fa_normalized();
    let gap = find_gaps(d, F_MAX, GAP_FLOOR).into_iter().find(|g| g.contains(fa)).expect("gap around f_A");
    assert!((gap.center() / 0.1699 - 1.0).abs() < 0.15);
}

#[test]
fn gap_bounds_survive_k_refinement() {
    let fine = resonator_deck();
    let coarse = sweep(&CellSpec::bridge_deck(true), &opts(9, 16)).unwrap();
    let fa = fa_normalized();
    let pick = |d: &DispersionDiagram| find_gaps(d, F_MAX, GAP_FLOOR).into_iter().find(|g| g.contains(fa)).unwrap();
    let (a, b) = (pick(&coarse), pick(fine));
    assert!((a.lo / b.lo - 1.0).abs() < 0.02 && (a.hi / b.hi - 1.0).abs() < 0.02, "{a:?} vs {b:?}");
}

#[test]
fn resonators_add_bands_and_flat_branches() {
    let plain = sweep(&CellSpec::bridge_deck(false), &opts(9, 16)).unwrap();
    let res = resonator_deck();
    let below = |d: &DispersionDiagram| d.band(0).len();
    let count = |d: &DispersionDiagram| (0..d.n_bands()).filter(|&j| d.band(j)[0] < F_MAX).count();
    assert_eq!(below(&plain), 9);
    assert!(count(res) > count(&plain), "{} vs {}", count(res), count(&plain));
    let flat = find_flat_bands(res, FLATNESS_THRESHOLD);
    assert!(flat.iter().any(|f| f.mean < F_MAX && f.mean > 0.0));
    assert!(find_flat_bands(&plain, FLATNESS_THRESHOLD).iter().all(|f| f.mean > F_MAX));
}

#[test]
fn sweep_of_assembled_mesh_is_deterministic() {
    let spec = CellSpec::skyscraper_storey(false);
    let mesh = build_cell(&spec, Resolution::default()).unwrap();
    let global = assemble(&mesh).unwrap();
    let v = spec.host_material().unwrap().shear_speed();
    let a = sweep_mesh(&mesh, &global, v, 5, 4).unwrap();
    let b = sweep_mesh(&mesh, &global, v, 5, 4).unwrap();
    assert_eq!(a, b);
    // Two translations at k = 0 become the feet of the acoustic branches.
    assert_eq!(&a.frequencies[0][..2], &[0.0, 0.0]);
    assert!(a.frequencies[1][0] > 0.0);
}

#[test]
fn outputs_carry_every_sample() {
    let d = resonator_deck();
    let csv = d.to_csv();
    assert_eq!(csv.lines().count(), 1 + d.k.len() * d.n_bands());
    let gaps = find_gaps(d, F_MAX, GAP_FLOOR);
    let svg = svg_plot(d, F_MAX, &gaps);
    assert_eq!(svg.matches("<polyline").count(), d.n_bands());
    let report: serde_json::Value = serde_json::from_str(&d.report_json(F_MAX, &gaps, &[])).unwrap();
    assert_eq!(report["gaps"].as_array().unwrap().len(), gaps.len());
}
