use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use periwave_core::beam::{beam_band_edges, beam_frequency_at, BeamSpec};
use periwave_core::dispersion::{
    find_flat_bands, find_gaps, k_grid, svg_plot, sweep, DispersionDiagram, FiniteStack, LocalizationProbe,
    SweepOptions, FLATNESS_THRESHOLD,
};
use periwave_core::fem::{apply_constraints, assemble, solve_modes};
use periwave_core::geometry::build_cell;
use periwave_core::resonator::{truss_frequencies, tune_gamma1, TrussResonator, TrussSpectrum};
use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::output::{write_atomic, OutputDir};
use crate::Overrides;

/// A result that was computed but failed its own re-validation.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "numerical check failed: {}", self.0)
    }
}

impl std::error::Error for NumericalFailure {}

struct Loaded {
    text: String,
    cfg: RunConfig,
}

fn load(path: &Path, o: &Overrides) -> Result<Loaded> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(r) = o.resolution {
        cfg.resolution = r;
    }
    if let Some(n) = o.nk {
        cfg.sweep.n_k = n;
    }
    if let Some(n) = o.bands {
        cfg.sweep.n_bands = n;
    }
    if let Some(dir) = &o.out {
        cfg.outputs.directory = dir.clone();
    }
    cfg.validate()?;
    Ok(Loaded { text, cfg })
}

fn shear_speed(cfg: &RunConfig) -> Result<f64> {
    Ok(cfg.cell.host_material()?.shear_speed())
}

pub fn dispersion(path: &Path, o: &Overrides) -> Result<()> {
    let Loaded { text, cfg } = load(path, o)?;
    let opts = SweepOptions { n_k: cfg.sweep.n_k, n_bands: cfg.sweep.n_bands, resolution: cfg.resolution() };
    let diagram = sweep(&cfg.cell, &opts)?;
    let gaps = find_gaps(&diagram, cfg.sweep.f_max, cfg.sweep.gap_floor);
    let flat = find_flat_bands(&diagram, FLATNESS_THRESHOLD);
    if diagram.reliable_ceiling() < cfg.sweep.f_max {
        eprintln!(
            "warning: top band dips to F = {:.4} below f_max = {}; gaps above it may be missing bands",
            diagram.reliable_ceiling(),
            cfg.sweep.f_max
        );
    }

    let mut out = OutputDir::create(&cfg.outputs.directory)?;
    if cfg.wants(Format::Csv) {
        out.write("bands.csv", &diagram.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.write("gaps.json", &(diagram.report_json(cfg.sweep.f_max, &gaps, &flat) + "\n"))?;
    }
    if cfg.wants(Format::Svg) {
        out.write("dispersion.svg", &svg_plot(&diagram, cfg.sweep.f_max, &gaps))?;
    }
    let dir = out.finish("dispersion", &text, cfg.seed, &cfg)?;
    for g in &gaps {
        println!("gap {:.5} .. {:.5} (width {:.5})", g.lo, g.hi, g.width);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}

pub fn modes(path: &Path, kd: f64, n_modes: usize, o: &Overrides) -> Result<()> {
    let Loaded { text, cfg } = load(path, o)?;
    if n_modes == 0 {
        bail!("--n-modes must be at least 1");
    }
    let mesh = build_cell(&cfg.cell, cfg.resolution())?;
    let system = apply_constraints(&assemble(&mesh)?, &mesh, kd / cfg.cell.period)?;
    let set = solve_modes(&system, n_modes, None)?;
    let probe = LocalizationProbe::new(&mesh);
    let v = shear_speed(&cfg)?;

    let mut table = String::from("mode,f_hz,F_norm,localization\n");
    for (i, (f, u)) in set.frequencies.iter().zip(&set.shapes).enumerate() {
        let loc = probe.as_ref().map_or(String::new(), |p| format!("{:.16e}", p.ratio(u)));
        let _ = writeln!(table, "{i},{f:.16e},{:.16e},{loc}", f * cfg.cell.period / v);
    }
    let mut out = OutputDir::create(&cfg.outputs.directory)?;
    out.write("frequencies.csv", &table)?;
    if cfg.wants(Format::Json) {
        out.write("modes.json", &(set.to_json() + "\n"))?;
    }
    for i in 0..set.frequencies.len() {
        out.write(&format!("mode_{i}.txt"), &set.point_data(&mesh, i)?)?;
    }
    #[derive(Serialize)]
    struct Effective<'a> {
        config: &'a RunConfig,
        kd: f64,
        n_modes: usize,
    }
    let dir = out.finish("modes", &text, cfg.seed, &Effective { config: &cfg, kd, n_modes })?;
    print!("{table}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}

#[derive(Deserialize)]
struct BandRow {
    kd: f64,
    band: usize,
    #[allow(dead_code)]
    f_hz: f64,
    #[serde(rename = "F_norm")]
    f_norm: f64,
}

/// Rebuilds a normalized diagram from a band CSV.
fn read_bands(path: &Path) -> Result<DispersionDiagram> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: BTreeMap<u64, (f64, BTreeMap<usize, f64>)> = BTreeMap::new();
    for (line, row) in reader.deserialize::<BandRow>().enumerate() {
        let r = row.with_context(|| format!("{} row {}", path.display(), line + 1))?;
        // kd values are non-negative, so their bit patterns sort like the numbers.
        rows.entry(r.kd.to_bits()).or_insert((r.kd, BTreeMap::new())).1.insert(r.band, r.f_norm);
    }
    if rows.is_empty() {
        bail!("{}: no band rows", path.display());
    }
    let n_bands = rows.values().next().map_or(0, |r| r.1.len());
    let mut kd = Vec::new();
    let mut bands = Vec::new();
    for (x, row) in rows.into_values() {
        if row.len() != n_bands || row.keys().copied().ne(0..n_bands) {
            bail!("{}: kd = {x} does not carry bands 0..{n_bands}", path.display());
        }
        kd.push(x);
        bands.push(row.into_values().collect());
    }
    Ok(DispersionDiagram::from_normalized(1.0, 1.0, &kd, bands)?)
}

pub fn gaps(path: &Path, f_max: f64, floor: f64, out: Option<&Path>) -> Result<()> {
    if !(f_max > 0.0) || !(floor >= 0.0) {
        bail!("--f-max must be positive and --floor non-negative");
    }
    let diagram = read_bands(path)?;
    let gaps = find_gaps(&diagram, f_max, floor);
    let flat = find_flat_bands(&diagram, FLATNESS_THRESHOLD);
    #[derive(Serialize)]
    struct Report<'a> {
        n_k: usize,
        n_bands: usize,
        f_max: f64,
        gaps: &'a [periwave_core::dispersion::BandGap],
        flat_bands: &'a [periwave_core::dispersion::FlatBand],
    }
    let report = Report { n_k: diagram.k.len(), n_bands: diagram.n_bands(), f_max, gaps: &gaps, flat_bands: &flat };
    emit(&(serde_json::to_string_pretty(&report)? + "\n"), out)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct TuneReport {
    input: TrussResonator,
    tuned: TrussResonator,
    target_hz: f64,
    achieved_hz: f64,
    relative_error: f64,
    spectrum: TrussSpectrum,
}

pub fn tune(path: &Path, target: f64, normalization: Option<(f64, f64)>, out: Option<&Path>) -> Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let input: TrussResonator = serde_path_to_error::deserialize(de)
        .map_err(|e| anyhow::anyhow!("resonator at `{}`: {}", e.path(), e.inner()))?;
    let target_hz = match normalization {
        Some((d, v)) => {
            if !(d > 0.0 && v > 0.0) {
                bail!("--period and --shear-speed must be positive");
            }
            target * v / d
        }
        None => target,
    };
    let gamma1 = tune_gamma1(&input, target_hz)?;
    let tuned = TrussResonator { gamma1, ..input };
    let spectrum = truss_frequencies(&tuned)?;
    let relative_error = (spectrum.f_a - target_hz).abs() / target_hz;
    if relative_error > 1e-8 {
        return Err(NumericalFailure(format!("tuned f_A = {} Hz misses {target_hz} Hz", spectrum.f_a)).into());
    }
    let report = TuneReport { input, tuned, target_hz, achieved_hz: spectrum.f_a, relative_error, spectrum };
    emit(&(serde_json::to_string_pretty(&report)? + "\n"), out)
}

pub fn finite(path: &Path, n_cells: usize, n_modes: usize, shift: Option<f64>, o: &Overrides) -> Result<()> {
    let Loaded { text, cfg } = load(path, o)?;
    if n_cells == 0 || n_modes == 0 {
        bail!("--n-cells and --n-modes must be at least 1");
    }
    if let Some(s) = shift {
        if !(s >= 0.0 && s.is_finite()) {
            bail!("--shift must be a non-negative normalized frequency");
        }
    }
    let v = shear_speed(&cfg)?;
    let stack = FiniteStack::new(&cfg.cell, n_cells, cfg.resolution())?;
    let modes = stack.modes(n_modes, shift.map(|s| s * v / cfg.cell.period))?;

    let mut table = String::from("mode,f_hz,F_norm,localization\n");
    for (i, (f, fn_)) in modes.modes.frequencies.iter().zip(&modes.normalized).enumerate() {
        let loc = modes.localization.as_ref().map_or(String::new(), |l| format!("{:.16e}", l[i]));
        let _ = writeln!(table, "{i},{f:.16e},{fn_:.16e},{loc}");
    }
    #[derive(Serialize)]
    struct Report<'a> {
        n_cells: usize,
        dofs: usize,
        normalized: &'a [f64],
        localization: Option<&'a [f64]>,
        localized_below: f64,
    }
    let report = Report {
        n_cells,
        dofs: stack.dof_count(),
        normalized: &modes.normalized,
        localization: modes.localization.as_deref(),
        localized_below: 0.2,
    };
    let mut out = OutputDir::create(&cfg.outputs.directory)?;
    out.write("frequencies.csv", &table)?;
    out.write("localization.json", &(serde_json::to_string_pretty(&report)? + "\n"))?;
    #[derive(Serialize)]
    struct Effective<'a> {
        config: &'a RunConfig,
        n_cells: usize,
        n_modes: usize,
        shift: Option<f64>,
    }
    let dir = out.finish("finite", &text, cfg.seed, &Effective { config: &cfg, n_cells, n_modes, shift })?;
    print!("{table}");
    eprintln!("wrote {}", dir.display());
    Ok(())
}

pub fn beam(path: &Path, o: &Overrides) -> Result<()> {
    let Loaded { text, cfg } = load(path, o)?;
    let spec = BeamSpec::from_cell(&cfg.cell)?;
    let v = shear_speed(&cfg)?;
    let d = cfg.cell.period;
    let k = k_grid(d, cfg.sweep.n_k);
    let mut frequencies = Vec::with_capacity(k.len());
    for kk in &k {
        let row =
            (1..=cfg.sweep.n_bands).map(|n| beam_frequency_at(&spec, kk * d, n)).collect::<Result<Vec<_>, _>>()?;
        frequencies.push(row);
    }
    let diagram = DispersionDiagram { period: d, shear_speed: v, k, frequencies };
    #[derive(Serialize)]
    struct Edge {
        band: usize,
        lo_hz: f64,
        hi_hz: f64,
        lo: f64,
        hi: f64,
    }
    let edges: Vec<Edge> = beam_band_edges(&spec, cfg.sweep.n_bands)?
        .into_iter()
        .enumerate()
        .map(|(i, (lo, hi))| Edge { band: i + 1, lo_hz: lo, hi_hz: hi, lo: lo * d / v, hi: hi * d / v })
        .collect();
    let mut out = OutputDir::create(&cfg.outputs.directory)?;
    out.write("beam_bands.csv", &diagram.to_csv())?;
    out.write("beam_edges.json", &(serde_json::to_string_pretty(&(spec, &edges))? + "\n"))?;
    let dir = out.finish("oracle beam", &text, cfg.seed, &cfg)?;
    for e in &edges {
        println!("band {} pass {:.5} .. {:.5}", e.band, e.lo, e.hi);
    }
    eprintln!("wrote {}", dir.display());
    Ok(())
}
