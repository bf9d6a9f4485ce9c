use std::fmt::Write as _;

use serde::Serialize;

use super::{BandGap, DispersionDiagram, FlatBand};

#[derive(Serialize)]
struct Report<'a> {
    period: f64,
    shear_speed: f64,
    n_k: usize,
    n_bands: usize,
    f_max: f64,
    gaps: &'a [BandGap],
    flat_bands: &'a [FlatBand],
}

impl DispersionDiagram {
    /// Rows of `kd,band,f_hz,F_norm`, one per sample, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kd,band,f_hz,F_norm\n");
        for (i, row) in self.frequencies.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                let _ = writeln!(out, "{:.16e},{j},{:.16e},{:.16e}", self.kd(i), f, self.normalize(f));
            }
        }
        out
    }

    /// JSON report of gaps and flat bands.
    pub fn report_json(&self, f_max: f64, gaps: &[BandGap], flat_bands: &[FlatBand]) -> String {
        let report = Report {
            period: self.period,
            shear_speed: self.shear_speed,
            n_k: self.k.len(),
            n_bands: self.n_bands(),
            f_max,
            gaps,
            flat_bands,
        };
        serde_json::to_string_pretty(&report).expect("report serializes")
    }
}

/// Band diagram `F` against `kd` as a standalone SVG, gaps shaded.
pub fn svg_plot(diagram: &DispersionDiagram, f_max: f64, gaps: &[BandGap]) -> String {
    let (w, h, pad) = (640.0, 480.0, 50.0);
    let kd_max = diagram.kd(diagram.k.len() - 1).max(f64::MIN_POSITIVE);
    let x = |kd: f64| pad + (w - 2.0 * pad) * kd / kd_max;
    let y = |f: f64| h - pad - (h - 2.0 * pad) * (f / f_max).min(1.0);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    for g in gaps {
        let _ = writeln!(
            s,
            "<rect x=\"{pad}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"#f4d03f\" fill-opacity=\"0.35\"/>",
            y(g.hi),
            w - 2.0 * pad,
            y(g.lo) - y(g.hi)
        );
    }
    for j in 0..diagram.n_bands() {
        let pts: Vec<String> =
            diagram.band(j).iter().enumerate().map(|(i, &f)| format!("{:.2},{:.2}", x(diagram.kd(i)), y(f))).collect();
        let _ = writeln!(
            s,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e79\" stroke-width=\"1.5\"/>",
            pts.join(" ")
        );
    }
    let _ = writeln!(
        s,
        "<rect x=\"{pad}\" y=\"{pad}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">kd</text>", w / 2.0, h - 12.0);
    let _ = writeln!(s, "<text x=\"14\" y=\"{}\" font-size=\"14\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\">F = fd/v</text>", h / 2.0, h / 2.0);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{f_max:.3}</text>",
        pad - 4.0,
        pad + 4.0
    );
    let _ =
        writeln!(s, "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">0</text>", pad - 4.0, h - pad + 4.0);
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">pi</text>",
        w - pad,
        h - pad + 16.0
    );
    s.push_str("</svg>\n");
    s
}
