use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use super::{Axis, BoundaryEdge, BoundaryTag, Element, Region, TaggedMesh, PERIODIC_TOL};
use crate::error::{Error, Result};
use crate::material::Material;

/// Incremental T6 mesh builder with coordinate-based node sharing.
pub(crate) struct MeshBuilder {
    nodes: Vec<[f64; 2]>,
    lookup: HashMap<(i64, i64), usize>,
    quantum: f64,
    elements: Vec<Element>,
}

impl MeshBuilder {
    pub fn new(length_scale: f64) -> Self {
        MeshBuilder { nodes: Vec::new(), lookup: HashMap::new(), quantum: 1e-10 * length_scale, elements: Vec::new() }
    }

    pub fn node(&mut self, p: [f64; 2]) -> usize {
        let key = ((p[0] / self.quantum).round() as i64, (p[1] / self.quantum).round() as i64);
        if let Some(&i) = self.lookup.get(&key) {
            return i;
        }
        let i = self.nodes.len();
        self.nodes.push(p);
        self.lookup.insert(key, i);
        i
    }

    /// Adds a straight-sided quadratic triangle; orientation is fixed up to counter-clockwise.
    pub fn triangle(&mut self, a: [f64; 2], b: [f64; 2], c: [f64; 2], region: Region) {
        let cross = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let (b, c) = if cross < 0.0 { (c, b) } else { (b, c) };
        let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let nodes = [
            self.node(a),
            self.node(b),
            self.node(c),
            self.node(mid(a, b)),
            self.node(mid(b, c)),
            self.node(mid(c, a)),
        ];
        self.elements.push(Element { nodes, region });
    }

    /// Meshes the tensor-product cells of `xs` x `ys` for which `region_of` returns a region.
    pub fn grid(&mut self, xs: &[f64], ys: &[f64], region_of: impl Fn([f64; 2]) -> Option<Region>) {
        for j in 0..ys.len() - 1 {
            for i in 0..xs.len() - 1 {
                let center = [0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])];
                if let Some(region) = region_of(center) {
                    let p00 = [xs[i], ys[j]];
                    let p10 = [xs[i + 1], ys[j]];
                    let p11 = [xs[i + 1], ys[j + 1]];
                    let p01 = [xs[i], ys[j + 1]];
                    self.triangle(p00, p10, p11, region);
                    self.triangle(p00, p11, p01, region);
                }
            }
        }
    }

    /// Meshes a polygonal disk with concentric rings.
    ///
    /// The outer ring has `segments` nodes; the ones closest to each angle in
    /// `snap_angles` are moved onto that angle exactly so links can attach there.
    pub fn disk(
        &mut self,
        center: [f64; 2],
        radius: f64,
        rings: usize,
        segments: usize,
        snap_angles: &[f64],
        region: Region,
    ) {
        let rings = rings.max(1);
        let mut ring_angles: Vec<Vec<f64>> = Vec::with_capacity(rings);
        for j in 1..=rings {
            let count = ((segments * j) as f64 / rings as f64).round().max(6.0) as usize;
            let mut angles: Vec<f64> = (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect();
            if j == rings {
                for &target in snap_angles {
                    let t = target.rem_euclid(2.0 * PI);
                    let step = 2.0 * PI / count as f64;
                    let i = ((t / step).round() as usize) % count;
                    angles[i] = if i == 0 && t > PI { t - 2.0 * PI } else { t };
                }
            }
            ring_angles.push(angles);
        }
        let point = |r: f64, t: f64| [center[0] + r * t.cos(), center[1] + r * t.sin()];
        // Innermost fan.
        let inner = &ring_angles[0];
        let r1 = radius / rings as f64;
        for i in 0..inner.len() {
            let a = inner[i];
            let b = inner[(i + 1) % inner.len()];
            self.triangle(center, point(r1, a), point(r1, b), region);
        }
        for j in 1..rings {
            let (ra, rb) = (radius * j as f64 / rings as f64, radius * (j + 1) as f64 / rings as f64);
            let a = &ring_angles[j - 1];
            let b = &ring_angles[j];
            let (na, nb) = (a.len(), b.len());
            let angle = |ring: &[f64], k: usize| {
                let n = ring.len();
                ring[k % n] + 2.0 * PI * (k / n) as f64
            };
            let (mut i, mut k) = (0usize, 0usize);
            while i < na || k < nb {
                let advance_inner = if i >= na {
                    false
                } else if k >= nb {
                    true
                } else {
                    angle(a, i + 1) < angle(b, k + 1)
                };
                if advance_inner {
                    self.triangle(point(ra, a[i % na]), point(ra, a[(i + 1) % na]), point(rb, b[k % nb]), region);
                    i += 1;
                } else {
                    self.triangle(point(ra, a[i % na]), point(rb, b[(k + 1) % nb]), point(rb, b[k % nb]), region);
                    k += 1;
                }
            }
        }
    }

    /// Finds boundary edges, tags them, and pairs periodic faces.
    pub fn finish(
        self,
        period: f64,
        axis: Axis,
        materials: BTreeMap<String, Material>,
        dirichlet: impl Fn([f64; 2], [f64; 2]) -> bool,
    ) -> Result<TaggedMesh> {
        let mut counts: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for e in &self.elements {
            for (a, b, m) in [
                (e.nodes[0], e.nodes[1], e.nodes[3]),
                (e.nodes[1], e.nodes[2], e.nodes[4]),
                (e.nodes[2], e.nodes[0], e.nodes[5]),
            ] {
                let key = (a.min(b), a.max(b));
                counts.entry(key).and_modify(|c| c.0 += 1).or_insert((1, m));
            }
        }
        let ax = axis.index();
        let tol = PERIODIC_TOL * period;
        let mut keys: Vec<_> = counts.into_iter().filter(|(_, (c, _))| *c == 1).collect();
        keys.sort_unstable_by_key(|(k, _)| *k);
        let mut boundary_edges = Vec::with_capacity(keys.len());
        for ((a, b), (_, m)) in keys {
            let (pa, pb) = (self.nodes[a], self.nodes[b]);
            let tag = if dirichlet(pa, pb) {
                BoundaryTag::Dirichlet
            } else if pa[ax].abs() < tol && pb[ax].abs() < tol {
                BoundaryTag::PeriodicMaster
            } else if (pa[ax] - period).abs() < tol && (pb[ax] - period).abs() < tol {
                BoundaryTag::PeriodicSlave
            } else {
                BoundaryTag::TractionFree
            };
            boundary_edges.push(BoundaryEdge { nodes: [a, m, b], tag });
        }

        let periodic_pairs = pair_faces(&self.nodes, period, axis, tol)?;
        let mesh = TaggedMesh {
            nodes: self.nodes,
            elements: self.elements,
            boundary_edges,
            link_elements: Vec::new(),
            point_masses: Vec::new(),
            pinned_nodes: Vec::new(),
            periodic_pairs,
            materials,
            period,
            axis,
            cells: 1,
        };
        Ok(mesh)
    }
}

/// Matches every node on the `axis = 0` face with one on the `axis = period` face.
fn pair_faces(nodes: &[[f64; 2]], period: f64, axis: Axis, tol: f64) -> Result<Vec<(usize, usize)>> {
    let ax = axis.index();
    let other = 1 - ax;
    let mut masters: Vec<usize> = (0..nodes.len()).filter(|&i| nodes[i][ax].abs() < tol).collect();
    let mut slaves: Vec<usize> = (0..nodes.len()).filter(|&i| (nodes[i][ax] - period).abs() < tol).collect();
    if masters.len() != slaves.len() {
        return Err(Error::Meshing(format!(
            "periodic faces are not congruent: {} master nodes vs {} slave nodes",
            masters.len(),
            slaves.len()
        )));
    }
    masters.sort_by(|&a, &b| nodes[a][other].total_cmp(&nodes[b][other]));
    slaves.sort_by(|&a, &b| nodes[a][other].total_cmp(&nodes[b][other]));
    let mut pairs = Vec::with_capacity(masters.len());
    for (&m, &s) in masters.iter().zip(&slaves) {
        if (nodes[m][other] - nodes[s][other]).abs() > tol {
            return Err(Error::Meshing(format!(
                "periodic faces are not congruent near coordinate {:.6}",
                nodes[m][other]
            )));
        }
        pairs.push((m, s));
    }
    Ok(pairs)
}

/// Subdivides each interval between consecutive breakpoints uniformly, with
/// at most `target(lo, hi)` spacing.
pub(crate) fn graded_lines(breaks: &[f64], divisions: impl Fn(f64, f64) -> usize) -> Vec<f64> {
    let mut b: Vec<f64> = breaks.to_vec();
    b.sort_by(f64::total_cmp);
    b.dedup_by(|x, y| (*x - *y).abs() < 1e-12 * (1.0 + y.abs()));
    let mut out = vec![b[0]];
    for w in b.windows(2) {
        let n = divisions(w[0], w[1]).max(1);
        for i in 1..=n {
            out.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
        }
    }
    out
}
