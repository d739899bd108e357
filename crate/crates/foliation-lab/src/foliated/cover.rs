//! Clean covers of the flat torus adapted to the horizontal foliation.
//!
//! The triangulation is the square lattice rotated by 45 degrees, split
//! along vertical diagonals, so edges have directions `(1, 1)`, `(-1, 1)` and
//! `(0, 2)` and none is tangent to a leaf. Vertices are jiggled by seeded
//! offsets. Each simplex carries an open set with a chart onto `(0, 1)^2` in
//! which leaves stay horizontal: squares around vertices, slanted strips
//! around edges and curved boxes around triangles whose sides follow the
//! triangle's sides with rounded corners.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::foliation::{Foliation2D, P2};
use crate::error::{LabError, Result};
use crate::numeric::rng;

pub type J2 = [[f64; 2]; 2];

/// Adapted-chart radius of the model: balls of radius below 1/2 embed in the
/// unit torus and carry the global adapted coordinates.
pub const ADAPTED_RADIUS: f64 = 0.5;
/// Upper end of the admissible widths.
pub const MAX_WIDTH: f64 = 0.099;

/// Geometric constants in units of the lattice step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverShape {
    pub jiggle: f64,
    pub vertex_half: f64,
    pub edge_half: f64,
    pub edge_overhang: f64,
    pub cell_margin: f64,
    pub tip_radius: f64,
    pub tip_overhang: f64,
    pub corner_radius: f64,
}

impl Default for CoverShape {
    fn default() -> Self {
        CoverShape {
            jiggle: 0.03,
            vertex_half: 0.4,
            edge_half: 0.025,
            edge_overhang: 0.01,
            cell_margin: 1e-4,
            tip_radius: 3e-5,
            tip_overhang: 3e-5,
            corner_radius: 0.002,
        }
    }
}

/// Piecewise-linear `x(y)` through knots `(y, x)`, constant beyond the end
/// knots, each corner replaced by a quadratic over `|y - y_k| < r_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub knots: Vec<P2>,
    pub radii: Vec<f64>,
}

impl Profile {
    fn slope_in(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.seg_slope(k - 1)
        }
    }

    fn slope_out(&self, k: usize) -> f64 {
        if k + 1 == self.knots.len() {
            0.0
        } else {
            self.seg_slope(k)
        }
    }

    fn seg_slope(&self, k: usize) -> f64 {
        let (a, b) = (self.knots[k], self.knots[k + 1]);
        (b[1] - a[1]) / (b[0] - a[0])
    }

    /// `(x, dx/dy)`.
    pub fn eval(&self, y: f64) -> (f64, f64) {
        for (k, (&[yk, xk], &r)) in self.knots.iter().zip(&self.radii).enumerate() {
            if (y - yk).abs() < r {
                let (s1, s2) = (self.slope_in(k), self.slope_out(k));
                let t = y - yk + r;
                return (xk + s1 * (y - yk) + (s2 - s1) * t * t / (4.0 * r), s1 + (s2 - s1) * t / (2.0 * r));
            }
        }
        let last = self.knots.len() - 1;
        if y <= self.knots[0][0] {
            return (self.knots[0][1], 0.0);
        }
        if y >= self.knots[last][0] {
            return (self.knots[last][1], 0.0);
        }
        let k = (0..last).find(|&k| y <= self.knots[k + 1][0]).unwrap_or(last - 1);
        let s = self.seg_slope(k);
        (self.knots[k][1] + s * (y - self.knots[k][0]), s)
    }
}

/// Adapted chart of a cover element onto `[0, 1]^2`. The second chart
/// coordinate depends on `y` alone, so horizontal lines stay horizontal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Chart {
    Square { center: P2, half: f64 },
    Strip { base: P2, slope: f64, y0: f64, y1: f64, half: f64 },
    Cell { y0: f64, y1: f64, left: Profile, right: Profile, margin: f64, tip: f64 },
}

impl Chart {
    fn cell_sides(left: &Profile, right: &Profile, margin: f64, tip: f64, y: f64) -> [f64; 4] {
        let (l, dl) = left.eval(y);
        let (r, dr) = right.eval(y);
        let a = (1.0 + margin) * l - margin * r - tip;
        let b = (1.0 + margin) * r - margin * l + tip;
        [a, (1.0 + margin) * dl - margin * dr, b, (1.0 + margin) * dr - margin * dl]
    }

    /// Chart coordinates of `p` and the Jacobian of the chart.
    pub fn to_chart(&self, p: P2) -> (P2, J2) {
        match self {
            Chart::Square { center, half } => {
                let s = 0.5 / half;
                ([(p[0] - center[0]) * s + 0.5, (p[1] - center[1]) * s + 0.5], [[s, 0.0], [0.0, s]])
            }
            Chart::Strip { base, slope, y0, y1, half } => {
                let s = 0.5 / half;
                let h = y1 - y0;
                let xe = base[0] + slope * (p[1] - base[1]);
                ([(p[0] - xe) * s + 0.5, (p[1] - y0) / h], [[s, -slope * s], [0.0, 1.0 / h]])
            }
            Chart::Cell { y0, y1, left, right, margin, tip } => {
                let h = y1 - y0;
                let [a, da, b, db] = Self::cell_sides(left, right, *margin, *tip, p[1]);
                let w = b - a;
                let x = (p[0] - a) / w;
                ([x, (p[1] - y0) / h], [[1.0 / w, -(da + x * (db - da)) / w], [0.0, 1.0 / h]])
            }
        }
    }

    /// Inverse chart and its Jacobian.
    pub fn from_chart(&self, q: P2) -> (P2, J2) {
        match self {
            Chart::Square { center, half } => {
                let s = 2.0 * half;
                ([center[0] + (q[0] - 0.5) * s, center[1] + (q[1] - 0.5) * s], [[s, 0.0], [0.0, s]])
            }
            Chart::Strip { base, slope, y0, y1, half } => {
                let h = y1 - y0;
                let y = y0 + q[1] * h;
                let xe = base[0] + slope * (y - base[1]);
                ([xe + (q[0] - 0.5) * 2.0 * half, y], [[2.0 * half, slope * h], [0.0, h]])
            }
            Chart::Cell { y0, y1, left, right, margin, tip } => {
                let h = y1 - y0;
                let y = y0 + q[1] * h;
                let [a, da, b, db] = Self::cell_sides(left, right, *margin, *tip, y);
                ([a + q[0] * (b - a), y], [[b - a, (da + q[0] * (db - da)) * h], [0.0, h]])
            }
        }
    }

    /// Height of the chart box, the scale of the second coordinate.
    pub fn height(&self) -> f64 {
        match self {
            Chart::Square { half, .. } => 2.0 * half,
            Chart::Strip { y0, y1, .. } | Chart::Cell { y0, y1, .. } => y1 - y0,
        }
    }
}

/// Distance of a chart point to the face set `B` of a simplex of dimension `dim`.
pub fn face_distance(dim: usize, q: P2) -> f64 {
    match dim {
        0 => f64::INFINITY,
        1 => q[1].min(1.0 - q[1]),
        _ => q[0].min(1.0 - q[0]).min(q[1]).min(1.0 - q[1]),
    }
}

fn inside(q: P2) -> bool {
    q[0] > 0.0 && q[0] < 1.0 && q[1] > 0.0 && q[1] < 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Simplex {
    pub dim: usize,
    /// Vertex ids, sorted.
    pub verts: Vec<usize>,
    /// Positions of the vertices in this representative, ordered as `verts`.
    pub points: Vec<P2>,
    pub chart: Chart,
    pub w: f64,
    /// Codimension-one faces.
    pub faces: Vec<usize>,
    pub center: P2,
    pub bbox: [P2; 2],
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverReport {
    pub delta: f64,
    pub lattice: usize,
    pub simplices: [usize; 3],
    pub max_diameter: f64,
    pub min_edge_rise: f64,
    pub samples: usize,
    pub intersection_violations: usize,
    pub collar_violations: usize,
    pub overlap_violations: usize,
    pub min_width: [f64; 3],
    pub jiggle_attempts: usize,
    pub pass: bool,
}

/// A `delta`-clean cover of the torus adapted to a linear foliation, in the
/// foliation's adapted coordinates.
#[derive(Debug, Clone, Serialize)]
pub struct CleanCover2D {
    pub foliation: Foliation2D,
    pub delta: f64,
    pub seed: u64,
    pub lattice: usize,
    pub shape: CoverShape,
    pub vertices: Vec<P2>,
    pub simplices: Vec<Simplex>,
    pub by_dim: [Vec<usize>; 3],
    #[serde(skip)]
    buckets: Vec<Vec<usize>>,
    #[serde(skip)]
    face_index: BTreeMap<Vec<usize>, usize>,
    pub report: CoverReport,
}

const JIGGLE_ATTEMPTS: usize = 5;
const REFINE_ATTEMPTS: usize = 3;

/// Build and verify a clean cover with elements of diameter below `delta`.
pub fn build_clean_cover(foliation: Foliation2D, delta: f64, seed: u64) -> Result<CleanCover2D> {
    if !(delta > 0.0 && delta < ADAPTED_RADIUS) {
        return Err(LabError::Precondition(format!(
            "delta = {delta} is not below the adapted-chart radius {ADAPTED_RADIUS}"
        )));
    }
    let mut lattice = ((2.3 / delta).ceil() as usize).max(6);
    lattice += lattice % 2;
    let mut last = None;
    for _ in 0..REFINE_ATTEMPTS {
        for attempt in 0..JIGGLE_ATTEMPTS {
            let s = seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(attempt as u64));
            let mut cover = CleanCover2D::assemble(foliation, delta, seed, s, lattice, CoverShape::default())?;
            cover.report.jiggle_attempts = attempt + 1;
            if cover.report.pass {
                return Ok(cover);
            }
            let too_big = cover.report.max_diameter >= delta;
            last = Some(cover.report);
            if too_big {
                break;
            }
        }
        lattice += 2;
    }
    Err(LabError::SearchExhausted(format!("no clean cover after jiggling and refinement: {last:?}")))
}

impl CleanCover2D {
    fn assemble(
        foliation: Foliation2D,
        delta: f64,
        seed: u64,
        jiggle_seed: u64,
        n: usize,
        shape: CoverShape,
    ) -> Result<Self> {
        let s = 1.0 / n as f64;
        let mut r = rng(jiggle_seed);
        // lattice points (a, b) with a + b even
        let mut ids = vec![usize::MAX; n * n];
        let mut vertices = Vec::new();
        for b in 0..n {
            for a in 0..n {
                if (a + b) % 2 == 0 {
                    ids[b * n + a] = vertices.len();
                    let jx: f64 = r.gen_range(-shape.jiggle..shape.jiggle);
                    let jy: f64 = r.gen_range(-shape.jiggle..shape.jiggle);
                    vertices.push([(a as f64 + jx) * s, (b as f64 + jy) * s]);
                }
            }
        }
        let vid = |a: i64, b: i64| ids[(b.rem_euclid(n as i64) as usize) * n + a.rem_euclid(n as i64) as usize];
        let pos = |a: i64, b: i64| {
            let p = vertices[vid(a, b)];
            [p[0] + a.div_euclid(n as i64) as f64, p[1] + b.div_euclid(n as i64) as f64]
        };
        let mut cover = CleanCover2D {
            foliation,
            delta,
            seed,
            lattice: n,
            shape,
            vertices: vertices.clone(),
            simplices: Vec::new(),
            by_dim: [Vec::new(), Vec::new(), Vec::new()],
            buckets: Vec::new(),
            face_index: BTreeMap::new(),
            report: CoverReport {
                delta,
                lattice: n,
                simplices: [0; 3],
                max_diameter: 0.0,
                min_edge_rise: f64::INFINITY,
                samples: 0,
                intersection_violations: 0,
                collar_violations: 0,
                overlap_violations: 0,
                min_width: [MAX_WIDTH; 3],
                jiggle_attempts: 1,
                pass: false,
            },
        };
        let mut lattice_points: Vec<(i64, i64)> = Vec::new();
        for b in 0..n as i64 {
            for a in 0..n as i64 {
                if (a + b) % 2 == 0 {
                    lattice_points.push((a, b));
                }
            }
        }
        for &(a, b) in &lattice_points {
            let p = pos(a, b);
            let half = shape.vertex_half * s;
            cover.push(0, vec![(vid(a, b), p)], Chart::Square { center: p, half });
        }
        for &(a, b) in &lattice_points {
            for (da, db) in [(1, 1), (-1, 1), (0, 2)] {
                let (p, q) = (pos(a, b), pos(a + da, b + db));
                let slope = (q[0] - p[0]) / (q[1] - p[1]);
                let chart = Chart::Strip {
                    base: p,
                    slope,
                    y0: p[1] - shape.edge_overhang * s,
                    y1: q[1] + shape.edge_overhang * s,
                    half: shape.edge_half * s,
                };
                cover.push(1, vec![(vid(a, b), p), (vid(a + da, b + db), q)], chart);
            }
        }
        for &(a, b) in &lattice_points {
            for side in [1i64, -1] {
                let corners = [(a, b), (a + side, b + 1), (a, b + 2)];
                let pts: Vec<(usize, P2)> = corners.iter().map(|&(x, y)| (vid(x, y), pos(x, y))).collect();
                let chart = cell_chart([pts[0].1, pts[1].1, pts[2].1], &shape, s);
                cover.push(2, pts, chart);
            }
        }
        cover.link_faces()?;
        cover.fill_buckets();
        cover.verify();
        Ok(cover)
    }

    fn push(&mut self, dim: usize, mut pts: Vec<(usize, P2)>, chart: Chart) {
        pts.sort_by_key(|t| t.0);
        let verts: Vec<usize> = pts.iter().map(|t| t.0).collect();
        let points: Vec<P2> = pts.iter().map(|t| t.1).collect();
        let k = 64;
        let mut boundary = Vec::with_capacity(4 * k);
        for i in 0..k {
            let t = i as f64 / k as f64;
            for q in [[t, 0.0], [1.0, t], [1.0 - t, 1.0], [0.0, 1.0 - t]] {
                boundary.push(chart.from_chart(q).0);
            }
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &boundary {
            for c in 0..2 {
                lo[c] = lo[c].min(p[c]);
                hi[c] = hi[c].max(p[c]);
            }
        }
        let mut diameter = 0.0f64;
        for (i, p) in boundary.iter().enumerate() {
            for q in &boundary[i + 1..] {
                diameter = diameter.max((p[0] - q[0]).hypot(p[1] - q[1]));
            }
        }
        let center = chart.from_chart([0.5, 0.5]).0;
        let idx = self.simplices.len();
        self.face_index.insert(verts.clone(), idx);
        self.by_dim[dim].push(idx);
        self.simplices.push(Simplex {
            dim,
            verts,
            points,
            chart,
            w: MAX_WIDTH,
            faces: Vec::new(),
            center,
            bbox: [lo, hi],
            diameter,
        });
    }

    fn link_faces(&mut self) -> Result<()> {
        for t in 0..self.simplices.len() {
            let verts = self.simplices[t].verts.clone();
            if verts.len() < 2 {
                continue;
            }
            let mut faces = Vec::new();
            for skip in 0..verts.len() {
                let f: Vec<usize> = verts.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, &v)| v).collect();
                let idx = *self
                    .face_index
                    .get(&f)
                    .ok_or_else(|| LabError::InvalidModel(format!("missing face {f:?} of simplex {t}")))?;
                faces.push(idx);
            }
            self.simplices[t].faces = faces;
        }
        Ok(())
    }

    fn fill_buckets(&mut self) {
        let n = self.lattice;
        self.buckets = vec![Vec::new(); n * n];
        for (t, sx) in self.simplices.iter().enumerate() {
            let [lo, hi] = sx.bbox;
            let (i0, i1) = ((lo[0] * n as f64).floor() as i64, (hi[0] * n as f64).floor() as i64);
            let (j0, j1) = ((lo[1] * n as f64).floor() as i64, (hi[1] * n as f64).floor() as i64);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let cell = (j.rem_euclid(n as i64) as usize) * n + i.rem_euclid(n as i64) as usize;
                    if !self.buckets[cell].contains(&t) {
                        self.buckets[cell].push(t);
                    }
                }
            }
        }
    }

    /// Simplices whose open set may contain `p`.
    pub fn candidates(&self, p: P2) -> &[usize] {
        let n = self.lattice as f64;
        let i = (p[0].rem_euclid(1.0) * n).floor() as usize % self.lattice;
        let j = (p[1].rem_euclid(1.0) * n).floor() as usize % self.lattice;
        &self.buckets[j * self.lattice + i]
    }

    /// If `p` (a point of the plane) lies in `U_t` up to a lattice
    /// translation, the translated point in the frame of `t`.
    pub fn contains(&self, t: usize, p: P2) -> Option<P2> {
        let sx = &self.simplices[t];
        let q = [p[0] + (sx.center[0] - p[0]).round(), p[1] + (sx.center[1] - p[1]).round()];
        if q[0] < sx.bbox[0][0] || q[0] > sx.bbox[1][0] || q[1] < sx.bbox[0][1] || q[1] > sx.bbox[1][1] {
            return None;
        }
        inside(sx.chart.to_chart(q).0).then_some(q)
    }

    /// First simplex of dimension `dim` whose open set contains `p`, with the
    /// translated point.
    pub fn locate(&self, dim: usize, p: P2) -> Option<(usize, P2)> {
        self.candidates(p)
            .iter()
            .filter(|&&t| self.simplices[t].dim == dim)
            .find_map(|&t| self.contains(t, p).map(|q| (t, q)))
    }

    /// The simplex spanned by the common vertices of `t` and `u`.
    pub fn meet(&self, t: usize, u: usize) -> Option<usize> {
        let a = &self.simplices[t].verts;
        let common: Vec<usize> = self.simplices[u].verts.iter().copied().filter(|v| a.contains(v)).collect();
        if common.is_empty() {
            None
        } else {
            self.face_index.get(&common).copied()
        }
    }

    fn verify(&mut self) {
        let mut rep = self.report.clone();
        rep.simplices = [self.by_dim[0].len(), self.by_dim[1].len(), self.by_dim[2].len()];
        rep.max_diameter = self.simplices.iter().map(|s| s.diameter).fold(0.0, f64::max);
        for &e in &self.by_dim[1] {
            let p = &self.simplices[e].points;
            let (dx, dy) = (p[1][0] - p[0][0], p[1][1] - p[0][1]);
            rep.min_edge_rise = rep.min_edge_rise.min(dy.abs() / dx.hypot(dy));
        }
        let mut widths = vec![MAX_WIDTH; self.simplices.len()];
        for t in 0..self.simplices.len() {
            let dim = self.simplices[t].dim;
            let coords = sample_coords(dim);
            let (mut uncovered, mut overlap) = (f64::INFINITY, 0.0f64);
            for &y in &coords {
                for &x in &coords {
                    let q = [x, y];
                    let p = self.simplices[t].chart.from_chart(q).0;
                    rep.samples += 1;
                    let db = face_distance(dim, q);
                    for &u in self.candidates(p) {
                        if u == t {
                            continue;
                        }
                        if self.contains(u, p).is_none() {
                            continue;
                        }
                        match self.meet(t, u) {
                            Some(f) if self.contains(f, p).is_some() => {}
                            _ => rep.intersection_violations += 1,
                        }
                        if self.simplices[u].dim == dim {
                            overlap = overlap.max(db);
                        }
                    }
                    if dim > 0 && db <= 2.0 * MAX_WIDTH + 1e-12 && db < uncovered {
                        let faces = &self.simplices[t].faces;
                        if !faces.iter().any(|&f| self.contains(f, p).is_some()) {
                            uncovered = db;
                        }
                    }
                }
            }
            if dim > 0 {
                let w = MAX_WIDTH.min(0.45 * uncovered);
                if !(overlap < w) {
                    rep.overlap_violations += 1;
                }
                widths[t] = w;
                rep.min_width[dim] = rep.min_width[dim].min(w);
            }
        }
        for (t, w) in widths.into_iter().enumerate() {
            self.simplices[t].w = w;
        }
        rep.pass = rep.max_diameter < self.delta
            && rep.min_edge_rise > 1e-3
            && rep.intersection_violations == 0
            && rep.collar_violations == 0
            && rep.overlap_violations == 0
            && rep.min_width.iter().all(|&w| w > 0.0);
        self.report = rep;
    }

    /// Re-run the sampled collar condition with the stored widths: every
    /// chart point within `2w` of the face set lies in a codimension-one
    /// face's open set. Returns the number of failures.
    pub fn collar_failures(&self) -> usize {
        let mut bad = 0;
        for t in 0..self.simplices.len() {
            let sx = &self.simplices[t];
            if sx.dim == 0 {
                continue;
            }
            for &y in &sample_coords(sx.dim) {
                for &x in &sample_coords(sx.dim) {
                    let q = [x, y];
                    if face_distance(sx.dim, q) <= 2.0 * sx.w {
                        let p = sx.chart.from_chart(q).0;
                        if !sx.faces.iter().any(|&f| self.contains(f, p).is_some()) {
                            bad += 1;
                        }
                    }
                }
            }
        }
        bad
    }
}

// fine near both ends, coarse in the middle
fn sample_coords(dim: usize) -> Vec<f64> {
    if dim == 0 {
        return (0..33).map(|i| (i as f64 + 0.5) / 33.0).collect();
    }
    let mut c: Vec<f64> = (1..=30).map(|k| k as f64 * 0.0015).collect();
    let mut m = 0.045 + 0.03;
    while m < 0.955 - 1e-9 {
        c.push(m);
        m += 0.03;
    }
    let tail: Vec<f64> = c.iter().rev().filter(|&&x| x < 0.5).map(|x| 1.0 - x).collect();
    c.retain(|&x| x < 0.5);
    c.extend(tail);
    c
}

fn cell_chart(corners: [P2; 3], shape: &CoverShape, s: f64) -> Chart {
    let mut v = corners;
    v.sort_by(|a, b| a[1].total_cmp(&b[1]));
    let [bot, mid, top] = v;
    let chord = bot[0] + (mid[1] - bot[1]) * (top[0] - bot[0]) / (top[1] - bot[1]);
    let tip = shape.tip_radius * s;
    let corner = shape.corner_radius * s;
    let straight = Profile { knots: vec![[bot[1], bot[0]], [top[1], top[0]]], radii: vec![tip, tip] };
    let bent = Profile {
        knots: vec![[bot[1], bot[0]], [mid[1], mid[0]], [top[1], top[0]]],
        radii: vec![tip, corner, tip],
    };
    let (left, right) = if mid[0] < chord { (bent, straight) } else { (straight, bent) };
    Chart::Cell {
        y0: bot[1] - shape.tip_overhang * s,
        y1: top[1] + shape.tip_overhang * s,
        left,
        right,
        margin: shape.cell_margin,
        tip,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_is_c1() {
        let p = Profile { knots: vec![[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], radii: vec![0.1, 0.2, 0.1] };
        for &k in &[0.0, 1.0, 2.0] {
            for &r in &[0.1, 0.2] {
                for sgn in [-1.0, 1.0] {
                    let y = k + sgn * r;
                    let (a, da) = p.eval(y - 1e-9);
                    let (b, db) = p.eval(y + 1e-9);
                    assert!((a - b).abs() < 1e-8 && (da - db).abs() < 1e-7, "{y}");
                }
            }
        }
        assert_eq!(p.eval(-3.0), (0.0, 0.0));
    }

    #[test]
    fn charts_invert() {
        let c = cell_chart([[0.0, 0.0], [0.1, 0.1], [0.0, 0.2]], &CoverShape::default(), 0.1);
        for &q in &[[0.3, 0.4], [0.01, 0.5], [0.9, 0.02], [0.5, 0.5]] {
            let (p, jp) = c.from_chart(q);
            let (q2, jq) = c.to_chart(p);
            assert!((q2[0] - q[0]).abs() < 1e-12 && (q2[1] - q[1]).abs() < 1e-12);
            // the Jacobians are inverse to each other
            let m = [
                [jq[0][0] * jp[0][0] + jq[0][1] * jp[1][0], jq[0][0] * jp[0][1] + jq[0][1] * jp[1][1]],
                [jq[1][0] * jp[0][0] + jq[1][1] * jp[1][0], jq[1][0] * jp[0][1] + jq[1][1] * jp[1][1]],
            ];
            assert!((m[0][0] - 1.0).abs() < 1e-9 && m[0][1].abs() < 1e-9 && (m[1][1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cover_at_fifth() {
        let c = build_clean_cover(Foliation2D::horizontal(), 0.2, 7).unwrap();
        let r = &c.report;
        assert!(r.pass, "{r:?}");
        assert!(r.max_diameter < 0.2);
        assert_eq!(r.simplices[1], 3 * r.simplices[0]);
        assert_eq!(r.simplices[2], 2 * r.simplices[0]);
        assert_eq!(c.collar_failures(), 0);
        for s in &c.simplices {
            assert!(s.w > 0.0 && s.w < 0.1);
        }
    }

    #[test]
    fn large_delta_rejected() {
        assert!(matches!(build_clean_cover(Foliation2D::horizontal(), 0.9, 1), Err(LabError::Precondition(_))));
    }

    #[test]
    fn deterministic() {
        let a = build_clean_cover(Foliation2D::horizontal(), 0.3, 11).unwrap();
        let b = build_clean_cover(Foliation2D::horizontal(), 0.3, 11).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert_eq!(a.simplices, b.simplices);
    }
}
