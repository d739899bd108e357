//! Piecewise-linear embeddings of the unit square, their spline smoothings
//! and the sampled embedding certificate.

use std::sync::Arc;

use serde::Serialize;

use super::family::{collar_cutoff, unit_node};
use crate::error::{LabError, Result};
use crate::numeric::smoothstep;

pub type Point = [f64; 2];
pub type Jacobian = [[f64; 2]; 2];

/// A map of the unit square into the plane.
pub trait PlanarMap: Send + Sync {
    fn eval(&self, p: Point) -> Point;

    /// Central differences unless overridden; rows are image components.
    fn jacobian(&self, p: Point) -> Jacobian {
        const H: f64 = 1e-6;
        let fx = (self.eval([p[0] + H, p[1]]), self.eval([p[0] - H, p[1]]));
        let fy = (self.eval([p[0], p[1] + H]), self.eval([p[0], p[1] - H]));
        [
            [(fx.0[0] - fx.1[0]) / (2.0 * H), (fy.0[0] - fy.1[0]) / (2.0 * H)],
            [(fx.0[1] - fx.1[1]) / (2.0 * H), (fy.0[1] - fy.1[1]) / (2.0 * H)],
        ]
    }
}

pub fn det(j: &Jacobian) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

/// Wraps a closure as a [`PlanarMap`].
pub struct FnMap<F>(pub F);

impl<F: Fn(Point) -> Point + Send + Sync> PlanarMap for FnMap<F> {
    fn eval(&self, p: Point) -> Point {
        (self.0)(p)
    }
}

/// The identity of the square.
pub struct Identity;

impl PlanarMap for Identity {
    fn eval(&self, p: Point) -> Point {
        p
    }
    fn jacobian(&self, _: Point) -> Jacobian {
        [[1.0, 0.0], [0.0, 1.0]]
    }
}

/// Vertex images of the `(n+1)^2` grid of the square; each cell is split
/// along its `(0,0)-(1,1)` diagonal and interpolated affinely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PLEmbedding2D {
    pub n: usize,
    /// `verts[i * (n + 1) + j]` is the image of `(i / n, j / n)`.
    pub verts: Vec<Point>,
}

impl PLEmbedding2D {
    /// Validated: every triangle positively oriented and the boundary image simple.
    pub fn new(n: usize, verts: Vec<Point>) -> Result<Self> {
        if n < 1 || verts.len() != (n + 1) * (n + 1) {
            return Err(LabError::GridMismatch(format!("expected {} vertices", (n + 1) * (n + 1))));
        }
        let e = PLEmbedding2D { n, verts };
        if let Some((cell, area)) = e.min_triangle_area() {
            if !(area > 0.0) {
                return Err(LabError::NotEmbedding(format!("triangle in cell {cell} has signed area {area:.3e}")));
            }
        }
        if let Some((a, b)) = first_crossing(&e.boundary_polygon()) {
            return Err(LabError::NotEmbedding(format!("boundary segments {a} and {b} intersect")));
        }
        Ok(e)
    }

    pub fn from_fn<F: Fn(Point) -> Point>(n: usize, f: F) -> Result<Self> {
        let mut verts = Vec::with_capacity((n + 1) * (n + 1));
        for i in 0..=n {
            for j in 0..=n {
                verts.push(f([unit_node(i, n + 1), unit_node(j, n + 1)]));
            }
        }
        Self::new(n, verts)
    }

    fn v(&self, i: usize, j: usize) -> Point {
        self.verts[i * (self.n + 1) + j]
    }

    fn min_triangle_area(&self) -> Option<(usize, f64)> {
        let mut worst: Option<(usize, f64)> = None;
        for i in 0..self.n {
            for j in 0..self.n {
                let (a, b, c, d) = (self.v(i, j), self.v(i + 1, j), self.v(i + 1, j + 1), self.v(i, j + 1));
                let area = orient(a, b, c).min(orient(a, c, d));
                if worst.map_or(true, |w| area < w.1) {
                    worst = Some((i * self.n + j, area));
                }
            }
        }
        worst
    }

    /// Counter-clockwise boundary image, `4n` vertices.
    pub fn boundary_polygon(&self) -> Vec<Point> {
        let n = self.n;
        let mut p = Vec::with_capacity(4 * n);
        p.extend((0..n).map(|i| self.v(i, 0)));
        p.extend((0..n).map(|j| self.v(n, j)));
        p.extend((0..n).map(|i| self.v(n - i, n)));
        p.extend((0..n).map(|j| self.v(0, n - j)));
        p
    }
}

impl PlanarMap for PLEmbedding2D {
    fn eval(&self, p: Point) -> Point {
        let n = self.n;
        let cell = |x: f64| ((x * n as f64).floor().max(0.0) as usize).min(n - 1);
        let (i, j) = (cell(p[0]), cell(p[1]));
        let s = p[0] * n as f64 - i as f64;
        let t = p[1] * n as f64 - j as f64;
        let (a, b, c, d) = (self.v(i, j), self.v(i + 1, j), self.v(i + 1, j + 1), self.v(i, j + 1));
        let mut out = [0.0; 2];
        for k in 0..2 {
            out[k] = if s >= t {
                a[k] + s * (b[k] - a[k]) + t * (c[k] - b[k])
            } else {
                a[k] + s * (c[k] - d[k]) + t * (d[k] - a[k])
            };
        }
        out
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_meet(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, c: Point| {
        c[0] >= a[0].min(b[0]) && c[0] <= a[0].max(b[0]) && c[1] >= a[1].min(b[1]) && c[1] <= a[1].max(b[1])
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// First pair of non-adjacent edges of the closed polygon that touch, by the
/// all-pairs test.
pub fn first_crossing(poly: &[Point]) -> Option<(usize, usize)> {
    let n = poly.len();
    for a in 0..n {
        for b in a + 2..n {
            if a == 0 && b == n - 1 {
                continue;
            }
            if segments_meet(poly[a], poly[(a + 1) % n], poly[b], poly[(b + 1) % n]) {
                return Some((a, b));
            }
        }
    }
    None
}

fn bspline(t: f64) -> (f64, f64) {
    let a = t.abs();
    let sg = t.signum();
    if a < 1.0 {
        (2.0 / 3.0 - a * a + 0.5 * a * a * a, sg * (-2.0 * a + 1.5 * a * a))
    } else if a < 2.0 {
        let r = 2.0 - a;
        (r * r * r / 6.0, -sg * 0.5 * r * r)
    } else {
        (0.0, 0.0)
    }
}

/// Cubic B-spline quasi-interpolant of a map sampled on the `(m+1)^2` grid,
/// with linearly extrapolated ghost nodes. `C^2` and exact on affine maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplineMap {
    pub m: usize,
    coeffs: Vec<Point>,
}

impl SplineMap {
    pub fn from_map(f: &dyn PlanarMap, m: usize) -> Self {
        let w = m + 3;
        let mut coeffs = vec![[0.0; 2]; w * w];
        let idx = |i: usize, j: usize| i * w + j;
        for i in 0..=m {
            for j in 0..=m {
                coeffs[idx(i + 1, j + 1)] = f.eval([unit_node(i, m + 1), unit_node(j, m + 1)]);
            }
        }
        let lin = |a: Point, b: Point| [2.0 * a[0] - b[0], 2.0 * a[1] - b[1]];
        for j in 1..=m + 1 {
            coeffs[idx(0, j)] = lin(coeffs[idx(1, j)], coeffs[idx(2, j)]);
            coeffs[idx(m + 2, j)] = lin(coeffs[idx(m + 1, j)], coeffs[idx(m, j)]);
        }
        for i in 0..w {
            coeffs[idx(i, 0)] = lin(coeffs[idx(i, 1)], coeffs[idx(i, 2)]);
            coeffs[idx(i, m + 2)] = lin(coeffs[idx(i, m + 1)], coeffs[idx(i, m)]);
        }
        SplineMap { m, coeffs }
    }

    fn eval_with_jacobian(&self, p: Point) -> (Point, Jacobian) {
        let m = self.m as f64;
        let w = self.m + 3;
        let (tx, ty) = (p[0] * m, p[1] * m);
        let (ix, iy) = (tx.floor() as isize, ty.floor() as isize);
        let (mut v, mut jac) = ([0.0; 2], [[0.0; 2]; 2]);
        for i in ix - 1..=ix + 2 {
            let (bx, dbx) = bspline(tx - i as f64);
            if bx == 0.0 && dbx == 0.0 {
                continue;
            }
            for j in iy - 1..=iy + 2 {
                let (by, dby) = bspline(ty - j as f64);
                if by == 0.0 && dby == 0.0 {
                    continue;
                }
                let (ci, cj) = ((i + 1).clamp(0, w as isize - 1) as usize, (j + 1).clamp(0, w as isize - 1) as usize);
                let c = self.coeffs[ci * w + cj];
                for k in 0..2 {
                    v[k] += bx * by * c[k];
                    jac[k][0] += dbx * by * m * c[k];
                    jac[k][1] += bx * dby * m * c[k];
                }
            }
        }
        (v, jac)
    }
}

impl PlanarMap for SplineMap {
    fn eval(&self, p: Point) -> Point {
        self.eval_with_jacobian(p).0
    }
    fn jacobian(&self, p: Point) -> Jacobian {
        self.eval_with_jacobian(p).1
    }
}

/// Sampled embedding certificate of a map of the square.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingCertificate {
    pub samples_per_side: usize,
    pub min_jacobian: f64,
    pub first_bad_sample: Option<usize>,
    pub boundary_segments: usize,
    pub boundary_simple: bool,
    pub pass: bool,
}

/// Positive Jacobian at `s x s` samples plus non-intersection of the sampled
/// boundary image (`4(s-1)` segments).
pub fn certify_embedding(f: &dyn PlanarMap, s: usize) -> EmbeddingCertificate {
    let mut min_j = f64::INFINITY;
    let mut bad = None;
    for i in 0..s {
        for j in 0..s {
            let d = det(&f.jacobian([unit_node(i, s), unit_node(j, s)]));
            if !(d > 0.0) && bad.is_none() {
                bad = Some(i * s + j);
            }
            min_j = min_j.min(d);
        }
    }
    let k = s - 1;
    let mut poly = Vec::with_capacity(4 * k);
    let u = |i: usize| unit_node(i, s);
    poly.extend((0..k).map(|i| f.eval([u(i), 0.0])));
    poly.extend((0..k).map(|j| f.eval([1.0, u(j)])));
    poly.extend((0..k).map(|i| f.eval([u(k - i), 1.0])));
    poly.extend((0..k).map(|j| f.eval([0.0, u(k - j)])));
    let simple = first_crossing(&poly).is_none();
    EmbeddingCertificate {
        samples_per_side: s,
        min_jacobian: min_j,
        first_bad_sample: bad,
        boundary_segments: poly.len(),
        boundary_simple: simple,
        pass: bad.is_none() && simple,
    }
}

/// `sup |f - g|` over an `s x s` sample grid (Euclidean norm).
pub fn sup_distance(f: &dyn PlanarMap, g: &dyn PlanarMap, s: usize) -> f64 {
    let mut sup = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            let p = [unit_node(i, s), unit_node(j, s)];
            let (a, b) = (f.eval(p), g.eval(p));
            sup = sup.max((a[0] - b[0]).hypot(a[1] - b[1]));
        }
    }
    sup
}

/// `(x, y, z) -> image` prescribed near a collar.
pub type EmbeddingFn = Arc<dyn Fn(f64, f64, f64) -> Point + Send + Sync>;

#[derive(Clone)]
pub struct EmbeddingData {
    pub delta: f64,
    pub f: EmbeddingFn,
}

impl EmbeddingData {
    pub fn new<F: Fn(f64, f64, f64) -> Point + Send + Sync + 'static>(delta: f64, f: F) -> Self {
        EmbeddingData { delta, f: Arc::new(f) }
    }
}

impl std::fmt::Debug for EmbeddingData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingData").field("delta", &self.delta).finish()
    }
}

#[derive(Debug, Clone)]
pub enum EmbeddingCollar {
    Free,
    /// Slices near `z = 0, 1`.
    Z(EmbeddingData),
    /// `[0,1]_z x N^2_delta`.
    Xy(EmbeddingData),
    /// `N^3_delta`.
    Xyz(EmbeddingData),
}

impl EmbeddingCollar {
    fn data(&self) -> Option<&EmbeddingData> {
        match self {
            EmbeddingCollar::Free => None,
            EmbeddingCollar::Z(d) | EmbeddingCollar::Xy(d) | EmbeddingCollar::Xyz(d) => Some(d),
        }
    }

    fn cutoff(&self, p: Point, z: f64) -> f64 {
        match self {
            EmbeddingCollar::Free => 1.0,
            EmbeddingCollar::Z(d) => collar_cutoff(z, d.delta),
            EmbeddingCollar::Xy(d) => collar_cutoff(p[0], d.delta) * collar_cutoff(p[1], d.delta),
            EmbeddingCollar::Xyz(d) => {
                collar_cutoff(p[0], d.delta) * collar_cutoff(p[1], d.delta) * collar_cutoff(z, d.delta)
            }
        }
    }

    fn in_collar(&self, p: Point, z: f64, w: f64, closed: bool) -> bool {
        let near = |s: f64| if closed { s <= w || s >= 1.0 - w } else { s < w || s > 1.0 - w };
        match self {
            EmbeddingCollar::Free => false,
            EmbeddingCollar::Z(_) => near(z),
            EmbeddingCollar::Xy(_) => near(p[0]) || near(p[1]),
            EmbeddingCollar::Xyz(_) => near(p[0]) || near(p[1]) || near(z),
        }
    }
}

/// Spline smoothings of the slices, glued in `z` by a `C^2` partition of
/// unity that interpolates the slices, then blended with collar data.
#[derive(Debug, Clone)]
pub struct SmoothEmbeddingFamily {
    pub zs: Vec<f64>,
    pub slices: Vec<SplineMap>,
    pub collar: EmbeddingCollar,
}

impl SmoothEmbeddingFamily {
    pub fn eval(&self, z: f64, p: Point) -> Point {
        let k = self.slices.len();
        let free = if k == 1 {
            self.slices[0].eval(p)
        } else {
            let t = z * (k - 1) as f64;
            let i = (t.floor().max(0.0) as usize).min(k - 2);
            let w = smoothstep(t - i as f64);
            let (a, b) = (self.slices[i].eval(p), self.slices[i + 1].eval(p));
            if w == 0.0 {
                a
            } else if w == 1.0 {
                b
            } else {
                [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1]]
            }
        };
        let Some(data) = self.collar.data() else { return free };
        let chi = self.collar.cutoff(p, z);
        if chi == 0.0 {
            return (data.f)(p[0], p[1], z);
        }
        if chi == 1.0 {
            return free;
        }
        let d = (data.f)(p[0], p[1], z);
        [(1.0 - chi) * d[0] + chi * free[0], (1.0 - chi) * d[1] + chi * free[1]]
    }

    /// The slice at `z` as a planar map.
    pub fn slice(&self, z: f64) -> SliceMap<'_> {
        SliceMap { family: self, z }
    }
}

pub struct SliceMap<'a> {
    family: &'a SmoothEmbeddingFamily,
    z: f64,
}

impl PlanarMap for SliceMap<'_> {
    fn eval(&self, p: Point) -> Point {
        self.family.eval(self.z, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub z: f64,
    pub distance: f64,
    pub certificate: EmbeddingCertificate,
    pub collar_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingFamilyReport {
    pub refinement: usize,
    pub bound: f64,
    pub max_distance: f64,
    pub min_jacobian: f64,
    pub slices: Vec<SliceReport>,
    pub pass: bool,
}

const MAX_REFINEMENT: usize = 64;

fn check_data(slices: &[PLEmbedding2D], zs: &[f64], collar: &EmbeddingCollar, eps: f64) -> Result<()> {
    let Some(data) = collar.data() else { return Ok(()) };
    if !(data.delta > 0.0 && data.delta < 0.25) {
        return Err(LabError::Precondition(format!("collar width {} outside (0, 1/4)", data.delta)));
    }
    for (u, &z) in slices.iter().zip(zs) {
        let s = 4 * u.n + 1;
        let g = FnMap(|p: Point| (data.f)(p[0], p[1], z));
        for i in 0..s {
            for j in 0..s {
                let p = [unit_node(i, s), unit_node(j, s)];
                if !collar.in_collar(p, z, 2.0 * data.delta, false) {
                    continue;
                }
                let (a, b) = (g.eval(p), u.eval(p));
                if !((a[0] - b[0]).hypot(a[1] - b[1]) < eps) || !(det(&g.jacobian(p)) > 0.0) {
                    return Err(LabError::NotEmbedding(format!("boundary data fails at z = {z}, p = {p:?}")));
                }
            }
        }
    }
    Ok(())
}

/// Smooth a family of PL embeddings given at uniformly spaced `z` in `[0, 1]`.
pub fn smooth_embedding_family(
    slices: &[PLEmbedding2D],
    collar: EmbeddingCollar,
    eps: f64,
) -> Result<(SmoothEmbeddingFamily, EmbeddingFamilyReport)> {
    if slices.is_empty() {
        return Err(LabError::Precondition("empty family".into()));
    }
    let k = slices.len();
    let zs: Vec<f64> = if k == 1 { vec![0.0] } else { (0..k).map(|i| unit_node(i, k)).collect() };
    for u in slices {
        PLEmbedding2D::new(u.n, u.verts.clone())?;
    }
    check_data(slices, &zs, &collar, eps)?;
    let bound = if collar.data().is_some() { 2.0 * eps } else { eps };
    let mut r = 1;
    let mut last = None;
    while r <= MAX_REFINEMENT {
        let fam = SmoothEmbeddingFamily {
            zs: zs.clone(),
            slices: slices.iter().map(|u| SplineMap::from_map(u, u.n * r)).collect(),
            collar: collar.clone(),
        };
        let report = check_embedding_family(&fam, slices, bound, r);
        if report.pass {
            return Ok((fam, report));
        }
        let fatal = report.slices.iter().any(|s| s.distance < bound && !s.certificate.pass);
        last = Some(report);
        if fatal && r >= 8 {
            break;
        }
        r *= 2;
    }
    Err(LabError::NotEmbedding(format!("smoothing could not be certified: {:?}", last.map(|l| l.slices))))
}

/// Certificates, distances and collar equality on every input slice.
pub fn check_embedding_family(
    fam: &SmoothEmbeddingFamily,
    input: &[PLEmbedding2D],
    bound: f64,
    refinement: usize,
) -> EmbeddingFamilyReport {
    let mut slices = Vec::new();
    for (u, &z) in input.iter().zip(&fam.zs) {
        let s = (4 * u.n).max(64) + 1;
        let map = fam.slice(z);
        let certificate = certify_embedding(&map, s);
        let distance = sup_distance(&map, u, s);
        let mut mismatches = 0;
        if let Some(data) = fam.collar.data() {
            for i in 0..=u.n {
                for j in 0..=u.n {
                    let p = [unit_node(i, u.n + 1), unit_node(j, u.n + 1)];
                    if fam.collar.in_collar(p, z, data.delta, true) && map.eval(p) != (data.f)(p[0], p[1], z) {
                        mismatches += 1;
                    }
                }
            }
        }
        slices.push(SliceReport { z, distance, certificate, collar_mismatches: mismatches });
    }
    let max_distance = slices.iter().map(|s| s.distance).fold(0.0, f64::max);
    let min_jacobian = slices.iter().map(|s| s.certificate.min_jacobian).fold(f64::INFINITY, f64::min);
    let pass = slices.iter().all(|s| s.certificate.pass && s.distance < bound && s.collar_mismatches == 0);
    EmbeddingFamilyReport { refinement, bound, max_distance, min_jacobian, slices, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotation(a: f64) -> impl Fn(Point) -> Point {
        move |p| {
            let (x, y) = (p[0] - 0.5, p[1] - 0.5);
            [0.5 + a.cos() * x - a.sin() * y, 0.5 + a.sin() * x + a.cos() * y]
        }
    }

    #[test]
    fn pl_rejects_folds() {
        let fold = PLEmbedding2D::from_fn(4, |p| [if p[0] > 0.5 { 1.0 - p[0] } else { p[0] }, p[1]]);
        assert!(matches!(fold, Err(LabError::NotEmbedding(_))));
    }

    #[test]
    fn crossing_boundary_detected() {
        let bow = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(first_crossing(&bow).is_some());
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(first_crossing(&square).is_none());
    }

    #[test]
    fn spline_reproduces_affine_maps() {
        let u = PLEmbedding2D::from_fn(6, |p| [2.0 * p[0] + 0.3 * p[1], -0.1 * p[0] + p[1] + 4.0]).unwrap();
        let s = SplineMap::from_map(&u, 6);
        let q = [0.123, 0.987];
        let (v, j) = s.eval_with_jacobian(q);
        assert!((v[0] - (2.0 * q[0] + 0.3 * q[1])).abs() < 1e-13);
        assert!((j[0][1] - 0.3).abs() < 1e-12 && (j[1][0] + 0.1).abs() < 1e-12);
    }

    #[test]
    fn identity_family() {
        let id = PLEmbedding2D::from_fn(8, |p| p).unwrap();
        let (fam, rep) = smooth_embedding_family(&[id.clone(), id], EmbeddingCollar::Free, 0.01).unwrap();
        assert!(rep.pass && rep.max_distance < 1e-14);
        let q = fam.eval(0.5, [0.25, 0.75]);
        assert!((q[0] - 0.25).abs() < 1e-15 && (q[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn rotation_family_is_kept() {
        let slices: Vec<_> =
            (0..5).map(|k| PLEmbedding2D::from_fn(8, rotation(0.3 * k as f64 / 4.0)).unwrap()).collect();
        let (fam, rep) = smooth_embedding_family(&slices, EmbeddingCollar::Free, 0.01).unwrap();
        assert!(rep.pass && rep.max_distance < 1e-12);
        for s in &rep.slices {
            let d = det(&fam.slice(s.z).jacobian([0.3, 0.6]));
            assert!((d - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn shear_with_kink() {
        let u = PLEmbedding2D::from_fn(16, |p| [p[0] + 0.2 * (p[1] - 0.5).abs(), p[1]]).unwrap();
        let (_, rep) = smooth_embedding_family(&[u], EmbeddingCollar::Free, 0.05).unwrap();
        assert!(rep.pass && rep.max_distance < 0.05 && rep.min_jacobian > 0.0);
    }

    #[test]
    fn relative_collar_exact() {
        let slices: Vec<_> = (0..5)
            .map(|k| {
                let z = k as f64 / 4.0;
                PLEmbedding2D::from_fn(8, move |p| [p[0] + 0.01 * z * (p[1] - 0.5).abs(), p[1]]).unwrap()
            })
            .collect();
        let data = EmbeddingData::new(0.1, |x, y, z| [x + 0.01 * z * (y - 0.5).abs(), y]);
        for collar in [EmbeddingCollar::Z(data.clone()), EmbeddingCollar::Xy(data.clone()), EmbeddingCollar::Xyz(data)] {
            let (_, rep) = smooth_embedding_family(&slices, collar, 0.02).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert!(rep.slices.iter().all(|s| s.collar_mismatches == 0));
        }
    }
}
