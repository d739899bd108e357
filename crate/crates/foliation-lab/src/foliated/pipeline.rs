//! Skeleton-by-skeleton smoothing of foliated homeomorphisms of the torus.
//!
//! An auxiliary leafwise smoothing `Hb` of `h` straightens the target, so the
//! stages work on `g = Hb^-1 h`, which is close to the identity. Vertices get
//! product smoothings, edges relative smoothings that agree with the vertex
//! stage near their ends, and cells blend the edge stage with a free
//! smoothing while the transverse profiles of the two bounding sides are
//! joined by the graphical interpolation. The result is `Hb` composed with
//! the cell stage.

use std::sync::Arc;

use serde::Serialize;

use super::cover::{build_clean_cover, face_distance, CleanCover2D, CoverReport, J2};
use super::foliation::{FoliatedHomeo2D, Foliation2D, P2};
use super::interpolation::{Cutoff, CUTOFF_SLOPE};
use crate::error::{LabError, Result};
use crate::numeric::{smoothstep, smoothstep_deriv};
use crate::smoothing::{
    collar_cutoff, first_crossing, smooth_increasing, smooth_increasing_relative, C1Fn, CollarData, GridBoundary,
    GridMollifier, LineMollifier, MonotoneFunction, RelativeSmoothing, SmoothIncreasing, TensorReport,
};

type Jet = (P2, J2);

fn mul(a: J2, b: J2) -> J2 {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

fn det(j: J2) -> f64 {
    j[0][0] * j[1][1] - j[0][1] * j[1][0]
}

fn shifted(jet: Jet, by: P2) -> Jet {
    ([jet.0[0] - by[0], jet.0[1] - by[1]], jet.1)
}

fn collar_cutoff_deriv(s: f64, d: f64) -> f64 {
    let (a, b) = ((s - d) / d, (1.0 - d - s) / d);
    (smoothstep_deriv(a) * smoothstep(b) - smoothstep(a) * smoothstep_deriv(b)) / d
}

// Newton with a bisection safeguard for an increasing f on [lo, hi]
fn solve_increasing(f: impl Fn(f64) -> (f64, f64), target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (v, d) = f(x);
        let r = v - target;
        if r == 0.0 {
            return x;
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = x - r / d;
        let next = if d > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-16 * (1.0 + x.abs()) || hi - lo <= 1e-16 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Leafwise smoothing `Hb(x, y) = (x + twist y + P(x, y), y + Q(y))` of `h`.
#[derive(Debug, Clone, Serialize)]
pub struct Auxiliary {
    pub twist: f64,
    pub u: GridMollifier,
    pub v: LineMollifier,
    pub u_report: TensorReport,
    pub v_report: TensorReport,
    bound: f64,
}

impl Auxiliary {
    /// Coarsest resampling of `h` whose mollification stays within `eps / 2`.
    pub fn new(h: &FoliatedHomeo2D, eps: f64) -> Result<Self> {
        let budget = 0.5 * eps;
        let check = 2 * h.n;
        let mut u = None;
        for m in coarse_sizes(h.n) {
            let data = (0..m * m).map(|k| h.du_at((k % m) as f64 / m as f64, (k / m) as f64 / m as f64)).collect();
            let (g, rep) = GridMollifier::fit(m, m, data, GridBoundary::Periodic, 0.5 * budget)?;
            let mut d = 0.0f64;
            for j in 0..check {
                for i in 0..check {
                    let (x, y) = (i as f64 / check as f64, j as f64 / check as f64);
                    d = d.max((g.eval(x, y)[0] - h.du_at(x, y)).abs());
                }
            }
            if d < budget {
                u = Some((g, TensorReport { sup_distance: d, bound: budget, ..rep }));
                break;
            }
        }
        let mut v = None;
        for m in coarse_sizes(h.n) {
            let data = (0..m).map(|k| h.dv_at(k as f64 / m as f64)).collect();
            let (g, rep) = LineMollifier::fit(data, GridBoundary::Periodic, 0.5 * budget)?;
            let d = (0..4 * h.n).map(|j| {
                let y = j as f64 / (4 * h.n) as f64;
                (g.eval(y).0 - h.dv_at(y)).abs()
            });
            let d = d.fold(0.0f64, f64::max);
            if d < budget {
                v = Some((g, TensorReport { sup_distance: d, bound: budget, ..rep }));
                break;
            }
        }
        let fail = || LabError::SmoothingFailed("no resampling of h meets the auxiliary bound".into());
        let (u, u_report) = u.ok_or_else(fail)?;
        let (v, v_report) = v.ok_or_else(fail)?;
        let m = |xs: &[f64]| xs.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let bound = m(&h.du).max(m(&h.dv)) + eps + 1e-9;
        Ok(Auxiliary { twist: h.twist, u, v, u_report, v_report, bound })
    }

    pub fn jet(&self, p: P2) -> Jet {
        let [pu, px, py] = self.u.eval(p[0], p[1]);
        let (qv, qd) = self.v.eval(p[1]);
        ([p[0] + self.twist * p[1] + pu, p[1] + qv], [[1.0 + px, self.twist + py], [0.0, 1.0 + qd]])
    }

    pub fn inverse(&self, q: P2) -> P2 {
        let b = self.bound;
        let y = solve_increasing(
            |y| {
                let (v, d) = self.v.eval(y);
                (y + v, 1.0 + d)
            },
            q[1],
            q[1] - b,
            q[1] + b,
        );
        let x0 = q[0] - self.twist * y;
        let x = solve_increasing(
            |x| {
                let [v, dx, _] = self.u.eval(x, y);
                (x + self.twist * y + v, 1.0 + dx)
            },
            q[0],
            x0 - b,
            x0 + b,
        );
        [x, y]
    }
}

// 8, 16, ... below n, then n itself
fn coarse_sizes(n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::successors(Some(8usize), |m| Some(m * 2)).take_while(|&m| m < n).collect();
    out.push(n);
    out
}

/// `g = Hb^-1 h` and its gridded horizontal displacement.
struct Straightened {
    h: FoliatedHomeo2D,
    aux: Auxiliary,
}

impl Straightened {
    fn eval(&self, p: P2) -> P2 {
        self.aux.inverse(self.h.eval(p))
    }
}

/// Free horizontal smoothing of `g`: the abscissa of `Hb^-1` applied to a
/// tight mollification of `h`.
#[derive(Debug, Clone)]
struct Free {
    aux: Arc<Auxiliary>,
    u: GridMollifier,
    v: LineMollifier,
}

impl Free {
    fn fit(h: &FoliatedHomeo2D, aux: Arc<Auxiliary>, eps: f64) -> Result<Free> {
        let (u, _) = GridMollifier::fit(h.n, h.n, h.du.clone(), GridBoundary::Periodic, eps)?;
        let (v, _) = LineMollifier::fit(h.dv.clone(), GridBoundary::Periodic, eps)?;
        Ok(Free { aux, u, v })
    }

    fn x(&self, q: P2) -> (f64, [f64; 2]) {
        let [u, ux, uy] = self.u.eval(q[0], q[1]);
        let (v, vy) = self.v.eval(q[1]);
        let twist = self.aux.twist;
        let p = self.aux.inverse([q[0] + twist * q[1] + u, q[1] + v]);
        let (_, [[a, b], [_, c]]) = self.aux.jet(p);
        (p[0], [(1.0 + ux) / a, (twist + uy) / a - b * (1.0 + vy) / (a * c)])
    }
}

struct Stage0 {
    cover: Arc<CleanCover2D>,
    free: Free,
    v: Vec<Option<SmoothIncreasing>>,
}

impl Stage0 {
    fn eval(&self, p: P2) -> Option<Jet> {
        let (t, q) = self.cover.locate(0, p)?;
        Some(shifted(self.formula(t, q), [q[0] - p[0], q[1] - p[1]]))
    }

    fn formula(&self, t: usize, q: P2) -> Jet {
        let chart = &self.cover.simplices[t].chart;
        let (qc, _) = chart.to_chart(q);
        let (vy, dvy) = self.v[t].as_ref().expect("vertex smoothing").eval(qc[1]);
        let y = chart.from_chart([0.5, vy]).0[1];
        let (x, dx) = self.free.x(q);
        ([x, y], [dx, [0.0, dvy]])
    }
}

struct Stage1 {
    s0: Arc<Stage0>,
    free: Free,
    v: Vec<Option<RelativeSmoothing>>,
}

impl Stage1 {
    fn eval(&self, p: P2) -> Option<Jet> {
        let (t, q) = self.s0.cover.locate(1, p)?;
        let by = [q[0] - p[0], q[1] - p[1]];
        let w = self.s0.cover.simplices[t].w;
        let y = self.s0.cover.simplices[t].chart.to_chart(q).0[1];
        if y <= w || y >= 1.0 - w {
            return self.s0.eval(q).map(|j| shifted(j, by));
        }
        self.formula(t, q).map(|j| shifted(j, by))
    }

    fn formula(&self, t: usize, q: P2) -> Option<Jet> {
        let sx = &self.s0.cover.simplices[t];
        let super::cover::Chart::Strip { slope, .. } = sx.chart else { unreachable!() };
        let height = sx.chart.height();
        let yc = sx.chart.to_chart(q).0[1];
        let (vy, dvy) = self.v[t].as_ref().expect("edge smoothing").eval(yc);
        let ys = sx.chart.from_chart([0.5, vy]).0[1];
        let (xf, dxf) = self.free.x(q);
        let chi = collar_cutoff(yc, sx.w);
        if chi == 1.0 {
            return Some(([xf, ys], [dxf, [0.0, dvy]]));
        }
        let (p0, j0) = self.s0.eval(q)?;
        // blend chart abscissae at the common target height ys
        let x0 = p0[0] + slope * (ys - p0[1]);
        let dx0 = [j0[0][0], j0[0][1] + slope * (dvy - j0[1][1])];
        let dchi = collar_cutoff_deriv(yc, sx.w) / height;
        let x = (1.0 - chi) * x0 + chi * xf;
        let dx = [
            (1.0 - chi) * dx0[0] + chi * dxf[0],
            (1.0 - chi) * dx0[1] + chi * dxf[1] + dchi * (xf - x0),
        ];
        Some(([x, ys], [dx, [0.0, dvy]]))
    }
}

/// Left and right transverse profiles of a cell at chart height `y`, the
/// images of `x = w` and `x = 1 - w`: `[a, a', v0, v0', b, b', v1, v1']`.
struct Sides([f64; 8]);

struct Stage2 {
    s1: Arc<Stage1>,
    free: Free,
}

impl Stage2 {
    fn cover(&self) -> &CleanCover2D {
        &self.s1.s0.cover
    }

    fn eval(&self, p: P2) -> Option<Jet> {
        let cover = self.cover();
        let Some((t, q)) = cover.locate(2, p) else {
            return self.s1.eval(p).or_else(|| self.s1.s0.eval(p));
        };
        let by = [q[0] - p[0], q[1] - p[1]];
        let sx = &cover.simplices[t];
        let qc = sx.chart.to_chart(q).0;
        if face_distance(2, qc) <= sx.w {
            return self.s1.eval(q).map(|j| shifted(j, by));
        }
        self.formula(t, q).map(|(j, _)| shifted(j, by))
    }

    fn sides(&self, t: usize, y: f64) -> Option<Sides> {
        let sx = &self.cover().simplices[t];
        let mut out = [0.0; 8];
        for (k, x) in [sx.w, 1.0 - sx.w].into_iter().enumerate() {
            let (src, jinv) = sx.chart.from_chart([x, y]);
            let (img, j) = self.s1.eval(src)?;
            let (qc, jc) = sx.chart.to_chart(img);
            // derivative along the vertical chart line through (x, y)
            let col = [jinv[0][1], jinv[1][1]];
            let d = [j[0][0] * col[0] + j[0][1] * col[1], j[1][0] * col[0] + j[1][1] * col[1]];
            let dq = [jc[0][0] * d[0] + jc[0][1] * d[1], jc[1][0] * d[0] + jc[1][1] * d[1]];
            out[4 * k..4 * k + 4].copy_from_slice(&[qc[0], dq[0], qc[1], dq[1]]);
        }
        Some(Sides(out))
    }

    // the cell formula at q and the interpolation slope |dV/dX'| / gap
    fn formula(&self, t: usize, q: P2) -> Option<(Jet, CellLocal)> {
        let sx = &self.cover().simplices[t];
        let w = sx.w;
        let (qc, jphi) = sx.chart.to_chart(q);
        let (_, jinv) = sx.chart.from_chart(qc);
        let [x, y] = qc;
        let Sides([a, da, v0, dv0, b, db, v1, dv1]) = self.sides(t, y)?;
        let src = Cutoff::new(w).ok()?;
        let (ts, dts) = (src.value(x), src.deriv(x));
        let ysc = ts * v0 + (1.0 - ts) * v1;
        let dysc = [dts * (v0 - v1), ts * dv0 + (1.0 - ts) * dv1];
        let ysg = sx.chart.from_chart([0.5, ysc]).0[1];
        let height = sx.chart.height();
        // free abscissa measured at the target height ysg
        let (xf, dxf) = self.free.x(q);
        let (ch, jch) = sx.chart.to_chart([xf, ysg]);
        let dxf_c = [dxf[0] * jinv[0][0] + dxf[1] * jinv[1][0], dxf[0] * jinv[0][1] + dxf[1] * jinv[1][1]];
        let uf = ch[0];
        let duf = [
            jch[0][0] * dxf_c[0] + jch[0][1] * height * dysc[0],
            jch[0][0] * dxf_c[1] + jch[0][1] * height * dysc[1],
        ];
        let (cx, cy) = (collar_cutoff(x, w), collar_cutoff(y, w));
        let psi = cx * cy;
        let (u, du) = if psi == 1.0 {
            (uf, duf)
        } else {
            let (img, j1) = self.s1.eval(q)?;
            let (q1, jq) = sx.chart.to_chart(img);
            let jc = mul(mul(jq, j1), jinv);
            let dpsi = [collar_cutoff_deriv(x, w) * cy, cx * collar_cutoff_deriv(y, w)];
            let u = (1.0 - psi) * q1[0] + psi * uf;
            let du = [
                (1.0 - psi) * jc[0][0] + psi * duf[0] + dpsi[0] * (uf - q1[0]),
                (1.0 - psi) * jc[0][1] + psi * duf[1] + dpsi[1] * (uf - q1[0]),
            ];
            (u, du)
        };
        // cutoff in the target abscissa, normalised by the side images
        let span = b - a;
        let s = (u - a) / span;
        let (tau, dtau_ds) = (1.0 - smoothstep(s), -smoothstep_deriv(s));
        let ds = [du[0] / span, (du[1] - da - s * (db - da)) / span];
        let gap = v0 - v1;
        let vc = tau * v0 + (1.0 - tau) * v1;
        let dvc = [dtau_ds * ds[0] * gap, dtau_ds * ds[1] * gap + tau * dv0 + (1.0 - tau) * dv1];
        let jc = [[du[0], du[1]], [dvc[0], dvc[1]]];
        let (img, jout) = sx.chart.from_chart([u, vc]);
        let j = mul(mul(jout, jc), jphi);
        let local = CellLocal { gap: gap.abs(), dv_dx: (dtau_ds / span * gap).abs(), span, chart_jacobian: jc };
        Some(((img, j), local))
    }
}

struct CellLocal {
    gap: f64,
    dv_dx: f64,
    span: f64,
    chart_jacobian: J2,
}

/// Measurements of one skeleton stage against `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub simplices: usize,
    pub samples: usize,
    pub tolerance: f64,
    pub max_distance: f64,
    pub min_leaf_derivative: f64,
    pub min_transverse_derivative: f64,
    pub max_leaf_tilt: f64,
    /// Largest difference between the stage formula and the previous stage
    /// on collar samples, where the two must coincide.
    pub collar_mismatch: f64,
    pub collar_samples: usize,
    pub max_gap: f64,
    pub max_interpolation_slope: f64,
    pub min_cutoff_span: f64,
    pub pass: bool,
}

impl StageReport {
    fn new(stage: &str, simplices: usize, tolerance: f64) -> Self {
        StageReport {
            stage: stage.into(),
            simplices,
            samples: 0,
            tolerance,
            max_distance: 0.0,
            min_leaf_derivative: f64::INFINITY,
            min_transverse_derivative: f64::INFINITY,
            max_leaf_tilt: 0.0,
            collar_mismatch: 0.0,
            collar_samples: 0,
            max_gap: 0.0,
            max_interpolation_slope: 0.0,
            min_cutoff_span: f64::INFINITY,
            pass: false,
        }
    }

    fn record(&mut self, jet: Jet, target: P2) {
        let (q, j) = jet;
        let d = (q[0] - target[0]).hypot(q[1] - target[1]);
        self.samples += 1;
        self.max_distance = self.max_distance.max(d);
        self.min_leaf_derivative = self.min_leaf_derivative.min(j[0][0]);
        self.min_transverse_derivative = self.min_transverse_derivative.min(det(j) / j[0][0]);
        self.max_leaf_tilt = self.max_leaf_tilt.max(j[1][0].abs());
    }

    fn mismatch(&mut self, a: P2, b: P2) {
        self.collar_samples += 1;
        self.collar_mismatch = self.collar_mismatch.max((a[0] - b[0]).abs().max((a[1] - b[1]).abs()));
    }

    fn finish(&mut self, foliated: bool) {
        let tilt_ok = !foliated || self.max_leaf_tilt == 0.0;
        let interp_ok = self.max_interpolation_slope <= CUTOFF_SLOPE * self.max_gap;
        self.pass = self.max_distance < self.tolerance
            && self.min_leaf_derivative > 0.0
            && self.min_transverse_derivative > 0.0
            && self.collar_mismatch <= COLLAR_ROUNDING
            && tilt_ok
            && interp_ok;
    }

    fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            Err(LabError::Stage { stage: self.stage.clone(), detail: format!("{self:?}") })
        }
    }
}

// chart round trips on either side of the collar equality
const COLLAR_ROUNDING: f64 = 1e-12;
const CHART_SAMPLES: usize = 257;
const MAX_CHART_SAMPLES: usize = 16385;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoliatedOptions {
    pub delta: f64,
    pub seed: u64,
    /// Side of the global sample grid for the final checks.
    pub grid: usize,
    pub retries: usize,
}

impl Default for FoliatedOptions {
    fn default() -> Self {
        FoliatedOptions { delta: 0.2, seed: 0, grid: 96, retries: 3 }
    }
}

/// Straight-line isotopy `(1 - s) h + s h~` checked at one station.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotopyStation {
    pub s: f64,
    pub max_distance: f64,
    pub min_signed_area: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliatedReport {
    pub name: String,
    pub epsilon: f64,
    pub eps_aux: f64,
    pub eps_stage: f64,
    pub attempts: usize,
    pub cover: Option<CoverReport>,
    pub aux: [TensorReport; 2],
    pub stages: Vec<StageReport>,
    pub grid: usize,
    pub d_c0: f64,
    pub tangent_defect: f64,
    /// Angle defect for the second foliation of a bifoliated map.
    pub second_tangent_defect: Option<f64>,
    pub min_jacobian: f64,
    pub boundary_simple: bool,
    pub isotopy: Vec<IsotopyStation>,
    pub collar_exact: bool,
    pub pass: bool,
}

enum Kind {
    Staged { aux: Arc<Auxiliary>, stage: Arc<Stage2> },
    Product { u: LineMollifier, v: LineMollifier },
}

/// The smoothing `h~`, a lift to the plane in original coordinates.
pub struct SmoothedHomeo2D {
    f0: Foliation2D,
    f1: Foliation2D,
    twist: f64,
    kind: Kind,
}

impl SmoothedHomeo2D {
    fn adapted(&self, p: P2) -> Jet {
        match &self.kind {
            Kind::Staged { aux, stage } => {
                let (g, jg) = stage.eval(p).expect("the cover reaches every point");
                let (q, jh) = aux.jet(g);
                (q, mul(jh, jg))
            }
            Kind::Product { u, v } => {
                let (a, da) = u.eval(p[0]);
                let (b, db) = v.eval(p[1]);
                ([p[0] + self.twist * p[1] + a, p[1] + b], [[1.0 + da, self.twist], [0.0, 1.0 + db]])
            }
        }
    }

    /// Value and Jacobian in original coordinates.
    pub fn jet(&self, p: P2) -> Jet {
        let (q, j) = self.adapted(self.f0.to_adapted(p));
        (self.f1.from_adapted(q), mul(mul(frame(self.f1), j), frame(self.f0)))
    }

    pub fn eval(&self, p: P2) -> P2 {
        self.jet(p).0
    }
}

// Jacobian of the adapted chart of f (a coordinate swap or the identity)
fn frame(f: Foliation2D) -> J2 {
    if f == Foliation2D::horizontal() {
        [[1.0, 0.0], [0.0, 1.0]]
    } else {
        [[0.0, 1.0], [1.0, 0.0]]
    }
}

/// Original-coordinate lift of `h` read in the adapted charts of `f0`, `f1`.
fn original(h: &FoliatedHomeo2D, f0: Foliation2D, f1: Foliation2D, p: P2) -> P2 {
    f1.from_adapted(h.eval(f0.to_adapted(p)))
}

struct Attempt {
    stage: Arc<Stage2>,
    aux: Arc<Auxiliary>,
    stages: Vec<StageReport>,
}

// doubles the sample count until midpoints are within `eps / 8`
fn increasing_samples(f: impl Fn(f64) -> f64, eps: f64) -> Result<MonotoneFunction> {
    let mut n = CHART_SAMPLES;
    loop {
        let m = MonotoneFunction::from_fn(n, &f)?;
        let step = 1.0 / (n - 1) as f64;
        let worst = (0..n - 1).map(|i| (i as f64 + 0.5) * step).map(|z| (m.eval(z) - f(z)).abs()).fold(0.0f64, f64::max);
        if worst < eps / 8.0 || n >= MAX_CHART_SAMPLES {
            return Ok(m);
        }
        n = 2 * n - 1;
    }
}

fn run_stages(h: &FoliatedHomeo2D, cover: Arc<CleanCover2D>, eps_aux: f64, eps1: f64) -> Result<Attempt> {
    let aux = Arc::new(Auxiliary::new(h, eps_aux)?);
    let g = Straightened { h: h.clone(), aux: (*aux).clone() };
    let tol = [eps1 / 8.0, eps1 / 2.0, eps1];
    let free = |k: usize| Free::fit(h, aux.clone(), 0.2 * tol[k]);
    let stage_err = |stage: &str, e: LabError| LabError::Stage { stage: stage.into(), detail: e.to_string() };

    // vertices
    let mut v0 = vec![None; cover.simplices.len()];
    for &t in &cover.by_dim[0] {
        let chart = &cover.simplices[t].chart;
        let eps_c = 0.5 * tol[0] / chart.height();
        let samples = increasing_samples(|y| chart.to_chart(g.eval(chart.from_chart([0.5, y]).0)).0[1], eps_c)
            .map_err(|e| stage_err("skel0", e))?;
        v0[t] = Some(smooth_increasing(&samples, eps_c).map_err(|e| stage_err("skel0", e))?);
    }
    let s0 = Arc::new(Stage0 { cover: cover.clone(), free: free(0).map_err(|e| stage_err("skel0", e))?, v: v0 });
    let mut rep0 = StageReport::new("skel0", cover.by_dim[0].len(), tol[0]);
    for &t in &cover.by_dim[0] {
        for q in grid_in(&cover, t, 9, 9) {
            rep0.record(s0.formula(t, q), g.eval(q));
        }
    }
    rep0.finish(true);
    let rep0 = rep0.into_result()?;

    // edges
    let mut v1 = vec![None; cover.simplices.len()];
    for &t in &cover.by_dim[1] {
        let sx = &cover.simplices[t];
        let chart = sx.chart.clone();
        let eps_c = 0.5 * tol[1] / chart.height();
        let samples = increasing_samples(|y| chart.to_chart(g.eval(chart.from_chart([0.5, y]).0)).0[1], eps_c)
            .map_err(|e| stage_err("skel1", e))?;
        let s0c = s0.clone();
        let chart_c = chart.clone();
        let data: C1Fn = Arc::new(move |y: f64| {
            let (src, jinv) = chart_c.from_chart([0.5, y]);
            match s0c.eval(src) {
                Some((img, j)) => {
                    let (qc, jc) = chart_c.to_chart(img);
                    let d = mul(mul(jc, j), jinv);
                    (qc[1], d[1][1])
                }
                None => (f64::NAN, f64::NAN),
            }
        });
        let (rs, _) = smooth_increasing_relative(&samples, &CollarData { delta: sx.w, f: data }, eps_c)
            .map_err(|e| stage_err("skel1", e))?;
        v1[t] = Some(rs);
    }
    let s1 = Arc::new(Stage1 { s0: s0.clone(), free: free(1).map_err(|e| stage_err("skel1", e))?, v: v1 });
    let mut rep1 = StageReport::new("skel1", cover.by_dim[1].len(), tol[1]);
    for &t in &cover.by_dim[1] {
        let sx = &cover.simplices[t];
        for q in grid_in(&cover, t, 5, 33) {
            let jet = s1.formula(t, q).ok_or_else(|| stage_err("skel1", LabError::Precondition("edge collar outside the vertex sets".into())))?;
            let y = sx.chart.to_chart(q).0[1];
            if y <= sx.w || y >= 1.0 - sx.w {
                rep1.mismatch(jet.0, s0.eval(q).map(|j| j.0).unwrap_or([f64::NAN; 2]));
            }
            rep1.record(jet, g.eval(q));
        }
    }
    rep1.finish(true);
    let rep1 = rep1.into_result()?;

    // cells
    let s2 = Arc::new(Stage2 { s1: s1.clone(), free: free(2).map_err(|e| stage_err("cells", e))? });
    let mut rep2 = StageReport::new("cells", cover.by_dim[2].len(), tol[2]);
    for &t in &cover.by_dim[2] {
        let sx = &cover.simplices[t];
        for q in grid_in(&cover, t, 17, 17) {
            let qc = sx.chart.to_chart(q).0;
            let (jet, local) = s2
                .formula(t, q)
                .ok_or_else(|| stage_err("cells", LabError::Precondition("cell collar outside the edge sets".into())))?;
            if face_distance(2, qc) <= sx.w {
                rep2.mismatch(jet.0, s1.eval(q).map(|j| j.0).unwrap_or([f64::NAN; 2]));
            }
            rep2.record(jet, g.eval(q));
            rep2.max_gap = rep2.max_gap.max(local.gap);
            rep2.max_interpolation_slope = rep2.max_interpolation_slope.max(local.dv_dx);
            rep2.min_cutoff_span = rep2.min_cutoff_span.min(local.span);
            let jc = local.chart_jacobian;
            rep2.min_transverse_derivative = rep2.min_transverse_derivative.min(det(jc) / jc[0][0]);
        }
    }
    rep2.finish(false);
    let rep2 = rep2.into_result()?;
    Ok(Attempt { stage: s2, aux, stages: vec![rep0, rep1, rep2] })
}

// chart samples of simplex t in its own frame: midpoints plus collar offsets
// along the axes that carry collars
fn grid_in(cover: &CleanCover2D, t: usize, nx: usize, ny: usize) -> Vec<P2> {
    let sx = &cover.simplices[t];
    let axis = |n: usize, collar: bool| {
        let mut c: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        if collar {
            for f in [0.1, 0.5, 0.9] {
                c.push(f * sx.w);
                c.push(1.0 - f * sx.w);
            }
        }
        c
    };
    let xs = axis(nx, sx.dim == 2);
    let ys = axis(ny, sx.dim >= 1);
    ys.iter().flat_map(|&y| xs.iter().map(move |&x| sx.chart.from_chart([x, y]).0)).collect()
}

fn check_leaves(h: &FoliatedHomeo2D) -> Result<()> {
    h.validate()
}

const ISOTOPY_STATIONS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

struct FinalChecks {
    d_c0: f64,
    tangent: f64,
    second: f64,
    min_jacobian: f64,
    boundary_simple: bool,
    isotopy: Vec<IsotopyStation>,
}

fn final_checks(h: &dyn Fn(P2) -> P2, sm: &SmoothedHomeo2D, second: Option<(Foliation2D, Foliation2D)>, m: usize, eps: f64) -> FinalChecks {
    let node = |i: usize| i as f64 / m as f64;
    let (mut d, mut tangent, mut other, mut min_j) = (0.0f64, 0.0f64, 0.0f64, f64::INFINITY);
    let mut hs = Vec::with_capacity((m + 1) * (m + 1));
    let mut ts = Vec::with_capacity((m + 1) * (m + 1));
    let push = |j: J2, v: P2| [j[0][0] * v[0] + j[0][1] * v[1], j[1][0] * v[0] + j[1][1] * v[1]];
    for j in 0..=m {
        for i in 0..=m {
            let p = [node(i), node(j)];
            let (q, jac) = sm.jet(p);
            let a = h(p);
            d = d.max((q[0] - a[0]).hypot(q[1] - a[1]));
            tangent = tangent.max(sm.f1.angle_to(push(jac, sm.f0.tangent())));
            if let Some((g0, g1)) = second {
                other = other.max(g1.angle_to(push(jac, g0.tangent())));
            }
            min_j = min_j.min(det(jac));
            hs.push(a);
            ts.push(q);
        }
    }
    let mut isotopy = Vec::new();
    for &s in &ISOTOPY_STATIONS {
        let at = |k: usize| {
            let (a, b) = (hs[k], ts[k]);
            [(1.0 - s) * a[0] + s * b[0], (1.0 - s) * a[1] + s * b[1]]
        };
        let (mut dist, mut area) = (0.0f64, f64::INFINITY);
        for k in 0..hs.len() {
            let p = at(k);
            dist = dist.max((p[0] - hs[k][0]).hypot(p[1] - hs[k][1]));
        }
        let idx = |i: usize, j: usize| j * (m + 1) + i;
        for j in 0..m {
            for i in 0..m {
                let (a, b, c, e) = (at(idx(i, j)), at(idx(i + 1, j)), at(idx(i, j + 1)), at(idx(i + 1, j + 1)));
                let tri = |p: P2, q: P2, r: P2| (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
                area = area.min(tri(a, b, e)).min(tri(a, e, c));
            }
        }
        isotopy.push(IsotopyStation { s, max_distance: dist, min_signed_area: area, pass: dist < eps && area > 0.0 });
    }
    // image of the boundary of the fundamental square
    let mut poly = Vec::with_capacity(4 * m);
    for i in 0..m {
        poly.push(ts[i]);
    }
    for j in 0..m {
        poly.push(ts[j * (m + 1) + m]);
    }
    for i in (1..=m).rev() {
        poly.push(ts[m * (m + 1) + i]);
    }
    for j in (1..=m).rev() {
        poly.push(ts[j * (m + 1)]);
    }
    let boundary_simple = first_crossing(&poly).is_none();
    FinalChecks { d_c0: d, tangent, second: other, min_jacobian: min_j, boundary_simple, isotopy }
}

/// Smooth a foliated homeomorphism given in adapted coordinates of `f0`
/// (source) and `f1` (target).
pub fn smooth_foliated_homeo_2d(
    h: &FoliatedHomeo2D,
    f0: Foliation2D,
    f1: Foliation2D,
    eps: f64,
) -> Result<(SmoothedHomeo2D, FoliatedReport)> {
    smooth_foliated_homeo_2d_with(h, f0, f1, eps, &FoliatedOptions::default())
}

pub fn smooth_foliated_homeo_2d_with(
    h: &FoliatedHomeo2D,
    f0: Foliation2D,
    f1: Foliation2D,
    eps: f64,
    opts: &FoliatedOptions,
) -> Result<(SmoothedHomeo2D, FoliatedReport)> {
    if !(eps > 0.0) {
        return Err(LabError::Precondition("eps must be positive".into()));
    }
    check_leaves(h)?;
    let cover = Arc::new(build_clean_cover(Foliation2D::horizontal(), opts.delta, opts.seed)?);
    let target = |p: P2| original(h, f0, f1, p);
    let mut last = None;
    for attempt in 0..=opts.retries {
        let shrink = 10f64.powi(-(attempt as i32));
        let (eps_aux, eps1) = (eps / 10.0 * shrink, eps / 100.0 * shrink);
        let run = match run_stages(h, cover.clone(), eps_aux, eps1) {
            Ok(run) => run,
            Err(e) => {
                last = Some(e);
                continue;
            }
        };
        let sm = SmoothedHomeo2D {
            f0,
            f1,
            twist: h.twist,
            kind: Kind::Staged { aux: run.aux.clone(), stage: run.stage.clone() },
        };
        let fc = final_checks(&target, &sm, None, opts.grid, eps);
        let collar_exact = run.stages.iter().all(|s| s.collar_mismatch <= COLLAR_ROUNDING);
        let pass = fc.d_c0 < eps
            && fc.tangent < eps
            && fc.min_jacobian > 0.0
            && fc.boundary_simple
            && fc.isotopy.iter().all(|s| s.pass)
            && collar_exact;
        let report = FoliatedReport {
            name: h.name.clone(),
            epsilon: eps,
            eps_aux,
            eps_stage: eps1,
            attempts: attempt + 1,
            cover: Some(cover.report.clone()),
            aux: [run.aux.u_report.clone(), run.aux.v_report.clone()],
            stages: run.stages,
            grid: opts.grid,
            d_c0: fc.d_c0,
            tangent_defect: fc.tangent,
            second_tangent_defect: None,
            min_jacobian: fc.min_jacobian,
            boundary_simple: fc.boundary_simple,
            isotopy: fc.isotopy,
            collar_exact,
            pass,
        };
        if pass {
            return Ok((sm, report));
        }
        last = Some(LabError::Stage { stage: "cells".into(), detail: format!("final checks failed: {report:?}") });
    }
    Err(last.unwrap_or_else(|| LabError::Stage { stage: "cells".into(), detail: "no attempt ran".into() }))
}

/// Smooth a homeomorphism preserving both the horizontal and the vertical
/// foliation, `h(x, y) = (u(x), v(y))` in the adapted coordinates of the
/// pairs `(f0, g0)` and `(f1, g1)`.
pub fn smooth_bifoliated_homeo_2d(
    h: &FoliatedHomeo2D,
    (f0, g0): (Foliation2D, Foliation2D),
    (f1, g1): (Foliation2D, Foliation2D),
    eps: f64,
) -> Result<(SmoothedHomeo2D, FoliatedReport)> {
    if f0 == g0 || f1 == g1 {
        return Err(LabError::Precondition("the two foliations of a pair must be transverse".into()));
    }
    if !(eps > 0.0) {
        return Err(LabError::Precondition("eps must be positive".into()));
    }
    check_leaves(h)?;
    if !h.preserves_vertical() {
        return Err(LabError::NotFoliated(format!("'{}' does not preserve the second foliation", h.name)));
    }
    let n = h.n;
    let row = h.du[..n].to_vec();
    let (u, ur) = LineMollifier::fit(row, GridBoundary::Periodic, 0.25 * eps)?;
    let (v, vr) = LineMollifier::fit(h.dv.clone(), GridBoundary::Periodic, 0.25 * eps)?;
    let sm = SmoothedHomeo2D { f0, f1, twist: h.twist, kind: Kind::Product { u, v } };
    let target = |p: P2| original(h, f0, f1, p);
    let m = FoliatedOptions::default().grid;
    let fc = final_checks(&target, &sm, Some((g0, g1)), m, eps);
    let pass = fc.d_c0 < eps
        && fc.tangent < eps
        && fc.second < eps
        && fc.min_jacobian > 0.0
        && fc.boundary_simple
        && fc.isotopy.iter().all(|s| s.pass);
    let report = FoliatedReport {
        name: h.name.clone(),
        epsilon: eps,
        eps_aux: 0.25 * eps,
        eps_stage: 0.25 * eps,
        attempts: 1,
        cover: None,
        aux: [ur, vr],
        stages: Vec::new(),
        grid: m,
        d_c0: fc.d_c0,
        tangent_defect: fc.tangent,
        second_tangent_defect: Some(fc.second),
        min_jacobian: fc.min_jacobian,
        boundary_simple: fc.boundary_simple,
        isotopy: fc.isotopy,
        collar_exact: true,
        pass,
    };
    if !pass {
        return Err(LabError::SmoothingFailed(format!("product smoothing failed its checks: {report:?}")));
    }
    Ok((sm, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn horizontal(h: &FoliatedHomeo2D, eps: f64) -> FoliatedReport {
        smooth_foliated_homeo_2d(h, Foliation2D::horizontal(), Foliation2D::horizontal(), eps).unwrap().1
    }

    fn transverse(n: usize) -> FoliatedHomeo2D {
        FoliatedHomeo2D::from_fn(n, 0.0, "transverse", |p| {
            [p[0] + 0.02 * (2.0 * PI * p[1]).sin().abs() + 0.01 * (2.0 * PI * p[0]).sin(), p[1] + 0.015 * (2.0 * PI * p[1]).sin().abs()]
        })
        .unwrap()
    }

    #[test]
    fn identity_is_fixed() {
        let h = FoliatedHomeo2D::identity(32);
        let (sm, r) = smooth_foliated_homeo_2d(&h, Foliation2D::horizontal(), Foliation2D::horizontal(), 0.05).unwrap();
        assert!(r.pass && r.attempts == 1);
        assert!(r.d_c0 < 1e-12 && r.tangent_defect < 1e-12, "{} {}", r.d_c0, r.tangent_defect);
        let (q, j) = sm.jet([0.3, 0.7]);
        assert!((q[0] - 0.3).abs() < 1e-12 && (q[1] - 0.7).abs() < 1e-12);
        assert!((j[0][0] - 1.0).abs() < 1e-9 && j[1][0].abs() < 1e-12);
    }

    #[test]
    fn shear_within_budget() {
        let r = horizontal(&FoliatedHomeo2D::shear(64, 0.3), 0.05);
        assert!(r.pass && r.d_c0 < 0.05 && r.tangent_defect < 0.05 && r.min_jacobian > 0.0);
        assert!(r.collar_exact && r.boundary_simple);
        assert_eq!(r.isotopy.len(), 5);
    }

    #[test]
    fn shear_wiggle_stages_and_locality() {
        let r = horizontal(&FoliatedHomeo2D::shear_wiggle(256, 0.3, 0.02), 0.05);
        assert!(r.pass, "{r:?}");
        let names: Vec<&str> = r.stages.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(names, ["skel0", "skel1", "cells"]);
        for s in &r.stages {
            assert!(s.pass && s.max_distance < s.tolerance);
            assert!(s.collar_mismatch <= COLLAR_ROUNDING);
            assert!(s.max_interpolation_slope <= CUTOFF_SLOPE * s.max_gap);
        }
        assert_eq!(r.stages[0].max_leaf_tilt, 0.0);
        assert_eq!(r.stages[1].max_leaf_tilt, 0.0);
        // v0 = v1 here, so the interpolated leaves stay flat
        assert!(r.stages[2].max_leaf_tilt < 1e-10);
        assert!(r.stages[1].collar_samples > 0 && r.stages[2].collar_samples > 0);
        let cover = r.cover.as_ref().unwrap();
        assert!(cover.pass);
    }

    // defects at this level are rounding, not approximation error
    const DEFECT_FLOOR: f64 = 1e-9;

    fn shrinks(coarse: f64, fine: f64) -> bool {
        coarse < DEFECT_FLOOR && fine < DEFECT_FLOOR || coarse / fine >= 2.5
    }

    #[test]
    fn defects_shrink_with_eps() {
        for h in [FoliatedHomeo2D::shear_wiggle(256, 0.3, 0.02), transverse(128)] {
            let (a, b) = (horizontal(&h, 0.05), horizontal(&h, 0.005));
            assert!(shrinks(a.d_c0, b.d_c0), "{}: {} -> {}", h.name, a.d_c0, b.d_c0);
            assert!(shrinks(a.tangent_defect, b.tangent_defect), "{}: {} -> {}", h.name, a.tangent_defect, b.tangent_defect);
        }
    }

    #[test]
    fn swapped_foliations() {
        let h = transverse(64);
        let (sm, r) = smooth_foliated_homeo_2d(&h, Foliation2D::vertical(), Foliation2D::vertical(), 0.05).unwrap();
        assert!(r.pass);
        // the vertical line x = 0.4 goes to a vertical line
        let (_, j) = sm.jet([0.4, 0.25]);
        assert!(j[0][1].abs() < 0.05 * j[1][1].abs());
    }

    #[test]
    fn leaf_breaking_map_rejected() {
        let e = FoliatedHomeo2D::from_fn(16, 0.0, "tilted", |p| [p[0], p[1] + 0.01 * (2.0 * PI * p[0]).sin()]).unwrap_err();
        assert!(matches!(e, LabError::NotFoliated(_)));
    }

    #[test]
    fn failing_stage_is_tagged() {
        let mut rep = StageReport::new("skel1", 3, 1e-3);
        rep.record(([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.502]);
        rep.finish(true);
        match rep.into_result() {
            Err(LabError::Stage { stage, .. }) => assert_eq!(stage, "skel1"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bifoliated_identity() {
        let h = FoliatedHomeo2D::identity(16);
        let pair = (Foliation2D::horizontal(), Foliation2D::vertical());
        let (_, r) = smooth_bifoliated_homeo_2d(&h, pair, pair, 0.05).unwrap();
        assert_eq!((r.d_c0, r.tangent_defect, r.second_tangent_defect), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn bifoliated_product_keeps_both_foliations() {
        let u = |x: f64| x + 0.04 * ((4.0 * x).fract() - 0.5).abs();
        let v = |y: f64| y + 0.03 * (2.0 * PI * y).sin().abs();
        let h = FoliatedHomeo2D::product(64, u, v, "pl-product").unwrap();
        let pair = (Foliation2D::horizontal(), Foliation2D::vertical());
        let (_, r) = smooth_bifoliated_homeo_2d(&h, pair, pair, 0.05).unwrap();
        assert!(r.pass && r.d_c0 < 0.05);
        assert_eq!((r.tangent_defect, r.second_tangent_defect), (0.0, Some(0.0)));
    }

    #[test]
    fn reversed_factor_rejected() {
        let e = FoliatedHomeo2D::product(16, |x| -x, |y| y, "flip").unwrap_err();
        assert!(matches!(e, LabError::OrientationMismatch(_)));
    }

    #[test]
    fn bifoliated_needs_second_foliation() {
        let h = FoliatedHomeo2D::shear_wiggle(32, 0.0, 0.02);
        let pair = (Foliation2D::horizontal(), Foliation2D::vertical());
        assert!(matches!(smooth_bifoliated_homeo_2d(&h, pair, pair, 0.05), Err(LabError::NotFoliated(_))));
    }
}
