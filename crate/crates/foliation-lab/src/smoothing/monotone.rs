//! Smoothing of strictly increasing functions on `[0, 1]`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{gauss_legendre5, pairwise_sum, smoothstep};

/// A function `z -> (value, derivative)`.
pub type C1Fn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Samples of an increasing function on a uniform grid of `[0, 1]`, read as
/// the piecewise-linear interpolant.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneFunction {
    pub samples: Vec<f64>,
    pub tag: Option<String>,
}

impl MonotoneFunction {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(LabError::Precondition("need at least two samples".into()));
        }
        if let Some(i) = samples.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(LabError::NotIncreasing(i + 1));
        }
        Ok(MonotoneFunction { samples, tag: None })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        let step = 1.0 / (n - 1) as f64;
        Self::new((0..n).map(|i| f(if i == n - 1 { 1.0 } else { i as f64 * step })).collect())
    }

    pub fn with_tag(mut self, tag: &str) -> Self {
        self.tag = Some(tag.into());
        self
    }

    pub fn pieces(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.pieces() as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.pieces() {
            1.0
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn slope(&self, i: usize) -> f64 {
        (self.samples[i + 1] - self.samples[i]) / self.spacing()
    }

    pub fn max_slope(&self) -> f64 {
        (0..self.pieces()).map(|i| self.slope(i)).fold(0.0, f64::max)
    }

    /// Piecewise-linear value, extended linearly outside `[0, 1]`.
    pub fn eval(&self, z: f64) -> f64 {
        let n = self.pieces();
        let x = z * n as f64;
        let i = (x.floor().max(0.0) as usize).min(n - 1);
        let s = x - i as f64;
        (1.0 - s) * self.samples[i] + s * self.samples[i + 1]
    }
}

// triweight kernel 35/32 (1 - t^2)^3 on [-1, 1]: C^2, unit mass
pub(crate) fn kernel_cdf(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let t2 = t * t;
    0.5 + 35.0 / 32.0 * t * (1.0 - t2 + 0.6 * t2 * t2 - t2 * t2 * t2 / 7.0)
}

pub(crate) fn kernel_moment(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let t2 = t * t;
    35.0 / 32.0 * (t2 / 2.0 - 0.75 * t2 * t2 + t2 * t2 * t2 / 2.0 - t2 * t2 * t2 * t2 / 8.0 - 0.125)
}

/// Mollification of a monotone function followed by the monotone projection:
/// `g = v * K_h + c z`, then `v(0) + q (g - g(0))` with `q` fixing `v(1)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mollified {
    pub v: MonotoneFunction,
    pub h: f64,
    pub projection: f64,
    g0: f64,
    q: f64,
}

impl Mollified {
    fn new(v: MonotoneFunction, h: f64, projection: f64) -> Self {
        let mut m = Mollified { v, h, projection, g0: 0.0, q: 1.0 };
        let g0 = m.raw(0.0).0;
        let g1 = m.raw(1.0).0;
        let (v0, v1) = (m.v.samples[0], *m.v.samples.last().unwrap());
        m.g0 = g0;
        m.q = (v1 - v0) / (g1 - g0);
        m
    }

    fn raw(&self, z: f64) -> (f64, f64) {
        let v = &self.v;
        let n = v.pieces() as isize;
        let dz = v.spacing();
        let h = self.h;
        let lo = ((z - h) / dz).floor() as isize;
        let hi = ((z + h) / dz).floor() as isize;
        let (mut val, mut der) = (Vec::new(), Vec::new());
        let mut piece = |a: f64, b: f64, va: f64, m: f64| {
            let t1 = (z - b) / h;
            let t2 = (z - a) / h;
            if t2 <= -1.0 || t1 >= 1.0 {
                return;
            }
            let mass = kernel_cdf(t2) - kernel_cdf(t1);
            val.push((va + m * (z - a)) * mass - m * h * (kernel_moment(t2) - kernel_moment(t1)));
            der.push(m * mass);
        };
        if lo < 0 {
            let a = z - 2.0 * h;
            piece(a, 0.0, v.samples[0] + v.slope(0) * a, v.slope(0));
        }
        for i in lo.max(0)..=hi.min(n - 1) {
            let i = i as usize;
            piece(v.node(i), v.node(i + 1), v.samples[i], v.slope(i));
        }
        if hi >= n {
            let last = v.pieces() - 1;
            piece(1.0, z + 2.0 * h, v.samples[last + 1], v.slope(last));
        }
        (pairwise_sum(&val) + self.projection * z, pairwise_sum(&der) + self.projection)
    }

    /// Value and derivative. The endpoints are reproduced exactly.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        let (g, dg) = self.raw(z);
        let value = if z == 0.0 {
            self.v.samples[0]
        } else if z == 1.0 {
            *self.v.samples.last().unwrap()
        } else {
            self.v.samples[0] + self.q * (g - self.g0)
        };
        (value, self.q * dg)
    }
}

/// Postcondition measurements of a monotone smoothing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneReport {
    pub check_points: usize,
    pub sup_distance: f64,
    pub bound: f64,
    pub min_derivative: f64,
    pub max_derivative: f64,
    pub endpoint_defect: f64,
    /// Largest derivative jump between neighbouring check points, relative
    /// to the spacing; a crude continuity witness for the derivative.
    pub derivative_jump: f64,
    pub collar_exact: bool,
    pub pass: bool,
}

/// Check `f` against `v` at `factor` times the input resolution.
pub fn check_monotone(
    f: &dyn Fn(f64) -> (f64, f64),
    v: &MonotoneFunction,
    bound: f64,
    factor: usize,
) -> MonotoneReport {
    let n = v.pieces() * factor;
    let (mut sup, mut dmin, mut dmax, mut jump) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    let mut prev: Option<f64> = None;
    for i in 0..=n {
        let z = if i == n { 1.0 } else { i as f64 / n as f64 };
        let (val, d) = f(z);
        sup = sup.max((val - v.eval(z)).abs());
        dmin = dmin.min(d);
        dmax = dmax.max(d);
        if let Some(p) = prev {
            jump = jump.max((d - p).abs());
        }
        prev = Some(d);
    }
    let endpoint_defect =
        (f(0.0).0 - v.samples[0]).abs().max((f(1.0).0 - v.samples[v.pieces()]).abs());
    let pass = sup < bound && dmin > 0.0 && dmin.is_finite() && dmax.is_finite();
    MonotoneReport {
        check_points: n + 1,
        sup_distance: sup,
        bound,
        min_derivative: dmin,
        max_derivative: dmax,
        endpoint_defect,
        derivative_jump: jump,
        collar_exact: true,
        pass,
    }
}

/// Resolution multiplier of every postcondition check.
pub const CHECK_FACTOR: usize = 10;
const MAX_HALVINGS: usize = 40;

/// A smoothing of an increasing function with its certificate.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothIncreasing {
    pub smooth: Mollified,
    pub report: MonotoneReport,
    pub attempts: usize,
}

impl SmoothIncreasing {
    pub fn eval(&self, z: f64) -> (f64, f64) {
        self.smooth.eval(z)
    }
}

/// `C^1` increasing `v~` with the endpoints of `v` and `sup |v~ - v| < eps`.
pub fn smooth_increasing(v: &MonotoneFunction, eps: f64) -> Result<SmoothIncreasing> {
    if !(eps > 0.0) {
        return Err(LabError::Precondition("eps must be positive".into()));
    }
    MonotoneFunction::new(v.samples.clone())?;
    let range = v.samples[v.pieces()] - v.samples[0];
    let floor = 1e-12 * range;
    let mut h = (eps / v.max_slope()).min(0.25);
    let mut last = None;
    for attempt in 1..=MAX_HALVINGS {
        let mut m = Mollified::new(v.clone(), h, 0.0);
        let mut report = check_monotone(&|z| m.eval(z), v, eps, CHECK_FACTOR);
        if report.min_derivative <= floor {
            let c = (floor - report.min_derivative / m.q).max(0.0) * 2.0;
            m = Mollified::new(v.clone(), h, c);
            report = check_monotone(&|z| m.eval(z), v, eps, CHECK_FACTOR);
        }
        if report.pass && report.endpoint_defect == 0.0 {
            return Ok(SmoothIncreasing { smooth: m, report, attempts: attempt });
        }
        last = Some(report);
        h *= 0.5;
    }
    Err(LabError::SmoothingFailed(format!("monotone smoothing did not meet the bound: {last:?}")))
}

/// Boundary data `v_d` on `[0, 2 delta) u (1 - 2 delta, 1]`.
#[derive(Clone)]
pub struct CollarData {
    pub delta: f64,
    pub f: C1Fn,
}

impl std::fmt::Debug for CollarData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CollarData").field("delta", &self.delta).finish()
    }
}

impl CollarData {
    pub fn new<F: Fn(f64) -> (f64, f64) + Send + Sync + 'static>(delta: f64, f: F) -> Self {
        CollarData { delta, f: Arc::new(f) }
    }
}

const PANELS: usize = 2048;

/// Relative smoothing: equals the collar data on `[0, delta] u [1 - delta, 1]`
/// and integrates a blend of the data's and a free smoothing's derivative
/// in between.
#[derive(Clone, Serialize)]
pub struct RelativeSmoothing {
    #[serde(skip)]
    pub data: CollarData,
    pub base: SmoothIncreasing,
    pub ramp: f64,
    pub lambda: f64,
    pub delta: f64,
    cumulative: Vec<f64>,
    start: f64,
}

impl std::fmt::Debug for RelativeSmoothing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RelativeSmoothing")
            .field("delta", &self.delta)
            .field("ramp", &self.ramp)
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl RelativeSmoothing {
    fn beta(&self, z: f64) -> f64 {
        smoothstep((z - self.delta) / self.ramp) * smoothstep((1.0 - self.delta - z) / self.ramp)
    }

    fn derivative(&self, z: f64) -> f64 {
        let b = self.beta(z);
        let mut d = b * self.lambda * self.base.eval(z).1;
        if b < 1.0 {
            d += (1.0 - b) * (self.data.f)(z).1;
        }
        d
    }

    fn panel_width(&self) -> f64 {
        (1.0 - 2.0 * self.delta) / PANELS as f64
    }

    fn panel_integral(&self, a: f64, b: f64) -> f64 {
        let (xs, ws) = gauss_legendre5(a, b);
        (0..5).map(|i| ws[i] * self.derivative(xs[i])).sum()
    }

    pub fn eval(&self, z: f64) -> (f64, f64) {
        let d = self.delta;
        if z <= d || z >= 1.0 - d {
            return (self.data.f)(z);
        }
        let w = self.panel_width();
        let k = (((z - d) / w).floor() as usize).min(PANELS - 1);
        let a = d + k as f64 * w;
        (self.start + self.cumulative[k] + self.panel_integral(a, z), self.derivative(z))
    }

    fn integrate_parts(&self) -> (f64, f64) {
        // (collar part, free part) of the integral of the derivative
        let w = self.panel_width();
        let (mut collar, mut free) = (Vec::new(), Vec::new());
        for k in 0..PANELS {
            let (xs, ws) = gauss_legendre5(self.delta + k as f64 * w, self.delta + (k + 1) as f64 * w);
            for i in 0..5 {
                let b = self.beta(xs[i]);
                if b < 1.0 {
                    collar.push(ws[i] * (1.0 - b) * (self.data.f)(xs[i]).1);
                }
                free.push(ws[i] * b * self.base.eval(xs[i]).1);
            }
        }
        (pairwise_sum(&collar), pairwise_sum(&free))
    }

    fn tabulate(&mut self) {
        let w = self.panel_width();
        let mut acc = 0.0;
        self.cumulative = Vec::with_capacity(PANELS);
        for k in 0..PANELS {
            self.cumulative.push(acc);
            let a = self.delta + k as f64 * w;
            acc += self.panel_integral(a, a + w);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RelativeReport {
    pub monotone: MonotoneReport,
    pub collar_mismatches: usize,
    pub ramps_tried: usize,
}

/// Samples of the collar region `[0, 2 delta) u (1 - 2 delta, 1]` at `factor` times
/// the resolution of `v`.
fn collar_points(v: &MonotoneFunction, delta: f64, factor: usize) -> Vec<f64> {
    let n = v.pieces() * factor;
    (0..=n)
        .map(|i| if i == n { 1.0 } else { i as f64 / n as f64 })
        .filter(|&z| z < 2.0 * delta || z > 1.0 - 2.0 * delta)
        .collect()
}

/// Validate collar data against `v` and the compatibility condition.
pub fn check_collar_data(v: &MonotoneFunction, data: &CollarData, eps: f64) -> Result<()> {
    let d = data.delta;
    if !(d > 0.0 && d < 0.25) {
        return Err(LabError::Precondition(format!("collar width {d} outside (0, 1/4)")));
    }
    for (i, z) in collar_points(v, d, CHECK_FACTOR).into_iter().enumerate() {
        let (val, der) = (data.f)(z);
        if !(der > 0.0) {
            return Err(LabError::Precondition(format!("collar data not increasing at check point {i} (z = {z})")));
        }
        if !((val - v.eval(z)).abs() < eps) {
            return Err(LabError::Precondition(format!("collar data farther than eps from v at check point {i} (z = {z})")));
        }
    }
    let (a, b) = ((data.f)(d).0, (data.f)(1.0 - d).0);
    if !(a < b) {
        return Err(LabError::IncompatibleCollar(format!("v_d(delta) = {a} >= v_d(1 - delta) = {b}")));
    }
    Ok(())
}

const RAMP_TRIES: usize = 8;
/// Share of the budget given to the free smoothing.
const BASE_SHARE: f64 = 0.125;

/// Smoothing that agrees with collar data near both ends, within `2 eps` of `v`.
pub fn smooth_increasing_relative(
    v: &MonotoneFunction,
    data: &CollarData,
    eps: f64,
) -> Result<(RelativeSmoothing, RelativeReport)> {
    check_collar_data(v, data, eps)?;
    let d = data.delta;
    let base = smooth_increasing(v, BASE_SHARE * eps)?;
    let delta_total = (data.f)(1.0 - d).0 - (data.f)(d).0;
    let mut ramp = d;
    let mut last = None;
    for tries in 1..=RAMP_TRIES {
        let mut s = RelativeSmoothing {
            data: data.clone(),
            base: base.clone(),
            ramp,
            lambda: 1.0,
            delta: d,
            cumulative: Vec::new(),
            start: (data.f)(d).0,
        };
        let (collar, free) = s.integrate_parts();
        let lambda = (delta_total - collar) / free;
        if lambda > 0.0 {
            s.lambda = lambda;
            s.tabulate();
            let mut monotone = check_monotone(&|z| s.eval(z), v, 2.0 * eps, CHECK_FACTOR);
            let mismatches = collar_mismatches(v, data, &|z| s.eval(z).0);
            monotone.collar_exact = mismatches == 0;
            monotone.pass &= mismatches == 0;
            if monotone.pass {
                return Ok((s, RelativeReport { monotone, collar_mismatches: mismatches, ramps_tried: tries }));
            }
            last = Some(monotone);
        }
        ramp *= 0.5;
    }
    Err(LabError::SmoothingFailed(format!("relative smoothing failed for every ramp: {last:?}")))
}

/// Input samples in `[0, delta] u [1 - delta, 1]` where `f` differs from the data.
pub fn collar_mismatches(v: &MonotoneFunction, data: &CollarData, f: &dyn Fn(f64) -> f64) -> usize {
    (0..=v.pieces())
        .map(|i| v.node(i))
        .filter(|&z| z <= data.delta || z >= 1.0 - data.delta)
        .filter(|&z| f(z) != (data.f)(z).0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_monotone() {
        assert_eq!(MonotoneFunction::new(vec![0.0, 0.5, 0.5, 1.0]), Err(LabError::NotIncreasing(2)));
    }

    #[test]
    fn kernel_tables() {
        assert!((kernel_cdf(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(kernel_cdf(-1.0), 0.0);
        assert!(kernel_moment(1.0).abs() < 1e-15 && kernel_moment(-1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_is_fixed() {
        let v = MonotoneFunction::from_fn(17, |z| z).unwrap();
        let s = smooth_increasing(&v, 0.01).unwrap();
        for i in 0..=100 {
            let z = i as f64 / 100.0;
            let (val, d) = s.eval(z);
            assert!((val - z).abs() < 1e-14 && (d - 1.0).abs() < 1e-13, "{z} {val} {d}");
        }
    }

    #[test]
    fn kink_is_rounded() {
        let v = MonotoneFunction::from_fn(33, |z| if z < 0.5 { 0.2 * z } else { 0.1 + 1.8 * (z - 0.5) }).unwrap();
        let s = smooth_increasing(&v, 0.01).unwrap();
        let r = &s.report;
        assert!(r.pass && r.sup_distance < 0.01);
        assert!(r.min_derivative > 0.0 && r.max_derivative <= 2.5);
        assert_eq!(s.eval(0.0).0, v.samples[0]);
        assert_eq!(s.eval(1.0).0, v.samples[32]);
    }

    #[test]
    fn flat_start_gets_positive_slope() {
        let v = MonotoneFunction::from_fn(41, |z| z * z * z).unwrap();
        let s = smooth_increasing(&v, 0.01).unwrap();
        assert!(s.eval(0.0).1 > 0.0);
        assert!(s.report.sup_distance < 0.01);
    }

    #[test]
    fn smooth_input_keeps_half_its_slope() {
        let v = MonotoneFunction::from_fn(65, |z| z + 0.3 * z * z).unwrap();
        let s = smooth_increasing(&v, 0.001).unwrap();
        assert!(s.report.min_derivative >= 0.5);
    }

    fn bump(z: f64, a: f64, b: f64) -> (f64, f64) {
        if z <= a || z >= b {
            return (0.0, 0.0);
        }
        let s = (z - a) / (b - a);
        let p = 16.0 * s * s * (1.0 - s) * (1.0 - s);
        let dp = 32.0 * s * (1.0 - s) * (1.0 - 2.0 * s) / (b - a);
        (p, dp)
    }

    #[test]
    fn relative_matches_collar() {
        let v = MonotoneFunction::from_fn(41, |z| z).unwrap();
        let data = CollarData::new(0.1, |z| {
            let (b, db) = bump(z, 0.0, 0.2);
            (z + 0.005 * b, 1.0 + 0.005 * db)
        });
        let (s, rep) = smooth_increasing_relative(&v, &data, 0.01).unwrap();
        assert!(rep.monotone.pass, "{rep:?}");
        assert_eq!(rep.collar_mismatches, 0);
        for i in 0..=40 {
            let z = i as f64 / 40.0;
            if z <= 0.1 {
                assert_eq!(s.eval(z).0, (data.f)(z).0);
            }
            assert!((s.eval(z).0 - z).abs() < 0.02);
        }
    }

    #[test]
    fn relative_reproduces_global_data() {
        let v = MonotoneFunction::from_fn(33, |z| z + 0.2 * z * z).unwrap();
        let data = CollarData::new(0.1, |z| (z + 0.2 * z * z, 1.0 + 0.4 * z));
        let (s, _) = smooth_increasing_relative(&v, &data, 0.01).unwrap();
        for i in 0..=64 {
            let z = i as f64 / 64.0;
            assert!((s.eval(z).0 - (z + 0.2 * z * z)).abs() < 0.02);
        }
    }

    #[test]
    fn incompatible_collar_rejected() {
        let v = MonotoneFunction::from_fn(33, |z| 0.01 * z).unwrap();
        let data = CollarData::new(0.2, |z| (if z < 0.5 { 0.0095 + 1e-4 * z } else { 0.0005 + 1e-4 * z }, 1e-4));
        assert!(matches!(
            smooth_increasing_relative(&v, &data, 0.01),
            Err(LabError::IncompatibleCollar(_))
        ));
    }
}
