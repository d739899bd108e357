//! Tensor-product mollification of gridded functions.
//!
//! The bilinear (or linear) interpolant of the samples is convolved with the
//! triweight kernel along each axis. Convolving a hat function gives a smooth
//! bump built from the mollified ramp `R = K_h * max(x, 0)`, so values and
//! first derivatives are exact sums over a handful of nodes. Convolution keeps
//! affine data fixed and keeps any sign of a partial derivative.

use serde::Serialize;

use super::monotone::{kernel_cdf, kernel_moment};
use crate::error::{LabError, Result};

/// How samples continue past the ends of an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GridBoundary {
    /// Nodes at `i / (n - 1)` on `[0, 1]`, linear extrapolation outside.
    Linear,
    /// Nodes at `i / n`, values repeat with period one.
    Periodic,
}

impl GridBoundary {
    fn spacing(self, n: usize) -> f64 {
        match self {
            GridBoundary::Linear => 1.0 / (n - 1) as f64,
            GridBoundary::Periodic => 1.0 / n as f64,
        }
    }

    // samples along one axis as (base index, fraction toward base + 1)
    fn locate(self, i: isize, n: usize) -> (usize, f64) {
        match self {
            GridBoundary::Periodic => (i.rem_euclid(n as isize) as usize, 0.0),
            GridBoundary::Linear => {
                let base = i.clamp(0, n as isize - 2);
                (base as usize, (i - base) as f64)
            }
        }
    }
}

fn ramp(x: f64, h: f64) -> (f64, f64) {
    if x >= h {
        (x, 1.0)
    } else if x <= -h {
        (0.0, 0.0)
    } else {
        let t = x / h;
        (x * kernel_cdf(t) - h * kernel_moment(t), kernel_cdf(t))
    }
}

/// Weights `(node, w, dw/dx)` of the mollified hats that are nonzero at `x`.
fn axis_weights(x: f64, d: f64, h: f64) -> Vec<(isize, f64, f64)> {
    let lo = ((x - h) / d).ceil() as isize - 1;
    let hi = ((x + h) / d).floor() as isize + 1;
    (lo..=hi)
        .map(|i| {
            let t = i as f64 * d;
            let (a, da) = ramp(x - t + d, h);
            let (b, db) = ramp(x - t, h);
            let (c, dc) = ramp(x - t - d, h);
            (i, (a - 2.0 * b + c) / d, (da - 2.0 * db + dc) / d)
        })
        .filter(|&(_, w, dw)| w != 0.0 || dw != 0.0)
        .collect()
}

/// Postcondition measurements of a mollification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorReport {
    pub check_points: usize,
    pub sup_distance: f64,
    pub bound: f64,
    pub min_dx: f64,
    pub halvings: usize,
    pub pass: bool,
}

const FIT_FACTOR: usize = 4;
const MAX_HALVINGS: usize = 40;

/// Mollified bilinear interpolant of an `nx x ny` grid (x fastest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMollifier {
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
    pub h: [f64; 2],
    pub boundary: GridBoundary,
}

impl GridMollifier {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>, boundary: GridBoundary, h: [f64; 2]) -> Result<Self> {
        let min = if boundary == GridBoundary::Linear { 2 } else { 1 };
        if nx < min || ny < min || values.len() != nx * ny {
            return Err(LabError::GridMismatch(format!("{} samples for a {nx} x {ny} grid", values.len())));
        }
        if !(h[0] > 0.0 && h[1] > 0.0) {
            return Err(LabError::Precondition("kernel widths must be positive".into()));
        }
        Ok(GridMollifier { nx, ny, values, h, boundary })
    }

    fn node(&self, i: isize, j: isize) -> f64 {
        let (i0, s) = self.boundary.locate(i, self.nx);
        let (j0, t) = self.boundary.locate(j, self.ny);
        let at = |a: usize, b: usize| self.values[b * self.nx + a];
        if s == 0.0 && t == 0.0 {
            return at(i0, j0);
        }
        let row = |b: usize| (1.0 - s) * at(i0, b) + s * at(i0 + 1, b);
        (1.0 - t) * row(j0) + t * row(j0 + 1)
    }

    pub fn spacing(&self) -> [f64; 2] {
        [self.boundary.spacing(self.nx), self.boundary.spacing(self.ny)]
    }

    /// The bilinear interpolant being smoothed.
    pub fn bilinear(&self, x: f64, y: f64) -> f64 {
        let [dx, dy] = self.spacing();
        let (fx, fy) = (x / dx, y / dy);
        let (i, j) = (fx.floor(), fy.floor());
        let (s, t) = (fx - i, fy - j);
        let (i, j) = (i as isize, j as isize);
        (1.0 - t) * ((1.0 - s) * self.node(i, j) + s * self.node(i + 1, j))
            + t * ((1.0 - s) * self.node(i, j + 1) + s * self.node(i + 1, j + 1))
    }

    /// `(value, d/dx, d/dy)`.
    pub fn eval(&self, x: f64, y: f64) -> [f64; 3] {
        let [dx, dy] = self.spacing();
        let wx = axis_weights(x, dx, self.h[0]);
        let wy = axis_weights(y, dy, self.h[1]);
        let (mut v, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for &(j, b, db) in &wy {
            let (mut r, mut rx) = (0.0, 0.0);
            for &(i, a, da) in &wx {
                let f = self.node(i, j);
                r += a * f;
                rx += da * f;
            }
            v += b * r;
            vx += b * rx;
            vy += db * r;
        }
        [v, vx, vy]
    }

    /// Halve the kernel width until the sampled distance to the bilinear
    /// interpolant is below `eps`.
    pub fn fit(nx: usize, ny: usize, values: Vec<f64>, boundary: GridBoundary, eps: f64) -> Result<(Self, TensorReport)> {
        if !(eps > 0.0) {
            return Err(LabError::Precondition("eps must be positive".into()));
        }
        let mut m = GridMollifier::new(nx, ny, values, boundary, [1.0, 1.0])?;
        let [dx, dy] = m.spacing();
        m.h = [dx, dy];
        let mut last = None;
        for halvings in 0..MAX_HALVINGS {
            let rep = m.check(eps, halvings);
            if rep.pass {
                return Ok((m, rep));
            }
            last = Some(rep);
            m.h = [m.h[0] * 0.5, m.h[1] * 0.5];
        }
        Err(LabError::SmoothingFailed(format!("grid mollification did not meet the bound: {last:?}")))
    }

    pub fn check(&self, eps: f64, halvings: usize) -> TensorReport {
        let span = |n: usize| match self.boundary {
            GridBoundary::Linear => (n - 1) * FIT_FACTOR,
            GridBoundary::Periodic => n * FIT_FACTOR - 1,
        };
        let (mx, my) = (span(self.nx), span(self.ny));
        let [dx, dy] = self.spacing();
        let (mut sup, mut min_dx) = (0.0f64, f64::INFINITY);
        for j in 0..=my {
            let y = j as f64 * dy / FIT_FACTOR as f64;
            for i in 0..=mx {
                let x = i as f64 * dx / FIT_FACTOR as f64;
                let [v, vx, _] = self.eval(x, y);
                sup = sup.max((v - self.bilinear(x, y)).abs());
                min_dx = min_dx.min(vx);
            }
        }
        TensorReport {
            check_points: (mx + 1) * (my + 1),
            sup_distance: sup,
            bound: eps,
            min_dx,
            halvings,
            pass: sup < eps && sup.is_finite(),
        }
    }
}

/// One-dimensional counterpart of [`GridMollifier`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineMollifier {
    pub values: Vec<f64>,
    pub h: f64,
    pub boundary: GridBoundary,
}

impl LineMollifier {
    fn node(&self, i: isize) -> f64 {
        let (i0, s) = self.boundary.locate(i, self.values.len());
        if s == 0.0 {
            self.values[i0]
        } else {
            (1.0 - s) * self.values[i0] + s * self.values[i0 + 1]
        }
    }

    pub fn spacing(&self) -> f64 {
        self.boundary.spacing(self.values.len())
    }

    pub fn linear(&self, x: f64) -> f64 {
        let f = x / self.spacing();
        let i = f.floor();
        let s = f - i;
        let i = i as isize;
        (1.0 - s) * self.node(i) + s * self.node(i + 1)
    }

    /// `(value, derivative)`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (mut v, mut d) = (0.0, 0.0);
        for (i, w, dw) in axis_weights(x, self.spacing(), self.h) {
            let f = self.node(i);
            v += w * f;
            d += dw * f;
        }
        (v, d)
    }

    pub fn fit(values: Vec<f64>, boundary: GridBoundary, eps: f64) -> Result<(Self, TensorReport)> {
        let min = if boundary == GridBoundary::Linear { 2 } else { 1 };
        if values.len() < min {
            return Err(LabError::GridMismatch(format!("{} samples", values.len())));
        }
        if !(eps > 0.0) {
            return Err(LabError::Precondition("eps must be positive".into()));
        }
        let mut m = LineMollifier { values, h: 1.0, boundary };
        m.h = m.spacing();
        let n = match boundary {
            GridBoundary::Linear => (m.values.len() - 1) * FIT_FACTOR,
            GridBoundary::Periodic => m.values.len() * FIT_FACTOR - 1,
        };
        let mut last = None;
        for halvings in 0..MAX_HALVINGS {
            let (mut sup, mut min_dx) = (0.0f64, f64::INFINITY);
            for i in 0..=n {
                let x = i as f64 * m.spacing() / FIT_FACTOR as f64;
                let (v, d) = m.eval(x);
                sup = sup.max((v - m.linear(x)).abs());
                min_dx = min_dx.min(d);
            }
            let rep = TensorReport { check_points: n + 1, sup_distance: sup, bound: eps, min_dx, halvings, pass: sup < eps };
            if rep.pass {
                return Ok((m, rep));
            }
            last = Some(rep);
            m.h *= 0.5;
        }
        Err(LabError::SmoothingFailed(format!("line mollification did not meet the bound: {last:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hats_form_a_partition_of_unity() {
        for &x in &[0.0, 0.013, 0.37, 0.5, 0.999] {
            let w = axis_weights(x, 0.1, 0.07);
            let s: f64 = w.iter().map(|t| t.1).sum();
            let ds: f64 = w.iter().map(|t| t.2).sum();
            assert!((s - 1.0).abs() < 1e-14 && ds.abs() < 1e-12, "{x}: {s} {ds}");
        }
    }

    #[test]
    fn affine_data_is_fixed() {
        let (nx, ny) = (9, 7);
        let f = |x: f64, y: f64| 0.3 + 2.0 * x - 0.7 * y;
        let vals = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| f(i as f64 / 8.0, j as f64 / 6.0)))
            .collect();
        let m = GridMollifier::new(nx, ny, vals, GridBoundary::Linear, [0.1, 0.15]).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.31, 0.77), (1.0, 1.0), (0.05, 0.99)] {
            let [v, vx, vy] = m.eval(x, y);
            assert!((v - f(x, y)).abs() < 1e-13 && (vx - 2.0).abs() < 1e-12 && (vy + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_kink_is_smoothed_within_bound() {
        let n = 64;
        let vals: Vec<f64> = (0..n)
            .flat_map(|j| {
                (0..n).map(move |i| {
                    let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
                    0.02 * (2.0 * std::f64::consts::PI * y).sin().abs() + 0.01 * (2.0 * std::f64::consts::PI * x).cos()
                })
            })
            .collect();
        let (m, rep) = GridMollifier::fit(n, n, vals, GridBoundary::Periodic, 1e-4).unwrap();
        assert!(rep.pass && rep.sup_distance < 1e-4);
        // periodic: value at 1 equals value at 0
        assert!((m.eval(1.0, 0.3)[0] - m.eval(0.0, 0.3)[0]).abs() < 1e-15);
    }

    #[test]
    fn increasing_rows_stay_increasing() {
        let n = 17;
        let vals: Vec<f64> = (0..n)
            .flat_map(|j| (0..n).map(move |i| {
                let x = i as f64 / 16.0;
                if j % 2 == 0 { x * x * x + 0.01 * x } else { x }
            }))
            .collect();
        let (_, rep) = GridMollifier::fit(n, n, vals, GridBoundary::Linear, 1e-3).unwrap();
        assert!(rep.min_dx > 0.0);
    }

    #[test]
    fn line_fit() {
        let vals: Vec<f64> = (0..32).map(|i| 0.05 * ((i as f64) * 0.7).sin()).collect();
        let (m, rep) = LineMollifier::fit(vals, GridBoundary::Periodic, 1e-5).unwrap();
        assert!(rep.pass);
        assert!((m.eval(1.0).0 - m.eval(0.0).0).abs() < 1e-15);
    }
}
