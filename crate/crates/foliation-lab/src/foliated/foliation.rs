//! Linear foliations of the flat torus and sampled foliated homeomorphisms.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{LabError, Result};

pub type P2 = [f64; 2];

/// Leaf direction of a linear foliation by coordinate lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axis {
    /// Leaves `y = const`, the foliation `ker dy`.
    Horizontal,
    /// Leaves `x = const`, the foliation `ker dx`.
    Vertical,
}

/// A linear foliation of `R^2 / Z^2` by coordinate lines. The adapted chart is
/// global: the identity for horizontal leaves, the coordinate swap for
/// vertical ones; transitions are translations by lattice vectors and keep
/// the line field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Foliation2D {
    pub axis: Axis,
}

impl Foliation2D {
    pub fn horizontal() -> Self {
        Foliation2D { axis: Axis::Horizontal }
    }

    pub fn vertical() -> Self {
        Foliation2D { axis: Axis::Vertical }
    }

    /// Unit tangent of the leaf through any point.
    pub fn tangent(&self) -> P2 {
        match self.axis {
            Axis::Horizontal => [1.0, 0.0],
            Axis::Vertical => [0.0, 1.0],
        }
    }

    /// Unsigned angle in `[0, pi/2]` between the leaf direction and `v`.
    pub fn angle_to(&self, v: P2) -> f64 {
        let t = self.tangent();
        let c = (t[0] * v[0] + t[1] * v[1]).abs();
        let s = (t[0] * v[1] - t[1] * v[0]).abs();
        s.atan2(c)
    }

    /// Adapted coordinates: leaves become horizontal.
    pub fn to_adapted(&self, p: P2) -> P2 {
        match self.axis {
            Axis::Horizontal => p,
            Axis::Vertical => [p[1], p[0]],
        }
    }

    pub fn from_adapted(&self, p: P2) -> P2 {
        self.to_adapted(p)
    }
}

/// Lift of a foliated homeomorphism in adapted coordinates,
/// `h(x, y) = (x + twist y + du(x, y), y + dv(y))` with `du`, `dv` periodic and
/// sampled on the `n x n` grid of `[0, 1)^2` (x fastest). Between samples
/// `du` is bilinear and `dv` linear. The twist makes the shear
/// `(x + a y, y)` a homeomorphism onto the torus with lattice
/// `<(1, 0), (a, 1)>`, still foliated by horizontal lines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoliatedHomeo2D {
    pub n: usize,
    pub twist: f64,
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub name: String,
}

/// Relative tolerance of the leaf test.
const LEAF_TOL: f64 = 1e-12;

impl FoliatedHomeo2D {
    /// Sample a lift `f` at the grid nodes and validate it.
    pub fn from_fn<F: Fn(P2) -> P2>(n: usize, twist: f64, name: &str, f: F) -> Result<Self> {
        if n < 4 {
            return Err(LabError::Precondition("need at least 4 samples per side".into()));
        }
        for y in [0.0, 0.5] {
            if f([1.0, y])[0] - f([0.0, y])[0] < 0.0 {
                return Err(LabError::OrientationMismatch(format!("{name}: the leaf y = {y} is reversed")));
            }
        }
        if f([0.0, 1.0])[1] - f([0.0, 0.0])[1] < 0.0 {
            return Err(LabError::OrientationMismatch(format!("{name}: the transverse direction is reversed")));
        }
        let node = |i: usize| i as f64 / n as f64;
        let mut du = vec![0.0; n * n];
        let mut dv = vec![0.0; n];
        for j in 0..n {
            let y = node(j);
            let y0 = f([0.0, y])[1];
            for i in 0..n {
                let x = node(i);
                let q = f([x, y]);
                if (q[1] - y0).abs() > LEAF_TOL * (1.0 + y0.abs()) {
                    return Err(LabError::NotFoliated(format!(
                        "image of the leaf y = {y} is not a leaf: sample {i} has height {} vs {y0}",
                        q[1]
                    )));
                }
                du[j * n + i] = q[0] - x - twist * y;
            }
            dv[j] = y0 - y;
        }
        let h = FoliatedHomeo2D { n, twist, du, dv, name: name.into() };
        h.validate()?;
        Ok(h)
    }

    /// Strict monotonicity of `v` and of every row of `u`, with orientation
    /// reversal reported separately.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if self.du.len() != n * n || self.dv.len() != n {
            return Err(LabError::GridMismatch(format!("expected {n} x {n} and {n} samples")));
        }
        let step = 1.0 / n as f64;
        let vdiff: Vec<f64> = (0..n).map(|j| step + self.dv[(j + 1) % n] - self.dv[j]).collect();
        check_signs(&vdiff, "v")?;
        for j in 0..n {
            let row = &self.du[j * n..(j + 1) * n];
            let d: Vec<f64> = (0..n).map(|i| step + row[(i + 1) % n] - row[i]).collect();
            check_signs(&d, &format!("u(., y_{j})")).map_err(|e| match e {
                LabError::NotIncreasing(i) => LabError::NotIncreasing(j * n + i),
                e => e,
            })?;
        }
        Ok(())
    }

    pub fn identity(n: usize) -> Self {
        FoliatedHomeo2D { n, twist: 0.0, du: vec![0.0; n * n], dv: vec![0.0; n], name: "identity".into() }
    }

    pub fn shear(n: usize, a: f64) -> Self {
        FoliatedHomeo2D { n, twist: a, du: vec![0.0; n * n], dv: vec![0.0; n], name: format!("shear({a})") }
    }

    /// `(x + amp |sin 2 pi y|, y)`: continuous, not differentiable in `y`.
    pub fn wiggle(n: usize, amp: f64) -> Self {
        Self::shear_wiggle(n, 0.0, amp)
    }

    /// Shear composed with the wiggle.
    pub fn shear_wiggle(n: usize, a: f64, amp: f64) -> Self {
        let du = (0..n * n).map(|k| amp * (2.0 * PI * (k / n) as f64 / n as f64).sin().abs()).collect();
        FoliatedHomeo2D { n, twist: a, du, dv: vec![0.0; n], name: format!("shear({a})+wiggle({amp})") }
    }

    /// Product map `(u(x), v(y))` from lifts of circle homeomorphisms.
    pub fn product<A: Fn(f64) -> f64, B: Fn(f64) -> f64>(n: usize, u: A, v: B, name: &str) -> Result<Self> {
        Self::from_fn(n, 0.0, name, |p| [u(p[0]), v(p[1])])
    }

    /// Named built-ins: `identity`, `shear`, `wiggle`, `shear-wiggle`.
    pub fn builtin(name: &str, n: usize, a: f64, amp: f64) -> Result<Self> {
        match name {
            "identity" => Ok(Self::identity(n)),
            "shear" => Ok(Self::shear(n, a)),
            "wiggle" => Ok(Self::wiggle(n, amp)),
            "shear-wiggle" => Ok(Self::shear_wiggle(n, a, amp)),
            _ => Err(LabError::Config(format!("unknown homeomorphism '{name}'"))),
        }
    }

    /// Periodic part of `u` at `(x, y)`, bilinear between samples.
    pub fn du_at(&self, x: f64, y: f64) -> f64 {
        let n = self.n as f64;
        let (fx, fy) = (x * n, y * n);
        let (i, j) = (fx.floor(), fy.floor());
        let (s, t) = (fx - i, fy - j);
        let m = self.n as i64;
        let at = |a: i64, b: i64| self.du[(b.rem_euclid(m) * m + a.rem_euclid(m)) as usize];
        let (i, j) = (i as i64, j as i64);
        (1.0 - t) * ((1.0 - s) * at(i, j) + s * at(i + 1, j)) + t * ((1.0 - s) * at(i, j + 1) + s * at(i + 1, j + 1))
    }

    pub fn dv_at(&self, y: f64) -> f64 {
        let fy = y * self.n as f64;
        let j = fy.floor();
        let t = fy - j;
        let m = self.n as i64;
        let j = j as i64;
        (1.0 - t) * self.dv[j.rem_euclid(m) as usize] + t * self.dv[(j + 1).rem_euclid(m) as usize]
    }

    /// `v(y)`.
    pub fn v(&self, y: f64) -> f64 {
        y + self.dv_at(y)
    }

    pub fn eval(&self, p: P2) -> P2 {
        [p[0] + self.twist * p[1] + self.du_at(p[0], p[1]), self.v(p[1])]
    }

    /// Largest slope of `du` along rows and columns and of `dv`.
    pub fn lipschitz(&self) -> [f64; 3] {
        let n = self.n;
        let (mut lx, mut ly, mut lv) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..n {
            for i in 0..n {
                let a = self.du[j * n + i];
                lx = lx.max((self.du[j * n + (i + 1) % n] - a).abs());
                ly = ly.max((self.du[((j + 1) % n) * n + i] - a).abs());
            }
            lv = lv.max((self.dv[(j + 1) % n] - self.dv[j]).abs());
        }
        [lx * n as f64, ly * n as f64, lv * n as f64]
    }

    /// Whether `u` depends on `x` only: the map also preserves vertical leaves.
    pub fn preserves_vertical(&self) -> bool {
        let n = self.n;
        self.twist == 0.0 && (1..n).all(|j| self.du[j * n..(j + 1) * n] == self.du[..n])
    }
}

fn check_signs(d: &[f64], what: &str) -> Result<()> {
    if d.iter().all(|&x| x < 0.0) {
        return Err(LabError::OrientationMismatch(format!("{what} reverses orientation")));
    }
    match d.iter().position(|&x| !(x > 0.0)) {
        Some(i) => Err(LabError::NotIncreasing(i)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_evaluate() {
        let h = FoliatedHomeo2D::shear_wiggle(64, 0.3, 0.02);
        let p = h.eval([0.1, 0.25]);
        assert!((p[0] - (0.1 + 0.075 + 0.02)).abs() < 1e-15 && p[1] == 0.25);
        // equivariance of the lift
        let q = h.eval([1.1, 1.25]);
        assert!((q[0] - p[0] - 1.3).abs() < 1e-14 && (q[1] - p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn from_fn_matches_builtin() {
        let h = FoliatedHomeo2D::from_fn(32, 0.3, "s", |p| [p[0] + 0.3 * p[1], p[1]]).unwrap();
        let s = FoliatedHomeo2D::shear(32, 0.3);
        assert!(h.du.iter().zip(&s.du).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn leaf_breaking_map_rejected() {
        let r = FoliatedHomeo2D::from_fn(16, 0.0, "tilt", |p| [p[0], p[1] + 0.01 * (2.0 * PI * p[0]).sin()]);
        assert!(matches!(r, Err(LabError::NotFoliated(_))));
    }

    #[test]
    fn orientation_reversal_reported() {
        let r = FoliatedHomeo2D::product(16, |x| -x, |y| y, "flip");
        assert!(matches!(r, Err(LabError::OrientationMismatch(_))));
        let r = FoliatedHomeo2D::product(16, |x| x, |y| 1.0 - y, "flip");
        assert!(matches!(r, Err(LabError::OrientationMismatch(_))));
        let mut h = FoliatedHomeo2D::identity(8);
        h.dv = (0..8).map(|j| -2.0 * j as f64 / 8.0).collect();
        assert!(matches!(h.validate(), Err(LabError::NotIncreasing(_)) | Err(LabError::OrientationMismatch(_))));
    }

    #[test]
    fn angles() {
        let f = Foliation2D::horizontal();
        assert_eq!(f.angle_to([2.0, 0.0]), 0.0);
        assert!((f.angle_to([1.0, 1.0]) - PI / 4.0).abs() < 1e-15);
        assert!((Foliation2D::vertical().angle_to([1.0, 0.0]) - PI / 2.0).abs() < 1e-15);
    }
}
