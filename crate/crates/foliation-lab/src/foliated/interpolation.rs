//! Graphical interpolation between two increasing profiles.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::numeric::{rng, Step};
use crate::smoothing::C1Fn;

/// Largest admissible width.
pub const MAX_WIDTH: f64 = 0.1;
/// Lower bound on the cutoff derivative.
pub const CUTOFF_SLOPE: f64 = 5.0;

/// Nonincreasing cutoff: 1 on `[0, 2w]`, 0 on `[1 - 2w, 1]`, quintic in between.
/// Its slope is at least `-1.875 / (1 - 4w) >= -3.125` for `w <= 0.1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoff {
    pub w: f64,
}

impl Cutoff {
    pub fn new(w: f64) -> Result<Self> {
        if !(w > 0.0 && w <= MAX_WIDTH) {
            return Err(LabError::Precondition(format!("width {w} outside (0, {MAX_WIDTH}]")));
        }
        Ok(Cutoff { w })
    }

    fn step(&self) -> Step {
        Step::new(2.0 * self.w, 1.0 - 2.0 * self.w)
    }

    pub fn value(&self, x: f64) -> f64 {
        1.0 - self.step().value(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        -self.step().deriv(x)
    }

    /// `sup |tau'|`.
    pub fn max_slope(&self) -> f64 {
        self.step().max_slope()
    }
}

/// `V(x, z) = tau(x) v0(z) + (1 - tau(x)) v1(z)`.
#[derive(Clone)]
pub struct GraphicalInterpolation {
    pub v0: C1Fn,
    pub v1: C1Fn,
    pub cutoff: Cutoff,
}

impl std::fmt::Debug for GraphicalInterpolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GraphicalInterpolation").field("cutoff", &self.cutoff).finish()
    }
}

impl GraphicalInterpolation {
    /// `(V, dV/dx, dV/dz)`.
    pub fn eval(&self, x: f64, z: f64) -> [f64; 3] {
        let t = self.cutoff.value(x);
        let (a, da) = (self.v0)(z);
        if t == 1.0 {
            return [a, 0.0, da];
        }
        let (b, db) = (self.v1)(z);
        if t == 0.0 {
            return [b, 0.0, db];
        }
        [t * a + (1.0 - t) * b, self.cutoff.deriv(x) * (a - b), t * da + (1.0 - t) * db]
    }
}

const PROFILE_SAMPLES: usize = 513;

/// Build the interpolation after checking both profiles increase on a dense
/// sample set.
pub fn graphical_interpolation(v0: C1Fn, v1: C1Fn, w: f64) -> Result<GraphicalInterpolation> {
    let cutoff = Cutoff::new(w)?;
    for f in [&v0, &v1] {
        for i in 0..PROFILE_SAMPLES {
            let z = i as f64 / (PROFILE_SAMPLES - 1) as f64;
            if !(f(z).1 > 0.0) {
                return Err(LabError::NotIncreasing(i));
            }
        }
    }
    Ok(GraphicalInterpolation { v0, v1, cutoff })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterpolationReport {
    pub grid: usize,
    pub gap: f64,
    pub max_dx: f64,
    pub bound: f64,
    pub min_dz: f64,
    /// `V` equals `v0` for `x <= 2w` and `v1` for `x >= 1 - 2w` at every sample.
    pub ends_exact: bool,
    pub pass: bool,
}

/// Measure `sup |dV/dx|` against `5 sup |v0 - v1|` on an `n x n` grid.
pub fn check_interpolation(gi: &GraphicalInterpolation, n: usize) -> InterpolationReport {
    let node = |i: usize| i as f64 / (n - 1) as f64;
    let mut gap = 0.0f64;
    for k in 0..n {
        gap = gap.max(((gi.v0)(node(k)).0 - (gi.v1)(node(k)).0).abs());
    }
    let (mut max_dx, mut min_dz, mut exact) = (0.0f64, f64::INFINITY, true);
    let w = gi.cutoff.w;
    for i in 0..n {
        let x = node(i);
        for k in 0..n {
            let z = node(k);
            let [v, vx, vz] = gi.eval(x, z);
            max_dx = max_dx.max(vx.abs());
            min_dz = min_dz.min(vz);
            if x <= 2.0 * w {
                exact &= v == (gi.v0)(z).0;
            } else if x >= 1.0 - 2.0 * w {
                exact &= v == (gi.v1)(z).0;
            }
        }
    }
    let bound = CUTOFF_SLOPE * gap;
    InterpolationReport {
        grid: n,
        gap,
        max_dx,
        bound,
        min_dz,
        ends_exact: exact,
        pass: max_dx <= bound && min_dz > 0.0 && exact,
    }
}

/// A seeded pair of increasing profiles `z + sum c_m sin(m pi z) / (m pi)`
/// agreeing at both ends, with `sum |c_m| < 0.9`.
pub fn random_profile_pair(seed: u64) -> (C1Fn, C1Fn) {
    let mut r = rng(seed);
    let mut draw = || -> [f64; 3] {
        let scale: f64 = r.gen_range(0.01..0.25);
        [r.gen_range(-scale..scale), r.gen_range(-scale..scale), r.gen_range(-scale..scale)]
    };
    let profile = |c: [f64; 3]| -> C1Fn {
        std::sync::Arc::new(move |z: f64| {
            let (mut v, mut d) = (z, 1.0);
            for (m, cm) in c.iter().enumerate() {
                let k = (m + 1) as f64 * PI;
                v += cm * (k * z).sin() / k;
                d += cm * (k * z).cos();
            }
            (v, d)
        })
    };
    (profile(draw()), profile(draw()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn lin(c: f64) -> C1Fn {
        Arc::new(move |z| (z + c, 1.0))
    }

    #[test]
    fn cutoff_shape() {
        let c = Cutoff::new(0.1).unwrap();
        assert_eq!(c.value(0.2), 1.0);
        assert_eq!(c.value(0.8), 0.0);
        assert!((c.max_slope() - 3.125).abs() < 1e-12);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            assert!(c.value(x) <= prev && c.deriv(x) >= -CUTOFF_SLOPE);
            prev = c.value(x);
        }
        assert!(Cutoff::new(0.2).is_err() && Cutoff::new(0.0).is_err());
    }

    #[test]
    fn equal_profiles_give_no_slope() {
        let gi = graphical_interpolation(lin(0.0), lin(0.0), 0.05).unwrap();
        let rep = check_interpolation(&gi, 65);
        assert!(rep.pass && rep.max_dx == 0.0);
        assert_eq!(gi.eval(0.5, 0.3), [0.3, 0.0, 1.0]);
    }

    #[test]
    fn offset_profiles() {
        let gi = graphical_interpolation(lin(0.0), lin(0.01), 0.1).unwrap();
        let rep = check_interpolation(&gi, 257);
        assert!(rep.pass && rep.max_dx <= 0.05);
        assert!((rep.min_dz - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_profile_on_dense_grid() {
        let theta = 0.2;
        let v1: C1Fn = Arc::new(move |z: f64| ((1.0 - theta) * z + theta * z * z, 1.0 - theta + 2.0 * theta * z));
        let gi = graphical_interpolation(lin(0.0), v1, 0.08).unwrap();
        let rep = check_interpolation(&gi, 512);
        assert!((rep.gap - theta / 4.0).abs() < 1e-5);
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn decreasing_profile_rejected() {
        let bad: C1Fn = Arc::new(|z: f64| (1.0 - z, -1.0));
        assert!(matches!(graphical_interpolation(lin(0.0), bad, 0.05), Err(LabError::NotIncreasing(0))));
    }

    #[test]
    fn seeded_pairs() {
        for seed in 0..20 {
            let (a, b) = random_profile_pair(seed);
            let gi = graphical_interpolation(a, b, 0.02 + 0.004 * seed as f64).unwrap();
            assert!(check_interpolation(&gi, 129).pass);
        }
    }
}
