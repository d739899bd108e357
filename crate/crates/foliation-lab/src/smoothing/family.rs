//! Families of increasing functions `v(x, y, .)` over the unit square.

use std::sync::Arc;

use serde::Serialize;

use super::monotone::{
    check_collar_data, smooth_increasing, smooth_increasing_relative, CollarData, MonotoneFunction,
    RelativeSmoothing, SmoothIncreasing, CHECK_FACTOR,
};
use crate::error::{LabError, Result};
use crate::numeric::smoothstep;

/// Samples of `v` on a uniform `nx x ny x nz` grid of `[0, 1]^3`, `z` fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledFamily {
    pub shape: [usize; 3],
    pub values: Vec<f64>,
}

pub(crate) fn unit_node(i: usize, n: usize) -> f64 {
    if i == n - 1 {
        1.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

impl SampledFamily {
    pub fn from_fn<F: Fn(f64, f64, f64) -> f64>(shape: [usize; 3], f: F) -> Result<Self> {
        if shape.iter().any(|&n| n < 2) {
            return Err(LabError::Precondition("family grid needs two samples per axis".into()));
        }
        let mut values = Vec::with_capacity(shape.iter().product());
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    values.push(f(unit_node(i, shape[0]), unit_node(j, shape[1]), unit_node(k, shape[2])));
                }
            }
        }
        let fam = SampledFamily { shape, values };
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                fam.column(i, j).map_err(|e| match e {
                    LabError::NotIncreasing(k) => LabError::NotIncreasing((i * shape[1] + j) * shape[2] + k),
                    e => e,
                })?;
            }
        }
        Ok(fam)
    }

    pub fn column(&self, i: usize, j: usize) -> Result<MonotoneFunction> {
        let nz = self.shape[2];
        let start = (i * self.shape[1] + j) * nz;
        MonotoneFunction::new(self.values[start..start + nz].to_vec())
    }

    pub fn x(&self, i: usize) -> f64 {
        unit_node(i, self.shape[0])
    }

    pub fn y(&self, j: usize) -> f64 {
        unit_node(j, self.shape[1])
    }
}

/// `(x, y, z) -> (value, dz value)`.
pub type FamilyFn = Arc<dyn Fn(f64, f64, f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
pub struct FamilyData {
    pub delta: f64,
    pub f: FamilyFn,
}

impl FamilyData {
    pub fn new<F: Fn(f64, f64, f64) -> (f64, f64) + Send + Sync + 'static>(delta: f64, f: F) -> Self {
        FamilyData { delta, f: Arc::new(f) }
    }
}

impl std::fmt::Debug for FamilyData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FamilyData").field("delta", &self.delta).finish()
    }
}

/// Which collar the output must match the boundary data on.
#[derive(Debug, Clone)]
pub enum FamilyCollar {
    /// No boundary data.
    Free,
    /// `N^1_delta x [0,1]^2`: near `x = 0, 1`.
    X(FamilyData),
    /// `N^2_delta x [0,1]`: near the sides of the `(x, y)` square.
    Xy(FamilyData),
    /// `N^3_delta`: near the whole boundary of the cube.
    Xyz(FamilyData),
}

impl FamilyCollar {
    pub fn variant(&self) -> usize {
        match self {
            FamilyCollar::Free => 1,
            FamilyCollar::X(_) => 2,
            FamilyCollar::Xy(_) => 3,
            FamilyCollar::Xyz(_) => 4,
        }
    }

    fn data(&self) -> Option<&FamilyData> {
        match self {
            FamilyCollar::Free => None,
            FamilyCollar::X(d) | FamilyCollar::Xy(d) | FamilyCollar::Xyz(d) => Some(d),
        }
    }

    /// `(x, y, z)` lies in the collar of width `w`.
    fn contains(&self, x: f64, y: f64, z: f64, w: f64) -> bool {
        let near = |s: f64| s < w || s > 1.0 - w;
        match self {
            FamilyCollar::Free => false,
            FamilyCollar::X(_) => near(x),
            FamilyCollar::Xy(_) => near(x) || near(y),
            FamilyCollar::Xyz(_) => near(x) || near(y) || near(z),
        }
    }

    fn closed_contains(&self, x: f64, y: f64, z: f64, w: f64) -> bool {
        let near = |s: f64| s <= w || s >= 1.0 - w;
        match self {
            FamilyCollar::Free => false,
            FamilyCollar::X(_) => near(x),
            FamilyCollar::Xy(_) => near(x) || near(y),
            FamilyCollar::Xyz(_) => near(x) || near(y) || near(z),
        }
    }
}

/// Quintic cutoff: 0 on `[0, delta] u [1 - delta, 1]`, 1 on `[2 delta, 1 - 2 delta]`.
pub fn collar_cutoff(s: f64, delta: f64) -> f64 {
    smoothstep((s - delta) / delta) * smoothstep((1.0 - delta - s) / delta)
}

#[derive(Debug, Clone)]
enum Column {
    Free(SmoothIncreasing),
    Relative(RelativeSmoothing),
}

impl Column {
    fn eval(&self, z: f64) -> (f64, f64) {
        match self {
            Column::Free(s) => s.eval(z),
            Column::Relative(s) => s.eval(z),
        }
    }
}

/// The smoothed family: column smoothings glued by a `C^2` partition of unity
/// in `(x, y)`, then blended with the boundary data.
#[derive(Debug, Clone)]
pub struct SmoothFamily {
    pub shape: [usize; 3],
    pub collar: FamilyCollar,
    columns: Vec<Column>,
}

fn weights(s: f64, n: usize) -> [(usize, f64); 2] {
    let t = s * (n - 1) as f64;
    let i = (t.floor().max(0.0) as usize).min(n - 2);
    let w = smoothstep(t - i as f64);
    [(i, 1.0 - w), (i + 1, w)]
}

impl SmoothFamily {
    fn inner(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let (mut v, mut d) = (0.0, 0.0);
        for (i, wx) in weights(x, self.shape[0]) {
            for (j, wy) in weights(y, self.shape[1]) {
                let w = wx * wy;
                if w != 0.0 {
                    let (a, b) = self.columns[i * self.shape[1] + j].eval(z);
                    v += w * a;
                    d += w * b;
                }
            }
        }
        (v, d)
    }

    /// Value and `z`-derivative.
    pub fn eval(&self, x: f64, y: f64, z: f64) -> (f64, f64) {
        let Some(data) = self.collar.data() else {
            return self.inner(x, y, z);
        };
        let dl = data.delta;
        let chi = match self.collar {
            FamilyCollar::X(_) => collar_cutoff(x, dl),
            _ => collar_cutoff(x, dl) * collar_cutoff(y, dl),
        };
        if chi == 0.0 || (matches!(self.collar, FamilyCollar::Xyz(_)) && (z <= dl || z >= 1.0 - dl)) {
            return (data.f)(x, y, z);
        }
        let (a, da) = (data.f)(x, y, z);
        let (b, db) = self.inner(x, y, z);
        ((1.0 - chi) * a + chi * b, (1.0 - chi) * da + chi * db)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub variant: usize,
    pub sup_distance: f64,
    pub bound: f64,
    pub min_dz: f64,
    pub collar_samples: usize,
    pub collar_mismatches: usize,
    pub pass: bool,
}

fn check_preconditions(v: &SampledFamily, collar: &FamilyCollar, eps: f64) -> Result<()> {
    let Some(data) = collar.data() else { return Ok(()) };
    let dl = data.delta;
    if !(dl > 0.0 && dl < 0.25) {
        return Err(LabError::Precondition(format!("collar width {dl} outside (0, 1/4)")));
    }
    let nz = v.shape[2];
    let nr = (nz - 1) * CHECK_FACTOR;
    for i in 0..v.shape[0] {
        for j in 0..v.shape[1] {
            let col = v.column(i, j)?;
            let (x, y) = (v.x(i), v.y(j));
            for k in 0..=nr {
                let z = unit_node(k, nr + 1);
                if !collar.contains(x, y, z, 2.0 * dl) {
                    continue;
                }
                let (val, dz) = (data.f)(x, y, z);
                if !(dz > 0.0) || !((val - col.eval(z)).abs() < eps) {
                    return Err(LabError::Precondition(format!(
                        "boundary data fails monotonicity or closeness at ({x}, {y}, {z})"
                    )));
                }
            }
            if let FamilyCollar::Xyz(_) = collar {
                let (a, b) = ((data.f)(x, y, dl).0, (data.f)(x, y, 1.0 - dl).0);
                if !(a < b) {
                    return Err(LabError::IncompatibleCollar(format!(
                        "v_d({x}, {y}, delta) = {a} >= v_d({x}, {y}, 1 - delta) = {b}"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Smooth `v` in `z` keeping `dz > 0`, matching boundary data on the
/// prescribed collar. Tolerance `eps` without data, `2 eps` with.
pub fn smooth_increasing_family(
    v: &SampledFamily,
    collar: FamilyCollar,
    eps: f64,
) -> Result<(SmoothFamily, FamilyReport)> {
    check_preconditions(v, &collar, eps)?;
    let mut columns = Vec::with_capacity(v.shape[0] * v.shape[1]);
    for i in 0..v.shape[0] {
        for j in 0..v.shape[1] {
            let col = v.column(i, j)?;
            let c = match &collar {
                FamilyCollar::Xyz(data) => {
                    let (x, y, f) = (v.x(i), v.y(j), data.f.clone());
                    let cd = CollarData::new(data.delta, move |z| f(x, y, z));
                    check_collar_data(&col, &cd, eps)?;
                    Column::Relative(smooth_increasing_relative(&col, &cd, eps)?.0)
                }
                _ => Column::Free(smooth_increasing(&col, eps)?),
            };
            columns.push(c);
        }
    }
    let fam = SmoothFamily { shape: v.shape, collar, columns };
    let bound = if matches!(fam.collar, FamilyCollar::Free) { eps } else { 2.0 * eps };
    let report = check_family(&fam, v, bound);
    if report.pass {
        Ok((fam, report))
    } else {
        Err(LabError::SmoothingFailed(format!("family postconditions failed: {report:?}")))
    }
}

/// Postconditions at the `(x, y)` samples and `z` refined by the check factor.
pub fn check_family(fam: &SmoothFamily, v: &SampledFamily, bound: f64) -> FamilyReport {
    let nz = v.shape[2];
    let nr = (nz - 1) * CHECK_FACTOR;
    let (mut sup, mut dmin) = (0.0f64, f64::INFINITY);
    let (mut samples, mut mismatches) = (0, 0);
    for i in 0..v.shape[0] {
        for j in 0..v.shape[1] {
            let col = v.column(i, j).expect("validated family");
            let (x, y) = (v.x(i), v.y(j));
            for k in 0..=nr {
                let z = unit_node(k, nr + 1);
                let (val, dz) = fam.eval(x, y, z);
                sup = sup.max((val - col.eval(z)).abs());
                dmin = dmin.min(dz);
            }
            if let Some(data) = fam.collar.data() {
                for k in 0..nz {
                    let z = unit_node(k, nz);
                    if fam.collar.closed_contains(x, y, z, data.delta) {
                        samples += 1;
                        if fam.eval(x, y, z).0 != (data.f)(x, y, z).0 {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    FamilyReport {
        variant: fam.collar.variant(),
        sup_distance: sup,
        bound,
        min_dz: dmin,
        collar_samples: samples,
        collar_mismatches: mismatches,
        pass: sup < bound && dmin > 0.0 && mismatches == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_family_reproduced() {
        let v = SampledFamily::from_fn([5, 5, 17], |_, _, z| z).unwrap();
        let (fam, rep) = smooth_increasing_family(&v, FamilyCollar::Free, 0.01).unwrap();
        assert!(rep.pass);
        let (val, dz) = fam.eval(0.37, 0.61, 0.4);
        assert!((val - 0.4).abs() < 1e-13 && (dz - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kinked_family() {
        let v = SampledFamily::from_fn([4, 4, 33], |_, _, z| z + 0.1 * (z - 0.5).abs()).unwrap();
        let (_, rep) = smooth_increasing_family(&v, FamilyCollar::Free, 0.02).unwrap();
        assert!(rep.pass && rep.sup_distance < 0.02 && rep.min_dz > 0.0);
    }

    #[test]
    fn full_collar_recovers_linear_data() {
        let v = SampledFamily::from_fn([6, 6, 21], |x, y, z| z + 0.01 * (x * y)).unwrap();
        let data = FamilyData::new(0.1, |_, _, z| (z, 1.0));
        let (fam, rep) = smooth_increasing_family(&v, FamilyCollar::Xyz(data), 0.02).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.collar_samples > 0 && rep.collar_mismatches == 0);
        assert_eq!(fam.eval(0.0, 0.5, 0.5).0, 0.5);
    }

    #[test]
    fn side_collars() {
        let v = SampledFamily::from_fn([6, 6, 21], |x, _, z| z * (1.0 + 0.05 * x)).unwrap();
        let f = |x: f64, _y: f64, z: f64| (z * (1.0 + 0.05 * x) + 0.002, 1.0 + 0.05 * x);
        for collar in [FamilyCollar::X(FamilyData::new(0.1, f)), FamilyCollar::Xy(FamilyData::new(0.1, f))] {
            let (_, rep) = smooth_increasing_family(&v, collar, 0.01).unwrap();
            assert!(rep.pass && rep.collar_mismatches == 0, "{rep:?}");
        }
    }

    #[test]
    fn incompatible_full_collar() {
        let v = SampledFamily::from_fn([4, 4, 21], |_, _, z| 0.01 * z).unwrap();
        let data = FamilyData::new(0.2, |_, _, z| (if z < 0.5 { 0.0099 } else { 0.0001 } + 1e-5 * z, 1e-5));
        assert!(matches!(
            smooth_increasing_family(&v, FamilyCollar::Xyz(data), 0.01),
            Err(LabError::IncompatibleCollar(_))
        ));
    }
}
