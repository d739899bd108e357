//! Contact-condition certification and the local models used around closed
//! leafwise orbits: standard neighbourhood forms, ribbon holonomy, pull-down
//! profiles and parallel transport on the thickened annulus.

mod pulldown;
mod ribbon;
mod transport;

pub use pulldown::{
    bump, pulldown_profile, BumpFamily, FamilyHomotopy, HomotopyReport, IntervalFamily, LinearWindow,
    PulldownProfile, PulldownReport, PulldownSpec, RegionMargin, WindowSlope, HOMOTOPY_SATURATION,
};
pub use ribbon::{
    annulus_holonomy, holonomy_closed_form, holonomy_ode, random_coefficients, ribbon_holonomy, AnnulusModel,
    AnnulusReport, CoefficientPath, ConstantCoefficients, FourierCoefficients, HolonomyComparison,
    HolonomySeries, RibbonState, HOLONOMY_TOL, RIBBON_SAMPLES, RIBBON_SUBSTEPS,
};
pub use transport::{parallel_transport, ParallelTransport, TransportSpec};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::deriv::partial;
use crate::fields::{Axis, FormField, ManifoldKind, ModelManifold, DEGENERACY_TOL};

/// Values of `|alpha ^ d alpha| / vol` at or below this count as zero.
pub const CONTACT_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContactSign {
    /// Pointwise sign of `alpha ^ d alpha` against the grid orientation.
    pub sign: Vec<i8>,
    pub min_abs: f64,
    pub min: f64,
    pub max: f64,
}

impl ContactSign {
    pub fn is_positive(&self) -> bool {
        self.sign.iter().all(|&s| s == 1)
    }
    pub fn is_negative(&self) -> bool {
        self.sign.iter().all(|&s| s == -1)
    }
}

/// Sign of `alpha ^ d alpha` relative to the metric volume at every sample.
pub fn contact_sign(alpha: &FormField) -> Result<ContactSign> {
    let m = alpha.manifold.clone();
    if alpha.degree != 1 || m.dim() != 3 {
        return Err(LabError::GridMismatch("contact sign needs a 1-form on a 3-dimensional grid".into()));
    }
    for p in 0..m.len() {
        let norm = alpha.at(p).iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= DEGENERACY_TOL {
            return Err(LabError::Degenerate { index: p, norm });
        }
    }
    let w = alpha.wedge(&alpha.exterior_derivative()?)?;
    let top = w.top_coefficient()?;
    let mut sign = Vec::with_capacity(m.len());
    let (mut min_abs, mut min, mut max) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (p, &v) in top.iter().enumerate() {
        // coframe components are already metric-normalised up to the scale product
        let vol: f64 = m.coframe_scale(&m.coords(p)).iter().product();
        let v = v / vol;
        sign.push(if v > CONTACT_ZERO_TOL {
            1
        } else if v < -CONTACT_ZERO_TOL {
            -1
        } else {
            0
        });
        min_abs = min_abs.min(v.abs());
        min = min.min(v);
        max = max.max(v);
    }
    Ok(ContactSign { sign, min_abs, min, max })
}

/// `N = S^1_theta x [-1, 1]_y x [-1, 1]_z`. `n_z` must be odd so `z = 0` is a sample.
pub fn thickened_annulus(n_theta: usize, n_y: usize, n_z: usize) -> Result<ModelManifold> {
    if n_z % 2 == 0 {
        return Err(LabError::Precondition("z grid must contain z = 0 (odd n_z)".into()));
    }
    ModelManifold::product(
        ManifoldKind::Custom,
        vec![
            Axis::periodic("theta", 0.0, 2.0 * std::f64::consts::PI, n_theta),
            Axis::interval("y", -1.0, 1.0, n_y),
            Axis::interval("z", -1.0, 1.0, n_z),
        ],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub name: String,
    pub pass: bool,
    pub min_margin: f64,
    pub violations: usize,
    pub first_violation: Option<Vec<f64>>,
}

impl ConditionCheck {
    pub(crate) fn new(name: &str) -> Self {
        ConditionCheck { name: name.into(), pass: true, min_margin: f64::INFINITY, violations: 0, first_violation: None }
    }
    pub(crate) fn record(&mut self, margin: f64, ok: bool, coords: impl FnOnce() -> Vec<f64>) {
        self.min_margin = self.min_margin.min(margin);
        if !ok {
            self.violations += 1;
            self.pass = false;
            if self.first_violation.is_none() {
                self.first_violation = Some(coords());
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StandardFormReport {
    pub conditions: Vec<ConditionCheck>,
    /// `max |u(theta, 1, 0)|`.
    pub orbit_level_defect: f64,
    pub pass: bool,
}

/// `alpha_0 = dz - u dtheta` on the thickened annulus.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub u: FormField,
}

/// Tolerance for `u(theta, 1, 0) = 0`.
pub const ORBIT_LEVEL_TOL: f64 = 1e-10;

impl StandardForm {
    pub fn new(u: FormField) -> std::result::Result<Self, StandardFormReport> {
        let report = standard_form_check(&u).map_err(|e| StandardFormReport {
            conditions: vec![ConditionCheck {
                name: format!("domain: {e}"),
                pass: false,
                min_margin: f64::NAN,
                violations: 1,
                first_violation: None,
            }],
            orbit_level_defect: f64::NAN,
            pass: false,
        })?;
        if report.pass {
            Ok(StandardForm { u })
        } else {
            Err(report)
        }
    }

    pub fn alpha(&self) -> FormField {
        let mut a = FormField::zeros(self.u.manifold.clone(), 1);
        a.comps[0] = self.u.comps[0].iter().map(|v| -v).collect();
        a.comps[2] = vec![1.0; self.u.manifold.len()];
        a
    }
}

fn check_domain(m: &ModelManifold) -> Result<()> {
    let ok = m.dim() == 3
        && matches!(m.axes[0].kind, crate::fields::AxisKind::Periodic)
        && m.axes[1..].iter().all(|a| {
            matches!(a.kind, crate::fields::AxisKind::Interval) && a.lo == -1.0 && a.hi == 1.0
        })
        && m.axes[2].n % 2 == 1;
    if ok {
        Ok(())
    } else {
        Err(LabError::Precondition("u must be sampled on S^1 x [-1,1] x [-1,1] with z = 0 a sample".into()))
    }
}

/// Evaluate the standard-neighbourhood conditions on a sampled `u`.
pub fn standard_form_check(u: &FormField) -> Result<StandardFormReport> {
    let m = u.manifold.clone();
    check_domain(&m)?;
    if u.degree != 0 {
        return Err(LabError::GridMismatch("u must be a function".into()));
    }
    let vals = &u.comps[0];
    let uy = partial(&m, 1, vals);
    let uz = partial(&m, 2, vals);
    let (ny, nz) = (m.axes[1].n, m.axes[2].n);
    let mut contact = ConditionCheck::new("dy u > 0");
    let mut collar = ConditionCheck::new("-+u(theta, y, +-1) > 0");
    let mut orbit = ConditionCheck::new("u(theta, 1, 0) = 0 and dz u(theta, 1, z) < 0");
    let mut orbit_level_defect: f64 = 0.0;
    for p in 0..m.len() {
        let mi = m.multi_index(p);
        let coords = || m.coords(p);
        contact.record(uy[p], uy[p] > 0.0, coords);
        if mi[2] == 0 {
            collar.record(vals[p], vals[p] > 0.0, coords);
        }
        if mi[2] == nz - 1 {
            collar.record(-vals[p], -vals[p] > 0.0, coords);
        }
        if mi[1] == ny - 1 {
            orbit.record(-uz[p], uz[p] < 0.0, coords);
            if mi[2] == nz / 2 {
                orbit_level_defect = orbit_level_defect.max(vals[p].abs());
                orbit.record(-uz[p], vals[p].abs() <= ORBIT_LEVEL_TOL, coords);
            }
        }
    }
    let conditions = vec![contact, collar, orbit];
    let pass = conditions.iter().all(|c| c.pass);
    Ok(StandardFormReport { conditions, orbit_level_defect, pass })
}

/// Sample `u` on a thickened annulus grid.
pub fn sample_u<F: Fn(f64, f64, f64) -> f64>(m: Arc<ModelManifold>, u: F) -> FormField {
    FormField::scalar_from_fn(m, |c| u(c[0], c[1], c[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube() -> Arc<ModelManifold> {
        Arc::new(ModelManifold::cube(12).unwrap())
    }

    #[test]
    fn foliation_has_zero_sign() {
        let a = FormField::from_fn(cube(), 1, |_| vec![0.0, 0.0, 1.0]);
        let s = contact_sign(&a).unwrap();
        assert!(s.sign.iter().all(|&x| x == 0));
        assert_eq!(s.min_abs, 0.0);
    }

    #[test]
    fn positive_and_negative_models() {
        let pos = FormField::from_fn(cube(), 1, |c| vec![0.0, c[0], 1.0]);
        let s = contact_sign(&pos).unwrap();
        assert!(s.is_positive());
        assert!((s.min - 1.0).abs() < 1e-10 && (s.max - 1.0).abs() < 1e-10);
        let neg = FormField::from_fn(cube(), 1, |c| vec![0.0, -c[0], 1.0]);
        assert!(contact_sign(&neg).unwrap().is_negative());
    }

    #[test]
    fn vanishing_form_rejected() {
        let a = FormField::from_fn(cube(), 1, |c| vec![c[0], 0.0, 0.0]);
        assert!(matches!(contact_sign(&a), Err(LabError::Degenerate { .. })));
    }

    fn grid() -> Arc<ModelManifold> {
        Arc::new(thickened_annulus(8, 9, 9).unwrap())
    }

    #[test]
    fn standard_model_passes_and_is_positive() {
        let u = sample_u(grid(), |th, y, z| -z + 0.1 * (y - 1.0) + 0.05 * th.sin() * (y - 1.0));
        let rep = standard_form_check(&u).unwrap();
        assert!(rep.pass, "{rep:?}");
        let form = StandardForm::new(u).unwrap();
        let s = contact_sign(&form.alpha()).unwrap();
        assert!(s.is_positive());
    }

    #[test]
    fn linear_holonomy_model_reports_corners() {
        let u = sample_u(grid(), |_, y, z| y - z);
        let rep = standard_form_check(&u).unwrap();
        assert!(rep.conditions[0].pass);
        let collar = &rep.conditions[1];
        assert!(!collar.pass);
        let c = collar.first_violation.as_ref().unwrap();
        assert!((c[1].abs() - 1.0).abs() < 1e-12 && (c[2].abs() - 1.0).abs() < 1e-12);
        // exactly the two corner rows y = -+1, z = -+1
        assert_eq!(collar.violations, 2 * 8);
        assert!(!rep.conditions[2].pass);
    }

    #[test]
    fn orbit_level_condition() {
        let u = sample_u(grid(), |_, y, z| -z + 0.5 * y);
        let rep = standard_form_check(&u).unwrap();
        assert!(!rep.conditions[2].pass);
        assert!((rep.orbit_level_defect - 0.5).abs() < 1e-12);
    }

    #[test]
    fn y_independent_fails_everywhere() {
        let m = grid();
        let u = sample_u(m.clone(), |_, _, z| -z);
        let rep = standard_form_check(&u).unwrap();
        assert_eq!(rep.conditions[0].violations, m.len());
        assert!(StandardForm::new(u).is_err());
    }

    #[test]
    fn even_z_grid_rejected() {
        assert!(thickened_annulus(8, 9, 8).is_err());
    }
}
