//! Pre-Liouville certification on thickenings `[a, b] x M`, the linear
//! thickening construction, boundary straightening in collar normal form and
//! path certification.

mod straighten;
mod thicken;

pub use straighten::{
    straighten_boundary, CollarGamma, CollarModel, CollarSpec, StageReport, StraighteningCutoffs,
    StraighteningReport, StraighteningStages, StationSummary, COLLAR_TOL, INTERMEDIATE_STATIONS,
};
pub use thicken::{thickening_construction, ThickeningReport};

use std::sync::Arc;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{FormField, ModelManifold, PlaneField};

/// A plane field prescribed on one end slice of the thickening.
#[derive(Debug, Clone)]
pub struct BoundaryCondition {
    pub label: String,
    /// Index along the thickening axis.
    pub slice: usize,
    pub plane: PlaneField,
    /// `+1` if the boundary orientation is that of `M`, `-1` if reversed.
    pub orientation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub label: String,
    /// `min orientation * (a ^ d lambda|_M) / vol` with `a` metric-unit.
    pub min_pairing: f64,
    pub first_violation: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreLiouvilleReport {
    /// `min (d lambda ^ d lambda) / vol`.
    pub min_symplectic: f64,
    pub first_symplectic_violation: Option<usize>,
    pub boundaries: Vec<BoundaryReport>,
    pub pass: bool,
}

/// A 1-form on the thickening together with its boundary plane fields and
/// the evaluation of the pre-Liouville inequalities.
#[derive(Debug, Clone)]
pub struct PreLiouvilleState {
    pub lambda: FormField,
    pub boundaries: Vec<BoundaryCondition>,
    pub report: PreLiouvilleReport,
}

fn unit_scale(plane: &PlaneField, p: usize) -> f64 {
    let m = plane.manifold();
    let s = m.coframe_scale(&m.coords(p));
    plane.defining.comps.iter().zip(&s).map(|(c, k)| (c[p] * k).powi(2)).sum::<f64>().sqrt()
}

/// Evaluate symplecticity of `d lambda` and domination of each boundary plane.
pub fn evaluate_preliouville(lambda: &FormField, boundaries: &[BoundaryCondition]) -> Result<PreLiouvilleReport> {
    if lambda.degree != 1 {
        return Err(LabError::GridMismatch("pre-Liouville form must be a 1-form".into()));
    }
    evaluate_with_differential(&lambda.exterior_derivative()?, boundaries)
}

/// As [`evaluate_preliouville`], with `d lambda` supplied by the caller.
pub fn evaluate_with_differential(dl: &FormField, boundaries: &[BoundaryCondition]) -> Result<PreLiouvilleReport> {
    if dl.degree != 2 {
        return Err(LabError::GridMismatch("differential must be a 2-form".into()));
    }
    let inner = dl.manifold.boundary_factor()?;
    let sym = dl.wedge(&dl)?;
    let top = sym.top_coefficient()?;
    let mut min_symplectic = f64::INFINITY;
    let mut first_symplectic_violation = None;
    for (p, &v) in top.iter().enumerate() {
        min_symplectic = min_symplectic.min(v);
        if !(v > 0.0) && first_symplectic_violation.is_none() {
            first_symplectic_violation = Some(p);
        }
    }
    let mut reports = Vec::with_capacity(boundaries.len());
    for b in boundaries {
        if **b.plane.manifold() != inner {
            return Err(LabError::GridMismatch(format!("boundary plane {} on a different grid", b.label)));
        }
        let slice = dl.restrict_boundary(b.slice)?;
        let w = b.plane.defining.wedge(&slice)?;
        let c = w.top_coefficient()?;
        let mut min_pairing = f64::INFINITY;
        let mut first_violation = None;
        for (p, &v) in c.iter().enumerate() {
            let val = b.orientation * b.plane.coorientation * v / unit_scale(&b.plane, p);
            min_pairing = min_pairing.min(val);
            if !(val > 0.0) && first_violation.is_none() {
                first_violation = Some(p);
            }
        }
        reports.push(BoundaryReport { label: b.label.clone(), min_pairing, first_violation });
    }
    let pass = first_symplectic_violation.is_none() && reports.iter().all(|r| r.first_violation.is_none());
    Ok(PreLiouvilleReport { min_symplectic, first_symplectic_violation, boundaries: reports, pass })
}

/// Standard boundary conditions on `[-1, 1] x M`: `xi_-` on the bottom
/// slice with reversed orientation, `xi_+` on the top slice.
pub fn end_conditions(thick: &ModelManifold, xi_minus: PlaneField, xi_plus: PlaneField) -> Vec<BoundaryCondition> {
    let n = thick.axes[0].n;
    vec![
        BoundaryCondition { label: "minus".into(), slice: 0, plane: xi_minus, orientation: -1.0 },
        BoundaryCondition { label: "plus".into(), slice: n - 1, plane: xi_plus, orientation: 1.0 },
    ]
}

pub fn check_preliouville(lambda: FormField, xi_minus: PlaneField, xi_plus: PlaneField) -> Result<PreLiouvilleState> {
    let boundaries = end_conditions(&lambda.manifold, xi_minus, xi_plus);
    let report = evaluate_preliouville(&lambda, &boundaries)?;
    Ok(PreLiouvilleState { lambda, boundaries, report })
}

/// One station of a path of pre-Liouville structures.
#[derive(Debug, Clone)]
pub struct Station {
    pub label: String,
    pub lambda: FormField,
    pub boundaries: Vec<BoundaryCondition>,
    /// Endpoint stations must also restrict to contact forms for the boundary planes.
    pub liouville_endpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleBoundaryReport {
    pub label: String,
    /// `max angle(ker lambda|_slice, xi)`.
    pub max_kernel_angle: f64,
    /// `min orientation * (lambda ^ d lambda)|_slice / vol`.
    pub min_contact: f64,
    /// `lambda|_slice` and the defining form of `xi` induce the same coorientation.
    pub cooriented: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationReport {
    pub label: String,
    pub preliouville: PreLiouvilleReport,
    pub liouville: Vec<LiouvilleBoundaryReport>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathReport {
    pub stations: Vec<StationReport>,
    pub flagged: Vec<String>,
    pub pass: bool,
}

pub const KERNEL_ANGLE_TOL: f64 = 1e-6;

/// Restriction of `lambda` to a boundary slice is a contact form for the plane there.
pub fn liouville_boundary_check(lambda: &FormField, b: &BoundaryCondition) -> Result<LiouvilleBoundaryReport> {
    let restricted = lambda.restrict_boundary(b.slice)?;
    let dr = restricted.exterior_derivative()?;
    let contact = restricted.wedge(&dr)?;
    let min_contact = contact
        .top_coefficient()?
        .iter()
        .map(|v| b.orientation * v)
        .fold(f64::INFINITY, f64::min);
    let kernel = PlaneField { defining: restricted.clone(), coorientation: b.plane.coorientation };
    let max_kernel_angle = match crate::fields::plane_field_angle(&kernel, &b.plane) {
        Ok(a) => a.max_abs(),
        Err(_) => f64::INFINITY,
    };
    let mut cooriented = true;
    for p in 0..restricted.manifold.len() {
        let dot: f64 = restricted.at(p).iter().zip(b.plane.defining.at(p)).map(|(x, y)| x * y).sum();
        if !(dot > 0.0) {
            cooriented = false;
            break;
        }
    }
    let pass = max_kernel_angle <= KERNEL_ANGLE_TOL && min_contact > 0.0 && cooriented;
    Ok(LiouvilleBoundaryReport { label: b.label.clone(), max_kernel_angle, min_contact, cooriented, pass })
}

/// Certify the hypotheses of the deformation statement along a sampled path:
/// every station pre-Liouville, endpoint stations Liouville at the boundary.
pub fn check_preliouville_path(path: &[Station]) -> Result<PathReport> {
    if path.len() < 2 {
        return Err(LabError::Precondition("a path needs at least two stations".into()));
    }
    let mut stations = Vec::with_capacity(path.len());
    for st in path {
        let preliouville = evaluate_preliouville(&st.lambda, &st.boundaries)?;
        let mut liouville = Vec::new();
        if st.liouville_endpoint {
            for b in &st.boundaries {
                liouville.push(liouville_boundary_check(&st.lambda, b)?);
            }
        }
        let pass = preliouville.pass && liouville.iter().all(|l| l.pass);
        stations.push(StationReport { label: st.label.clone(), preliouville, liouville, pass });
    }
    let flagged: Vec<String> = stations.iter().filter(|s| !s.pass).map(|s| s.label.clone()).collect();
    Ok(PathReport { pass: flagged.is_empty(), stations, flagged })
}

/// Stations along the straight segment between two forms with matching
/// boundary conditions `boundaries(s)`; the ends are flagged as Liouville.
pub fn linear_path<F>(a: &FormField, b: &FormField, k: usize, boundaries: F) -> Result<Vec<Station>>
where
    F: Fn(f64) -> Result<Vec<BoundaryCondition>>,
{
    if k < 2 {
        return Err(LabError::Precondition("a path needs at least two stations".into()));
    }
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let s = i as f64 / (k - 1) as f64;
        let lambda = a.scale(1.0 - s).add(&b.scale(s))?;
        out.push(Station {
            label: format!("s={s:.4}"),
            lambda,
            boundaries: boundaries(s)?,
            liouville_endpoint: i == 0 || i == k - 1,
        });
    }
    Ok(out)
}

/// The thickening manifold of `m` used by the Liouville checks.
pub fn thicken(m: &Arc<ModelManifold>, n_tau: usize) -> Result<Arc<ModelManifold>> {
    Ok(Arc::new(m.thickened(n_tau)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosov::{defining_pair, liouville_form, mitsumatsu_forms, SuspensionAnosov};
    use crate::fields::coframe;

    fn cat_pair(n: usize) -> crate::anosov::DefiningPair {
        let f = SuspensionAnosov::new([[2, 1], [1, 1]], n, n).unwrap();
        defining_pair(&f).unwrap().0
    }

    fn planes(pair: &crate::anosov::DefiningPair, delta: f64) -> (PlaneField, PlaneField) {
        let (am, ap) = mitsumatsu_forms(pair, delta).unwrap();
        (PlaneField::new(am).unwrap(), PlaneField::new(ap).unwrap())
    }

    #[test]
    fn liouville_pair_is_preliouville() {
        let pair = cat_pair(16);
        let thick = thicken(&pair.alpha_s.manifold, 9).unwrap();
        let lambda = liouville_form(&pair, 0.05, thick).unwrap();
        let (xm, xp) = planes(&pair, 0.05);
        let st = check_preliouville(lambda, xm, xp).unwrap();
        assert!(st.report.pass, "{:?}", st.report);
        let expected = 8.0 * 0.05 * pair.log_lambda;
        assert!((st.report.min_symplectic - expected).abs() < 1e-5 * expected);
    }

    #[test]
    fn rank_deficient_form_fails() {
        let m = Arc::new(ModelManifold::torus3(8).unwrap());
        let thick = thicken(&m, 9).unwrap();
        let tau = FormField::scalar_from_fn(thick.clone(), |c| c[0]);
        let lambda = coframe(thick, 1).mul_scalar(&tau).unwrap();
        let xi = PlaneField::new(coframe(m, 2)).unwrap();
        let st = check_preliouville(lambda, xi.clone(), xi).unwrap();
        assert!(!st.report.pass);
        assert!(st.report.first_symplectic_violation.is_some());
    }

    #[test]
    fn swapped_plus_plane_is_not_dominated() {
        let pair = cat_pair(16);
        let thick = thicken(&pair.alpha_s.manifold, 9).unwrap();
        let lambda = liouville_form(&pair, 0.05, thick).unwrap();
        let (xm, _) = planes(&pair, 0.05);
        let st = check_preliouville(lambda, xm.clone(), xm).unwrap();
        let plus = &st.report.boundaries[1];
        assert!(plus.first_violation.is_some());
        // exact value is 2 delta (beta ^ d alpha - alpha ^ d beta) = 0 on this model
        assert!(plus.min_pairing.abs() < 1e-6);
        assert!(!st.report.pass);
    }

    #[test]
    fn scaling_preserves_verdict() {
        let pair = cat_pair(16);
        let thick = thicken(&pair.alpha_s.manifold, 9).unwrap();
        let lambda = liouville_form(&pair, 0.05, thick).unwrap();
        let (xm, xp) = planes(&pair, 0.05);
        let a = check_preliouville(lambda.clone(), xm.clone(), xp.clone()).unwrap().report;
        let b = check_preliouville(lambda.scale(3.0), xm, xp).unwrap().report;
        assert_eq!(a.pass, b.pass);
        assert!((b.min_symplectic - 9.0 * a.min_symplectic).abs() < 1e-9 * b.min_symplectic);
    }

    #[test]
    fn path_between_liouville_pairs() {
        let pair = cat_pair(16);
        let thick = thicken(&pair.alpha_s.manifold, 9).unwrap();
        let a = liouville_form(&pair, 0.05, thick.clone()).unwrap();
        let b = liouville_form(&pair, 0.08, thick.clone()).unwrap();
        let bc = |s: f64| {
            let (xm, xp) = planes(&pair, 0.05 + 0.03 * s);
            Ok(end_conditions(&thick, xm, xp))
        };
        let path = linear_path(&a, &b, 5, bc).unwrap();
        let rep = check_preliouville_path(&path).unwrap();
        assert!(rep.pass, "{:?}", rep.flagged);

        let mut bad = path.clone();
        let (_, beta) = crate::anosov::alpha_beta(&pair);
        bad[2].lambda = beta.lift(thick.clone()).unwrap().scale(0.1);
        let rep = check_preliouville_path(&bad).unwrap();
        assert_eq!(rep.flagged, vec![bad[2].label.clone()]);

        let mut perm = path.clone();
        perm.swap(1, 3);
        let rep2 = check_preliouville_path(&perm).unwrap();
        let mut v1: Vec<_> = check_preliouville_path(&path).unwrap().stations.iter().map(|s| (s.label.clone(), s.pass)).collect();
        let mut v2: Vec<_> = rep2.stations.iter().map(|s| (s.label.clone(), s.pass)).collect();
        v1.sort_by(|x, y| x.0.cmp(&y.0));
        v2.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(v1, v2);
    }
}
