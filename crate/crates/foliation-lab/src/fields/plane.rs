//! Plane fields given by defining 1-forms, their pointwise angles, and
//! transport by flows.

use std::sync::Arc;

use super::form::{FormField, DEGENERACY_TOL};
use super::grid::ModelManifold;
use crate::error::{LabError, Result};

/// A covector field that can be evaluated anywhere in the chart.
pub trait CovectorField: Send + Sync {
    fn covector(&self, p: &[f64]) -> Vec<f64>;
}

/// Closure adapter for [`CovectorField`].
pub struct FnCovector<F>(pub F);

impl<F> CovectorField for FnCovector<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn covector(&self, p: &[f64]) -> Vec<f64> {
        (self.0)(p)
    }
}

/// Cooriented plane field `ker(alpha)` on a 3-dimensional grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    pub defining: FormField,
    /// `+1` if cooriented by `alpha`, `-1` if by `-alpha`.
    pub coorientation: f64,
}

impl PlaneField {
    pub fn new(defining: FormField) -> Result<Self> {
        if defining.degree != 1 {
            return Err(LabError::GridMismatch("plane field needs a 1-form".into()));
        }
        let pf = PlaneField { defining, coorientation: 1.0 };
        pf.check_nondegenerate()?;
        Ok(pf)
    }

    pub fn sample(manifold: Arc<ModelManifold>, field: &dyn CovectorField) -> Result<Self> {
        Self::new(FormField::from_fn(manifold, 1, |c| field.covector(c)))
    }

    pub fn manifold(&self) -> &Arc<ModelManifold> {
        &self.defining.manifold
    }

    /// Unit normal covector in the model metric at sample `p`.
    pub fn unit_normal(&self, p: usize) -> Result<Vec<f64>> {
        let m = self.manifold();
        let scale = m.coframe_scale(&m.coords(p));
        let v: Vec<f64> = self.defining.comps.iter().zip(&scale).map(|(c, s)| c[p] * s).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= DEGENERACY_TOL {
            return Err(LabError::Degenerate { index: p, norm });
        }
        Ok(v.iter().map(|x| self.coorientation * x / norm).collect())
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        for p in 0..self.manifold().len() {
            self.unit_normal(p)?;
        }
        Ok(())
    }
}

/// Angle between two unit covectors, as unoriented lines: the principal
/// angle between the planes they define. Stable near 0 and symmetric.
pub fn covector_angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let s = if dot < 0.0 { -1.0 } else { 1.0 };
    let mut dm = 0.0;
    let mut dp = 0.0;
    for (a, b) in u.iter().zip(v) {
        let (x, y) = (*a, s * b);
        dm += (x - y) * (x - y);
        dp += (x + y) * (x + y);
    }
    2.0 * dm.sqrt().atan2(dp.sqrt())
}

/// Pointwise principal angle between `P` and `Q` in radians, as a 0-form.
pub fn plane_field_angle(p: &PlaneField, q: &PlaneField) -> Result<FormField> {
    if p.manifold() != q.manifold() {
        return Err(LabError::GridMismatch("plane fields on different grids".into()));
    }
    let m = p.manifold().clone();
    let mut out = FormField::zeros(m.clone(), 0);
    for i in 0..m.len() {
        let u = p.unit_normal(i)?;
        let v = q.unit_normal(i)?;
        out.comps[0][i] = covector_angle(&u, &v);
    }
    Ok(out)
}

/// A flow whose inverse-time pullback of covector fields is available.
pub trait Flow: Send + Sync {
    /// `((phi_{-t})^* alpha)(p)`: the defining covector of the pushforward
    /// `(phi_t)_* ker(alpha)` at `p`.
    fn pullback_inverse(&self, field: &dyn CovectorField, p: &[f64], t: f64) -> Vec<f64>;
}

/// The covector field defining `(phi_t)_* P`.
pub struct Pushforward {
    pub flow: Arc<dyn Flow>,
    pub field: Arc<dyn CovectorField>,
    pub time: f64,
}

impl CovectorField for Pushforward {
    fn covector(&self, p: &[f64]) -> Vec<f64> {
        self.flow.pullback_inverse(self.field.as_ref(), p, self.time)
    }
}

/// Analytic pushforward of a plane field by the time-`t` map of `flow`.
pub fn flow_pushforward(flow: Arc<dyn Flow>, field: Arc<dyn CovectorField>, t: f64) -> Arc<dyn CovectorField> {
    Arc::new(Pushforward { flow, field, time: t })
}

/// Sampled pushforward `(phi_t)_* P` on `manifold`.
pub fn flow_pushforward_plane(
    flow: Arc<dyn Flow>,
    field: Arc<dyn CovectorField>,
    t: f64,
    manifold: Arc<ModelManifold>,
) -> Result<PlaneField> {
    let pf = flow_pushforward(flow, field, t);
    PlaneField::sample(manifold, pf.as_ref())
}

/// Constant-velocity flow on a periodic box, `phi_t(p) = p + t v`.
pub struct TranslationFlow {
    pub velocity: Vec<f64>,
    pub periods: Vec<f64>,
}

impl Flow for TranslationFlow {
    fn pullback_inverse(&self, field: &dyn CovectorField, p: &[f64], t: f64) -> Vec<f64> {
        let q: Vec<f64> = p
            .iter()
            .zip(&self.velocity)
            .zip(&self.periods)
            .map(|((x, v), l)| (x - t * v).rem_euclid(*l))
            .collect();
        field.covector(&q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus() -> Arc<ModelManifold> {
        Arc::new(ModelManifold::torus3(8).unwrap())
    }

    #[test]
    fn angle_to_self_is_zero() {
        let m = torus();
        let p = PlaneField::sample(m, &FnCovector(|c: &[f64]| vec![c[1].sin(), 0.2, 1.0])).unwrap();
        let a = plane_field_angle(&p, &p).unwrap();
        assert!(a.max_abs() == 0.0);
    }

    #[test]
    fn constant_slope_angle() {
        let m = torus();
        let s = 0.7;
        let h = PlaneField::sample(m.clone(), &FnCovector(|_: &[f64]| vec![0.0, 0.0, 1.0])).unwrap();
        let q = PlaneField::sample(m, &FnCovector(move |_: &[f64]| vec![-s, 0.0, 1.0])).unwrap();
        let a = plane_field_angle(&h, &q).unwrap();
        for v in &a.comps[0] {
            assert!((v - s.atan()).abs() < 1e-14);
        }
    }

    #[test]
    fn degenerate_plane_rejected() {
        let m = torus();
        assert!(PlaneField::sample(m, &FnCovector(|_: &[f64]| vec![0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn translation_semigroup() {
        let m = torus();
        let flow: Arc<dyn Flow> =
            Arc::new(TranslationFlow { velocity: vec![0.3, 0.1, 0.0], periods: vec![1.0; 3] });
        let tau = 2.0 * std::f64::consts::PI;
        let field: Arc<dyn CovectorField> =
            Arc::new(FnCovector(move |c: &[f64]| vec![(tau * c[0]).sin(), 1.0, (tau * c[1]).cos()]));
        let a = flow_pushforward(flow.clone(), flow_pushforward(flow.clone(), field.clone(), 0.4), 0.7);
        let b = flow_pushforward(flow, field, 1.1);
        let pa = PlaneField::sample(m.clone(), a.as_ref()).unwrap();
        let pb = PlaneField::sample(m, b.as_ref()).unwrap();
        assert!(plane_field_angle(&pa, &pb).unwrap().max_abs() < 1e-6);
    }
}
