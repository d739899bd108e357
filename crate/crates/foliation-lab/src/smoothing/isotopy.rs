//! Isotopies from the identity to embeddings close to it.

use std::sync::Arc;

use serde::Serialize;

use super::embedding::{certify_embedding, sup_distance, Identity, PlanarMap, Point, SplineMap};
use crate::error::{LabError, Result};
use crate::numeric::smoothstep;

/// Concatenation of straight-line legs between planar maps, each leg
/// reparametrised by the quintic step so the path is `C^2` in `t`.
#[derive(Clone)]
pub struct Isotopy {
    pub nodes: Vec<Arc<dyn PlanarMap>>,
}

impl Isotopy {
    pub fn legs(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn eval(&self, t: f64, p: Point) -> Point {
        let l = self.legs();
        let x = t.clamp(0.0, 1.0) * l as f64;
        let k = (x.floor() as usize).min(l - 1);
        let w = smoothstep(x - k as f64);
        if w == 0.0 {
            return self.nodes[k].eval(p);
        }
        if w == 1.0 {
            return self.nodes[k + 1].eval(p);
        }
        let (a, b) = (self.nodes[k].eval(p), self.nodes[k + 1].eval(p));
        [(1.0 - w) * a[0] + w * b[0], (1.0 - w) * a[1] + w * b[1]]
    }

    pub fn at(&self, t: f64) -> IsotopySlice<'_> {
        IsotopySlice { iso: self, t }
    }
}

pub struct IsotopySlice<'a> {
    iso: &'a Isotopy,
    t: f64,
}

impl PlanarMap for IsotopySlice<'_> {
    fn eval(&self, p: Point) -> Point {
        self.iso.eval(self.t, p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotopyReport {
    pub legs: usize,
    pub fallback_used: bool,
    pub time_samples: usize,
    pub min_jacobian: f64,
    pub max_distance: f64,
    pub bound: f64,
    pub endpoint_defect: f64,
    pub pass: bool,
}

const SPACE_SAMPLES: usize = 33;
const TIME_SAMPLES_PER_LEG: usize = 20;
const CHAIN_LEVELS: [usize; 6] = [2, 4, 8, 16, 32, 64];

fn check_isotopy(iso: &Isotopy, f: &dyn PlanarMap, eps: f64, fallback: bool) -> IsotopyReport {
    let n = TIME_SAMPLES_PER_LEG * iso.legs();
    let (mut min_j, mut max_d, mut ok) = (f64::INFINITY, 0.0f64, true);
    for i in 0..=n {
        let t = i as f64 / n as f64;
        let slice = iso.at(t);
        let cert = certify_embedding(&slice, SPACE_SAMPLES);
        ok &= cert.pass;
        min_j = min_j.min(cert.min_jacobian);
        max_d = max_d.max(sup_distance(&slice, &Identity, SPACE_SAMPLES));
    }
    let endpoint_defect =
        sup_distance(&iso.at(0.0), &Identity, SPACE_SAMPLES).max(sup_distance(&iso.at(1.0), f, SPACE_SAMPLES));
    IsotopyReport {
        legs: iso.legs(),
        fallback_used: fallback,
        time_samples: n + 1,
        min_jacobian: min_j,
        max_distance: max_d,
        bound: 2.0 * eps,
        endpoint_defect,
        pass: ok && max_d < 2.0 * eps && endpoint_defect == 0.0,
    }
}

/// `f_0 = id`, `f_1 = f`, every `f_t` a sampled embedding within `2 eps` of the
/// identity. Tries the straight line first, then a coarse-to-fine chain of
/// spline interpolants of `f`.
pub fn near_identity_isotopy(f: Arc<dyn PlanarMap>, eps: f64) -> Result<(Isotopy, IsotopyReport)> {
    let cert = certify_embedding(f.as_ref(), SPACE_SAMPLES);
    if !cert.pass {
        return Err(LabError::NotEmbedding(format!("input fails the certificate: {cert:?}")));
    }
    let d = sup_distance(f.as_ref(), &Identity, SPACE_SAMPLES);
    if !(d < eps) {
        return Err(LabError::Precondition(format!("sup |f - id| = {d} is not below {eps}")));
    }
    let id: Arc<dyn PlanarMap> = Arc::new(Identity);
    let line = Isotopy { nodes: vec![id.clone(), f.clone()] };
    let rep = check_isotopy(&line, f.as_ref(), eps, false);
    if rep.pass {
        return Ok((line, rep));
    }
    let mut nodes = vec![id];
    for m in CHAIN_LEVELS {
        nodes.push(Arc::new(SplineMap::from_map(f.as_ref(), m)));
    }
    nodes.push(f.clone());
    let chain = Isotopy { nodes };
    let rep2 = check_isotopy(&chain, f.as_ref(), eps, true);
    if rep2.pass {
        return Ok((chain, rep2));
    }
    Err(LabError::IsotopyFailed(format!("straight line: {rep:?}; chain: {rep2:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothing::FnMap;

    #[test]
    fn identity_gives_constant_family() {
        let (iso, rep) = near_identity_isotopy(Arc::new(Identity), 0.01).unwrap();
        assert!(rep.pass && rep.max_distance < 1e-15 && !rep.fallback_used);
        assert_eq!(iso.eval(0.4, [0.2, 0.3]), [0.2, 0.3]);
    }

    #[test]
    fn wave_uses_straight_line() {
        let f = FnMap(|p: Point| [p[0] + 0.01 * (2.0 * std::f64::consts::PI * p[1]).sin(), p[1]]);
        let (_, rep) = near_identity_isotopy(Arc::new(f), 0.02).unwrap();
        assert!(rep.pass && rep.legs == 1 && rep.min_jacobian > 0.0);
        assert!(rep.max_distance <= 0.01 + 1e-12);
    }

    #[test]
    fn small_rotation() {
        let a: f64 = 0.05;
        let f = FnMap(move |p: Point| {
            let (x, y) = (p[0] - 0.5, p[1] - 0.5);
            [0.5 + a.cos() * x - a.sin() * y, 0.5 + a.sin() * x + a.cos() * y]
        });
        // corners move by 0.05 * sqrt(1/2)
        let (_, rep) = near_identity_isotopy(Arc::new(f), 0.04).unwrap();
        assert!(rep.pass && rep.max_distance < 0.08);
    }

    #[test]
    fn far_map_rejected() {
        let f = FnMap(|p: Point| [p[0] + 0.5, p[1]]);
        assert!(matches!(near_identity_isotopy(Arc::new(f), 0.1), Err(LabError::Precondition(_))));
    }
    // half-turn swirl after an anisotropic squeeze: the linear path passes
    // through a fold at the centre
    fn squeezed_swirl(p: Point) -> Point {
        let (x, y) = (p[0] - 0.5, p[1] - 0.5);
        let b = |r2: f64| if r2 < 0.01 { (1.0 - r2 / 0.01).powi(3) } else { 0.0 };
        let w = b(x * x + y * y);
        let (x, y) = (x * (1.0 + 0.5 * w), y * (1.0 - 0.3 * w));
        let th = std::f64::consts::PI * b(x * x + y * y);
        [0.5 + th.cos() * x - th.sin() * y, 0.5 + th.sin() * x + th.cos() * y]
    }

    #[test]
    fn folded_line_falls_back_to_chain() {
        let f: Arc<dyn PlanarMap> = Arc::new(FnMap(squeezed_swirl));
        let line = Isotopy { nodes: vec![Arc::new(Identity), f.clone()] };
        assert!(check_isotopy(&line, f.as_ref(), 0.2, false).min_jacobian < 0.0);
        let (iso, rep) = near_identity_isotopy(f.clone(), 0.2).unwrap();
        assert!(rep.pass && rep.fallback_used && rep.min_jacobian > 0.0);
        assert_eq!(iso.eval(1.0, [0.52, 0.47]), f.eval([0.52, 0.47]));
    }
}
