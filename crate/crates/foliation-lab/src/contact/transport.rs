//! Parallel transport of a plane field on `S^1 x I x I` transverse to `d/dz`:
//! on each slice `theta = const` flow `d/dy + g d/dz` across the y-range.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::CovectorField;
use crate::numeric::linspace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportSpec {
    pub n_theta: usize,
    pub n_z: usize,
    /// Transport runs from `y_range.0` to `y_range.1`.
    pub y_range: (f64, f64),
    pub steps: usize,
    /// Width of the end collars where the maps should be the identity.
    pub collar: f64,
    /// `|alpha_z| / |alpha|` below this counts as a transversality failure.
    pub transversality_tol: f64,
}

impl Default for TransportSpec {
    fn default() -> Self {
        TransportSpec { n_theta: 16, n_z: 201, y_range: (-1.0, 1.0), steps: 400, collar: 0.1, transversality_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParallelTransport {
    pub thetas: Vec<f64>,
    pub zs: Vec<f64>,
    /// `maps[i][j] = phi_{theta_i}(z_j)`.
    pub maps: Vec<Vec<f64>>,
    pub increasing: bool,
    /// `max |phi(z) - z|` over the end collars.
    pub collar_defect: f64,
}

fn slope(xi: &dyn CovectorField, theta: f64, y: f64, z: f64, tol: f64) -> Result<f64> {
    let a = xi.covector(&[theta, y, z]);
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(a[2].abs() > tol * norm) {
        return Err(LabError::Precondition(format!(
            "plane field not transverse to d/dz at (theta, y, z) = ({theta}, {y}, {z})"
        )));
    }
    Ok(-a[1] / a[2])
}

/// `phi_theta` at the samples `zs` by RK4 in `y`.
pub fn transport_map(xi: &dyn CovectorField, theta: f64, zs: &[f64], spec: &TransportSpec) -> Result<Vec<f64>> {
    let (y0, y1) = spec.y_range;
    let h = (y1 - y0) / spec.steps as f64;
    let tol = spec.transversality_tol;
    zs.iter()
        .map(|&z0| {
            let mut z = z0;
            for k in 0..spec.steps {
                let y = y0 + h * k as f64;
                let k1 = slope(xi, theta, y, z, tol)?;
                let k2 = slope(xi, theta, y + 0.5 * h, z + 0.5 * h * k1, tol)?;
                let k3 = slope(xi, theta, y + 0.5 * h, z + 0.5 * h * k2, tol)?;
                let k4 = slope(xi, theta, y + h, z + h * k3, tol)?;
                z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                if !(-1.0..=1.0).contains(&z) {
                    return Err(LabError::Precondition(format!("transport from z = {z0} leaves the interval")));
                }
            }
            Ok(z)
        })
        .collect()
}

pub fn parallel_transport(xi: &dyn CovectorField, spec: &TransportSpec) -> Result<ParallelTransport> {
    let thetas: Vec<f64> = (0..spec.n_theta).map(|i| std::f64::consts::TAU * i as f64 / spec.n_theta as f64).collect();
    let zs = linspace(-1.0, 1.0, spec.n_z);
    let maps = thetas.iter().map(|&th| transport_map(xi, th, &zs, spec)).collect::<Result<Vec<_>>>()?;
    let increasing = maps.iter().all(|m| m.windows(2).all(|w| w[1] > w[0]));
    let mut collar_defect: f64 = 0.0;
    for m in &maps {
        for (z, v) in zs.iter().zip(m) {
            if 1.0 - z.abs() <= spec.collar {
                collar_defect = collar_defect.max((v - z).abs());
            }
        }
    }
    Ok(ParallelTransport { thetas, zs, maps, increasing, collar_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FnCovector;
    use crate::numeric::Step;

    fn plateau(z: f64) -> f64 {
        1.0 - Step::new(0.6, 0.8).value(z.abs())
    }

    #[test]
    fn horizontal_field_gives_identity() {
        let xi = FnCovector(|_: &[f64]| vec![0.0, 0.0, 1.0]);
        let t = parallel_transport(&xi, &TransportSpec::default()).unwrap();
        for m in &t.maps {
            for (z, v) in t.zs.iter().zip(m) {
                assert_eq!(z, v);
            }
        }
    }

    #[test]
    fn legendrian_y_slices_give_identity() {
        let xi = FnCovector(|p: &[f64]| vec![-(p[1] + 2.0) * (1.0 + 0.3 * p[0].sin()) * p[2], 0.0, 1.0]);
        let t = parallel_transport(&xi, &TransportSpec::default()).unwrap();
        assert!(t.maps.iter().zip(std::iter::repeat(&t.zs)).all(|(m, zs)| m == zs));
    }

    #[test]
    fn constant_shift_on_unit_length() {
        let c = 0.1;
        let xi = FnCovector(move |p: &[f64]| vec![0.0, -c * plateau(p[2]), 1.0]);
        let spec = TransportSpec { y_range: (0.0, 1.0), ..TransportSpec::default() };
        let t = parallel_transport(&xi, &spec).unwrap();
        assert!(t.increasing);
        assert_eq!(t.collar_defect, 0.0);
        for m in &t.maps {
            for (z, v) in t.zs.iter().zip(m) {
                if (-0.6..=0.5).contains(z) {
                    assert!((v - (z + c)).abs() < 1e-10, "{z} {v}");
                }
            }
        }
    }

    #[test]
    fn theta_reparametrisation_commutes() {
        let g = |th: f64, y: f64, z: f64| 0.2 * plateau(z) * (1.0 + th.sin()) * (1.0 + 0.5 * y);
        let rho = |th: f64| th + 0.3 * th.sin();
        let xi = FnCovector(move |p: &[f64]| vec![0.0, -g(p[0], p[1], p[2]), 1.0]);
        let xi2 = FnCovector(move |p: &[f64]| {
            let th = rho(p[0]);
            vec![7.0, -g(th, p[1], p[2]), 1.0]
        });
        let spec = TransportSpec { n_theta: 8, n_z: 41, ..TransportSpec::default() };
        let a = parallel_transport(&xi2, &spec).unwrap();
        for (i, &th) in a.thetas.iter().enumerate() {
            let direct = transport_map(&xi, rho(th), &a.zs, &spec).unwrap();
            assert_eq!(direct, a.maps[i]);
        }
        let b = parallel_transport(&xi2, &spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vertical_plane_rejected() {
        let xi = FnCovector(|_: &[f64]| vec![0.0, 1.0, 0.0]);
        assert!(matches!(parallel_transport(&xi, &TransportSpec::default()), Err(LabError::Precondition(_))));
    }
}
