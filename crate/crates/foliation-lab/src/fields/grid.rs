//! Model manifolds and their sampling grids.
//!
//! Every model is a product grid. Each axis is either periodic (uniform
//! samples on `[lo, hi)`, differentiated spectrally) or an interval (uniform
//! samples on `[lo, hi]` including both ends, differentiated with fourth-order
//! finite differences). Forms are expressed in a constant coframe dual to a
//! constant frame of derivations `E_j = sum_i frame[j][i] d/dq_i`, which lets
//! the mapping torus use its eigen-coordinates on a periodic fibre grid.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const MIN_RESOLUTION: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    Periodic,
    Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub kind: AxisKind,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn periodic(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        Axis { name: name.into(), kind: AxisKind::Periodic, lo, hi, n }
    }
    pub fn interval(name: &str, lo: f64, hi: f64, n: usize) -> Self {
        Axis { name: name.into(), kind: AxisKind::Interval, lo, hi, n }
    }
    pub fn spacing(&self) -> f64 {
        match self.kind {
            AxisKind::Periodic => (self.hi - self.lo) / self.n as f64,
            AxisKind::Interval => (self.hi - self.lo) / (self.n - 1) as f64,
        }
    }
    pub fn coord(&self, i: usize) -> f64 {
        if self.kind == AxisKind::Interval && i == self.n - 1 {
            return self.hi;
        }
        self.lo + self.spacing() * i as f64
    }
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Data of the mapping torus of a hyperbolic toral automorphism, in
/// eigen-coordinates. `e_s`, `e_u` are unit eigenvectors for `1/lambda` and
/// `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingTorusData {
    pub a: [[i64; 2]; 2],
    pub lambda: f64,
    pub e_s: [f64; 2],
    pub e_u: [f64; 2],
}

impl MappingTorusData {
    pub fn new(a: [[i64; 2]; 2]) -> Result<Self> {
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let tr = a[0][0] + a[1][1];
        if det.abs() != 1 {
            return Err(LabError::InvalidModel(format!("|det A| = {} != 1", det.abs())));
        }
        if tr.abs() <= 2 {
            return Err(LabError::InvalidModel(format!(
                "|trace A| = {} <= 2: not hyperbolic",
                tr.abs()
            )));
        }
        if det != 1 || tr < 0 {
            return Err(LabError::InvalidModel(
                "eigenvalues must be positive (det 1, trace > 2) for oriented weak bundles".into(),
            ));
        }
        let (t, d) = (tr as f64, det as f64);
        let disc = (t * t - 4.0 * d).sqrt();
        let lambda = 0.5 * (t + disc);
        let mu = 1.0 / lambda;
        let e_u = eigvec(&a, lambda);
        let e_s = eigvec(&a, mu);
        Ok(MappingTorusData { a, lambda, e_s, e_u })
    }

    pub fn log_lambda(&self) -> f64 {
        self.lambda.ln()
    }

    /// Integer power `A^k` (negative `k` uses the integer inverse).
    pub fn power(&self, k: i64) -> [[i64; 2]; 2] {
        let base = if k >= 0 {
            self.a
        } else {
            let a = self.a;
            [[a[1][1], -a[0][1]], [-a[1][0], a[0][0]]]
        };
        let mut m = [[1i64, 0], [0, 1]];
        for _ in 0..k.unsigned_abs() {
            m = [
                [m[0][0] * base[0][0] + m[0][1] * base[1][0], m[0][0] * base[0][1] + m[0][1] * base[1][1]],
                [m[1][0] * base[0][0] + m[1][1] * base[1][0], m[1][0] * base[0][1] + m[1][1] * base[1][1]],
            ];
        }
        m
    }

    /// `A^k y` reduced to the unit square.
    pub fn act(&self, y: [f64; 2], k: i64) -> [f64; 2] {
        let m = self.power(k);
        let z0 = m[0][0] as f64 * y[0] + m[0][1] as f64 * y[1];
        let z1 = m[1][0] as f64 * y[0] + m[1][1] as f64 * y[1];
        [z0.rem_euclid(1.0), z1.rem_euclid(1.0)]
    }
}

fn eigvec(a: &[[i64; 2]; 2], mu: f64) -> [f64; 2] {
    let (a00, a01, a10, a11) = (a[0][0] as f64, a[0][1] as f64, a[1][0] as f64, a[1][1] as f64);
    let v = if a01.abs() > 0.0 { [a01, mu - a00] } else { [mu - a11, a10] };
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    let s = if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) { -1.0 } else { 1.0 };
    [s * v[0] / n, s * v[1] / n]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ManifoldKind {
    Torus3,
    MappingTorus(MappingTorusData),
    AnnulusProduct,
    Cube,
    SurfaceTorus,
    SurfaceAnnulus,
    /// `[lo, hi] x M`, the first axis being the thickening parameter.
    Thickened(Box<ManifoldKind>),
    Custom,
}

impl ManifoldKind {
    pub fn label(&self) -> String {
        match self {
            ManifoldKind::Torus3 => "torus3".into(),
            ManifoldKind::MappingTorus(_) => "mapping-torus".into(),
            ManifoldKind::AnnulusProduct => "annulus-product".into(),
            ManifoldKind::Cube => "cube".into(),
            ManifoldKind::SurfaceTorus => "surface-torus".into(),
            ManifoldKind::SurfaceAnnulus => "surface-annulus".into(),
            ManifoldKind::Thickened(inner) => format!("thickened({})", inner.label()),
            ManifoldKind::Custom => "custom".into(),
        }
    }
}

/// A product grid over a chart of a model manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifold {
    pub kind: ManifoldKind,
    pub axes: Vec<Axis>,
    /// `frame[j][i]`: coefficient of `d/dq_i` in the `j`-th frame derivation.
    pub frame: Vec<Vec<f64>>,
    pub frame_names: Vec<String>,
}

impl ModelManifold {
    /// Product grid with the coordinate frame.
    pub fn product(kind: ManifoldKind, axes: Vec<Axis>) -> Result<Self> {
        let n = axes.len();
        let frame = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let frame_names = axes.iter().map(|a| a.name.clone()).collect();
        let m = ModelManifold { kind, axes, frame, frame_names };
        m.validate()?;
        Ok(m)
    }

    pub fn torus3(n: usize) -> Result<Self> {
        Self::product(
            ManifoldKind::Torus3,
            vec![
                Axis::periodic("x", 0.0, 1.0, n),
                Axis::periodic("y", 0.0, 1.0, n),
                Axis::periodic("z", 0.0, 1.0, n),
            ],
        )
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::product(
            ManifoldKind::Cube,
            vec![
                Axis::interval("x", 0.0, 1.0, n),
                Axis::interval("y", 0.0, 1.0, n),
                Axis::interval("z", 0.0, 1.0, n),
            ],
        )
    }

    pub fn surface_torus(n: usize) -> Result<Self> {
        Self::product(
            ManifoldKind::SurfaceTorus,
            vec![Axis::periodic("x", 0.0, 1.0, n), Axis::periodic("y", 0.0, 1.0, n)],
        )
    }

    /// `S^1_theta x [r0, r1]_r x [t0, t1]_t` with `theta` in `[0, 2 pi)`.
    pub fn annulus_product(n: [usize; 3], r: (f64, f64), t: (f64, f64)) -> Result<Self> {
        Self::product(
            ManifoldKind::AnnulusProduct,
            vec![
                Axis::periodic("theta", 0.0, 2.0 * std::f64::consts::PI, n[0]),
                Axis::interval("r", r.0, r.1, n[1]),
                Axis::interval("t", t.0, t.1, n[2]),
            ],
        )
    }

    /// Mapping torus of `A`: axes `(t, y1, y2)` with `t` in `[0, 1]` and the
    /// fibre the standard torus; frame `(d/dt, d/dx_s, d/dx_u)`.
    pub fn mapping_torus(a: [[i64; 2]; 2], n_t: usize, n_fiber: usize) -> Result<Self> {
        let data = MappingTorusData::new(a)?;
        let axes = vec![
            Axis::interval("t", 0.0, 1.0, n_t),
            Axis::periodic("y1", 0.0, 1.0, n_fiber),
            Axis::periodic("y2", 0.0, 1.0, n_fiber),
        ];
        let frame = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, data.e_s[0], data.e_s[1]],
            vec![0.0, data.e_u[0], data.e_u[1]],
        ];
        let m = ModelManifold {
            kind: ManifoldKind::MappingTorus(data),
            axes,
            frame,
            frame_names: vec!["t".into(), "xs".into(), "xu".into()],
        };
        m.validate()?;
        Ok(m)
    }

    /// `[lo, hi]_name x self`, the new axis first, frame extended block-diagonally.
    pub fn thickened_with(&self, name: &str, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let mut axes = vec![Axis::interval(name, lo, hi, n)];
        axes.extend(self.axes.iter().cloned());
        let d = self.dim() + 1;
        let mut frame = vec![vec![0.0; d]; d];
        frame[0][0] = 1.0;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                frame[j + 1][i + 1] = self.frame[j][i];
            }
        }
        let mut frame_names = vec![name.to_string()];
        frame_names.extend(self.frame_names.iter().cloned());
        let m = ModelManifold {
            kind: ManifoldKind::Thickened(Box::new(self.kind.clone())),
            axes,
            frame,
            frame_names,
        };
        m.validate()?;
        Ok(m)
    }

    /// `[-1, 1]_tau x self`.
    pub fn thickened(&self, n_tau: usize) -> Result<Self> {
        self.thickened_with("tau", -1.0, 1.0, n_tau)
    }

    /// The manifold with the thickening axis removed.
    pub fn boundary_factor(&self) -> Result<Self> {
        match &self.kind {
            ManifoldKind::Thickened(inner) => {
                let d = self.dim();
                let axes = self.axes[1..].to_vec();
                let frame = (1..d).map(|j| self.frame[j][1..].to_vec()).collect();
                Ok(ModelManifold {
                    kind: (**inner).clone(),
                    axes,
                    frame,
                    frame_names: self.frame_names[1..].to_vec(),
                })
            }
            _ => Err(LabError::InvalidModel("not a thickened manifold".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for a in &self.axes {
            if a.n < MIN_RESOLUTION {
                return Err(LabError::InvalidModel(format!(
                    "axis {} has {} samples; at least {} required",
                    a.name, a.n, MIN_RESOLUTION
                )));
            }
            if !(a.hi > a.lo) {
                return Err(LabError::InvalidModel(format!("axis {} has empty range", a.name)));
            }
        }
        if self.frame.len() != self.dim() || self.frame.iter().any(|r| r.len() != self.dim()) {
            return Err(LabError::InvalidModel("frame shape does not match dimension".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides, last axis fastest.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.axes[a + 1].n;
        }
        s
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let d = self.dim();
        let mut out = vec![0; d];
        for a in (0..d).rev() {
            let n = self.axes[a].n;
            out[a] = idx % n;
            idx /= n;
        }
        out
    }

    pub fn flat_index(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        for (a, &i) in mi.iter().enumerate() {
            idx = idx * self.axes[a].n + i;
        }
        idx
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    /// Smallest grid spacing.
    pub fn min_spacing(&self) -> f64 {
        self.axes.iter().map(|a| a.spacing()).fold(f64::INFINITY, f64::min)
    }

    /// Length of each coframe covector in the model metric at `coords`.
    /// Orthonormal coframe components are `c_j * scale_j`.
    ///
    /// On the mapping torus the metric is the one in which
    /// `(dt, lambda^-t dx_s, lambda^t dx_u)` is orthonormal; it is flat in
    /// the chart up to the gluing weights and descends to the quotient.
    /// Every other model uses the flat chart metric.
    pub fn coframe_scale(&self, coords: &[f64]) -> Vec<f64> {
        match &self.kind {
            ManifoldKind::MappingTorus(data) => {
                let t = coords[0];
                vec![1.0, data.lambda.powf(t), data.lambda.powf(-t)]
            }
            ManifoldKind::Thickened(inner) => {
                let mut out = vec![1.0];
                if let ManifoldKind::MappingTorus(data) = inner.as_ref() {
                    let t = coords[1];
                    out.extend([1.0, data.lambda.powf(t), data.lambda.powf(-t)]);
                } else {
                    out.extend(std::iter::repeat(1.0).take(self.dim() - 1));
                }
                out
            }
            _ => vec![1.0; self.dim()],
        }
    }

    /// Description of the metric used for plane-field distances, echoed in reports.
    pub fn metric_description(&self) -> &'static str {
        match &self.kind {
            ManifoldKind::MappingTorus(_) => "orthonormal coframe (dt, lambda^-t dx_s, lambda^t dx_u)",
            ManifoldKind::Thickened(inner) if matches!(inner.as_ref(), ManifoldKind::MappingTorus(_)) => {
                "orthonormal coframe (dtau, dt, lambda^-t dx_s, lambda^t dx_u)"
            }
            _ => "flat chart metric",
        }
    }

    pub fn mapping_torus_data(&self) -> Option<&MappingTorusData> {
        match &self.kind {
            ManifoldKind::MappingTorus(d) => Some(d),
            ManifoldKind::Thickened(inner) => match inner.as_ref() {
                ManifoldKind::MappingTorus(d) => Some(d),
                _ => None,
            },
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_eigendata() {
        let d = MappingTorusData::new([[2, 1], [1, 1]]).unwrap();
        let expected = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((d.lambda - expected).abs() < 1e-14);
        assert!((d.log_lambda() - 0.962_423_650_119_206_9).abs() < 1e-12);
        // A e_u = lambda e_u and A e_s = e_s / lambda
        let av = |v: [f64; 2]| [2.0 * v[0] + v[1], v[0] + v[1]];
        let au = av(d.e_u);
        let as_ = av(d.e_s);
        for i in 0..2 {
            assert!((au[i] - d.lambda * d.e_u[i]).abs() < 1e-12);
            assert!((as_[i] - d.e_s[i] / d.lambda).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_parabolic_and_flipping() {
        assert!(MappingTorusData::new([[1, 1], [0, 1]]).is_err());
        assert!(MappingTorusData::new([[2, 0], [0, 1]]).is_err());
        assert!(MappingTorusData::new([[-2, 1], [1, -1]]).is_err());
    }

    #[test]
    fn inverse_power_roundtrip() {
        let d = MappingTorusData::new([[2, 1], [1, 1]]).unwrap();
        let y = [0.3, 0.7];
        let z = d.act(d.act(y, 3), -3);
        assert!((z[0] - y[0]).abs() < 1e-12 && (z[1] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn resolution_gate() {
        assert!(ModelManifold::torus3(4).is_err());
        assert!(ModelManifold::torus3(8).is_ok());
    }

    #[test]
    fn indexing_roundtrip() {
        let m = ModelManifold::cube(9).unwrap().thickened(8).unwrap();
        for idx in [0, 17, 400, m.len() - 1] {
            assert_eq!(m.flat_index(&m.multi_index(idx)), idx);
        }
        assert_eq!(m.coords(m.len() - 1), vec![1.0, 1.0, 1.0, 1.0]);
        assert_eq!(m.boundary_factor().unwrap(), ModelManifold::cube(9).unwrap());
    }
}
