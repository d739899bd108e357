//! Sampled differential forms and vector fields, and the exterior calculus
//! operations on them.

use std::sync::Arc;

use super::deriv::partial;
use super::grid::ModelManifold;
use crate::error::{LabError, Result};

/// Bitmask basis of degree-`k` monomials in dimension `n`, lexicographic in
/// the sorted index tuples (`dq_0 ^ dq_1`, `dq_0 ^ dq_2`, ...).
pub fn basis(n: usize, k: usize) -> Vec<u32> {
    fn rec(start: usize, n: usize, k: usize, acc: u32, out: &mut Vec<u32>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        for i in start..n {
            rec(i + 1, n, k - 1, acc | (1 << i), out);
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, 0, &mut out);
    out
}

fn position(basis: &[u32], mask: u32) -> usize {
    basis.iter().position(|&b| b == mask).expect("mask in basis")
}

/// Sign of the shuffle putting the indices of `a` before those of `b` into
/// increasing order.
fn shuffle_sign(a: u32, b: u32) -> f64 {
    let mut inversions = 0u32;
    for i in 0..32 {
        if a & (1 << i) != 0 {
            inversions += (b & ((1u32 << i) - 1)).count_ones();
        }
    }
    if inversions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A `k`-form sampled on a grid, components in the manifold's coframe.
#[derive(Debug, Clone, PartialEq)]
pub struct FormField {
    pub manifold: Arc<ModelManifold>,
    pub degree: usize,
    /// `comps[c][p]`: coefficient of the `c`-th basis monomial at sample `p`.
    pub comps: Vec<Vec<f64>>,
}

impl FormField {
    pub fn zeros(manifold: Arc<ModelManifold>, degree: usize) -> Self {
        assert!(degree <= manifold.dim());
        let nc = basis(manifold.dim(), degree).len();
        let len = manifold.len();
        FormField { manifold, degree, comps: vec![vec![0.0; len]; nc] }
    }

    /// Build from a pointwise rule returning the components in basis order.
    pub fn from_fn<F>(manifold: Arc<ModelManifold>, degree: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let mut out = Self::zeros(manifold, degree);
        let nc = out.comps.len();
        for p in 0..out.manifold.len() {
            let c = out.manifold.coords(p);
            let v = f(&c);
            assert_eq!(v.len(), nc, "component count");
            for (k, x) in v.into_iter().enumerate() {
                out.comps[k][p] = x;
            }
        }
        out
    }

    pub fn scalar_from_fn<F: Fn(&[f64]) -> f64>(manifold: Arc<ModelManifold>, f: F) -> Self {
        Self::from_fn(manifold, 0, |c| vec![f(c)])
    }

    pub fn dim(&self) -> usize {
        self.manifold.dim()
    }

    pub fn basis(&self) -> Vec<u32> {
        basis(self.dim(), self.degree)
    }

    /// Component with the given sorted axis indices, e.g. `&[0, 2]`.
    pub fn component(&self, axes: &[usize]) -> &[f64] {
        let mask = axes.iter().fold(0u32, |m, &a| m | (1 << a));
        &self.comps[position(&self.basis(), mask)]
    }

    pub fn component_mut(&mut self, axes: &[usize]) -> &mut Vec<f64> {
        let mask = axes.iter().fold(0u32, |m, &a| m | (1 << a));
        let pos = position(&self.basis(), mask);
        &mut self.comps[pos]
    }

    /// Components at one sample.
    pub fn at(&self, p: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[p]).collect()
    }

    /// Coefficient of the top-degree form (ratio to the positive volume form).
    pub fn top_coefficient(&self) -> Result<&[f64]> {
        if self.degree != self.dim() {
            return Err(LabError::GridMismatch(format!(
                "degree {} is not top degree {}",
                self.degree,
                self.dim()
            )));
        }
        Ok(&self.comps[0])
    }

    fn check_same(&self, other: &FormField) -> Result<()> {
        if !Arc::ptr_eq(&self.manifold, &other.manifold) && self.manifold != other.manifold {
            return Err(LabError::GridMismatch("forms live on different grids".into()));
        }
        Ok(())
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.check_same(other)?;
        if self.degree != other.degree {
            return Err(LabError::GridMismatch("degree mismatch in sum".into()));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
            .collect();
        Ok(FormField { manifold: self.manifold.clone(), degree: self.degree, comps })
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> FormField {
        let comps = self.comps.iter().map(|a| a.iter().map(|x| c * x).collect()).collect();
        FormField { manifold: self.manifold.clone(), degree: self.degree, comps }
    }

    /// Multiply by a 0-form.
    pub fn mul_scalar(&self, f: &FormField) -> Result<FormField> {
        self.check_same(f)?;
        if f.degree != 0 {
            return Err(LabError::GridMismatch("multiplier must be a 0-form".into()));
        }
        let s = &f.comps[0];
        let comps = self.comps.iter().map(|a| a.iter().zip(s).map(|(x, y)| x * y).collect()).collect();
        Ok(FormField { manifold: self.manifold.clone(), degree: self.degree, comps })
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Exterior derivative in the frame: `(dw)_K = sum_{j in K} sign E_j(w_{K-j})`.
    pub fn exterior_derivative(&self) -> Result<FormField> {
        let n = self.dim();
        if self.degree >= n {
            return Err(LabError::TopDegree(self.degree));
        }
        let m = &self.manifold;
        let src = self.basis();
        // cache coordinate partials of every component along every axis
        let mut partials: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; n]; src.len()];
        let axis_used: Vec<bool> = (0..n).map(|i| (0..n).any(|j| m.frame[j][i] != 0.0)).collect();
        for (c, comp) in self.comps.iter().enumerate() {
            for i in 0..n {
                if axis_used[i] {
                    partials[c][i] = Some(partial(m, i, comp));
                }
            }
        }
        let frame_deriv = |c: usize, j: usize| -> Vec<f64> {
            let mut out = vec![0.0; m.len()];
            for i in 0..n {
                let w = m.frame[j][i];
                if w == 0.0 {
                    continue;
                }
                let d = partials[c][i].as_ref().expect("partial cached");
                if w == 1.0 {
                    for (o, x) in out.iter_mut().zip(d) {
                        *o += x;
                    }
                } else {
                    for (o, x) in out.iter_mut().zip(d) {
                        *o += w * x;
                    }
                }
            }
            out
        };
        let mut out = FormField::zeros(m.clone(), self.degree + 1);
        let dst = out.basis();
        for (kc, &kmask) in dst.iter().enumerate() {
            for j in 0..n {
                if kmask & (1 << j) == 0 {
                    continue;
                }
                let rest = kmask & !(1 << j);
                let c = position(&src, rest);
                let sign = shuffle_sign(1 << j, rest);
                let dj = frame_deriv(c, j);
                for (o, x) in out.comps[kc].iter_mut().zip(&dj) {
                    *o += sign * x;
                }
            }
        }
        Ok(out)
    }

    /// Wedge product. For each output monomial the terms are summed in an
    /// order that depends only on the unordered pair of factor monomials, so
    /// `a ^ b == (-1)^{kl} b ^ a` holds bit for bit.
    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        self.check_same(other)?;
        let n = self.dim();
        let (k, l) = (self.degree, other.degree);
        if k + l > n {
            return Err(LabError::DegreeOverflow(k, l, n));
        }
        let ba = self.basis();
        let bb = other.basis();
        let mut out = FormField::zeros(self.manifold.clone(), k + l);
        let dst = out.basis();
        for (kc, &kmask) in dst.iter().enumerate() {
            let mut terms: Vec<(u32, u32, usize, usize, f64)> = Vec::new();
            for (ia, &ma) in ba.iter().enumerate() {
                if ma & kmask != ma {
                    continue;
                }
                let mb = kmask & !ma;
                if let Some(ib) = bb.iter().position(|&x| x == mb) {
                    let key = (ma.min(mb), ma.max(mb));
                    terms.push((key.0, key.1, ia, ib, shuffle_sign(ma, mb)));
                }
            }
            terms.sort_by_key(|t| (t.0, t.1));
            // equal-degree factors can produce two terms per unordered pair;
            // they are combined first (two-term addition commutes exactly)
            let mut groups: Vec<Vec<(usize, usize, f64)>> = Vec::new();
            let mut last = None;
            for (k0, k1, ia, ib, sign) in terms {
                if last == Some((k0, k1)) {
                    groups.last_mut().expect("group").push((ia, ib, sign));
                } else {
                    groups.push(vec![(ia, ib, sign)]);
                    last = Some((k0, k1));
                }
            }
            let dstc = &mut out.comps[kc];
            let term = |(ia, ib, sign): (usize, usize, f64), p: usize| -> f64 {
                let prod = self.comps[ia][p] * other.comps[ib][p];
                if sign > 0.0 {
                    prod
                } else {
                    -prod
                }
            };
            for g in groups {
                for (p, d) in dstc.iter_mut().enumerate() {
                    let v = match g.len() {
                        1 => term(g[0], p),
                        _ => term(g[0], p) + term(g[1], p),
                    };
                    *d += v;
                }
            }
        }
        Ok(out)
    }

    /// Largest mismatch between the samples on `t = 1` and the pullback of
    /// the samples on `t = 0` under the gluing `(1, y) ~ (0, A y)` of a
    /// mapping torus. In the eigen-frame the pullback multiplies each
    /// component by `lambda^-1` per `dx_s` factor and `lambda` per `dx_u`.
    pub fn gluing_defect(&self) -> Result<f64> {
        let m = &self.manifold;
        let data = match &m.kind {
            super::grid::ManifoldKind::MappingTorus(d) => d,
            _ => return Err(LabError::InvalidModel("gluing defect needs a mapping torus".into())),
        };
        let (nt, n1, n2) = (m.axes[0].n, m.axes[1].n, m.axes[2].n);
        if n1 != n2 {
            return Err(LabError::GridMismatch("fibre grid must be square".into()));
        }
        let n = n1 as i64;
        let a = data.a;
        let inv = 1.0 / data.lambda;
        let factors: Vec<f64> = self
            .basis()
            .iter()
            .map(|&mask| {
                let mut f = 1.0;
                if mask & 2 != 0 {
                    f *= inv;
                }
                if mask & 4 != 0 {
                    f *= data.lambda;
                }
                f
            })
            .collect();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let i2 = (a[0][0] * i + a[0][1] * j).rem_euclid(n) as usize;
                let j2 = (a[1][0] * i + a[1][1] * j).rem_euclid(n) as usize;
                let top = m.flat_index(&[nt - 1, i as usize, j as usize]);
                let bottom = m.flat_index(&[0, i2, j2]);
                for (c, f) in factors.iter().enumerate() {
                    worst = worst.max((self.comps[c][top] - f * self.comps[c][bottom]).abs());
                }
            }
        }
        Ok(worst)
    }

    /// Restriction to the slice `axis = index`: components containing `axis`
    /// are dropped and samples are taken on the slice. Only the thickening
    /// axis (axis 0 of a thickened manifold) is supported.
    pub fn restrict_boundary(&self, index: usize) -> Result<FormField> {
        let inner = Arc::new(self.manifold.boundary_factor()?);
        let n0 = self.manifold.axes[0].n;
        if index >= n0 {
            return Err(LabError::GridMismatch("slice index out of range".into()));
        }
        let src = self.basis();
        let mut out = FormField::zeros(inner.clone(), self.degree);
        if self.degree > inner.dim() {
            return Err(LabError::DegreeOverflow(self.degree, 0, inner.dim()));
        }
        let dst = out.basis();
        let block = inner.len();
        for (kc, &kmask) in dst.iter().enumerate() {
            let c = position(&src, kmask << 1);
            out.comps[kc].copy_from_slice(&self.comps[c][index * block..(index + 1) * block]);
        }
        Ok(out)
    }

    /// Pull back along the projection `[a, b] x M -> M`.
    pub fn lift(&self, thick: Arc<ModelManifold>) -> Result<FormField> {
        let inner = thick.boundary_factor()?;
        if inner != *self.manifold {
            return Err(LabError::GridMismatch("lift target does not thicken this grid".into()));
        }
        let src = self.basis();
        let mut out = FormField::zeros(thick.clone(), self.degree);
        let dst = out.basis();
        let block = inner.len();
        let n0 = thick.axes[0].n;
        for (kc, &kmask) in dst.iter().enumerate() {
            if kmask & 1 != 0 {
                continue;
            }
            let c = position(&src, kmask >> 1);
            for s in 0..n0 {
                out.comps[kc][s * block..(s + 1) * block].copy_from_slice(&self.comps[c]);
            }
        }
        Ok(out)
    }
}

/// The 1-form `d q_axis` (coframe element) on `m`.
pub fn coframe(m: Arc<ModelManifold>, axis: usize) -> FormField {
    let mut f = FormField::zeros(m, 1);
    f.comps[axis].iter_mut().for_each(|x| *x = 1.0);
    f
}

/// A vector field sampled on a grid, components in the manifold's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LineField {
    pub manifold: Arc<ModelManifold>,
    pub comps: Vec<Vec<f64>>,
}

pub const DEGENERACY_TOL: f64 = 1e-8;

impl LineField {
    /// Sampled vector field; rejects samples with norm at or below `1e-8`.
    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(manifold: Arc<ModelManifold>, f: F) -> Result<Self> {
        let n = manifold.dim();
        let mut comps = vec![vec![0.0; manifold.len()]; n];
        for p in 0..manifold.len() {
            let v = f(&manifold.coords(p));
            for j in 0..n {
                comps[j][p] = v[j];
            }
        }
        let lf = LineField { manifold, comps };
        lf.check_nondegenerate()?;
        Ok(lf)
    }

    pub fn check_nondegenerate(&self) -> Result<()> {
        for p in 0..self.manifold.len() {
            let norm = self.comps.iter().map(|c| c[p] * c[p]).sum::<f64>().sqrt();
            if norm <= DEGENERACY_TOL {
                return Err(LabError::Degenerate { index: p, norm });
            }
        }
        Ok(())
    }

    /// Interior product `i_X w`.
    pub fn interior_product(&self, w: &FormField) -> Result<FormField> {
        if !Arc::ptr_eq(&self.manifold, &w.manifold) && *self.manifold != *w.manifold {
            return Err(LabError::GridMismatch("vector field and form on different grids".into()));
        }
        if w.degree == 0 {
            return Err(LabError::ZeroDegree);
        }
        let n = w.dim();
        let src = w.basis();
        let mut out = FormField::zeros(w.manifold.clone(), w.degree - 1);
        let dst = out.basis();
        for (kc, &kmask) in dst.iter().enumerate() {
            for j in 0..n {
                if kmask & (1 << j) != 0 {
                    continue;
                }
                let c = position(&src, kmask | (1 << j));
                let sign = shuffle_sign(1 << j, kmask);
                let (xs, ws) = (&self.comps[j], &w.comps[c]);
                for (p, o) in out.comps[kc].iter_mut().enumerate() {
                    *o += sign * xs[p] * ws[p];
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn torus(n: usize) -> Arc<ModelManifold> {
        Arc::new(ModelManifold::torus3(n).unwrap())
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(basis(3, 1), vec![1, 2, 4]);
        assert_eq!(basis(3, 2), vec![3, 5, 6]);
        assert_eq!(basis(4, 2).len(), 6);
        assert_eq!(basis(4, 4), vec![15]);
    }

    #[test]
    fn sign_convention_dt_dx() {
        let m = torus(8);
        let dt = coframe(m.clone(), 0);
        let dx = coframe(m.clone(), 1);
        let a = dt.wedge(&dx).unwrap();
        let b = dx.wedge(&dt).unwrap();
        assert!(a.component(&[0, 1]).iter().all(|&v| v == 1.0));
        assert!(b.component(&[0, 1]).iter().all(|&v| v == -1.0));
    }

    #[test]
    fn self_wedge_of_one_form_vanishes() {
        let m = torus(8);
        let a = FormField::from_fn(m, 1, |c| vec![c[0].sin(), c[1] * c[2], 0.3 + c[0]]);
        let aa = a.wedge(&a).unwrap();
        assert_eq!(aa.max_abs(), 0.0);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let m = torus(8);
        let f = FormField::scalar_from_fn(m, |_| 2.5);
        assert!(f.exterior_derivative().unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn top_degree_rejected() {
        let m = torus(8);
        let v = FormField::zeros(m, 3);
        assert_eq!(v.exterior_derivative(), Err(LabError::TopDegree(3)));
    }

    #[test]
    fn wedge_overflow_rejected() {
        let m = torus(8);
        let a = FormField::zeros(m.clone(), 2);
        assert!(matches!(a.wedge(&a), Err(LabError::DegreeOverflow(2, 2, 3))));
    }

    #[test]
    fn contraction_basics() {
        let m = torus(8);
        let dt_dx = coframe(m.clone(), 0).wedge(&coframe(m.clone(), 1)).unwrap();
        let x = LineField::from_fn(m.clone(), |_| vec![1.0, 0.0, 0.0]).unwrap();
        let r = x.interior_product(&dt_dx).unwrap();
        assert!(r.component(&[1]).iter().all(|&v| v == 1.0));
        assert!(r.component(&[0]).iter().all(|&v| v == 0.0));
        let f = FormField::from_fn(m.clone(), 1, |c| vec![c[2] + 1.0, 0.0, 0.0]);
        let g = x.interior_product(&f).unwrap();
        for p in 0..m.len() {
            assert_eq!(g.comps[0][p], f.comps[0][p]);
        }
        assert_eq!(x.interior_product(&FormField::zeros(m, 0)), Err(LabError::ZeroDegree));
    }

    #[test]
    fn degenerate_line_field_rejected() {
        let m = torus(8);
        assert!(LineField::from_fn(m, |c| vec![c[0], 0.0, 0.0]).is_err());
    }

    #[test]
    fn lift_and_restrict_roundtrip() {
        let m = Arc::new(ModelManifold::cube(8).unwrap());
        let thick = Arc::new(m.thickened(9).unwrap());
        let a = FormField::from_fn(m.clone(), 1, |c| vec![c[0], c[1] * c[1], 1.0 - c[2]]);
        let lifted = a.lift(thick.clone()).unwrap();
        assert!(lifted.component(&[0]).iter().all(|&v| v == 0.0));
        let back = lifted.restrict_boundary(8).unwrap();
        assert_eq!(back.comps, a.comps);
    }
}
