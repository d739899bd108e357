//! Algebraic identities of the discrete operators, measured under refinement.

use std::sync::Arc;

use serde::Serialize;

use super::form::{FormField, LineField};
use super::grid::ModelManifold;
use crate::error::{LabError, Result};
use crate::numeric::fit_slope;

/// `max |d d w| <= DD_CONSTANT h^2` at every level.
pub const DD_CONSTANT: f64 = 1.0;
/// `i_X i_X w` vanishes in exact arithmetic; two rounded products remain.
pub const CONTRACTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityLevel {
    pub n: usize,
    pub h: f64,
    /// `max |d d f|` for a function and `max |d d a|` for a 1-form.
    pub dd_function: f64,
    pub dd_one_form: f64,
    /// `max |d f - df_exact|`: truncation error of the derivative itself.
    pub d_error: f64,
    /// `max |a ^ b + b ^ a|` over 1-forms and `max |a ^ w - w ^ a|` for a 2-form `w`.
    pub wedge_defect: f64,
    /// `max |i_X i_X w|`.
    pub contraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub levels: Vec<IdentityLevel>,
    /// Least-squares slope of `log d_error` against `log h`.
    pub d_order: f64,
    /// `max dd / h^2` over the levels.
    pub dd_constant: f64,
    pub dd_pass: bool,
    pub wedge_exact: bool,
    pub contraction_pass: bool,
    pub pass: bool,
}

fn f(c: &[f64]) -> f64 {
    (2.0 * c[0] + c[1]).sin() * (3.0 * c[2]).cos() + c[0] * c[0] * c[1]
}

fn df(c: &[f64]) -> [f64; 3] {
    let (s, co) = ((2.0 * c[0] + c[1]).sin(), (2.0 * c[0] + c[1]).cos());
    let (cz, sz) = ((3.0 * c[2]).cos(), (3.0 * c[2]).sin());
    [2.0 * co * cz + 2.0 * c[0] * c[1], co * cz + c[0] * c[0], -3.0 * s * sz]
}

fn level(n: usize) -> Result<IdentityLevel> {
    let m = Arc::new(ModelManifold::cube(n)?);
    let h = m.axes[0].spacing();
    let fun = FormField::scalar_from_fn(m.clone(), f);
    let d1 = fun.exterior_derivative()?;
    let dd_function = d1.exterior_derivative()?.max_abs();
    let mut d_error = 0.0f64;
    for p in 0..m.len() {
        let exact = df(&m.coords(p));
        for (k, e) in exact.iter().enumerate() {
            d_error = d_error.max((d1.comps[k][p] - e).abs());
        }
    }
    let a = FormField::from_fn(m.clone(), 1, |c| vec![c[1] * c[2].sin(), (c[0] - c[2]).cos(), c[0] * c[1] * c[2]]);
    let b = FormField::from_fn(m.clone(), 1, |c| vec![1.0 + c[2], (3.0 * c[0]).sin(), c[1] * c[1]]);
    let dd_one_form = a.exterior_derivative()?.exterior_derivative()?.max_abs();
    let w = a.exterior_derivative()?;
    let wedge_defect = a.wedge(&b)?.add(&b.wedge(&a)?)?.max_abs().max(a.wedge(&w)?.sub(&w.wedge(&a)?)?.max_abs());
    let x = LineField::from_fn(m.clone(), |c| vec![1.0 + c[1], c[0] - 2.0, 0.5 * c[2] + 0.3])?;
    let contraction = x.interior_product(&x.interior_product(&w)?)?.max_abs();
    Ok(IdentityLevel { n, h, dd_function, dd_one_form, d_error, wedge_defect, contraction })
}

/// Measure `d d = 0`, wedge antisymmetry and `i_X i_X = 0` on cube grids of
/// the given sizes, coarse to fine.
pub fn operator_identities(sizes: &[usize]) -> Result<IdentityReport> {
    if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Precondition("need at least two increasing grid sizes".into()));
    }
    let levels = sizes.iter().map(|&n| level(n)).collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = levels.iter().map(|l| l.h.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.d_error.ln()).collect();
    let d_order = fit_slope(&xs, &ys);
    let dd_constant = levels.iter().map(|l| l.dd_function.max(l.dd_one_form) / (l.h * l.h)).fold(0.0, f64::max);
    let dd_pass = dd_constant <= DD_CONSTANT && d_order >= 2.0;
    let wedge_exact = levels.iter().all(|l| l.wedge_defect == 0.0);
    let contraction_pass = levels.iter().all(|l| l.contraction <= CONTRACTION_TOL);
    let pass = dd_pass && wedge_exact && contraction_pass;
    Ok(IdentityReport { levels, d_order, dd_constant, dd_pass, wedge_exact, contraction_pass, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities_hold_under_refinement() {
        let r = operator_identities(&[12, 24, 48]).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.d_order > 3.0, "fourth-order stencils, got {}", r.d_order);
    }

    #[test]
    fn sizes_must_increase() {
        assert!(operator_identities(&[16]).is_err());
        assert!(operator_identities(&[16, 16]).is_err());
    }
}
