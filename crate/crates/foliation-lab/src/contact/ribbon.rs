//! Holonomy along ribbons: the pullback of `alpha` by the reversed
//! characteristic flow is `a_s alpha + b_s dt` with
//! `a' = h a`, `b' = h b + f`. Solved in closed form and by RK4.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use super::{contact_sign, ContactSign};
use crate::error::{LabError, Result};
use crate::fields::{FormField, ModelManifold};
use crate::numeric::{integrate, linspace, rk4};

/// Coefficients `h_s`, `f_s` along one flow line.
pub trait CoefficientPath: Sync {
    fn h(&self, s: f64) -> f64;
    fn f(&self, s: f64) -> f64;
    /// `int_0^s h`.
    fn h_integral(&self, s: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantCoefficients {
    pub h: f64,
    pub f: f64,
}

impl CoefficientPath for ConstantCoefficients {
    fn h(&self, _: f64) -> f64 {
        self.h
    }
    fn f(&self, _: f64) -> f64 {
        self.f
    }
    fn h_integral(&self, s: f64) -> f64 {
        self.h * s
    }
}

/// `h = h0 + sum c sin(w s + p)`, `f = floor + sum d (1 + sin(w s + p))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FourierCoefficients {
    pub h0: f64,
    pub h_modes: Vec<[f64; 3]>,
    pub f_floor: f64,
    pub f_modes: Vec<[f64; 3]>,
}

impl CoefficientPath for FourierCoefficients {
    fn h(&self, s: f64) -> f64 {
        self.h0 + self.h_modes.iter().map(|[c, w, p]| c * (w * s + p).sin()).sum::<f64>()
    }
    fn f(&self, s: f64) -> f64 {
        self.f_floor + self.f_modes.iter().map(|[d, w, p]| d * (1.0 + (w * s + p).sin())).sum::<f64>()
    }
    fn h_integral(&self, s: f64) -> f64 {
        self.h0 * s + self.h_modes.iter().map(|[c, w, p]| c / w * (p.cos() - (w * s + p).cos())).sum::<f64>()
    }
}

/// Smooth random coefficients with `f >= 0.1`. With `nonpositive`, `h <= -0.1`.
pub fn random_coefficients<R: Rng>(rng: &mut R, nonpositive: bool) -> FourierCoefficients {
    let h0 = if nonpositive { rng.gen_range(-1.0..-0.4) } else { rng.gen_range(-0.5..0.5) };
    let h_modes = (0..3)
        .map(|_| [rng.gen_range(-0.1..0.1), rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)])
        .collect();
    let f_modes = (0..3)
        .map(|_| [rng.gen_range(0.0..0.4), rng.gen_range(0.5..3.0), rng.gen_range(0.0..std::f64::consts::TAU)])
        .collect();
    FourierCoefficients { h0, h_modes, f_floor: 0.1, f_modes }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomySeries {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl HolonomySeries {
    /// `int_0^s a^{-1} f = b / a`.
    pub fn accumulated(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b / a).collect()
    }
}

/// `a_s = exp(H(s))`, `b_s = a_s int_0^s exp(-H) f` with the integral by
/// composite Gauss–Legendre between consecutive samples.
pub fn holonomy_closed_form(path: &dyn CoefficientPath, s_max: f64, n: usize) -> HolonomySeries {
    let s = linspace(0.0, s_max, n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (i, &si) in s.iter().enumerate() {
        if i > 0 {
            acc += integrate(|x| (-path.h_integral(x)).exp() * path.f(x), s[i - 1], si, 2);
        }
        let ai = path.h_integral(si).exp();
        a.push(ai);
        b.push(ai * acc);
    }
    HolonomySeries { s, a, b }
}

/// RK4 on `(a, b)` with `substeps` steps between output samples.
pub fn holonomy_ode(path: &dyn CoefficientPath, s_max: f64, n: usize, substeps: usize) -> HolonomySeries {
    let states = rk4(
        |s, y| {
            let h = path.h(s);
            vec![h * y[0], h * y[1] + path.f(s)]
        },
        &[1.0, 0.0],
        0.0,
        s_max,
        (n - 1) * substeps,
    );
    let s = linspace(0.0, s_max, n);
    let a = (0..n).map(|i| states[i * substeps][0]).collect();
    let b = (0..n).map(|i| states[i * substeps][1]).collect();
    HolonomySeries { s, a, b }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyComparison {
    pub closed: HolonomySeries,
    pub ode: HolonomySeries,
    pub max_err_a: f64,
    pub max_err_b: f64,
    /// Samples where `h <= 0` on all of `[0, s]`, at which the growth bound is tested.
    pub growth_checked: usize,
    /// `min (int a^{-1} f - (min f) s)` over those samples.
    pub growth_min_margin: f64,
    pub growth_holds: bool,
    pub pass: bool,
}

pub const HOLONOMY_TOL: f64 = 1e-6;
pub const RIBBON_SAMPLES: usize = 501;
pub const RIBBON_SUBSTEPS: usize = 10;

/// Compare the two solutions and test the growth bound on the prefix where `h <= 0`.
pub fn ribbon_holonomy(path: &dyn CoefficientPath, s_max: f64) -> Result<HolonomyComparison> {
    let n = RIBBON_SAMPLES;
    let closed = holonomy_closed_form(path, s_max, n);
    let fine = linspace(0.0, s_max, (n - 1) * RIBBON_SUBSTEPS + 1);
    for &s in &fine {
        if !(path.f(s) > 0.0) {
            return Err(LabError::DegenerateOrbit(format!("f = {:.3e} <= 0 at s = {s}", path.f(s))));
        }
    }
    let ode = holonomy_ode(path, s_max, n, RIBBON_SUBSTEPS);
    let max_err_a = closed.a.iter().zip(&ode.a).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let max_err_b = closed.b.iter().zip(&ode.b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let acc = closed.accumulated();
    let (mut min_f, mut nonpositive) = (f64::INFINITY, true);
    let (mut growth_checked, mut growth_min_margin) = (0, f64::INFINITY);
    for (i, &s) in closed.s.iter().enumerate() {
        let lo = i.saturating_sub(1) * RIBBON_SUBSTEPS;
        for &x in &fine[lo..=i * RIBBON_SUBSTEPS] {
            min_f = min_f.min(path.f(x));
            nonpositive &= path.h(x) <= 0.0;
        }
        if !nonpositive {
            break;
        }
        growth_checked += 1;
        growth_min_margin = growth_min_margin.min(acc[i] - min_f * s);
    }
    let growth_holds = growth_checked == 0 || growth_min_margin >= -1e-12 * (1.0 + s_max);
    let pass = max_err_a <= HOLONOMY_TOL && max_err_b <= HOLONOMY_TOL && growth_holds;
    Ok(HolonomyComparison { closed, ode, max_err_a, max_err_b, growth_checked, growth_min_margin, growth_holds, pass })
}

/// Annulus model on `S^1_theta x [r0, r1]_r x [0, 1]_t`:
/// `lambda_t = dr - (r^2 - rho(t)^2) dtheta`, `u_t = c`, `rho = rho0 + kappa t`.
/// Each slice has one nondegenerate closed characteristic at `r = rho(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusModel {
    pub r0: f64,
    pub r1: f64,
    pub rho0: f64,
    pub kappa: f64,
    pub c: f64,
}

impl Default for AnnulusModel {
    fn default() -> Self {
        AnnulusModel { r0: 0.5, r1: 1.0, rho0: 0.7, kappa: 0.1, c: 1.0 }
    }
}

impl AnnulusModel {
    pub fn rho(&self, t: f64) -> f64 {
        self.rho0 + self.kappa * t
    }
    pub fn g(&self, r: f64, t: f64) -> f64 {
        r * r - self.rho(t).powi(2)
    }
    pub fn h(&self, r: f64) -> f64 {
        -2.0 * r
    }
    pub fn f(&self, r: f64, t: f64) -> f64 {
        2.0 * self.c * r + 2.0 * self.rho(t) * self.kappa
    }

    pub fn validate(&self) -> Result<()> {
        let inside = |rho: f64| rho > self.r0 && rho < self.r1;
        let ok = self.r0 > 0.0 && self.c > 0.0 && self.kappa >= 0.0 && inside(self.rho(0.0)) && inside(self.rho(1.0));
        if !ok {
            return Err(LabError::InvalidModel("closed orbit must sit strictly inside the annulus".into()));
        }
        Ok(())
    }

    pub fn manifold(&self, n: [usize; 3]) -> Result<ModelManifold> {
        ModelManifold::annulus_product(n, (self.r0, self.r1), (0.0, 1.0))
    }

    /// `alpha = lambda_t + u_t dt` sampled on the grid.
    pub fn form(&self, m: Arc<ModelManifold>) -> FormField {
        FormField::from_fn(m, 1, |c| vec![-self.g(c[1], c[2]), 1.0, self.c])
    }

    /// Flow line of the reversed characteristic field through radius `r` on slice `t`.
    pub fn line(&self, r: f64, t: f64) -> AnnulusLine {
        let rho = self.rho(t);
        AnnulusLine { model: *self, t, rho, k: (r - rho) / (r + rho) }
    }
}

/// `r(s) = rho (1 + k e^{-2 rho s}) / (1 - k e^{-2 rho s})` solves `r' = rho^2 - r^2`.
#[derive(Debug, Clone, Copy)]
pub struct AnnulusLine {
    model: AnnulusModel,
    t: f64,
    rho: f64,
    k: f64,
}

impl AnnulusLine {
    pub fn r(&self, s: f64) -> f64 {
        let e = self.k * (-2.0 * self.rho * s).exp();
        self.rho * (1.0 + e) / (1.0 - e)
    }
    /// Closed-form `a_s`.
    pub fn a(&self, s: f64) -> f64 {
        (-self.h_integral(s)).exp().recip()
    }
    /// Closed-form `int_0^s a^{-1} f`.
    pub fn accumulated(&self, s: f64) -> f64 {
        let (rho, k) = (self.rho, self.k);
        let j = ((2.0 * rho * s).exp() - 1.0) / (2.0 * rho) - 2.0 * k * s
            + k * k * (1.0 - (-2.0 * rho * s).exp()) / (2.0 * rho);
        let j = j / (1.0 - k).powi(2);
        self.model.c * (self.a(s).recip() - 1.0) + 2.0 * rho * self.model.kappa * j
    }
}

impl CoefficientPath for AnnulusLine {
    fn h(&self, s: f64) -> f64 {
        self.model.h(self.r(s))
    }
    fn f(&self, s: f64) -> f64 {
        self.model.f(self.r(s), self.t)
    }
    fn h_integral(&self, s: f64) -> f64 {
        let e = self.k * (-2.0 * self.rho * s).exp();
        -2.0 * (self.rho * s + (1.0 - e).ln() - (1.0 - self.k).ln())
    }
}

/// Sampled contact form on `A x I` with the reversed characteristic field and
/// the coefficients `i_X d lambda_t = h lambda_t`, `i_X omega_t = -f lambda_t`.
#[derive(Debug, Clone)]
pub struct RibbonState {
    pub alpha: FormField,
    /// `(X^theta, X^r)` at each sample.
    pub x: Vec<[f64; 2]>,
    pub h: Vec<f64>,
    pub f: Vec<f64>,
    pub contact: ContactSign,
    /// `max |f - (X.u - d_t lambda(X) - u h)|`.
    pub f_identity_defect: f64,
}

pub const SYSTEM_DET_TOL: f64 = 1e-10;

impl RibbonState {
    /// `alpha` on a grid with axes `(theta, r, t)`.
    pub fn from_form(alpha: FormField) -> Result<Self> {
        let m = alpha.manifold.clone();
        if alpha.degree != 1 || m.dim() != 3 {
            return Err(LabError::GridMismatch("ribbon state needs a 1-form on A x I".into()));
        }
        let contact = contact_sign(&alpha)?;
        let da = alpha.exterior_derivative()?;
        let w = alpha.wedge(&da)?;
        let top = w.top_coefficient()?;
        let d_lambda = da.component(&[0, 1]);
        let du_theta = crate::fields::deriv::partial(&m, 0, &alpha.comps[2]);
        let du_r = crate::fields::deriv::partial(&m, 1, &alpha.comps[2]);
        let dt_p = crate::fields::deriv::partial(&m, 2, &alpha.comps[0]);
        let dt_q = crate::fields::deriv::partial(&m, 2, &alpha.comps[1]);
        let n = m.len();
        let (mut x, mut h, mut f) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
        let mut f_identity_defect: f64 = 0.0;
        for p in 0..n {
            let (pp, q, u) = (alpha.comps[0][p], alpha.comps[1][p], alpha.comps[2][p]);
            // lambda(X) = 0 and dA(lambda#, X) = |lambda|^2 fix X = (-q, p)
            let det = pp * pp + q * q;
            if det < SYSTEM_DET_TOL {
                return Err(LabError::Degenerate { index: p, norm: det.sqrt() });
            }
            let sol = [-q, pp];
            let hp = -d_lambda[p];
            let fp = top[p];
            if !(fp > 0.0) {
                return Err(LabError::DegenerateOrbit(format!("f = {fp:.3e} <= 0 at sample {p}")));
            }
            let xu = sol[0] * du_theta[p] + sol[1] * du_r[p];
            let dtl = sol[0] * dt_p[p] + sol[1] * dt_q[p];
            f_identity_defect = f_identity_defect.max((fp - (xu - dtl - u * hp)).abs());
            x.push(sol);
            h.push(hp);
            f.push(fp);
        }
        Ok(RibbonState { alpha, x, h, f, contact, f_identity_defect })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusReport {
    pub max_err_a: f64,
    pub max_err_b: f64,
    pub max_err_quadrature: f64,
    /// `max |h_grid - h|`, `max |f_grid - f|`.
    pub field_defect: [f64; 2],
    pub f_identity_defect: f64,
    pub growth_min_margin: f64,
    /// `(s, max angle(xi_s, H))` over the collar samples.
    pub angle_series: Vec<(f64, f64)>,
    pub monotone: bool,
    /// First `s` with the collar angle below `angle_target`.
    pub s_star: Option<f64>,
    pub angle_target: f64,
    pub pass: bool,
}

/// Run both solution methods along every collar flow line of the annulus model.
pub fn annulus_holonomy(model: &AnnulusModel, grid: [usize; 3], collar: f64, s_max: f64) -> Result<AnnulusReport> {
    model.validate()?;
    let m = Arc::new(model.manifold(grid)?);
    let state = RibbonState::from_form(model.form(m.clone()))?;
    let mut field_defect = [0.0f64; 2];
    for p in 0..m.len() {
        let c = m.coords(p);
        field_defect[0] = field_defect[0].max((state.h[p] - model.h(c[1])).abs());
        field_defect[1] = field_defect[1].max((state.f[p] - model.f(c[1], c[2])).abs());
    }
    let n = RIBBON_SAMPLES;
    let angle_target = 0.01;
    let mut angles = vec![0.0f64; n];
    let (mut max_err_a, mut max_err_b, mut max_err_quadrature) = (0.0f64, 0.0f64, 0.0f64);
    let mut growth_min_margin = f64::INFINITY;
    let (rs, ts) = (&m.axes[1], &m.axes[2]);
    for j in 0..rs.n {
        let r = rs.coord(j);
        if r - model.r0 > collar && model.r1 - r > collar {
            continue;
        }
        for l in 0..ts.n {
            let t = ts.coord(l);
            let line = model.line(r, t);
            let rho = model.rho(t);
            let ode = rk4(
                |_, y| {
                    let h = model.h(y[0]);
                    vec![rho * rho - y[0] * y[0], h * y[1], h * y[2] + model.f(y[0], t)]
                },
                &[r, 1.0, 0.0],
                0.0,
                s_max,
                (n - 1) * RIBBON_SUBSTEPS,
            );
            let quad = holonomy_closed_form(&line, s_max, n);
            let mut min_f = f64::INFINITY;
            for i in 0..n {
                let s = quad.s[i];
                let (a, acc) = (line.a(s), line.accumulated(s));
                let y = &ode[i * RIBBON_SUBSTEPS];
                max_err_a = max_err_a.max((a - y[1]).abs());
                max_err_b = max_err_b.max((a * acc - y[2]).abs());
                max_err_quadrature = max_err_quadrature.max((a * acc - quad.b[i]).abs());
                min_f = min_f.min(line.f(s));
                growth_min_margin = growth_min_margin.min(acc - min_f * s);
                let norm_lambda = (model.g(r, t).powi(2) + 1.0).sqrt();
                let angle = (norm_lambda / (model.c + acc)).atan();
                angles[i] = angles[i].max(angle);
            }
        }
    }
    let s = linspace(0.0, s_max, n);
    let monotone = angles.windows(2).all(|w| w[1] <= w[0]);
    let s_star = s.iter().zip(&angles).find(|(_, &a)| a < angle_target).map(|(s, _)| *s);
    let angle_series: Vec<(f64, f64)> = s.into_iter().zip(angles).collect();
    let pass = max_err_a <= HOLONOMY_TOL
        && max_err_b <= HOLONOMY_TOL
        && growth_min_margin >= -1e-12
        && monotone
        && s_star.is_some()
        && state.contact.is_positive();
    Ok(AnnulusReport {
        max_err_a,
        max_err_b,
        max_err_quadrature,
        field_defect,
        f_identity_defect: state.f_identity_defect,
        growth_min_margin,
        angle_series,
        monotone,
        s_star,
        angle_target,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rng;

    #[test]
    fn trivial_coefficients() {
        let c = ribbon_holonomy(&ConstantCoefficients { h: 0.0, f: 1.0 }, 5.0).unwrap();
        for i in 0..c.closed.s.len() {
            assert_eq!(c.closed.a[i], 1.0);
            assert!((c.closed.b[i] - c.closed.s[i]).abs() < 1e-12);
            assert!((c.ode.b[i] - c.ode.s[i]).abs() < 1e-12);
        }
        assert!(c.pass);
    }

    #[test]
    fn constant_decay_matches_elementary_integrals() {
        let cst = 0.7;
        let c = ribbon_holonomy(&ConstantCoefficients { h: -cst, f: 1.0 }, 5.0).unwrap();
        for i in 0..c.closed.s.len() {
            let s = c.closed.s[i];
            let a = (-cst * s).exp();
            let b = (1.0 - (-cst * s).exp()) / cst;
            assert!((c.ode.a[i] - a).abs() < 1e-10 && (c.ode.b[i] - b).abs() < 1e-10);
            assert!((c.closed.a[i] - a).abs() < 1e-12 && (c.closed.b[i] - b).abs() < 1e-10);
        }
        assert_eq!(c.growth_checked, c.closed.s.len());
    }

    #[test]
    fn nonpositive_f_is_degenerate() {
        let r = ribbon_holonomy(&ConstantCoefficients { h: -1.0, f: 0.0 }, 1.0);
        assert!(matches!(r, Err(LabError::DegenerateOrbit(_))));
    }

    #[test]
    fn random_pairs_agree() {
        let mut g = rng(11);
        for i in 0..10 {
            let path = random_coefficients(&mut g, i % 2 == 0);
            let c = ribbon_holonomy(&path, 5.0).unwrap();
            assert!(c.pass, "{} {} {}", c.max_err_a, c.max_err_b, c.growth_min_margin);
            if i % 2 == 0 {
                assert_eq!(c.growth_checked, RIBBON_SAMPLES);
            }
        }
    }

    #[test]
    fn annulus_line_closed_form() {
        let m = AnnulusModel::default();
        let line = m.line(0.55, 0.3);
        assert!((line.r(0.0) - 0.55).abs() < 1e-14);
        let q = holonomy_closed_form(&line, 3.0, 301);
        for i in 0..q.s.len() {
            let s = q.s[i];
            assert!((q.a[i] - line.a(s)).abs() < 1e-12);
            assert!((q.b[i] - line.a(s) * line.accumulated(s)).abs() < 1e-9);
        }
    }

    #[test]
    fn annulus_state_and_collar_convergence() {
        let m = AnnulusModel::default();
        let rep = annulus_holonomy(&m, [8, 17, 9], 0.1, 5.0).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.field_defect[0] < 1e-10 && rep.field_defect[1] < 1e-10);
        assert!(rep.f_identity_defect < 1e-10);
        assert!(rep.s_star.unwrap() < 5.0);
    }

    #[test]
    fn singular_characteristic_foliation_rejected() {
        let m = Arc::new(AnnulusModel::default().manifold([8, 9, 9]).unwrap());
        let a = FormField::from_fn(m, 1, |c| vec![0.0, 0.0, 1.0 + c[1]]);
        assert!(RibbonState::from_form(a).is_err());
    }
}
