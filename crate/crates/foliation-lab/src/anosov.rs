//! Suspension Anosov flows of hyperbolic toral automorphisms: defining
//! pairs, transport of plane fields towards the weak unstable bundle,
//! bicontact structures and linear Liouville pairs.
//!
//! Chart points are `(t, y1, y2)` with `t` in `[0, 1]`; the suspension is
//! `R x T^2 / (s + 1, y) ~ (s, A y)` and the flow is `phi_t(s, y) = (s + t, y)`.
//! Covectors are given in the eigen-coframe `(dt, dx_s, dx_u)`.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{
    coframe, covector_angle, plane_field_angle, CovectorField, Flow, FnCovector, FormField, LineField,
    MappingTorusData, ModelManifold, PlaneField,
};
use crate::numeric::{fit_slope, Step};

/// Suspension flow of `A` on its mapping torus, generated by `X = d/dt`.
#[derive(Debug, Clone)]
pub struct SuspensionAnosov {
    pub data: MappingTorusData,
    pub manifold: Arc<ModelManifold>,
}

impl SuspensionAnosov {
    pub fn new(a: [[i64; 2]; 2], n_t: usize, n_fiber: usize) -> Result<Self> {
        let manifold = Arc::new(ModelManifold::mapping_torus(a, n_t, n_fiber)?);
        let data = manifold.mapping_torus_data().expect("mapping torus").clone();
        Ok(SuspensionAnosov { data, manifold })
    }

    pub fn lambda(&self) -> f64 {
        self.data.lambda
    }

    pub fn log_lambda(&self) -> f64 {
        self.data.log_lambda()
    }

    /// `max |A e_u - lambda e_u|, |A e_s - e_s / lambda|`.
    pub fn eigen_residual(&self) -> f64 {
        let a = self.data.a;
        let apply = |v: [f64; 2]| {
            [
                a[0][0] as f64 * v[0] + a[0][1] as f64 * v[1],
                a[1][0] as f64 * v[0] + a[1][1] as f64 * v[1],
            ]
        };
        let (u, s) = (apply(self.data.e_u), apply(self.data.e_s));
        let mut r = 0.0f64;
        for i in 0..2 {
            r = r.max((u[i] - self.lambda() * self.data.e_u[i]).abs());
            r = r.max((s[i] - self.data.e_s[i] / self.lambda()).abs());
        }
        r
    }

    pub fn generator(&self) -> LineField {
        LineField::from_fn(self.manifold.clone(), |_| vec![1.0, 0.0, 0.0]).expect("nonzero generator")
    }

    /// Representative in the chart of the point `(t, y)` of the cover:
    /// `(s, A^k y)` with `t = s + k`, `s` in `[0, 1)`.
    pub fn reduce(&self, t: f64, y: [f64; 2]) -> (f64, [f64; 2], i64) {
        let k = t.floor();
        let s = t - k;
        let k = k as i64;
        (s, self.data.act(y, k), k)
    }

    /// `phi_t(p)` in the chart.
    pub fn flow_point(&self, p: &[f64], t: f64) -> Vec<f64> {
        let (s, y, _) = self.reduce(p[0] + t, [p[1], p[2]]);
        vec![s, y[0], y[1]]
    }

    /// `alpha_s = lambda^-t dx_s` as a covector field.
    pub fn alpha_s_field(&self) -> Arc<dyn CovectorField> {
        let lam = self.lambda();
        Arc::new(FnCovector(move |p: &[f64]| vec![0.0, lam.powf(-p[0]), 0.0]))
    }

    /// `alpha_u = lambda^t dx_u` as a covector field.
    pub fn alpha_u_field(&self) -> Arc<dyn CovectorField> {
        let lam = self.lambda();
        Arc::new(FnCovector(move |p: &[f64]| vec![0.0, 0.0, lam.powf(p[0])]))
    }

    /// `E^wu = ker alpha_s`.
    pub fn weak_unstable(&self) -> Result<PlaneField> {
        PlaneField::sample(self.manifold.clone(), self.alpha_s_field().as_ref())
    }

    /// `E^ws = ker alpha_u`.
    pub fn weak_stable(&self) -> Result<PlaneField> {
        PlaneField::sample(self.manifold.clone(), self.alpha_u_field().as_ref())
    }

    /// Angle between the line `E^ss` and the plane `ker c` at chart point `p`,
    /// in the model metric.
    pub fn strong_stable_angle(&self, c: &[f64], p: &[f64]) -> f64 {
        let scale = self.manifold.coframe_scale(p);
        let v: Vec<f64> = c.iter().zip(&scale).map(|(a, b)| a * b).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (v[1].abs() / norm).clamp(0.0, 1.0).asin()
    }
}

impl Flow for SuspensionAnosov {
    fn pullback_inverse(&self, field: &dyn CovectorField, p: &[f64], t: f64) -> Vec<f64> {
        let (s, y, k) = self.reduce(p[0] - t, [p[1], p[2]]);
        let c = field.covector(&[s, y[0], y[1]]);
        let lk = self.lambda().powi(k as i32);
        vec![c[0], c[1] / lk, c[2] * lk]
    }
}

/// The defining pair `(alpha_s, alpha_u)` and expansion rates.
#[derive(Debug, Clone)]
pub struct DefiningPair {
    pub alpha_s: FormField,
    pub alpha_u: FormField,
    pub r_s: FormField,
    pub r_u: FormField,
    pub log_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefiningPairReport {
    pub r_s: f64,
    pub r_u: f64,
    /// `max |alpha_s(X)|, |alpha_u(X)|`.
    pub annihilates_flow: f64,
    /// `max |alpha_s(e_u)|, |alpha_u(e_s)|`: kernels are the weak bundles.
    pub kernel_defect: f64,
    /// Relative defect of `L_X alpha = r alpha` by centred differences of the pullback.
    pub lie_defect: f64,
    /// Same identity through `i_X d alpha + d i_X alpha` on the grid;
    /// limited by the t-resolution, reported but not gated.
    pub cartan_defect: f64,
    pub gluing_defect: f64,
    pub pass: bool,
}

pub const LIE_STEP: f64 = 1e-4;

pub fn defining_pair(flow: &SuspensionAnosov) -> Result<(DefiningPair, DefiningPairReport)> {
    let m = flow.manifold.clone();
    let lam = flow.lambda();
    let ll = flow.log_lambda();
    let alpha_s = FormField::from_fn(m.clone(), 1, |c| vec![0.0, lam.powf(-c[0]), 0.0]);
    let alpha_u = FormField::from_fn(m.clone(), 1, |c| vec![0.0, 0.0, lam.powf(c[0])]);
    let r_s = FormField::scalar_from_fn(m.clone(), |_| -ll);
    let r_u = FormField::scalar_from_fn(m.clone(), |_| ll);
    let x = flow.generator();

    let annihilates_flow =
        x.interior_product(&alpha_s)?.max_abs().max(x.interior_product(&alpha_u)?.max_abs());
    let kernel_defect = alpha_s.comps[0]
        .iter()
        .chain(&alpha_s.comps[2])
        .chain(&alpha_u.comps[0])
        .chain(&alpha_u.comps[1])
        .fold(0.0f64, |a, v| a.max(v.abs()));

    let mut lie_defect = 0.0f64;
    for (field, rate) in [(flow.alpha_s_field(), -ll), (flow.alpha_u_field(), ll)] {
        for p in 0..m.len() {
            let c = m.coords(p);
            let fwd = flow.pullback_inverse(field.as_ref(), &c, -LIE_STEP);
            let bwd = flow.pullback_inverse(field.as_ref(), &c, LIE_STEP);
            let here = field.covector(&c);
            let norm = here.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..3 {
                let lie = (fwd[j] - bwd[j]) / (2.0 * LIE_STEP);
                lie_defect = lie_defect.max((lie - rate * here[j]).abs() / norm);
            }
        }
    }

    let mut cartan_defect = 0.0f64;
    for (alpha, r) in [(&alpha_s, &r_s), (&alpha_u, &r_u)] {
        let lie = x
            .interior_product(&alpha.exterior_derivative()?)?
            .add(&x.interior_product(alpha)?.exterior_derivative()?)?;
        let diff = lie.sub(&alpha.mul_scalar(r)?)?;
        for p in 0..m.len() {
            let norm = alpha.at(p).iter().map(|v| v * v).sum::<f64>().sqrt();
            let d = diff.at(p).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            cartan_defect = cartan_defect.max(d / norm);
        }
    }

    let gluing_defect = alpha_s.gluing_defect()?.max(alpha_u.gluing_defect()?);
    let pass = annihilates_flow <= 1e-10
        && kernel_defect <= 1e-10
        && lie_defect <= 1e-6
        && gluing_defect <= 1e-10
        && -ll < 0.0
        && ll > 0.0;
    let report = DefiningPairReport {
        r_s: -ll,
        r_u: ll,
        annihilates_flow,
        kernel_defect,
        lie_defect,
        cartan_defect,
        gluing_defect,
        pass,
    };
    Ok((DefiningPair { alpha_s, alpha_u, r_s, r_u, log_lambda: ll }, report))
}

/// Multiplicative cocycle `R_s^t(p)` with `(phi_t)^* alpha_s = R_s^t alpha_s`.
pub fn stable_cocycle(flow: &SuspensionAnosov, p: &[f64], t: f64) -> f64 {
    let field = flow.alpha_s_field();
    let pulled = flow.pullback_inverse(field.as_ref(), p, -t);
    pulled[1] / field.covector(p)[1]
}

/// A plane field `ker(alpha_s + f alpha_u + g dt)` whose coefficients are
/// glued across the fibre identification: `f(t, y) = (1 - c(t)) F(y) + c(t) F(A y)`
/// with `c` a flat quintic step, and likewise `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltField {
    pub data: MappingTorusData,
    pub f_modes: Vec<FourierMode>,
    pub g_modes: Vec<FourierMode>,
}

/// `amp * sin(2 pi (k . y) + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierMode {
    pub k: [i64; 2],
    pub amp: f64,
    pub phase: f64,
}

fn eval_modes(modes: &[FourierMode], y: [f64; 2]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    modes
        .iter()
        .map(|m| m.amp * (tau * (m.k[0] as f64 * y[0] + m.k[1] as f64 * y[1]) + m.phase).sin())
        .sum()
}

impl TiltField {
    /// Seeded random tilt with `sup |f|, sup |g| <= amplitude`.
    pub fn random(data: &MappingTorusData, seed: u64, amplitude: f64) -> Self {
        let mut rng = crate::numeric::rng(seed);
        let modes = |rng: &mut rand_chacha::ChaCha8Rng| {
            let n = rng.gen_range(1..=3);
            let raw: Vec<(f64, [i64; 2], f64)> = (0..n)
                .map(|_| {
                    (
                        rng.gen_range(0.2..1.0),
                        [rng.gen_range(-2..=2), rng.gen_range(-2..=2)],
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let total: f64 = raw.iter().map(|r| r.0).sum();
            raw.into_iter()
                .map(|(a, k, phase)| FourierMode { k, amp: amplitude * a / total, phase })
                .collect::<Vec<_>>()
        };
        let f_modes = modes(&mut rng);
        let g_modes = modes(&mut rng);
        TiltField { data: data.clone(), f_modes, g_modes }
    }

    fn blended(&self, modes: &[FourierMode], p: &[f64]) -> f64 {
        let c = Step::new(0.0, 1.0).value(p[0]);
        let y = [p[1], p[2]];
        let ay = self.data.act(y, 1);
        (1.0 - c) * eval_modes(modes, y) + c * eval_modes(modes, ay)
    }

    pub fn f(&self, p: &[f64]) -> f64 {
        self.blended(&self.f_modes, p)
    }

    pub fn g(&self, p: &[f64]) -> f64 {
        self.blended(&self.g_modes, p)
    }
}

impl CovectorField for TiltField {
    fn covector(&self, p: &[f64]) -> Vec<f64> {
        let lt = self.data.lambda.powf(p[0]);
        vec![self.g(p), 1.0 / lt, self.f(p) * lt]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySeries {
    pub times: Vec<f64>,
    /// `sup_p angle(eta_t, E^wu)` at each time.
    pub angles: Vec<f64>,
    /// `angle_0 * exp(-0.9 log(lambda) t)`.
    pub bound: Vec<f64>,
    pub burn_in: f64,
    /// Least-squares decay rate of `log angle` over `t >= burn_in`; `None`
    /// when the series vanishes identically.
    pub fitted_rate: Option<f64>,
    pub monotone_after_burn_in: bool,
    pub envelope_holds: bool,
    pub min_transversality: f64,
}

pub const DECAY_FACTOR: f64 = 0.9;

/// Push `eta0` forward by the flow and record its distance to `E^wu`.
pub fn lemma_flow_convergence(
    flow: &Arc<SuspensionAnosov>,
    eta0: Arc<dyn CovectorField>,
    t_max: f64,
    n_steps: usize,
) -> Result<DecaySeries> {
    let m = flow.manifold.clone();
    let mut min_transversality = f64::INFINITY;
    for p in 0..m.len() {
        let c = m.coords(p);
        min_transversality = min_transversality.min(flow.strong_stable_angle(&eta0.covector(&c), &c));
    }
    if min_transversality < 1e-3 {
        return Err(LabError::Precondition(format!(
            "initial plane field not transverse to E^ss (angle {min_transversality:.3e})"
        )));
    }
    let wu = flow.weak_unstable()?;
    let dyn_flow: Arc<dyn Flow> = flow.clone();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut angles = Vec::with_capacity(n_steps + 1);
    for i in 0..=n_steps {
        let t = t_max * i as f64 / n_steps as f64;
        let eta_t = crate::fields::flow_pushforward_plane(dyn_flow.clone(), eta0.clone(), t, m.clone())?;
        let a = plane_field_angle(&eta_t, &wu)?;
        times.push(t);
        angles.push(a.max_abs());
    }
    Ok(summarize_decay(times, angles, flow.log_lambda(), 1.0, min_transversality))
}

fn summarize_decay(times: Vec<f64>, angles: Vec<f64>, log_lambda: f64, burn_in: f64, min_tr: f64) -> DecaySeries {
    let rate = DECAY_FACTOR * log_lambda;
    let a0 = angles[0];
    let bound: Vec<f64> = times.iter().map(|t| a0 * (-rate * t).exp()).collect();
    let late: Vec<usize> = (0..times.len()).filter(|&i| times[i] >= burn_in).collect();
    let monotone_after_burn_in = late.windows(2).all(|w| angles[w[1]] <= angles[w[0]]);
    let envelope_holds = late.iter().all(|&i| angles[i] <= bound[i]);
    let fitted_rate = if late.iter().all(|&i| angles[i] > 0.0) && late.len() >= 2 {
        let xs: Vec<f64> = late.iter().map(|&i| times[i]).collect();
        let ys: Vec<f64> = late.iter().map(|&i| angles[i].ln()).collect();
        Some(-fit_slope(&xs, &ys))
    } else {
        None
    };
    DecaySeries {
        times,
        angles,
        bound,
        burn_in,
        fitted_rate,
        monotone_after_burn_in,
        envelope_holds,
        min_transversality: min_tr,
    }
}

/// `sup_p angle(eta_t, eta'_t)` along the flow.
pub fn mutual_convergence(
    flow: &Arc<SuspensionAnosov>,
    a: Arc<dyn CovectorField>,
    b: Arc<dyn CovectorField>,
    t_max: f64,
    n_steps: usize,
) -> Result<DecaySeries> {
    let m = flow.manifold.clone();
    let dyn_flow: Arc<dyn Flow> = flow.clone();
    let mut times = Vec::new();
    let mut angles = Vec::new();
    for i in 0..=n_steps {
        let t = t_max * i as f64 / n_steps as f64;
        let pa = crate::fields::flow_pushforward_plane(dyn_flow.clone(), a.clone(), t, m.clone())?;
        let pb = crate::fields::flow_pushforward_plane(dyn_flow.clone(), b.clone(), t, m.clone())?;
        times.push(t);
        angles.push(plane_field_angle(&pa, &pb)?.max_abs());
    }
    Ok(summarize_decay(times, angles, flow.log_lambda(), 1.0, f64::NAN))
}

/// Transverse contact structures of opposite signs.
#[derive(Debug, Clone)]
pub struct BicontactPair {
    pub delta: f64,
    pub alpha_minus: FormField,
    pub alpha_plus: FormField,
    pub xi_minus: PlaneField,
    pub xi_plus: PlaneField,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitsumatsuEntry {
    pub delta: f64,
    /// `min (alpha_+ ^ d alpha_+) / vol`.
    pub min_plus: f64,
    /// `max (alpha_- ^ d alpha_-) / vol`.
    pub max_minus: f64,
    /// Extremes over samples of `(alpha_+- ^ d alpha_+-) / (+-delta <alpha, beta>)`.
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub min_transverse_angle: f64,
    pub signs_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MitsumatsuReport {
    /// `min <alpha, beta> / vol` and its closed form `2 log(lambda)`.
    pub min_pairing: f64,
    pub max_pairing: f64,
    pub expected_pairing: f64,
    pub entries: Vec<MitsumatsuEntry>,
    /// Least-squares slope of the mean of `(alpha_+ ^ d alpha_+)/vol` against `delta`.
    pub fitted_slope: Option<f64>,
    pub pass: bool,
}

/// `alpha = -alpha_s`, `beta = alpha_u`.
pub fn alpha_beta(pair: &DefiningPair) -> (FormField, FormField) {
    (pair.alpha_s.scale(-1.0), pair.alpha_u.clone())
}

/// `(alpha_-, alpha_+) = (delta beta - alpha, delta beta + alpha)`.
pub fn mitsumatsu_forms(pair: &DefiningPair, delta: f64) -> Result<(FormField, FormField)> {
    let (alpha, beta) = alpha_beta(pair);
    let db = beta.scale(delta);
    Ok((db.sub(&alpha)?, db.add(&alpha)?))
}

/// `<a, b> = a ^ db + b ^ da` as a top form.
pub fn pairing(a: &FormField, b: &FormField) -> Result<FormField> {
    a.wedge(&b.exterior_derivative()?)?.add(&b.wedge(&a.exterior_derivative()?)?)
}

pub fn contact_volume(a: &FormField) -> Result<FormField> {
    a.wedge(&a.exterior_derivative()?)
}

pub fn mitsumatsu_bicontact(pair: &DefiningPair, deltas: &[f64]) -> Result<(Vec<BicontactPair>, MitsumatsuReport)> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(LabError::Precondition("delta sweep must be nonempty and positive".into()));
    }
    let (alpha, beta) = alpha_beta(pair);
    let pr = pairing(&alpha, &beta)?;
    let prc = pr.top_coefficient()?.to_vec();
    let min_pairing = prc.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_pairing = prc.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pairs = Vec::new();
    let mut entries = Vec::new();
    let mut means = Vec::new();
    for &delta in deltas {
        let (am, ap) = mitsumatsu_forms(pair, delta)?;
        let vp = contact_volume(&ap)?;
        let vm = contact_volume(&am)?;
        let (vp, vm) = (vp.top_coefficient()?, vm.top_coefficient()?);
        let min_plus = vp.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_minus = vm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut ratio_min = f64::INFINITY;
        let mut ratio_max = f64::NEG_INFINITY;
        for p in 0..prc.len() {
            for r in [vp[p] / (delta * prc[p]), -vm[p] / (delta * prc[p])] {
                ratio_min = ratio_min.min(r);
                ratio_max = ratio_max.max(r);
            }
        }
        means.push(crate::numeric::pairwise_sum(vp) / vp.len() as f64);
        let xi_minus = PlaneField::new(am.clone())?;
        let xi_plus = PlaneField::new(ap.clone())?;
        let min_transverse_angle = plane_field_angle(&xi_minus, &xi_plus)?
            .comps[0]
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        entries.push(MitsumatsuEntry {
            delta,
            min_plus,
            max_minus,
            ratio_min,
            ratio_max,
            min_transverse_angle,
            signs_ok: min_plus > 0.0 && max_minus < 0.0 && min_transverse_angle > 0.0,
        });
        pairs.push(BicontactPair { delta, alpha_minus: am, alpha_plus: ap, xi_minus, xi_plus });
    }
    let fitted_slope = if deltas.len() >= 2 { Some(fit_slope(deltas, &means)) } else { None };
    let pass = min_pairing > 0.0 && entries.iter().all(|e| e.signs_ok);
    let report = MitsumatsuReport {
        min_pairing,
        max_pairing,
        expected_pairing: 2.0 * pair.log_lambda,
        entries,
        fitted_slope,
        pass,
    };
    Ok((pairs, report))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub delta: f64,
    /// `min (d lambda ^ d lambda) / vol` and its closed form `8 delta log(lambda)`.
    pub min_ratio: f64,
    pub expected_min: f64,
    /// `max |d lambda ^ d lambda - 8 delta dtau ^ alpha ^ d beta| / |8 delta dtau ^ alpha ^ d beta|`.
    pub max_rel_error: f64,
    pub positive: bool,
    pub first_violation: Option<usize>,
    /// On the `tau = 0` slice: `max |d lambda|_M - 2 delta d beta|`.
    pub slice_defect: f64,
    /// On the `tau = 0` slice: `min d beta(d/dt, e_u)`, positivity on `E^wu`.
    pub slice_min_wu: f64,
}

#[derive(Debug, Clone)]
pub struct LiouvillePair {
    pub lambda: FormField,
    pub report: LiouvilleReport,
}

/// `lambda = (1 - tau) alpha_- + (1 + tau) alpha_+` on `[-1, 1] x M`.
pub fn liouville_form(pair: &DefiningPair, delta: f64, thick: Arc<ModelManifold>) -> Result<FormField> {
    let (am, ap) = mitsumatsu_forms(pair, delta)?;
    let one_minus = FormField::scalar_from_fn(thick.clone(), |c| 1.0 - c[0]);
    let one_plus = FormField::scalar_from_fn(thick.clone(), |c| 1.0 + c[0]);
    am.lift(thick.clone())?.mul_scalar(&one_minus)?.add(&ap.lift(thick)?.mul_scalar(&one_plus)?)
}

pub fn liouville_pair(pair: &DefiningPair, delta: f64, n_tau: usize) -> Result<LiouvillePair> {
    let m = pair.alpha_s.manifold.clone();
    let thick = Arc::new(m.thickened(n_tau)?);
    let lambda = liouville_form(pair, delta, thick.clone())?;
    let dl = lambda.exterior_derivative()?;
    let lhs = dl.wedge(&dl)?;
    let (alpha, beta) = alpha_beta(pair);
    let dbeta = beta.exterior_derivative()?;
    let rhs = coframe(thick.clone(), 0)
        .wedge(&alpha.lift(thick.clone())?)?
        .wedge(&dbeta.lift(thick.clone())?)?
        .scale(8.0 * delta);
    let (l, r) = (lhs.top_coefficient()?, rhs.top_coefficient()?);
    let mut max_rel_error = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut first_violation = None;
    for p in 0..l.len() {
        let err = if r[p] != 0.0 { ((l[p] - r[p]) / r[p]).abs() } else { l[p].abs() };
        max_rel_error = max_rel_error.max(err);
        min_ratio = min_ratio.min(l[p]);
        if !(l[p] > 0.0) && first_violation.is_none() {
            first_violation = Some(p);
        }
    }
    let mid = n_tau / 2;
    let slice = dl.restrict_boundary(mid)?;
    let tau_mid = thick.axes[0].coord(mid);
    let mut slice_defect = f64::NAN;
    let mut slice_min_wu = f64::NAN;
    if tau_mid == 0.0 {
        slice_defect = slice.sub(&dbeta.scale(2.0 * delta))?.max_abs();
        slice_min_wu = dbeta.component(&[0, 2]).iter().cloned().fold(f64::INFINITY, f64::min);
    }
    let report = LiouvilleReport {
        delta,
        min_ratio,
        expected_min: 8.0 * delta * pair.log_lambda,
        max_rel_error,
        positive: first_violation.is_none(),
        first_violation,
        slice_defect,
        slice_min_wu,
    };
    if let Some(index) = first_violation {
        return Err(LabError::Positivity { index, value: l[index] });
    }
    Ok(LiouvillePair { lambda, report })
}

/// `sup_p angle` between a covector field and `E^wu` at chart points, computed
/// in closed form from the tilt coefficients: `tan = sqrt(f_t^2 + g_t^2)` with
/// `f_t = lambda^-2t f o phi_-t`, `g_t = lambda^-t g o phi_-t`.
pub fn tilt_angle_closed_form(flow: &SuspensionAnosov, tilt: &TiltField, p: &[f64], t: f64) -> f64 {
    let q = flow.flow_point(p, -t);
    let lam = flow.lambda();
    let ft = lam.powf(-2.0 * t) * tilt.f(&q);
    let gt = lam.powf(-t) * tilt.g(&q);
    (ft * ft + gt * gt).sqrt().atan()
}

/// Angle between two covectors at a chart point in the model metric.
pub fn metric_angle(m: &ModelManifold, p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let s = m.coframe_scale(p);
    let unit = |v: &[f64]| {
        let w: Vec<f64> = v.iter().zip(&s).map(|(x, y)| x * y).collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        w.into_iter().map(|x| x / n).collect::<Vec<_>>()
    };
    covector_angle(&unit(a), &unit(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAT: [[i64; 2]; 2] = [[2, 1], [1, 1]];

    fn cat(n: usize) -> Arc<SuspensionAnosov> {
        Arc::new(SuspensionAnosov::new(CAT, n, n).unwrap())
    }

    #[test]
    fn cat_map_rates() {
        let f = cat(8);
        assert!((f.lambda() - 2.618_033_988_749_895).abs() < 1e-12);
        assert!((f.log_lambda() - 0.962_423_650_119_206_9).abs() < 1e-12);
        assert!(f.eigen_residual() < 1e-12);
        let sq = SuspensionAnosov::new([[5, 3], [3, 2]], 8, 8).unwrap();
        assert!((sq.lambda() - f.lambda() * f.lambda()).abs() < 1e-10);
        assert!(SuspensionAnosov::new([[1, 1], [0, 1]], 8, 8).is_err());
    }

    #[test]
    fn defining_pair_invariants() {
        let f = cat(16);
        let (_, r) = defining_pair(&f).unwrap();
        assert!(r.pass, "{r:?}");
        let (_, fine) = defining_pair(&cat(32)).unwrap();
        assert!(fine.cartan_defect < 1e-6 && fine.cartan_defect < r.cartan_defect / 8.0);
        assert!((r.r_s + f.log_lambda()).abs() < 1e-15);
    }

    #[test]
    fn d_alpha_s_matches_symbolic() {
        let f = cat(32);
        let (pair, _) = defining_pair(&f).unwrap();
        let d = pair.alpha_s.exterior_derivative().unwrap();
        let ll = f.log_lambda();
        let m = &f.manifold;
        for p in 0..m.len() {
            let t = m.coords(p)[0];
            let expect = -ll * f.lambda().powf(-t);
            assert!((d.component(&[0, 1])[p] - expect).abs() < 1e-6);
            assert!(d.component(&[0, 2])[p].abs() < 1e-12);
        }
        let w = pair.alpha_s.wedge(&pair.alpha_u.exterior_derivative().unwrap()).unwrap();
        for v in w.top_coefficient().unwrap() {
            assert!((v + ll).abs() < 1e-6, "alpha_s ^ d alpha_u = -log(lambda) vol");
        }
    }

    #[test]
    fn cocycle_is_multiplicative() {
        let f = cat(8);
        let p = [0.3, 0.2, 0.7];
        for (t, s) in [(0.4, 1.3), (2.5, 0.8), (-1.2, 3.1)] {
            let lhs = stable_cocycle(&f, &p, t + s);
            let rhs = stable_cocycle(&f, &p, t) * stable_cocycle(&f, &f.flow_point(&p, t), s);
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs());
            assert!((lhs - (-f.log_lambda() * (t + s)).exp()).abs() <= 1e-8 * lhs.abs());
        }
    }

    #[test]
    fn weak_bundles_are_invariant() {
        let f = cat(8);
        let flow: Arc<dyn Flow> = f.clone();
        for field in [f.alpha_s_field(), f.alpha_u_field()] {
            let p0 = PlaneField::sample(f.manifold.clone(), field.as_ref()).unwrap();
            for t in [0.0, 0.7, 3.0, -2.2] {
                let pt = crate::fields::flow_pushforward_plane(flow.clone(), field.clone(), t, f.manifold.clone())
                    .unwrap();
                assert!(plane_field_angle(&p0, &pt).unwrap().max_abs() < 1e-12);
            }
        }
    }

    #[test]
    fn semigroup_on_suspension() {
        let f = cat(8);
        let flow: Arc<dyn Flow> = f.clone();
        let tilt: Arc<dyn CovectorField> = Arc::new(TiltField::random(&f.data, 3, 0.4));
        let a = crate::fields::flow_pushforward(
            flow.clone(),
            crate::fields::flow_pushforward(flow.clone(), tilt.clone(), 1.3),
            0.9,
        );
        let pa = PlaneField::sample(f.manifold.clone(), a.as_ref()).unwrap();
        let pb = crate::fields::flow_pushforward_plane(flow, tilt, 2.2, f.manifold.clone()).unwrap();
        assert!(plane_field_angle(&pa, &pb).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn tilt_field_glues() {
        let f = cat(16);
        let tilt = TiltField::random(&f.data, 11, 0.4);
        let form = FormField::from_fn(f.manifold.clone(), 1, |c| tilt.covector(c));
        assert!(form.gluing_defect().unwrap() < 1e-10);
    }

    #[test]
    fn constant_chart_plane_decays_below_envelope() {
        let f = cat(16);
        let eta: Arc<dyn CovectorField> = Arc::new(FnCovector(|_: &[f64]| vec![0.3, 1.0, 0.5]));
        let s = lemma_flow_convergence(&f, eta, 10.0, 20).unwrap();
        let last = *s.angles.last().unwrap();
        assert!(last <= s.angles[0] * (-0.9 * f.log_lambda() * 10.0).exp());
    }

    #[test]
    fn unstable_bundle_stays_put() {
        let f = cat(8);
        let s = lemma_flow_convergence(&f, f.alpha_s_field(), 5.0, 10).unwrap();
        assert!(s.angles.iter().all(|&a| a == 0.0));
        assert_eq!(s.fitted_rate, None);
    }

    #[test]
    fn numeric_decay_matches_closed_form() {
        let f = cat(16);
        let tilt = TiltField::random(&f.data, 5, 0.4);
        let flow: Arc<dyn Flow> = f.clone();
        let field: Arc<dyn CovectorField> = Arc::new(tilt.clone());
        let wu = f.weak_unstable().unwrap();
        for t in [0.0, 1.5, 4.0] {
            let pt = crate::fields::flow_pushforward_plane(flow.clone(), field.clone(), t, f.manifold.clone())
                .unwrap();
            let a = plane_field_angle(&pt, &wu).unwrap();
            for p in (0..f.manifold.len()).step_by(97) {
                let c = f.manifold.coords(p);
                let closed = tilt_angle_closed_form(&f, &tilt, &c, t);
                assert!((a.comps[0][p] - closed).abs() < 1e-10 * (1.0 + closed), "t={t} p={p}");
            }
        }
    }

    #[test]
    fn transversality_gate() {
        let f = cat(8);
        let eta: Arc<dyn CovectorField> = Arc::new(FnCovector(|_: &[f64]| vec![0.0, 0.0, 1.0]));
        assert!(matches!(lemma_flow_convergence(&f, eta, 1.0, 2), Err(LabError::Precondition(_))));
    }

    #[test]
    fn mitsumatsu_signs_and_pairing() {
        let f = cat(32);
        let (pair, _) = defining_pair(&f).unwrap();
        let (_, rep) = mitsumatsu_bicontact(&pair, &[1e-2, 1e-3]).unwrap();
        assert!(rep.pass);
        assert!((rep.min_pairing - 2.0 * f.log_lambda()).abs() < 1e-6);
        let e = &rep.entries[1];
        assert!((e.ratio_min - 1.0).abs() < 0.05 && (e.ratio_max - 1.0).abs() < 0.05);
        assert!(mitsumatsu_bicontact(&pair, &[0.0]).is_err());
    }

    #[test]
    fn liouville_identity_small_grid() {
        let f = cat(32);
        let (pair, _) = defining_pair(&f).unwrap();
        let lp = liouville_pair(&pair, 0.05, 9).unwrap();
        let r = &lp.report;
        assert!(r.max_rel_error <= 1e-8, "{r:?}");
        assert!((r.min_ratio - 8.0 * 0.05 * f.log_lambda()).abs() < 1e-6);
        assert!(r.slice_defect < 1e-12 && r.slice_min_wu > 0.0);
        assert!(matches!(liouville_pair(&pair, 0.0, 9), Err(LabError::Positivity { .. })));
    }
}
