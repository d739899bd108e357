//! Three-stage straightening of a pre-Liouville form in collar normal form
//! `t alpha + gamma + df` on `[1 - eps0, 1] x M` into one restricting to
//! `C alpha` on the boundary.

use std::sync::Arc;

use serde::Serialize;

use super::{evaluate_with_differential, liouville_boundary_check, BoundaryCondition, LiouvilleBoundaryReport, PreLiouvilleReport};
use crate::error::{LabError, Result};
use crate::fields::{Axis, FormField, ManifoldKind, ModelManifold, PlaneField};
use crate::numeric::Step;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CollarGamma {
    Zero,
    /// `gamma = c dy`
    Dy(f64),
    /// `gamma = c dz`
    Dz(f64),
}

/// Parameters of the built-in collar: `M = [-1/2, 1/2]_x x T^2_{y,z}`,
/// `alpha = dz + x dy`, `f = amp * b(t) sin(2 pi z)` with `b` a cutoff
/// vanishing near the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollarSpec {
    pub n_m: usize,
    pub n_t: usize,
    pub eps0: f64,
    pub gamma: CollarGamma,
    pub f_amp: f64,
}

impl Default for CollarSpec {
    fn default() -> Self {
        CollarSpec { n_m: 16, n_t: 33, eps0: 0.2, gamma: CollarGamma::Dy(0.1), f_amp: 0.05 }
    }
}

#[derive(Debug, Clone)]
pub struct CollarModel {
    pub eps0: f64,
    pub thick: Arc<ModelManifold>,
    pub alpha: FormField,
    pub gamma: FormField,
    pub f: FormField,
    pub min_contact: f64,
    pub max_alpha_dgamma: f64,
}

pub const COLLAR_TOL: f64 = 1e-10;

impl CollarModel {
    /// Validate collar data: `f` lives on `[1 - eps0, 1] x M`, `alpha` is a
    /// positive contact form and `alpha ^ d gamma = 0`.
    pub fn new(alpha: FormField, gamma: FormField, f: FormField) -> Result<Self> {
        let thick = f.manifold.clone();
        let m = thick.boundary_factor()?;
        if *alpha.manifold != m || *gamma.manifold != m || f.degree != 0 {
            return Err(LabError::GridMismatch("collar data on inconsistent grids".into()));
        }
        let t_axis = &thick.axes[0];
        if (t_axis.hi - 1.0).abs() > 1e-15 || !(t_axis.lo > 0.0) {
            return Err(LabError::InvalidModel("collar axis must be [1 - eps0, 1] with eps0 < 1".into()));
        }
        let eps0 = t_axis.hi - t_axis.lo;
        let min_contact = alpha
            .wedge(&alpha.exterior_derivative()?)?
            .top_coefficient()?
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if !(min_contact > 0.0) {
            return Err(LabError::Precondition(format!("alpha is not a positive contact form (min {min_contact:.3e})")));
        }
        let max_alpha_dgamma = alpha.wedge(&gamma.exterior_derivative()?)?.max_abs();
        if max_alpha_dgamma > COLLAR_TOL {
            return Err(LabError::Precondition(format!("alpha ^ d gamma = {max_alpha_dgamma:.3e} != 0")));
        }
        Ok(CollarModel { eps0, thick, alpha, gamma, f, min_contact, max_alpha_dgamma })
    }

    pub fn standard(spec: &CollarSpec) -> Result<Self> {
        if !(spec.eps0 > 0.0 && spec.eps0 < 1.0) {
            return Err(LabError::Config(format!("eps0 = {} outside (0, 1)", spec.eps0)));
        }
        let m = Arc::new(ModelManifold::product(
            ManifoldKind::Custom,
            vec![
                Axis::interval("x", -0.5, 0.5, spec.n_m),
                Axis::periodic("y", 0.0, 1.0, spec.n_m),
                Axis::periodic("z", 0.0, 1.0, spec.n_m),
            ],
        )?);
        let thick = Arc::new(m.thickened_with("t", 1.0 - spec.eps0, 1.0, spec.n_t)?);
        let alpha = FormField::from_fn(m.clone(), 1, |c| vec![0.0, c[0], 1.0]);
        let gamma = FormField::from_fn(m, 1, |_| match spec.gamma {
            CollarGamma::Zero => vec![0.0, 0.0, 0.0],
            CollarGamma::Dy(c) => vec![0.0, c, 0.0],
            CollarGamma::Dz(c) => vec![0.0, 0.0, c],
        });
        let e = spec.eps0;
        let bump = Step::new(1.0 - 0.8 * e, 1.0 - 0.6 * e);
        let tau = 2.0 * std::f64::consts::PI;
        let f = FormField::scalar_from_fn(thick, |c| spec.f_amp * (1.0 - bump.value(c[0])) * (tau * c[3]).sin());
        Self::new(alpha, gamma, f)
    }

    /// Boundary condition `ker alpha` on `t = 1`.
    pub fn boundary(&self) -> Result<BoundaryCondition> {
        Ok(BoundaryCondition {
            label: "t=1".into(),
            slice: self.thick.axes[0].n - 1,
            plane: PlaneField::new(self.alpha.clone())?,
            orientation: 1.0,
        })
    }
}

/// The cutoffs `phi0` (1 near `1 - eps0`, 0 on `(1 - eps0/2, 1]`), `phi1`
/// (1 near `1 - eps0/2`, `C` on `(1 - eps0/4, 1]`) and `phi2` (1 near
/// `1 - eps0/4`, 0 near 1), all quintic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StraighteningCutoffs {
    pub c: f64,
    pub step0: (f64, f64),
    pub step1: (f64, f64),
    pub step2: (f64, f64),
    pub max_slope0: f64,
    pub max_slope1: f64,
    pub max_slope2: f64,
}

impl StraighteningCutoffs {
    pub fn new(eps0: f64, c: f64) -> Self {
        let s0 = Step::new(1.0 - 0.95 * eps0, 1.0 - 0.55 * eps0);
        let s1 = Step::new(1.0 - 0.48 * eps0, 1.0 - 0.27 * eps0);
        let s2 = Step::new(1.0 - 0.23 * eps0, 1.0 - 0.02 * eps0);
        StraighteningCutoffs {
            c,
            step0: (s0.a, s0.b),
            step1: (s1.a, s1.b),
            step2: (s2.a, s2.b),
            max_slope0: s0.max_slope(),
            max_slope1: (c - 1.0) * s1.max_slope(),
            max_slope2: s2.max_slope(),
        }
    }
    fn s(p: (f64, f64)) -> Step {
        Step::new(p.0, p.1)
    }
    pub fn phi0(&self, t: f64) -> (f64, f64) {
        let s = Self::s(self.step0);
        (1.0 - s.value(t), -s.deriv(t))
    }
    pub fn phi1(&self, t: f64) -> (f64, f64) {
        let s = Self::s(self.step1);
        (1.0 + (self.c - 1.0) * s.value(t), (self.c - 1.0) * s.deriv(t))
    }
    pub fn phi2(&self, t: f64) -> (f64, f64) {
        let s = Self::s(self.step2);
        (1.0 - s.value(t), -s.deriv(t))
    }
}

#[derive(Debug, Clone)]
pub struct StraighteningStages {
    pub cutoffs: StraighteningCutoffs,
    pub lambda: StageForm,
    pub lambda_half: StageForm,
    pub lambda_three_quarter: StageForm,
    pub lambda_one: StageForm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationSummary {
    pub s: f64,
    pub min_symplectic: f64,
    pub min_pairing: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageReport {
    pub name: String,
    pub end_state: PreLiouvilleReport,
    pub stations: Vec<StationSummary>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StraighteningReport {
    pub c: f64,
    pub c_searched: bool,
    pub eps0: f64,
    pub cutoffs: StraighteningCutoffs,
    pub initial: PreLiouvilleReport,
    pub stages: Vec<StageReport>,
    /// `max |lambda_1|_{t=1} - C alpha|`.
    pub boundary_defect: f64,
    pub boundary: LiouvilleBoundaryReport,
    /// `max |lambda_1/2 - lambda|` where `phi0 = 1, phi0' = 0`.
    pub match_half: f64,
    /// `max |lambda_1 - lambda_3/4|` where `phi2 = 1`.
    pub match_one: f64,
    pub pass: bool,
}

pub const INTERMEDIATE_STATIONS: usize = 9;

#[derive(Clone, Copy)]
struct Active {
    phi0: bool,
    phi1: bool,
    phi2: bool,
}

/// A stage form and its differential. The cutoff profiles are functions of
/// `t` alone, so their `t`-derivatives are taken in closed form; derivatives
/// along `M` and of the exact part come from the grid.
#[derive(Debug, Clone)]
pub struct StageForm {
    pub lambda: FormField,
    pub differential: FormField,
}

impl StageForm {
    fn blend(&self, other: &StageForm, s: f64) -> Result<StageForm> {
        Ok(StageForm {
            lambda: self.lambda.scale(1.0 - s).add(&other.lambda.scale(s))?,
            differential: self.differential.scale(1.0 - s).add(&other.differential.scale(s))?,
        })
    }
}

struct Parts {
    theta: FormField,
    dtheta: FormField,
    dalpha: FormField,
    dgamma: FormField,
}

fn assemble(model: &CollarModel, parts: &Parts, cut: &StraighteningCutoffs, act: Active) -> StageForm {
    let thick = model.thick.clone();
    let block = model.alpha.manifold.len();
    let mut lambda = FormField::zeros(thick.clone(), 1);
    let mut dl = FormField::zeros(thick.clone(), 2);
    let pairs: Vec<(usize, usize)> = vec![(0, 1), (0, 2), (1, 2)];
    for p in 0..thick.len() {
        let t = thick.axes[0].coord(p / block);
        let q = p % block;
        let (f0, d0) = if act.phi0 { cut.phi0(t) } else { (1.0, 0.0) };
        let (f1, d1) = if act.phi1 { cut.phi1(t) } else { (1.0, 0.0) };
        let (f2, d2) = if act.phi2 { cut.phi2(t) } else { (1.0, 0.0) };
        let (a, da) = (t * f1, f1 + t * d1);
        // component 0 is dt; 1.. are the coframe of M
        lambda.comps[0][p] = f0 * parts.theta.comps[0][p] + d0 * model.f.comps[0][p];
        for j in 0..3 {
            lambda.comps[j + 1][p] =
                a * model.alpha.comps[j][q] + f2 * model.gamma.comps[j][q] + f0 * parts.theta.comps[j + 1][p];
            let v = da * model.alpha.comps[j][q] + d2 * model.gamma.comps[j][q]
                + f0 * parts.dtheta.component(&[0, j + 1])[p];
            dl.component_mut(&[0, j + 1])[p] = v;
        }
        for &(i, j) in &pairs {
            let v = a * parts.dalpha.component(&[i, j])[q]
                + f2 * parts.dgamma.component(&[i, j])[q]
                + f0 * parts.dtheta.component(&[i + 1, j + 1])[p];
            dl.component_mut(&[i + 1, j + 1])[p] = v;
        }
    }
    StageForm { lambda, differential: dl }
}

pub fn build_stages(model: &CollarModel, c: f64) -> Result<StraighteningStages> {
    let cutoffs = StraighteningCutoffs::new(model.eps0, c);
    let theta = model.f.exterior_derivative()?;
    let parts = Parts {
        dtheta: theta.exterior_derivative()?,
        theta,
        dalpha: model.alpha.exterior_derivative()?,
        dgamma: model.gamma.exterior_derivative()?,
    };
    let mk = |phi0, phi1, phi2| assemble(model, &parts, &cutoffs, Active { phi0, phi1, phi2 });
    Ok(StraighteningStages {
        cutoffs,
        lambda: mk(false, false, false),
        lambda_half: mk(true, false, false),
        lambda_three_quarter: mk(true, true, false),
        lambda_one: mk(true, true, true),
    })
}

fn run_stage(name: &str, from: &StageForm, to: &StageForm, bc: &[BoundaryCondition]) -> Result<StageReport> {
    let end_state = evaluate_with_differential(&to.differential, bc)?;
    let mut stations = Vec::with_capacity(INTERMEDIATE_STATIONS);
    for k in 1..=INTERMEDIATE_STATIONS {
        let s = k as f64 / (INTERMEDIATE_STATIONS + 1) as f64;
        let r = evaluate_with_differential(&from.blend(to, s)?.differential, bc)?;
        stations.push(StationSummary {
            s,
            min_symplectic: r.min_symplectic,
            min_pairing: r.boundaries.iter().map(|b| b.min_pairing).fold(f64::INFINITY, f64::min),
            pass: r.pass,
        });
    }
    let pass = end_state.pass && stations.iter().all(|s| s.pass);
    Ok(StageReport { name: name.into(), end_state, stations, pass })
}

fn stage_error(stage: &StageReport) -> LabError {
    let st = &stage.end_state;
    let detail = if let Some(i) = st.first_symplectic_violation {
        format!("d lambda ^ d lambda not positive at sample {i} (min {:.3e})", st.min_symplectic)
    } else if let Some(b) = st.boundaries.iter().find(|b| b.first_violation.is_some()) {
        format!("domination fails at sample {} (min {:.3e})", b.first_violation.unwrap_or(0), b.min_pairing)
    } else {
        let s = stage.stations.iter().find(|s| !s.pass).map(|s| s.s).unwrap_or(f64::NAN);
        format!("homotopy station s = {s:.2} not pre-Liouville")
    };
    LabError::Stage { stage: stage.name.clone(), detail }
}

fn attempt(model: &CollarModel, c: f64, searched: bool) -> Result<(StraighteningStages, StraighteningReport)> {
    let st = build_stages(model, c)?;
    let bc = vec![model.boundary()?];
    let initial = evaluate_with_differential(&st.lambda.differential, &bc)?;
    if !initial.pass {
        return Err(LabError::Precondition("input collar form is not pre-Liouville".into()));
    }
    let stages = vec![
        run_stage("1", &st.lambda, &st.lambda_half, &bc)?,
        run_stage("2", &st.lambda_half, &st.lambda_three_quarter, &bc)?,
        run_stage("3", &st.lambda_three_quarter, &st.lambda_one, &bc)?,
    ];
    let top = st.lambda_one.lambda.restrict_boundary(model.thick.axes[0].n - 1)?;
    let boundary_defect = top.sub(&model.alpha.scale(c))?.max_abs();
    let boundary = liouville_boundary_check(&st.lambda_one.lambda, &bc[0])?;

    let block = model.alpha.manifold.len();
    let mut match_half = 0.0f64;
    let mut match_one = 0.0f64;
    for p in 0..model.thick.len() {
        let t = model.thick.axes[0].coord(p / block);
        let (f0, d0) = st.cutoffs.phi0(t);
        let (f2, d2) = st.cutoffs.phi2(t);
        for j in 0..4 {
            if f0 == 1.0 && d0 == 0.0 {
                let (a, b) = (&st.lambda_half.lambda, &st.lambda.lambda);
                match_half = match_half.max((a.comps[j][p] - b.comps[j][p]).abs());
            }
            if f2 == 1.0 && d2 == 0.0 {
                let (a, b) = (&st.lambda_one.lambda, &st.lambda_three_quarter.lambda);
                match_one = match_one.max((a.comps[j][p] - b.comps[j][p]).abs());
            }
        }
    }
    let pass = stages.iter().all(|s| s.pass)
        && boundary_defect <= COLLAR_TOL
        && boundary.pass
        && match_half == 0.0
        && match_one == 0.0;
    let report = StraighteningReport {
        c,
        c_searched: searched,
        eps0: model.eps0,
        cutoffs: st.cutoffs,
        initial,
        stages,
        boundary_defect,
        boundary,
        match_half,
        match_one,
        pass,
    };
    Ok((st, report))
}

/// Straighten the collar. With `c = None` the constant is found by doubling
/// from 2; with a given `c` a failing stage is an error naming the stage.
pub fn straighten_boundary(model: &CollarModel, c: Option<f64>) -> Result<(StraighteningStages, StraighteningReport)> {
    match c {
        Some(c) => {
            if !(c > 1.0) {
                return Err(LabError::Precondition(format!("C = {c} must exceed 1")));
            }
            let (st, rep) = attempt(model, c, false)?;
            if let Some(bad) = rep.stages.iter().find(|s| !s.pass) {
                return Err(stage_error(bad));
            }
            Ok((st, rep))
        }
        None => {
            let mut c = 2.0;
            for _ in 0..20 {
                let (st, rep) = attempt(model, c, true)?;
                if rep.stages.iter().all(|s| s.pass) {
                    return Ok((st, rep));
                }
                c *= 2.0;
            }
            Err(LabError::SearchExhausted("no C up to 2^20 straightens the collar".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(gamma: CollarGamma) -> CollarSpec {
        CollarSpec { n_m: 8, n_t: 17, gamma, ..CollarSpec::default() }
    }

    #[test]
    fn liouville_cone_is_trivial() {
        let m = CollarModel::standard(&CollarSpec { f_amp: 0.0, ..spec(CollarGamma::Zero) }).unwrap();
        let (st, rep) = straighten_boundary(&m, Some(2.0)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(st.lambda.lambda.comps, st.lambda_half.lambda.comps);
        assert_eq!(rep.boundary_defect, 0.0);
    }

    #[test]
    fn small_dy_gamma_passes_with_c4() {
        let m = CollarModel::standard(&spec(CollarGamma::Dy(0.1))).unwrap();
        let (_, rep) = straighten_boundary(&m, Some(4.0)).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.stages.iter().all(|s| s.stations.len() == 9));
        assert!(rep.boundary_defect <= 1e-10);
    }

    #[test]
    fn large_dz_gamma_fails_at_stage_three() {
        let m = CollarModel::standard(&spec(CollarGamma::Dz(0.9))).unwrap();
        match straighten_boundary(&m, Some(1.01)) {
            Err(LabError::Stage { stage, .. }) => assert_eq!(stage, "3"),
            other => panic!("expected stage failure, got {:?}", other.map(|r| r.1.pass)),
        }
        let (_, rep) = straighten_boundary(&m, None).unwrap();
        assert!(rep.pass && rep.c_searched);
        let bound = 0.9 * rep.cutoffs.max_slope2;
        assert!(rep.c > 0.5 * bound);
    }

    #[test]
    fn contact_gate() {
        let s = spec(CollarGamma::Zero);
        let good = CollarModel::standard(&s).unwrap();
        let flat = good.alpha.manifold.clone();
        let alpha = FormField::from_fn(flat, 1, |_| vec![0.0, 0.0, 1.0]);
        assert!(CollarModel::new(alpha, good.gamma.clone(), good.f.clone()).is_err());
    }
}
