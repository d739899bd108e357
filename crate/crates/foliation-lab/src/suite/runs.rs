//! One runner per suite. Each reads its parameters through the config,
//! returns verdicts and plot series, and writes any extra artifacts into `out`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::SuiteConfig;
use super::report::{Check, Series};
use crate::anosov::{
    defining_pair, lemma_flow_convergence, liouville_form, liouville_pair, mitsumatsu_bicontact, mitsumatsu_forms,
    SuspensionAnosov, TiltField, DECAY_FACTOR,
};
use crate::contact::{
    annulus_holonomy, pulldown_profile, random_coefficients, ribbon_holonomy, AnnulusModel, BumpFamily,
    CoefficientPath, LinearWindow, PulldownSpec, HOLONOMY_TOL,
};
use crate::error::{LabError, Result};
use crate::fields::io::{load_form, save_form};
use crate::fields::{CovectorField, PlaneField};
use crate::foliated::{
    check_interpolation, graphical_interpolation, random_profile_pair, smooth_foliated_homeo_2d_with,
    FoliatedHomeo2D, FoliatedOptions, Foliation2D, CUTOFF_SLOPE,
};
use crate::liouville::{
    check_preliouville_path, end_conditions, linear_path, straighten_boundary, thicken, CollarGamma, CollarModel,
    CollarSpec, INTERMEDIATE_STATIONS,
};
use crate::numeric::{linspace, rng};
use crate::smoothing::{
    smooth_embedding_family, smooth_increasing, smooth_increasing_family, smooth_increasing_relative, CollarData,
    EmbeddingCollar, EmbeddingData, FamilyCollar, FamilyData, MonotoneFunction, PLEmbedding2D, SampledFamily,
};

#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub checks: Vec<Check>,
    pub series: Vec<Series>,
    pub artifacts: Vec<PathBuf>,
}

const CAT_MAP: [[i64; 2]; 2] = [[2, 1], [1, 1]];

/// Independent seeds for `n` instances, drawn from the run seed.
fn seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen()).collect()
}

/// Largest value seen so far and where.
struct Worst {
    value: f64,
    at: Option<String>,
}

impl Worst {
    fn max() -> Self {
        Worst { value: f64::NEG_INFINITY, at: None }
    }
    fn min() -> Self {
        Worst { value: f64::INFINITY, at: None }
    }
    fn above(&mut self, v: f64, at: impl FnOnce() -> String) {
        if v > self.value || v.is_nan() {
            self.value = v;
            self.at = Some(at());
        }
    }
    fn below(&mut self, v: f64, at: impl FnOnce() -> String) {
        if v < self.value || v.is_nan() {
            self.value = v;
            self.at = Some(at());
        }
    }
}

pub(crate) fn anosov_liouville(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "anosov";
    let a: [[i64; 2]; 2] = cfg.get(s, "matrix", CAT_MAP)?;
    let n_t = cfg.resolution(s, "n_t", 32)?;
    let n_fiber = cfg.resolution(s, "n_fiber", 32)?;
    let n_tau = cfg.resolution(s, "n_tau", 17)?;
    let deltas: Vec<f64> = cfg.get(s, "deltas", vec![0.02, 0.05, 0.1])?;
    let identity_tol = cfg.get(s, "identity_tol", 1e-8)?;
    let mut sweep: Vec<f64> = cfg.get(s, "mitsumatsu_deltas", vec![1e-2, 1e-3])?;
    let ratio_delta = cfg.get(s, "ratio_delta", 1e-3)?;
    let ratio_tol = cfg.get(s, "ratio_tol", 0.05)?;
    if !sweep.contains(&ratio_delta) {
        sweep.push(ratio_delta);
    }

    let flow = SuspensionAnosov::new(a, n_t, n_fiber)?;
    let log_lambda = flow.log_lambda();
    let (pair, dp) = defining_pair(&flow)?;
    let mut out = Outcome::default();
    out.checks.push(Check::flag("defining pair", dp.pass));

    let mut minima = Series::new("liouville_minimum", &["delta", "min_ratio", "expected_min", "max_rel_error"]);
    for &d in &deltas {
        let positivity = format!("liouville positivity delta={d}");
        match liouville_pair(&pair, d, n_tau) {
            Ok(lp) => {
                let r = lp.report;
                out.checks.push(Check::at_most(&format!("liouville identity delta={d}"), r.max_rel_error, identity_tol));
                out.checks.push(
                    Check::new(&positivity, r.positive && r.min_ratio > 0.0, r.min_ratio, 0.0)
                        .expected(r.expected_min)
                        .violation(r.first_violation.map(|i| format!("sample {i}"))),
                );
                minima.push(vec![d, r.min_ratio, r.expected_min, r.max_rel_error]);
            }
            Err(LabError::Positivity { index, value }) => {
                out.checks.push(
                    Check::new(&positivity, false, value, 0.0)
                        .expected(8.0 * d * log_lambda)
                        .violation(Some(format!("sample {index}"))),
                );
            }
            Err(e) => return Err(e),
        }
    }

    let (_, mr) = mitsumatsu_bicontact(&pair, &sweep)?;
    out.checks.push(
        Check::new("alpha-beta pairing", mr.min_pairing > 0.0, mr.min_pairing, 0.0).expected(mr.expected_pairing),
    );
    let mut ratios = Series::new(
        "mitsumatsu_ratio",
        &["delta", "ratio_min", "ratio_max", "min_plus", "max_minus", "min_transverse_angle"],
    );
    for e in &mr.entries {
        out.checks.push(Check::flag(&format!("opposite contact signs delta={}", e.delta), e.signs_ok));
        if e.delta == ratio_delta {
            let dev = (e.ratio_min - 1.0).abs().max((e.ratio_max - 1.0).abs());
            out.checks.push(Check::at_most(&format!("leading-order ratio deviation delta={}", e.delta), dev, ratio_tol));
        }
        ratios.push(vec![e.delta, e.ratio_min, e.ratio_max, e.min_plus, e.max_minus, e.min_transverse_angle]);
    }
    out.series = vec![minima, ratios];
    Ok(out)
}

pub(crate) fn lemma_flow(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "lemma_flow";
    let a: [[i64; 2]; 2] = cfg.get(s, "matrix", CAT_MAP)?;
    let n = cfg.resolution(s, "n", 16)?;
    let fields: usize = cfg.get(s, "fields", 20)?;
    let t_max = cfg.get(s, "t_max", 10.0)?;
    let steps: usize = cfg.get(s, "steps", 20)?;
    let amplitude = cfg.get(s, "amplitude", 0.4)?;

    let flow = Arc::new(SuspensionAnosov::new(a, n, n)?);
    let rate_bound = DECAY_FACTOR * flow.log_lambda();
    let mut worst_rate = Worst::min();
    let mut worst_k = 0;
    let mut envelope_failures = 0usize;
    let mut first_envelope = None;
    let mut rates = Series::new("rates", &["field", "fitted_rate", "min_transversality", "final_angle"]);
    let mut runs = Vec::with_capacity(fields);
    for (k, sd) in seeds(cfg.seed, fields).into_iter().enumerate() {
        let tilt: Arc<dyn CovectorField> = Arc::new(TiltField::random(&flow.data, sd, amplitude));
        let ds = lemma_flow_convergence(&flow, tilt, t_max, steps)?;
        let rate = ds.fitted_rate.unwrap_or(f64::INFINITY);
        if rate < worst_rate.value || worst_rate.at.is_none() {
            worst_k = k;
        }
        worst_rate.below(rate, || format!("field {k}"));
        if !ds.envelope_holds {
            envelope_failures += 1;
            first_envelope.get_or_insert(format!("field {k}"));
        }
        rates.push(vec![k as f64, rate, ds.min_transversality, *ds.angles.last().unwrap_or(&0.0)]);
        runs.push(ds);
    }
    let mut out = Outcome::default();
    out.checks.push(
        Check::new("fitted decay rate", worst_rate.value >= rate_bound, worst_rate.value, rate_bound)
            .expected(flow.log_lambda())
            .violation(worst_rate.at),
    );
    out.checks.push(
        Check::at_most("decay envelope failures after burn-in", envelope_failures as f64, 0.0).violation(first_envelope),
    );
    let mut decay = Series::new("decay", &["t", "angle", "bound"]);
    if let Some(ds) = runs.get(worst_k) {
        for i in 0..ds.times.len() {
            decay.push(vec![ds.times[i], ds.angles[i], ds.bound[i]]);
        }
    }
    out.series = vec![decay, rates];
    Ok(out)
}

pub(crate) fn ribbon(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "ribbon";
    let pairs: usize = cfg.get(s, "pairs", 50)?;
    let s_max = cfg.get(s, "s_max", 5.0)?;
    let tol = cfg.get(s, "tolerance", HOLONOMY_TOL)?;
    let grid: [usize; 3] = cfg.get(s, "annulus_grid", [8, 17, 9])?;
    let collar = cfg.get(s, "annulus_collar", 0.1)?;

    let mut r = rng(cfg.seed);
    let (mut err_a, mut err_b) = (Worst::max(), Worst::max());
    let mut growth = Worst::min();
    let (mut growth_ok, mut checked) = (true, 0usize);
    let mut holonomy = Series::new("holonomy", &["s", "a", "b", "accumulated", "min_f_s"]);
    for i in 0..pairs {
        let path = random_coefficients(&mut r, i % 2 == 0);
        let cmp = ribbon_holonomy(&path, s_max)?;
        err_a.above(cmp.max_err_a, || format!("pair {i}"));
        err_b.above(cmp.max_err_b, || format!("pair {i}"));
        if cmp.growth_checked > 0 {
            growth.below(cmp.growth_min_margin, || format!("pair {i}"));
        }
        growth_ok &= cmp.growth_holds;
        checked += cmp.growth_checked;
        if i == 0 {
            let acc = cmp.closed.accumulated();
            let mut min_f = f64::INFINITY;
            for (k, &sk) in cmp.closed.s.iter().enumerate() {
                min_f = min_f.min(path.f(sk));
                holonomy.push(vec![sk, cmp.closed.a[k], cmp.closed.b[k], acc[k], min_f * sk]);
            }
        }
    }
    let mut out = Outcome::default();
    out.checks.push(Check::at_most("closed form vs integration: a", err_a.value, tol).violation(err_a.at));
    out.checks.push(Check::at_most("closed form vs integration: b", err_b.value, tol).violation(err_b.at));
    out.checks.push(Check::new("growth bound where h <= 0", growth_ok, growth.value, 0.0).violation(growth.at));
    out.checks.push(Check::at_least("growth bound samples", checked as f64, 1.0));

    let ar = annulus_holonomy(&AnnulusModel::default(), grid, collar, s_max)?;
    out.checks.push(Check::flag("annulus holonomy", ar.pass));
    out.checks.push(Check::flag("annulus collar angle decreasing", ar.monotone));
    out.checks.push(
        Check::at_most("annulus angle below target by s*", ar.s_star.unwrap_or(f64::INFINITY), s_max)
            .expected(ar.angle_target),
    );
    let mut angles = Series::new("annulus_angle", &["s", "max_angle"]);
    for &(sv, a) in &ar.angle_series {
        angles.push(vec![sv, a]);
    }
    out.series = vec![holonomy, angles];
    Ok(out)
}

pub(crate) fn pulldown(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "pulldown";
    let families: usize = cfg.get(s, "families", 4)?;
    let amplitude = cfg.get(s, "amplitude", 0.05)?;
    let width = cfg.get(s, "width", 0.8)?;
    let w = LinearWindow {
        level: cfg.get(s, "window_level", 0.45)?,
        slope: cfg.get(s, "window_slope", 1.0)?,
        wobble: cfg.get(s, "window_wobble", 0.0)?,
    };
    let d = PulldownSpec::default();
    let spec = PulldownSpec {
        sigma: cfg.get(s, "sigma", d.sigma)?,
        n_theta: cfg.resolution(s, "n_theta", d.n_theta)?,
        n_z: cfg.resolution(s, "n_z", d.n_z)?,
        n_t: cfg.get(s, "n_t", d.n_t)?,
        heatmap_stride: cfg.get(s, "heatmap_stride", d.heatmap_stride)?,
    };

    let mut psis = vec![BumpFamily::single(amplitude, width)];
    psis.extend(seeds(cfg.seed, families.saturating_sub(1)).into_iter().map(|sd| BumpFamily::random(sd, amplitude, width)));
    let mut regions: Vec<(String, Worst)> = Vec::new();
    let (mut homotopy_ok, mut homotopy_first) = (true, None);
    let (mut profile_ok, mut profile_first) = (true, None);
    let mut heatmap = Series::new("heatmap", &["theta", "z", "margin"]);
    let mut profile = Series::new("profile", &["z", "f", "df"]);
    let mut search = Series::new("eps_search", &["family", "eps", "worst_margin"]);
    let mut chosen = Series::new("chosen_eps", &["family", "eps"]);
    for (k, psi) in psis.iter().enumerate() {
        let rep = pulldown_profile(psi, &w, &spec)?;
        for reg in &rep.regions {
            let pos = match regions.iter().position(|(n, _)| *n == reg.region) {
                Some(p) => p,
                None => {
                    regions.push((reg.region.clone(), Worst::min()));
                    regions.len() - 1
                }
            };
            regions[pos].1.below(reg.min_margin, || {
                format!("family {k} at theta = {}, z = {}", reg.argmin.0, reg.argmin.1)
            });
        }
        for c in &rep.homotopy.conditions {
            if !c.pass {
                homotopy_ok = false;
                homotopy_first.get_or_insert(format!("family {k}: {}", c.name));
            }
        }
        homotopy_ok &= rep.homotopy.pass;
        for c in &rep.profile_checks {
            if !c.pass {
                profile_ok = false;
                profile_first.get_or_insert(format!("family {k}: {}", c.name));
            }
        }
        for &(e, m) in &rep.tried {
            search.push(vec![k as f64, e, m]);
        }
        chosen.push(vec![k as f64, rep.eps]);
        if k == 0 {
            for &(th, z, m) in &rep.heatmap {
                heatmap.push(vec![th, z, m]);
            }
            for z in linspace(-1.0, 1.0, 401) {
                let (f, df) = rep.profile.eval(z);
                profile.push(vec![z, f, df]);
            }
        }
    }
    let mut out = Outcome::default();
    for (name, worst) in regions {
        out.checks.push(Check::at_least(&format!("slope margin {name}"), worst.value, 0.0).violation(worst.at));
    }
    out.checks.push(Check::flag("profile conditions", profile_ok).violation(profile_first));
    out.checks.push(Check::flag("homotopy conditions", homotopy_ok).violation(homotopy_first));
    out.series = vec![heatmap, profile, search, chosen];
    Ok(out)
}

pub(crate) fn smoothing_2d(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "smoothing_2d";
    let map: String = cfg.get(s, "map", "shear-wiggle".to_string())?;
    let n = cfg.resolution(s, "n", 256)?;
    let twist = cfg.get(s, "twist", 0.3)?;
    let amp = cfg.get(s, "wiggle", 0.02)?;
    let eps = cfg.get(s, "eps", 0.05)?;
    let d = FoliatedOptions::default();
    let opts = FoliatedOptions {
        delta: cfg.get(s, "cover_delta", d.delta)?,
        seed: cfg.seed,
        grid: cfg.resolution(s, "check_grid", d.grid)?,
        retries: cfg.get(s, "retries", d.retries)?,
    };
    let pairs: usize = cfg.get(s, "interpolation_pairs", 100)?;
    let width = cfg.get(s, "interpolation_width", 0.05)?;
    let igrid = cfg.resolution(s, "interpolation_grid", 129)?;

    let h = FoliatedHomeo2D::builtin(&map, n, twist, amp)?;
    let (_, r) = smooth_foliated_homeo_2d_with(&h, Foliation2D::horizontal(), Foliation2D::horizontal(), eps, &opts)?;
    let mut out = Outcome::default();
    let c = &mut out.checks;
    c.push(Check::new("positive jacobian", r.min_jacobian > 0.0, r.min_jacobian, 0.0));
    c.push(Check::new("c0 distance", r.d_c0 < eps, r.d_c0, eps));
    c.push(Check::new("tangent defect", r.tangent_defect < eps, r.tangent_defect, eps));
    c.push(Check::flag("collar equality", r.collar_exact));
    c.push(Check::flag("boundary simple", r.boundary_simple));
    let min_area = r.isotopy.iter().map(|i| i.min_signed_area).fold(f64::INFINITY, f64::min);
    let first_bad = r.isotopy.iter().find(|i| !i.pass).map(|i| format!("s = {}", i.s));
    c.push(
        Check::new("isotopy", r.isotopy.iter().all(|i| i.pass) && !r.isotopy.is_empty(), min_area, 0.0).violation(first_bad),
    );
    for st in &r.stages {
        c.push(Check::new(&format!("stage {}", st.stage), st.pass, st.max_distance, st.tolerance));
    }
    c.push(Check::flag("pipeline", r.pass));

    let mut worst = Worst::max();
    let mut all_pass = true;
    let mut interp = Series::new("interpolation", &["pair", "gap", "max_dx", "bound"]);
    for (k, sd) in seeds(cfg.seed, pairs).into_iter().enumerate() {
        let (v0, v1) = random_profile_pair(sd);
        let gi = graphical_interpolation(v0, v1, width)?;
        let ir = check_interpolation(&gi, igrid);
        let ratio = if ir.gap > 0.0 { ir.max_dx / ir.gap } else { 0.0 };
        worst.above(ratio, || format!("pair {k}"));
        all_pass &= ir.pass;
        interp.push(vec![k as f64, ir.gap, ir.max_dx, ir.bound]);
    }
    out.checks.push(
        Check::new("interpolation slope / gap", all_pass && worst.value <= CUTOFF_SLOPE, worst.value, CUTOFF_SLOPE)
            .violation(worst.at),
    );

    let mut stages = Series::new(
        "stages",
        &["stage", "tolerance", "max_distance", "min_leaf_derivative", "min_transverse_derivative", "max_leaf_tilt"],
    );
    for (i, st) in r.stages.iter().enumerate() {
        stages.push(vec![
            i as f64,
            st.tolerance,
            st.max_distance,
            st.min_leaf_derivative,
            st.min_transverse_derivative,
            st.max_leaf_tilt,
        ]);
    }
    let mut isotopy = Series::new("isotopy", &["s", "max_distance", "min_signed_area"]);
    for i in &r.isotopy {
        isotopy.push(vec![i.s, i.max_distance, i.min_signed_area]);
    }
    out.series = vec![stages, isotopy, interp];
    Ok(out)
}

/// Postconditions of one smoothing instance.
struct Sample {
    sup: f64,
    bound: f64,
    min_derivative: f64,
    mismatches: usize,
    pass: bool,
}

#[derive(Default)]
struct Tally {
    passed: usize,
    failures: Vec<String>,
    worst_ratio: Option<f64>,
    min_derivative: Option<f64>,
    mismatches: usize,
}

impl Tally {
    fn add(&mut self, k: usize, s: Result<Sample>) {
        match s {
            Ok(s) => {
                let ratio = s.sup / s.bound;
                self.worst_ratio = Some(self.worst_ratio.map_or(ratio, |w| w.max(ratio)));
                self.min_derivative = Some(self.min_derivative.map_or(s.min_derivative, |m| m.min(s.min_derivative)));
                self.mismatches += s.mismatches;
                if s.pass && s.sup < s.bound && s.min_derivative > 0.0 && s.mismatches == 0 {
                    self.passed += 1;
                } else {
                    self.failures.push(format!("instance {k}"));
                }
            }
            Err(e) => self.failures.push(format!("instance {k}: {e}")),
        }
    }

    fn checks(&self, name: &str, n: usize, collar: bool) -> Vec<Check> {
        let ratio = self.worst_ratio.unwrap_or(f64::INFINITY);
        let der = self.min_derivative.unwrap_or(f64::NEG_INFINITY);
        let mut out = vec![
            Check::new(&format!("{name} postconditions"), self.passed == n, self.passed as f64, n as f64)
                .violation(self.failures.first().cloned()),
            Check::new(&format!("{name} sup distance / bound"), ratio < 1.0, ratio, 1.0),
            Check::new(&format!("{name} min derivative"), der > 0.0, der, 0.0),
        ];
        if collar {
            out.push(Check::at_most(&format!("{name} collar mismatches"), self.mismatches as f64, 0.0));
        }
        out
    }
}

/// A random strictly increasing PL function on `[0, 1]` with `n` breakpoints.
fn random_increasing<R: Rng>(r: &mut R, n: usize) -> Result<MonotoneFunction> {
    let mut acc = 0.0;
    let mut v = vec![0.0];
    for _ in 1..n {
        acc += r.gen_range(0.05..1.0);
        v.push(acc);
    }
    MonotoneFunction::new(v.iter().map(|x| x / acc).collect())
}

fn blend(x: f64, y: f64) -> f64 {
    0.5 * (x + y * y)
}

fn monotone_sample(v: &MonotoneFunction, eps: f64) -> Result<Sample> {
    let r = smooth_increasing(v, eps)?.report;
    Ok(Sample { sup: r.sup_distance, bound: r.bound, min_derivative: r.min_derivative, mismatches: 0, pass: r.pass })
}

fn relative_sample(v: &MonotoneFunction, eps: f64, delta: f64) -> Result<Sample> {
    let base = smooth_increasing(v, eps / 4.0)?;
    let data = CollarData::new(delta, move |z| base.eval(z));
    let (_, r) = smooth_increasing_relative(v, &data, eps)?;
    let m = r.monotone;
    Ok(Sample {
        sup: m.sup_distance,
        bound: m.bound,
        min_derivative: m.min_derivative,
        mismatches: r.collar_mismatches,
        pass: m.pass,
    })
}

fn family_sample(
    v0: &MonotoneFunction,
    v1: &MonotoneFunction,
    side: usize,
    variant: usize,
    eps: f64,
    delta: f64,
) -> Result<Sample> {
    let n = v0.samples.len();
    let fam = SampledFamily::from_fn([side, side, n], |x, y, z| {
        let s = blend(x, y);
        (1.0 - s) * v0.eval(z) + s * v1.eval(z)
    })?;
    let (s0, s1) = (smooth_increasing(v0, eps / 4.0)?, smooth_increasing(v1, eps / 4.0)?);
    let data = FamilyData::new(delta, move |x, y, z| {
        let s = blend(x, y);
        let ((a, da), (b, db)) = (s0.eval(z), s1.eval(z));
        ((1.0 - s) * a + s * b, (1.0 - s) * da + s * db)
    });
    let collar = match variant {
        1 => FamilyCollar::Free,
        2 => FamilyCollar::X(data),
        3 => FamilyCollar::Xy(data),
        _ => FamilyCollar::Xyz(data),
    };
    let (_, r) = smooth_increasing_family(&fam, collar, eps)?;
    Ok(Sample {
        sup: r.sup_distance,
        bound: r.bound,
        min_derivative: r.min_dz,
        mismatches: r.collar_mismatches,
        pass: r.pass,
    })
}

/// Kinked shear `(x + a (1 + z)/2 |y - c|, y)` sampled on `n + 1` vertices per side.
fn shear_sample(a: f64, c: f64, n: usize, slices: usize, variant: usize, eps: f64, delta: f64) -> Result<Sample> {
    let f = move |x: f64, y: f64, z: f64| [x + a * 0.5 * (1.0 + z) * (y - c).abs(), y];
    let fam: Vec<PLEmbedding2D> = (0..slices)
        .map(|k| {
            let z = k as f64 / (slices - 1) as f64;
            PLEmbedding2D::from_fn(n, move |p| f(p[0], p[1], z))
        })
        .collect::<Result<_>>()?;
    let data = EmbeddingData::new(delta, f);
    let collar = match variant {
        0 => EmbeddingCollar::Free,
        1 => EmbeddingCollar::Z(data),
        2 => EmbeddingCollar::Xy(data),
        _ => EmbeddingCollar::Xyz(data),
    };
    let (_, r) = smooth_embedding_family(&fam, collar, eps)?;
    let certified = r.slices.iter().all(|s| s.certificate.pass && s.certificate.boundary_simple);
    Ok(Sample {
        sup: r.max_distance,
        bound: r.bound,
        min_derivative: r.min_jacobian,
        mismatches: r.slices.iter().map(|s| s.collar_mismatches).sum(),
        pass: r.pass && certified,
    })
}

pub(crate) fn appendix_a(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "appendix_a";
    let instances: usize = cfg.get(s, "instances", 200)?;
    let eps_list: Vec<f64> = cfg.get(s, "eps", vec![0.1, 0.01])?;
    let [lo, hi]: [usize; 2] = cfg.get(s, "breakpoints", [4, 32])?;
    let delta = cfg.get(s, "collar_delta", 0.1)?;
    let side: usize = cfg.get(s, "family_side", 4)?;
    let shears: usize = cfg.get(s, "embedding_instances", 10)?;
    let shear_n = cfg.resolution(s, "embedding_n", 16)?;
    let shear_slices: usize = cfg.get(s, "embedding_slices", 5)?;
    if !(2 <= lo && lo <= hi) || side < 2 || shear_slices < 2 {
        return Err(LabError::Config("appendix_a: need 2 <= breakpoints[0] <= breakpoints[1], family_side >= 2, embedding_slices >= 2".into()));
    }

    const NAMES: [&str; 6] = ["monotone", "relative", "family-1", "family-2", "family-3", "family-4"];
    const SHEARS: [&str; 4] = ["embedding-free", "embedding-z", "embedding-xy", "embedding-xyz"];
    let mut out = Outcome::default();
    let mut summary = Series::new("pass_counts", &["variant", "eps", "passed", "worst_ratio", "min_derivative"]);
    for (ei, &eps) in eps_list.iter().enumerate() {
        let mut tallies: Vec<Tally> = (0..NAMES.len()).map(|_| Tally::default()).collect();
        let mut r = rng(cfg.seed.wrapping_add(ei as u64));
        for k in 0..instances {
            let n = r.gen_range(lo..=hi);
            let v = random_increasing(&mut r, n)?;
            let v1 = random_increasing(&mut r, n)?;
            tallies[0].add(k, monotone_sample(&v, eps));
            tallies[1].add(k, relative_sample(&v, eps, delta));
            for variant in 1..=4 {
                tallies[1 + variant].add(k, family_sample(&v, &v1, side, variant, eps, delta));
            }
        }
        let mut shear_tallies: Vec<Tally> = (0..SHEARS.len()).map(|_| Tally::default()).collect();
        for k in 0..shears {
            let a = r.gen_range(0.05..0.3);
            let c = r.gen_range(shear_n * 5 / 16..=shear_n * 11 / 16) as f64 / shear_n as f64;
            for (variant, t) in shear_tallies.iter_mut().enumerate() {
                t.add(k, shear_sample(a, c, shear_n, shear_slices, variant, eps, delta));
            }
        }
        let all = NAMES.iter().zip(&tallies).map(|(n, t)| (*n, t, instances)).chain(SHEARS.iter().zip(&shear_tallies).map(|(n, t)| (*n, t, shears)));
        for (vi, (name, t, count)) in all.enumerate() {
            let collar = !matches!(name, "monotone" | "family-1" | "embedding-free");
            out.checks.extend(t.checks(&format!("{name} eps={eps}"), count, collar));
            summary.push(vec![
                vi as f64,
                eps,
                t.passed as f64,
                t.worst_ratio.unwrap_or(f64::NAN),
                t.min_derivative.unwrap_or(f64::NAN),
            ]);
        }
    }
    out.series = vec![summary];
    Ok(out)
}

pub(crate) fn straighten(cfg: &SuiteConfig, _out: &Path) -> Result<Outcome> {
    let s = "straighten";
    let base = CollarSpec {
        n_m: cfg.resolution(s, "n_m", 8)?,
        n_t: cfg.resolution(s, "n_t", 17)?,
        eps0: cfg.get(s, "eps0", 0.2)?,
        gamma: CollarGamma::Zero,
        f_amp: cfg.get(s, "f_amp", 0.05)?,
    };
    let c_zero = cfg.get(s, "c_zero", 2.0)?;
    let dy = cfg.get(s, "dy", 0.1)?;
    let c_dy = cfg.get(s, "c_dy", 4.0)?;
    let dz = cfg.get(s, "dz", 0.9)?;
    let c_fail = cfg.get(s, "c_fail", 1.01)?;
    let defect_tol = cfg.get(s, "boundary_tol", 1e-10)?;

    let cases = [
        ("zero", CollarGamma::Zero, Some(c_zero)),
        ("dy", CollarGamma::Dy(dy), Some(c_dy)),
        ("dz", CollarGamma::Dz(dz), None),
    ];
    let mut out = Outcome::default();
    let mut stations = Series::new("stations", &["case", "stage", "s", "min_symplectic", "min_pairing"]);
    for (ci, (name, gamma, c)) in cases.into_iter().enumerate() {
        let m = CollarModel::standard(&CollarSpec { gamma, ..base })?;
        let (_, rep) = straighten_boundary(&m, c)?;
        let counts = rep.stages.iter().map(|st| st.stations.len()).min().unwrap_or(0);
        let all: Vec<_> = rep.stages.iter().flat_map(|st| &st.stations).collect();
        let min_sym = all.iter().map(|x| x.min_symplectic).fold(f64::INFINITY, f64::min);
        let min_pair = all.iter().map(|x| x.min_pairing).fold(f64::INFINITY, f64::min);
        let first_bad = rep
            .stages
            .iter()
            .find_map(|st| st.stations.iter().find(|x| !x.pass).map(|x| format!("stage {} s = {}", st.name, x.s)));
        out.checks.push(Check::flag(&format!("{name} stages"), rep.pass).violation(first_bad));
        out.checks.push(Check::new(
            &format!("{name} stations per stage"),
            rep.stages.len() == 3 && counts == INTERMEDIATE_STATIONS,
            counts as f64,
            INTERMEDIATE_STATIONS as f64,
        ));
        out.checks.push(Check::new(&format!("{name} min symplectic"), min_sym > 0.0, min_sym, 0.0));
        out.checks.push(Check::new(&format!("{name} min boundary pairing"), min_pair > 0.0, min_pair, 0.0));
        out.checks.push(Check::at_most(&format!("{name} boundary defect"), rep.boundary_defect, defect_tol).expected(rep.c));
        for (si, st) in rep.stages.iter().enumerate() {
            for x in &st.stations {
                stations.push(vec![ci as f64, si as f64, x.s, x.min_symplectic, x.min_pairing]);
            }
        }
    }
    let m = CollarModel::standard(&CollarSpec { gamma: CollarGamma::Dz(dz), ..base })?;
    let failing_stage = match straighten_boundary(&m, Some(c_fail)) {
        Err(LabError::Stage { stage, .. }) => Some(stage),
        Ok(_) => None,
        Err(e) => return Err(e),
    };
    out.checks.push(
        Check::flag("small C rejected at stage 3", failing_stage.as_deref() == Some("3"))
            .violation(Some(format!("stage {failing_stage:?}"))),
    );
    out.series = vec![stations];
    Ok(out)
}

/// Form files of a path between two Liouville pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathManifest {
    pub start: String,
    pub end: String,
    pub delta_start: f64,
    pub delta_end: f64,
    pub stations: usize,
}

pub const MANIFEST: &str = "manifest.toml";

pub(crate) fn preliouville_path(cfg: &SuiteConfig, out_dir: &Path) -> Result<Outcome> {
    let s = "path";
    let a: [[i64; 2]; 2] = cfg.get(s, "matrix", CAT_MAP)?;
    let n = cfg.resolution(s, "n", 16)?;
    let n_tau = cfg.get(s, "n_tau", 9)?;
    let manifest = PathManifest {
        start: "start".into(),
        end: "end".into(),
        delta_start: cfg.get(s, "delta_start", 0.05)?,
        delta_end: cfg.get(s, "delta_end", 0.08)?,
        stations: cfg.get(s, "stations", 5)?,
    };

    let flow = SuspensionAnosov::new(a, n, n)?;
    let (pair, _) = defining_pair(&flow)?;
    let thick = thicken(&pair.alpha_s.manifold, n_tau)?;
    let la = liouville_form(&pair, manifest.delta_start, thick.clone())?;
    let lb = liouville_form(&pair, manifest.delta_end, thick.clone())?;
    let dir = out_dir.join("preliouville-path.forms");
    let mut out = Outcome::default();
    out.artifacts.extend(save_form(&la, &dir, &manifest.start)?);
    out.artifacts.extend(save_form(&lb, &dir, &manifest.end)?);
    let mpath = dir.join(MANIFEST);
    std::fs::write(&mpath, toml::to_string(&manifest).map_err(|e| LabError::Io(e.to_string()))?)?;
    out.artifacts.push(mpath.clone());

    let back: PathManifest =
        toml::from_str(&std::fs::read_to_string(&mpath)?).map_err(|e| LabError::Config(e.to_string()))?;
    let (ra, rb) = (load_form(&dir, &back.start)?, load_form(&dir, &back.end)?);
    let same = |x: &crate::fields::FormField, y: &crate::fields::FormField| {
        x.comps.len() == y.comps.len()
            && x.comps.iter().zip(&y.comps).all(|(p, q)| p.iter().zip(q).all(|(u, v)| u.to_bits() == v.to_bits()))
    };
    out.checks.push(Check::flag("forms reload bitwise", same(&la, &ra) && same(&lb, &rb)));

    let (d0, d1) = (back.delta_start, back.delta_end);
    let boundaries = |t: f64| {
        let (am, ap) = mitsumatsu_forms(&pair, d0 + (d1 - d0) * t)?;
        Ok(end_conditions(&thick, PlaneField::new(am)?, PlaneField::new(ap)?))
    };
    let path = linear_path(&ra, &rb, back.stations, boundaries)?;
    let rep = check_preliouville_path(&path)?;
    let min_sym = rep.stations.iter().map(|x| x.preliouville.min_symplectic).fold(f64::INFINITY, f64::min);
    let min_pair = rep
        .stations
        .iter()
        .flat_map(|x| x.preliouville.boundaries.iter().map(|b| b.min_pairing))
        .fold(f64::INFINITY, f64::min);
    let ends_ok = rep.stations.iter().flat_map(|x| &x.liouville).all(|l| l.pass);
    out.checks.push(Check::flag("path certified", rep.pass).violation(rep.flagged.first().cloned()));
    out.checks.push(Check::new("path min symplectic", min_sym > 0.0, min_sym, 0.0));
    out.checks.push(Check::new("path min boundary pairing", min_pair > 0.0, min_pair, 0.0));
    out.checks.push(Check::flag("endpoints liouville at the boundary", ends_ok));

    let mut series = Series::new("stations", &["station", "min_symplectic", "min_pairing_minus", "min_pairing_plus"]);
    for (i, st) in rep.stations.iter().enumerate() {
        let b = &st.preliouville.boundaries;
        let pair_at = |k: usize| b.get(k).map_or(f64::NAN, |x| x.min_pairing);
        series.push(vec![i as f64, st.preliouville.min_symplectic, pair_at(0), pair_at(1)]);
    }
    out.series = vec![series];
    Ok(out)
}
