//! Pull-down profiles on `I = [-1, 1]`, the slope inequality
//! `d_theta f_theta + f_theta' w_theta <= w_theta o f_theta` checked region by
//! region, and the monotone homotopy from the profile back to the identity.

use rand::Rng;
use serde::Serialize;

use super::ConditionCheck;
use crate::error::{LabError, Result};
use crate::numeric::{linspace, rng, Step};

/// Family `psi_theta` of increasing maps of `I`, identity outside its support.
pub trait IntervalFamily: Sync {
    fn value(&self, theta: f64, z: f64) -> f64;
    fn dz(&self, theta: f64, z: f64) -> f64;
    fn dtheta(&self, theta: f64, z: f64) -> f64;
}

/// `(1 - (z/c)^2)^3` on `|z| < c` and its derivative.
pub fn bump(z: f64, c: f64) -> (f64, f64) {
    let x = z / c;
    if x.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - x * x;
    (q * q * q, -6.0 * x * q * q / c)
}

/// `psi_theta(z) = z + bump(z) * sum a sin(k theta + p)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BumpFamily {
    pub width: f64,
    /// `[a, k, p]`.
    pub modes: Vec<[f64; 3]>,
}

impl BumpFamily {
    pub fn single(amplitude: f64, width: f64) -> Self {
        BumpFamily { width, modes: vec![[amplitude, 1.0, 0.0]] }
    }

    /// Three modes with total amplitude at most `amplitude`.
    pub fn random(seed: u64, amplitude: f64, width: f64) -> Self {
        let mut g = rng(seed);
        let raw: Vec<f64> = (0..3).map(|_| g.gen_range(-1.0..1.0)).collect();
        let total: f64 = raw.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1e-12);
        let modes = raw
            .iter()
            .enumerate()
            .map(|(k, a)| [amplitude * a / total, (k + 1) as f64, g.gen_range(0.0..std::f64::consts::TAU)])
            .collect();
        BumpFamily { width, modes }
    }

    fn amp(&self, theta: f64) -> (f64, f64) {
        self.modes.iter().fold((0.0, 0.0), |(v, d), [a, k, p]| {
            (v + a * (k * theta + p).sin(), d + a * k * (k * theta + p).cos())
        })
    }
}

impl IntervalFamily for BumpFamily {
    fn value(&self, theta: f64, z: f64) -> f64 {
        z + bump(z, self.width).0 * self.amp(theta).0
    }
    fn dz(&self, theta: f64, z: f64) -> f64 {
        1.0 + bump(z, self.width).1 * self.amp(theta).0
    }
    fn dtheta(&self, theta: f64, z: f64) -> f64 {
        bump(z, self.width).0 * self.amp(theta).1
    }
}

/// The window slope `w_theta(z)`.
pub trait WindowSlope: Sync {
    fn value(&self, theta: f64, z: f64) -> f64;
    fn dz(&self, theta: f64, z: f64) -> f64;
}

/// `w_theta(z) = level - slope z + wobble sin theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearWindow {
    pub level: f64,
    pub slope: f64,
    pub wobble: f64,
}

impl WindowSlope for LinearWindow {
    fn value(&self, theta: f64, z: f64) -> f64 {
        self.level - self.slope * z + self.wobble * theta.sin()
    }
    fn dz(&self, _: f64, _: f64) -> f64 {
        -self.slope
    }
}

/// `int_0^s smoothstep`.
fn smoothstep_integral(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * s * (s * (s - 3.0) + 2.5)
}

/// Derivative ramp from `d0` to `d1` over `[start, start + width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
struct Segment {
    start: f64,
    end: f64,
    f0: f64,
    d0: f64,
    d1: f64,
}

impl Segment {
    fn eval(&self, z: f64) -> (f64, f64) {
        let w = self.end - self.start;
        if self.d0 == self.d1 || w == 0.0 {
            return (self.f0 + self.d0 * (z - self.start), self.d0);
        }
        let s = (z - self.start) / w;
        let ramp = Step::new(self.start, self.end);
        (
            self.f0 + self.d0 * (z - self.start) + (self.d1 - self.d0) * w * smoothstep_integral(s),
            self.d0 + (self.d1 - self.d0) * ramp.value(z),
        )
    }
    fn end_value(&self) -> f64 {
        self.eval(self.end).0
    }
}

/// Increasing `f : I -> I`: identity near `-1`, slope-`eps` line
/// `eps (z + 2) - 1` on `[-1 + sigma, 1 - sigma]`, steep rise back to the
/// identity near `1`. Corners are smoothed in the derivative.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulldownProfile {
    pub eps: f64,
    pub sigma: f64,
    /// `f = id` on `[-1, left_identity]` and `[right_identity, 1]`.
    pub left_identity: f64,
    pub right_identity: f64,
    pub steep_slope: f64,
    segments: Vec<Segment>,
}

impl PulldownProfile {
    /// `None` if `eps` is too large for the three-piece shape to fit.
    pub fn new(eps: f64, sigma: f64) -> Option<Self> {
        if !(eps > 0.0 && eps < 1.0 && sigma > 0.0 && sigma <= 0.1) {
            return None;
        }
        let line = |z: f64| eps * (z + 2.0) - 1.0;
        let corner = -1.0 + eps / (1.0 - eps);
        let wl = (sigma / 10.0).min(eps / (1.0 - eps));
        let a1 = corner - wl / 2.0;
        let lo = -1.0 + sigma;
        let q = 1.0 - sigma;
        if a1 + wl > lo {
            return None;
        }
        let w = sigma / 10.0;
        let ze = 1.0 - sigma / 4.0;
        let m = (ze - line(q) - w * (1.0 + eps) / 2.0) / (ze - q - w);
        if !(m > 1.0) {
            return None;
        }
        let mut segments = Vec::new();
        let mut push = |start: f64, end: f64, d0: f64, d1: f64, f0: f64| {
            let seg = Segment { start, end, f0, d0, d1 };
            segments.push(seg);
            seg.end_value()
        };
        let mut f0 = push(a1, a1 + wl, 1.0, eps, a1);
        f0 = push(a1 + wl, q, eps, eps, f0);
        f0 = push(q, q + w, eps, m, f0);
        f0 = push(q + w, ze - w, m, m, f0);
        push(ze - w, ze, m, 1.0, f0);
        Some(PulldownProfile { eps, sigma, left_identity: a1, right_identity: ze, steep_slope: m, segments })
    }

    pub fn line(&self, z: f64) -> f64 {
        self.eps * (z + 2.0) - 1.0
    }

    /// `(f(z), f'(z))`.
    pub fn eval(&self, z: f64) -> (f64, f64) {
        if z <= self.left_identity || z >= self.right_identity {
            return (z, 1.0);
        }
        let seg = self.segments.iter().find(|s| z <= s.end).unwrap_or(self.segments.last().unwrap());
        seg.eval(z)
    }

    /// The five defining conditions plus strict monotonicity at the samples `zs`.
    pub fn check(&self, zs: &[f64]) -> Vec<ConditionCheck> {
        let tol = 1e-12;
        let mut checks: Vec<ConditionCheck> = [
            "f = id near the ends",
            "f(z) <= z",
            "f' <= 1 on [-1, -1 + sigma]",
            "f = eps (z + 2) - 1 on [-1 + sigma, 1 - sigma]",
            "f(z) >= 0 implies f' >= 1",
            "f' > 0",
        ]
        .iter()
        .map(|n| ConditionCheck::new(n))
        .collect();
        let gap = (self.left_identity + 1.0).min(1.0 - self.right_identity);
        checks[0].record(gap, gap > 0.0, Vec::new);
        for &z in zs {
            let (f, d) = self.eval(z);
            let at = || vec![z];
            if z <= self.left_identity || z >= self.right_identity {
                checks[0].record(gap, f == z, at);
            }
            checks[1].record(z - f, f <= z + tol, at);
            if z <= -1.0 + self.sigma {
                checks[2].record(1.0 - d, d <= 1.0 + tol, at);
            }
            if (-1.0 + self.sigma..=1.0 - self.sigma).contains(&z) {
                let err = (f - self.line(z)).abs();
                checks[3].record(-err, err <= tol, at);
            }
            if f >= 0.0 {
                checks[4].record(d - 1.0, d >= 1.0 - tol, at);
            }
            checks[5].record(d, d > 0.0, at);
        }
        checks
    }
}

/// Saturation width of the clipping used by the homotopy.
pub const HOMOTOPY_SATURATION: f64 = 0.1;

/// `f_t(z) = z - c_t Phi((z - f(z)) / c_t)` with `c_t = (1 - t) c_0`, where
/// `Phi` is the identity below `1 - eta`, saturates at `1` and has `Phi' in [0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyHomotopy {
    pub profile: PulldownProfile,
    pub c0: f64,
    pub eta: f64,
}

impl FamilyHomotopy {
    pub fn new(profile: PulldownProfile) -> Self {
        let eta = HOMOTOPY_SATURATION;
        // z - f(z) <= 2 on I, so Phi acts as the identity at t = 0
        FamilyHomotopy { profile, c0: 2.0 / (1.0 - eta), eta }
    }

    fn phi(&self, x: f64) -> (f64, f64) {
        let (a, b) = (1.0 - self.eta, 1.0 + self.eta);
        if x <= a {
            (x, 1.0)
        } else if x >= b {
            (1.0, 0.0)
        } else {
            let ramp = Step::new(a, b);
            (x - (b - a) * smoothstep_integral((x - a) / (b - a)), 1.0 - ramp.value(x))
        }
    }

    /// `(f_t(z), f_t'(z))`.
    pub fn eval(&self, t: f64, z: f64) -> (f64, f64) {
        let (f, d) = self.profile.eval(z);
        let c = (1.0 - t) * self.c0;
        if c <= 0.0 {
            return (z, 1.0);
        }
        let (p, dp) = self.phi((z - f) / c);
        (z - c * p, 1.0 - dp * (1.0 - d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomotopyReport {
    pub conditions: Vec<ConditionCheck>,
    /// `max |f_0 - f|`, `max |f_1 - id|`.
    pub endpoint_defect: [f64; 2],
    pub pass: bool,
}

impl FamilyHomotopy {
    pub fn check(&self, ts: &[f64], zs: &[f64]) -> HomotopyReport {
        let tol = 1e-12;
        let mut checks: Vec<ConditionCheck> = [
            "f_t = id near the ends",
            "f_t(z) <= z",
            "z <= 0 implies f_t' <= 1",
            "f_t(z) >= 0 implies f_t' >= 1",
            "f_t' > 0",
        ]
        .iter()
        .map(|n| ConditionCheck::new(n))
        .collect();
        let mut endpoint_defect = [0.0f64; 2];
        for &z in zs {
            endpoint_defect[0] = endpoint_defect[0].max((self.eval(0.0, z).0 - self.profile.eval(z).0).abs());
            endpoint_defect[1] = endpoint_defect[1].max((self.eval(1.0, z).0 - z).abs());
        }
        for &t in ts {
            for &z in zs {
                let (f, d) = self.eval(t, z);
                let at = || vec![t, z];
                if z <= self.profile.left_identity || z >= self.profile.right_identity {
                    checks[0].record(-(f - z).abs(), f == z, at);
                }
                checks[1].record(z - f, f <= z + tol, at);
                if z <= 0.0 {
                    checks[2].record(1.0 - d, d <= 1.0 + tol, at);
                }
                if f >= 0.0 {
                    checks[3].record(d - 1.0, d >= 1.0 - tol, at);
                }
                checks[4].record(d, d > 0.0, at);
            }
        }
        let pass = checks.iter().all(|c| c.pass) && endpoint_defect.iter().all(|&e| e <= 1e-12);
        HomotopyReport { conditions: checks, endpoint_defect, pass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMargin {
    pub region: String,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    /// `min (w_theta(f_theta(z)) - s(theta, z))`.
    pub min_margin: f64,
    pub argmin: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulldownSpec {
    pub sigma: f64,
    pub n_theta: usize,
    pub n_z: usize,
    pub n_t: usize,
    /// Keep every `heatmap_stride`-th z sample in the heatmap table.
    pub heatmap_stride: usize,
}

impl Default for PulldownSpec {
    fn default() -> Self {
        PulldownSpec { sigma: 0.1, n_theta: 32, n_z: 4001, n_t: 21, heatmap_stride: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulldownReport {
    pub eps: f64,
    pub profile: PulldownProfile,
    pub profile_checks: Vec<ConditionCheck>,
    pub regions: Vec<RegionMargin>,
    pub homotopy: HomotopyReport,
    /// `(eps, worst margin or NaN if the profile shape did not fit)`.
    pub tried: Vec<(f64, f64)>,
    /// `(theta, z, margin)`.
    pub heatmap: Vec<(f64, f64, f64)>,
    pub pass: bool,
}

fn gate(psi: &dyn IntervalFamily, w: &dyn WindowSlope, spec: &PulldownSpec, thetas: &[f64], zs: &[f64]) -> Result<()> {
    if !(spec.sigma > 0.0 && spec.sigma <= 0.1) {
        return Err(LabError::Precondition(format!("sigma = {} must lie in (0, 0.1]", spec.sigma)));
    }
    let (lo, hi) = (-1.0 + spec.sigma, 1.0 - spec.sigma);
    for &th in thetas {
        for &z in zs {
            if !(psi.dz(th, z) > 0.0) {
                return Err(LabError::Precondition(format!("psi not increasing at theta = {th}, z = {z}")));
            }
            if (z < lo || z > hi) && (psi.value(th, z) != z || psi.dtheta(th, z) != 0.0) {
                return Err(LabError::Precondition(format!("psi not supported in [{lo}, {hi}] (z = {z})")));
            }
            if !(w.dz(th, z) < 0.0) {
                return Err(LabError::Precondition(format!("w not decreasing at theta = {th}, z = {z}")));
            }
            let v = w.value(th, z);
            if (z <= 0.0 && !(v > 0.0)) || (z >= 0.5 && !(v < 0.0)) {
                return Err(LabError::Precondition(format!(
                    "w violates the collar sign pattern at theta = {th}, z = {z} (w = {v})"
                )));
            }
        }
    }
    Ok(())
}

fn margins(
    profile: &PulldownProfile,
    psi: &dyn IntervalFamily,
    w: &dyn WindowSlope,
    thetas: &[f64],
    zs: &[f64],
    mut sink: impl FnMut(f64, f64, f64),
) -> Vec<RegionMargin> {
    let s = profile.sigma;
    let bounds = [(-1.0, -1.0 + s), (-1.0 + s, 1.0 - s), (1.0 - s, 1.0)];
    let names = ["[-1, -1 + sigma]", "[-1 + sigma, 1 - sigma]", "[1 - sigma, 1]"];
    let mut out: Vec<RegionMargin> = bounds
        .iter()
        .zip(names)
        .map(|(&(lo, hi), n)| RegionMargin {
            region: n.into(),
            lo,
            hi,
            samples: 0,
            min_margin: f64::INFINITY,
            argmin: (f64::NAN, f64::NAN),
        })
        .collect();
    for &th in thetas {
        for &z in zs {
            let p = psi.value(th, z);
            let (fp, dfp) = profile.eval(p);
            let slope = dfp * psi.dtheta(th, z) + dfp * psi.dz(th, z) * w.value(th, z);
            let margin = w.value(th, fp) - slope;
            sink(th, z, margin);
            let r = if z < -1.0 + s {
                0
            } else if z <= 1.0 - s {
                1
            } else {
                2
            };
            let reg = &mut out[r];
            reg.samples += 1;
            if margin < reg.min_margin {
                reg.min_margin = margin;
                reg.argmin = (th, z);
            }
        }
    }
    out
}

/// Halving search for `eps` in `2^-1 .. 2^-20` making the slope inequality
/// hold at every sample, region by region.
pub fn pulldown_profile(psi: &dyn IntervalFamily, w: &dyn WindowSlope, spec: &PulldownSpec) -> Result<PulldownReport> {
    let thetas: Vec<f64> = (0..spec.n_theta).map(|i| std::f64::consts::TAU * i as f64 / spec.n_theta as f64).collect();
    let zs = linspace(-1.0, 1.0, spec.n_z);
    gate(psi, w, spec, &thetas, &zs)?;
    let mut tried = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for k in 1..=20 {
        let eps = 2f64.powi(-k);
        let Some(profile) = PulldownProfile::new(eps, spec.sigma) else {
            tried.push((eps, f64::NAN));
            continue;
        };
        let profile_checks = profile.check(&zs);
        let regions = margins(&profile, psi, w, &thetas, &zs, |_, _, _| {});
        let worst = regions.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
        tried.push((eps, worst));
        best = best.max(worst);
        if !(worst >= 0.0 && profile_checks.iter().all(|c| c.pass)) {
            continue;
        }
        let mut heatmap = Vec::new();
        let stride = spec.heatmap_stride.max(1);
        let mut count = 0usize;
        margins(&profile, psi, w, &thetas, &zs, |th, z, m| {
            if count % stride == 0 {
                heatmap.push((th, z, m));
            }
            count += 1;
        });
        let homotopy = FamilyHomotopy::new(profile.clone()).check(&linspace(0.0, 1.0, spec.n_t), &zs);
        let pass = homotopy.pass;
        return Ok(PulldownReport { eps, profile, profile_checks, regions, homotopy, tried, heatmap, pass });
    }
    Err(LabError::SearchExhausted(format!("no eps in 2^-1..2^-20 satisfies the slope inequality; best worst margin {best:.3e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window() -> LinearWindow {
        LinearWindow { level: 0.45, slope: 1.0, wobble: 0.0 }
    }

    fn small() -> PulldownSpec {
        PulldownSpec { n_theta: 16, n_z: 2001, n_t: 11, ..PulldownSpec::default() }
    }

    #[test]
    fn profile_shape() {
        let p = PulldownProfile::new(1.0 / 16.0, 0.1).unwrap();
        let zs = linspace(-1.0, 1.0, 4001);
        for c in p.check(&zs) {
            assert!(c.pass, "{c:?}");
        }
        assert!(p.steep_slope > 1.0);
        assert!((p.eval(p.right_identity - 1e-9).0 - p.right_identity).abs() < 1e-7);
        assert!(PulldownProfile::new(0.25, 0.1).is_none());
    }

    #[test]
    fn identity_family_accepts_small_eps() {
        let psi = BumpFamily { width: 0.8, modes: vec![] };
        let rep = pulldown_profile(&psi, &window(), &small()).unwrap();
        assert!(rep.pass);
        assert!(rep.regions.iter().all(|r| r.min_margin >= 0.0));
        // first region: margin is w(f(z)) - f'(z) w(z) >= 0 from f' <= 1 and f <= z
        assert!(rep.regions[0].min_margin >= 0.0);
    }

    #[test]
    fn bump_family_passes_all_regions() {
        let psi = BumpFamily::single(0.05, 0.8);
        let rep = pulldown_profile(&psi, &window(), &small()).unwrap();
        assert!(rep.pass, "{:?}", rep.homotopy);
        assert_eq!(rep.regions.len(), 3);
        for r in &rep.regions {
            assert!(r.min_margin >= 0.0 && r.samples > 0, "{r:?}");
        }
        assert!(rep.eps <= 1.0 / 16.0);
        assert!(!rep.heatmap.is_empty());
    }

    #[test]
    fn sign_pattern_gate() {
        let psi = BumpFamily::single(0.05, 0.8);
        let bad = LinearWindow { level: -0.2, slope: 1.0, wobble: 0.0 };
        assert!(matches!(pulldown_profile(&psi, &bad, &small()), Err(LabError::Precondition(_))));
        // vanishes at z = 1/2, where strict negativity is required
        let edge = LinearWindow { level: 0.5, slope: 1.0, wobble: 0.0 };
        assert!(matches!(pulldown_profile(&psi, &edge, &small()), Err(LabError::Precondition(_))));
    }

    #[test]
    fn wide_support_rejected() {
        let psi = BumpFamily::single(0.05, 0.95);
        assert!(pulldown_profile(&psi, &window(), &small()).is_err());
    }

    #[test]
    fn homotopy_conditions() {
        let h = FamilyHomotopy::new(PulldownProfile::new(1.0 / 32.0, 0.1).unwrap());
        let rep = h.check(&linspace(0.0, 1.0, 41), &linspace(-1.0, 1.0, 4001));
        assert!(rep.pass, "{rep:?}");
        // the naive convex combination breaks the last condition
        let p = PulldownProfile::new(1.0 / 32.0, 0.1).unwrap();
        let (f, d) = p.eval(0.5);
        let t = 0.9;
        assert!((1.0 - t) * f + t * 0.5 >= 0.0 && (1.0 - t) * d + t < 1.0);
    }
}
