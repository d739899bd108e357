//! Small numerical helpers shared by the modules: deterministic summation,
//! quintic cutoffs, seeded generators and a least-squares slope fit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is bit-reproducible for a given input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 8;
    if xs.len() <= BLOCK {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Maximum slope of the quintic smoothstep on the unit interval.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 1.875;

/// Quintic smoothstep `6s^5 - 15s^4 + 10s^3`, clamped to `[0, 1]`.
/// C² with vanishing first and second derivatives at both ends.
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

pub fn smoothstep_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        30.0 * s * s * (1.0 - s) * (1.0 - s)
    }
}

/// Nondecreasing C² step: 0 for `x <= a`, 1 for `x >= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub a: f64,
    pub b: f64,
}

impl Step {
    pub fn new(a: f64, b: f64) -> Self {
        assert!(b > a, "step needs a < b");
        Step { a, b }
    }
    pub fn value(&self, x: f64) -> f64 {
        smoothstep((x - self.a) / (self.b - self.a))
    }
    pub fn deriv(&self, x: f64) -> f64 {
        smoothstep_deriv((x - self.a) / (self.b - self.a)) / (self.b - self.a)
    }
    pub fn max_slope(&self) -> f64 {
        SMOOTHSTEP_MAX_SLOPE / (self.b - self.a)
    }
}

/// Seeded generator used everywhere randomness appears.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxy: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    pairwise_sum(&sxy) / pairwise_sum(&sxx)
}

/// Uniform grid of `n` points on `[a, b]`, endpoints included.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                a + (b - a) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Classical fourth-order Runge–Kutta for `y' = f(s, y)` on a uniform grid.
/// Returns the states at every grid point.
pub fn rk4<F>(f: F, y0: &[f64], s0: f64, s1: f64, steps: usize) -> Vec<Vec<f64>>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let h = (s1 - s0) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = y0.to_vec();
    out.push(y.clone());
    let axpy = |y: &[f64], k: &[f64], c: f64| -> Vec<f64> {
        y.iter().zip(k).map(|(a, b)| a + c * b).collect()
    };
    for i in 0..steps {
        let s = s0 + h * i as f64;
        let k1 = f(s, &y);
        let k2 = f(s + 0.5 * h, &axpy(&y, &k1, 0.5 * h));
        let k3 = f(s + 0.5 * h, &axpy(&y, &k2, 0.5 * h));
        let k4 = f(s + h, &axpy(&y, &k3, h));
        for j in 0..y.len() {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(y.clone());
    }
    out
}

/// Five-point Gauss–Legendre rule on `[a, b]`: (nodes, weights).
pub fn gauss_legendre5(a: f64, b: f64) -> ([f64; 5], [f64; 5]) {
    const X: [f64; 5] = [
        -0.906_179_845_938_664,
        -0.538_469_310_105_683,
        0.0,
        0.538_469_310_105_683,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.236_926_885_056_189,
        0.478_628_670_499_366,
        0.568_888_888_888_889,
        0.478_628_670_499_366,
        0.236_926_885_056_189,
    ];
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut xs = [0.0; 5];
    let mut ws = [0.0; 5];
    for i in 0..5 {
        xs[i] = c + r * X[i];
        ws[i] = r * W[i];
    }
    (xs, ws)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `panels` panels.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut parts = Vec::with_capacity(panels);
    for p in 0..panels {
        let (xs, ws) = gauss_legendre5(a + h * p as f64, a + h * (p + 1) as f64);
        let mut s = 0.0;
        for i in 0..5 {
            s += ws[i] * f(xs[i]);
        }
        parts.push(s);
    }
    pairwise_sum(&parts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn smoothstep_shape() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        assert!((smoothstep_deriv(0.5) - SMOOTHSTEP_MAX_SLOPE).abs() < 1e-14);
        let st = Step::new(0.0, 0.6);
        assert!((st.max_slope() - 3.125).abs() < 1e-12);
    }

    #[test]
    fn rk4_exponential() {
        let ys = rk4(|_, y| vec![-y[0]], &[1.0], 0.0, 1.0, 100);
        assert!((ys[100][0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn gauss_integrates_quartic_exactly() {
        let v = integrate(|x| x.powi(4), 0.0, 1.0, 1);
        assert!((v - 0.2).abs() < 1e-14);
    }

    #[test]
    fn slope_fit() {
        let xs = linspace(0.0, 1.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        assert!((fit_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }
}
