//! Partial derivatives of sampled arrays along one grid axis.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::grid::{AxisKind, ModelManifold};

/// `d/dq_axis` of `data` sampled on `m`.
pub fn partial(m: &ModelManifold, axis: usize, data: &[f64]) -> Vec<f64> {
    let ax = &m.axes[axis];
    let n = ax.n;
    let stride = m.strides()[axis];
    let outer = m.len() / (n * stride);
    let mut out = vec![0.0; data.len()];
    let mut line = vec![0.0; n];
    let mut dline = vec![0.0; n];
    let mut spectral = match ax.kind {
        AxisKind::Periodic => Some(Spectral::new(n, ax.length())),
        AxisKind::Interval => None,
    };
    let h = ax.spacing();
    for o in 0..outer {
        for s in 0..stride {
            let base = o * n * stride + s;
            for i in 0..n {
                line[i] = data[base + i * stride];
            }
            match spectral.as_mut() {
                Some(sp) => sp.derive(&line, &mut dline),
                None => fd4(&line, h, &mut dline),
            }
            for i in 0..n {
                out[base + i * stride] = dline[i];
            }
        }
    }
    out
}

struct Spectral {
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
    factors: Vec<Complex<f64>>,
    buf: Vec<Complex<f64>>,
}

impl Spectral {
    fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let two_pi = 2.0 * std::f64::consts::PI / length;
        let factors = (0..n)
            .map(|k| {
                let freq = if 2 * k < n {
                    k as f64
                } else if 2 * k == n {
                    0.0
                } else {
                    k as f64 - n as f64
                };
                Complex::new(0.0, two_pi * freq / n as f64)
            })
            .collect();
        Spectral { fwd, inv, factors, buf: vec![Complex::new(0.0, 0.0); n] }
    }

    fn derive(&mut self, line: &[f64], out: &mut [f64]) {
        for (b, &x) in self.buf.iter_mut().zip(line) {
            *b = Complex::new(x, 0.0);
        }
        self.fwd.process(&mut self.buf);
        for (b, f) in self.buf.iter_mut().zip(&self.factors) {
            *b *= f;
        }
        self.inv.process(&mut self.buf);
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = b.re;
        }
    }
}

/// Fourth-order finite differences with one-sided closures at both ends.
pub fn fd4(f: &[f64], h: f64, out: &mut [f64]) {
    let n = f.len();
    assert!(n >= 5, "fourth-order stencil needs five samples");
    let c = 1.0 / (12.0 * h);
    out[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    out[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    for i in 2..n - 2 {
        out[i] = c * ((f[i - 2] - f[i + 2]) + 8.0 * (f[i + 1] - f[i - 1]));
    }
    out[n - 2] = -c * (-3.0 * f[n - 1] - 10.0 * f[n - 2] + 18.0 * f[n - 3] - 6.0 * f[n - 4] + f[n - 5]);
    out[n - 1] =
        -c * (-25.0 * f[n - 1] + 48.0 * f[n - 2] - 36.0 * f[n - 3] + 16.0 * f[n - 4] - 3.0 * f[n - 5]);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::grid::Axis;
    use crate::fields::grid::ManifoldKind;

    #[test]
    fn fd4_exact_on_quartics() {
        let n = 12;
        let h = 0.1;
        let f: Vec<f64> = (0..n).map(|i| (i as f64 * h).powi(4) - 2.0 * (i as f64 * h)).collect();
        let mut d = vec![0.0; n];
        fd4(&f, h, &mut d);
        for i in 0..n {
            let x = i as f64 * h;
            assert!((d[i] - (4.0 * x.powi(3) - 2.0)).abs() < 1e-11, "i={i}");
        }
    }

    #[test]
    fn spectral_sine() {
        let m = ModelManifold::product(ManifoldKind::Custom, vec![Axis::periodic("x", 0.0, 1.0, 16)]).unwrap();
        let tau = 2.0 * std::f64::consts::PI;
        let f: Vec<f64> = (0..16).map(|i| (tau * 3.0 * i as f64 / 16.0).sin()).collect();
        let d = partial(&m, 0, &f);
        for i in 0..16 {
            let x = i as f64 / 16.0;
            assert!((d[i] - 3.0 * tau * (tau * 3.0 * x).cos()).abs() < 1e-11);
        }
    }
}
