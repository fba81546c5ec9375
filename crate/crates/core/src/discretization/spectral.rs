use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Fourier operators on the periodic box `[-L, L)` with `n` nodes.
///
/// Mode `j` carries wavenumber `π j / L` for `j ≤ n/2` and `π (j - n) / L`
/// above. The Nyquist mode is treated as the real cosine mode, so every
/// operator maps real samples to real samples.
pub(crate) struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    half_length: f64,
}

impl Spectral {
    pub(crate) fn new(n: usize, half_length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let base = std::f64::consts::PI / half_length;
        let wavenumbers =
            (0..n).map(|j| if j <= n / 2 { j as f64 * base } else { (j as f64 - n as f64) * base }).collect();
        Spectral { forward, inverse, wavenumbers, half_length }
    }

    pub(crate) fn max_wavenumber(&self) -> f64 {
        self.wavenumbers.iter().fold(0.0, |m, k| m.max(k.abs()))
    }

    fn n(&self) -> usize {
        self.wavenumbers.len()
    }

    fn modes(&self, f: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn samples(&self, mut modes: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut modes);
        let scale = 1.0 / self.n() as f64;
        modes.into_iter().map(|c| c.re * scale).collect()
    }

    /// Applies the real, even Fourier multiplier `m(k)`.
    pub(crate) fn multiply(&self, f: &[f64], m: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut modes = self.modes(f);
        for (c, &k) in modes.iter_mut().zip(&self.wavenumbers) {
            *c *= m(k);
        }
        self.samples(modes)
    }

    /// `x ↦ f(x - s)` with periodic wraparound.
    pub(crate) fn shift(&self, f: &[f64], s: f64) -> Vec<f64> {
        let n = self.n();
        let mut modes = self.modes(f);
        for (j, (c, &k)) in modes.iter_mut().zip(&self.wavenumbers).enumerate() {
            if n.is_multiple_of(2) && j == n / 2 {
                *c *= (k * s).cos();
            } else {
                *c *= Complex64::from_polar(1.0, -k * s);
            }
        }
        self.samples(modes)
    }

    /// Evaluates the real trigonometric interpolant at arbitrary points.
    pub(crate) fn evaluate(&self, f: &[f64], points: &[f64]) -> Vec<f64> {
        let n = self.n();
        let modes = self.modes(f);
        let nyquist = if n.is_multiple_of(2) { Some(n / 2) } else { None };
        let top = nyquist.unwrap_or(n / 2 + 1);
        let origin = -self.half_length;
        points
            .iter()
            .map(|&x| {
                let theta = std::f64::consts::PI * (x - origin) / self.half_length;
                let step = Complex64::from_polar(1.0, theta);
                let mut z = Complex64::new(1.0, 0.0);
                let mut acc = modes[0].re;
                for c in &modes[1..top] {
                    z *= step;
                    acc += 2.0 * (c * z).re;
                }
                if let Some(j) = nyquist {
                    acc += modes[j].re * (j as f64 * theta).cos();
                }
                acc / n as f64
            })
            .collect()
    }
}
