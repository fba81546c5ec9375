use std::f64::consts::PI;

/// Surface area of the unit sphere in `R^dim`, `2 π^{N/2} / Γ(N/2)`.
pub fn unit_sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        4 => 2.0 * PI * PI,
        5 => 8.0 * PI * PI / 3.0,
        6 => PI * PI * PI,
        7 => 16.0 * PI * PI * PI / 15.0,
        _ => panic!("unit_sphere_area: dimension {dim} outside 1..=7"),
    }
}

/// Conservative radial Laplacian on cell-centred nodes `r_i = (i + ½) R/n`.
///
/// `Δf_i = (F_{i+½} - F_{i-½}) / w_i` with face flux
/// `F_{i+½} = ω r_{i+½}^{N-1} (f_{i+1} - f_i) / dr` and node weight
/// `w_i = ω r_i^{N-1} dr`. The flux through `r = 0` vanishes; at `r = R`
/// the ghost value `-f_{n-1}` puts the zero on the boundary face.
pub(crate) struct Radial {
    dr: f64,
    weights: Vec<f64>,
    /// `conductance[i]` couples nodes `i` and `i + 1`; the last entry is the
    /// boundary coefficient (already doubled for the ghost node).
    conductance: Vec<f64>,
}

impl Radial {
    pub(crate) fn new(n: usize, radius: f64, dim: usize) -> Self {
        let dr = radius / n as f64;
        let omega = unit_sphere_area(dim);
        let p = dim as i32 - 1;
        let weights = (0..n).map(|i| omega * ((i as f64 + 0.5) * dr).powi(p) * dr).collect();
        let mut conductance: Vec<f64> = (0..n).map(|i| omega * ((i + 1) as f64 * dr).powi(p) / dr).collect();
        conductance[n - 1] *= 2.0;
        Radial { dr, weights, conductance }
    }

    pub(crate) fn nodes(&self) -> Vec<f64> {
        (0..self.weights.len()).map(|i| (i as f64 + 0.5) * self.dr).collect()
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Max row sum of `|Δ_h|`.
    pub(crate) fn laplacian_norm_bound(&self) -> f64 {
        let c = &self.conductance;
        (0..c.len())
            .map(|i| {
                let left = if i > 0 { c[i - 1] } else { 0.0 };
                2.0 * (c[i] + left) / self.weights[i]
            })
            .fold(0.0, f64::max)
    }

    pub(crate) fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        let mut inflow = 0.0;
        for i in 0..n {
            let outflow = if i + 1 < n { self.conductance[i] * (f[i + 1] - f[i]) } else { -self.conductance[i] * f[i] };
            out[i] = (outflow - inflow) / self.weights[i];
            inflow = outflow;
        }
        out
    }

    /// Solves `(Δ_h² + λ) x = f`. With `Δ_h = W⁻¹S` the symmetric form
    /// `T = W^{-½} S W^{-½}` gives `(T² + λ) y = W^{½} f`, `x = W^{-½} y`,
    /// a positive definite pentadiagonal system.
    pub(crate) fn solve_shifted(&self, f: &[f64], lambda: f64) -> Vec<f64> {
        let n = f.len();
        let c = &self.conductance;
        let sw: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        let tdiag: Vec<f64> = (0..n).map(|i| -(c[i] + if i > 0 { c[i - 1] } else { 0.0 }) / self.weights[i]).collect();
        let toff: Vec<f64> = (0..n).map(|i| if i + 1 < n { c[i] / (sw[i] * sw[i + 1]) } else { 0.0 }).collect();
        let mut d0 = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 0..n {
            let mut m = tdiag[i] * tdiag[i] + lambda + toff[i] * toff[i];
            if i > 0 {
                m += toff[i - 1] * toff[i - 1];
            }
            d0[i] = m;
            if i + 1 < n {
                d1[i] = toff[i] * (tdiag[i] + tdiag[i + 1]);
            }
            if i + 2 < n {
                d2[i] = toff[i] * toff[i + 1];
            }
        }
        let rhs: Vec<f64> = f.iter().zip(&sw).map(|(f, s)| f * s).collect();
        let y = banded_cholesky_solve(&mut d0, &mut d1, &mut d2, rhs);
        y.iter().zip(&sw).map(|(y, s)| y / s).collect()
    }

    /// Cubic Lagrange interpolation. Values at `r < 0` mirror evenly, values
    /// beyond the boundary face mirror oddly, and points outside `[0, R]`
    /// evaluate to zero.
    pub(crate) fn interpolate(&self, f: &[f64], points: &[f64]) -> Vec<f64> {
        let n = f.len() as isize;
        let radius = self.dr * n as f64;
        let sample = |j: isize| -> f64 {
            if j < 0 {
                f[(-j - 1) as usize]
            } else if j >= n {
                let m = 2 * n - 1 - j;
                if m >= 0 {
                    -f[m as usize]
                } else {
                    0.0
                }
            } else {
                f[j as usize]
            }
        };
        points
            .iter()
            .map(|&r| {
                let r = r.abs();
                if r > radius {
                    return 0.0;
                }
                let s = r / self.dr - 0.5;
                let base = s.floor() as isize;
                let t = s - base as f64;
                let (p0, p1, p2, p3) = (sample(base - 1), sample(base), sample(base + 1), sample(base + 2));
                // Lagrange basis on nodes -1, 0, 1, 2.
                let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
                let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
                let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
                let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
                l0 * p0 + l1 * p1 + l2 * p2 + l3 * p3
            })
            .collect()
    }
}

/// In-place Cholesky factorisation and solve for a symmetric positive
/// definite matrix with two off-diagonals (`d1[i] = A[i][i+1]`,
/// `d2[i] = A[i][i+2]`).
fn banded_cholesky_solve(d0: &mut [f64], d1: &mut [f64], d2: &mut [f64], mut b: Vec<f64>) -> Vec<f64> {
    let n = d0.len();
    // Factor A = L Lᵀ; L stored in the same arrays (l0 diag, l1 sub, l2 subsub).
    for i in 0..n {
        let mut diag = d0[i];
        if i >= 1 {
            diag -= d1[i - 1] * d1[i - 1];
        }
        if i >= 2 {
            diag -= d2[i - 2] * d2[i - 2];
        }
        let l = diag.sqrt();
        d0[i] = l;
        if i + 1 < n {
            let mut v = d1[i];
            if i >= 1 {
                v -= d2[i - 1] * d1[i - 1];
            }
            d1[i] = v / l;
        }
        if i + 2 < n {
            d2[i] /= l;
        }
    }
    for i in 0..n {
        let mut v = b[i];
        if i >= 1 {
            v -= d1[i - 1] * b[i - 1];
        }
        if i >= 2 {
            v -= d2[i - 2] * b[i - 2];
        }
        b[i] = v / d0[i];
    }
    for i in (0..n).rev() {
        let mut v = b[i];
        if i + 1 < n {
            v -= d1[i] * b[i + 1];
        }
        if i + 2 < n {
            v -= d2[i] * b[i + 2];
        }
        b[i] = v / d0[i];
    }
    b
}
