//! Pseudospectral Fourier space on the periodic chart `[0, 2π)²`.
//!
//! Coefficients are the complex 2D DFT coefficients scaled by `1/N²`, stored
//! in FFT order with `(re, im)` interleaved: mode `(a, b)` (u-frequency index
//! `a`, v-frequency index `b`) lives at `2 (a N + b)`. Nodes are
//! `(2π i / N, 2π j / N)` with flat index `i N + j`.
//!
//! For even `N` the Nyquist mode is interpreted as `cos(N u / 2)`, so its odd
//! derivatives vanish and real data stays real under differentiation.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub struct FourierSpace {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FourierSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierSpace").field("n", &self.n).finish()
    }
}

impl FourierSpace {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.n * self.n
    }

    pub fn n_coeffs(&self) -> usize {
        2 * self.n * self.n
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.n as f64;
        [h * (idx / self.n) as f64, h * (idx % self.n) as f64]
    }

    /// Chart quadrature weight `du dv` per node.
    pub fn weight(&self) -> f64 {
        let h = 2.0 * PI / self.n as f64;
        h * h
    }

    /// Signed integer frequency of FFT index `a`.
    pub fn freq(&self, a: usize) -> i64 {
        if 2 * a <= self.n {
            a as i64
        } else {
            a as i64 - self.n as i64
        }
    }

    pub fn is_nyquist(&self, a: usize) -> bool {
        self.n % 2 == 0 && 2 * a == self.n
    }

    /// Symbol of `∂^r` on mode index `a` (node-consistent).
    pub fn symbol(&self, a: usize, r: usize) -> Complex64 {
        let k = self.freq(a) as f64;
        if self.is_nyquist(a) {
            if r % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let s = if (r / 2) % 2 == 0 { 1.0 } else { -1.0 };
            return Complex64::new(s * k.powi(r as i32), 0.0);
        }
        Complex64::new(0.0, k).powi(r as i32)
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inv } else { &self.fwd };
        for row in data.chunks_mut(n) {
            plan.process(row);
        }
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }

    pub fn analyze_complex(&self, samples: &[Complex64]) -> Vec<Complex64> {
        let mut data = samples.to_vec();
        self.fft2(&mut data, false);
        let s = 1.0 / self.n_nodes() as f64;
        data.iter_mut().for_each(|c| *c *= s);
        data
    }

    pub fn synthesize_complex(&self, coeffs: &[Complex64], du: usize, dv: usize) -> Vec<Complex64> {
        let n = self.n;
        let mut data = coeffs.to_vec();
        if du + dv > 0 {
            for a in 0..n {
                let sa = self.symbol(a, du);
                for b in 0..n {
                    data[a * n + b] *= sa * self.symbol(b, dv);
                }
            }
        }
        self.fft2(&mut data, true);
        data
    }

    pub fn analyze(&self, samples: &[f64]) -> Vec<f64> {
        let z: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let c = self.analyze_complex(&z);
        let mut out = Vec::with_capacity(self.n_coeffs());
        for v in c {
            out.push(v.re);
            out.push(v.im);
        }
        out
    }

    pub fn to_complex(coeffs: &[f64]) -> Vec<Complex64> {
        coeffs.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect()
    }

    pub fn synthesize(&self, coeffs: &[f64], du: usize, dv: usize) -> Vec<f64> {
        let c = Self::to_complex(coeffs);
        self.synthesize_complex(&c, du, dv).iter().map(|z| z.re).collect()
    }

    /// One-dimensional basis values `∂^r e_a(x)` for every index `a`.
    fn basis_1d(&self, x: f64, r: usize) -> Vec<Complex64> {
        (0..self.n)
            .map(|a| {
                let k = self.freq(a) as f64;
                if self.is_nyquist(a) {
                    let (s, c) = (k * x).sin_cos();
                    let v = match r % 4 {
                        0 => c,
                        1 => -s,
                        2 => -c,
                        _ => s,
                    };
                    Complex64::new(v * k.powi(r as i32), 0.0)
                } else {
                    Complex64::new(0.0, k).powi(r as i32) * Complex64::from_polar(1.0, k * x)
                }
            })
            .collect()
    }

    /// Evaluate the trigonometric interpolant (or a derivative) off-grid.
    pub fn eval_complex(&self, coeffs: &[Complex64], p: [f64; 2], du: usize, dv: usize) -> Complex64 {
        let bu = self.basis_1d(p[0], du);
        let bv = self.basis_1d(p[1], dv);
        let n = self.n;
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            for b in 0..n {
                row += coeffs[a * n + b] * bv[b];
            }
            acc += row * bu[a];
        }
        acc
    }

    pub fn eval(&self, coeffs: &[f64], p: [f64; 2], du: usize, dv: usize) -> f64 {
        let c = Self::to_complex(coeffs);
        self.eval_complex(&c, p, du, dv).re
    }
}
