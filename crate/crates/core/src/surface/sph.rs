//! Real spherical harmonics up to degree `L` on a Gauss–Legendre × uniform
//! grid in the chart `(θ, φ)`.
//!
//! Mode `(ℓ, m)`, `-ℓ ≤ m ≤ ℓ`, has index `ℓ² + ℓ + m`. Real harmonics are
//! `√2 p_ℓm cos mφ` for `m > 0`, `p_ℓ0` for `m = 0` and `√2 p_ℓ|m| sin |m|φ`
//! for `m < 0`, where `p_ℓm` is the orthonormal associated Legendre function
//! (no Condon–Shortley phase). Nodes are `2L` Gauss–Legendre colatitudes times
//! `2L + 1` equispaced longitudes, flat index `iθ (2L+1) + iφ`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct SphSpace {
    l: usize,
    theta: Vec<f64>,
    gl_w: Vec<f64>,
    phi: Vec<f64>,
    // [iθ][tri(ℓ, m)] -> (p, p_θ, p_θθ)
    leg: Vec<Vec<[f64; 3]>>,
}

fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Gauss–Legendre nodes (descending in x) and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_table(l: usize, theta: f64) -> Vec<[f64; 3]> {
    let (s, c) = theta.sin_cos();
    let mut p = vec![0.0; tri(l, l) + 1];
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=l {
        if m > 0 {
            pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
        }
        p[tri(m, m)] = pmm;
        if m < l {
            p[tri(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * c * pmm;
        }
        for ll in (m + 2)..=l {
            let (lf, mf) = (ll as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[tri(ll, m)] = a * (c * p[tri(ll - 1, m)] - b * p[tri(ll - 2, m)]);
        }
    }
    let mut out = vec![[0.0; 3]; p.len()];
    for m in 0..=l {
        for ll in m..=l {
            let (lf, mf) = (ll as f64, m as f64);
            let prev = if ll > m { p[tri(ll - 1, m)] } else { 0.0 };
            let k = ((2.0 * lf + 1.0) / (2.0 * lf - 1.0) * (lf * lf - mf * mf)).max(0.0).sqrt();
            let v = p[tri(ll, m)];
            let d1 = (lf * c * v - k * prev) / s;
            let d2 = -c / s * d1 - (lf * (lf + 1.0) - mf * mf / (s * s)) * v;
            out[tri(ll, m)] = [v, d1, d2];
        }
    }
    out
}

impl SphSpace {
    pub fn new(l: usize) -> Self {
        let nt = 2 * l;
        let np = 2 * l + 1;
        let (x, gl_w) = gauss_legendre(nt);
        let theta: Vec<f64> = x.iter().map(|v| v.acos()).collect();
        let phi = (0..np).map(|j| 2.0 * PI * j as f64 / np as f64).collect();
        let leg = theta.iter().map(|&t| legendre_table(l, t)).collect();
        Self { l, theta, gl_w, phi, leg }
    }

    pub fn degree(&self) -> usize {
        self.l
    }

    pub fn n_nodes(&self) -> usize {
        self.theta.len() * self.phi.len()
    }

    pub fn n_coeffs(&self) -> usize {
        (self.l + 1) * (self.l + 1)
    }

    pub fn mode_index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    pub fn node(&self, idx: usize) -> [f64; 2] {
        let np = self.phi.len();
        [self.theta[idx / np], self.phi[idx % np]]
    }

    /// Chart quadrature weight for `dθ dφ` at node `idx`.
    pub fn weight(&self, idx: usize) -> f64 {
        let np = self.phi.len();
        let it = idx / np;
        self.gl_w[it] / self.theta[it].sin() * 2.0 * PI / np as f64
    }

    /// Quadrature projection onto the harmonics.
    pub fn analyze(&self, samples: &[f64]) -> Vec<f64> {
        let l = self.l;
        let np = self.phi.len();
        let dphi = 2.0 * PI / np as f64;
        let mut out = vec![0.0; self.n_coeffs()];
        let r2 = std::f64::consts::SQRT_2;
        for (it, table) in self.leg.iter().enumerate() {
            let row = &samples[it * np..(it + 1) * np];
            for m in 0..=l {
                let (mut bc, mut bs) = (0.0, 0.0);
                for (ip, &f) in row.iter().enumerate() {
                    let (s, c) = (m as f64 * self.phi[ip]).sin_cos();
                    bc += f * c;
                    bs += f * s;
                }
                let (bc, bs) = if m == 0 { (bc * dphi, 0.0) } else { (bc * dphi * r2, bs * dphi * r2) };
                for ll in m..=l {
                    let p = table[tri(ll, m)][0] * self.gl_w[it];
                    out[ll * ll + ll + m] += p * bc;
                    if m > 0 {
                        out[ll * ll + ll - m] += p * bs;
                    }
                }
            }
        }
        out
    }

    /// Values of `∂_θ^dt ∂_φ^dp` of the expansion at the nodes (`dt ≤ 2`).
    pub fn synthesize(&self, coeffs: &[f64], dt: usize, dp: usize) -> Vec<f64> {
        let l = self.l;
        let np = self.phi.len();
        let r2 = std::f64::consts::SQRT_2;
        let shift = dp as f64 * PI / 2.0;
        let mut out = vec![0.0; self.n_nodes()];
        for (it, table) in self.leg.iter().enumerate() {
            let mut ac = vec![0.0; l + 1];
            let mut as_ = vec![0.0; l + 1];
            for m in 0..=l {
                for ll in m..=l {
                    let p = table[tri(ll, m)][dt];
                    ac[m] += coeffs[ll * ll + ll + m] * p;
                    if m > 0 {
                        as_[m] += coeffs[ll * ll + ll - m] * p;
                    }
                }
            }
            for ip in 0..np {
                let mut v = if dp == 0 { ac[0] } else { 0.0 };
                for m in 1..=l {
                    let mf = m as f64;
                    let arg = mf * self.phi[ip] + shift;
                    v += r2 * mf.powi(dp as i32) * (ac[m] * arg.cos() + as_[m] * arg.sin());
                }
                out[it * np + ip] = v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(6);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let i10: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((i10 - 2.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn harmonics_are_orthonormal() {
        let sp = SphSpace::new(6);
        let nm = sp.n_coeffs();
        let mut fields = Vec::new();
        for k in 0..nm {
            let mut c = vec![0.0; nm];
            c[k] = 1.0;
            fields.push(sp.synthesize(&c, 0, 0));
        }
        for a in 0..nm {
            for b in 0..nm {
                let ip: f64 = (0..sp.n_nodes())
                    .map(|i| sp.weight(i) * sp.node(i)[0].sin() * fields[a][i] * fields[b][i])
                    .sum();
                let e = if a == b { 1.0 } else { 0.0 };
                assert!((ip - e).abs() < 1e-12, "{a} {b} {ip}");
            }
        }
    }

    #[test]
    fn low_degree_closed_forms() {
        let sp = SphSpace::new(8);
        // Y_1,1 = sqrt(3/4π) sinθ cosφ
        let mut c = vec![0.0; sp.n_coeffs()];
        c[SphSpace::mode_index(1, 1)] = 1.0;
        let k = (3.0 / (4.0 * PI)).sqrt();
        let v = sp.synthesize(&c, 0, 0);
        let vt = sp.synthesize(&c, 1, 0);
        let vtt = sp.synthesize(&c, 2, 0);
        let vtp = sp.synthesize(&c, 1, 1);
        for i in 0..sp.n_nodes() {
            let [t, p] = sp.node(i);
            assert!((v[i] - k * t.sin() * p.cos()).abs() < 1e-13);
            assert!((vt[i] - k * t.cos() * p.cos()).abs() < 1e-12);
            assert!((vtt[i] + k * t.sin() * p.cos()).abs() < 1e-11);
            assert!((vtp[i] + k * t.cos() * p.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn analysis_inverts_synthesis() {
        let sp = SphSpace::new(7);
        let c: Vec<f64> = (0..sp.n_coeffs()).map(|k| ((k * 7 + 3) % 11) as f64 / 11.0 - 0.4).collect();
        let back = sp.analyze(&sp.synthesize(&c, 0, 0));
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
