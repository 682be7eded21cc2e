//! Area, the curvature energy `F = ∫(1+|II|²)² dvol`, the relaxed energy
//! `A^σ = Area + σ² F`, and their first and second variations.
//!
//! Everything is pointwise in the 2-jet of the variation, so densities are
//! evaluated node by node and reduced in node order. A jet is a flat slice of
//! length `6Q` laid out slot-major as `(w, w_1, w_2, w_11, w_12, w_22)`.
//!
//! Off the unit sphere `F` is extended by `∫(c + |II_R|²)² dvol` with `II_R`
//! the second fundamental form in `R^Q` and `c = -1` (sphere) or `c = 1`
//! (flat ambient). On `S^{Q-1}` the radial part of `II_R` contributes exactly
//! `2` to `|II_R|²`, so this agrees with `F` for every immersion into the
//! sphere, and it gives the free path `Φ + t w` a well-defined energy.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientManifold;
use crate::error::{Error, Result};
use crate::surface::{GeometryData, Jets, NodeGeometry, SampledImmersion, Space};
use crate::vecops::{axpy, dot, norm2};

type M2 = [[f64; 2]; 2];

/// Slot of symmetric pair `(i, j)` among `[11, 12, 22]`.
#[inline]
fn sym(i: usize, j: usize) -> usize {
    i + j
}

fn mm(a: &M2, b: &M2) -> M2 {
    let mut r = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// `Σ a^{ik} b^{jl} p[ij][kl]` for a table `p` of slot pairings.
fn c4(a: &M2, b: &M2, p: &[[f64; 3]; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += a[i][k] * b[j][l] * p[sym(i, j)][sym(k, l)];
                }
            }
        }
    }
    s
}

fn dots(x: &[Vec<f64>; 3], y: &[Vec<f64>; 3]) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            p[a][b] = dot(&x[a], &y[b]);
        }
    }
    p
}

fn outer(x: &[f64; 3], y: &[f64; 3]) -> [[f64; 3]; 3] {
    let mut p = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            p[a][b] = x[a] * y[b];
        }
    }
    p
}

/// Extension constant `c` of `F` off the ambient manifold.
pub fn extension_constant(ambient: &AmbientManifold) -> f64 {
    1.0 - ambient.radial_ii_norm2()
}

// ---------------------------------------------------------------------------
// Ambient fields and variations
// ---------------------------------------------------------------------------

/// Closed-form ambient vector field `v: R^Q → R^Q` with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AmbientField {
    Constant { value: Vec<f64> },
    /// `v(z) = A z`.
    Linear { matrix: Vec<Vec<f64>> },
    /// `v_target(z) = coeff Π z_k^{p_k}`.
    Monomial { target: usize, coeff: f64, powers: Vec<u32> },
    /// `v_target(z) = coeff sin(freq · z + phase)`.
    Trig { target: usize, coeff: f64, freq: Vec<f64>, phase: f64 },
    Sum { terms: Vec<AmbientField> },
}

fn monomial(z: &[f64], powers: &[u32], skip: &[usize]) -> f64 {
    let mut p = powers.to_vec();
    let mut c = 1.0;
    for &s in skip {
        if p[s] == 0 {
            return 0.0;
        }
        c *= p[s] as f64;
        p[s] -= 1;
    }
    c * z.iter().zip(&p).map(|(x, &e)| x.powi(e as i32)).product::<f64>()
}

impl AmbientField {
    pub fn value(&self, z: &[f64]) -> Vec<f64> {
        let q = z.len();
        let mut out = vec![0.0; q];
        self.accumulate(z, &mut out, &mut [], &mut []);
        let _ = q;
        out
    }

    /// Row-major Jacobian `J[a * Q + b] = ∂v_a / ∂z_b`.
    pub fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        let q = z.len();
        let mut j = vec![0.0; q * q];
        let mut v = vec![0.0; q];
        self.accumulate(z, &mut v, &mut j, &mut []);
        j
    }

    /// `H[a Q² + b Q + c] = ∂²v_a / ∂z_b ∂z_c`.
    pub fn hessian(&self, z: &[f64]) -> Vec<f64> {
        let q = z.len();
        let mut h = vec![0.0; q * q * q];
        let mut v = vec![0.0; q];
        let mut j = vec![0.0; q * q];
        self.accumulate(z, &mut v, &mut j, &mut h);
        h
    }

    fn accumulate(&self, z: &[f64], v: &mut [f64], jac: &mut [f64], hes: &mut [f64]) {
        let q = z.len();
        match self {
            AmbientField::Constant { value } => axpy(1.0, value, v),
            AmbientField::Linear { matrix } => {
                for a in 0..q {
                    v[a] += dot(&matrix[a], z);
                    if !jac.is_empty() {
                        for b in 0..q {
                            jac[a * q + b] += matrix[a][b];
                        }
                    }
                }
            }
            AmbientField::Monomial { target, coeff, powers } => {
                let a = *target;
                v[a] += coeff * monomial(z, powers, &[]);
                if !jac.is_empty() {
                    for b in 0..q {
                        jac[a * q + b] += coeff * monomial(z, powers, &[b]);
                    }
                }
                if !hes.is_empty() {
                    for b in 0..q {
                        for c in 0..q {
                            hes[a * q * q + b * q + c] += coeff * monomial(z, powers, &[b, c]);
                        }
                    }
                }
            }
            AmbientField::Trig { target, coeff, freq, phase } => {
                let a = *target;
                let (s, c) = (dot(freq, z) + phase).sin_cos();
                v[a] += coeff * s;
                if !jac.is_empty() {
                    for b in 0..q {
                        jac[a * q + b] += coeff * c * freq[b];
                    }
                }
                if !hes.is_empty() {
                    for b in 0..q {
                        for cc in 0..q {
                            hes[a * q * q + b * q + cc] -= coeff * s * freq[b] * freq[cc];
                        }
                    }
                }
            }
            AmbientField::Sum { terms } => {
                for t in terms {
                    t.accumulate(z, v, jac, hes);
                }
            }
        }
    }
}

/// A deformation field `w` sampled on the grid (node-major), optionally
/// generated as `w = v ∘ Φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Variation {
    pub values: Vec<f64>,
    pub q: usize,
    pub generator: Option<AmbientField>,
}

impl Variation {
    pub fn new(values: Vec<f64>, q: usize) -> Self {
        Self { values, q, generator: None }
    }

    pub fn zeros(phi: &SampledImmersion) -> Self {
        Self::new(vec![0.0; phi.n_nodes() * phi.dim()], phi.dim())
    }

    pub fn from_field(phi: &SampledImmersion, v: AmbientField) -> Self {
        let values = (0..phi.n_nodes()).flat_map(|i| v.value(phi.point(i))).collect();
        Self { values, q: phi.dim(), generator: Some(v) }
    }

    pub fn at(&self, node: usize) -> &[f64] {
        &self.values[node * self.q..(node + 1) * self.q]
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.values.iter().map(|x| a * x).collect(), self.q)
    }

    pub fn add(&self, other: &Variation, b: f64) -> Self {
        Self::new(self.values.iter().zip(&other.values).map(|(x, y)| x + b * y).collect(), self.q)
    }

    pub fn jets(&self, space: &Space) -> Jets {
        space.jets_of_field(&self.values, self.q)
    }

    pub fn max_norm(&self) -> f64 {
        self.values.chunks(self.q).map(|v| norm2(v).sqrt()).fold(0.0, f64::max)
    }

    /// Jets from the generator by the chain rule: `dw = ∂v·dΦ`,
    /// `∂²w = ∂²v(dΦ, dΦ) + ∂v·∂²Φ`.
    pub fn generator_jets(&self, phi: &SampledImmersion) -> Result<Jets> {
        let v = self.generator.as_ref().ok_or(Error::MissingGenerator)?;
        let pj = phi.jets();
        let q = self.q;
        let mut out = Jets::zeros(q, pj.n);
        for i in 0..pj.n {
            let z = pj.at(0, i);
            let jac = v.jacobian(z);
            let hes = v.hessian(z);
            let val = v.value(z);
            out.d[0][i * q..(i + 1) * q].copy_from_slice(&val);
            let pairs = [(0, 0), (0, 1), (1, 1)];
            for a in 0..q {
                for s in 0..2 {
                    out.d[1 + s][i * q + a] = dot(&jac[a * q..(a + 1) * q], pj.at(1 + s, i));
                }
                for (k, (s, t)) in pairs.iter().enumerate() {
                    let mut acc = dot(&jac[a * q..(a + 1) * q], pj.at(3 + k, i));
                    let ds = pj.at(1 + s, i);
                    let dt = pj.at(1 + t, i);
                    for b in 0..q {
                        for c in 0..q {
                            acc += hes[a * q * q + b * q + c] * ds[b] * dt[c];
                        }
                    }
                    out.d[3 + k][i * q + a] = acc;
                }
            }
        }
        Ok(out)
    }
}

/// Flat `6Q` jet of a field at one node.
pub(crate) fn node_jet(j: &Jets, node: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(6 * j.q);
    for slot in 0..6 {
        out.extend_from_slice(j.at(slot, node));
    }
    out
}

// ---------------------------------------------------------------------------
// Pointwise densities
// ---------------------------------------------------------------------------

/// Variational densities of Area and `F` at one node; all values include the
/// area element `√det g` but not the chart quadrature weight.
pub(crate) struct NodeForms<'a> {
    pub geo: &'a NodeGeometry,
    pub c: f64,
    pub sphere: bool,
}

struct Linear {
    a1: f64,
    s: M2,
    d: [Vec<f64>; 3],
    e: f64,
}

impl<'a> NodeForms<'a> {
    pub fn new(geo: &'a NodeGeometry, ambient: &AmbientManifold) -> Self {
        Self { geo, c: extension_constant(ambient), sphere: ambient.is_sphere() }
    }

    fn q(&self) -> usize {
        self.geo.point.len()
    }

    fn slot<'j>(&self, j: &'j [f64], k: usize) -> &'j [f64] {
        let q = self.q();
        &j[k * q..(k + 1) * q]
    }

    fn cs(&self) -> f64 {
        self.c + self.geo.ii_flat_norm2
    }

    fn linear(&self, j: &[f64]) -> Linear {
        let g = self.geo;
        let gi = &g.g_inv;
        let w = [self.slot(j, 1), self.slot(j, 2)];
        let mut a1 = 0.0;
        let mut pw = [[0.0; 2]; 2]; // Φ_i · w_j
        for i in 0..2 {
            for k in 0..2 {
                pw[i][k] = dot(&g.d[i], w[k]);
            }
        }
        for i in 0..2 {
            for k in 0..2 {
                a1 += gi[i][k] * pw[i][k];
            }
        }
        let s = [
            [pw[0][0], 0.5 * (pw[0][1] + pw[1][0])],
            [0.5 * (pw[0][1] + pw[1][0]), pw[1][1]],
        ];
        let d: [Vec<f64>; 3] = std::array::from_fn(|k| {
            let mut v = self.slot(j, 3 + k).to_vec();
            axpy(-g.gamma[0][k], w[0], &mut v);
            axpy(-g.gamma[1][k], w[1], &mut v);
            v
        });
        let s_sharp = mm(&mm(gi, &s), gi);
        let e = c4(gi, gi, &dots(&g.ii_flat, &d)) - 2.0 * c4(&s_sharp, gi, &dots(&g.ii_flat, &g.ii_flat));
        Linear { a1, s, d, e }
    }

    /// First variations `(dArea, dF)` along the free path.
    pub fn first(&self, j: &[f64]) -> (f64, f64) {
        let lin = self.linear(j);
        let cs = self.cs();
        let vol = self.geo.sqrt_det;
        (lin.a1 * vol, (4.0 * cs * lin.e + cs * cs * lin.a1) * vol)
    }

    /// Second variations `(d²Area, d²F)` along the free path `Φ + t w`.
    pub fn second(&self, j: &[f64]) -> (f64, f64) {
        let g = self.geo;
        let gi = &g.g_inv;
        let lin = self.linear(j);
        let w = [self.slot(j, 1), self.slot(j, 2)];
        let m = [
            [dot(w[0], w[0]), dot(w[0], w[1])],
            [dot(w[1], w[0]), dot(w[1], w[1])],
        ];
        let dwdw = gi[0][0] * m[0][0] + 2.0 * gi[0][1] * m[0][1] + gi[1][1] * m[1][1];
        let s_sharp = mm(&mm(gi, &lin.s), gi);
        let s2 = {
            let t = mm(&s_sharp, &lin.s);
            t[0][0] + t[1][1]
        };
        let area_q = dwdw + lin.a1 * lin.a1 - 2.0 * s2;

        // d/dt of E along the free path
        let perp_d: [Vec<f64>; 3] = std::array::from_fn(|k| {
            let t = g.pi_t(&lin.d[k]);
            lin.d[k].iter().zip(&t).map(|(a, b)| a - b).collect()
        });
        let ii = &g.ii_flat;
        let ii_ii = dots(ii, ii);
        let mut e_dot = c4(gi, gi, &dots(&perp_d, &perp_d));
        e_dot -= 8.0 * c4(&s_sharp, gi, &dots(ii, &lin.d));
        let a: [[f64; 3]; 2] = std::array::from_fn(|r| std::array::from_fn(|x| dot(&ii[x], w[r])));
        let b: [[f64; 3]; 2] = std::array::from_fn(|s| std::array::from_fn(|x| dot(&g.d[s], &lin.d[x])));
        for r in 0..2 {
            for s in 0..2 {
                e_dot -= 2.0 * gi[r][s] * c4(gi, gi, &outer(&a[r], &b[s]));
                e_dot -= gi[r][s] * c4(gi, gi, &outer(&a[s], &a[r]));
            }
        }
        let gsgsg = mm(&mm(&s_sharp, &lin.s), gi);
        e_dot += 8.0 * c4(&gsgsg, gi, &ii_ii);
        let gmg = mm(&mm(gi, &m), gi);
        e_dot -= 2.0 * c4(&gmg, gi, &ii_ii);
        e_dot += 4.0 * c4(&s_sharp, &s_sharp, &ii_ii);

        let cs = self.cs();
        let e = lin.e;
        let f_q = 8.0 * e * e + 4.0 * cs * e_dot + 8.0 * cs * e * lin.a1 + cs * cs * area_q;
        let vol = g.sqrt_det;
        (area_q * vol, f_q * vol)
    }

    /// Jet of the retraction curvature `κ(w, w) = -|w|² Φ` (zero in flat space).
    pub fn kappa(&self, j: &[f64]) -> Vec<f64> {
        let q = self.q();
        let mut out = vec![0.0; 6 * q];
        if !self.sphere {
            return out;
        }
        let g = self.geo;
        let w = self.slot(j, 0);
        let wd = [self.slot(j, 1), self.slot(j, 2)];
        let ww = norm2(w);
        let wwi = [dot(w, wd[0]), dot(w, wd[1])];
        {
            let (v, _) = out.split_at_mut(q);
            axpy(-ww, &g.point, v);
        }
        for s in 0..2 {
            let v = &mut out[(1 + s) * q..(2 + s) * q];
            axpy(-2.0 * wwi[s], &g.point, v);
            axpy(-ww, &g.d[s], v);
        }
        for (k, (s, t)) in [(0, 0), (0, 1), (1, 1)].into_iter().enumerate() {
            let wst = self.slot(j, 3 + k);
            let coef = -2.0 * (dot(wd[s], wd[t]) + dot(w, wst));
            let v = &mut out[(3 + k) * q..(4 + k) * q];
            axpy(coef, &g.point, v);
            axpy(-2.0 * wwi[s], &g.d[t], v);
            axpy(-2.0 * wwi[t], &g.d[s], v);
            axpy(-ww, &g.dd[k], v);
        }
        out
    }

    /// Quadratic form of `D²A^σ` along the projected path `π_M(Φ + t w)`.
    pub fn constrained(&self, j: &[f64], sigma: f64) -> f64 {
        let (a2, f2) = self.second(j);
        let (a1, f1) = self.first(&self.kappa(j));
        let s2 = sigma * sigma;
        (a2 + s2 * f2) + (a1 + s2 * f1)
    }

    /// Dense symmetric matrix of `constrained` on the `6Q` jet space.
    pub fn constrained_matrix(&self, sigma: f64) -> DMatrix<f64> {
        let n = 6 * self.q();
        let mut diag = vec![0.0; n];
        let mut e = vec![0.0; n];
        for i in 0..n {
            e[i] = 1.0;
            diag[i] = self.constrained(&e, sigma);
            e[i] = 0.0;
        }
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = diag[i];
            for k in (i + 1)..n {
                e[i] = 1.0;
                e[k] = 1.0;
                let v = 0.5 * (self.constrained(&e, sigma) - diag[i] - diag[k]);
                e[i] = 0.0;
                e[k] = 0.0;
                m[(i, k)] = v;
                m[(k, i)] = v;
            }
        }
        m
    }
}

/// Polarization `¼[Q(a + b) - Q(a - b)]` of a pointwise quadratic form.
fn polarize<F: Fn(&[f64]) -> (f64, f64)>(q: F, a: &[f64], b: &[f64]) -> (f64, f64) {
    let p: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let m: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (p1, p2) = q(&p);
    let (m1, m2) = q(&m);
    (0.25 * (p1 - m1), 0.25 * (p2 - m2))
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub area: f64,
    pub f_energy: f64,
    pub a_sigma: f64,
    pub sigma: f64,
}

pub fn energies_from_geometry(geo: &GeometryData, sigma: f64) -> EnergyReport {
    let c = extension_constant(&geo.ambient);
    let mut area = 0.0;
    let mut f = 0.0;
    for (i, n) in geo.nodes.iter().enumerate() {
        let dv = geo.dvol(i);
        let cs = c + n.ii_flat_norm2;
        area += dv;
        f += cs * cs * dv;
    }
    EnergyReport { area, f_energy: f, a_sigma: area + sigma * sigma * f, sigma }
}

/// Energies of the map whose jets are given (need not lie on `M`).
pub fn energies_from_jets(
    ambient: &AmbientManifold,
    jets: &Jets,
    chart_weights: Vec<f64>,
    sigma: f64,
) -> Result<EnergyReport> {
    let geo = GeometryData::from_jets(ambient, jets, chart_weights)?;
    Ok(energies_from_geometry(&geo, sigma))
}

pub fn evaluate_energies(phi: &SampledImmersion, sigma: f64) -> Result<EnergyReport> {
    let geo = crate::surface::compute_geometry(phi)?;
    Ok(energies_from_geometry(&geo, sigma))
}

fn check_shape(phi: &SampledImmersion, w: &Variation) -> Result<()> {
    let expected = phi.n_nodes() * phi.dim();
    if w.values.len() != expected || w.q != phi.dim() {
        return Err(Error::ShapeMismatch { expected, got: w.values.len() });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    pub d_area: f64,
    pub d_f: f64,
}

impl FirstVariation {
    pub fn a_sigma(&self, sigma: f64) -> f64 {
        self.d_area + sigma * sigma * self.d_f
    }
}

pub(crate) fn first_variation_jets(geo: &GeometryData, wj: &Jets) -> FirstVariation {
    let parts: Vec<(f64, f64)> = (0..geo.n_nodes())
        .into_par_iter()
        .map(|i| {
            let (a, f) = NodeForms::new(&geo.nodes[i], &geo.ambient).first(&node_jet(wj, i));
            (a * geo.chart_weights[i], f * geo.chart_weights[i])
        })
        .collect();
    let (mut a, mut f) = (0.0, 0.0);
    for (x, y) in parts {
        a += x;
        f += y;
    }
    FirstVariation { d_area: a, d_f: f }
}

/// `DArea(w) = ∫⟨dΦ; dw⟩_g dvol` and `DF(w)`, along the free path.
pub fn first_variation(phi: &SampledImmersion, w: &Variation) -> Result<FirstVariation> {
    check_shape(phi, w)?;
    let geo = crate::surface::compute_geometry(phi)?;
    Ok(first_variation_jets(&geo, &w.jets(phi.space())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    pub d2_area: f64,
    pub d2_f: f64,
}

pub(crate) fn second_variation_jets(geo: &GeometryData, a: &Jets, b: &Jets) -> SecondVariation {
    let parts: Vec<(f64, f64)> = (0..geo.n_nodes())
        .into_par_iter()
        .map(|i| {
            let nf = NodeForms::new(&geo.nodes[i], &geo.ambient);
            let (x, y) = polarize(|j| nf.second(j), &node_jet(a, i), &node_jet(b, i));
            (x * geo.chart_weights[i], y * geo.chart_weights[i])
        })
        .collect();
    let (mut x, mut y) = (0.0, 0.0);
    for (p, q) in parts {
        x += p;
        y += q;
    }
    SecondVariation { d2_area: x, d2_f: y }
}

/// Bilinear second variations of Area and `F` along the free path.
pub fn second_variation_ambient(
    phi: &SampledImmersion,
    w: &Variation,
    w2: &Variation,
) -> Result<SecondVariation> {
    check_shape(phi, w)?;
    check_shape(phi, w2)?;
    let geo = crate::surface::compute_geometry(phi)?;
    let sp = phi.space();
    Ok(second_variation_jets(&geo, &w.jets(sp), &w2.jets(sp)))
}

/// Largest `|Φ·w|` relative to `max(1, |w|)` over the nodes.
pub fn tangency_defect(phi: &SampledImmersion, w: &Variation) -> f64 {
    if !phi.ambient().is_sphere() {
        return 0.0;
    }
    (0..phi.n_nodes())
        .map(|i| dot(phi.point(i), w.at(i)).abs() / norm2(w.at(i)).sqrt().max(1.0))
        .fold(0.0, f64::max)
}

pub const TANGENCY_TOL: f64 = 1e-10;

pub(crate) fn constrained_jets(geo: &GeometryData, a: &Jets, b: &Jets, sigma: f64) -> f64 {
    let parts: Vec<f64> = (0..geo.n_nodes())
        .into_par_iter()
        .map(|i| {
            let nf = NodeForms::new(&geo.nodes[i], &geo.ambient);
            let (x, _) = polarize(|j| (nf.constrained(j, sigma), 0.0), &node_jet(a, i), &node_jet(b, i));
            x * geo.chart_weights[i]
        })
        .collect();
    parts.iter().sum()
}

/// `D²A^σ(w, w')` along the projected path `t ↦ π_M(Φ + t w)`: the free
/// Hessian plus `DA^σ` applied to the retraction curvature.
pub fn second_variation_constrained(
    phi: &SampledImmersion,
    w: &Variation,
    w2: &Variation,
    sigma: f64,
) -> Result<f64> {
    check_shape(phi, w)?;
    check_shape(phi, w2)?;
    for v in [w, w2] {
        let t = tangency_defect(phi, v);
        if t > TANGENCY_TOL {
            return Err(Error::NotTangent { max_dot: t });
        }
    }
    let geo = crate::surface::compute_geometry(phi)?;
    let sp = phi.space();
    Ok(constrained_jets(&geo, &w.jets(sp), &w2.jets(sp), sigma))
}

/// Per-node symmetric 2-tensor with values in `R^Q`, stored as slots
/// `[11, 12, 22]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    pub q: usize,
    pub values: Vec<[Vec<f64>; 3]>,
}

impl TensorField {
    pub fn get(&self, node: usize, i: usize, j: usize) -> &[f64] {
        &self.values[node][sym(i, j)]
    }

    pub fn max_norm(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|t| t.iter().map(|v| norm2(v).sqrt()))
            .fold(0.0, f64::max)
    }
}

/// `(D^g dw)_{ij} = ∂²_{ij} w - Γ^s_{ij} ∂_s w`.
pub fn covariant_hessian(phi: &SampledImmersion, w: &Variation) -> Result<TensorField> {
    check_shape(phi, w)?;
    let geo = crate::surface::compute_geometry(phi)?;
    let wj = w.jets(phi.space());
    let values = (0..geo.n_nodes())
        .map(|i| {
            let n = &geo.nodes[i];
            std::array::from_fn(|k| {
                let mut v = wj.at(3 + k, i).to_vec();
                axpy(-n.gamma[0][k], wj.at(1, i), &mut v);
                axpy(-n.gamma[1][k], wj.at(2, i), &mut v);
                v
            })
        })
        .collect();
    Ok(TensorField { q: phi.dim(), values })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationBounds {
    pub lhs1: f64,
    pub rhs1: f64,
    pub lhs2: f64,
    pub rhs2: f64,
}

/// Both sides of the `C²` bounds for `w = v ∘ Φ`:
/// `|DF(w)| ≲ ∫(1+|II|²)[(1+|II|²)|∂v| + |II||∂²v|]` and
/// `|D²F(w,w)| ≲ ∫(1+|II|²)[(1+|II|²)|∂v|² + |∂²v|²]`.
pub fn composed_variation_bounds(phi: &SampledImmersion, v: &Variation) -> Result<VariationBounds> {
    check_shape(phi, v)?;
    let field = v.generator.as_ref().ok_or(Error::MissingGenerator)?;
    let geo = crate::surface::compute_geometry(phi)?;
    let wj = v.jets(phi.space());
    let d1 = first_variation_jets(&geo, &wj);
    let d2 = second_variation_jets(&geo, &wj, &wj);
    let (mut rhs1, mut rhs2) = (0.0, 0.0);
    for (i, n) in geo.nodes.iter().enumerate() {
        let z = phi.point(i);
        let dv = norm2(&field.jacobian(z)).sqrt();
        let ddv = norm2(&field.hessian(z)).sqrt();
        let one = 1.0 + n.ii_norm2;
        rhs1 += one * (one * dv + n.ii_norm2.sqrt() * ddv) * geo.dvol(i);
        rhs2 += one * (one * dv * dv + ddv * ddv) * geo.dvol(i);
    }
    Ok(VariationBounds { lhs1: d1.d_f.abs(), rhs1, lhs2: d2.d2_f.abs(), rhs2 })
}
