//! Coulomb gauge on the conformal torus chart.
//!
//! With `z = u + iv`, `∂_z̄ = ½(∂_u + i∂_v)` has Fourier symbol
//! `(i/2)(m + in)`. A tangential field `dΦ·X` is encoded by the complex
//! function `ζ = X¹ + iX²` so that `dΦ·X = ζ Φ_z + ζ̄ Φ_z̄`. For a conformal
//! chart (`g = e^{2λ}(du² + dv²)`) its Coulomb image is
//! `∂_z(dΦ·X)·Φ_z = ½ e^{2λ} conj(∂_z̄ ζ)`.
//!
//! The gauge function space omits the Nyquist modes: their odd derivatives
//! vanish on the grid, which would otherwise add spurious elements to the
//! kernel of `∂_z̄`.

use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::energy::Variation;
use crate::error::{Error, Result};
use crate::surface::{compute_geometry, FourierSpace, GeometryData, Genus, SampledImmersion, Space, SurfaceTopology};
use crate::vecops::{dot, norm2};

/// Largest accepted conformal defect `|g11 - g22| + 2|g12|`.
pub const CONFORMAL_TOL: f64 = 1e-8;
/// Tolerance on the mean of a `∂̄` right-hand side.
pub const RANGE_TOL: f64 = 1e-10;
/// Slice membership threshold for `coupling_residual`.
pub const SLICE_TOL: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Holomorphic vector fields and quadratic differentials of the closed
/// surface, with the marked points used to fix the `Hol₁` freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct HolBasis {
    pub genus: Genus,
    pub marked_points: Vec<[f64; 2]>,
}

impl HolBasis {
    pub fn new(topology: &SurfaceTopology) -> Self {
        Self { genus: topology.genus, marked_points: topology.marked_points.clone() }
    }

    pub fn hol1_dim(&self) -> usize {
        match self.genus {
            Genus::Sphere => 3,
            Genus::Torus => 1,
        }
    }

    pub fn holq_dim(&self) -> usize {
        match self.genus {
            Genus::Sphere => 0,
            Genus::Torus => 1,
        }
    }

    /// Coefficient of `∂_z` of the `k`-th element of `Hol₁` at a chart point:
    /// `1, z, z²` in the stereographic coordinate on the sphere, `1` on the
    /// torus.
    pub fn hol1_eval(&self, k: usize, p: [f64; 2]) -> Complex64 {
        match self.genus {
            Genus::Torus => Complex64::new(1.0, 0.0),
            Genus::Sphere => {
                let z = Complex64::from_polar((0.5 * p[0]).tan(), p[1]);
                z.powu(k as u32)
            }
        }
    }

    /// Coefficients `c_k` such that `f + Σ c_k e_k` vanishes at every marked
    /// point, given the values of `f` there.
    pub fn normalization(&self, f_at_marks: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.hol1_dim();
        if f_at_marks.len() != n || self.marked_points.len() != n {
            return Err(Error::ShapeMismatch { expected: n, got: f_at_marks.len() });
        }
        let a = DMatrix::from_fn(n, n, |j, k| {
            let v = self.hol1_eval(k, self.marked_points[j]);
            Complex::new(v.re, v.im)
        });
        let b = DVector::from_iterator(n, f_at_marks.iter().map(|v| Complex::new(-v.re, -v.im)));
        let x = a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::InvalidTopology("marked points do not fix Hol₁".into()))?;
        Ok(x.iter().map(|c| Complex64::new(c.re, c.im)).collect())
    }
}

/// Coefficient `q` of `dz ⊗ dz` at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDiffField {
    pub values: Vec<Complex64>,
}

impl QuadDiffField {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DbarSolution {
    /// `ζ` at the nodes, `L²(g)`-orthogonal to `Hol₁`.
    pub zeta: Vec<Complex64>,
    /// Complex Fourier coefficients of `ζ` (Nyquist modes zero).
    pub coeffs: Vec<Complex64>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaugeDecomposition {
    /// Part orthogonal to `Hol₁`.
    pub f: Vec<Complex64>,
    /// Element of `Hol₁` added so that `X` vanishes at the marked point.
    pub h_f: Complex64,
    /// `X = (Re, Im)(f + h_f)` in chart components.
    pub x: Vec<[f64; 2]>,
    /// `X` rotated by the complex structure, `(-X², X¹)`.
    pub x_perp: Vec<[f64; 2]>,
    pub residual: f64,
    coeffs: Vec<Complex64>,
}

impl GaugeDecomposition {
    pub fn max_norm(&self) -> f64 {
        self.x.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max)
    }

    /// `X` at an arbitrary chart point.
    pub fn eval(&self, fs: &FourierSpace, p: [f64; 2]) -> [f64; 2] {
        let z = fs.eval_complex(&self.coeffs, p, 0, 0);
        [z.re, z.im]
    }
}

fn fourier(phi: &SampledImmersion) -> Result<&FourierSpace> {
    match phi.space() {
        Space::Fourier(fs) => Ok(fs),
        Space::Sph(_) => Err(Error::UnsupportedBasis),
    }
}

/// Geometry of a torus immersion whose chart is conformal.
fn conformal_geometry(phi: &SampledImmersion) -> Result<(&FourierSpace, GeometryData)> {
    let fs = fourier(phi)?;
    let geo = compute_geometry(phi)?;
    let max_defect = geo.max_conformal_defect();
    if max_defect > CONFORMAL_TOL {
        return Err(Error::NonConformalChart { max_defect });
    }
    Ok((fs, geo))
}

fn strip_nyquist(fs: &FourierSpace, c: &mut [Complex64]) {
    let n = fs.n();
    for a in 0..n {
        for b in 0..n {
            if fs.is_nyquist(a) || fs.is_nyquist(b) {
                c[a * n + b] = Complex64::new(0.0, 0.0);
            }
        }
    }
}

fn dbar_symbol(fs: &FourierSpace, a: usize, b: usize) -> Complex64 {
    0.5 * (fs.symbol(a, 1) + I * fs.symbol(b, 1))
}

/// `∂_z̄` of a complex field given by gauge-space coefficients.
fn dbar_coeffs(fs: &FourierSpace, c: &[Complex64]) -> Vec<Complex64> {
    let n = fs.n();
    let mut out = c.to_vec();
    for a in 0..n {
        for b in 0..n {
            out[a * n + b] *= dbar_symbol(fs, a, b);
        }
    }
    out
}

/// `∂_z̄ ζ` at the nodes, computed in the gauge function space.
pub fn dbar_apply(fs: &FourierSpace, zeta: &[Complex64]) -> Vec<Complex64> {
    let mut c = fs.analyze_complex(zeta);
    strip_nyquist(fs, &mut c);
    fs.synthesize_complex(&dbar_coeffs(fs, &c), 0, 0)
}

/// Complex `∂_z` of every component of a real vector field (node-major).
fn dz_field(fs: &FourierSpace, values: &[f64], q: usize) -> Vec<Vec<Complex64>> {
    let n = fs.n_nodes();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); q]; n];
    for c in 0..q {
        let col: Vec<f64> = (0..n).map(|i| values[i * q + c]).collect();
        let k = fs.analyze(&col);
        let du = fs.synthesize(&k, 1, 0);
        let dv = fs.synthesize(&k, 0, 1);
        for i in 0..n {
            out[i][c] = 0.5 * Complex64::new(du[i], -dv[i]);
        }
    }
    out
}

fn cdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Remove the `Hol_Q` component of `q`: the constant `α` with
/// `Σ (q - α) e^{-2λ} = 0`.
fn remove_holq(geo: &GeometryData, q: &mut [Complex64]) -> Complex64 {
    let w: Vec<f64> = geo.nodes.iter().map(|n| (-2.0 * n.lambda).exp()).collect();
    let alpha = q.iter().zip(&w).map(|(v, w)| v * w).sum::<Complex64>() / w.iter().sum::<f64>();
    q.iter_mut().for_each(|v| *v -= alpha);
    alpha
}

/// `D*_Φ w`: `∂_z w · ∂_z Φ` with its `Hol_Q` component removed.
pub fn coulomb_operator(phi: &SampledImmersion, w: &Variation) -> Result<QuadDiffField> {
    let (fs, geo) = conformal_geometry(phi)?;
    coulomb_with(fs, &geo, phi, w)
}

fn coulomb_with(
    fs: &FourierSpace,
    geo: &GeometryData,
    phi: &SampledImmersion,
    w: &Variation,
) -> Result<QuadDiffField> {
    let q = phi.dim();
    let expected = phi.n_nodes() * q;
    if w.values.len() != expected {
        return Err(Error::ShapeMismatch { expected, got: w.values.len() });
    }
    let dw = dz_field(fs, &w.values, q);
    let mut values: Vec<Complex64> = geo
        .nodes
        .iter()
        .zip(&dw)
        .map(|(n, dwi)| {
            let pz: Vec<Complex64> = (0..q).map(|c| 0.5 * Complex64::new(n.d[0][c], -n.d[1][c])).collect();
            cdot(dwi, &pz)
        })
        .collect();
    if phi.topology().genus == Genus::Torus {
        remove_holq(geo, &mut values);
    }
    Ok(QuadDiffField { values })
}

/// Solve `∂_z̄ ζ = rhs` with `ζ` orthogonal to `Hol₁` (the constants) in
/// `L²(g)`.
pub fn dbar_solve(phi: &SampledImmersion, rhs: &[Complex64]) -> Result<DbarSolution> {
    let fs = fourier(phi)?;
    let geo = compute_geometry(phi)?;
    dbar_solve_with(fs, &geo, rhs)
}

fn dbar_solve_with(fs: &FourierSpace, geo: &GeometryData, rhs: &[Complex64]) -> Result<DbarSolution> {
    let n = fs.n();
    if rhs.len() != n * n {
        return Err(Error::ShapeMismatch { expected: n * n, got: rhs.len() });
    }
    let mean = rhs.iter().sum::<Complex64>() / (n * n) as f64;
    if mean.norm() > RANGE_TOL {
        return Err(Error::NotInRange { mean: mean.norm() });
    }
    let mut c = fs.analyze_complex(rhs);
    strip_nyquist(fs, &mut c);
    for a in 0..n {
        for b in 0..n {
            let k = a * n + b;
            c[k] = if k == 0 { Complex64::new(0.0, 0.0) } else if c[k] == Complex64::new(0.0, 0.0) {
                c[k]
            } else {
                c[k] / dbar_symbol(fs, a, b)
            };
        }
    }
    let mut zeta = fs.synthesize_complex(&c, 0, 0);
    let w: Vec<f64> = geo.nodes.iter().map(|nd| (4.0 * nd.lambda).exp()).collect();
    let wm = zeta.iter().zip(&w).map(|(z, w)| z * w).sum::<Complex64>() / w.iter().sum::<f64>();
    zeta.iter_mut().for_each(|z| *z -= wm);
    c[0] -= wm;
    let back = fs.synthesize_complex(&dbar_coeffs(fs, &c), 0, 0);
    let residual = back.iter().zip(rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(DbarSolution { zeta, coeffs: c, residual })
}

/// Tangential field `X`, vanishing at the marked point, whose Coulomb image
/// matches that of `v`.
pub fn gauge_decompose(phi: &SampledImmersion, v: &Variation) -> Result<GaugeDecomposition> {
    let (fs, geo) = conformal_geometry(phi)?;
    gauge_decompose_with(fs, &geo, phi, v)
}

fn gauge_decompose_with(
    fs: &FourierSpace,
    geo: &GeometryData,
    phi: &SampledImmersion,
    v: &Variation,
) -> Result<GaugeDecomposition> {
    let q = coulomb_with(fs, geo, phi, v)?;
    let rhs: Vec<Complex64> = q
        .values
        .iter()
        .zip(&geo.nodes)
        .map(|(q, n)| 2.0 * (-2.0 * n.lambda).exp() * q.conj())
        .collect();
    let sol = dbar_solve_with(fs, geo, &rhs)?;
    let hol = HolBasis::new(phi.topology());
    let at_marks: Vec<Complex64> =
        hol.marked_points.iter().map(|&p| fs.eval_complex(&sol.coeffs, p, 0, 0)).collect();
    let h_f = hol.normalization(&at_marks)?[0];
    let mut coeffs = sol.coeffs.clone();
    coeffs[0] += h_f;
    let x: Vec<[f64; 2]> = sol.zeta.iter().map(|z| [(z + h_f).re, (z + h_f).im]).collect();
    let x_perp = x.iter().map(|v| [-v[1], v[0]]).collect();
    Ok(GaugeDecomposition { f: sol.zeta, h_f, x, x_perp, residual: sol.residual, coeffs })
}

/// Per-node tangential field `dΦ·X` for chart components `X`.
pub fn push_forward(phi: &SampledImmersion, x: &[[f64; 2]]) -> Result<Variation> {
    let geo = compute_geometry(phi)?;
    let q = phi.dim();
    let mut values = vec![0.0; phi.n_nodes() * q];
    for (i, n) in geo.nodes.iter().enumerate() {
        for c in 0..q {
            values[i * q + c] = n.d[0][c] * x[i][0] + n.d[1][c] * x[i][1];
        }
    }
    Ok(Variation::new(values, q))
}

/// `v - dΦ·X(v)`: the component of `v` in the Coulomb slice.
pub fn slice_project(phi: &SampledImmersion, v: &Variation) -> Result<Variation> {
    let dec = gauge_decompose(phi, v)?;
    Ok(v.add(&push_forward(phi, &dec.x)?, -1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    pub r_slice: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub substeps: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self { r_slice: 0.05, tol: 1e-8, max_iter: 50, substeps: 4 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRetraction {
    pub w: Variation,
    /// `ψ(x)` at every node of `Φ`'s grid.
    pub psi: Vec<[f64; 2]>,
    pub iterations: usize,
    pub residual: f64,
}

/// Sup norm of the component of `q` representable in the gauge space.
fn gauge_part(fs: &FourierSpace, q: &[Complex64]) -> f64 {
    let mut c = fs.analyze_complex(q);
    strip_nyquist(fs, &mut c);
    fs.synthesize_complex(&c, 0, 0).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Off-grid evaluator for a periodic vector field on a Fourier chart.
struct PeriodicField {
    fs: FourierSpace,
    blocks: Vec<Vec<Complex64>>,
}

impl PeriodicField {
    fn of_immersion(phi: &SampledImmersion) -> Result<Self> {
        let fs = fourier(phi)?.clone();
        let nc = fs.n_coeffs();
        let blocks = phi.coeffs().chunks(nc).map(FourierSpace::to_complex).collect();
        Ok(Self { fs, blocks })
    }

    fn of_samples(fs: &FourierSpace, values: &[f64], q: usize) -> Self {
        let n = fs.n_nodes();
        let blocks = (0..q)
            .map(|c| {
                let col: Vec<f64> = (0..n).map(|i| values[i * q + c]).collect();
                FourierSpace::to_complex(&fs.analyze(&col))
            })
            .collect();
        Self { fs: fs.clone(), blocks }
    }

    fn eval(&self, p: [f64; 2]) -> Vec<f64> {
        self.blocks.iter().map(|b| self.fs.eval_complex(b, p, 0, 0).re).collect()
    }
}

fn rk4_flow(dec: &GaugeDecomposition, fs: &FourierSpace, x0: [f64; 2], substeps: usize) -> [f64; 2] {
    let h = 1.0 / substeps as f64;
    let vel = |p: [f64; 2]| {
        let v = dec.eval(fs, p);
        [-v[0], -v[1]]
    };
    let add = |p: [f64; 2], k: [f64; 2], s: f64| [p[0] + s * k[0], p[1] + s * k[1]];
    let mut p = x0;
    for _ in 0..substeps {
        let k1 = vel(p);
        let k2 = vel(add(p, k1, 0.5 * h));
        let k3 = vel(add(p, k2, 0.5 * h));
        let k4 = vel(add(p, k3, h));
        for d in 0..2 {
            p[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
    }
    p
}

/// Variation `w` with `Ξ∘ψ = π_M(Φ + w)`, written so that `Φ·w = 0` on the
/// sphere.
fn slice_variation(phi: &SampledImmersion, xi: &PeriodicField, psi: &[[f64; 2]]) -> Variation {
    let q = phi.dim();
    let sphere = phi.ambient().is_sphere();
    let mut values = Vec::with_capacity(psi.len() * q);
    for (i, &p) in psi.iter().enumerate() {
        let y = xi.eval(p);
        let x = phi.point(i);
        let s = if sphere { 1.0 / dot(x, &y) } else { 1.0 };
        values.extend(y.iter().zip(x).map(|(a, b)| s * a - b));
    }
    Variation::new(values, q)
}

/// Find `ψ` with `ψ(a) = a` so that `Ξ∘ψ` lies in the Coulomb slice through
/// `Φ`, by alternating gauge decomposition and reparametrization by the flow
/// of `-X`.
pub fn slice_retract(phi: &SampledImmersion, xi: &SampledImmersion, cfg: &SliceConfig) -> Result<SliceRetraction> {
    let (fs, geo) = conformal_geometry(phi)?;
    if xi.dim() != phi.dim() {
        return Err(Error::ShapeMismatch { expected: phi.dim(), got: xi.dim() });
    }
    let target = PeriodicField::of_immersion(xi)?;
    let nodes: Vec<[f64; 2]> = (0..phi.n_nodes()).map(|i| fs.node(i)).collect();
    let distance = nodes
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let y = target.eval(p);
            norm2(&y.iter().zip(phi.point(i)).map(|(a, b)| a - b).collect::<Vec<_>>()).sqrt()
        })
        .fold(0.0, f64::max);
    if distance > cfg.r_slice {
        return Err(Error::OutsideNeighborhood { distance, radius: cfg.r_slice });
    }
    let mut disp = vec![0.0; 2 * nodes.len()];
    let mut residual = f64::INFINITY;
    for it in 0..=cfg.max_iter {
        let psi: Vec<[f64; 2]> =
            nodes.iter().enumerate().map(|(i, p)| [p[0] + disp[2 * i], p[1] + disp[2 * i + 1]]).collect();
        let w = slice_variation(phi, &target, &psi);
        residual = gauge_part(fs, &coulomb_with(fs, &geo, phi, &w)?.values);
        if residual <= cfg.tol {
            return Ok(SliceRetraction { w, psi, iterations: it, residual });
        }
        if it == cfg.max_iter {
            break;
        }
        let dec = gauge_decompose_with(fs, &geo, phi, &w)?;
        let d_old = PeriodicField::of_samples(fs, &disp, 2);
        for (i, &p) in nodes.iter().enumerate() {
            let f = rk4_flow(&dec, fs, p, cfg.substeps);
            let d = d_old.eval(f);
            disp[2 * i] = f[0] - p[0] + d[0];
            disp[2 * i + 1] = f[1] - p[1] + d[1];
        }
    }
    Err(Error::NoConvergence { iterations: cfg.max_iter, residual })
}

/// Sup-norm defect in the coupling between the tangential and normal parts
/// of a slice variation, `∂_z̄(ζ/2) = 𝔓(e^{-2λ} N·Φ_z̄z̄)`.
///
/// Both sides are assembled separately: `ζ` from the tangential part of `w`,
/// the right side from its normal part and the trace-free second fundamental
/// form. In a non-conformal chart (the sphere) the same identity is checked
/// invariantly through the trace-free part of `sym(∂T·∂Φ) - N·II`.
pub fn coupling_residual(phi: &SampledImmersion, w: &Variation) -> Result<f64> {
    let geo = compute_geometry(phi)?;
    let q = phi.dim();
    let n = phi.n_nodes();
    let mut tangential = vec![0.0; n * q];
    let mut normal = vec![0.0; n * q];
    for (i, nd) in geo.nodes.iter().enumerate() {
        let wi = w.at(i);
        let t = nd.pi_t(wi);
        tangential[i * q..(i + 1) * q].copy_from_slice(&t);
        for c in 0..q {
            normal[i * q + c] = wi[c] - t[c];
        }
    }
    let tj = phi.space().jets_of_field(&tangential, q);
    let mut r: Vec<[f64; 3]> = Vec::with_capacity(n);
    for (i, nd) in geo.nodes.iter().enumerate() {
        let nv = &normal[i * q..(i + 1) * q];
        let s = |a: usize, b: usize| 0.5 * (dot(tj.at(1 + a, i), &nd.d[b]) + dot(tj.at(1 + b, i), &nd.d[a]));
        r.push([s(0, 0) - dot(nv, &nd.dd[0]), s(0, 1) - dot(nv, &nd.dd[1]), s(1, 1) - dot(nv, &nd.dd[2])]);
    }
    let slice_defect;
    let value;
    match phi.topology().genus {
        Genus::Torus => {
            let max_defect = geo.max_conformal_defect();
            if max_defect > CONFORMAL_TOL {
                return Err(Error::NonConformalChart { max_defect });
            }
            // q-coefficient of the tensor: R_zz = ¼(R_uu - R_vv - 2i R_uv)
            let mut qz: Vec<Complex64> =
                r.iter().map(|t| 0.25 * Complex64::new(t[0] - t[2], -2.0 * t[1])).collect();
            remove_holq(&geo, &mut qz);
            value = qz
                .iter()
                .zip(&geo.nodes)
                .map(|(v, nd)| (-2.0 * nd.lambda).exp() * v.norm())
                .fold(0.0, f64::max);
            slice_defect = coulomb_operator(phi, w)?.max_abs();
        }
        Genus::Sphere => {
            value = r
                .iter()
                .zip(&geo.nodes)
                .map(|(t, nd)| tracefree_norm(t, &nd.g, &nd.g_inv) / (2.0 * 2f64.sqrt()))
                .fold(0.0, f64::max);
            let full = phi.space().jets_of_field(&w.values, q);
            slice_defect = geo
                .nodes
                .iter()
                .enumerate()
                .map(|(i, nd)| {
                    let s = |a: usize, b: usize| {
                        0.5 * (dot(full.at(1 + a, i), &nd.d[b]) + dot(full.at(1 + b, i), &nd.d[a]))
                    };
                    tracefree_norm(&[s(0, 0), s(0, 1), s(1, 1)], &nd.g, &nd.g_inv) / (2.0 * 2f64.sqrt())
                })
                .fold(0.0, f64::max);
        }
    }
    if slice_defect > SLICE_TOL {
        return Err(Error::NotInSlice { residual: slice_defect });
    }
    Ok(value)
}

fn tracefree_norm(t: &[f64; 3], g: &[[f64; 2]; 2], gi: &[[f64; 2]; 2]) -> f64 {
    let m = [[t[0], t[1]], [t[1], t[2]]];
    let tr = gi[0][0] * m[0][0] + 2.0 * gi[0][1] * m[0][1] + gi[1][1] * m[1][1];
    let mut s = 0.0;
    let f: Vec<[f64; 2]> = (0..2).map(|i| [m[i][0] - 0.5 * tr * g[i][0], m[i][1] - 0.5 * tr * g[i][1]]).collect();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += gi[i][k] * gi[j][l] * f[i][j] * f[k][l];
                }
            }
        }
    }
    s.max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymbolCheck {
    pub normal_block_min_eig: f64,
    pub tangential_symbol: Complex64,
}

/// Principal symbol of the linearized gauge-fixed operator at a node: the
/// normal block `2e^{-2λ}[(1+|II|²)|ξ|⁴ + 2e^{-4λ} II(ξ,ξ)⊗II(ξ,ξ)]` on the
/// normal space, and the tangential `∂̄` factor `ξ₁ + iξ₂`.
pub fn symbol_check(phi: &SampledImmersion, node: usize, xi: [f64; 2]) -> Result<SymbolCheck> {
    let geo = compute_geometry(phi)?;
    let nd = geo.nodes.get(node).ok_or(Error::ShapeMismatch { expected: geo.n_nodes(), got: node })?;
    let e2l = (2.0 * nd.lambda).exp();
    let xi2 = xi[0] * xi[0] + xi[1] * xi[1];
    let mut iixx = vec![0.0; phi.dim()];
    for (k, c) in [(0, xi[0] * xi[0]), (1, 2.0 * xi[0] * xi[1]), (2, xi[1] * xi[1])] {
        crate::vecops::axpy(c, &nd.ii[k], &mut iixx);
    }
    let frame = &nd.normal_frame;
    let v: Vec<f64> = frame.iter().map(|e| dot(e, &iixx)).collect();
    let k = frame.len();
    let m = DMatrix::from_fn(k, k, |a, b| {
        let diag = if a == b { (1.0 + nd.ii_norm2) * xi2 * xi2 } else { 0.0 };
        2.0 / e2l * (diag + 2.0 / (e2l * e2l) * v[a] * v[b])
    });
    let min = m.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SymbolCheck { normal_block_min_eig: min, tangential_symbol: Complex64::new(xi[0], xi[1]) })
}

/// Complex dimension of the kernel of `∂_z̄` on the gauge function space at
/// `n` modes per side, from the numerical rank of the assembled operator.
pub fn dbar_kernel_dimension(n: usize) -> usize {
    let fs = FourierSpace::new(n);
    let nn = fs.n_nodes();
    let mut cols = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if fs.is_nyquist(a) || fs.is_nyquist(b) {
                continue;
            }
            for unit in [Complex64::new(1.0, 0.0), I] {
                let mut c = vec![Complex64::new(0.0, 0.0); nn];
                c[a * n + b] = unit;
                let z = fs.synthesize_complex(&c, 0, 0);
                cols.push(dbar_apply(&fs, &z));
            }
        }
    }
    let m = DMatrix::from_fn(2 * nn, cols.len(), |r, k| {
        let v = cols[k][r / 2];
        if r % 2 == 0 { v.re } else { v.im }
    });
    let sv = m.singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-10 * smax).count();
    (cols.len() - rank) / 2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{make_preset_immersion, Preset};

    fn clifford(n: usize) -> SampledImmersion {
        make_preset_immersion(&Preset::CliffordTorus, n).unwrap()
    }

    #[test]
    fn hol_dimensions() {
        let t = HolBasis::new(&SurfaceTopology::torus());
        assert_eq!((t.hol1_dim(), t.holq_dim()), (1, 1));
        let s = HolBasis::new(&SurfaceTopology::sphere());
        assert_eq!((s.hol1_dim(), s.holq_dim()), (3, 0));
        // three marked points on the sphere fix the Möbius freedom
        let f = [Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.0), Complex64::new(0.0, 3.0)];
        let c = s.normalization(&f).unwrap();
        for (j, &p) in s.marked_points.iter().enumerate() {
            let h: Complex64 = (0..3).map(|k| c[k] * s.hol1_eval(k, p)).sum();
            assert!((h + f[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn translation_field_has_zero_coulomb_image() {
        let phi = clifford(16);
        let jets = phi.jets();
        let w = Variation::new(jets.d[1].clone(), 4);
        assert!(coulomb_operator(&phi, &w).unwrap().max_abs() < 1e-10);
        let z = Variation::zeros(&phi);
        assert_eq!(coulomb_operator(&phi, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn dbar_single_mode() {
        let phi = clifford(16);
        let fs = fourier(&phi).unwrap();
        let rhs: Vec<Complex64> = (0..fs.n_nodes()).map(|i| Complex64::from_polar(1.0, fs.node(i)[0])).collect();
        let sol = dbar_solve(&phi, &rhs).unwrap();
        for (i, z) in sol.zeta.iter().enumerate() {
            assert!((z - (-2.0 * I) * rhs[i]).norm() < 1e-12);
        }
        assert!(sol.residual < 1e-12);
        let c = vec![Complex64::new(0.3, 0.0); fs.n_nodes()];
        assert!(matches!(dbar_solve(&phi, &c), Err(Error::NotInRange { .. })));
        let z = dbar_solve(&phi, &vec![Complex64::new(0.0, 0.0); fs.n_nodes()]).unwrap();
        assert!(z.zeta.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn kernel_is_hol1() {
        for n in [8, 9, 12] {
            assert_eq!(dbar_kernel_dimension(n), 1, "n = {n}");
        }
    }

    #[test]
    fn non_conformal_rejected() {
        let phi = make_preset_immersion(&Preset::EquatorS2InS3, 8).unwrap();
        assert!(matches!(coulomb_operator(&phi, &Variation::zeros(&phi)), Err(Error::UnsupportedBasis)));
        let p = Preset::Perturbed { base: Box::new(Preset::CliffordTorus), seed: 1, amplitude: 0.02 };
        let phi = make_preset_immersion(&p, 12).unwrap();
        assert!(matches!(
            coulomb_operator(&phi, &Variation::zeros(&phi)),
            Err(Error::NonConformalChart { .. })
        ));
    }

    #[test]
    fn symbol_homogeneity() {
        let phi = clifford(12);
        let s0 = symbol_check(&phi, 5, [0.0, 0.0]).unwrap();
        assert_eq!(s0.normal_block_min_eig, 0.0);
        assert_eq!(s0.tangential_symbol, Complex64::new(0.0, 0.0));
        let xi = [0.6, 0.8];
        let s1 = symbol_check(&phi, 5, xi).unwrap();
        let s2 = symbol_check(&phi, 5, [1.2, 1.6]).unwrap();
        assert!((s2.normal_block_min_eig / s1.normal_block_min_eig - 16.0).abs() < 1e-12);
        // e^{2λ} = 1/2 on the Clifford torus
        assert!(s1.normal_block_min_eig >= 2.0 * 2.0 * 3.0 - 1e-12);
    }
}
