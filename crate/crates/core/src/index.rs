//! Finite-section Morse index of `A^σ`: the constrained Hessian on a spectral
//! basis of normal variations and its generalized eigenvalues against the
//! `L²(dvol)` Gram matrix.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{node_jet, NodeForms, Variation};
use crate::error::{Error, Result};
use crate::surface::{compute_geometry, GeometryData, Jets, SampledImmersion, Space};

/// Gradient norm above which a Hessian is flagged as taken off a critical
/// point.
pub const CRITICAL_TOL: f64 = 1e-6;
/// Relative pivot below which a candidate field is dropped as dependent.
const DEPENDENCE_TOL: f64 = 1e-10;
const NODE_CHUNK: usize = 64;

#[derive(Debug, Clone)]
pub struct VariationBasis {
    pub fields: Vec<Variation>,
    pub gram: DMatrix<f64>,
    pub labels: Vec<String>,
}

fn scalar_modes_fourier(space: &Space, nb: usize) -> Vec<(String, Vec<f64>)> {
    let mut out = Vec::new();
    let nb = nb as i64;
    for m in 0..=nb {
        for n in -nb..=nb {
            if m == 0 && n < 0 {
                continue;
            }
            let vals = |f: fn(f64) -> f64| -> Vec<f64> {
                (0..space.n_nodes())
                    .map(|i| {
                        let [u, v] = space.node(i);
                        f(m as f64 * u + n as f64 * v)
                    })
                    .collect()
            };
            out.push((format!("cos({m},{n})"), vals(f64::cos)));
            if m != 0 || n != 0 {
                out.push((format!("sin({m},{n})"), vals(f64::sin)));
            }
        }
    }
    out
}

fn scalar_modes_sph(space: &Space, lb: usize) -> Vec<(String, Vec<f64>)> {
    let nc = space.n_coeffs();
    let mut out = Vec::new();
    for l in 0..=lb {
        for m in -(l as i64)..=(l as i64) {
            let mut c = vec![0.0; nc];
            c[crate::surface::SphSpace::mode_index(l, m)] = 1.0;
            out.push((format!("Y({l},{m})"), space.synthesize(&c, 0, 0)));
        }
    }
    out
}

/// Gram matrix `∫ w_a · w_b dvol` from value jets.
fn gram_of(geo: &GeometryData, jets: &[Jets]) -> DMatrix<f64> {
    let k = jets.len();
    let q = geo.ambient.dim();
    let n = geo.n_nodes();
    let mut v = DMatrix::zeros(n * q, k);
    for (a, j) in jets.iter().enumerate() {
        for i in 0..n {
            let s = geo.dvol(i).sqrt();
            for c in 0..q {
                v[(i * q + c, a)] = s * j.d[0][i * q + c];
            }
        }
    }
    let g = v.transpose() * &v;
    0.5 * (&g + g.transpose())
}

impl VariationBasis {
    /// Normal-bundle basis: torus Fourier modes `|m|, |n| ≤ cutoff` or sphere
    /// harmonics `ℓ ≤ cutoff`, times a spanning set of the normal bundle.
    pub fn normal(phi: &SampledImmersion, cutoff: usize) -> Result<Self> {
        let geo = compute_geometry(phi)?;
        let space = phi.space();
        let scalars = match space {
            Space::Fourier(_) => scalar_modes_fourier(space, cutoff),
            Space::Sph(_) => scalar_modes_sph(space, cutoff),
        };
        let q = phi.dim();
        // A global smooth frame when the normal bundle has rank one; otherwise
        // the normal projections of the coordinate axes.
        let codim = geo.nodes[0].normal_frame.len();
        let sections: Vec<(String, Vec<f64>)> = if codim == 1 {
            vec![("ν".into(), geo.nodes.iter().flat_map(|n| n.normal_frame[0].clone()).collect())]
        } else {
            (0..q)
                .map(|k| {
                    let mut e = vec![0.0; q];
                    e[k] = 1.0;
                    (format!("πn(e{k})"), geo.nodes.iter().flat_map(|n| n.pi_n(&geo.ambient, &e)).collect())
                })
                .collect()
        };
        let mut cand = Vec::new();
        for (sl, s) in &sections {
            for (fl, f) in &scalars {
                let values: Vec<f64> = (0..phi.n_nodes())
                    .flat_map(|i| s[i * q..(i + 1) * q].iter().map(move |x| f[i] * x))
                    .collect();
                cand.push((format!("{fl}·{sl}"), Variation::new(values, q)));
            }
        }
        Self::from_candidates(phi, &geo, cand)
    }

    /// Basis from explicit fields, dropping numerically dependent ones.
    pub fn from_fields(phi: &SampledImmersion, fields: Vec<Variation>) -> Result<Self> {
        let geo = compute_geometry(phi)?;
        let cand = fields.into_iter().enumerate().map(|(i, f)| (format!("w{i}"), f)).collect();
        Self::from_candidates(phi, &geo, cand)
    }

    fn from_candidates(
        phi: &SampledImmersion,
        geo: &GeometryData,
        cand: Vec<(String, Variation)>,
    ) -> Result<Self> {
        let jets: Vec<Jets> = cand.par_iter().map(|(_, f)| f.jets(phi.space())).collect();
        let g = gram_of(geo, &jets);
        // greedy Cholesky: keep a field when its pivot is not negligible
        let k = cand.len();
        let mut keep: Vec<usize> = Vec::new();
        let mut l = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            let r = keep.len();
            let mut row = vec![0.0; r];
            for (s, &b) in keep.iter().enumerate() {
                let mut v = g[(a, b)];
                for t in 0..s {
                    v -= row[t] * l[(s, t)];
                }
                row[s] = v / l[(s, s)];
            }
            let piv = g[(a, a)] - row.iter().map(|x| x * x).sum::<f64>();
            if g[(a, a)] > 0.0 && piv > DEPENDENCE_TOL * g[(a, a)] {
                for (t, x) in row.iter().enumerate() {
                    l[(r, t)] = *x;
                }
                l[(r, r)] = piv.sqrt();
                keep.push(a);
            }
        }
        let gram = DMatrix::from_fn(keep.len(), keep.len(), |i, j| g[(keep[i], keep[j])]);
        let mut fields = Vec::with_capacity(keep.len());
        let mut labels = Vec::with_capacity(keep.len());
        let mut cand: Vec<Option<(String, Variation)>> = cand.into_iter().map(Some).collect();
        for &a in &keep {
            let (lab, f) = cand[a].take().expect("kept once");
            labels.push(lab);
            fields.push(f);
        }
        Ok(Self { fields, gram, labels })
    }

    /// Append fields (for example tangential ones) and recompute the Gram
    /// matrix.
    pub fn augmented(&self, phi: &SampledImmersion, extra: Vec<Variation>) -> Result<Self> {
        let geo = compute_geometry(phi)?;
        let mut cand: Vec<(String, Variation)> =
            self.labels.iter().cloned().zip(self.fields.iter().cloned()).collect();
        cand.extend(extra.into_iter().enumerate().map(|(i, f)| (format!("x{i}"), f)));
        Self::from_candidates(phi, &geo, cand)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Ratio of extreme eigenvalues of the Gram matrix.
    pub fn gram_condition(&self) -> f64 {
        let e = self.gram.clone().symmetric_eigenvalues();
        let (lo, hi) = e.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        hi / lo
    }
}

#[derive(Debug, Clone)]
pub struct HessianAssembly {
    pub hessian: DMatrix<f64>,
    /// `DA^σ(w_a)` per basis field.
    pub gradient: DVector<f64>,
    /// Dual norm `√(gᵀ G⁻¹ g)` of the gradient on the basis.
    pub grad_norm: f64,
    pub noncritical: bool,
}

/// Per-node jets of every basis field as a `6Q × K` matrix.
fn node_jet_matrix(jets: &[Jets], node: usize) -> DMatrix<f64> {
    let q = jets[0].q;
    let mut m = DMatrix::zeros(6 * q, jets.len());
    for (a, j) in jets.iter().enumerate() {
        for (r, v) in node_jet(j, node).into_iter().enumerate() {
            m[(r, a)] = v;
        }
    }
    m
}

/// First-variation covector of `A^σ` on the `6Q` jet space at a node.
fn node_gradient(nf: &NodeForms, sigma: f64) -> DVector<f64> {
    let n = 6 * nf.geo.point.len();
    let mut e = vec![0.0; n];
    DVector::from_fn(n, |i, _| {
        e[i] = 1.0;
        let (a, f) = nf.first(&e);
        e[i] = 0.0;
        a + sigma * sigma * f
    })
}

pub(crate) fn assemble_jets(geo: &GeometryData, jets: &[Jets], sigma: f64) -> (DMatrix<f64>, DVector<f64>) {
    let k = jets.len();
    let n = geo.n_nodes();
    let chunks: Vec<(DMatrix<f64>, DVector<f64>)> = (0..n.div_ceil(NODE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut h = DMatrix::zeros(k, k);
            let mut g = DVector::zeros(k);
            for i in (c * NODE_CHUNK)..((c + 1) * NODE_CHUNK).min(n) {
                let nf = NodeForms::new(&geo.nodes[i], &geo.ambient);
                let w = geo.chart_weights[i];
                let j = node_jet_matrix(jets, i);
                let mj = nf.constrained_matrix(sigma) * &j;
                h.gemm_tr(w, &j, &mj, 1.0);
                g.gemv_tr(w, &j, &node_gradient(&nf, sigma), 1.0);
            }
            (h, g)
        })
        .collect();
    let mut h = DMatrix::zeros(k, k);
    let mut g = DVector::zeros(k);
    for (hc, gc) in chunks {
        h += hc;
        g += gc;
    }
    (0.5 * (&h + h.transpose()), g)
}

/// `H_ab = D²A^σ(w_a, w_b)` along projected paths, with the gradient of
/// `A^σ` on the same basis.
pub fn assemble_hessian(phi: &SampledImmersion, sigma: f64, basis: &VariationBasis) -> Result<HessianAssembly> {
    let geo = compute_geometry(phi)?;
    if basis.is_empty() {
        return Ok(HessianAssembly {
            hessian: DMatrix::zeros(0, 0),
            gradient: DVector::zeros(0),
            grad_norm: 0.0,
            noncritical: false,
        });
    }
    let jets: Vec<Jets> = basis.fields.par_iter().map(|f| f.jets(phi.space())).collect();
    let (hessian, gradient) = assemble_jets(&geo, &jets, sigma);
    let grad_norm = dual_norm(&basis.gram, &gradient)?;
    Ok(HessianAssembly { hessian, gradient, grad_norm, noncritical: grad_norm > CRITICAL_TOL })
}

pub(crate) fn dual_norm(gram: &DMatrix<f64>, g: &DVector<f64>) -> Result<f64> {
    let ch = gram.clone().cholesky().ok_or(Error::GramNotSpd)?;
    Ok(g.dot(&ch.solve(g)).max(0.0).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub eps_neg: f64,
    pub sigma: f64,
    /// Negative eigenvalue closest to zero below `-eps_neg`.
    pub gap_below: Option<f64>,
    /// Smallest eigenvalue above `eps_neg`.
    pub gap_above: Option<f64>,
    pub noncritical: bool,
}

impl SpectrumReport {
    pub fn positives(&self) -> usize {
        self.eigenvalues.len() - self.index - self.nullity
    }
}

/// Generalized eigenvalues of `H x = μ G x`. With `eps_neg = None` the
/// threshold is `1e-6 · max|μ|`.
pub fn spectrum_index(h: &DMatrix<f64>, gram: &DMatrix<f64>, eps_neg: Option<f64>, sigma: f64) -> Result<SpectrumReport> {
    let ch = gram.clone().cholesky().ok_or(Error::GramNotSpd)?;
    let l = ch.l();
    let linv = l.clone().solve_lower_triangular(&DMatrix::identity(l.nrows(), l.ncols())).ok_or(Error::GramNotSpd)?;
    let a = &linv * h * linv.transpose();
    let a = 0.5 * (&a + a.transpose());
    let mut mu: Vec<f64> = a.symmetric_eigenvalues().iter().cloned().collect();
    mu.sort_by(|x, y| x.total_cmp(y));
    let scale = mu.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let eps = eps_neg.unwrap_or(1e-6 * scale);
    let index = mu.iter().filter(|&&x| x < -eps).count();
    let nullity = mu.iter().filter(|&&x| x.abs() <= eps).count();
    let gap_below = mu.iter().rev().find(|&&x| x < -eps).copied();
    let gap_above = mu.iter().find(|&&x| x > eps).copied();
    Ok(SpectrumReport { eigenvalues: mu, index, nullity, eps_neg: eps, sigma, gap_below, gap_above, noncritical: false })
}

/// Assemble and diagonalize in one step, carrying the criticality flag.
pub fn compute_spectrum(
    phi: &SampledImmersion,
    sigma: f64,
    cutoff: usize,
    eps_neg: Option<f64>,
) -> Result<SpectrumReport> {
    let basis = VariationBasis::normal(phi, cutoff)?;
    let asm = assemble_hessian(phi, sigma, &basis)?;
    let mut rep = spectrum_index(&asm.hessian, &basis.gram, eps_neg, sigma)?;
    rep.noncritical = asm.noncritical;
    Ok(rep)
}
