//! Pointwise first and second fundamental forms from spectral jets.

use rayon::prelude::*;

use super::{Jets, SampledImmersion, EPS_IMM};
use crate::ambient::AmbientManifold;
use crate::error::{Error, Result};
use crate::vecops::{axpy, cross_general, dot, norm2};

/// Slot of the symmetric pair `(i, j)` in `[11, 12, 22]`.
#[inline]
pub(crate) fn sym(i: usize, j: usize) -> usize {
    i + j
}

#[derive(Debug, Clone)]
pub struct NodeGeometry {
    pub point: Vec<f64>,
    /// `∂_1 Φ, ∂_2 Φ`.
    pub d: [Vec<f64>; 2],
    /// `∂²_{11} Φ, ∂²_{12} Φ, ∂²_{22} Φ`.
    pub dd: [Vec<f64>; 3],
    pub g: [[f64; 2]; 2],
    pub g_inv: [[f64; 2]; 2],
    pub det_g: f64,
    pub sqrt_det: f64,
    /// Christoffel symbols `Γ^s_{ij}` as `gamma[s][sym(i, j)]`.
    pub gamma: [[f64; 3]; 2],
    /// Second fundamental form in `R^Q` (normal to the tangent plane only).
    pub ii_flat: [Vec<f64>; 3],
    pub ii_flat_norm2: f64,
    /// Second fundamental form in `M` (values in the normal bundle inside `TM`).
    pub ii: [Vec<f64>; 3],
    pub ii_norm2: f64,
    pub h0: [Vec<f64>; 3],
    pub mean_curvature: Vec<f64>,
    pub conformal_defect: f64,
    /// `λ` with `e^{2λ} = √det g`.
    pub lambda: f64,
    pub gauss_curvature: f64,
    /// Orthonormal basis of the normal bundle inside `TM`.
    pub normal_frame: Vec<Vec<f64>>,
    /// Orthonormal basis of `span(Φ, ∂_1Φ, ∂_2Φ)` (sphere) or `span(∂_1Φ, ∂_2Φ)`.
    pub span: Vec<Vec<f64>>,
}

impl NodeGeometry {
    pub fn from_jet(
        ambient: &AmbientManifold,
        point: &[f64],
        d: [&[f64]; 2],
        dd: [&[f64]; 3],
    ) -> NodeGeometry {
        let g = [
            [dot(d[0], d[0]), dot(d[0], d[1])],
            [dot(d[1], d[0]), dot(d[1], d[1])],
        ];
        let det_g = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let g_inv = [
            [g[1][1] / det_g, -g[0][1] / det_g],
            [-g[1][0] / det_g, g[0][0] / det_g],
        ];
        let mut gamma = [[0.0; 3]; 2];
        for (k, ddk) in dd.iter().enumerate() {
            let proj = [dot(d[0], ddk), dot(d[1], ddk)];
            for s in 0..2 {
                gamma[s][k] = g_inv[s][0] * proj[0] + g_inv[s][1] * proj[1];
            }
        }
        let ii_flat: [Vec<f64>; 3] = std::array::from_fn(|k| {
            let mut v = dd[k].to_vec();
            axpy(-gamma[0][k], d[0], &mut v);
            axpy(-gamma[1][k], d[1], &mut v);
            v
        });
        let span = span_basis(ambient, point, d);
        let ii: [Vec<f64>; 3] = std::array::from_fn(|k| project_out(&span, dd[k]));
        let ii_flat_norm2 = contract_norm2(&g_inv, &ii_flat);
        let ii_norm2 = contract_norm2(&g_inv, &ii);
        let mut mean_curvature = vec![0.0; point.len()];
        for i in 0..2 {
            for j in 0..2 {
                axpy(g_inv[i][j], &ii[sym(i, j)], &mut mean_curvature);
            }
        }
        let h0: [Vec<f64>; 3] = std::array::from_fn(|k| {
            let (i, j) = [(0, 0), (0, 1), (1, 1)][k];
            let mut v = ii[k].clone();
            axpy(-0.5 * g[i][j], &mean_curvature, &mut v);
            v
        });
        let gauss_curvature = brioschi(d, dd, &g, det_g);
        let normal_frame = normal_frame(ambient, &span);
        NodeGeometry {
            point: point.to_vec(),
            d: [d[0].to_vec(), d[1].to_vec()],
            dd: [dd[0].to_vec(), dd[1].to_vec(), dd[2].to_vec()],
            g,
            g_inv,
            det_g,
            sqrt_det: det_g.sqrt(),
            gamma,
            ii_flat,
            ii_flat_norm2,
            ii,
            ii_norm2,
            h0,
            mean_curvature,
            conformal_defect: (g[0][0] - g[1][1]).abs() + 2.0 * g[0][1].abs(),
            lambda: 0.25 * det_g.ln(),
            gauss_curvature,
            normal_frame,
            span,
        }
    }

    /// Tangential projection `π_T`.
    pub fn pi_t(&self, x: &[f64]) -> Vec<f64> {
        let p = [dot(&self.d[0], x), dot(&self.d[1], x)];
        let mut out = vec![0.0; x.len()];
        for s in 0..2 {
            let c = self.g_inv[s][0] * p[0] + self.g_inv[s][1] * p[1];
            axpy(c, &self.d[s], &mut out);
        }
        out
    }

    /// Normal-bundle projection `π_n` (inside `TM`): the orthogonal
    /// complement of `span(Φ, dΦ)`, exact even when the interpolant drifts
    /// slightly off the sphere between nodes.
    pub fn pi_n(&self, _ambient: &AmbientManifold, x: &[f64]) -> Vec<f64> {
        project_out(&self.span, x)
    }

    /// Coordinates `X^s` of the tangential part of `x` in the frame `∂_s Φ`.
    pub fn tangent_coords(&self, x: &[f64]) -> [f64; 2] {
        let p = [dot(&self.d[0], x), dot(&self.d[1], x)];
        [
            self.g_inv[0][0] * p[0] + self.g_inv[0][1] * p[1],
            self.g_inv[1][0] * p[0] + self.g_inv[1][1] * p[1],
        ]
    }
}

fn contract_norm2(g_inv: &[[f64; 2]; 2], t: &[Vec<f64>; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    s += g_inv[i][k] * g_inv[j][l] * dot(&t[sym(i, j)], &t[sym(k, l)]);
                }
            }
        }
    }
    s
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gauss curvature from the metric and its derivatives (Brioschi). The
/// third-derivative terms of `-E_vv/2 + F_uv - G_uu/2` cancel, leaving
/// `Φ_uu·Φ_vv - |Φ_uv|²`.
fn brioschi(d: [&[f64]; 2], dd: [&[f64]; 3], g: &[[f64; 2]; 2], det: f64) -> f64 {
    let (e, f, gg) = (g[0][0], g[0][1], g[1][1]);
    let e_u = 2.0 * dot(d[0], dd[0]);
    let e_v = 2.0 * dot(d[0], dd[1]);
    let f_u = dot(dd[0], d[1]) + dot(d[0], dd[1]);
    let f_v = dot(dd[1], d[1]) + dot(d[0], dd[2]);
    let g_u = 2.0 * dot(d[1], dd[1]);
    let g_v = 2.0 * dot(d[1], dd[2]);
    let top = dot(dd[0], dd[2]) - dot(dd[1], dd[1]);
    let a = det3([
        [top, 0.5 * e_u, f_u - 0.5 * e_v],
        [f_v - 0.5 * g_u, e, f],
        [0.5 * g_v, f, gg],
    ]);
    let b = det3([[0.0, 0.5 * e_v, 0.5 * g_u], [0.5 * e_v, e, f], [0.5 * g_u, f, gg]]);
    (a - b) / (det * det)
}

fn span_basis(ambient: &AmbientManifold, point: &[f64], d: [&[f64]; 2]) -> Vec<Vec<f64>> {
    let mut raw: Vec<&[f64]> = Vec::new();
    if ambient.is_sphere() {
        raw.push(point);
    }
    raw.push(d[0]);
    raw.push(d[1]);
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for v in raw {
        let mut w = project_out(&ortho, v);
        // second pass keeps the basis orthonormal to rounding
        w = project_out(&ortho, &w);
        let len = norm2(&w).sqrt();
        ortho.push(w.iter().map(|x| x / len).collect());
    }
    ortho
}

fn project_out(basis: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let mut out = x.to_vec();
    for e in basis {
        let c = dot(e, &out);
        axpy(-c, e, &mut out);
    }
    out
}

fn normal_frame(ambient: &AmbientManifold, span: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let q = span[0].len();
    let rank = ambient.surface_codim();
    if rank == 1 {
        let refs: Vec<&[f64]> = span.iter().map(|v| v.as_slice()).collect();
        let n = cross_general(&refs);
        let len = norm2(&n).sqrt();
        return vec![n.iter().map(|x| x / len).collect()];
    }
    // Higher rank: Gram–Schmidt of the coordinate axes, largest remainder first.
    let mut cands: Vec<(f64, usize, Vec<f64>)> = (0..q)
        .map(|k| {
            let mut e = vec![0.0; q];
            e[k] = 1.0;
            let e = project_out(span, &e);
            (norm2(&e), k, e)
        })
        .collect();
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for (_, _, e) in cands {
        if frame.len() == rank {
            break;
        }
        let e = project_out(&frame, &e);
        let len = norm2(&e).sqrt();
        if len > 1e-6 {
            frame.push(e.iter().map(|x| x / len).collect());
        }
    }
    frame
}

#[derive(Debug, Clone)]
pub struct GeometryData {
    pub nodes: Vec<NodeGeometry>,
    pub chart_weights: Vec<f64>,
    pub ambient: AmbientManifold,
}

impl GeometryData {
    pub fn from_jets(ambient: &AmbientManifold, jets: &Jets, chart_weights: Vec<f64>) -> Result<Self> {
        let nodes: Vec<NodeGeometry> = (0..jets.n)
            .into_par_iter()
            .map(|i| {
                NodeGeometry::from_jet(
                    ambient,
                    jets.at(0, i),
                    [jets.at(1, i), jets.at(2, i)],
                    [jets.at(3, i), jets.at(4, i), jets.at(5, i)],
                )
            })
            .collect();
        for (node, ng) in nodes.iter().enumerate() {
            if ng.det_g.is_nan() || ng.det_g <= EPS_IMM {
                return Err(Error::DegenerateMetric { node, det: ng.det_g });
            }
        }
        Ok(Self { nodes, chart_weights, ambient: *ambient })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn dvol(&self, i: usize) -> f64 {
        self.chart_weights[i] * self.nodes[i].sqrt_det
    }

    /// `∫ f dvol`, summed in node order.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        f.iter().enumerate().map(|(i, v)| v * self.dvol(i)).sum()
    }

    pub fn area(&self) -> f64 {
        (0..self.n_nodes()).map(|i| self.dvol(i)).sum()
    }

    pub fn total_gauss_curvature(&self) -> f64 {
        let k: Vec<f64> = self.nodes.iter().map(|n| n.gauss_curvature).collect();
        self.integrate(&k)
    }

    pub fn max_conformal_defect(&self) -> f64 {
        self.nodes.iter().map(|n| n.conformal_defect).fold(0.0, f64::max)
    }

    pub fn l2_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let q = self.ambient.dim();
        (0..self.n_nodes())
            .map(|i| dot(&a[i * q..(i + 1) * q], &b[i * q..(i + 1) * q]) * self.dvol(i))
            .sum()
    }
}

pub fn compute_geometry(phi: &SampledImmersion) -> Result<GeometryData> {
    GeometryData::from_jets(phi.ambient(), &phi.jets(), phi.space().chart_weights())
}

/// Pointwise `π_n(w)` for a node-major field.
pub fn project_normal_bundle(geo: &GeometryData, w: &[f64]) -> Result<Vec<f64>> {
    let q = geo.ambient.dim();
    if w.len() != q * geo.n_nodes() {
        return Err(Error::ShapeMismatch { expected: q * geo.n_nodes(), got: w.len() });
    }
    Ok(geo
        .nodes
        .iter()
        .enumerate()
        .flat_map(|(i, n)| n.pi_n(&geo.ambient, &w[i * q..(i + 1) * q]))
        .collect())
}
