//! Spectrally represented immersions `Φ: Σ → M ⊂ R^Q` of the torus and the
//! sphere.
//!
//! Coefficient layout is component-major: `coeffs[q * n_coeffs + k]` is mode
//! `k` of component `q`, with the per-basis mode ordering documented in
//! [`fourier`] and [`sph`]. Grid samples are node-major: `samples[i * Q + q]`.

pub mod fourier;
mod geometry;
mod presets;
pub mod sph;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ambient::AmbientManifold;
use crate::error::{Error, Result};

pub use fourier::FourierSpace;
pub use geometry::{compute_geometry, project_normal_bundle, GeometryData, NodeGeometry};
pub use presets::{make_preset_immersion, Preset};
pub use sph::SphSpace;

/// Samples further than this from `M` after fitting are rejected.
pub const ON_GRID_TOL: f64 = 5e-9;
/// Immersion threshold on `det g`.
pub const EPS_IMM: f64 = 1e-8;
/// Smallest accepted modes-per-side / degree.
pub const MIN_RESOLUTION: usize = 8;

/// Derivative multi-indices of a jet slot: value, u, v, uu, uv, vv.
pub const JET_DERIVS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Basis {
    Fourier { modes: usize },
    SphericalHarmonics { degree: usize },
}

impl Basis {
    pub fn resolution(&self) -> usize {
        match *self {
            Basis::Fourier { modes } => modes,
            Basis::SphericalHarmonics { degree } => degree,
        }
    }

    pub fn genus(&self) -> Genus {
        match self {
            Basis::Fourier { .. } => Genus::Torus,
            Basis::SphericalHarmonics { .. } => Genus::Sphere,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Genus {
    #[serde(rename = "0")]
    Sphere,
    #[serde(rename = "1")]
    Torus,
}

impl Genus {
    pub fn euler_characteristic(&self) -> i32 {
        match self {
            Genus::Sphere => 2,
            Genus::Torus => 0,
        }
    }

    pub fn n_marked(&self) -> usize {
        match self {
            Genus::Sphere => 3,
            Genus::Torus => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceTopology {
    pub genus: Genus,
    pub marked_points: Vec<[f64; 2]>,
}

impl SurfaceTopology {
    pub fn new(genus: Genus, marked_points: Vec<[f64; 2]>) -> Result<Self> {
        if marked_points.len() != genus.n_marked() {
            return Err(Error::InvalidTopology(format!(
                "genus {:?} needs {} marked points, got {}",
                genus,
                genus.n_marked(),
                marked_points.len()
            )));
        }
        for (i, a) in marked_points.iter().enumerate() {
            for b in &marked_points[..i] {
                if (a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-12 {
                    return Err(Error::InvalidTopology("marked points must be distinct".into()));
                }
            }
        }
        Ok(Self { genus, marked_points })
    }

    pub fn torus() -> Self {
        Self { genus: Genus::Torus, marked_points: vec![[0.0, 0.0]] }
    }

    /// Three points on the equator of the `(θ, φ)` chart.
    pub fn sphere() -> Self {
        let h = std::f64::consts::FRAC_PI_2;
        let t = 2.0 * std::f64::consts::PI / 3.0;
        Self { genus: Genus::Sphere, marked_points: vec![[h, 0.0], [h, t], [h, 2.0 * t]] }
    }
}

/// Per-node jets `(f, f_u, f_v, f_uu, f_uv, f_vv)` of a `q`-vector field.
#[derive(Debug, Clone, PartialEq)]
pub struct Jets {
    pub q: usize,
    pub n: usize,
    pub d: [Vec<f64>; 6],
}

impl Jets {
    #[inline]
    pub fn at(&self, slot: usize, node: usize) -> &[f64] {
        &self.d[slot][node * self.q..(node + 1) * self.q]
    }

    pub fn zeros(q: usize, n: usize) -> Self {
        Self { q, n, d: std::array::from_fn(|_| vec![0.0; q * n]) }
    }

    /// `self + t · other`.
    pub fn add_scaled(&self, t: f64, other: &Jets) -> Jets {
        let d = std::array::from_fn(|k| {
            self.d[k].iter().zip(&other.d[k]).map(|(a, b)| a + t * b).collect()
        });
        Jets { q: self.q, n: self.n, d }
    }
}

#[derive(Debug, Clone)]
pub enum Space {
    Fourier(FourierSpace),
    Sph(SphSpace),
}

impl Space {
    pub fn new(basis: Basis) -> Self {
        match basis {
            Basis::Fourier { modes } => Space::Fourier(FourierSpace::new(modes)),
            Basis::SphericalHarmonics { degree } => Space::Sph(SphSpace::new(degree)),
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            Space::Fourier(s) => s.n_nodes(),
            Space::Sph(s) => s.n_nodes(),
        }
    }

    pub fn n_coeffs(&self) -> usize {
        match self {
            Space::Fourier(s) => s.n_coeffs(),
            Space::Sph(s) => s.n_coeffs(),
        }
    }

    pub fn node(&self, i: usize) -> [f64; 2] {
        match self {
            Space::Fourier(s) => s.node(i),
            Space::Sph(s) => s.node(i),
        }
    }

    /// Chart-measure quadrature weight at node `i`.
    pub fn chart_weight(&self, i: usize) -> f64 {
        match self {
            Space::Fourier(s) => s.weight(),
            Space::Sph(s) => s.weight(i),
        }
    }

    pub fn chart_weights(&self) -> Vec<f64> {
        (0..self.n_nodes()).map(|i| self.chart_weight(i)).collect()
    }

    pub fn analyze(&self, samples: &[f64]) -> Vec<f64> {
        match self {
            Space::Fourier(s) => s.analyze(samples),
            Space::Sph(s) => s.analyze(samples),
        }
    }

    pub fn synthesize(&self, coeffs: &[f64], du: usize, dv: usize) -> Vec<f64> {
        match self {
            Space::Fourier(s) => s.synthesize(coeffs, du, dv),
            Space::Sph(s) => s.synthesize(coeffs, du, dv),
        }
    }

    /// Fit a node-major `q`-vector field; returns component-major coefficients.
    pub fn fit_field(&self, values: &[f64], q: usize) -> Vec<f64> {
        let n = self.n_nodes();
        let comps: Vec<Vec<f64>> = (0..q)
            .into_par_iter()
            .map(|c| {
                let col: Vec<f64> = (0..n).map(|i| values[i * q + c]).collect();
                self.analyze(&col)
            })
            .collect();
        comps.concat()
    }

    pub fn jets_from_coeffs(&self, coeffs: &[f64], q: usize) -> Jets {
        let n = self.n_nodes();
        let nc = self.n_coeffs();
        let per: Vec<Vec<f64>> = (0..q * 6)
            .into_par_iter()
            .map(|k| {
                let (c, slot) = (k / 6, k % 6);
                let (du, dv) = JET_DERIVS[slot];
                self.synthesize(&coeffs[c * nc..(c + 1) * nc], du, dv)
            })
            .collect();
        let mut jets = Jets::zeros(q, n);
        for (k, vals) in per.iter().enumerate() {
            let (c, slot) = (k / 6, k % 6);
            for (i, v) in vals.iter().enumerate() {
                jets.d[slot][i * q + c] = *v;
            }
        }
        jets
    }

    pub fn jets_of_field(&self, values: &[f64], q: usize) -> Jets {
        self.jets_from_coeffs(&self.fit_field(values, q), q)
    }
}

/// Spectral coefficients plus grid samples of an immersion into `M`.
#[derive(Debug, Clone)]
pub struct SampledImmersion {
    topology: SurfaceTopology,
    ambient: AmbientManifold,
    basis: Basis,
    space: Arc<Space>,
    coeffs: Vec<f64>,
    samples: Vec<f64>,
}

/// Serializable checkpoint of an immersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub topology: Genus,
    pub ambient: AmbientManifold,
    pub basis: Basis,
    pub coeffs: Vec<f64>,
    pub marked_points: Vec<[f64; 2]>,
}

fn check_basis(topology: &SurfaceTopology, basis: Basis) -> Result<()> {
    if basis.genus() != topology.genus {
        return Err(Error::InvalidTopology(format!(
            "basis {basis:?} does not match genus {:?}",
            topology.genus
        )));
    }
    if basis.resolution() < MIN_RESOLUTION {
        return Err(Error::ResolutionTooLow { got: basis.resolution(), min: MIN_RESOLUTION });
    }
    Ok(())
}

impl SampledImmersion {
    /// Project samples onto `M`, fit coefficients and re-synthesize.
    pub fn from_samples(
        topology: SurfaceTopology,
        ambient: AmbientManifold,
        basis: Basis,
        samples: &[f64],
    ) -> Result<Self> {
        check_basis(&topology, basis)?;
        let space = Arc::new(Space::new(basis));
        Self::build(topology, ambient, basis, space, samples)
    }

    fn build(
        topology: SurfaceTopology,
        ambient: AmbientManifold,
        basis: Basis,
        space: Arc<Space>,
        samples: &[f64],
    ) -> Result<Self> {
        let q = ambient.dim();
        let n = space.n_nodes();
        if samples.len() != n * q {
            return Err(Error::ShapeMismatch { expected: n * q, got: samples.len() });
        }
        let mut projected = Vec::with_capacity(samples.len());
        for z in samples.chunks(q) {
            projected.extend(ambient.project_point(z)?);
        }
        let coeffs = space.fit_field(&projected, q);
        Self::assemble(topology, ambient, basis, space, coeffs)
    }

    /// Rebuild from stored coefficients, keeping them bit-exact.
    pub fn from_coeffs(
        topology: SurfaceTopology,
        ambient: AmbientManifold,
        basis: Basis,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        check_basis(&topology, basis)?;
        let space = Arc::new(Space::new(basis));
        let expected = space.n_coeffs() * ambient.dim();
        if coeffs.len() != expected {
            return Err(Error::ShapeMismatch { expected, got: coeffs.len() });
        }
        Self::assemble(topology, ambient, basis, space, coeffs)
    }

    fn assemble(
        topology: SurfaceTopology,
        ambient: AmbientManifold,
        basis: Basis,
        space: Arc<Space>,
        coeffs: Vec<f64>,
    ) -> Result<Self> {
        let q = ambient.dim();
        let jets = space.jets_from_coeffs(&coeffs, q);
        let samples = jets.d[0].clone();
        if ambient.is_sphere() {
            for z in samples.chunks(q) {
                let dev = (crate::vecops::norm2(z).sqrt() - 1.0).abs();
                if dev > ON_GRID_TOL {
                    return Err(Error::OffManifold { deviation: dev });
                }
            }
        }
        for node in 0..jets.n {
            let (a, b) = (jets.at(1, node), jets.at(2, node));
            let det = crate::vecops::norm2(a) * crate::vecops::norm2(b) - crate::vecops::dot(a, b).powi(2);
            if det.is_nan() || det <= EPS_IMM {
                return Err(Error::DegenerateMetric { node, det });
            }
        }
        Ok(Self { topology, ambient, basis, space, coeffs, samples })
    }

    /// Same surface data type with new grid samples (projected and refit).
    pub fn with_samples(&self, samples: &[f64]) -> Result<Self> {
        Self::build(self.topology.clone(), self.ambient, self.basis, self.space.clone(), samples)
    }

    pub fn topology(&self) -> &SurfaceTopology {
        &self.topology
    }

    pub fn ambient(&self) -> &AmbientManifold {
        &self.ambient
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn n_nodes(&self) -> usize {
        self.space.n_nodes()
    }

    pub fn point(&self, node: usize) -> &[f64] {
        let q = self.dim();
        &self.samples[node * q..(node + 1) * q]
    }

    pub fn jets(&self) -> Jets {
        self.space.jets_from_coeffs(&self.coeffs, self.dim())
    }

    /// Component `c` of the torus immersion (or a derivative) at a chart point.
    pub fn eval_torus(&self, p: [f64; 2], du: usize, dv: usize) -> Result<Vec<f64>> {
        let Space::Fourier(fs) = &*self.space else {
            return Err(Error::UnsupportedBasis);
        };
        let nc = fs.n_coeffs();
        Ok((0..self.dim())
            .map(|c| fs.eval(&self.coeffs[c * nc..(c + 1) * nc], p, du, dv))
            .collect())
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            topology: self.topology.genus,
            ambient: self.ambient,
            basis: self.basis,
            coeffs: self.coeffs.clone(),
            marked_points: self.topology.marked_points.clone(),
        }
    }

    pub fn from_checkpoint(cp: Checkpoint) -> Result<Self> {
        let topology = SurfaceTopology::new(cp.topology, cp.marked_points)?;
        let ambient = AmbientManifold::new(cp.ambient.kind, cp.ambient.embedding_dim)?;
        Self::from_coeffs(topology, ambient, cp.basis, cp.coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_marked_point_counts() {
        assert!(SurfaceTopology::new(Genus::Torus, vec![[0.0, 0.0]]).is_ok());
        assert!(SurfaceTopology::new(Genus::Torus, vec![]).is_err());
        assert!(SurfaceTopology::new(Genus::Sphere, vec![[1.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
        assert_eq!(SurfaceTopology::sphere().marked_points.len(), 3);
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let phi = make_preset_immersion(&Preset::Perturbed {
            base: Box::new(Preset::CliffordTorus),
            seed: 3,
            amplitude: 0.03,
        }, 12)
        .unwrap();
        let back = SampledImmersion::from_checkpoint(phi.checkpoint()).unwrap();
        assert_eq!(back.coeffs(), phi.coeffs());
        assert_eq!(back.samples(), phi.samples());
    }

    #[test]
    fn mismatched_basis_rejected() {
        let amb = AmbientManifold::sphere(4).unwrap();
        let r = SampledImmersion::from_coeffs(
            SurfaceTopology::torus(),
            amb,
            Basis::SphericalHarmonics { degree: 8 },
            vec![0.0; 81 * 4],
        );
        assert!(matches!(r, Err(Error::InvalidTopology(_))));
    }
}
