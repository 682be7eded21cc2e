//! Ambient manifolds `M ⊂ R^Q`: the round unit sphere and flat space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecops::{dot, norm2};

/// Below this norm the radial projection is undefined.
pub const ZERO_POINT_TOL: f64 = 1e-14;
/// Allowed deviation of a point from the unit sphere.
pub const ON_MANIFOLD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AmbientKind {
    #[serde(rename = "sphere")]
    UnitSphere,
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmbientManifold {
    pub kind: AmbientKind,
    #[serde(rename = "dim")]
    pub embedding_dim: usize,
}

impl AmbientManifold {
    pub fn new(kind: AmbientKind, embedding_dim: usize) -> Result<Self> {
        let min = match kind {
            AmbientKind::UnitSphere => 4,
            AmbientKind::Euclidean => 3,
        };
        if embedding_dim < min {
            return Err(Error::InvalidAmbient(format!(
                "{kind:?} needs Q >= {min}, got {embedding_dim}"
            )));
        }
        Ok(Self { kind, embedding_dim })
    }

    pub fn sphere(q: usize) -> Result<Self> {
        Self::new(AmbientKind::UnitSphere, q)
    }

    pub fn euclidean(q: usize) -> Result<Self> {
        Self::new(AmbientKind::Euclidean, q)
    }

    pub fn dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn is_sphere(&self) -> bool {
        self.kind == AmbientKind::UnitSphere
    }

    /// Codimension of a surface inside `M` (rank of its normal bundle in `TM`).
    pub fn surface_codim(&self) -> usize {
        match self.kind {
            AmbientKind::UnitSphere => self.embedding_dim - 3,
            AmbientKind::Euclidean => self.embedding_dim - 2,
        }
    }

    /// `|II_{R^Q}|²_g - |II_M|²_g` for a surface lying in `M`.
    ///
    /// On the unit sphere the Euclidean second fundamental form carries the
    /// extra radial part `-g_ij Φ`, whose squared norm is `tr_g(g) = 2`.
    pub fn radial_ii_norm2(&self) -> f64 {
        match self.kind {
            AmbientKind::UnitSphere => 2.0,
            AmbientKind::Euclidean => 0.0,
        }
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.embedding_dim {
            return Err(Error::ShapeMismatch {
                expected: self.embedding_dim,
                got: v.len(),
            });
        }
        Ok(())
    }

    fn check_on(&self, z: &[f64]) -> Result<()> {
        if self.is_sphere() {
            let dev = (norm2(z).sqrt() - 1.0).abs();
            if dev > ON_MANIFOLD_TOL {
                return Err(Error::OffManifold { deviation: dev });
            }
        }
        Ok(())
    }

    /// Nearest point of `M` to `z`.
    pub fn project_point(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        match self.kind {
            AmbientKind::Euclidean => Ok(z.to_vec()),
            AmbientKind::UnitSphere => {
                let r = norm2(z).sqrt();
                if r < ZERO_POINT_TOL {
                    return Err(Error::ZeroPoint);
                }
                Ok(z.iter().map(|x| x / r).collect())
            }
        }
    }

    /// Orthogonal projection `P_z` of `x` onto `T_z M`.
    pub fn tangent_project(&self, z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        self.check_len(x)?;
        self.check_on(z)?;
        Ok(self.tangent_project_unchecked(z, x))
    }

    pub(crate) fn tangent_project_unchecked(&self, z: &[f64], x: &[f64]) -> Vec<f64> {
        match self.kind {
            AmbientKind::Euclidean => x.to_vec(),
            AmbientKind::UnitSphere => {
                let zx = dot(z, x);
                x.iter().zip(z).map(|(xi, zi)| xi - zx * zi).collect()
            }
        }
    }

    /// Second derivative of `t ↦ π_M(z + t w)` at `t = 0` for tangent `w`.
    pub fn retraction_curvature(&self, z: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z)?;
        self.check_len(w)?;
        self.check_on(z)?;
        if self.is_sphere() {
            let zw = dot(z, w);
            if zw.abs() > ON_MANIFOLD_TOL * (1.0 + norm2(w).sqrt()) {
                return Err(Error::NotTangent { max_dot: zw.abs() });
            }
        }
        Ok(self.retraction_curvature_bilinear(z, w, w))
    }

    /// Polarized retraction curvature `κ(w, w')`.
    pub(crate) fn retraction_curvature_bilinear(&self, z: &[f64], w: &[f64], w2: &[f64]) -> Vec<f64> {
        match self.kind {
            AmbientKind::Euclidean => vec![0.0; z.len()],
            AmbientKind::UnitSphere => {
                let ww = dot(w, w2);
                z.iter().map(|zi| -ww * zi).collect()
            }
        }
    }
}
