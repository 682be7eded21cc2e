//! Numerical toolkit for the viscosity method for minimal surfaces.
//!
//! Immersions of the torus and the sphere into the unit sphere `S^{Q-1}` or
//! flat `R^Q` are represented spectrally (Fourier on the periodic chart,
//! spherical harmonics on the sphere). On top of that representation the
//! crate evaluates the relaxed energies `A^σ = Area + σ² F`, their first and
//! second variations, the Coulomb-slice gauge operators on conformal torus
//! charts, and the Morse index of the constrained Hessian along a
//! vanishing-viscosity continuation.

pub mod ambient;
pub mod continuation;
pub mod energy;
pub mod error;
pub mod gauge;
pub mod index;
pub mod oracle;
pub mod surface;

mod vecops;

pub use ambient::{AmbientKind, AmbientManifold};
pub use error::{Error, Result};
pub use surface::{Basis, Genus, SampledImmersion, SurfaceTopology};
