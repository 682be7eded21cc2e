//! Finite-difference reference values for the variational formulas.
//!
//! Central differences at steps `h` and `h/2`, combined by Richardson
//! extrapolation. The free path moves the jets linearly, `Φ + t w`; the
//! projected path resamples `π_M(Φ + t w)` and refits.

use serde::{Deserialize, Serialize};

use crate::energy::{energies_from_jets, evaluate_energies, Variation};
use crate::error::Result;
use crate::surface::SampledImmersion;

pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathDerivatives {
    pub d_area: f64,
    pub d_f: f64,
    pub d2_area: f64,
    pub d2_f: f64,
}

impl PathDerivatives {
    pub fn d_a_sigma(&self, sigma: f64) -> f64 {
        self.d_area + sigma * sigma * self.d_f
    }

    pub fn d2_a_sigma(&self, sigma: f64) -> f64 {
        self.d2_area + sigma * sigma * self.d2_f
    }
}

/// Richardson-extrapolated first and second central differences of a scalar
/// path `t ↦ e(t)` returning `(area, F)`.
fn richardson<E>(h: f64, e: E) -> Result<PathDerivatives>
where
    E: Fn(f64) -> Result<(f64, f64)>,
{
    let e0 = e(0.0)?;
    let stencil = |h: f64| -> Result<[f64; 4]> {
        let p = e(h)?;
        let m = e(-h)?;
        Ok([
            (p.0 - m.0) / (2.0 * h),
            (p.1 - m.1) / (2.0 * h),
            (p.0 - 2.0 * e0.0 + m.0) / (h * h),
            (p.1 - 2.0 * e0.1 + m.1) / (h * h),
        ])
    };
    let a = stencil(h)?;
    let b = stencil(0.5 * h)?;
    let r = |k: usize| (4.0 * b[k] - a[k]) / 3.0;
    Ok(PathDerivatives { d_area: r(0), d_f: r(1), d2_area: r(2), d2_f: r(3) })
}

/// Derivatives of Area and `F` along `t ↦ Φ + t w` (no projection).
pub fn fd_free_path(phi: &SampledImmersion, w: &Variation, h: f64) -> Result<PathDerivatives> {
    let pj = phi.jets();
    let wj = w.jets(phi.space());
    let weights = phi.space().chart_weights();
    richardson(h, |t| {
        let r = energies_from_jets(phi.ambient(), &pj.add_scaled(t, &wj), weights.clone(), 0.0)?;
        Ok((r.area, r.f_energy))
    })
}

/// Derivatives of Area and `F` along `t ↦ π_M(Φ + t w)`, sampled and refit.
pub fn fd_projected_path(phi: &SampledImmersion, w: &Variation, h: f64) -> Result<PathDerivatives> {
    richardson(h, |t| {
        let s: Vec<f64> = phi.samples().iter().zip(&w.values).map(|(p, v)| p + t * v).collect();
        let r = evaluate_energies(&phi.with_samples(&s)?, 0.0)?;
        Ok((r.area, r.f_energy))
    })
}
