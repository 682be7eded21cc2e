//! Analytic test immersions.

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_geometry, Basis, SampledImmersion, Space, SurfaceTopology, MIN_RESOLUTION};
use crate::ambient::AmbientManifold;
use crate::error::{Error, Result};
use crate::vecops::norm2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Preset {
    EquatorS2InS3,
    CliffordTorus,
    ProductTorus { a: f64 },
    RoundSphereR3 { r: f64 },
    CliffordInR4,
    Perturbed { base: Box<Preset>, seed: u64, amplitude: f64 },
}

impl Preset {
    /// Parse `clifford_torus`, `product_torus(0.6)`,
    /// `perturbed(clifford_torus,7,0.02)` and friends.
    pub fn parse(s: &str) -> Result<Preset> {
        let s = s.trim();
        let unknown = || Error::UnknownPreset(s.to_string());
        let (head, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(unknown()),
            None => (s, None),
        };
        let num = |a: &str| a.trim().parse::<f64>().map_err(|_| unknown());
        match (head, args) {
            ("equator_s2_in_s3", None) => Ok(Preset::EquatorS2InS3),
            ("clifford_torus", None) => Ok(Preset::CliffordTorus),
            ("clifford_in_r4", None) => Ok(Preset::CliffordInR4),
            ("product_torus", Some(a)) => Ok(Preset::ProductTorus { a: num(a)? }),
            ("round_sphere_r3", Some(r)) => Ok(Preset::RoundSphereR3 { r: num(r)? }),
            ("round_sphere_r3", None) => Ok(Preset::RoundSphereR3 { r: 1.0 }),
            ("perturbed", Some(a)) => {
                let parts: Vec<&str> = a.rsplitn(3, ',').collect();
                if parts.len() != 3 {
                    return Err(unknown());
                }
                let amplitude = num(parts[0])?;
                let seed = parts[1].trim().parse::<u64>().map_err(|_| unknown())?;
                let base = Box::new(Preset::parse(parts[2])?);
                Ok(Preset::Perturbed { base, seed, amplitude })
            }
            _ => Err(unknown()),
        }
    }

    fn base_kind(&self) -> &Preset {
        match self {
            Preset::Perturbed { base, .. } => base.base_kind(),
            p => p,
        }
    }

    fn is_torus(&self) -> bool {
        matches!(
            self.base_kind(),
            Preset::CliffordTorus | Preset::ProductTorus { .. } | Preset::CliffordInR4
        )
    }
}

fn analytic(p: &Preset, x: [f64; 2]) -> Vec<f64> {
    match *p {
        Preset::EquatorS2InS3 => {
            let (st, ct) = x[0].sin_cos();
            let (sp, cp) = x[1].sin_cos();
            vec![st * cp, st * sp, ct, 0.0]
        }
        Preset::RoundSphereR3 { r } => {
            let (st, ct) = x[0].sin_cos();
            let (sp, cp) = x[1].sin_cos();
            vec![r * st * cp, r * st * sp, r * ct]
        }
        Preset::CliffordTorus | Preset::CliffordInR4 => {
            let (su, cu) = x[0].sin_cos();
            let (sv, cv) = x[1].sin_cos();
            vec![cu * FRAC_1_SQRT_2, su * FRAC_1_SQRT_2, cv * FRAC_1_SQRT_2, sv * FRAC_1_SQRT_2]
        }
        Preset::ProductTorus { a } => {
            let b = (1.0 - a * a).sqrt();
            let (su, cu) = x[0].sin_cos();
            let (sv, cv) = x[1].sin_cos();
            vec![a * cu, a * su, b * cv, b * sv]
        }
        Preset::Perturbed { .. } => unreachable!("perturbations are built from a sampled base"),
    }
}

/// Build a preset immersion at `resolution` Fourier modes per side (torus) or
/// harmonic degree (sphere).
pub fn make_preset_immersion(preset: &Preset, resolution: usize) -> Result<SampledImmersion> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::ResolutionTooLow { got: resolution, min: MIN_RESOLUTION });
    }
    if let Preset::Perturbed { base, seed, amplitude } = preset {
        let base = make_preset_immersion(base, resolution)?;
        return perturb(&base, *seed, *amplitude);
    }
    let (topology, basis) = if preset.is_torus() {
        (SurfaceTopology::torus(), Basis::Fourier { modes: resolution })
    } else {
        (SurfaceTopology::sphere(), Basis::SphericalHarmonics { degree: resolution })
    };
    let ambient = match preset {
        Preset::EquatorS2InS3 | Preset::CliffordTorus => AmbientManifold::sphere(4)?,
        Preset::ProductTorus { a } => {
            if !(*a > 0.0 && *a < 1.0) {
                return Err(Error::UnknownPreset(format!("product_torus({a}) needs 0 < a < 1")));
            }
            AmbientManifold::sphere(4)?
        }
        Preset::RoundSphereR3 { r } => {
            if !(*r > 0.0) {
                return Err(Error::UnknownPreset(format!("round_sphere_r3({r}) needs r > 0")));
            }
            AmbientManifold::euclidean(3)?
        }
        Preset::CliffordInR4 => AmbientManifold::euclidean(4)?,
        Preset::Perturbed { .. } => unreachable!(),
    };
    let space = Space::new(basis);
    let samples: Vec<f64> = (0..space.n_nodes()).flat_map(|i| analytic(preset, space.node(i))).collect();
    SampledImmersion::from_samples(topology, ambient, basis, &samples)
}

/// Seeded band-limited normal perturbation of sup-norm `amplitude`, then `π_M`.
pub fn perturb(base: &SampledImmersion, seed: u64, amplitude: f64) -> Result<SampledImmersion> {
    let q = base.dim();
    let space = base.space();
    let nc = space.n_coeffs();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![0.0; q * nc];
    for c in 0..q {
        let block = &mut coeffs[c * nc..(c + 1) * nc];
        match space {
            Space::Fourier(fs) => {
                let n = fs.n();
                for a in 0..n {
                    for b in 0..n {
                        if fs.freq(a).abs() <= 2 && fs.freq(b).abs() <= 2 {
                            block[2 * (a * n + b)] = rng.gen_range(-1.0..1.0);
                            block[2 * (a * n + b) + 1] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
            }
            Space::Sph(_) => {
                for v in block.iter_mut().take(9) {
                    *v = rng.gen_range(-1.0..1.0);
                }
            }
        }
    }
    let h = space.jets_from_coeffs(&coeffs, q).d[0].clone();
    let geo = compute_geometry(base)?;
    let hn: Vec<Vec<f64>> = geo
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| n.pi_n(base.ambient(), &h[i * q..(i + 1) * q]))
        .collect();
    let peak = hn.iter().map(|v| norm2(v).sqrt()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { amplitude / peak } else { 0.0 };
    let samples: Vec<f64> = hn
        .iter()
        .enumerate()
        .flat_map(|(i, v)| {
            let p = base.point(i);
            p.iter().zip(v).map(|(a, b)| a + scale * b).collect::<Vec<_>>()
        })
        .collect();
    base.with_samples(&samples)
}
