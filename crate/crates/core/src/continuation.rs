//! Vanishing-viscosity experiment: critical points of `A^σ` along a
//! decreasing σ-schedule, entropy monitoring, index tracking, and the cutoff
//! and transport constructions used to move negative directions from the
//! limit back onto the sequence.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::energy::{evaluate_energies, EnergyReport, Variation};
use crate::error::{Error, Result};
use crate::index::{assemble_hessian, assemble_jets, compute_spectrum, SpectrumReport, VariationBasis};
use crate::surface::sph::gauss_legendre;
use crate::surface::{compute_geometry, Checkpoint, FourierSpace, Jets, SampledImmersion, Space};
use crate::vecops::dot;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Basis cutoff of the normal variations Newton moves along.
    pub cutoff: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 40, cutoff: 6 }
    }
}

#[derive(Debug, Clone)]
pub struct CriticalPoint {
    pub phi: SampledImmersion,
    /// Dual norm of the gradient on the normal basis, with the normal parts
    /// of the ambient Killing fields quotiented out.
    pub grad_norm: f64,
    /// Dual norm on the full normal basis.
    pub full_grad_norm: f64,
    pub initial_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Gradient (and optionally Hessian) in whitened coordinates `y = Lᵀc`,
/// `G = L Lᵀ`, together with the projector onto the complement of the
/// Killing directions.
struct NewtonSystem {
    basis: VariationBasis,
    a: Option<DMatrix<f64>>,
    b: DVector<f64>,
    linv: DMatrix<f64>,
    proj: DMatrix<f64>,
}

impl NewtonSystem {
    fn build(phi: &SampledImmersion, sigma: f64, cutoff: usize, hessian: bool) -> Result<Self> {
        let basis = VariationBasis::normal(phi, cutoff)?;
        let (h, g) = if hessian {
            let asm = assemble_hessian(phi, sigma, &basis)?;
            (Some(asm.hessian), asm.gradient)
        } else {
            let geo = compute_geometry(phi)?;
            let jets: Vec<Jets> = basis.fields.iter().map(|f| f.jets(phi.space())).collect();
            (None, assemble_jets(&geo, &jets, sigma).1)
        };
        let l = basis.gram.clone().cholesky().ok_or(Error::GramNotSpd)?.l();
        let n = l.nrows();
        let linv = l.solve_lower_triangular(&DMatrix::identity(n, n)).ok_or(Error::GramNotSpd)?;
        let z = l.transpose() * killing_coords(phi, &basis)?;
        let mut proj = DMatrix::<f64>::identity(n, n);
        if z.ncols() > 0 {
            let svd = z.svd(true, false);
            let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
            let u = svd.u.expect("requested");
            for (k, &sv) in svd.singular_values.iter().enumerate() {
                if sv > 1e-8 * smax {
                    let c = u.column(k);
                    proj -= &c * c.transpose();
                }
            }
        }
        let a = h.map(|h| &linv * h * linv.transpose());
        let b = &linv * g;
        Ok(Self { basis, a, b, linv, proj })
    }

    fn full_norm(&self) -> f64 {
        self.b.norm()
    }

    fn reduced_norm(&self) -> f64 {
        (&self.proj * &self.b).norm()
    }

    /// `-H⁺ g` on the Killing complement, dropping eigen-directions with
    /// `|μ| ≤ 1e-8 max|μ|`.
    fn step(&self) -> Vec<f64> {
        let a = self.a.as_ref().expect("assembled with Hessian");
        let pa = &self.proj * a * &self.proj;
        let eig = (0.5 * (&pa + pa.transpose())).symmetric_eigen();
        let b = &self.proj * &self.b;
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let thr = (1e-8 * scale).max(1e-12);
        let mut y = DVector::zeros(b.len());
        for (k, &mu) in eig.eigenvalues.iter().enumerate() {
            if mu.abs() > thr {
                let u = eig.eigenvectors.column(k);
                y -= u * (u.dot(&b) / mu);
            }
        }
        (self.linv.transpose() * y).iter().cloned().collect()
    }
}

/// Newton iteration on normal variations with `π_M` re-projection and
/// backtracking on the gradient norm.
///
/// Steps and the stopping test live on the complement of the Killing
/// directions: the critical set is an isometry orbit, and on a truncated
/// basis the gradient keeps a small Killing component that no step removes.
pub fn solve_critical_point(phi0: &SampledImmersion, sigma: f64, cfg: &NewtonConfig) -> Result<CriticalPoint> {
    let mut phi = phi0.clone();
    let mut sys = NewtonSystem::build(&phi, sigma, cfg.cutoff, true)?;
    let initial_grad_norm = sys.reduced_norm();
    for it in 0..=cfg.max_iter {
        let gn = sys.reduced_norm();
        let done = |phi, converged| CriticalPoint {
            phi,
            grad_norm: gn,
            full_grad_norm: sys.full_norm(),
            initial_grad_norm,
            iterations: it,
            converged,
        };
        if gn <= cfg.tol {
            return Ok(done(phi, true));
        }
        if it == cfg.max_iter {
            return Ok(done(phi, false));
        }
        let step = sys.step();
        let q = phi.dim();
        let mut dir = vec![0.0; phi.n_nodes() * q];
        for (c, f) in step.iter().zip(&sys.basis.fields) {
            for (d, v) in dir.iter_mut().zip(&f.values) {
                *d += c * v;
            }
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let s: Vec<f64> = phi.samples().iter().zip(&dir).map(|(p, d)| p + t * d).collect();
            if let Ok(cand) = phi.with_samples(&s) {
                if let Ok(cs) = NewtonSystem::build(&cand, sigma, cfg.cutoff, false) {
                    if cs.reduced_norm() < gn {
                        accepted = Some(cand);
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some(c) => {
                phi = c;
                sys = NewtonSystem::build(&phi, sigma, cfg.cutoff, true)?;
            }
            None => return Ok(done(phi, false)),
        }
    }
    unreachable!("loop returns at max_iter")
}

/// Basis coordinates of the normal parts of the ambient Killing fields
/// (rotations, plus translations in flat space), as `G⁻¹⟨w_a, π_n K⟩`.
fn killing_coords(phi: &SampledImmersion, basis: &VariationBasis) -> Result<DMatrix<f64>> {
    let geo = compute_geometry(phi)?;
    let q = phi.dim();
    let n = phi.n_nodes();
    let mut fields: Vec<Vec<f64>> = Vec::new();
    for a in 0..q {
        for b in a + 1..q {
            fields.push(
                (0..n)
                    .flat_map(|i| {
                        let x = phi.point(i);
                        let mut k = vec![0.0; q];
                        k[a] = x[b];
                        k[b] = -x[a];
                        k
                    })
                    .collect(),
            );
        }
    }
    if !phi.ambient().is_sphere() {
        for a in 0..q {
            fields.push((0..n).flat_map(|_| (0..q).map(move |c| if c == a { 1.0 } else { 0.0 })).collect());
        }
    }
    let mut rhs = DMatrix::zeros(basis.len(), fields.len());
    for (j, k) in fields.iter().enumerate() {
        let kn: Vec<f64> =
            (0..n).flat_map(|i| geo.nodes[i].pi_n(&geo.ambient, &k[i * q..(i + 1) * q])).collect();
        for (a, w) in basis.fields.iter().enumerate() {
            rhs[(a, j)] = (0..n).map(|i| geo.dvol(i) * dot(w.at(i), &kn[i * q..(i + 1) * q])).sum();
        }
    }
    basis.gram.clone().cholesky().ok_or(Error::GramNotSpd).map(|c| c.solve(&rhs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuationConfig {
    pub sigma_schedule: Vec<f64>,
    #[serde(default = "default_newton")]
    pub newton: NewtonConfig,
    #[serde(default = "default_spectrum_cutoff")]
    pub spectrum_cutoff: usize,
    #[serde(default)]
    pub eps_neg: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    /// First stage of the tail used by the semicontinuity verdict; `None`
    /// takes the second half of the schedule.
    #[serde(default)]
    pub tail_start: Option<usize>,
}

fn default_newton() -> NewtonConfig {
    NewtonConfig::default()
}

fn default_spectrum_cutoff() -> usize {
    4
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            sigma_schedule: (1..=10).map(|k| 0.5f64.powi(k)).collect(),
            newton: NewtonConfig::default(),
            spectrum_cutoff: 4,
            eps_neg: None,
            seed: 0,
            tail_start: None,
        }
    }
}

impl ContinuationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_schedule.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("sigma_schedule entries must be positive".into()));
        }
        if self.sigma_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidConfig("sigma_schedule must be strictly decreasing".into()));
        }
        if !(self.newton.tol > 0.0) {
            return Err(Error::InvalidConfig("newton.tol must be positive".into()));
        }
        if matches!(self.eps_neg, Some(e) if !(e > 0.0)) {
            return Err(Error::InvalidConfig("eps_neg must be positive".into()));
        }
        Ok(())
    }

    pub fn tail(&self) -> usize {
        self.tail_start.unwrap_or(self.sigma_schedule.len() / 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub sigma: f64,
    pub checkpoint: Checkpoint,
    pub grad_norm: f64,
    pub initial_grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub energies: EnergyReport,
    pub entropy_product: f64,
    pub spectrum: SpectrumReport,
}

/// `σ² F log(1/σ)`.
pub fn entropy_product(sigma: f64, f_energy: f64) -> f64 {
    sigma * sigma * f_energy * (1.0 / sigma).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub limit_index: usize,
    pub tail_start: usize,
    pub tail_min: usize,
    pub trajectory: Vec<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationResult {
    pub stages: Vec<StageRecord>,
    pub limit: Option<StageRecord>,
    pub verdict: Option<Verdict>,
    pub entropy_nonincreasing: bool,
    pub max_a_sigma: f64,
}

fn stage(phi: &SampledImmersion, sigma: f64, cfg: &ContinuationConfig) -> Result<StageRecord> {
    let cp = solve_critical_point(phi, sigma, &cfg.newton)?;
    let energies = evaluate_energies(&cp.phi, sigma)?;
    let spectrum = compute_spectrum(&cp.phi, sigma, cfg.spectrum_cutoff, cfg.eps_neg)?;
    Ok(StageRecord {
        sigma,
        checkpoint: cp.phi.checkpoint(),
        grad_norm: cp.grad_norm,
        initial_grad_norm: cp.initial_grad_norm,
        iterations: cp.iterations,
        converged: cp.converged,
        energies,
        entropy_product: if sigma > 0.0 { entropy_product(sigma, energies.f_energy) } else { 0.0 },
        spectrum,
    })
}

/// Run the schedule with warm starts, then solve and diagonalize at `σ = 0`
/// from the last stage and compare indices over the tail.
pub fn run_continuation(cfg: &ContinuationConfig, start: &SampledImmersion) -> Result<ContinuationResult> {
    cfg.validate()?;
    let mut stages = Vec::with_capacity(cfg.sigma_schedule.len());
    let mut phi = start.clone();
    for &sigma in &cfg.sigma_schedule {
        let rec = stage(&phi, sigma, cfg)?;
        phi = SampledImmersion::from_checkpoint(rec.checkpoint.clone())?;
        stages.push(rec);
    }
    let entropy_nonincreasing = stages.windows(2).all(|w| w[1].entropy_product <= w[0].entropy_product);
    let max_a_sigma = stages.iter().map(|s| s.energies.a_sigma).fold(0.0, f64::max);
    if stages.is_empty() {
        return Ok(ContinuationResult { stages, limit: None, verdict: None, entropy_nonincreasing, max_a_sigma });
    }
    let limit = stage(&phi, 0.0, cfg)?;
    let verdict = semicontinuity_verdict(&limit.spectrum, &stages, cfg.tail().min(stages.len() - 1))?;
    Ok(ContinuationResult { stages, limit: Some(limit), verdict: Some(verdict), entropy_nonincreasing, max_a_sigma })
}

/// Pass iff the limit index does not exceed the smallest index over stages
/// `k ≥ tail_start`.
pub fn semicontinuity_verdict(limit: &SpectrumReport, stages: &[StageRecord], tail_start: usize) -> Result<Verdict> {
    let traj: Vec<usize> = stages.iter().map(|s| s.spectrum.index).collect();
    verdict_from_indices(limit.index, &traj, tail_start)
}

pub fn verdict_from_indices(limit_index: usize, trajectory: &[usize], tail_start: usize) -> Result<Verdict> {
    let tail = trajectory.get(tail_start..).filter(|t| !t.is_empty()).ok_or(Error::EmptyTail(tail_start))?;
    let tail_min = *tail.iter().min().expect("non-empty");
    let pass = limit_index <= tail_min;
    let detail = format!(
        "limit index {limit_index} {} min tail index {tail_min} (stages {tail_start}..); trajectory {trajectory:?}",
        if pass { "<=" } else { ">" }
    );
    Ok(Verdict { pass, limit_index, tail_start, tail_min, trajectory: trajectory.to_vec(), detail })
}

// ---------------------------------------------------------------------------
// Cutoff and transport
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    pub centers: Vec<[f64; 2]>,
    pub delta: f64,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_d(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        6.0 * t * (1.0 - t)
    } else {
        0.0
    }
}

impl CutoffSpec {
    pub fn validate(&self) -> Result<()> {
        let d = self.delta;
        // the two blending windows [δ, 2δ] and [√δ/2, √δ] must not overlap
        if !(d > 0.0 && d < 1.0 / 16.0) {
            return Err(Error::BadDelta(format!("delta = {d} must lie in (0, 1/16)")));
        }
        let r = d.sqrt();
        for (i, a) in self.centers.iter().enumerate() {
            for b in &self.centers[i + 1..] {
                if torus_dist(*a, *b) < 2.0 * r {
                    return Err(Error::BadDelta(format!("balls of radius √δ = {r} around {a:?} and {b:?} overlap")));
                }
            }
        }
        Ok(())
    }

    /// Profile `χ^δ(s)` and its derivative: `0` on `[0, δ]`, the logarithmic
    /// capacity profile `log(s/δ)/log(1/√δ)` in between, `1` beyond `√δ`,
    /// with cubic blends on `[δ, 2δ]` and `[√δ/2, √δ]`.
    pub fn chi(&self, s: f64) -> (f64, f64) {
        let d = self.delta;
        let r = d.sqrt();
        if s <= d {
            return (0.0, 0.0);
        }
        if s >= r {
            return (1.0, 0.0);
        }
        let ln = (1.0 / r).ln();
        let l = (s / d).ln() / ln;
        let dl = 1.0 / (s * ln);
        if s < 2.0 * d {
            let t = (s - d) / d;
            (smoothstep(t) * l, smoothstep_d(t) / d * l + smoothstep(t) * dl)
        } else if s > 0.5 * r {
            let t = (s - 0.5 * r) / (0.5 * r);
            let b = smoothstep(t);
            (l + b * (1.0 - l), dl * (1.0 - b) + smoothstep_d(t) / (0.5 * r) * (1.0 - l))
        } else {
            (l, dl)
        }
    }
}

fn wrap(x: f64) -> f64 {
    let tp = 2.0 * std::f64::consts::PI;
    x - tp * (x / tp).round()
}

fn torus_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    wrap(a[0] - b[0]).hypot(wrap(a[1] - b[1]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffResult {
    pub w_delta: Variation,
    /// `‖w_δ - w‖_{W^{1,2}}`.
    pub w12_error: f64,
}

/// Cut `w` off near the centers and measure the `W^{1,2}(dvol_g)` cost by
/// polar quadrature around each center.
pub fn cutoff_transfer(phi: &SampledImmersion, w: &Variation, spec: &CutoffSpec) -> Result<CutoffResult> {
    spec.validate()?;
    let fs = match phi.space() {
        Space::Fourier(fs) => fs,
        Space::Sph(_) => return Err(Error::UnsupportedBasis),
    };
    let q = w.q;
    let factor = |p: [f64; 2]| -> f64 { spec.centers.iter().map(|&a| spec.chi(torus_dist(p, a)).0).product() };
    let values: Vec<f64> = (0..phi.n_nodes())
        .flat_map(|i| {
            let f = factor(fs.node(i));
            w.at(i).iter().map(move |x| f * x).collect::<Vec<_>>()
        })
        .collect();
    let w_delta = Variation::new(values, q);

    let nc = fs.n_coeffs();
    let to_c = |c: &[f64]| -> Vec<Vec<num_complex::Complex64>> { c.chunks(nc).map(FourierSpace::to_complex).collect() };
    let wb = to_c(&phi.space().fit_field(&w.values, q));
    let pc = to_c(phi.coeffs());
    let eval = |b: &[Vec<num_complex::Complex64>], p: [f64; 2], du: usize, dv: usize| -> Vec<f64> {
        b.iter().map(|c| fs.eval_complex(c, p, du, dv).re).collect()
    };

    let d = spec.delta;
    let r = d.sqrt();
    let breaks = [0.0, d, 2.0 * d, 0.5 * r, r];
    let (gx, gw) = gauss_legendre(24);
    let n_ang = 96;
    let mut total = 0.0;
    for &a in &spec.centers {
        for seg in breaks.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            // logarithmic substitution away from the origin
            let use_log = lo > 0.0;
            for (x, wq) in gx.iter().zip(&gw) {
                let t = 0.5 * (x + 1.0);
                let (s, ds) = if use_log {
                    let s = lo * (hi / lo).powf(t);
                    (s, s * (hi / lo).ln() * 0.5 * wq)
                } else {
                    (lo + (hi - lo) * t, (hi - lo) * 0.5 * wq)
                };
                let (chi, dchi) = spec.chi(s);
                for k in 0..n_ang {
                    let th = 2.0 * std::f64::consts::PI * k as f64 / n_ang as f64;
                    let (st, ct) = th.sin_cos();
                    let p = [a[0] + s * ct, a[1] + s * st];
                    let pu = eval(&pc, p, 1, 0);
                    let pv = eval(&pc, p, 0, 1);
                    let g = [[dot(&pu, &pu), dot(&pu, &pv)], [dot(&pu, &pv), dot(&pv, &pv)]];
                    let det = g[0][0] * g[1][1] - g[0][1] * g[0][1];
                    let gi = [[g[1][1] / det, -g[0][1] / det], [-g[0][1] / det, g[0][0] / det]];
                    let wv = eval(&wb, p, 0, 0);
                    let wu = eval(&wb, p, 1, 0);
                    let wvv = eval(&wb, p, 0, 1);
                    // v = (χ - 1) w; ∂v = χ' ∂s w + (χ - 1) ∂w
                    let m = chi - 1.0;
                    let du: Vec<f64> = (0..q).map(|c| dchi * ct * wv[c] + m * wu[c]).collect();
                    let dv: Vec<f64> = (0..q).map(|c| dchi * st * wv[c] + m * wvv[c]).collect();
                    let grad = gi[0][0] * dot(&du, &du) + 2.0 * gi[0][1] * dot(&du, &dv) + gi[1][1] * dot(&dv, &dv);
                    let val = m * m * dot(&wv, &wv);
                    let area = 2.0 * std::f64::consts::PI / n_ang as f64 * s * ds;
                    total += (grad + val) * det.sqrt() * area;
                }
            }
        }
    }
    Ok(CutoffResult { w_delta, w12_error: total.max(0.0).sqrt() })
}

/// `u(x) = P_{Φ_target(x)} w(x)`: pointwise projection onto `T_{Φ_target(x)} M`.
pub fn transport_variation(w: &Variation, target: &SampledImmersion) -> Result<Variation> {
    let q = target.dim();
    let expected = target.n_nodes() * q;
    if w.values.len() != expected || w.q != q {
        return Err(Error::ShapeMismatch { expected, got: w.values.len() });
    }
    let mut values = Vec::with_capacity(expected);
    for i in 0..target.n_nodes() {
        values.extend(target.ambient().tangent_project(target.point(i), w.at(i))?);
    }
    Ok(Variation::new(values, q))
}

/// `D²Area(Φ_k)(u_k, u_k)` with `u_k` the cut-off `w` transported onto
/// each `Φ_k`.
pub fn hessian_convergence_probe(
    sequence: &[SampledImmersion],
    limit: &SampledImmersion,
    w: &Variation,
    spec: &CutoffSpec,
) -> Result<Vec<f64>> {
    let wd = cutoff_transfer(limit, w, spec)?.w_delta;
    sequence
        .iter()
        .map(|phi| {
            let u = transport_variation(&wd, phi)?;
            crate::energy::second_variation_constrained(phi, &u, &u, 0.0)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_cases() {
        assert!(verdict_from_indices(5, &[7, 6, 5], 0).unwrap().pass);
        assert!(!verdict_from_indices(5, &[4], 0).unwrap().pass);
        assert!(matches!(verdict_from_indices(5, &[], 0), Err(Error::EmptyTail(0))));
        assert!(matches!(verdict_from_indices(5, &[5, 5], 2), Err(Error::EmptyTail(2))));
    }

    #[test]
    fn schedule_validation() {
        let mut c = ContinuationConfig::default();
        assert!(c.validate().is_ok());
        assert_eq!(c.sigma_schedule.len(), 10);
        c.sigma_schedule = vec![0.5, 0.5];
        assert!(c.validate().is_err());
        c.sigma_schedule = vec![0.5, -0.1];
        assert!(c.validate().is_err());
    }

    #[test]
    fn chi_profile_is_c1_and_monotone() {
        let spec = CutoffSpec { centers: vec![[0.0, 0.0]], delta: 1e-3 };
        let r = spec.delta.sqrt();
        for s in [spec.delta, 2.0 * spec.delta, 0.5 * r, r] {
            let (a, da) = spec.chi(s * (1.0 - 1e-9));
            let (b, db) = spec.chi(s * (1.0 + 1e-9));
            assert!((a - b).abs() < 1e-6);
            assert!((da - db).abs() < 1e-3 * (1.0 + da.abs()));
        }
        let mut prev = 0.0;
        for k in 0..=1000 {
            let s = 1.2 * r * k as f64 / 1000.0;
            let (c, dc) = spec.chi(s);
            assert!(c >= prev - 1e-15 && dc >= 0.0);
            prev = c;
        }
        // derivative against a central difference
        for s in [0.0015, 0.005, 0.02, 0.03] {
            let h = 1e-7;
            let fd = (spec.chi(s + h).0 - spec.chi(s - h).0) / (2.0 * h);
            assert!((fd - spec.chi(s).1).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn bad_delta() {
        let ok = CutoffSpec { centers: vec![[0.0, 0.0]], delta: 0.01 };
        assert!(ok.validate().is_ok());
        for d in [0.0, 0.1, -1.0] {
            assert!(CutoffSpec { centers: vec![[0.0, 0.0]], delta: d }.validate().is_err());
        }
        let close = CutoffSpec { centers: vec![[0.0, 0.0], [0.1, 0.0]], delta: 0.01 };
        assert!(matches!(close.validate(), Err(Error::BadDelta(_))));
    }

    #[test]
    fn entropy_product_formula() {
        let e = entropy_product(0.5, 10.0);
        assert!((e - 0.25 * 10.0 * 2f64.ln()).abs() < 1e-15);
    }

    proptest::proptest! {
        #[test]
        fn verdict_matches_tail_minimum(traj in proptest::collection::vec(0usize..8, 1..12), limit in 0usize..8, k in 0usize..12) {
            match verdict_from_indices(limit, &traj, k) {
                Ok(v) => proptest::prop_assert_eq!(v.pass, traj[k..].iter().all(|&i| limit <= i)),
                Err(_) => proptest::prop_assert!(k >= traj.len()),
            }
        }

        #[test]
        fn chi_stays_in_unit_interval(delta in 1e-6f64..0.06, s in 0.0f64..1.0) {
            let (c, d) = CutoffSpec { centers: vec![], delta }.chi(s);
            proptest::prop_assert!((0.0..=1.0).contains(&c) && d >= 0.0);
        }
    }
}