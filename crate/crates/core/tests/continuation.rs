use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4, Vector4};
use viscmin::continuation::{
    cutoff_transfer, hessian_convergence_probe, run_continuation, solve_critical_point, transport_variation,
    ContinuationConfig, CutoffSpec, NewtonConfig,
};
use viscmin::energy::{second_variation_constrained, tangency_defect, Variation};
use viscmin::surface::{compute_geometry, make_preset_immersion, Preset};
use viscmin::SampledImmersion;

fn clifford(n: usize) -> SampledImmersion {
    make_preset_immersion(&Preset::CliffordTorus, n).unwrap()
}

fn perturbed(seed: u64, amplitude: f64, n: usize) -> SampledImmersion {
    let p = Preset::Perturbed { base: Box::new(Preset::CliffordTorus), seed, amplitude };
    make_preset_immersion(&p, n).unwrap()
}

/// Max distance from the samples to the nearest rotated Clifford torus
/// `{xᵀJx = 0}`, `J = R diag(1, 1, -1, -1) Rᵀ`, fitted by least squares over
/// symmetric traceless `J` and then rounded to eigenvalues `±1`.
fn orbit_distance(phi: &SampledImmersion) -> f64 {
    let mut basis = Vec::new();
    for a in 0..4 {
        for b in a..4 {
            let mut m = Matrix4::<f64>::zeros();
            if a == b {
                if a == 3 {
                    continue;
                }
                m[(a, a)] = 1.0;
                m[(3, 3)] = -1.0;
            } else {
                m[(a, b)] = 1.0;
                m[(b, a)] = 1.0;
            }
            basis.push(m);
        }
    }
    let x = |i: usize| Vector4::from_column_slice(phi.point(i));
    let n = phi.n_nodes();
    let a = DMatrix::from_fn(n, basis.len(), |i, k| x(i).dot(&(basis[k] * x(i))));
    let e = (a.transpose() * &a).symmetric_eigen();
    let c = e.eigenvectors.column(e.eigenvalues.imin());
    let j: Matrix4<f64> = basis.iter().zip(c.iter()).map(|(m, w)| m * *w).sum();
    let ej = j.symmetric_eigen();
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&p, &q| ej.eigenvalues[p].total_cmp(&ej.eigenvalues[q]));
    let mut d = ej.eigenvalues;
    for (r, &k) in order.iter().enumerate() {
        d[k] = if r < 2 { -1.0 } else { 1.0 };
    }
    let jj = ej.eigenvectors * Matrix4::from_diagonal(&d) * ej.eigenvectors.transpose();
    (0..n).map(|i| 0.5 * x(i).dot(&(jj * x(i))).abs()).fold(0.0, f64::max)
}

fn unit_normal(phi: &SampledImmersion) -> Variation {
    let geo = compute_geometry(phi).unwrap();
    let values = geo.nodes.iter().flat_map(|n| n.normal_frame[0].clone()).collect();
    Variation::new(values, phi.dim())
}

#[test]
fn clifford_is_critical_for_every_sigma() {
    let phi = clifford(16);
    for sigma in [0.0, 0.05, 0.5] {
        let cp = solve_critical_point(&phi, sigma, &NewtonConfig::default()).unwrap();
        assert!(cp.converged && cp.iterations == 0, "σ = {sigma}");
        assert!(cp.full_grad_norm <= 1e-8);
    }
}

#[test]
fn newton_returns_to_the_clifford_orbit() {
    let start = perturbed(7, 0.02, 24);
    assert!(orbit_distance(&start) > 1e-2);
    let cp = solve_critical_point(&start, 0.05, &NewtonConfig::default()).unwrap();
    assert!(cp.converged, "grad norm {:e} after {} iterations", cp.grad_norm, cp.iterations);
    assert!(cp.grad_norm <= 1e-8);
    let d = orbit_distance(&cp.phi);
    assert!(d <= 1e-4, "orbit distance {d:e}");
}

#[test]
fn clifford_continuation() {
    let res = run_continuation(&ContinuationConfig::default(), &clifford(16)).unwrap();
    assert_eq!(res.stages.len(), 10);
    for s in &res.stages {
        assert!(s.converged && s.grad_norm <= 1e-8);
        assert_eq!(s.spectrum.nullity, 4, "σ = {}", s.sigma);
        assert!(s.initial_grad_norm.is_finite());
    }
    assert!(res.entropy_nonincreasing);
    // A^σ = 2π² + σ² F with F bounded along the schedule
    assert!(res.max_a_sigma < 2.0 * PI * PI + 0.25 * 200.0);
    let traj: Vec<usize> = res.stages.iter().map(|s| s.spectrum.index).collect();
    // below σ ≈ 0.16 the viscous shift no longer lifts the -4 and -2 modes
    assert_eq!(traj, vec![0, 0, 5, 5, 5, 5, 5, 5, 5, 5]);
    let limit = res.limit.unwrap();
    assert_eq!((limit.spectrum.index, limit.spectrum.nullity), (5, 4));
    assert!(res.verdict.unwrap().pass);
}

#[test]
fn equator_continuation() {
    let cfg = ContinuationConfig { sigma_schedule: vec![0.5, 0.25, 0.125, 0.0625], ..Default::default() };
    let phi = make_preset_immersion(&Preset::EquatorS2InS3, 12).unwrap();
    let res = run_continuation(&cfg, &phi).unwrap();
    for s in &res.stages {
        assert!(s.converged);
        assert_eq!((s.spectrum.index, s.spectrum.nullity), (1, 3), "σ = {}", s.sigma);
    }
    assert!(res.entropy_nonincreasing);
    let v = res.verdict.unwrap();
    assert!(v.pass && v.limit_index == 1);
}

/// Radial profile rebuilt from its definition, integrated on a fine
/// trapezoid grid in `log s` with a centered-difference derivative.
fn radial_oracle(delta: f64, conformal: f64) -> f64 {
    let r = delta.sqrt();
    let ln = (1.0 / r).ln();
    let ss = |t: f64| {
        let t = t.clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    let chi = |s: f64| {
        if s <= delta {
            0.0
        } else if s >= r {
            1.0
        } else {
            let l = (s / delta).ln() / ln;
            if s < 2.0 * delta {
                ss((s - delta) / delta) * l
            } else if s > 0.5 * r {
                l + ss((s - 0.5 * r) / (0.5 * r)) * (1.0 - l)
            } else {
                l
            }
        }
    };
    // χ ≡ 0 on the inner disc contributes its area to the L² part
    let mut total = conformal * PI * delta * delta;
    let m = 400_000;
    let (a, b) = (delta.ln(), r.ln());
    let h = (b - a) / m as f64;
    for k in 0..=m {
        let s = (a + h * k as f64).exp();
        let e = 1e-7 * s;
        let d = (chi(s + e) - chi(s - e)) / (2.0 * e);
        let f = 2.0 * PI * (d * d + conformal * (1.0 - chi(s)).powi(2)) * s * s;
        total += if k == 0 || k == m { 0.5 } else { 1.0 } * f * h;
    }
    total
}

#[test]
fn cutoff_cost_decays_logarithmically() {
    let phi = clifford(16);
    let w = Variation::new((0..phi.n_nodes()).flat_map(|_| [1.0, 0.0, 0.0, 0.0]).collect(), 4);
    let mut consts = Vec::new();
    for delta in [1e-2, 1e-3, 1e-4] {
        let spec = CutoffSpec { centers: vec![[0.3, 0.2]], delta };
        let r = cutoff_transfer(&phi, &w, &spec).unwrap();
        let e2 = r.w12_error.powi(2);
        // the Clifford chart metric is I/2, so dvol = du dv / 2
        let oracle = radial_oracle(delta, 0.5);
        assert!((e2 - oracle).abs() < 1e-4 * oracle, "δ = {delta}: {e2} vs {oracle}");
        let capacity = 2.0 * PI / (1.0 / delta.sqrt()).ln();
        assert!((e2 / capacity - 1.0).abs() < 0.25, "δ = {delta}: {e2} vs {capacity}");
        consts.push(e2 * (1.0 / delta).ln());
        // w_δ vanishes near the center and equals w away from it
        let fs = match phi.space() {
            viscmin::surface::Space::Fourier(fs) => fs.clone(),
            _ => unreachable!(),
        };
        for i in 0..phi.n_nodes() {
            let [u, v] = fs.node(i);
            let dist = (u - 0.3).hypot(v - 0.2);
            if dist >= delta.sqrt() {
                assert_eq!(r.w_delta.at(i), w.at(i));
            }
        }
    }
    let (lo, hi) = consts.iter().fold((f64::MAX, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    assert!(hi / lo < 1.25, "{consts:?}");
}

#[test]
fn cutoff_rejects_sphere_and_bad_delta() {
    let phi = make_preset_immersion(&Preset::EquatorS2InS3, 8).unwrap();
    let w = Variation::zeros(&phi);
    let spec = CutoffSpec { centers: vec![[0.0, 0.0]], delta: 1e-3 };
    assert!(matches!(cutoff_transfer(&phi, &w, &spec), Err(viscmin::Error::UnsupportedBasis)));
    let t = clifford(8);
    let bad = CutoffSpec { centers: vec![[0.0, 0.0]], delta: 0.2 };
    assert!(matches!(cutoff_transfer(&t, &Variation::zeros(&t), &bad), Err(viscmin::Error::BadDelta(_))));
}

#[test]
fn transport_is_tangent_and_fixes_tangent_fields() {
    let limit = clifford(16);
    let target = perturbed(3, 0.05, 16);
    let nu = unit_normal(&limit);
    let same = transport_variation(&nu, &limit).unwrap();
    assert!(same.values.iter().zip(&nu.values).all(|(a, b)| (a - b).abs() < 1e-14));
    let u = transport_variation(&nu, &target).unwrap();
    assert!(tangency_defect(&target, &u) < 1e-13);
    assert!(transport_variation(&nu, &clifford(8)).is_err());
}

#[test]
fn hessian_converges_along_a_sequence() {
    let limit = clifford(16);
    let nu = unit_normal(&limit);
    let spec = CutoffSpec { centers: vec![[0.0, 0.0]], delta: 1e-3 };
    let seq: Vec<SampledImmersion> = (4..=18).map(|k| perturbed(11, 0.5f64.powi(k), 16)).collect();
    let vals = hessian_convergence_probe(&seq, &limit, &nu, &spec).unwrap();
    let wd = cutoff_transfer(&limit, &nu, &spec).unwrap().w_delta;
    let target = second_variation_constrained(&limit, &wd, &wd, 0.0).unwrap();
    // ν cut off on a small disc is still close to the -8π² direction
    assert!(target < 0.0);
    let errs: Vec<f64> = vals.iter().map(|v| (v - target).abs()).collect();
    assert!(*errs.last().unwrap() <= 1e-4, "{errs:?}");
    // first order in the amplitude once the leading error term dominates
    for w in errs.windows(2).skip(7) {
        assert!((w[1] / w[0] - 0.5).abs() < 0.05, "{errs:?}");
    }
}

#[test]
fn empty_schedule_gives_no_stages() {
    let cfg = ContinuationConfig { sigma_schedule: vec![], ..Default::default() };
    let res = run_continuation(&cfg, &clifford(8)).unwrap();
    assert!(res.stages.is_empty() && res.verdict.is_none());
}

#[test]
fn entropy_product_ratio_on_clifford() {
    let cfg = ContinuationConfig { sigma_schedule: (1..=5).map(|k| 0.5f64.powi(k)).collect(), ..Default::default() };
    let res = run_continuation(&cfg, &clifford(12)).unwrap();
    for (k, w) in (1..).zip(res.stages.windows(2)) {
        let expect = 0.25 * (k + 1) as f64 / k as f64;
        let got = w[1].entropy_product / w[0].entropy_product;
        assert!((got / expect - 1.0).abs() < 0.1, "stage {k}: {got} vs {expect}");
    }
}

#[test]
fn trivial_cutoff_and_probe_cases() {
    let phi = clifford(16);
    let spec = CutoffSpec { centers: vec![[1.0, 1.0]], delta: 1e-3 };
    // a field supported away from the ball around the center
    let fs = match phi.space() {
        viscmin::surface::Space::Fourier(fs) => fs.clone(),
        _ => unreachable!(),
    };
    let w = Variation::new(
        (0..phi.n_nodes())
            .flat_map(|i| {
                let [u, _] = fs.node(i);
                let s = (u - 1.0).sin();
                [0.0, 0.0, s * s * s * s * s * s, 0.0]
            })
            .collect(),
        4,
    );
    let r = cutoff_transfer(&phi, &w, &spec).unwrap();
    assert_eq!(r.w_delta, w);
    // the sixth power vanishes to high order on u = 1, only rounding remains
    assert!(r.w12_error < 1e-8, "{}", r.w12_error);

    let nu = unit_normal(&phi);
    let seq = vec![phi.clone(), phi.clone(), phi.clone()];
    let vals = hessian_convergence_probe(&seq, &phi, &nu, &spec).unwrap();
    assert!(vals.iter().all(|v| *v == vals[0]));
    let zeros = hessian_convergence_probe(&seq, &phi, &Variation::zeros(&phi), &spec).unwrap();
    assert!(zeros.iter().all(|v| *v == 0.0));
    assert_eq!(transport_variation(&Variation::zeros(&phi), &perturbed(1, 0.05, 16)).unwrap(), Variation::zeros(&phi));
}
