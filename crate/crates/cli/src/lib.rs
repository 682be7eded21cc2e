//! Command-line front end for `viscmin`: config validation, dispatch to the
//! library operations, and deterministic JSON/CSV reports.

mod config;
mod output;

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use viscmin::continuation::{cutoff_transfer, run_continuation, ContinuationConfig, CutoffSpec, NewtonConfig};
use viscmin::energy::{
    evaluate_energies, first_variation, second_variation_ambient, second_variation_constrained, Variation,
};
use viscmin::gauge::{coulomb_operator, gauge_decompose, slice_retract, SliceConfig};
use viscmin::index::compute_spectrum;
use viscmin::oracle::{fd_free_path, fd_projected_path};
use viscmin::surface::{compute_geometry, make_preset_immersion, Checkpoint, Preset};
use viscmin::SampledImmersion;

pub use config::{validate_config, validate_value, Command, GaugeMode, RunConfig};
pub use output::{fmt17, to_json, write_csv, write_json};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("unknown command `{0}`")]
    UnknownCommand(String),
    #[error("value out of range for `{0}`")]
    OutOfRange(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("`{0}` and `{1}` are mutually exclusive")]
    Conflict(String, String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] viscmin::Error),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// 2 for configuration problems, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Core(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "ParseError",
            CliError::UnknownKey(_) => "UnknownKey",
            CliError::UnknownCommand(_) => "UnknownCommand",
            CliError::OutOfRange(_) => "OutOfRange",
            CliError::MissingField(_) => "MissingField",
            CliError::Conflict(..) => "Conflict",
            CliError::Io(_) => "Io",
            CliError::Core(_) => "Error",
        }
    }

    /// Structured form written to standard error.
    pub fn to_json(&self) -> serde_json::Value {
        let field = match self {
            CliError::UnknownKey(f) | CliError::OutOfRange(f) | CliError::MissingField(f) => Some(f.clone()),
            CliError::Conflict(a, _) => Some(a.clone()),
            _ => None,
        };
        json!({ "error": self.kind(), "field": field, "message": self.to_string() })
    }
}

/// A variation file: `{"q": Q, "values": [...]}`, node-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationFile {
    pub q: usize,
    pub values: Vec<f64>,
}

impl From<&Variation> for VariationFile {
    fn from(v: &Variation) -> Self {
        Self { q: v.q, values: v.values.clone() }
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let s = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

pub fn read_immersion(path: &Path) -> Result<SampledImmersion, CliError> {
    Ok(SampledImmersion::from_checkpoint(read_json::<Checkpoint>(path)?)?)
}

fn load_immersion(cfg: &RunConfig) -> Result<SampledImmersion, CliError> {
    match (&cfg.input, &cfg.preset) {
        (Some(p), _) => read_immersion(p),
        (None, Some(name)) => Ok(make_preset_immersion(&Preset::parse(name)?, cfg.resolution)?),
        (None, None) => Err(CliError::MissingField("input".into())),
    }
}

fn load_variation(path: &Path, phi: &SampledImmersion) -> Result<Variation, CliError> {
    let f: VariationFile = read_json(path)?;
    let expected = phi.n_nodes() * phi.dim();
    if f.q != phi.dim() || f.values.len() != expected {
        return Err(viscmin::Error::ShapeMismatch { expected, got: f.values.len() }.into());
    }
    Ok(Variation::new(f.values, f.q))
}

fn output_path(cfg: &RunConfig) -> Result<&Path, CliError> {
    cfg.output.as_deref().ok_or_else(|| CliError::MissingField("output".into()))
}

/// Seeded smooth field: four random low Fourier modes per component,
/// optionally projected onto `T M`.
pub fn seeded_field(phi: &SampledImmersion, seed: u64, tangent: bool) -> Result<Variation, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = phi.dim();
    let modes: Vec<(f64, f64, f64, f64)> = (0..4 * q)
        .map(|_| {
            (
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(-2..=2) as f64,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(-1.0..1.0),
            )
        })
        .collect();
    let mut values = Vec::with_capacity(phi.n_nodes() * q);
    for i in 0..phi.n_nodes() {
        let [u, v] = phi.space().node(i);
        let w: Vec<f64> = (0..q)
            .map(|c| modes[4 * c..4 * c + 4].iter().map(|&(m, n, p, a)| a * (m * u + n * v + p).cos()).sum())
            .collect();
        if tangent {
            values.extend(phi.ambient().tangent_project(phi.point(i), &w)?);
        } else {
            values.extend(w);
        }
    }
    Ok(Variation::new(values, q))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Rows `(formula, fd_value, analytic_value, rel_err)` for `count` seeded
/// fields: ambient forms against the free path, constrained forms against
/// the projected path.
pub fn variation_check_rows(
    phi: &SampledImmersion,
    seed: u64,
    count: usize,
    h: f64,
) -> Result<Vec<(&'static str, f64, f64)>, CliError> {
    let mut rows = Vec::new();
    for k in 0..count as u64 {
        let w = seeded_field(phi, seed.wrapping_add(k), false)?;
        let fd = fd_free_path(phi, &w, h)?;
        let d1 = first_variation(phi, &w)?;
        let d2 = second_variation_ambient(phi, &w, &w)?;
        rows.push(("d_area", fd.d_area, d1.d_area));
        rows.push(("d_f", fd.d_f, d1.d_f));
        rows.push(("d2_area", fd.d2_area, d2.d2_area));
        rows.push(("d2_f", fd.d2_f, d2.d2_f));
        let t = seeded_field(phi, seed.wrapping_add(k), true)?;
        let fp = fd_projected_path(phi, &t, h)?;
        let c0 = second_variation_constrained(phi, &t, &t, 0.0)?;
        let c1 = second_variation_constrained(phi, &t, &t, 1.0)?;
        rows.push(("d2_area_constrained", fp.d2_area, c0));
        rows.push(("d2_f_constrained", fp.d2_f, c1 - c0));
    }
    Ok(rows)
}

/// Configure the global rayon pool: `--threads`, then `VISCMIN_THREADS`.
/// Outputs do not depend on the thread count.
pub fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let n = match flag {
        Some(n) => Some(n),
        None => match std::env::var("VISCMIN_THREADS") {
            Ok(s) => Some(s.trim().parse::<usize>().ok().filter(|n| *n > 0).ok_or_else(|| {
                CliError::OutOfRange("VISCMIN_THREADS".into())
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        // a pool already built in this process (tests) is left as is
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Run the configured command. `Ok(0)` on success, `Ok(2)` when the
/// semicontinuity verdict fails.
pub fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    match cfg.command {
        Command::Preset => {
            let phi = load_immersion(cfg)?;
            write_json(output_path(cfg)?, &phi.checkpoint())?;
        }
        Command::Energy => {
            let phi = load_immersion(cfg)?;
            write_json(output_path(cfg)?, &evaluate_energies(&phi, cfg.sigma)?)?;
        }
        Command::Geometry => {
            let phi = load_immersion(cfg)?;
            let geo = compute_geometry(&phi)?;
            let chi = phi.topology().genus.euler_characteristic();
            let total_k = geo.total_gauss_curvature();
            let report = json!({
                "n_nodes": phi.n_nodes(),
                "area": geo.area(),
                "total_gauss_curvature": total_k,
                "euler_characteristic": chi,
                "gauss_bonnet_error": (total_k - 2.0 * std::f64::consts::PI * chi as f64).abs(),
                "max_conformal_defect": geo.max_conformal_defect(),
            });
            write_json(output_path(cfg)?, &report)?;
        }
        Command::VariationCheck => {
            let phi = load_immersion(cfg)?;
            let rows: Vec<Vec<String>> = variation_check_rows(&phi, cfg.seed, cfg.count, cfg.fd_step)?
                .into_iter()
                .map(|(f, fd, an)| vec![f.to_string(), fmt17(fd), fmt17(an), fmt17(rel(an, fd))])
                .collect();
            write_csv(output_path(cfg)?, &["formula", "fd_value", "analytic_value", "rel_err"], &rows)?;
        }
        Command::Gauge => {
            let phi = load_immersion(cfg)?;
            let report = match cfg.mode.expect("validated") {
                GaugeMode::Coulomb => {
                    let w = load_variation(cfg.variation.as_deref().expect("validated"), &phi)?;
                    let q = coulomb_operator(&phi, &w)?;
                    json!({ "mode": "coulomb", "max_abs": q.max_abs() })
                }
                GaugeMode::Decompose => {
                    let w = load_variation(cfg.variation.as_deref().expect("validated"), &phi)?;
                    let d = gauge_decompose(&phi, &w)?;
                    json!({
                        "mode": "decompose",
                        "residual": d.residual,
                        "x_max_norm": d.max_norm(),
                        "h_f": [d.h_f.re, d.h_f.im],
                        "x": d.x,
                    })
                }
                GaugeMode::Retract => {
                    let xi = read_immersion(cfg.target.as_deref().expect("validated"))?;
                    let r = slice_retract(&phi, &xi, &SliceConfig::default())?;
                    json!({
                        "mode": "retract",
                        "iterations": r.iterations,
                        "residual": r.residual,
                        "w_max_norm": r.w.max_norm(),
                        "w": VariationFile::from(&r.w),
                        "psi": r.psi,
                    })
                }
            };
            write_json(output_path(cfg)?, &report)?;
        }
        Command::Spectrum => {
            let phi = load_immersion(cfg)?;
            let r = compute_spectrum(&phi, cfg.sigma, cfg.basis_cutoff, cfg.eps_neg)?;
            let out = output_path(cfg)?;
            let rows: Vec<Vec<String>> =
                r.eigenvalues.iter().enumerate().map(|(k, mu)| vec![k.to_string(), fmt17(*mu)]).collect();
            write_csv(out, &["k", "mu_k"], &rows)?;
            let summary = json!({
                "index": r.index,
                "nullity": r.nullity,
                "eps_neg": r.eps_neg,
                "noncritical_flag": r.noncritical,
                "sigma": r.sigma,
                "basis_size": r.eigenvalues.len(),
            });
            let path = cfg.summary.clone().unwrap_or_else(|| out.with_extension("summary.json"));
            write_json(&path, &summary)?;
        }
        Command::Continue => return run_continue(cfg),
        Command::Transfer => {
            let phi = load_immersion(cfg)?;
            let w = load_variation(cfg.variation.as_deref().expect("validated"), &phi)?;
            let spec = CutoffSpec { centers: cfg.centers.clone(), delta: cfg.delta.expect("validated") };
            let r = cutoff_transfer(&phi, &w, &spec)?;
            let report = json!({ "w12_error": r.w12_error, "w_delta": VariationFile::from(&r.w_delta) });
            write_json(output_path(cfg)?, &report)?;
        }
    }
    Ok(0)
}

fn run_continue(cfg: &RunConfig) -> Result<i32, CliError> {
    let phi = load_immersion(cfg)?;
    let dir: PathBuf = output_path(cfg)?.to_path_buf();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let cc = ContinuationConfig {
        sigma_schedule: cfg.sigma_schedule.clone(),
        newton: NewtonConfig { tol: cfg.newton_tol, max_iter: cfg.max_newton, cutoff: cfg.newton_cutoff },
        spectrum_cutoff: cfg.basis_cutoff,
        eps_neg: cfg.eps_neg,
        seed: cfg.seed,
        tail_start: cfg.tail_start,
    };
    let res = run_continuation(&cc, &phi)?;
    let mut rows = Vec::with_capacity(res.stages.len());
    for (k, s) in res.stages.iter().enumerate() {
        write_json(&dir.join(format!("stage_{}.json", k + 1)), &s.checkpoint)?;
        rows.push(vec![
            fmt17(s.sigma),
            fmt17(s.energies.area),
            fmt17(s.energies.f_energy),
            fmt17(s.entropy_product),
            fmt17(s.grad_norm),
            s.spectrum.index.to_string(),
            s.spectrum.nullity.to_string(),
        ]);
    }
    write_csv(
        &dir.join("stages.csv"),
        &["sigma", "area", "f", "entropy_product", "grad_norm", "index", "nullity"],
        &rows,
    )?;
    let pass = res.verdict.as_ref().map_or(true, |v| v.pass);
    let verdict = json!({
        "pass": pass,
        "verdict": res.verdict,
        "limit_index": res.limit.as_ref().map(|l| l.spectrum.index),
        "limit_nullity": res.limit.as_ref().map(|l| l.spectrum.nullity),
        "all_converged": res.stages.iter().all(|s| s.converged),
        "entropy_nonincreasing": res.entropy_nonincreasing,
        "max_a_sigma": res.max_a_sigma,
    });
    write_json(&dir.join("verdict.json"), &verdict)?;
    Ok(if pass { 0 } else { 2 })
}

/// Validate-and-run wrapper returning the process exit code; errors go to
/// standard error as JSON.
pub fn dispatch(cfg: &RunConfig) -> i32 {
    let result = init_threads(cfg.threads).and_then(|_| run(cfg));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
