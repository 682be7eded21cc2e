use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Energy,
    Geometry,
    VariationCheck,
    Gauge,
    Spectrum,
    Continue,
    Transfer,
    Preset,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(Value::String(s.to_string())).ok()
    }

    /// Keys a config for this command may carry besides `command`.
    fn keys(self) -> &'static [&'static str] {
        const IMMERSION: &[&str] = &["input", "preset", "resolution", "output", "threads"];
        match self {
            Command::Energy => &["input", "preset", "resolution", "output", "threads", "sigma"],
            Command::Geometry => IMMERSION,
            Command::VariationCheck => &["input", "preset", "resolution", "output", "threads", "seed", "count", "fd_step"],
            Command::Gauge => &["input", "preset", "resolution", "output", "threads", "variation", "target", "mode"],
            Command::Spectrum => {
                &["input", "preset", "resolution", "output", "threads", "sigma", "basis_cutoff", "eps_neg", "summary"]
            }
            Command::Continue => &[
                "input",
                "preset",
                "resolution",
                "output",
                "threads",
                "sigma_schedule",
                "basis_cutoff",
                "eps_neg",
                "seed",
                "newton_tol",
                "max_newton",
                "newton_cutoff",
                "tail_start",
            ],
            Command::Transfer => &["input", "preset", "resolution", "output", "threads", "variation", "delta", "centers"],
            Command::Preset => &["preset", "resolution", "output", "threads"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMode {
    Coulomb,
    Decompose,
    Retract,
}

/// Normalized configuration for one run. Optional paths stay `None` when not
/// given; numeric parameters carry their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "d_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub sigma: f64,
    #[serde(default = "d_basis_cutoff")]
    pub basis_cutoff: usize,
    #[serde(default)]
    pub eps_neg: Option<f64>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_count")]
    pub count: usize,
    #[serde(default = "d_fd_step")]
    pub fd_step: f64,
    #[serde(default)]
    pub variation: Option<PathBuf>,
    #[serde(default)]
    pub target: Option<PathBuf>,
    #[serde(default)]
    pub mode: Option<GaugeMode>,
    #[serde(default = "d_schedule")]
    pub sigma_schedule: Vec<f64>,
    #[serde(default = "d_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "d_max_newton")]
    pub max_newton: usize,
    #[serde(default = "d_newton_cutoff")]
    pub newton_cutoff: usize,
    #[serde(default)]
    pub tail_start: Option<usize>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub centers: Vec<[f64; 2]>,
}

fn d_resolution() -> usize {
    16
}
fn d_basis_cutoff() -> usize {
    4
}
fn d_count() -> usize {
    20
}
fn d_fd_step() -> f64 {
    viscmin::oracle::FD_STEP
}
fn d_schedule() -> Vec<f64> {
    viscmin::continuation::ContinuationConfig::default().sigma_schedule
}
fn d_newton_tol() -> f64 {
    1e-8
}
fn d_max_newton() -> usize {
    40
}
fn d_newton_cutoff() -> usize {
    6
}

fn out_of_range(field: &str) -> CliError {
    CliError::OutOfRange(field.to_string())
}

/// Parse, reject keys the command does not use, apply defaults and check
/// ranges.
pub fn validate_config(raw: &str) -> Result<RunConfig, CliError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| CliError::Parse(e.to_string()))?;
    validate_value(value)
}

pub fn validate_value(value: Value) -> Result<RunConfig, CliError> {
    let Value::Object(map) = value else {
        return Err(CliError::Parse("config must be a JSON object".into()));
    };
    let command = match map.get("command") {
        Some(Value::String(s)) => Command::parse(s).ok_or_else(|| CliError::UnknownCommand(s.clone()))?,
        Some(_) => return Err(CliError::Parse("`command` must be a string".into())),
        None => return Err(CliError::MissingField("command".into())),
    };
    let allowed = command.keys();
    if let Some(k) = map.keys().find(|k| *k != "command" && !allowed.contains(&k.as_str())) {
        return Err(CliError::UnknownKey(k.clone()));
    }
    let drop_nulls: Map<String, Value> = map.into_iter().filter(|(_, v)| !v.is_null()).collect();
    // deserialize key by key so a type error names its field
    for (k, v) in drop_nulls.iter().filter(|(k, _)| *k != "command") {
        let single = serde_json::json!({ "command": command, k.as_str(): v });
        if serde_json::from_value::<RunConfig>(single).is_err() {
            return Err(out_of_range(k));
        }
    }
    let cfg: RunConfig =
        serde_json::from_value(Value::Object(drop_nulls)).map_err(|e| CliError::Parse(e.to_string()))?;
    check_ranges(&cfg)?;
    Ok(cfg)
}

fn check_ranges(c: &RunConfig) -> Result<(), CliError> {
    if !(c.sigma >= 0.0 && c.sigma.is_finite()) {
        return Err(out_of_range("sigma"));
    }
    if c.resolution < 4 {
        return Err(out_of_range("resolution"));
    }
    if matches!(c.threads, Some(0)) {
        return Err(out_of_range("threads"));
    }
    if matches!(c.eps_neg, Some(e) if !(e > 0.0 && e.is_finite())) {
        return Err(out_of_range("eps_neg"));
    }
    if c.count == 0 {
        return Err(out_of_range("count"));
    }
    if !(c.fd_step > 0.0 && c.fd_step < 1.0) {
        return Err(out_of_range("fd_step"));
    }
    if !(c.newton_tol > 0.0 && c.newton_tol.is_finite()) {
        return Err(out_of_range("newton_tol"));
    }
    if c.sigma_schedule.iter().any(|s| !(*s > 0.0 && s.is_finite()))
        || c.sigma_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(out_of_range("sigma_schedule"));
    }
    if matches!(c.delta, Some(d) if !(d > 0.0 && d < 1.0 / 16.0)) {
        return Err(out_of_range("delta"));
    }
    if c.input.is_some() && c.preset.is_some() {
        return Err(CliError::Conflict("input".into(), "preset".into()));
    }
    let needs_immersion = !matches!(c.command, Command::Preset);
    if needs_immersion && c.input.is_none() && c.preset.is_none() {
        return Err(CliError::MissingField("input".into()));
    }
    if matches!(c.command, Command::Preset) && c.preset.is_none() {
        return Err(CliError::MissingField("preset".into()));
    }
    match c.command {
        Command::Gauge => {
            let mode = c.mode.ok_or_else(|| CliError::MissingField("mode".into()))?;
            if mode == GaugeMode::Retract && c.target.is_none() {
                return Err(CliError::MissingField("target".into()));
            }
            if mode != GaugeMode::Retract && c.variation.is_none() {
                return Err(CliError::MissingField("variation".into()));
            }
        }
        Command::Transfer => {
            if c.variation.is_none() {
                return Err(CliError::MissingField("variation".into()));
            }
            if c.delta.is_none() {
                return Err(CliError::MissingField("delta".into()));
            }
            if c.centers.is_empty() {
                return Err(CliError::MissingField("centers".into()));
            }
        }
        _ => {}
    }
    Ok(())
}
