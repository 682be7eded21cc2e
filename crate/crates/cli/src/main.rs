use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};
use viscmin_cli::{dispatch, validate_value, CliError};

#[derive(Parser)]
#[command(name = "viscmin", version, about = "Viscosity-method minimal surface toolkit")]
struct Cli {
    /// Worker threads (falls back to VISCMIN_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Source {
    /// Immersion checkpoint (JSON).
    #[arg(long, conflicts_with = "preset")]
    input: Option<PathBuf>,
    /// Built-in fixture, e.g. `clifford_torus` or `perturbed(clifford_torus,7,0.02)`.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Area, F and A^σ.
    Energy {
        #[command(flatten)]
        src: Source,
        #[arg(long, allow_negative_numbers = true)]
        sigma: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Area, total curvature and Gauss-Bonnet check.
    Geometry {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        output: PathBuf,
    },
    /// Analytic variations against finite differences (CSV).
    VariationCheck {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        fd_step: Option<f64>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Coulomb operator, gauge decomposition or slice retraction.
    Gauge {
        #[command(flatten)]
        src: Source,
        #[arg(long, value_parser = ["coulomb", "decompose", "retract"])]
        mode: String,
        /// Variation file `{"q", "values"}` (coulomb, decompose).
        #[arg(long)]
        variation: Option<PathBuf>,
        /// Target immersion (retract).
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Spectrum of the constrained Hessian (CSV) with a summary JSON.
    Spectrum {
        #[command(flatten)]
        src: Source,
        #[arg(long, allow_negative_numbers = true)]
        sigma: Option<f64>,
        #[arg(long)]
        basis_cutoff: Option<usize>,
        #[arg(long, allow_negative_numbers = true)]
        eps_neg: Option<f64>,
        /// Summary path; defaults to the output with a `.summary.json` extension.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// σ-continuation from a run config; writes stage checkpoints, stages.csv
    /// and verdict.json into the output directory.
    Continue {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Cut a variation off near chart points.
    Transfer {
        #[command(flatten)]
        src: Source,
        #[arg(long)]
        variation: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Chart point `u,v`; repeatable.
        #[arg(long = "center", value_parser = parse_center, required = true)]
        centers: Vec<[f64; 2]>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Write a fixture immersion as a checkpoint.
    Preset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Run any command from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_center(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s.split_once(',').ok_or("expected `u,v`")?;
    let f = |x: &str| x.trim().parse::<f64>().map_err(|e| e.to_string());
    Ok([f(a)?, f(b)?])
}

#[derive(Default)]
struct Raw(Map<String, Value>);

impl Raw {
    fn set(&mut self, k: &str, v: impl Into<Value>) -> &mut Self {
        self.0.insert(k.to_string(), v.into());
        self
    }

    fn opt<T: Into<Value>>(&mut self, k: &str, v: Option<T>) -> &mut Self {
        if let Some(v) = v {
            self.set(k, v);
        }
        self
    }

    fn path(&mut self, k: &str, p: &std::path::Path) -> &mut Self {
        self.set(k, p.to_string_lossy().into_owned())
    }

    fn source(&mut self, s: Source) -> &mut Self {
        self.opt("input", s.input.map(|p| p.to_string_lossy().into_owned()));
        self.opt("preset", s.preset);
        self.opt("resolution", s.resolution)
    }
}

fn read_config(path: &PathBuf) -> Result<Map<String, Value>, CliError> {
    let s = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    match serde_json::from_str(&s).map_err(|e| CliError::Parse(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Parse("config must be a JSON object".into())),
    }
}

fn build(cli: Cli) -> Result<Value, CliError> {
    let mut r = Raw::default();
    match cli.command {
        Cmd::Energy { src, sigma, output } => {
            r.set("command", "energy").source(src).opt("sigma", sigma).path("output", &output);
        }
        Cmd::Geometry { src, output } => {
            r.set("command", "geometry").source(src).path("output", &output);
        }
        Cmd::VariationCheck { src, seed, count, fd_step, output } => {
            r.set("command", "variation-check")
                .source(src)
                .opt("seed", seed)
                .opt("count", count)
                .opt("fd_step", fd_step)
                .path("output", &output);
        }
        Cmd::Gauge { src, mode, variation, target, output } => {
            r.set("command", "gauge").source(src).set("mode", mode).path("output", &output);
            r.opt("variation", variation.map(|p| p.to_string_lossy().into_owned()));
            r.opt("target", target.map(|p| p.to_string_lossy().into_owned()));
        }
        Cmd::Spectrum { src, sigma, basis_cutoff, eps_neg, summary, output } => {
            r.set("command", "spectrum")
                .source(src)
                .opt("sigma", sigma)
                .opt("basis_cutoff", basis_cutoff)
                .opt("eps_neg", eps_neg)
                .opt("summary", summary.map(|p| p.to_string_lossy().into_owned()))
                .path("output", &output);
        }
        Cmd::Continue { config, output } => {
            r.0 = read_config(&config)?;
            match r.0.get("command") {
                None => {
                    r.set("command", "continue");
                }
                Some(Value::String(c)) if c == "continue" => {}
                Some(other) => return Err(CliError::UnknownCommand(other.to_string())),
            }
            r.path("output", &output);
        }
        Cmd::Transfer { src, variation, delta, centers, output } => {
            r.set("command", "transfer")
                .source(src)
                .path("variation", &variation)
                .set("delta", delta)
                .set("centers", serde_json::to_value(centers).expect("plain floats"))
                .path("output", &output);
        }
        Cmd::Preset { name, resolution, output } => {
            r.set("command", "preset").set("preset", name).opt("resolution", resolution).path("output", &output);
        }
        Cmd::Run { config } => r.0 = read_config(&config)?,
    }
    if cli.threads.is_some() {
        r.opt("threads", cli.threads);
    }
    Ok(Value::Object(r.0))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = build(cli).and_then(validate_value);
    let code = match cfg {
        Ok(cfg) => dispatch(&cfg),
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
