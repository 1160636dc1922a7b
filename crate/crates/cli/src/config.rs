use std::path::{Path, PathBuf};

use fermicone::model::{BlockShape, GradientMethod, LatticeModel, Parity};
use serde::Deserialize;

use crate::error::CliError;
use crate::output::Format;

/// Everything a run can be configured with; every field is optional so a
/// config file and the command line can each supply any part.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: Option<String>,
    pub t: Option<f64>,
    pub u: Option<f64>,
    pub block: Option<String>,
    pub seed: Option<u64>,
    pub degree: Option<usize>,
    pub init_std: Option<f64>,
    pub max_iters: Option<usize>,
    pub step: Option<f64>,
    pub tol: Option<f64>,
    pub parity: Option<String>,
    pub gradient: Option<String>,
    pub width_cap: Option<usize>,
    pub reps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub timing: Option<bool>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `flags` win.
    pub fn merged(self, flags: RunConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { RunConfig { $($f: flags.$f.or(self.$f)),* } };
        }
        pick!(
            lattice, t, u, block, seed, degree, init_std, max_iters, step, tol, parity, gradient,
            width_cap, reps, out, format, timing
        )
    }
}

fn parse_shape(what: &str, s: &str) -> Result<BlockShape, CliError> {
    s.parse::<BlockShape>()
        .map_err(|e| CliError::Config(format!("{what} {s:?}: {e}")))
}

fn finite(name: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("{name} must be finite, got {v}")))
    }
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Settings {
    pub model: LatticeModel,
    pub lattice: BlockShape,
    pub block: Option<BlockShape>,
    pub seed: u64,
    pub degree: Option<usize>,
    pub init_std: f64,
    pub max_iters: usize,
    pub step: f64,
    pub tol: f64,
    pub parities: Vec<Parity>,
    pub gradient: GradientMethod,
    pub width_cap: usize,
    pub reps: usize,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub timing: bool,
}

impl Settings {
    pub fn from_config(c: &RunConfig) -> Result<Self, CliError> {
        let lattice = parse_shape("lattice", c.lattice.as_deref().unwrap_or("2x2"))?;
        let t = finite("t", c.t.unwrap_or(-0.6))?;
        let u = finite("u", c.u.unwrap_or(0.0))?;
        let model = LatticeModel::new(lattice.width, lattice.height, t, u)?;
        let block = c
            .block
            .as_deref()
            .map(|b| parse_shape("block", b))
            .transpose()?;
        let parities = match c.parity.as_deref().unwrap_or("both") {
            "both" => vec![Parity::Even, Parity::Odd],
            "even" => vec![Parity::Even],
            "odd" => vec![Parity::Odd],
            other => {
                return Err(CliError::Config(format!(
                    "parity must be even, odd or both, got {other:?}"
                )))
            }
        };
        let gradient = match c.gradient.as_deref().unwrap_or("adjoint") {
            "adjoint" => GradientMethod::Adjoint,
            "fd" => GradientMethod::FiniteDifference,
            other => {
                return Err(CliError::Config(format!(
                    "gradient must be adjoint or fd, got {other:?}"
                )))
            }
        };
        let format = match c.format.as_deref().unwrap_or("jsonl") {
            "jsonl" => Format::Jsonl,
            "csv" => Format::Csv,
            other => {
                return Err(CliError::Config(format!(
                    "format must be jsonl or csv, got {other:?}"
                )))
            }
        };
        let init_std = finite("init_std", c.init_std.unwrap_or(0.01))?;
        if init_std < 0.0 {
            return Err(CliError::Config(format!(
                "init_std must be non-negative, got {init_std}"
            )));
        }
        let reps = c.reps.unwrap_or(5);
        if reps == 0 {
            return Err(CliError::Config("reps must be positive".into()));
        }
        if c.degree.is_some_and(|d| d % 2 == 1 || d == 0) {
            return Err(CliError::Config(
                "degree must be a positive even number".into(),
            ));
        }
        Ok(Self {
            model,
            lattice,
            block,
            seed: c.seed.unwrap_or(0),
            degree: c.degree,
            init_std,
            max_iters: c.max_iters.unwrap_or(200),
            step: finite("step", c.step.unwrap_or(0.5))?,
            tol: finite("tol", c.tol.unwrap_or(1e-6))?,
            parities,
            gradient,
            width_cap: c.width_cap.unwrap_or(fermicone::circuit::DEFAULT_WIDTH_CAP),
            reps,
            out: c.out.clone(),
            format,
            timing: c.timing.unwrap_or(false),
        })
    }

    /// The block shape, which some commands cannot do without.
    pub fn require_block(&self) -> Result<BlockShape, CliError> {
        self.block
            .ok_or_else(|| CliError::Config("--block is required".into()))
    }
}
