//! JSON configuration schema, command-line overrides, and grid parsing.

use std::fs;
use std::path::{Path, PathBuf};

use nomalab_core::{DuplexMode, PowerAllocation, SystemParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Built-in configuration used when `--config` is not given; also serves as
/// the documented schema example at the repository root.
pub const DEFAULT_CONFIG: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../defaults.json"));

/// Which system parameter a sweep varies. Serialized names match the config
/// schema; counts use their conventional single-letter symbols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweptParameter {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "K", alias = "k")]
    RelayCandidates,
    #[serde(rename = "N", alias = "n")]
    Antennas,
    #[serde(rename = "M", alias = "m")]
    SecondaryReceivers,
    #[serde(rename = "lambda_sp")]
    LambdaSp,
    #[serde(rename = "lambda_ps")]
    LambdaPs,
    #[serde(rename = "lambda_sr")]
    LambdaSr,
}

impl SweptParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweptParameter::SnrDb => "snr_db",
            SweptParameter::Beta => "beta",
            SweptParameter::RelayCandidates => "K",
            SweptParameter::Antennas => "N",
            SweptParameter::SecondaryReceivers => "M",
            SweptParameter::LambdaSp => "lambda_sp",
            SweptParameter::LambdaPs => "lambda_ps",
            SweptParameter::LambdaSr => "lambda_sr",
        }
    }

    /// Whether grid values must be positive integers.
    pub fn is_count(self) -> bool {
        matches!(
            self,
            SweptParameter::RelayCandidates
                | SweptParameter::Antennas
                | SweptParameter::SecondaryReceivers
        )
    }

    /// Returns a copy of `base` with this parameter set to `value`, adjusting
    /// dependent vector lengths when the receiver count changes.
    pub fn apply(self, base: &SystemParams, value: f64) -> Result<SystemParams, CliError> {
        let mut params = base.clone();
        if self.is_count() {
            if value.fract() != 0.0 || value < 1.0 || value > 64.0 {
                return Err(CliError::Config(format!(
                    "swept {} value {value} must be an integer in 1..=64",
                    self.name()
                )));
            }
        }
        match self {
            SweptParameter::SnrDb => params.snr_db = value,
            SweptParameter::Beta => params.beta = value,
            SweptParameter::RelayCandidates => params.n_sts = value as usize,
            SweptParameter::Antennas => params.n_antennas = value as usize,
            SweptParameter::SecondaryReceivers => {
                params.n_srs = value as usize;
                resize_per_node_vectors(&mut params)?;
            }
            SweptParameter::LambdaSp => params.lambda_sp = value,
            SweptParameter::LambdaPs => params.lambda_ps = value,
            SweptParameter::LambdaSr => params.lambda_sr = value,
        }
        params
            .validate()
            .map_err(|e| CliError::Config(format!("swept {} = {value}: {e}", self.name())))?;
        Ok(params)
    }
}

/// When a receiver-count sweep changes the number of messages, pad the rate
/// targets by repeating the last entry (or truncate), and replace the fixed
/// allocation by a proportional ordered split when its length no longer
/// matches.
fn resize_per_node_vectors(params: &mut SystemParams) -> Result<(), CliError> {
    let nodes = params.n_srs + 1;
    if params.target_rates.len() != nodes {
        let last = *params
            .target_rates
            .last()
            .ok_or_else(|| CliError::Config("target_rates must be nonempty".into()))?;
        params.target_rates.resize(nodes, last);
    }
    if params.alpha.len() != nodes {
        // Weights nodes, nodes-1, …, 1 give a strictly decreasing simplex
        // point; shave a hair so the budget stays strictly inside 1.
        let total: f64 = (nodes * (nodes + 1)) as f64 / 2.0;
        let coefficients: Vec<f64> = (0..nodes)
            .map(|i| (nodes - i) as f64 / total * (1.0 - 1e-9))
            .collect();
        params.alpha = PowerAllocation::new(coefficients)
            .map_err(|e| CliError::Config(format!("derived allocation invalid: {e}")))?;
    }
    Ok(())
}

/// What to sweep, how many trials, and where results go.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub swept_parameter: SweptParameter,
    /// Grid of values for the swept parameter; nonempty, ascending.
    pub grid: Vec<f64>,
    /// Duplex modes to run at every grid value.
    pub modes: Vec<DuplexMode>,
    /// Monte Carlo trials per grid point; channel draws for `sumrate`.
    pub trials: u64,
    /// Base RNG seed; trial i uses stream i deterministically.
    pub seed: u64,
    /// Destination file for the CSV table.
    pub output_path: PathBuf,
}

/// Solver settings for the `sumrate` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSettings {
    /// Relative objective-gain threshold that counts as converged.
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Iteration cap per channel draw.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Exhaustive-search grid step; `null` disables the oracle columns.
    #[serde(default)]
    pub es_grid: Option<f64>,
}

fn default_eps() -> f64 {
    1e-4
}

fn default_max_iter() -> usize {
    50
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            eps: default_eps(),
            max_iter: default_max_iter(),
            es_grid: None,
        }
    }
}

/// Full run configuration: the physical model plus sweep and solver blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub params: SystemParams,
    pub sweep: SweepSpec,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

/// Command-line values that take precedence over config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<DuplexMode>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub grid: Option<String>,
    pub eps: Option<f64>,
    pub max_iter: Option<usize>,
    pub es_grid: Option<f64>,
}

impl Config {
    /// Loads from `path`, or the embedded defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => DEFAULT_CONFIG.to_string(),
        };
        let config: Config = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies flag overrides, then re-validates the combined result.
    pub fn with_overrides(mut self, overrides: &Overrides) -> Result<Self, CliError> {
        if let Some(mode) = overrides.mode {
            self.sweep.modes = vec![mode];
        }
        if let Some(trials) = overrides.trials {
            self.sweep.trials = trials;
        }
        if let Some(seed) = overrides.seed {
            self.sweep.seed = seed;
        }
        if let Some(out) = &overrides.out {
            self.sweep.output_path = out.clone();
        }
        if let Some(spec) = &overrides.grid {
            self.sweep.grid = parse_grid_range(spec)?;
        }
        if let Some(eps) = overrides.eps {
            self.optimizer.eps = eps;
        }
        if let Some(max_iter) = overrides.max_iter {
            self.optimizer.max_iter = max_iter;
        }
        if let Some(step) = overrides.es_grid {
            self.optimizer.es_grid = Some(step);
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks every field range plus cross-field consistency; the swept
    /// parameter is applied to each grid value again at run time, so values
    /// that break the model still fail fast with a configuration error.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let sweep = &self.sweep;
        if sweep.grid.is_empty() {
            return Err(CliError::Config("sweep.grid must be nonempty".into()));
        }
        if sweep.grid.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("sweep.grid values must be finite".into()));
        }
        if sweep.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Config(
                "sweep.grid must be strictly ascending".into(),
            ));
        }
        if sweep.swept_parameter.is_count()
            && sweep
                .grid
                .iter()
                .any(|v| v.fract() != 0.0 || *v < 1.0 || *v > 64.0)
        {
            return Err(CliError::Config(format!(
                "sweep.grid values for {} must be integers in 1..=64",
                sweep.swept_parameter.name()
            )));
        }
        if sweep.modes.is_empty() {
            return Err(CliError::Config("sweep.modes must be nonempty".into()));
        }
        if sweep.trials == 0 {
            return Err(CliError::Config("sweep.trials must be positive".into()));
        }
        let optimizer = &self.optimizer;
        if !(optimizer.eps > 0.0 && optimizer.eps.is_finite()) {
            return Err(CliError::Config(format!(
                "optimizer.eps must be positive and finite, got {}",
                optimizer.eps
            )));
        }
        if optimizer.max_iter == 0 {
            return Err(CliError::Config("optimizer.max_iter must be positive".into()));
        }
        if let Some(step) = optimizer.es_grid {
            if !(step > 0.0 && step <= 1.0) {
                return Err(CliError::Config(format!(
                    "optimizer.es_grid must lie in (0, 1], got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// Parses an inclusive `start:stop:step` range into an explicit grid. The
/// values are computed as `start + i·step` (no accumulation drift).
pub fn parse_grid_range(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("--grid {spec:?}: {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| bad(&format!("{part:?} is not a number ({e})")))?;
        if !slot.is_finite() {
            return Err(bad("values must be finite"));
        }
    }
    let [start, stop, step] = nums;
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("stop must not precede start"));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 100_000 {
        return Err(bad("more than 100000 grid points"));
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}
