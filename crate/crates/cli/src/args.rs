//! Flags, config files and their merge.
//!
//! A JSON config holds the same keys as the flags (plus `seed` and
//! `format`). Flags win over config values, config values over defaults,
//! and unknown keys are rejected.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rdsec",
    version,
    about = "Rate-distortion secrecy regions, outage and binning studies"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON file with parameter values; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// RNG seed (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Distortion-rate curves of the binary symmetric wiretap pair.
    BsbccCurve(BsbccArgs),
    /// Causal distortion-rate curve of one seeded fiber realization.
    MmfCurve(MmfCurveArgs),
    /// Rate ceilings and maximal confidential rate of one realization.
    MmfCapacity(MmfCapacityArgs),
    /// Monte Carlo secrecy-outage probability.
    Outage(OutageArgs),
    /// Exact typical-set binning simulation.
    BinningSim(BinningArgs),
    /// Numerical sweep of the TV/mutual-information bound.
    LemmaCheck(LemmaArgs),
    /// Unitarity and moment checks of the Haar sampler.
    HaarTest(HaarArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::BsbccCurve(_) => "bsbcc-curve",
            Command::MmfCurve(_) => "mmf-curve",
            Command::MmfCapacity(_) => "mmf-capacity",
            Command::Outage(_) => "outage",
            Command::BinningSim(_) => "binning-sim",
            Command::LemmaCheck(_) => "lemma-check",
            Command::HaarTest(_) => "haar-test",
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BsbccArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub p1: Option<f64>,
    #[arg(long)]
    pub p2: Option<f64>,
    /// Smallest rate on the grid.
    #[arg(long = "rate_min", visible_alias = "rate-min")]
    pub rate_min: Option<f64>,
    /// Largest rate on the grid.
    #[arg(long = "rate_max", visible_alias = "rate-max")]
    pub rate_max: Option<f64>,
    /// Number of grid points.
    #[arg(long)]
    pub steps: Option<usize>,
}

/// Fiber link parameters shared by the fiber commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LinkArgs {
    /// Number of modes.
    #[arg(long = "M", visible_alias = "modes")]
    #[serde(rename = "M", alias = "modes")]
    pub modes: Option<usize>,
    /// Legitimate-receiver SNR in dB.
    #[arg(long = "snr_db", visible_alias = "snr-db")]
    pub snr_db: Option<f64>,
    /// Eavesdropper SNR in dB.
    #[arg(long = "snre_db", visible_alias = "snre-db")]
    pub snre_db: Option<f64>,
    /// Mode-dependent loss in dB.
    #[arg(long = "mdl_db", visible_alias = "mdl-db")]
    pub mdl_db: Option<f64>,
    /// Bernoulli source bias.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MmfCurveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    /// Number of grid points.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Smallest rate on the grid.
    #[arg(long = "rate_min", visible_alias = "rate-min")]
    pub rate_min: Option<f64>,
    /// Largest rate on the grid.
    #[arg(long = "rate_max", visible_alias = "rate-max")]
    pub rate_max: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct MmfCapacityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OutageArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub link: LinkArgs,
    /// Confidential rate fraction per source symbol.
    #[arg(long = "rs_prime", visible_alias = "rs-prime")]
    pub rs_prime: Option<f64>,
    /// Channel uses per source symbol.
    #[arg(long)]
    pub rate: Option<f64>,
    /// Required equivocation fraction on the public part.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Number of channel realizations.
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct BinningArgs {
    /// Blocklength.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Confidential rate fraction per source symbol.
    #[arg(long = "rs_prime", visible_alias = "rs-prime")]
    pub rs_prime: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Also write the codebook as text, one bin per line.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct LemmaArgs {
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated alphabet sizes for both variables.
    #[arg(long = "alphabet_sizes", visible_alias = "alphabet-sizes", value_delimiter = ',')]
    pub alphabet_sizes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct HaarArgs {
    /// Number of modes.
    #[arg(long = "M", visible_alias = "modes")]
    #[serde(rename = "M", alias = "modes")]
    pub modes: Option<usize>,
    /// Number of sampled unitaries.
    #[arg(long)]
    pub draws: Option<usize>,
}

/// Seed and format after merging.
pub struct Globals {
    pub seed: u64,
    pub format: Format,
}

/// Reads a config file into a key map.
pub fn read_config(path: &Path) -> Result<Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new("io", format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::new("config", "config must be a JSON object")),
        Err(e) => Err(CliError::new(
            "config",
            format!("invalid JSON in {}: {e}", path.display()),
        )),
    }
}

/// Pulls `seed` and `format` out of the config and applies the flags.
pub fn merge_globals(global: &GlobalArgs, config: &mut Map<String, Value>) -> Result<Globals, CliError> {
    let seed = match (global.seed, config.remove("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v
            .as_u64()
            .ok_or_else(|| CliError::new("config", format!("seed must be an unsigned integer, got {v}")))?,
        (None, None) => 0,
    };
    let format = match (global.format, config.remove("format")) {
        (Some(f), _) => f,
        (None, Some(v)) => serde_json::from_value(v).map_err(|e| CliError::new("config", format!("format: {e}")))?,
        (None, None) => Format::Csv,
    };
    Ok(Globals { seed, format })
}

/// Overlays set flags on the config map and deserializes the result.
/// Config keys that `T` does not know are rejected.
pub fn merge<T: Serialize + DeserializeOwned + Default>(
    flags: &T,
    mut config: Map<String, Value>,
) -> Result<T, CliError> {
    let to_map = |t: &T| match serde_json::to_value(t) {
        Ok(Value::Object(m)) => Ok(m),
        _ => Err(CliError::new("config", "parameters do not serialize to an object")),
    };
    let known = to_map(&T::default())?;
    let alias_ok = |k: &str| k == "modes" && known.contains_key("M");
    if let Some(bad) = config.keys().find(|k| !known.contains_key(*k) && !alias_ok(k)) {
        return Err(CliError::new("config", format!("unknown key `{bad}`")));
    }
    for (k, v) in to_map(flags)? {
        if !v.is_null() {
            if k == "M" {
                config.remove("modes");
            }
            config.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(config)).map_err(|e| CliError::new("config", e.to_string()))
}
