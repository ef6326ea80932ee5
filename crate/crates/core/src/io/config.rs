//! Experiment configuration files.
//!
//! A flat TOML document whose keys mirror the experiment fields:
//!
//! ```toml
//! model = "toy"            # toy | ar1 | lasso
//! replicates = 1000
//! burn_in = 20000
//! checkpoints = [5000, 10000, 50000]
//! rules = ["sqrt", "pow:0.4", "cbrt-plus:1e-5"]
//! level = 0.95
//! base_seed = 42           # optional, falls back to BMCLT_SEED, then 0
//! workers = 4
//!
//! # ar1 only
//! rho = 0.9
//! tau2 = 1.0
//!
//! # lasso only (paths relative to the config file)
//! y_path = "y.csv"
//! x_path = "x.csv"
//! lambda = 0.2185
//! eta_rate_mode = "blocked"  # or "as-printed"
//! ig_mean_mode = "standard"  # or "as-printed"
//!
//! # optional output settings
//! truth = 1.5                # overrides the model's known variance
//! histogram_bins = 40
//! histogram_range = [-4.0, 4.0]
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::lasso_csv::read_lasso_csv;
use crate::error::{Error, Result};
use crate::estimators::ScheduleRule;
use crate::harness::{ExperimentConfig, ModelSpec};
use crate::samplers::{EtaRateMode, IgMeanMode, LassoModes, Standardization};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: String,
    replicates: usize,
    #[serde(default)]
    burn_in: usize,
    checkpoints: Vec<usize>,
    rules: Vec<ScheduleRule>,
    #[serde(default = "default_level")]
    level: f64,
    base_seed: Option<u64>,
    #[serde(default = "default_workers")]
    workers: usize,
    rho: Option<f64>,
    tau2: Option<f64>,
    y_path: Option<PathBuf>,
    x_path: Option<PathBuf>,
    lambda: Option<f64>,
    eta_rate_mode: Option<EtaRateMode>,
    ig_mean_mode: Option<IgMeanMode>,
    truth: Option<f64>,
    #[serde(default = "default_bins")]
    histogram_bins: usize,
    #[serde(default = "default_range")]
    histogram_range: [f64; 2],
}

fn default_level() -> f64 {
    0.95
}

fn default_workers() -> usize {
    1
}

fn default_bins() -> usize {
    40
}

fn default_range() -> [f64; 2] {
    [-4.0, 4.0]
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputOptions {
    pub truth: Option<f64>,
    pub histogram_bins: usize,
    pub histogram_range: (f64, f64),
}

/// Configuration as recorded in result documents. The worker count is left
/// out: it does not affect results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub model: String,
    pub replicates: usize,
    pub burn_in: usize,
    pub checkpoints: Vec<usize>,
    pub rules: Vec<ScheduleRule>,
    pub level: f64,
    pub base_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<LassoModes>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    pub output: OutputOptions,
    pub echo: ConfigEcho,
}

/// Parse config text. Relative data paths resolve against `base_dir`; the
/// seed falls back to `env_seed` and then 0.
pub fn parse_config(text: &str, base_dir: &Path, env_seed: Option<u64>) -> Result<LoadedConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.message().to_string()))?;
    let base_seed = raw.base_seed.or(env_seed).unwrap_or(0);
    let mut echo = ConfigEcho {
        model: raw.model.clone(),
        replicates: raw.replicates,
        burn_in: raw.burn_in,
        checkpoints: raw.checkpoints.clone(),
        rules: raw.rules.clone(),
        level: raw.level,
        base_seed,
        rho: None,
        tau2: None,
        lambda: None,
        y_path: None,
        x_path: None,
        modes: None,
        standardization: None,
        truth: None,
    };
    let missing = |key: &str| Error::ConfigInvalid(format!("model `{}` needs `{key}`", raw.model));
    let model = match raw.model.as_str() {
        "toy" => ModelSpec::Toy,
        "ar1" => {
            let rho = raw.rho.ok_or_else(|| missing("rho"))?;
            let tau2 = raw.tau2.ok_or_else(|| missing("tau2"))?;
            echo.rho = Some(rho);
            echo.tau2 = Some(tau2);
            ModelSpec::Ar1 { rho, tau2 }
        }
        "lasso" => {
            let y = raw.y_path.as_ref().ok_or_else(|| missing("y_path"))?;
            let x = raw.x_path.as_ref().ok_or_else(|| missing("x_path"))?;
            let lambda = raw.lambda.ok_or_else(|| missing("lambda"))?;
            let modes = LassoModes {
                eta_rate: raw.eta_rate_mode.unwrap_or_default(),
                ig_mean: raw.ig_mean_mode.unwrap_or_default(),
            };
            let data = read_lasso_csv(base_dir.join(y), base_dir.join(x), lambda)?;
            echo.lambda = Some(lambda);
            echo.y_path = Some(y.display().to_string());
            echo.x_path = Some(x.display().to_string());
            echo.modes = Some(modes);
            echo.standardization = Some(data.standardization().clone());
            ModelSpec::Lasso {
                data: Arc::new(data),
                modes,
            }
        }
        other => {
            return Err(Error::ConfigInvalid(format!(
                "unknown model `{other}` (expected toy, ar1 or lasso)"
            )))
        }
    };
    let truth = raw.truth.or_else(|| model.truth());
    echo.truth = truth;
    let experiment = ExperimentConfig {
        model,
        replicates: raw.replicates,
        burn_in: raw.burn_in,
        checkpoints: raw.checkpoints,
        rules: raw.rules,
        level: raw.level,
        base_seed,
        workers: raw.workers,
    };
    experiment.validate()?;
    let [lo, hi] = raw.histogram_range;
    if raw.histogram_bins == 0 || !(lo < hi) {
        return Err(Error::ConfigInvalid("invalid histogram settings".into()));
    }
    Ok(LoadedConfig {
        experiment,
        output: OutputOptions {
            truth,
            histogram_bins: raw.histogram_bins,
            histogram_range: (lo, hi),
        },
        echo,
    })
}

pub fn load_config(path: impl AsRef<Path>, env_seed: Option<u64>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::ConfigInvalid(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base, env_seed)
}
