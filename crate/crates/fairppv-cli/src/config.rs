//! Optional key-value configuration file (TOML). Every key mirrors the
//! long flag of the same name; explicit flags win over file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fairppv::{Error, Result};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub replications: Option<usize>,
    pub format: Option<String>,
    pub out: Option<PathBuf>,

    // model / calibration
    pub cost: Option<f64>,
    pub p_y1: Option<f64>,
    pub p_y0: Option<f64>,
    pub p_a1: Option<f64>,
    pub sigma: Option<f64>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub grid_step: Option<f64>,
    pub anchor_group: Option<usize>,
    pub condition_slack: Option<f64>,
    pub ppv_match_tol: Option<f64>,

    // training
    pub estimator: Option<String>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub l2: Option<f64>,

    // sweep
    pub parameter: Option<String>,
    pub values: Option<Vec<f64>>,

    // tabular
    pub csv: Option<PathBuf>,
    pub group_column: Option<String>,
    pub label_column: Option<String>,
    pub numeric_features: Option<Vec<String>>,
    pub categorical_features: Option<Vec<String>>,
    pub train_frac: Option<f64>,
    pub calib_frac: Option<f64>,
    pub test_frac: Option<f64>,

    pub preset: Option<String>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
            }
        }
    }
}

/// Flag value if given, else config-file value, else the default.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag value if given, else config-file value.
pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
