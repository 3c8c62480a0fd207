//! Run configuration: a TOML file whose values any command-line flag
//! overrides.
//!
//! ```toml
//! seed = 7
//! out = "results"
//!
//! [mos]
//! study = "data/study"
//! degenerate_sigma = "exclude"
//!
//! [eval]
//! submission = "metric.csv"
//! zero_shot = ["model-a", "model-b"]
//!
//! [prep]
//! prompts = "prompts.csv"
//! models = ["m01", "m02"]
//! train_models = ["m01"]
//! test_prompts = 300
//!
//! [serve]
//! store = "store"
//! addr = "127.0.0.1:8080"
//! ```
//!
//! Relative paths in the file resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use mosbench_core::mos::DegenerateSigma;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub mos: MosSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub prep: PrepSection,
    #[serde(default)]
    pub serve: ServeSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MosSection {
    pub study: Option<PathBuf>,
    pub degenerate_sigma: Option<DegenerateSigma>,
    pub drop_votes_on_score_rejection: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub study: Option<PathBuf>,
    /// Ground-truth `mos.json`; computed from the study when absent.
    pub truth: Option<PathBuf>,
    pub submission: Option<PathBuf>,
    pub metric_name: Option<String>,
    pub zero_shot: Option<Vec<String>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepSection {
    pub prompts: Option<PathBuf>,
    pub models: Option<Vec<String>>,
    pub train_models: Option<Vec<String>>,
    pub test_prompts: Option<usize>,
    pub mos: Option<PathBuf>,
    pub label_min: Option<f64>,
    pub label_max: Option<f64>,
    pub frames: Option<PathBuf>,
    pub grid: Option<usize>,
    pub patch: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServeSection {
    pub store: Option<PathBuf>,
    pub addr: Option<String>,
    pub admin_token: Option<String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            message,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| err(e.to_string()))?;
        if let Some(base) = path.parent() {
            config.rebase(base);
        }
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p.as_mut() {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.out);
        fix(&mut self.mos.study);
        fix(&mut self.eval.study);
        fix(&mut self.eval.truth);
        fix(&mut self.eval.submission);
        fix(&mut self.prep.prompts);
        fix(&mut self.prep.mos);
        fix(&mut self.prep.frames);
        fix(&mut self.serve.store);
    }
}
