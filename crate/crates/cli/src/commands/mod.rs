pub mod eval;
pub mod mos;
pub mod prep;
pub mod serve;
pub mod validate;

use std::path::{Path, PathBuf};

use mosbench_core::model::Study;
use mosbench_core::mos::MosConfig;
use mosbench_core::store::{load_study, StudyFormat};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, MosArgs};

/// First of flag, then config value; a usage error names the flag if both are absent.
pub(crate) fn require<T: Clone>(flag: &Option<T>, config: &Option<T>, name: &str) -> Result<T, CliError> {
    flag.clone()
        .or_else(|| config.clone())
        .ok_or_else(|| CliError::Usage(format!("{name} is required (flag or config)")))
}

pub(crate) fn out_dir(common: &CommonArgs, config: &RunConfig) -> Result<PathBuf, CliError> {
    require(&common.out, &config.out, "--out")
}

pub(crate) fn seed(common: &CommonArgs, config: &RunConfig) -> u64 {
    common.seed.or(config.seed).unwrap_or(0)
}

pub(crate) fn mos_config(args: &MosArgs, config: &RunConfig) -> MosConfig {
    MosConfig {
        degenerate_sigma: args
            .degenerate_sigma
            .map(Into::into)
            .or(config.mos.degenerate_sigma)
            .unwrap_or_default(),
        drop_votes_on_score_rejection: args
            .drop_votes_on_score_rejection
            .or(config.mos.drop_votes_on_score_rejection)
            .unwrap_or(false),
    }
}

/// Loads a study, failing with every violation logged if it breaks an invariant.
pub(crate) fn load_checked(path: &Path) -> Result<Study, CliError> {
    if !path.exists() {
        return Err(CliError::Usage(format!("study {} does not exist", path.display())));
    }
    load_study(path, StudyFormat::detect(path)).map_err(CliError::Input)
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| {
        CliError::Output(mosbench_core::error::StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}
