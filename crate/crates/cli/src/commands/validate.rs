use mosbench_core::store::{load_study_unchecked, write_json, StudyFormat};

use super::{ensure_dir, require};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, ValidateArgs};

pub const VIOLATIONS_FILE: &str = "violations.json";

/// Prints every violation. With `--out`, also writes them as JSON.
pub fn run(common: &CommonArgs, args: &ValidateArgs, config: &RunConfig) -> Result<(), CliError> {
    let path = require(&args.study, &config.mos.study, "--study")?;
    if !path.exists() {
        return Err(CliError::Usage(format!("study {} does not exist", path.display())));
    }
    let (study, violations) = load_study_unchecked(&path, StudyFormat::detect(&path)).map_err(CliError::Input)?;
    for v in &violations {
        println!("{v}");
    }
    if let Some(out) = common.out.clone().or(config.out.clone()) {
        ensure_dir(&out)?;
        write_json(&out.join(VIOLATIONS_FILE), &violations).map_err(CliError::Output)?;
    }
    if !violations.is_empty() {
        return Err(CliError::Invalid {
            path,
            count: violations.len(),
        });
    }
    println!(
        "ok: {} prompts, {} videos, {} subjects, {} ratings",
        study.prompts.len(),
        study.videos.len(),
        study.subjects.len(),
        study.ratings().len()
    );
    Ok(())
}
