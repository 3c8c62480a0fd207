use mosbench_core::benchmark::build_scorecards;
use mosbench_core::model::VideoId;
use mosbench_core::mos::{compute_mos, MosConfig, RejectionReport};
use mosbench_core::store::{save_outputs, write_json};
use serde::Serialize;

use super::{ensure_dir, load_checked, mos_config, out_dir, require};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, MosArgs};

pub const REJECTION_FILE: &str = "rejection.json";

#[derive(Serialize)]
struct RejectionFile<'a> {
    config: &'a MosConfig,
    dimensions: &'a [RejectionReport],
    qa_ties: &'a [VideoId],
}

/// Writes `mos.json`, `mos.csv`, `scorecards.json`, `scorecards.csv` and
/// `rejection.json` into the output directory.
pub fn run(common: &CommonArgs, args: &MosArgs, config: &RunConfig) -> Result<(), CliError> {
    let study_path = require(&args.study, &config.mos.study, "--study")?;
    let out = out_dir(common, config)?;
    let mos_config = mos_config(args, config);
    let study = load_checked(&study_path)?;

    let output = compute_mos(&study, &mos_config);
    for report in &output.reports {
        tracing::info!(
            dimension = %report.dimension,
            rejected_subjects = report.rejected_subjects.len(),
            rejected_scores = report.rejected_scores.len(),
            "screened raters"
        );
        if !report.degenerate_subjects.is_empty() {
            tracing::warn!(dimension = %report.dimension, subjects = ?report.degenerate_subjects, "raters with zero spread");
        }
    }
    let incomplete = output.incomplete().count();
    if incomplete > 0 {
        tracing::warn!(videos = incomplete, "videos without a score on both dimensions");
    }
    if !output.qa_ties.is_empty() {
        tracing::warn!(videos = output.qa_ties.len(), "subtask votes tied; tie counted as no");
    }

    let cards = match build_scorecards(&output.records, &study) {
        Ok(cards) => cards,
        Err(e) => {
            tracing::warn!(error = %e, "no model scorecards");
            Vec::new()
        }
    };
    ensure_dir(&out)?;
    save_outputs(&output.records, &cards, &out).map_err(CliError::Output)?;
    write_json(
        &out.join(REJECTION_FILE),
        &RejectionFile {
            config: &mos_config,
            dimensions: &output.reports,
            qa_ties: &output.qa_ties,
        },
    )
    .map_err(CliError::Output)?;
    tracing::info!(videos = output.records.len(), models = cards.len(), out = %out.display(), "wrote MOS outputs");
    Ok(())
}
