use mosbench_core::benchmark::{evaluate, leaderboard_markdown, MetricSubmission};
use mosbench_core::mos::compute_mos;
use mosbench_core::store::{load_mos, write_atomic, write_json};

use super::{ensure_dir, load_checked, mos_config, out_dir, require};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, EvalArgs, MosArgs};

pub const REPORT_FILE: &str = "report.json";
pub const LEADERBOARD_FILE: &str = "leaderboard.md";

pub fn run(common: &CommonArgs, args: &EvalArgs, config: &RunConfig) -> Result<(), CliError> {
    let study_path = require(&args.study, &config.eval.study.clone().or(config.mos.study.clone()), "--study")?;
    let sub_path = require(&args.submission, &config.eval.submission, "--submission")?;
    let out = out_dir(common, config)?;
    if !sub_path.exists() {
        return Err(CliError::Usage(format!("submission {} does not exist", sub_path.display())));
    }

    let study = load_checked(&study_path)?;
    let truth = match args.truth.clone().or(config.eval.truth.clone()) {
        Some(path) => load_mos(&path).map_err(CliError::Input)?,
        None => compute_mos(&study, &mos_config(&MosArgs::default(), config)).records,
    };
    let name = args
        .metric_name
        .clone()
        .or(config.eval.metric_name.clone())
        .or_else(|| sub_path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "metric".into());
    let submission = MetricSubmission::load(&sub_path, &name).map_err(CliError::Input)?;
    let zero_shot = args.zero_shot.clone().or(config.eval.zero_shot.clone());

    let report = evaluate(&submission, &truth, &study, zero_shot.as_deref())?;
    for s in &report.instance {
        tracing::info!(target_score = s.target.as_str(), n = s.n, excluded = s.excluded, srcc = s.srcc, "instance level");
    }
    ensure_dir(&out)?;
    write_json(&out.join(REPORT_FILE), &report).map_err(CliError::Output)?;
    write_atomic(&out.join(LEADERBOARD_FILE), leaderboard_markdown(&report).as_bytes()).map_err(CliError::Output)?;
    tracing::info!(out = %out.display(), "wrote evaluation report");
    Ok(())
}
