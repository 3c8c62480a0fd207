use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{
    instance_eval, instance_qa, model_aggregate, model_eval, overall_rank,
    zero_shot_subset_eval, InstanceStats, MetricSubmission, ModelStats, QaInstance, ScoreTarget,
    TruthColumns,
};
use crate::error::BenchError;
use crate::model::{ModelId, MosRecord, Study, VideoId};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeans {
    pub perception: Option<f64>,
    pub correspondence: Option<f64>,
    pub overall: Option<f64>,
    /// Percentage of videos answered correctly.
    pub qa_accuracy_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub model_id: ModelId,
    pub human: ModelMeans,
    pub predicted: ModelMeans,
    pub human_rank: Option<usize>,
    pub predicted_rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelLevel {
    pub target: ScoreTarget,
    pub stats: ModelStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub instance: QaInstance,
    /// Per-model accuracies compared in percentage points.
    pub model: Option<ModelStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroShotReport {
    pub models: Vec<ModelId>,
    pub model_level: Vec<ModelLevel>,
    pub qa: Option<ModelStats>,
    /// Overall ranks from the full model set, restricted to the subset.
    pub rank: Option<ModelStats>,
}

/// Everything `eval` reports for one submission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub metric_name: String,
    pub submitted_videos: usize,
    pub truth_videos: usize,
    pub instance: Vec<InstanceStats>,
    pub model_level: Vec<ModelLevel>,
    pub qa: Option<QaReport>,
    /// Overall rank columns compared as values.
    pub rank: Option<ModelStats>,
    pub zero_shot: Option<ZeroShotReport>,
    pub models: Vec<ModelComparison>,
}

fn as_pct(map: &BTreeMap<ModelId, f64>) -> BTreeMap<ModelId, f64> {
    map.iter().map(|(m, v)| (m.clone(), 100.0 * v)).collect()
}

fn ranks_as_values(ranks: &BTreeMap<ModelId, usize>) -> BTreeMap<ModelId, f64> {
    ranks.iter().map(|(m, r)| (m.clone(), *r as f64)).collect()
}

/// Per-model means of both sides over the videos both sides cover.
struct Side {
    means: BTreeMap<ScoreTarget, BTreeMap<ModelId, f64>>,
    qa_pct: BTreeMap<ModelId, f64>,
}

impl Side {
    fn ranks(&self) -> BTreeMap<ModelId, usize> {
        let mut cols = vec![
            &self.means[&ScoreTarget::Perception],
            &self.means[&ScoreTarget::Correspondence],
        ];
        if !self.qa_pct.is_empty() {
            cols.push(&self.qa_pct);
        }
        if cols.iter().any(|c| c.is_empty()) {
            return BTreeMap::new();
        }
        overall_rank(&cols)
    }

    fn means_of(&self, model: &str) -> ModelMeans {
        let get = |t: ScoreTarget| self.means[&t].get(model).copied();
        ModelMeans {
            perception: get(ScoreTarget::Perception),
            correspondence: get(ScoreTarget::Correspondence),
            overall: get(ScoreTarget::Overall),
            qa_accuracy_pct: self.qa_pct.get(model).copied(),
        }
    }
}

fn sides(
    submission: &MetricSubmission,
    truth: &TruthColumns,
    video_models: &BTreeMap<VideoId, ModelId>,
) -> Result<(Side, Side), BenchError> {
    let mut human = Side {
        means: BTreeMap::new(),
        qa_pct: BTreeMap::new(),
    };
    let mut pred = Side {
        means: BTreeMap::new(),
        qa_pct: BTreeMap::new(),
    };
    for target in ScoreTarget::ALL {
        let (mut h, mut p) = (BTreeMap::new(), BTreeMap::new());
        for (video, &t) in truth.get(target) {
            if let Some(s) = submission.score(video, target) {
                h.insert(video.clone(), t);
                p.insert(video.clone(), s);
            }
        }
        human.means.insert(target, model_aggregate(&h, video_models)?.means);
        pred.means.insert(target, model_aggregate(&p, video_models)?.means);
    }
    let (mut h, mut p) = (BTreeMap::new(), BTreeMap::new());
    for (video, &t) in &truth.qa {
        if let Some(a) = submission.qa(video) {
            h.insert(video.clone(), t);
            p.insert(video.clone(), if a { 1.0 } else { 0.0 });
        }
    }
    human.qa_pct = as_pct(&model_aggregate(&h, video_models)?.means);
    pred.qa_pct = as_pct(&model_aggregate(&p, video_models)?.means);
    Ok((human, pred))
}

/// Runs the full protocol: instance-level correlations per target,
/// model-level statistics over per-model means, QA accuracy, overall-rank
/// agreement and, when `zero_shot` is given, the same model-level
/// statistics restricted to that subset.
///
/// Targets the submission scores for no ground-truth video are skipped;
/// a target it scores for exactly one video is an error.
pub fn evaluate(
    submission: &MetricSubmission,
    truth: &[MosRecord],
    study: &Study,
    zero_shot: Option<&[ModelId]>,
) -> Result<EvalReport, BenchError> {
    let video_models = study.video_models();
    submission.check_references(&video_models)?;
    let cols = TruthColumns::from_records(truth);

    let mut instance = Vec::new();
    for target in ScoreTarget::ALL {
        match instance_eval(submission, truth, target) {
            Ok(s) => instance.push(s),
            Err(BenchError::InsufficientCoverage { covered: 0 }) => {}
            Err(e) => return Err(e),
        }
    }
    let qa_instance = match instance_qa(submission, truth) {
        Ok(q) => Some(q),
        Err(BenchError::InsufficientCoverage { covered: 0 }) => None,
        Err(e) => return Err(e),
    };
    if instance.is_empty() && qa_instance.is_none() {
        return Err(BenchError::InsufficientCoverage { covered: 0 });
    }

    let (human, pred) = sides(submission, &cols, &video_models)?;
    let optional = |r: Result<ModelStats, BenchError>| match r {
        Ok(s) => Ok(Some(s)),
        Err(BenchError::TooFewModels(_)) => Ok(None),
        Err(e) => Err(e),
    };

    let mut model_level = Vec::new();
    for s in &instance {
        if let Some(stats) = optional(model_eval(&pred.means[&s.target], &human.means[&s.target]))? {
            model_level.push(ModelLevel { target: s.target, stats });
        }
    }
    let qa = match qa_instance {
        Some(instance) => Some(QaReport {
            instance,
            model: optional(model_eval(&pred.qa_pct, &human.qa_pct))?,
        }),
        None => None,
    };
    let human_ranks = human.ranks();
    let pred_ranks = pred.ranks();
    let rank = optional(model_eval(&ranks_as_values(&pred_ranks), &ranks_as_values(&human_ranks)))?;

    let zero_shot = match zero_shot {
        None => None,
        Some(subset) => {
            let mut model_level = Vec::new();
            for s in &instance {
                let stats = zero_shot_subset_eval(&pred.means[&s.target], &human.means[&s.target], subset)?;
                model_level.push(ModelLevel { target: s.target, stats });
            }
            let qa = if qa.is_some() {
                Some(zero_shot_subset_eval(&pred.qa_pct, &human.qa_pct, subset)?)
            } else {
                None
            };
            let rank = if rank.is_some() {
                Some(zero_shot_subset_eval(
                    &ranks_as_values(&pred_ranks),
                    &ranks_as_values(&human_ranks),
                    subset,
                )?)
            } else {
                None
            };
            Some(ZeroShotReport {
                models: subset.to_vec(),
                model_level,
                qa,
                rank,
            })
        }
    };

    let all_models: BTreeSet<&ModelId> = human
        .means
        .values()
        .chain(pred.means.values())
        .flat_map(|m| m.keys())
        .chain(human.qa_pct.keys())
        .collect();
    let models = all_models
        .into_iter()
        .map(|m| ModelComparison {
            model_id: m.clone(),
            human: human.means_of(m),
            predicted: pred.means_of(m),
            human_rank: human_ranks.get(m).copied(),
            predicted_rank: pred_ranks.get(m).copied(),
        })
        .collect();

    Ok(EvalReport {
        metric_name: submission.metric_name.clone(),
        submitted_videos: submission.predictions.len(),
        truth_videos: truth.len(),
        instance,
        model_level,
        qa,
        rank,
        zero_shot,
        models,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into())
}

fn rank_cell(v: Option<usize>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn stats_rows(out: &mut String, rows: &[(String, &ModelStats)]) {
    out.push_str("| Score | Models | SRCC | PLCC | RMSE |\n|---|---:|---:|---:|---:|\n");
    for (name, s) in rows {
        let _ = writeln!(out, "| {name} | {} | {:.4} | {:.4} | {:.3} |", s.n, s.srcc, s.plcc, s.rmse);
    }
}

/// Human-readable summary with a leaderboard ordered by the predicted
/// overall rank (models without one last, then by id).
pub fn leaderboard_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", report.metric_name);
    let _ = writeln!(
        out,
        "{} submitted videos, {} ground-truth videos.\n",
        report.submitted_videos, report.truth_videos
    );

    if !report.instance.is_empty() {
        out.push_str("## Instance level\n\n| Score | Videos | Excluded | SRCC | PLCC | KRCC |\n|---|---:|---:|---:|---:|---:|\n");
        for s in &report.instance {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {:.4} | {:.4} |",
                s.target.as_str(),
                s.n,
                s.excluded,
                s.srcc,
                s.plcc,
                s.krcc
            );
        }
        out.push('\n');
    }
    if let Some(qa) = &report.qa {
        let _ = writeln!(
            out,
            "QA accuracy: {:.2}% over {} videos ({} excluded).\n",
            100.0 * qa.instance.accuracy,
            qa.instance.n,
            qa.instance.excluded
        );
    }

    let mut rows: Vec<(String, &ModelStats)> = report
        .model_level
        .iter()
        .map(|m| (m.target.as_str().to_string(), &m.stats))
        .collect();
    if let Some(s) = report.qa.as_ref().and_then(|q| q.model.as_ref()) {
        rows.push(("qa accuracy".into(), s));
    }
    if let Some(s) = &report.rank {
        rows.push(("overall rank".into(), s));
    }
    if !rows.is_empty() {
        out.push_str("## Model level\n\n");
        stats_rows(&mut out, &rows);
        out.push('\n');
    }

    if let Some(z) = &report.zero_shot {
        let mut rows: Vec<(String, &ModelStats)> = z
            .model_level
            .iter()
            .map(|m| (m.target.as_str().to_string(), &m.stats))
            .collect();
        if let Some(s) = &z.qa {
            rows.push(("qa accuracy".into(), s));
        }
        if let Some(s) = &z.rank {
            rows.push(("overall rank".into(), s));
        }
        let _ = writeln!(out, "## Model subset ({} models)\n", z.models.len());
        stats_rows(&mut out, &rows);
        out.push('\n');
    }

    out.push_str("## Leaderboard\n\n| Rank | Model | Perception | Correspondence | QA (%) | Human rank |\n|---:|---|---:|---:|---:|---:|\n");
    let mut models: Vec<&ModelComparison> = report.models.iter().collect();
    models.sort_by_key(|m| (m.predicted_rank.unwrap_or(usize::MAX), m.model_id.clone()));
    for m in models {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            rank_cell(m.predicted_rank),
            m.model_id,
            cell(m.predicted.perception),
            cell(m.predicted.correspondence),
            cell(m.predicted.qa_accuracy_pct),
            rank_cell(m.human_rank),
        );
    }
    out
}
