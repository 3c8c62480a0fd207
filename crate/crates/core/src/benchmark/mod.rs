//! Instance-level and model-level comparison of a candidate metric against
//! human ground truth, per-task breakdowns and leaderboards.

mod report;
mod submission;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::BenchError;
use crate::metrics::{self, RankMode};
use crate::model::{ModelId, ModelScorecard, MosRecord, Study, Task, TaskScores, VideoId};
pub use report::{evaluate, leaderboard_markdown, EvalReport, ModelComparison, ModelMeans, QaReport, ZeroShotReport};
pub use submission::{MetricSubmission, Prediction, ScoreTarget, SUBMISSION_COLUMNS};

/// Correlations over individual videos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub target: ScoreTarget,
    /// Videos scored by both sides.
    pub n: usize,
    /// Ground-truth videos the submission left unscored.
    pub excluded: usize,
    pub srcc: f64,
    pub plcc: f64,
    pub krcc: f64,
}

/// Pairs up predicted and true values on the covered intersection.
fn covered_pairs(
    submission: &MetricSubmission,
    truth: &[MosRecord],
    target: ScoreTarget,
) -> (Vec<f64>, Vec<f64>, usize) {
    let (mut pred, mut human, mut excluded) = (Vec::new(), Vec::new(), 0);
    for rec in truth {
        let Some(t) = target.truth(rec) else { continue };
        match submission.score(&rec.video_id, target) {
            Some(p) => {
                pred.push(p);
                human.push(t);
            }
            None => excluded += 1,
        }
    }
    (pred, human, excluded)
}

/// SRCC, PLCC and KRCC between predictions and ground-truth MOS, one point
/// per video, over the videos both sides score.
pub fn instance_eval(
    submission: &MetricSubmission,
    truth: &[MosRecord],
    target: ScoreTarget,
) -> Result<InstanceStats, BenchError> {
    let (pred, human, excluded) = covered_pairs(submission, truth, target);
    if pred.len() < 2 {
        return Err(BenchError::InsufficientCoverage { covered: pred.len() });
    }
    Ok(InstanceStats {
        target,
        n: pred.len(),
        excluded,
        srcc: metrics::srcc(&pred, &human)?,
        plcc: metrics::plcc(&pred, &human)?,
        krcc: metrics::krcc(&pred, &human)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaInstance {
    pub n: usize,
    pub excluded: usize,
    pub accuracy: f64,
}

/// Agreement between predicted and ground-truth QA answers.
pub fn instance_qa(submission: &MetricSubmission, truth: &[MosRecord]) -> Result<QaInstance, BenchError> {
    let (mut pred, mut human, mut excluded) = (Vec::new(), Vec::new(), 0);
    for rec in truth {
        let Some(t) = rec.qa_answer else { continue };
        match submission.qa(&rec.video_id) {
            Some(p) => {
                pred.push(p);
                human.push(t);
            }
            None => excluded += 1,
        }
    }
    if pred.is_empty() {
        return Err(BenchError::InsufficientCoverage { covered: 0 });
    }
    Ok(QaInstance {
        n: pred.len(),
        excluded,
        accuracy: metrics::accuracy(&pred, &human)?,
    })
}

/// Per-model means of per-video values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelAggregate {
    pub means: BTreeMap<ModelId, f64>,
    pub counts: BTreeMap<ModelId, usize>,
    /// Models in the video map with no valued video.
    pub uncovered: Vec<ModelId>,
}

/// Arithmetic mean per model over that model's valued videos. For QA,
/// pass answers as 0/1 to get an accuracy fraction.
pub fn model_aggregate(
    values: &BTreeMap<VideoId, f64>,
    video_models: &BTreeMap<VideoId, ModelId>,
) -> Result<ModelAggregate, BenchError> {
    let mut sums: BTreeMap<ModelId, (f64, usize)> = BTreeMap::new();
    for (video, &v) in values {
        let model = video_models
            .get(video)
            .ok_or_else(|| BenchError::UnmappedVideo(video.clone()))?;
        let e = sums.entry(model.clone()).or_default();
        e.0 += v;
        e.1 += 1;
    }
    let uncovered = video_models
        .values()
        .filter(|m| !sums.contains_key(*m))
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    Ok(ModelAggregate {
        means: sums.iter().map(|(m, (s, n))| (m.clone(), s / *n as f64)).collect(),
        counts: sums.into_iter().map(|(m, (_, n))| (m, n)).collect(),
        uncovered,
    })
}

/// Correlation and error over one point per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStats {
    pub n: usize,
    pub srcc: f64,
    pub plcc: f64,
    /// Plain root mean squared difference of the per-model values.
    pub rmse: f64,
}

/// Compares predicted and human per-model values on the models both have.
pub fn model_eval(
    pred: &BTreeMap<ModelId, f64>,
    human: &BTreeMap<ModelId, f64>,
) -> Result<ModelStats, BenchError> {
    let (p, h): (Vec<f64>, Vec<f64>) = pred
        .iter()
        .filter_map(|(m, &v)| human.get(m).map(|&t| (v, t)))
        .unzip();
    if p.len() < 2 {
        return Err(BenchError::TooFewModels(p.len()));
    }
    Ok(ModelStats {
        n: p.len(),
        srcc: metrics::srcc(&p, &h)?,
        plcc: metrics::plcc(&p, &h)?,
        rmse: metrics::rmse(&p, &h)?,
    })
}

/// [`model_eval`] restricted to `subset`. Every listed model must be
/// present on both sides.
pub fn zero_shot_subset_eval(
    pred: &BTreeMap<ModelId, f64>,
    human: &BTreeMap<ModelId, f64>,
    subset: &[ModelId],
) -> Result<ModelStats, BenchError> {
    if subset.is_empty() {
        return Err(BenchError::EmptySubset);
    }
    if let Some(m) = subset.iter().find(|m| !pred.contains_key(*m) || !human.contains_key(*m)) {
        return Err(BenchError::UnknownModel(m.clone()));
    }
    let keep: BTreeSet<&ModelId> = subset.iter().collect();
    let restrict = |map: &BTreeMap<ModelId, f64>| -> BTreeMap<ModelId, f64> {
        map.iter()
            .filter(|(m, _)| keep.contains(m))
            .map(|(m, v)| (m.clone(), *v))
            .collect()
    };
    model_eval(&restrict(pred), &restrict(human))
}

/// Competition ranks (1 = largest) keyed by model.
pub fn competition_ranks(values: &BTreeMap<ModelId, f64>) -> BTreeMap<ModelId, usize> {
    let v: Vec<f64> = values.values().copied().collect();
    values
        .keys()
        .cloned()
        .zip(metrics::rank(&v, RankMode::Competition).into_iter().map(|r| r as usize))
        .collect()
}

/// Overall rank across several score columns: each column is ranked with
/// competition ranking, the per-column ranks are summed, and the sums are
/// ranked again (smallest sum first, ties sharing the better rank). Only
/// models present in every column are ranked.
pub fn overall_rank(columns: &[&BTreeMap<ModelId, f64>]) -> BTreeMap<ModelId, usize> {
    let Some(first) = columns.first() else {
        return BTreeMap::new();
    };
    let models: Vec<&ModelId> = first
        .keys()
        .filter(|m| columns.iter().all(|c| c.contains_key(*m)))
        .collect();
    let mut sums: BTreeMap<ModelId, f64> = models.iter().map(|m| ((*m).clone(), 0.0)).collect();
    for column in columns {
        let restricted: BTreeMap<ModelId, f64> = models.iter().map(|m| ((*m).clone(), column[*m])).collect();
        for (m, r) in competition_ranks(&restricted) {
            *sums.get_mut(&m).expect("same key set") -= r as f64;
        }
    }
    // Sums were negated so that the smallest rank sum ranks first.
    competition_ranks(&sums)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortKey {
    Perception,
    Correspondence,
    QaAccuracy,
}

impl SortKey {
    fn value(self, card: &ModelScorecard) -> Option<f64> {
        match self {
            SortKey::Perception => card.mean_perception,
            SortKey::Correspondence => card.mean_correspondence,
            SortKey::QaAccuracy => card.qa_accuracy,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub rank: usize,
    pub model_id: ModelId,
    pub value: f64,
}

/// Scorecards sorted descending by `key` with competition ranks; equal
/// values are listed by model id. Cards without a value for `key` are left
/// out.
pub fn leaderboard(cards: &[ModelScorecard], key: SortKey) -> Vec<LeaderboardRow> {
    let values: BTreeMap<ModelId, f64> = cards
        .iter()
        .filter_map(|c| key.value(c).map(|v| (c.model_id.clone(), v)))
        .collect();
    let ranks = competition_ranks(&values);
    let mut rows: Vec<LeaderboardRow> = values
        .into_iter()
        .map(|(model_id, value)| LeaderboardRow {
            rank: ranks[&model_id],
            model_id,
            value,
        })
        .collect();
    rows.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.model_id.cmp(&b.model_id)));
    rows
}

/// Mean and count of one (task, model) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mean: f64,
    pub n: usize,
}

/// Task × model matrix of per-video values.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskMatrix {
    pub cells: BTreeMap<Task, BTreeMap<ModelId, Cell>>,
}

impl TaskMatrix {
    /// The video-count-weighted mean of a model's cells.
    pub fn overall(&self, model: &str) -> Option<f64> {
        let (sum, n) = self
            .cells
            .values()
            .filter_map(|row| row.get(model))
            .fold((0.0, 0), |(s, n), c| (s + c.mean * c.n as f64, n + c.n));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn get(&self, task: Task, model: &str) -> Option<Cell> {
        self.cells.get(&task)?.get(model).copied()
    }
}

/// Groups per-video values by the task of the video's prompt and its model.
pub fn per_task_breakdown(values: &BTreeMap<VideoId, f64>, study: &Study) -> Result<TaskMatrix, BenchError> {
    let mut sums: BTreeMap<Task, BTreeMap<ModelId, (f64, usize)>> = BTreeMap::new();
    for (video, &v) in values {
        let record = study
            .videos
            .get(video)
            .ok_or_else(|| BenchError::UnmappedVideo(video.clone()))?;
        let task = study
            .prompts
            .get(&record.prompt_id)
            .ok_or_else(|| BenchError::UnmappedVideo(video.clone()))?
            .task;
        let e = sums.entry(task).or_default().entry(record.model_id.clone()).or_default();
        e.0 += v;
        e.1 += 1;
    }
    let cells = sums
        .into_iter()
        .map(|(task, row)| {
            let row = row
                .into_iter()
                .map(|(m, (s, n))| (m, Cell { mean: s / n as f64, n }))
                .collect();
            (task, row)
        })
        .collect();
    Ok(TaskMatrix { cells })
}

/// Per-video value maps extracted from MOS records.
pub(crate) struct TruthColumns {
    pub perception: BTreeMap<VideoId, f64>,
    pub correspondence: BTreeMap<VideoId, f64>,
    pub overall: BTreeMap<VideoId, f64>,
    pub qa: BTreeMap<VideoId, f64>,
}

impl TruthColumns {
    /// Only complete records contribute scores; QA answers are taken
    /// wherever present.
    pub fn from_records(records: &[MosRecord]) -> Self {
        let complete = || records.iter().filter(|r| r.is_complete());
        let column = |f: fn(&MosRecord) -> Option<f64>| -> BTreeMap<VideoId, f64> {
            complete().filter_map(|r| f(r).map(|v| (r.video_id.clone(), v))).collect()
        };
        TruthColumns {
            perception: column(|r| r.perception_mos),
            correspondence: column(|r| r.correspondence_mos),
            overall: column(|r| r.overall_avg),
            qa: records
                .iter()
                .filter_map(|r| r.qa_answer.map(|a| (r.video_id.clone(), if a { 1.0 } else { 0.0 })))
                .collect(),
        }
    }

    pub fn get(&self, target: ScoreTarget) -> &BTreeMap<VideoId, f64> {
        match target {
            ScoreTarget::Perception => &self.perception,
            ScoreTarget::Correspondence => &self.correspondence,
            ScoreTarget::Overall => &self.overall,
        }
    }
}

/// Per-model scorecards from processed MOS records.
///
/// Means are taken over the model's complete records; QA accuracy over its
/// records with a QA answer. The rank is [`overall_rank`] over mean
/// perception, mean correspondence and QA accuracy (QA is left out when no
/// model has answers). Models without a complete record get no card.
pub fn build_scorecards(records: &[MosRecord], study: &Study) -> Result<Vec<ModelScorecard>, BenchError> {
    let video_models = study.video_models();
    let cols = TruthColumns::from_records(records);
    let perception = model_aggregate(&cols.perception, &video_models)?;
    let correspondence = model_aggregate(&cols.correspondence, &video_models)?;
    let qa = model_aggregate(&cols.qa, &video_models)?;
    let tasks_p = per_task_breakdown(&cols.perception, study)?;
    let tasks_c = per_task_breakdown(&cols.correspondence, study)?;
    let tasks_q = per_task_breakdown(&cols.qa, study)?;

    let mut columns = vec![&perception.means, &correspondence.means];
    if !qa.means.is_empty() {
        columns.push(&qa.means);
    }
    let ranks = overall_rank(&columns);

    let mut cards = Vec::new();
    for (model, rank) in ranks {
        let mut per_task = BTreeMap::new();
        for task in Task::ALL {
            let p = tasks_p.get(task, &model).map(|c| c.mean);
            let c = tasks_c.get(task, &model).map(|c| c.mean);
            let q = tasks_q.get(task, &model).map(|c| c.mean);
            if p.is_some() || c.is_some() || q.is_some() {
                per_task.insert(
                    task,
                    TaskScores {
                        mean_perception: p,
                        mean_correspondence: c,
                        qa_accuracy: q,
                    },
                );
            }
        }
        cards.push(ModelScorecard {
            mean_perception: perception.means.get(&model).copied(),
            mean_correspondence: correspondence.means.get(&model).copied(),
            qa_accuracy: qa.means.get(&model).copied(),
            model_id: model,
            per_task,
            rank,
        });
    }
    cards.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.model_id.cmp(&b.model_id)));
    Ok(cards)
}
