//! Per-video mean opinion scores.
//!
//! Pipeline order, per dimension: subject rejection → score rejection →
//! per-subject mean/std on the retained raw ratings → z-score and rescale
//! to [0, 100] → average over the subjects that rated the video.

pub mod rejection;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{Dimension, DimensionCounts, MosRecord, RatingRecord, Study, SubjectId, VideoId};
use crate::qa::{aggregate_video, VoteSet};
pub use rejection::{reject_scores, reject_subjects, ScoreRejection, SubjectOutcome, SubjectRejection};
pub use stats::{kurtosis, subject_stats, threshold_coefficient, zscore_rescale, ItemStats, SubjectStats};

/// What to do with a subject whose retained ratings on a dimension are all
/// identical (or who has fewer than two), leaving z-scores undefined.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegenerateSigma {
    /// Drop the subject's ratings from the MOS and emit a warning.
    #[default]
    Exclude,
    /// Count each of the subject's ratings as the midpoint, 50.
    Midpoint,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MosConfig {
    pub degenerate_sigma: DegenerateSigma,
    /// Also discard a subject's yes/no votes on a video when any of their
    /// scores for that video was rejected at score level.
    pub drop_votes_on_score_rejection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedScore {
    pub subject_id: SubjectId,
    pub video_id: VideoId,
    pub dimension: Dimension,
    pub raw_score: i64,
}

/// Outcome of screening one dimension, exportable as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionReport {
    pub dimension: Dimension,
    /// `(P, Q, N)` for every subject that rated on this dimension.
    pub subjects: Vec<SubjectOutcome>,
    pub rejected_subjects: Vec<SubjectId>,
    pub rejected_scores: Vec<RejectedScore>,
    /// Retained ratings per video.
    pub retained_counts: BTreeMap<VideoId, usize>,
    /// Videos that had ratings but kept none.
    pub empty_items: Vec<VideoId>,
    /// Subjects whose z-scores were undefined on this dimension.
    pub degenerate_subjects: Vec<SubjectId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosOutput {
    pub records: Vec<MosRecord>,
    pub reports: Vec<RejectionReport>,
    /// Videos whose QA votes ended in an exact tie on some subtask.
    pub qa_ties: Vec<VideoId>,
}

impl MosOutput {
    pub fn incomplete(&self) -> impl Iterator<Item = &MosRecord> {
        self.records.iter().filter(|r| !r.is_complete())
    }
}

struct DimensionResult {
    report: RejectionReport,
    /// video → (MOS, contributing raters)
    mos: BTreeMap<VideoId, (f64, usize)>,
    score_rejected: BTreeSet<(SubjectId, VideoId)>,
}

fn process_dimension(study: &Study, dimension: Dimension, config: &MosConfig) -> DimensionResult {
    let subject_part = reject_subjects(study, dimension);
    let rejected_subjects = subject_part.rejected();
    let scores = reject_scores(study, dimension, &rejected_subjects);

    let mut per_subject: BTreeMap<&str, Vec<&RatingRecord>> = BTreeMap::new();
    for r in &scores.retained {
        per_subject.entry(&r.subject_id).or_default().push(r);
    }

    let mut sums: BTreeMap<VideoId, (f64, usize)> = BTreeMap::new();
    let mut degenerate = Vec::new();
    for (subject, ratings) in &per_subject {
        let raw: Vec<f64> = ratings.iter().map(|r| r.raw_score as f64).collect();
        let stats = subject_stats(subject, &raw).ok().filter(|s| !s.is_degenerate());
        if stats.is_none() {
            degenerate.push(subject.to_string());
            match config.degenerate_sigma {
                DegenerateSigma::Exclude => {
                    tracing::warn!(
                        subject = %subject,
                        %dimension,
                        n = raw.len(),
                        "z-scores undefined; excluding subject's ratings from MOS"
                    );
                    continue;
                }
                DegenerateSigma::Midpoint => {
                    tracing::warn!(
                        subject = %subject,
                        %dimension,
                        "z-scores undefined; counting subject's ratings at the midpoint"
                    );
                }
            }
        }
        for r in ratings {
            let rescaled = match &stats {
                Some(s) => zscore_rescale(r.raw_score as f64, s).expect("sigma checked above"),
                None => 50.0,
            };
            let e = sums.entry(r.video_id.clone()).or_default();
            e.0 += rescaled;
            e.1 += 1;
        }
    }

    let mut retained_counts: BTreeMap<VideoId, usize> = BTreeMap::new();
    for r in &scores.retained {
        *retained_counts.entry(r.video_id.clone()).or_default() += 1;
    }
    for v in &scores.empty_items {
        retained_counts.entry(v.clone()).or_default();
    }

    let score_rejected = scores
        .rejected
        .iter()
        .map(|r| (r.subject_id.clone(), r.video_id.clone()))
        .collect();

    DimensionResult {
        report: RejectionReport {
            dimension,
            subjects: subject_part.outcomes,
            rejected_subjects: rejected_subjects.into_iter().collect(),
            rejected_scores: scores
                .rejected
                .into_iter()
                .map(|r| RejectedScore {
                    subject_id: r.subject_id,
                    video_id: r.video_id,
                    dimension,
                    raw_score: r.raw_score,
                })
                .collect(),
            retained_counts,
            empty_items: scores.empty_items,
            degenerate_subjects: degenerate,
        },
        mos: sums
            .into_iter()
            .map(|(v, (sum, n))| (v, (sum / n as f64, n)))
            .collect(),
        score_rejected,
    }
}

/// Builds the QA vote set for one video from the surviving voters.
fn vote_set(
    study: &Study,
    video_id: &str,
    voters: &[(&SubjectId, &Vec<bool>)],
    dropped_subjects: &BTreeSet<SubjectId>,
    dropped_pairs: &BTreeSet<(SubjectId, VideoId)>,
) -> VoteSet {
    let subtasks = study.prompt_of(video_id).map_or(0, |p| p.subtasks.len());
    let mut per_subtask = vec![Vec::new(); subtasks];
    for (subject, votes) in voters {
        if dropped_subjects.contains(*subject)
            || dropped_pairs.contains(&((*subject).clone(), video_id.to_string()))
        {
            continue;
        }
        for (slot, &v) in per_subtask.iter_mut().zip(votes.iter()) {
            slot.push(v);
        }
    }
    VoteSet {
        video_id: video_id.to_string(),
        votes: per_subtask,
    }
}

/// Runs the full pipeline and returns one record per video in the study.
///
/// Subjects rejected at subject level on either dimension lose their QA
/// votes as well; score-level rejection drops votes only when
/// [`MosConfig::drop_votes_on_score_rejection`] is set.
pub fn compute_mos(study: &Study, config: &MosConfig) -> MosOutput {
    let results: Vec<DimensionResult> = Dimension::ALL
        .iter()
        .map(|&d| process_dimension(study, d, config))
        .collect();
    let (perception, correspondence) = (&results[0], &results[1]);

    let dropped_subjects: BTreeSet<SubjectId> = results
        .iter()
        .flat_map(|r| r.report.rejected_subjects.iter().cloned())
        .collect();
    let dropped_pairs: BTreeSet<(SubjectId, VideoId)> = if config.drop_votes_on_score_rejection {
        results
            .iter()
            .flat_map(|r| r.score_rejected.iter().cloned())
            .collect()
    } else {
        BTreeSet::new()
    };

    // Votes are keyed by (subject, video); regroup by video once.
    let mut voters_by_video: BTreeMap<&str, Vec<(&SubjectId, &Vec<bool>)>> = BTreeMap::new();
    for ((subject, video), votes) in &study.votes {
        voters_by_video.entry(video).or_default().push((subject, votes));
    }

    let mut qa_ties = Vec::new();
    let records = study
        .videos
        .keys()
        .map(|video_id| {
            let p = perception.mos.get(video_id).copied();
            let c = correspondence.mos.get(video_id).copied();
            let qa_answer = if let Some(voters) = voters_by_video.get(video_id.as_str()) {
                let set = vote_set(study, video_id, voters, &dropped_subjects, &dropped_pairs);
                match aggregate_video(&set) {
                    Ok(outcome) => {
                        if outcome.tie {
                            qa_ties.push(video_id.clone());
                        }
                        Some(outcome.answer)
                    }
                    Err(_) => None,
                }
            } else {
                None
            };
            let overall_avg = match (p, c) {
                (Some((p, _)), Some((c, _))) => Some((p + c) / 2.0),
                _ => None,
            };
            MosRecord {
                video_id: video_id.clone(),
                perception_mos: p.map(|x| x.0),
                correspondence_mos: c.map(|x| x.0),
                overall_avg,
                qa_answer,
                contributing_counts: DimensionCounts {
                    perception: p.map_or(0, |x| x.1),
                    correspondence: c.map_or(0, |x| x.1),
                },
            }
        })
        .collect();

    MosOutput {
        records,
        reports: results.into_iter().map(|r| r.report).collect(),
        qa_ties,
    }
}
