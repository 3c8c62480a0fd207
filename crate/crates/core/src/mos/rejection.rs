//! Two-step screening of raw ratings: whole-subject rejection driven by
//! kurtosis-scaled deviation counts, then per-score band rejection.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::stats::ItemStats;
use crate::model::{Dimension, RatingRecord, Study, SubjectId, VideoId};

/// Share of a subject's items that must be extreme before rejection.
pub const EXTREME_SHARE: f64 = 0.05;
/// Rejection also requires the extremes to be roughly balanced between
/// high and low: `|P - Q| / (P + Q)` must fall below this.
pub const BALANCE_LIMIT: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectOutcome {
    pub subject_id: SubjectId,
    /// Items scored at or above `μ + kσ`.
    pub p: usize,
    /// Items scored at or below `μ − kσ`.
    pub q: usize,
    /// Items the subject rated on this dimension.
    pub n: usize,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRejection {
    pub dimension: Dimension,
    pub outcomes: Vec<SubjectOutcome>,
}

impl SubjectRejection {
    pub fn rejected(&self) -> BTreeSet<SubjectId> {
        self.outcomes
            .iter()
            .filter(|o| o.rejected)
            .map(|o| o.subject_id.clone())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRejection {
    pub dimension: Dimension,
    pub retained: Vec<RatingRecord>,
    pub rejected: Vec<RatingRecord>,
    /// Items that had ratings on this dimension but kept none.
    pub empty_items: Vec<VideoId>,
}

/// Scores per item for one dimension, keyed by video then subject.
pub(crate) type ItemScores<'a> = BTreeMap<&'a str, BTreeMap<&'a str, f64>>;

pub(crate) fn item_scores<'a>(
    ratings: impl Iterator<Item = &'a RatingRecord>,
    skip: &BTreeSet<SubjectId>,
) -> ItemScores<'a> {
    let mut items: ItemScores<'a> = BTreeMap::new();
    for r in ratings {
        if skip.contains(&r.subject_id) {
            continue;
        }
        items
            .entry(r.video_id.as_str())
            .or_default()
            .insert(r.subject_id.as_str(), r.raw_score as f64);
    }
    items
}

fn item_stats(items: &ItemScores<'_>) -> BTreeMap<String, ItemStats> {
    items
        .iter()
        .filter_map(|(video, scores)| {
            let values: Vec<f64> = scores.values().copied().collect();
            ItemStats::from_scores(video, &values)
                .ok()
                .map(|s| (video.to_string(), s))
        })
        .collect()
}

/// Subject rejection over all items of one dimension.
///
/// Items with fewer than two raters or zero spread carry no band and count
/// towards `N` only. The balance condition is skipped (subject kept) when
/// `P + Q = 0`.
pub fn reject_subjects(study: &Study, dimension: Dimension) -> SubjectRejection {
    let items = item_scores(study.ratings_for(dimension), &BTreeSet::new());
    let stats = item_stats(&items);

    let mut counts: BTreeMap<&str, (usize, usize, usize)> = BTreeMap::new();
    for (video, scores) in &items {
        let band = stats.get(*video).filter(|s| s.sigma > 0.0);
        for (subject, &score) in scores {
            let c = counts.entry(subject).or_default();
            c.2 += 1;
            if let Some(b) = band {
                if score >= b.upper() {
                    c.0 += 1;
                }
                if score <= b.lower() {
                    c.1 += 1;
                }
            }
        }
    }

    let outcomes = counts
        .into_iter()
        .map(|(subject, (p, q, n))| {
            let extreme = (p + q) as f64 / n as f64 > EXTREME_SHARE;
            let balanced = p + q > 0
                && ((p as f64 - q as f64) / (p + q) as f64).abs() < BALANCE_LIMIT;
            SubjectOutcome {
                subject_id: subject.to_string(),
                p,
                q,
                n,
                rejected: extreme && balanced,
            }
        })
        .collect();

    SubjectRejection {
        dimension,
        outcomes,
    }
}

/// Score rejection among the subjects that survived [`reject_subjects`].
///
/// Item statistics are recomputed over the surviving subjects only, then
/// each score is kept iff it lies in `[μ − kσ, μ + kσ]`. Items with a single
/// surviving rater keep that rating. Single pass.
pub fn reject_scores(
    study: &Study,
    dimension: Dimension,
    rejected_subjects: &BTreeSet<SubjectId>,
) -> ScoreRejection {
    let items = item_scores(study.ratings_for(dimension), rejected_subjects);
    let stats = item_stats(&items);

    let mut retained = Vec::new();
    let mut rejected = Vec::new();
    let mut empty_items: BTreeSet<String> = study
        .ratings_for(dimension)
        .filter(|r| !items.contains_key(r.video_id.as_str()))
        .map(|r| r.video_id.clone())
        .collect();
    for (video, scores) in &items {
        let band = stats.get(*video);
        let before = retained.len();
        for (subject, &score) in scores {
            let rec = RatingRecord {
                subject_id: subject.to_string(),
                video_id: video.to_string(),
                dimension,
                raw_score: score as i64,
            };
            if band.is_none_or(|b| b.within_band(score)) {
                retained.push(rec);
            } else {
                rejected.push(rec);
            }
        }
        if retained.len() == before {
            empty_items.insert(video.to_string());
        }
    }

    ScoreRejection {
        dimension,
        retained,
        rejected,
        empty_items: empty_items.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PromptRecord, Split, StudyMetadata, Task, VideoRecord};

    fn study_from(items: &[Vec<i64>]) -> Study {
        let mut s = Study::new(StudyMetadata::default());
        s.add_prompt(PromptRecord {
            prompt_id: "p".into(),
            text: "t".into(),
            task: Task::Object,
            subtasks: vec!["x".into()],
        });
        for (i, scores) in items.iter().enumerate() {
            let video = format!("v{i:03}");
            s.add_video(VideoRecord {
                video_id: video.clone(),
                prompt_id: "p".into(),
                model_id: format!("m{i}"),
                split: Split::Test,
            });
            for (j, &score) in scores.iter().enumerate() {
                s.add_rating(RatingRecord {
                    subject_id: format!("s{j:02}"),
                    video_id: video.clone(),
                    dimension: Dimension::Perception,
                    raw_score: score,
                });
            }
        }
        s
    }

    /// Straight application of both conditions, counting extremes against
    /// bands computed from all raters.
    fn oracle_rejected(items: &[Vec<i64>]) -> BTreeSet<String> {
        let n_subjects = items[0].len();
        let mut out = BTreeSet::new();
        for j in 0..n_subjects {
            let (mut p, mut q) = (0usize, 0usize);
            for scores in items {
                let v: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
                let n = v.len() as f64;
                let mu = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1.0);
                if var == 0.0 {
                    continue;
                }
                let sd = var.sqrt();
                let m2 = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
                let m4 = v.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
                let beta = m4 / (m2 * m2);
                let k = if (2.0..=4.0).contains(&beta) { 2.0 } else { 20f64.sqrt() };
                if v[j] >= mu + k * sd {
                    p += 1;
                }
                if v[j] <= mu - k * sd {
                    q += 1;
                }
            }
            let total = items.len() as f64;
            if (p + q) as f64 / total > 0.05
                && p + q > 0
                && ((p as f64 - q as f64) / (p + q) as f64).abs() < 0.3
            {
                out.insert(format!("s{j:02}"));
            }
        }
        out
    }

    #[test]
    fn consensus_raters_are_kept() {
        let items: Vec<Vec<i64>> = (0..10).map(|i| vec![1 + i % 5; 6]).collect();
        let r = reject_subjects(&study_from(&items), Dimension::Perception);
        assert!(r.rejected().is_empty());
        assert!(r.outcomes.iter().all(|o| o.p == 0 && o.q == 0 && o.n == 10));
    }

    /// 20 items rated by 30 subjects drawn from a near-normal pattern; one
    /// subject goes far above the consensus on one item and far below on
    /// another (10% of items, balanced).
    fn spread_items(deviant: &[(usize, i64)]) -> Vec<Vec<i64>> {
        // β of this pattern is ≈2.6, inside [2,4], so k = 2.
        let base: Vec<i64> = [2, 3, 3, 3, 4].iter().cycle().take(30).copied().collect();
        (0..20)
            .map(|i| {
                let mut row = base.clone();
                row.rotate_left(i % 5);
                for &(item, score) in deviant {
                    if item == i {
                        row[29] = score;
                    }
                }
                row
            })
            .collect()
    }

    #[test]
    fn balanced_extreme_subject_rejected() {
        let items = spread_items(&[(3, 5), (11, 1)]);
        let oracle = oracle_rejected(&items);
        let got = reject_subjects(&study_from(&items), Dimension::Perception).rejected();
        assert_eq!(got, oracle);
        assert!(got.contains("s29"), "{got:?}");
    }

    #[test]
    fn one_sided_extreme_subject_kept() {
        let items = spread_items(&[(3, 5), (11, 5)]);
        let oracle = oracle_rejected(&items);
        let r = reject_subjects(&study_from(&items), Dimension::Perception);
        assert_eq!(r.rejected(), oracle);
        let o = r.outcomes.iter().find(|o| o.subject_id == "s29").unwrap();
        assert!(o.p >= 2 && o.q == 0, "{o:?}");
        assert!(!o.rejected);
    }

    #[test]
    fn constant_item_keeps_everything() {
        let s = study_from(&[vec![3, 3, 3, 3]]);
        let out = reject_scores(&s, Dimension::Perception, &BTreeSet::new());
        assert_eq!(out.retained.len(), 4);
        assert!(out.rejected.is_empty());
    }

    #[test]
    fn heavy_tailed_item_uses_wide_band() {
        let mut scores = vec![1];
        scores.extend([3; 14]);
        let s = study_from(&[scores.clone()]);
        let out = reject_scores(&s, Dimension::Perception, &BTreeSet::new());

        let v: Vec<f64> = scores.iter().map(|&x| x as f64).collect();
        let n = v.len() as f64;
        let mu = v.iter().sum::<f64>() / n;
        let sd = (v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let m2 = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / n;
        let m4 = v.iter().map(|x| (x - mu).powi(4)).sum::<f64>() / n;
        assert!(m4 / (m2 * m2) > 4.0);
        let k = 20f64.sqrt();
        let expect = v.iter().filter(|&&x| mu - k * sd <= x && x <= mu + k * sd).count();
        assert_eq!(out.retained.len(), expect);
        assert_eq!(expect, 15);
    }

    #[test]
    fn empty_ratings_empty_output() {
        let s = study_from(&[]);
        let out = reject_scores(&s, Dimension::Perception, &BTreeSet::new());
        assert!(out.retained.is_empty() && out.rejected.is_empty() && out.empty_items.is_empty());
        assert!(reject_subjects(&s, Dimension::Perception).outcomes.is_empty());
    }

    #[test]
    fn rejected_subjects_are_excluded_and_item_reported_when_emptied() {
        let s = study_from(&[vec![2, 4], vec![1, 5]]);
        let skip: BTreeSet<String> = ["s00".to_string(), "s01".to_string()].into();
        let out = reject_scores(&s, Dimension::Perception, &skip);
        assert!(out.retained.is_empty());
        assert_eq!(out.empty_items, vec!["v000".to_string(), "v001".to_string()]);
    }
}
