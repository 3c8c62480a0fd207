use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{BenchError, StoreError};
use crate::model::{ModelId, MosRecord, VideoId};
use crate::store::{parse_err, read_rows};

/// Which score a comparison is made on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreTarget {
    Perception,
    Correspondence,
    Overall,
}

impl ScoreTarget {
    pub const ALL: [ScoreTarget; 3] = [
        ScoreTarget::Perception,
        ScoreTarget::Correspondence,
        ScoreTarget::Overall,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScoreTarget::Perception => "perception",
            ScoreTarget::Correspondence => "correspondence",
            ScoreTarget::Overall => "overall",
        }
    }

    /// The ground-truth value for this target.
    pub fn truth(self, record: &MosRecord) -> Option<f64> {
        match self {
            ScoreTarget::Perception => record.perception_mos,
            ScoreTarget::Correspondence => record.correspondence_mos,
            ScoreTarget::Overall => record.overall_avg,
        }
    }
}

/// One video's predicted scores. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub perception: Option<f64>,
    pub correspondence: Option<f64>,
    pub overall: Option<f64>,
    pub qa: Option<bool>,
}

impl Prediction {
    /// The predicted value for `target`. A missing overall score falls back
    /// to the mean of the two dimension scores when both are present.
    pub fn score(&self, target: ScoreTarget) -> Option<f64> {
        match target {
            ScoreTarget::Perception => self.perception,
            ScoreTarget::Correspondence => self.correspondence,
            ScoreTarget::Overall => self.overall.or_else(|| {
                Some((self.perception? + self.correspondence?) / 2.0)
            }),
        }
    }
}

/// Scores a candidate metric assigned to a set of videos.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSubmission {
    pub metric_name: String,
    pub predictions: BTreeMap<VideoId, Prediction>,
}

pub const SUBMISSION_COLUMNS: [&str; 5] = ["video_id", "perception", "correspondence", "overall", "qa"];

impl MetricSubmission {
    pub fn new(metric_name: impl Into<String>) -> Self {
        MetricSubmission {
            metric_name: metric_name.into(),
            predictions: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, video_id: impl Into<VideoId>, prediction: Prediction) {
        self.predictions.insert(video_id.into(), prediction);
    }

    pub fn score(&self, video_id: &str, target: ScoreTarget) -> Option<f64> {
        self.predictions.get(video_id)?.score(target)
    }

    pub fn qa(&self, video_id: &str) -> Option<bool> {
        self.predictions.get(video_id)?.qa
    }

    /// Reads `submissions.csv`. Only `video_id` is required; the score
    /// columns and their cells may be absent or empty.
    pub fn load(path: &Path, metric_name: &str) -> Result<MetricSubmission, StoreError> {
        let mut sub = MetricSubmission::new(metric_name);
        for (line, row) in read_rows(path, &["video_id"])? {
            let video_id = row["video_id"].trim().to_string();
            if video_id.is_empty() {
                return Err(parse_err(path, line, "video_id", "empty"));
            }
            let real = |col: &str| -> Result<Option<f64>, StoreError> {
                match row.get(col).map(|s| s.trim()).filter(|s| !s.is_empty()) {
                    None => Ok(None),
                    Some(s) => match s.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Some(v)),
                        _ => Err(parse_err(path, line, col, format!("not a finite number: {s:?}"))),
                    },
                }
            };
            let qa = match row.get("qa").map(|s| s.trim()).filter(|s| !s.is_empty()) {
                None => None,
                Some("1") | Some("true") => Some(true),
                Some("0") | Some("false") => Some(false),
                Some(s) => return Err(parse_err(path, line, "qa", format!("expected 0 or 1, got {s:?}"))),
            };
            let pred = Prediction {
                perception: real("perception")?,
                correspondence: real("correspondence")?,
                overall: real("overall")?,
                qa,
            };
            if sub.predictions.insert(video_id.clone(), pred).is_some() {
                return Err(parse_err(path, line, "video_id", format!("duplicate video {video_id}")));
            }
        }
        Ok(sub)
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SUBMISSION_COLUMNS).expect("write to Vec");
        for (video, p) in &self.predictions {
            let qa = p.qa.map(|b| if b { "1" } else { "0" }).unwrap_or("");
            w.write_record([
                video.as_str(),
                &fmt(p.perception),
                &fmt(p.correspondence),
                &fmt(p.overall),
                qa,
            ])
            .expect("write to Vec");
        }
        w.into_inner().expect("flush to Vec")
    }

    /// Every scored video must belong to a known model.
    pub fn check_references(&self, video_models: &BTreeMap<VideoId, ModelId>) -> Result<(), BenchError> {
        match self.predictions.keys().find(|v| !video_models.contains_key(*v)) {
            Some(v) => Err(BenchError::UnmappedVideo(v.clone())),
            None => Ok(()),
        }
    }
}
