use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{csv_bytes, io_err, write_atomic};
use crate::error::StoreError;
use crate::model::{ModelScorecard, MosRecord, TaskScores};

pub const MOS_CSV_HEADER: [&str; 7] = [
    "video_id",
    "perception_mos",
    "correspondence_mos",
    "overall_avg",
    "qa_answer",
    "perception_count",
    "correspondence_count",
];

const SCORECARD_CSV_HEADER: [&str; 5] = [
    "rank",
    "model_id",
    "mean_perception",
    "mean_correspondence",
    "qa_accuracy_pct",
];

pub(crate) fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn fixed(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_default()
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), StoreError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn sorted_mos(mos: &[MosRecord]) -> Vec<MosRecord> {
    let mut out: Vec<MosRecord> = mos
        .iter()
        .map(|m| MosRecord {
            perception_mos: m.perception_mos.map(round4),
            correspondence_mos: m.correspondence_mos.map(round4),
            overall_avg: m.overall_avg.map(round4),
            ..m.clone()
        })
        .collect();
    out.sort_by(|a, b| a.video_id.cmp(&b.video_id));
    out
}

fn sorted_scorecards(cards: &[ModelScorecard]) -> Vec<ModelScorecard> {
    let r = |t: &TaskScores| TaskScores {
        mean_perception: t.mean_perception.map(round4),
        mean_correspondence: t.mean_correspondence.map(round4),
        qa_accuracy: t.qa_accuracy.map(round4),
    };
    let mut out: Vec<ModelScorecard> = cards
        .iter()
        .map(|c| ModelScorecard {
            mean_perception: c.mean_perception.map(round4),
            mean_correspondence: c.mean_correspondence.map(round4),
            qa_accuracy: c.qa_accuracy.map(round4),
            per_task: c.per_task.iter().map(|(k, v)| (*k, r(v))).collect(),
            ..c.clone()
        })
        .collect();
    out.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.model_id.cmp(&b.model_id)));
    out
}

/// `mos.csv`: one row per video, scores at 4 decimals.
pub fn mos_csv(mos: &[MosRecord]) -> Vec<u8> {
    let rows = sorted_mos(mos).into_iter().map(|m| {
        vec![
            m.video_id,
            fixed(m.perception_mos, 4),
            fixed(m.correspondence_mos, 4),
            fixed(m.overall_avg, 4),
            m.qa_answer
                .map(|q| if q { "1" } else { "0" }.to_string())
                .unwrap_or_default(),
            m.contributing_counts.perception.to_string(),
            m.contributing_counts.correspondence.to_string(),
        ]
    });
    csv_bytes(&MOS_CSV_HEADER, rows)
}

/// `scorecards.csv`: leaderboard table export at 2 decimals.
pub fn scorecards_csv(cards: &[ModelScorecard]) -> Vec<u8> {
    let rows = sorted_scorecards(cards).into_iter().map(|c| {
        vec![
            c.rank.to_string(),
            c.model_id,
            fixed(c.mean_perception, 2),
            fixed(c.mean_correspondence, 2),
            fixed(c.qa_accuracy.map(|a| a * 100.0), 2),
        ]
    });
    csv_bytes(&SCORECARD_CSV_HEADER, rows)
}

/// Writes `mos.json`, `mos.csv`, `scorecards.json` and `scorecards.csv`
/// into `dir`. Identical input always produces identical bytes.
pub fn save_outputs(
    mos: &[MosRecord],
    scorecards: &[ModelScorecard],
    dir: &Path,
) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_json(&dir.join("mos.json"), &sorted_mos(mos))?;
    write_atomic(&dir.join("mos.csv"), &mos_csv(mos))?;
    write_json(&dir.join("scorecards.json"), &sorted_scorecards(scorecards))?;
    write_atomic(&dir.join("scorecards.csv"), &scorecards_csv(scorecards))
}

pub fn load_mos(path: &Path) -> Result<Vec<MosRecord>, StoreError> {
    read_json(path)
}

pub fn load_scorecards(path: &Path) -> Result<Vec<ModelScorecard>, StoreError> {
    read_json(path)
}
