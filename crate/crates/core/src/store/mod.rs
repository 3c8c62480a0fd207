//! Flat-file formats for studies and pipeline outputs.
//!
//! A study on disk is either a directory of CSV files
//!
//! ```text
//! prompts.csv   prompt_id,task,text,subtask_count,subtask_descriptors
//! videos.csv    video_id,prompt_id,model_id,split
//! ratings.csv   subject_id,video_id,dimension,raw_score,votes
//! manifest.json {"schema_version":1,"name":..,"annotators_per_sample":..,"subjects":[..]}  (optional)
//! ```
//!
//! or a single JSON document holding the same records. Every file is written
//! to a temporary sibling and renamed into place, so readers never observe a
//! partially written file.

mod outputs;
mod sessions;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::StoreError;
use crate::model::{
    Dimension, PromptRecord, RatingRecord, Study, StudyMetadata, SubjectId, VideoId, VideoRecord,
    Violation,
};

pub use outputs::{
    load_mos, load_scorecards, mos_csv, save_outputs, scorecards_csv, write_json, MOS_CSV_HEADER,
};
pub use sessions::{assign_sessions, SessionAssignment};

pub const SCHEMA_VERSION: u32 = 1;

pub const PROMPTS_FILE: &str = "prompts.csv";
pub const VIDEOS_FILE: &str = "videos.csv";
pub const RATINGS_FILE: &str = "ratings.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const RATINGS_HEADER: [&str; 5] = ["subject_id", "video_id", "dimension", "raw_score", "votes"];
pub const PROMPTS_HEADER: [&str; 5] = [
    "prompt_id",
    "task",
    "text",
    "subtask_count",
    "subtask_descriptors",
];
pub const VIDEOS_HEADER: [&str; 4] = ["video_id", "prompt_id", "model_id", "split"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyFormat {
    /// Directory of CSV files.
    Csv,
    /// Single JSON document.
    Json,
}

impl StudyFormat {
    /// Guesses the format from the path: `.json` files are JSON, everything
    /// else is treated as a CSV directory.
    pub fn detect(path: &Path) -> StudyFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => StudyFormat::Json,
            _ => StudyFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    name: String,
    #[serde(default)]
    annotators_per_sample: Option<u32>,
    #[serde(default)]
    subjects: Vec<SubjectId>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StudyDocument {
    schema_version: u32,
    name: String,
    #[serde(default)]
    annotators_per_sample: Option<u32>,
    #[serde(default)]
    subjects: Vec<SubjectId>,
    prompts: Vec<PromptRecord>,
    videos: Vec<VideoRecord>,
    ratings: Vec<RatingRecord>,
    #[serde(default)]
    votes: Vec<VoteRow>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VoteRow {
    subject_id: SubjectId,
    video_id: VideoId,
    votes: String,
}

/// Loads a study and rejects it if any invariant is violated.
pub fn load_study(path: &Path, format: StudyFormat) -> Result<Study, StoreError> {
    let (study, violations) = load_study_unchecked(path, format)?;
    if let Some(first) = violations.first() {
        return Err(StoreError::Invalid {
            path: path.to_path_buf(),
            count: violations.len(),
            first: first.to_string(),
        });
    }
    Ok(study)
}

/// Loads a study without rejecting invariant violations; they are returned
/// alongside it instead. Malformed files are still errors.
pub fn load_study_unchecked(
    path: &Path,
    format: StudyFormat,
) -> Result<(Study, Vec<Violation>), StoreError> {
    let study = match format {
        StudyFormat::Csv => load_csv_dir(path)?,
        StudyFormat::Json => load_json(path)?,
    };
    let violations = study.validate();
    Ok((study, violations))
}

pub fn save_study(study: &Study, path: &Path, format: StudyFormat) -> Result<(), StoreError> {
    match format {
        StudyFormat::Csv => save_csv_dir(study, path),
        StudyFormat::Json => save_json(study, path),
    }
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to a temporary sibling file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
        f.write_all(bytes).map_err(io_err(&tmp))?;
        f.sync_all().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub(crate) fn parse_err(path: &Path, line: u64, field: &str, message: impl Into<String>) -> StoreError {
    StoreError::Parse {
        path: path.to_path_buf(),
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> StoreError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    parse_err(path, line, "-", e.to_string())
}

/// A CSV line number with its fields keyed by header.
pub(crate) type Row = (u64, BTreeMap<String, String>);

/// Reads a CSV file into rows keyed by header name, checking that every
/// expected column is present.
pub(crate) fn read_rows(path: &Path, expected: &[&str]) -> Result<Vec<Row>, StoreError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(file);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for col in expected {
        if !headers.iter().any(|h| h == col) {
            return Err(parse_err(path, 1, col, "missing column"));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row = headers
            .iter()
            .cloned()
            .zip(rec.iter().map(str::to_string))
            .collect();
        rows.push((line, row));
    }
    Ok(rows)
}

fn field<'a>(
    path: &Path,
    line: u64,
    row: &'a BTreeMap<String, String>,
    name: &str,
) -> Result<&'a str, StoreError> {
    row.get(name)
        .map(String::as_str)
        .ok_or_else(|| parse_err(path, line, name, "missing field"))
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    row: &BTreeMap<String, String>,
    name: &str,
) -> Result<T, StoreError>
where
    T::Err: std::fmt::Display,
{
    let raw = field(path, line, row, name)?;
    raw.trim()
        .parse()
        .map_err(|e: T::Err| parse_err(path, line, name, format!("{raw:?}: {e}")))
}

pub(crate) fn parse_votes(s: &str) -> Result<Vec<bool>, String> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(format!("vote character {other:?} is not 0 or 1")),
        })
        .collect()
}

pub(crate) fn format_votes(votes: &[bool]) -> String {
    votes.iter().map(|&v| if v { '1' } else { '0' }).collect()
}

fn load_csv_dir(dir: &Path) -> Result<Study, StoreError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|source| StoreError::Json {
            path: manifest_path.clone(),
            source,
        })?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(StoreError::SchemaVersion {
                path: manifest_path,
                found: m.schema_version,
                expected: SCHEMA_VERSION,
            });
        }
        Some(m)
    } else {
        None
    };

    let mut study = Study::new(StudyMetadata {
        name: manifest
            .as_ref()
            .map(|m| m.name.clone())
            .unwrap_or_else(|| {
                dir.file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default()
            }),
        annotators_per_sample: manifest.as_ref().and_then(|m| m.annotators_per_sample),
    });
    if let Some(m) = &manifest {
        study.subjects.extend(m.subjects.iter().cloned());
    }

    let path = dir.join(PROMPTS_FILE);
    for (line, row) in read_rows(&path, &PROMPTS_HEADER)? {
        let prompt_id = field(&path, line, &row, "prompt_id")?.to_string();
        let count: usize = parse_field(&path, line, &row, "subtask_count")?;
        let descriptors = field(&path, line, &row, "subtask_descriptors")?;
        let subtasks: Vec<String> = if descriptors.is_empty() {
            Vec::new()
        } else {
            descriptors.split('|').map(str::to_string).collect()
        };
        if subtasks.len() != count {
            return Err(parse_err(
                &path,
                line,
                "subtask_count",
                format!("{count} declared but {} descriptors given", subtasks.len()),
            ));
        }
        if study.prompts.contains_key(&prompt_id) {
            return Err(parse_err(&path, line, "prompt_id", format!("duplicate id {prompt_id:?}")));
        }
        study.add_prompt(PromptRecord {
            prompt_id,
            text: field(&path, line, &row, "text")?.to_string(),
            task: parse_field(&path, line, &row, "task")?,
            subtasks,
        });
    }

    let path = dir.join(VIDEOS_FILE);
    for (line, row) in read_rows(&path, &VIDEOS_HEADER)? {
        let video_id = field(&path, line, &row, "video_id")?.to_string();
        if study.videos.contains_key(&video_id) {
            return Err(parse_err(&path, line, "video_id", format!("duplicate id {video_id:?}")));
        }
        study.add_video(VideoRecord {
            video_id,
            prompt_id: field(&path, line, &row, "prompt_id")?.to_string(),
            model_id: field(&path, line, &row, "model_id")?.to_string(),
            split: parse_field(&path, line, &row, "split")?,
        });
    }

    let path = dir.join(RATINGS_FILE);
    let mut ratings = Vec::new();
    for (line, row) in read_rows(&path, &RATINGS_HEADER)? {
        let subject_id = field(&path, line, &row, "subject_id")?.to_string();
        let video_id = field(&path, line, &row, "video_id")?.to_string();
        let dimension: Dimension = parse_field(&path, line, &row, "dimension")?;
        let raw_score: i64 = parse_field(&path, line, &row, "raw_score")?;
        let votes_raw = field(&path, line, &row, "votes")?;
        if !votes_raw.trim().is_empty() {
            let votes =
                parse_votes(votes_raw).map_err(|m| parse_err(&path, line, "votes", m))?;
            let key = (subject_id.clone(), video_id.clone());
            match study.votes.get(&key) {
                Some(existing) if *existing != votes => {
                    return Err(parse_err(
                        &path,
                        line,
                        "votes",
                        "conflicting votes for the same subject and video",
                    ));
                }
                _ => {
                    study.votes.insert(key, votes);
                }
            }
        }
        study.subjects.insert(subject_id.clone());
        ratings.push(RatingRecord {
            subject_id,
            video_id,
            dimension,
            raw_score,
        });
    }
    study.set_ratings(ratings);
    Ok(study)
}

fn csv_bytes<I, R>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("write to Vec");
    for row in rows {
        w.write_record(row).expect("write to Vec");
    }
    w.into_inner().expect("flush to Vec")
}

/// Serializes ratings in the `ratings.csv` layout. Votes ride on the
/// perception row, or on the correspondence row when the subject has no
/// perception rating for that video.
pub fn ratings_csv(study: &Study) -> Vec<u8> {
    let has_perception: BTreeSet<(&str, &str)> = study
        .ratings_for(Dimension::Perception)
        .map(|r| (r.subject_id.as_str(), r.video_id.as_str()))
        .collect();
    let rows = study.ratings().iter().map(|r| {
        let key = (r.subject_id.clone(), r.video_id.clone());
        let carries_votes = match r.dimension {
            Dimension::Perception => true,
            Dimension::Correspondence => {
                !has_perception.contains(&(r.subject_id.as_str(), r.video_id.as_str()))
            }
        };
        let votes = if carries_votes {
            study.votes.get(&key).map(|v| format_votes(v)).unwrap_or_default()
        } else {
            String::new()
        };
        vec![
            r.subject_id.clone(),
            r.video_id.clone(),
            r.dimension.to_string(),
            r.raw_score.to_string(),
            votes,
        ]
    });
    csv_bytes(&RATINGS_HEADER, rows)
}

pub fn prompts_csv(study: &Study) -> Vec<u8> {
    let rows = study.prompts.values().map(|p| {
        vec![
            p.prompt_id.clone(),
            p.task.to_string(),
            p.text.clone(),
            p.subtasks.len().to_string(),
            p.subtasks.join("|"),
        ]
    });
    csv_bytes(&PROMPTS_HEADER, rows)
}

pub fn videos_csv(study: &Study) -> Vec<u8> {
    let rows = study.videos.values().map(|v| {
        vec![
            v.video_id.clone(),
            v.prompt_id.clone(),
            v.model_id.clone(),
            v.split.to_string(),
        ]
    });
    csv_bytes(&VIDEOS_HEADER, rows)
}

fn save_csv_dir(study: &Study, dir: &Path) -> Result<(), StoreError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        name: study.metadata.name.clone(),
        annotators_per_sample: study.metadata.annotators_per_sample,
        subjects: study.subjects.iter().cloned().collect(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    write_atomic(&dir.join(PROMPTS_FILE), &prompts_csv(study))?;
    write_atomic(&dir.join(VIDEOS_FILE), &videos_csv(study))?;
    write_atomic(&dir.join(RATINGS_FILE), &ratings_csv(study))
}

fn load_json(path: &Path) -> Result<Study, StoreError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let json_err = |source| StoreError::Json {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(json_err)?;
    let found = value
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .unwrap_or(0) as u32;
    if found != SCHEMA_VERSION {
        return Err(StoreError::SchemaVersion {
            path: path.to_path_buf(),
            found,
            expected: SCHEMA_VERSION,
        });
    }
    let doc: StudyDocument = serde_json::from_value(value).map_err(json_err)?;
    let mut study = Study::new(StudyMetadata {
        name: doc.name,
        annotators_per_sample: doc.annotators_per_sample,
    });
    study.subjects.extend(doc.subjects);
    for p in doc.prompts {
        study.add_prompt(p);
    }
    for v in doc.videos {
        study.add_video(v);
    }
    for (i, row) in doc.votes.into_iter().enumerate() {
        let votes = parse_votes(&row.votes).map_err(|m| parse_err(path, i as u64 + 1, "votes", m))?;
        study.votes.insert((row.subject_id, row.video_id), votes);
    }
    study
        .subjects
        .extend(doc.ratings.iter().map(|r| r.subject_id.clone()));
    study.set_ratings(doc.ratings);
    Ok(study)
}

fn save_json(study: &Study, path: &Path) -> Result<(), StoreError> {
    write_atomic(path, &study_json(study))
}

/// The single-document JSON form of a study, as [`save_study`] writes it.
pub fn study_json(study: &Study) -> Vec<u8> {
    let doc = StudyDocument {
        schema_version: SCHEMA_VERSION,
        name: study.metadata.name.clone(),
        annotators_per_sample: study.metadata.annotators_per_sample,
        subjects: study.subjects.iter().cloned().collect(),
        prompts: study.prompts.values().cloned().collect(),
        videos: study.videos.values().cloned().collect(),
        ratings: study.ratings().to_vec(),
        votes: study
            .votes
            .iter()
            .map(|((s, v), votes)| VoteRow {
                subject_id: s.clone(),
                video_id: v.clone(),
                votes: format_votes(votes),
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("study serializes");
    bytes.push(b'\n');
    bytes
}

/// Default location of a study's CSV files inside a store directory.
pub fn study_dir(store: &Path, study_id: &str) -> PathBuf {
    store.join(study_id)
}
