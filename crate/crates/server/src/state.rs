//! Study and session bookkeeping behind the HTTP layer.
//!
//! Each study lives in `store/{study_id}/` as a CSV study directory plus a
//! `sessions.json` file with the worklists and their timestamps. Completion
//! is never stored separately: a video counts as done for a session once
//! its subject has a rating for it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use mosbench_core::error::StoreError;
use mosbench_core::model::{Dimension, RatingRecord, Study, StudyMetadata, SubjectId, VideoId, MAX_SCORE, MIN_SCORE};
use mosbench_core::store::{
    assign_sessions, load_study, ratings_csv, save_study, study_dir, study_json, write_json, StudyFormat,
    RATINGS_FILE,
};
use serde::{Deserialize, Serialize};

use crate::api::{
    Counts, CreateStudy, ExportFormat, NextTask, Progress, PromptView, RatingAccepted, RatingSubmission,
    SessionSummary, StudyCreated, VideoView,
};
use crate::error::ApiError;

pub const SESSIONS_FILE: &str = "sessions.json";
const SESSIONS_SCHEMA: u32 = 1;
/// Videos shown together, all from one prompt.
pub const GROUP_SIZE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// Id local to the study; the public id is `{study_id}.{session_id}`.
    pub session_id: String,
    pub block: usize,
    pub subject_id: SubjectId,
    pub video_ids: Vec<VideoId>,
    pub opened_at: Option<u64>,
    pub closed_at: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SessionFile {
    schema_version: u32,
    pretest: bool,
    video_urls: BTreeMap<VideoId, String>,
    sessions: Vec<SessionRecord>,
}

#[derive(Debug, Clone)]
struct StudyEntry {
    dir: PathBuf,
    study: Study,
    pretest: bool,
    video_urls: BTreeMap<VideoId, String>,
    sessions: BTreeMap<String, SessionRecord>,
}

impl StudyEntry {
    fn session_file(&self) -> SessionFile {
        SessionFile {
            schema_version: SESSIONS_SCHEMA,
            pretest: self.pretest,
            video_urls: self.video_urls.clone(),
            sessions: self.sessions.values().cloned().collect(),
        }
    }

    fn save_sessions(&self) -> Result<(), StoreError> {
        write_json(&self.dir.join(SESSIONS_FILE), &self.session_file())
    }

    fn is_rated(&self, subject: &str, video: &str) -> bool {
        let ratings = self.study.ratings();
        let at = ratings.partition_point(|r| (r.subject_id.as_str(), r.video_id.as_str()) < (subject, video));
        ratings
            .get(at)
            .is_some_and(|r| r.subject_id == subject && r.video_id == video)
    }

    fn done(&self, session: &SessionRecord) -> Vec<bool> {
        session
            .video_ids
            .iter()
            .map(|v| self.is_rated(&session.subject_id, v))
            .collect()
    }

    fn counts(&self, session: &SessionRecord) -> Counts {
        Counts {
            completed: self.done(session).iter().filter(|d| **d).count(),
            total: session.video_ids.len(),
        }
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn valid_study_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 64
        && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// Splits a public session id at its first dot.
fn split_session_id(id: &str) -> Option<(&str, &str)> {
    id.split_once('.')
}

/// All studies served from one store directory.
#[derive(Debug)]
pub struct Registry {
    store: PathBuf,
    studies: BTreeMap<String, StudyEntry>,
}

impl Registry {
    /// Opens a store directory, loading every study that has a session file.
    pub fn open(store: &Path) -> Result<Registry, StoreError> {
        fs::create_dir_all(store).map_err(|source| StoreError::Io {
            path: store.to_path_buf(),
            source,
        })?;
        let mut studies = BTreeMap::new();
        let listing = fs::read_dir(store).map_err(|source| StoreError::Io {
            path: store.to_path_buf(),
            source,
        })?;
        for item in listing {
            let item = item.map_err(|source| StoreError::Io {
                path: store.to_path_buf(),
                source,
            })?;
            let dir = item.path();
            let sessions_path = dir.join(SESSIONS_FILE);
            let Some(id) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
                continue;
            };
            if !valid_study_id(&id) || !sessions_path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&sessions_path).map_err(|source| StoreError::Io {
                path: sessions_path.clone(),
                source,
            })?;
            let file: SessionFile = serde_json::from_str(&text).map_err(|source| StoreError::Json {
                path: sessions_path.clone(),
                source,
            })?;
            if file.schema_version != SESSIONS_SCHEMA {
                return Err(StoreError::SchemaVersion {
                    path: sessions_path,
                    found: file.schema_version,
                    expected: SESSIONS_SCHEMA,
                });
            }
            let study = load_study(&dir, StudyFormat::Csv)?;
            tracing::info!(study = %id, sessions = file.sessions.len(), "loaded study");
            studies.insert(
                id,
                StudyEntry {
                    dir,
                    study,
                    pretest: file.pretest,
                    video_urls: file.video_urls,
                    sessions: file.sessions.into_iter().map(|s| (s.session_id.clone(), s)).collect(),
                },
            );
        }
        Ok(Registry {
            store: store.to_path_buf(),
            studies,
        })
    }

    pub fn study_ids(&self) -> impl Iterator<Item = &str> {
        self.studies.keys().map(String::as_str)
    }

    pub fn create_study(&mut self, req: CreateStudy) -> Result<StudyCreated, ApiError> {
        if !valid_study_id(&req.study_id) {
            return Err(ApiError::InvalidStudy(format!(
                "study_id {:?} must be 1-64 characters from [A-Za-z0-9_-]",
                req.study_id
            )));
        }
        if self.studies.contains_key(&req.study_id) {
            return Err(ApiError::StudyExists(req.study_id));
        }
        if req.videos.is_empty() {
            return Err(ApiError::InvalidStudy("no videos".into()));
        }
        let mut study = Study::new(StudyMetadata {
            name: req.name.clone(),
            annotators_per_sample: Some(req.annotators_per_sample as u32),
        });
        for p in &req.prompts {
            if study.prompts.contains_key(&p.prompt_id) {
                return Err(ApiError::InvalidStudy(format!("duplicate prompt {}", p.prompt_id)));
            }
            study.add_prompt(p.clone());
        }
        for v in &req.videos {
            if study.videos.contains_key(&v.video_id) {
                return Err(ApiError::InvalidStudy(format!("duplicate video {}", v.video_id)));
            }
            study.add_video(v.clone());
        }
        study.subjects.extend(req.subjects.iter().cloned());
        if let Some(v) = study.validate().first() {
            return Err(ApiError::InvalidStudy(v.to_string()));
        }
        if let Some(v) = req.video_urls.keys().find(|v| !study.videos.contains_key(*v)) {
            return Err(ApiError::InvalidStudy(format!("url given for unknown video {v}")));
        }
        let assignments = assign_sessions(
            &req.videos,
            &req.subjects,
            req.annotators_per_sample,
            req.sessions,
            req.seed,
        )?;

        let entry = StudyEntry {
            dir: study_dir(&self.store, &req.study_id),
            study,
            pretest: req.pretest,
            video_urls: req.video_urls,
            sessions: assignments
                .into_iter()
                .map(|a| {
                    (
                        a.session_id.clone(),
                        SessionRecord {
                            session_id: a.session_id,
                            block: a.block,
                            subject_id: a.subject_id,
                            video_ids: a.video_ids,
                            opened_at: None,
                            closed_at: None,
                        },
                    )
                })
                .collect(),
        };
        save_study(&entry.study, &entry.dir, StudyFormat::Csv)?;
        entry.save_sessions()?;
        let created = StudyCreated {
            study_id: req.study_id.clone(),
            sessions: entry
                .sessions
                .values()
                .map(|s| SessionSummary {
                    session_id: format!("{}.{}", req.study_id, s.session_id),
                    subject_id: s.subject_id.clone(),
                    block: s.block,
                    total: s.video_ids.len(),
                })
                .collect(),
        };
        tracing::info!(study = %req.study_id, sessions = created.sessions.len(), "created study");
        self.studies.insert(req.study_id, entry);
        Ok(created)
    }

    fn locate(&self, id: &str) -> Result<(&StudyEntry, &SessionRecord), ApiError> {
        let unknown = || ApiError::UnknownSession(id.to_string());
        let (study, local) = split_session_id(id).ok_or_else(unknown)?;
        let entry = self.studies.get(study).ok_or_else(unknown)?;
        let session = entry.sessions.get(local).ok_or_else(unknown)?;
        Ok((entry, session))
    }

    /// Next prompt group of the session. Repeated calls return the same
    /// payload until something is submitted; the first call stamps `opened_at`.
    pub fn next_task(&mut self, id: &str) -> Result<NextTask, ApiError> {
        let (entry, session) = self.locate(id)?;
        let done = entry.done(session);
        let progress = entry.counts(session);
        let Some(first) = done.iter().position(|d| !d) else {
            return Ok(NextTask::Complete {
                session_id: id.to_string(),
                progress,
            });
        };
        let prompt_of = |v: &str| entry.study.videos.get(v).map(|r| r.prompt_id.as_str());
        let prompt_id = prompt_of(&session.video_ids[first]).expect("assigned videos exist");
        let prompt = &entry.study.prompts[prompt_id];
        let videos = session
            .video_ids
            .iter()
            .zip(&done)
            .filter(|(v, d)| !**d && prompt_of(v) == Some(prompt_id))
            .take(GROUP_SIZE)
            .map(|(v, _)| VideoView {
                video_id: v.clone(),
                url: entry.video_urls.get(v).cloned().unwrap_or_else(|| v.clone()),
            })
            .collect();
        let task = NextTask::Task {
            session_id: id.to_string(),
            pretest: entry.pretest,
            prompt: PromptView {
                prompt_id: prompt.prompt_id.clone(),
                text: prompt.text.clone(),
                task: prompt.task,
                subtasks: prompt.subtasks.clone(),
            },
            videos,
            dimensions: Dimension::ALL.to_vec(),
            progress,
        };
        if session.opened_at.is_none() {
            let (study, local) = split_session_id(id).expect("located above");
            let entry = self.studies.get_mut(study).expect("located above");
            let mut updated = entry.clone();
            updated.sessions.get_mut(local).expect("located above").opened_at = Some(now());
            updated.save_sessions()?;
            *entry = updated;
        }
        Ok(task)
    }

    /// Records both ratings and the votes for one video, all or nothing.
    pub fn submit(&mut self, id: &str, sub: RatingSubmission) -> Result<RatingAccepted, ApiError> {
        let (entry, session) = self.locate(id)?;
        let video_id = sub.video_id.ok_or(ApiError::MissingField("video_id"))?;
        if !session.video_ids.contains(&video_id) {
            return Err(ApiError::UnknownVideo {
                session: id.to_string(),
                video: video_id,
            });
        }
        if entry.is_rated(&session.subject_id, &video_id) {
            return Err(ApiError::Duplicate(video_id));
        }
        let mut scores = Vec::with_capacity(2);
        for (field, value, dimension) in [
            ("perception", sub.perception, Dimension::Perception),
            ("correspondence", sub.correspondence, Dimension::Correspondence),
        ] {
            let value = value.ok_or(ApiError::MissingField(field))?;
            if !(MIN_SCORE..=MAX_SCORE).contains(&value) {
                return Err(ApiError::OutOfRange { field, value });
            }
            scores.push((dimension, value));
        }
        let votes = sub.votes.ok_or(ApiError::MissingField("votes"))?;
        let expected = entry
            .study
            .prompt_of(&video_id)
            .map(|p| p.subtasks.len())
            .unwrap_or(0);
        if votes.len() != expected {
            return Err(ApiError::VoteCount {
                expected,
                got: votes.len(),
            });
        }

        let subject = session.subject_id.clone();
        let local = session.session_id.clone();
        let mut updated = entry.clone();
        for (dimension, raw_score) in scores {
            updated.study.add_rating(RatingRecord {
                subject_id: subject.clone(),
                video_id: video_id.clone(),
                dimension,
                raw_score,
            });
        }
        updated.study.set_votes(&subject, &video_id, votes);
        mosbench_core::store::write_atomic(&updated.dir.join(RATINGS_FILE), &ratings_csv(&updated.study))?;

        let session = &updated.sessions[&local];
        let progress = updated.counts(session);
        if progress.completed == progress.total && session.closed_at.is_none() {
            let stamp = now();
            let s = updated.sessions.get_mut(&local).expect("present");
            s.opened_at.get_or_insert(stamp);
            s.closed_at = Some(stamp);
            // Ratings are already durable; a failed timestamp write only
            // loses the stamp.
            if let Err(e) = updated.save_sessions() {
                tracing::warn!(session = %id, error = %e, "could not record session close");
            }
        }
        let study_id = split_session_id(id).expect("located above").0;
        self.studies.insert(study_id.to_string(), updated);
        tracing::debug!(session = %id, video = %video_id, "rating recorded");
        Ok(RatingAccepted {
            session_id: id.to_string(),
            video_id,
            progress,
        })
    }

    pub fn progress(&self, id: &str) -> Result<Progress, ApiError> {
        let (entry, session) = self.locate(id)?;
        let done = entry.done(session);
        let completed = done.iter().filter(|d| **d).count();
        Ok(Progress {
            session_id: id.to_string(),
            subject_id: session.subject_id.clone(),
            completed,
            total: session.video_ids.len(),
            cursor: done.iter().position(|d| !d).unwrap_or(done.len()),
            pretest: entry.pretest,
            opened_at: session.opened_at,
            closed_at: session.closed_at,
        })
    }

    /// The ratings file (CSV) or the whole study as one JSON document.
    pub fn export(&self, study_id: &str, format: ExportFormat) -> Result<Vec<u8>, ApiError> {
        let entry = self
            .studies
            .get(study_id)
            .ok_or_else(|| ApiError::UnknownStudy(study_id.to_string()))?;
        Ok(match format {
            ExportFormat::Csv => ratings_csv(&entry.study),
            ExportFormat::Json => study_json(&entry.study),
        })
    }
}
