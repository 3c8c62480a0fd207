//! Request and response bodies. Field names are part of the wire contract.

use std::collections::BTreeMap;

use mosbench_core::model::{Dimension, PromptId, PromptRecord, SubjectId, Task, VideoId, VideoRecord};
use serde::{Deserialize, Serialize};

/// `POST /studies`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateStudy {
    pub study_id: String,
    pub name: String,
    pub prompts: Vec<PromptRecord>,
    pub videos: Vec<VideoRecord>,
    pub subjects: Vec<SubjectId>,
    pub annotators_per_sample: usize,
    /// Number of contiguous video blocks; each subject gets one session per block.
    pub sessions: usize,
    #[serde(default)]
    pub seed: u64,
    /// Where the client fetches each video. Defaults to the video id.
    #[serde(default)]
    pub video_urls: BTreeMap<VideoId, String>,
    /// Marks every session of the study as a qualification pre-test.
    #[serde(default)]
    pub pretest: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub subject_id: SubjectId,
    pub block: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyCreated {
    pub study_id: String,
    pub sessions: Vec<SessionSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub completed: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptView {
    pub prompt_id: PromptId,
    pub text: String,
    pub task: Task,
    pub subtasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoView {
    pub video_id: VideoId,
    pub url: String,
}

/// `GET /sessions/{id}/next`: either the next prompt group or a completion signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NextTask {
    Task {
        session_id: String,
        pretest: bool,
        prompt: PromptView,
        videos: Vec<VideoView>,
        dimensions: Vec<Dimension>,
        progress: Counts,
    },
    Complete {
        session_id: String,
        progress: Counts,
    },
}

/// `POST /sessions/{id}/ratings`. Every field is required; absence is
/// reported per field rather than as a parse failure.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatingSubmission {
    pub video_id: Option<VideoId>,
    pub perception: Option<i64>,
    pub correspondence: Option<i64>,
    pub votes: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingAccepted {
    pub session_id: String,
    pub video_id: VideoId,
    pub progress: Counts,
}

/// `GET /sessions/{id}/progress`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub session_id: String,
    pub subject_id: SubjectId,
    pub completed: usize,
    pub total: usize,
    /// Position of the first unrated video in the worklist.
    pub cursor: usize,
    pub pretest: bool,
    /// Unix seconds of the first task fetch.
    pub opened_at: Option<u64>,
    /// Unix seconds of the final submission.
    pub closed_at: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub format: ExportFormat,
}
