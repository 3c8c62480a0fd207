//! Shared domain types: prompts, videos, ratings and the study container,
//! plus the processed per-video and per-model outputs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ParseEnumError;

pub type PromptId = String;
pub type VideoId = String;
pub type ModelId = String;
pub type SubjectId = String;

/// The twenty prompt categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Object,
    Color,
    Counting,
    Texture,
    Position,
    Hoi,
    Face,
    Emotion,
    Human,
    Ocr,
    Scene,
    Style,
    Shapes,
    View,
    WorldKnowledge,
    LinguisticStructure,
    Imagination,
    MotionDirection,
    EventOrder,
    Complex,
}

impl Task {
    pub const ALL: [Task; 20] = [
        Task::Object,
        Task::Color,
        Task::Counting,
        Task::Texture,
        Task::Position,
        Task::Hoi,
        Task::Face,
        Task::Emotion,
        Task::Human,
        Task::Ocr,
        Task::Scene,
        Task::Style,
        Task::Shapes,
        Task::View,
        Task::WorldKnowledge,
        Task::LinguisticStructure,
        Task::Imagination,
        Task::MotionDirection,
        Task::EventOrder,
        Task::Complex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Object => "object",
            Task::Color => "color",
            Task::Counting => "counting",
            Task::Texture => "texture",
            Task::Position => "position",
            Task::Hoi => "hoi",
            Task::Face => "face",
            Task::Emotion => "emotion",
            Task::Human => "human",
            Task::Ocr => "ocr",
            Task::Scene => "scene",
            Task::Style => "style",
            Task::Shapes => "shapes",
            Task::View => "view",
            Task::WorldKnowledge => "world_knowledge",
            Task::LinguisticStructure => "linguistic_structure",
            Task::Imagination => "imagination",
            Task::MotionDirection => "motion_direction",
            Task::EventOrder => "event_order",
            Task::Complex => "complex",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = ParseEnumError;

    /// Accepts the snake_case name, case-insensitively, with spaces or
    /// hyphens in place of underscores ("World Knowledge", "HOI").
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() })
            .collect();
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| ParseEnumError::new("task", s))
    }
}

/// Rating dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    Perception,
    Correspondence,
}

impl Dimension {
    pub const ALL: [Dimension; 2] = [Dimension::Perception, Dimension::Correspondence];

    pub fn as_str(self) -> &'static str {
        match self {
            Dimension::Perception => "perception",
            Dimension::Correspondence => "correspondence",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perception" => Ok(Dimension::Perception),
            "correspondence" => Ok(Dimension::Correspondence),
            _ => Err(ParseEnumError::new("dimension", s)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = ParseEnumError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(ParseEnumError::new("split", s)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub prompt_id: PromptId,
    pub text: String,
    pub task: Task,
    /// One descriptor per yes/no question. More than one only for
    /// [`Task::Complex`].
    pub subtasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VideoRecord {
    pub video_id: VideoId,
    pub prompt_id: PromptId,
    pub model_id: ModelId,
    pub split: Split,
}

/// One annotator's Likert score for one video on one dimension.
///
/// `raw_score` is kept as a plain integer so that out-of-range input can be
/// represented and reported by [`Study::validate`] instead of being lost at
/// parse time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RatingRecord {
    pub subject_id: SubjectId,
    pub video_id: VideoId,
    pub dimension: Dimension,
    pub raw_score: i64,
}

pub const MIN_SCORE: i64 = 1;
pub const MAX_SCORE: i64 = 5;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyMetadata {
    pub name: String,
    pub annotators_per_sample: Option<u32>,
}

/// The annotation corpus.
///
/// Yes/no subtask votes are keyed by `(subject, video)`: one vote vector per
/// annotator per video, shared by both rating dimensions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Study {
    pub metadata: StudyMetadata,
    pub prompts: BTreeMap<PromptId, PromptRecord>,
    pub videos: BTreeMap<VideoId, VideoRecord>,
    pub subjects: BTreeSet<SubjectId>,
    ratings: Vec<RatingRecord>,
    pub votes: BTreeMap<(SubjectId, VideoId), Vec<bool>>,
}

/// A broken invariant found by [`Study::validate`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    /// Offending record, e.g. `rating(s1, v2, perception)`.
    pub record: String,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {:?}: {}", self.record, self.rule, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    EmptySubtasks,
    SubtasksOnlyForComplex,
    MissingPrompt,
    DuplicatePromptModel,
    ScoreOutOfRange,
    MissingVideo,
    MissingSubject,
    DuplicateRating,
    VoteCountMismatch,
    VotesWithoutRating,
}

impl Study {
    pub fn new(metadata: StudyMetadata) -> Self {
        Study {
            metadata,
            ..Default::default()
        }
    }

    pub fn ratings(&self) -> &[RatingRecord] {
        &self.ratings
    }

    /// Ratings are kept sorted so that insertion order never shows through.
    pub fn set_ratings(&mut self, mut ratings: Vec<RatingRecord>) {
        ratings.sort();
        self.ratings = ratings;
    }

    pub fn add_prompt(&mut self, prompt: PromptRecord) {
        self.prompts.insert(prompt.prompt_id.clone(), prompt);
    }

    pub fn add_video(&mut self, video: VideoRecord) {
        self.videos.insert(video.video_id.clone(), video);
    }

    /// Adds a rating, registering its subject.
    pub fn add_rating(&mut self, rating: RatingRecord) {
        self.subjects.insert(rating.subject_id.clone());
        let pos = self.ratings.partition_point(|r| r < &rating);
        self.ratings.insert(pos, rating);
    }

    pub fn set_votes(&mut self, subject: &str, video: &str, votes: Vec<bool>) {
        self.votes
            .insert((subject.to_string(), video.to_string()), votes);
    }

    pub fn prompt_of(&self, video_id: &str) -> Option<&PromptRecord> {
        self.videos
            .get(video_id)
            .and_then(|v| self.prompts.get(&v.prompt_id))
    }

    pub fn model_of(&self, video_id: &str) -> Option<&ModelId> {
        self.videos.get(video_id).map(|v| &v.model_id)
    }

    /// `video → model` map for benchmarking.
    pub fn video_models(&self) -> BTreeMap<VideoId, ModelId> {
        self.videos
            .values()
            .map(|v| (v.video_id.clone(), v.model_id.clone()))
            .collect()
    }

    pub fn ratings_for(&self, dimension: Dimension) -> impl Iterator<Item = &RatingRecord> {
        self.ratings.iter().filter(move |r| r.dimension == dimension)
    }

    /// Checks every type invariant. The result is sorted, so it does not
    /// depend on the order records were inserted in.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();

        for p in self.prompts.values() {
            let record = format!("prompt({})", p.prompt_id);
            if p.subtasks.is_empty() {
                out.push(Violation {
                    record,
                    rule: Rule::EmptySubtasks,
                    detail: "prompt has no subtasks".into(),
                });
            } else if p.subtasks.len() > 1 && p.task != Task::Complex {
                out.push(Violation {
                    record,
                    rule: Rule::SubtasksOnlyForComplex,
                    detail: format!(
                        "task {} has {} subtasks; only complex prompts may have more than one",
                        p.task,
                        p.subtasks.len()
                    ),
                });
            }
        }

        let mut pairs: BTreeMap<(&str, &str), &str> = BTreeMap::new();
        for v in self.videos.values() {
            let record = format!("video({})", v.video_id);
            if !self.prompts.contains_key(&v.prompt_id) {
                out.push(Violation {
                    record: record.clone(),
                    rule: Rule::MissingPrompt,
                    detail: format!("prompt {} does not exist", v.prompt_id),
                });
            }
            if let Some(first) = pairs.insert((&v.prompt_id, &v.model_id), &v.video_id) {
                out.push(Violation {
                    record,
                    rule: Rule::DuplicatePromptModel,
                    detail: format!(
                        "prompt {} / model {} already used by video {first}",
                        v.prompt_id, v.model_id
                    ),
                });
            }
        }

        let mut seen = BTreeSet::new();
        for r in &self.ratings {
            let record = format!("rating({}, {}, {})", r.subject_id, r.video_id, r.dimension);
            if !(MIN_SCORE..=MAX_SCORE).contains(&r.raw_score) {
                out.push(Violation {
                    record: record.clone(),
                    rule: Rule::ScoreOutOfRange,
                    detail: format!("raw_score {} not in [{MIN_SCORE}, {MAX_SCORE}]", r.raw_score),
                });
            }
            if !self.videos.contains_key(&r.video_id) {
                out.push(Violation {
                    record: record.clone(),
                    rule: Rule::MissingVideo,
                    detail: format!("video {} does not exist", r.video_id),
                });
            }
            if !self.subjects.contains(&r.subject_id) {
                out.push(Violation {
                    record: record.clone(),
                    rule: Rule::MissingSubject,
                    detail: format!("subject {} does not exist", r.subject_id),
                });
            }
            if !seen.insert((&r.subject_id, &r.video_id, r.dimension)) {
                out.push(Violation {
                    record,
                    rule: Rule::DuplicateRating,
                    detail: "subject rated this video and dimension more than once".into(),
                });
            }
        }

        let rated: BTreeSet<(&str, &str)> = self
            .ratings
            .iter()
            .map(|r| (r.subject_id.as_str(), r.video_id.as_str()))
            .collect();
        for ((subject, video), votes) in &self.votes {
            let record = format!("votes({subject}, {video})");
            if !rated.contains(&(subject.as_str(), video.as_str())) {
                out.push(Violation {
                    record: record.clone(),
                    rule: Rule::VotesWithoutRating,
                    detail: "votes recorded for a video the subject did not rate".into(),
                });
            }
            if let Some(prompt) = self.prompt_of(video) {
                if votes.len() != prompt.subtasks.len() {
                    out.push(Violation {
                        record,
                        rule: Rule::VoteCountMismatch,
                        detail: format!(
                            "{} votes for {} subtasks",
                            votes.len(),
                            prompt.subtasks.len()
                        ),
                    });
                }
            }
        }

        out.sort();
        out
    }
}

/// Retained-rating counts per dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCounts {
    pub perception: usize,
    pub correspondence: usize,
}

impl DimensionCounts {
    pub fn get(&self, d: Dimension) -> usize {
        match d {
            Dimension::Perception => self.perception,
            Dimension::Correspondence => self.correspondence,
        }
    }

    pub fn get_mut(&mut self, d: Dimension) -> &mut usize {
        match d {
            Dimension::Perception => &mut self.perception,
            Dimension::Correspondence => &mut self.correspondence,
        }
    }
}

/// Processed outputs for one video.
///
/// A dimension with no retained raters has no MOS; such a record is
/// incomplete and carries no `overall_avg`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosRecord {
    pub video_id: VideoId,
    pub perception_mos: Option<f64>,
    pub correspondence_mos: Option<f64>,
    pub overall_avg: Option<f64>,
    pub qa_answer: Option<bool>,
    pub contributing_counts: DimensionCounts,
}

impl MosRecord {
    pub fn mos(&self, d: Dimension) -> Option<f64> {
        match d {
            Dimension::Perception => self.perception_mos,
            Dimension::Correspondence => self.correspondence_mos,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.perception_mos.is_some() && self.correspondence_mos.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub mean_perception: Option<f64>,
    pub mean_correspondence: Option<f64>,
    pub qa_accuracy: Option<f64>,
}

/// Per-generation-model aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScorecard {
    pub model_id: ModelId,
    pub mean_perception: Option<f64>,
    pub mean_correspondence: Option<f64>,
    pub qa_accuracy: Option<f64>,
    pub per_task: BTreeMap<Task, TaskScores>,
    pub rank: usize,
}

#[cfg(test)]
pub(crate) use tests::two_video_study;
