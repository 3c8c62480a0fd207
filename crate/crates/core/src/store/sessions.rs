use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::AssignError;
use crate::model::{PromptId, SubjectId, VideoId, VideoRecord};

/// One subject's worklist within one session block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionAssignment {
    pub session_id: String,
    /// Index of the video block this worklist belongs to.
    pub block: usize,
    pub subject_id: SubjectId,
    pub video_ids: Vec<VideoId>,
}

/// Distributes videos over subjects so that every video is seen by exactly
/// `annotators_per_sample` distinct subjects and subject loads differ by at
/// most one video.
///
/// Videos are ordered by shuffled prompt group (videos of one prompt stay
/// adjacent) and cut into `sessions` contiguous blocks. Annotation slots are
/// then dealt to the shuffled subject list round-robin: the video at
/// position `v` goes to subjects `v·a, v·a+1, …, v·a+a-1 (mod S)`.
pub fn assign_sessions(
    videos: &[VideoRecord],
    subjects: &[SubjectId],
    annotators_per_sample: usize,
    sessions: usize,
    seed: u64,
) -> Result<Vec<SessionAssignment>, AssignError> {
    if annotators_per_sample == 0 || sessions == 0 {
        return Err(AssignError::ZeroParameter);
    }
    let mut subjects: Vec<SubjectId> = subjects.to_vec();
    subjects.sort();
    subjects.dedup();
    if subjects.len() < annotators_per_sample {
        return Err(AssignError::TooFewSubjects {
            subjects: subjects.len(),
            required: annotators_per_sample,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut groups: BTreeMap<&PromptId, Vec<&VideoId>> = BTreeMap::new();
    for v in videos {
        groups.entry(&v.prompt_id).or_default().push(&v.video_id);
    }
    let mut groups: Vec<Vec<&VideoId>> = groups
        .into_values()
        .map(|mut g| {
            g.sort();
            g.dedup();
            g
        })
        .collect();
    groups.shuffle(&mut rng);
    let order: Vec<&VideoId> = groups.into_iter().flatten().collect();
    subjects.shuffle(&mut rng);

    let n_videos = order.len();
    let n_subjects = subjects.len();
    let mut worklists: BTreeMap<(usize, usize), Vec<VideoId>> = BTreeMap::new();
    for (pos, video) in order.iter().enumerate() {
        let block = pos * sessions / n_videos;
        for t in 0..annotators_per_sample {
            let subject = (pos * annotators_per_sample + t) % n_subjects;
            worklists
                .entry((block, subject))
                .or_default()
                .push((*video).clone());
        }
    }

    Ok(worklists
        .into_iter()
        .map(|((block, subject), video_ids)| {
            let subject_id = subjects[subject].clone();
            SessionAssignment {
                session_id: format!("s{block:03}-{subject_id}"),
                block,
                subject_id,
                video_ids,
            }
        })
        .collect())
}
