//! Ground-truth yes/no answers from per-annotator subtask votes.
//!
//! Each subtask is decided by strict majority; a video counts as correct only
//! when every one of its subtasks is.

use serde::{Deserialize, Serialize};

use crate::error::QaError;

/// Votes for one video: one vector per subtask, one entry per voter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteSet {
    pub video_id: String,
    pub votes: Vec<Vec<bool>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Majority {
    pub answer: bool,
    /// Equal numbers of yes and no; resolved to `false`.
    pub tie: bool,
}

/// Strict majority. An exact tie resolves to `false`.
pub fn majority_vote(votes: &[bool]) -> Result<Majority, QaError> {
    if votes.is_empty() {
        return Err(QaError::EmptyVotes);
    }
    let yes = votes.iter().filter(|&&v| v).count();
    let no = votes.len() - yes;
    Ok(Majority {
        answer: yes > no,
        tie: yes == no,
    })
}

/// Subtask majorities joined by logical AND. Subtasks without any vote are
/// skipped; at least one must have votes.
pub fn aggregate_video(set: &VoteSet) -> Result<Majority, QaError> {
    let mut any = false;
    let mut answer = true;
    let mut tie = false;
    for votes in set.votes.iter().filter(|v| !v.is_empty()) {
        any = true;
        let m = majority_vote(votes)?;
        answer &= m.answer;
        tie |= m.tie;
    }
    if !any {
        return Err(QaError::EmptyVoteSet(set.video_id.clone()));
    }
    if tie {
        tracing::debug!(video = %set.video_id, "tied subtask vote resolved to no");
    }
    Ok(Majority { answer, tie })
}
