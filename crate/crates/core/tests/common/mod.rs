//! Synthetic studies shared by the integration tests.

#![allow(dead_code)]

pub mod oracle;

use mosbench_core::model::{Dimension, PromptRecord, RatingRecord, Split, Study, StudyMetadata, Task, VideoRecord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct SynthSpec {
    pub models: usize,
    pub prompts: usize,
    pub subjects: usize,
    /// Subjects that answer at random.
    pub erratic: usize,
    /// Chance that a subject skips a video.
    pub skip: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            models: 6,
            prompts: 8,
            subjects: 24,
            erratic: 2,
            skip: 0.1,
            seed: 1,
        }
    }
}

pub fn model_id(m: usize) -> String {
    format!("model{m:02}")
}

pub fn video_id(p: usize, m: usize) -> String {
    format!("p{p:02}-m{m:02}")
}

/// Models get increasing quality; prompts cycle through the tasks, with
/// every fourth prompt a multi-subtask complex prompt.
pub fn synthetic_study(spec: &SynthSpec) -> Study {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut study = Study::new(StudyMetadata {
        name: "synthetic".into(),
        annotators_per_sample: None,
    });
    for p in 0..spec.prompts {
        let (task, subtasks) = if p % 4 == 3 {
            (Task::Complex, vec!["first".to_string(), "second".into(), "third".into()][..2 + p % 2].to_vec())
        } else {
            (Task::ALL[p % 19], vec!["only".to_string()])
        };
        study.add_prompt(PromptRecord {
            prompt_id: format!("p{p:02}"),
            text: format!("prompt {p}"),
            task,
            subtasks,
        });
    }
    for p in 0..spec.prompts {
        for m in 0..spec.models {
            study.add_video(VideoRecord {
                video_id: video_id(p, m),
                prompt_id: format!("p{p:02}"),
                model_id: model_id(m),
                split: if p % 2 == 0 { Split::Test } else { Split::Train },
            });
        }
    }
    let total = spec.subjects + spec.erratic;
    let bias: Vec<f64> = (0..total).map(|_| rng.random_range(-0.6..0.6)).collect();
    for p in 0..spec.prompts {
        let subtasks = study.prompts[&format!("p{p:02}")].subtasks.len();
        for m in 0..spec.models {
            let quality = 1.5 + 3.0 * m as f64 / (spec.models.max(2) - 1) as f64;
            let video = video_id(p, m);
            for (s, bias) in bias.iter().enumerate() {
                if rng.random_bool(spec.skip) {
                    continue;
                }
                let subject = format!("subj{s:02}");
                for d in Dimension::ALL {
                    let raw = if s >= spec.subjects {
                        if rng.random_bool(0.5) { 1 } else { 5 }
                    } else {
                        let noise: f64 = rng.random_range(-1.0..1.0);
                        (quality + bias + noise).round().clamp(1.0, 5.0) as i64
                    };
                    study.add_rating(RatingRecord {
                        subject_id: subject.clone(),
                        video_id: video.clone(),
                        dimension: d,
                        raw_score: raw,
                    });
                }
                let votes = (0..subtasks)
                    .map(|_| rng.random_bool((0.2 + 0.12 * m as f64).min(0.95)))
                    .collect();
                study.set_votes(&subject, &video, votes);
            }
        }
    }
    study
}
