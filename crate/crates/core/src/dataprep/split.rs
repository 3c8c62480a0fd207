use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::PrepError;
use crate::model::{ModelId, PromptId, Split};

pub const MANIFEST_HEADER: [&str; 3] = ["prompt_id", "model_id", "split"];

/// (prompt, model) pairs for each side of the split, sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<(PromptId, ModelId)>,
    pub test: Vec<(PromptId, ModelId)>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn test_prompts(&self) -> BTreeSet<&PromptId> {
        self.test.iter().map(|(p, _)| p).collect()
    }

    pub fn train_prompts(&self) -> BTreeSet<&PromptId> {
        self.train.iter().map(|(p, _)| p).collect()
    }

    /// `prompt_id,model_id,split` rows, train first.
    pub fn manifest_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER).expect("write to Vec");
        for (pairs, split) in [(&self.train, Split::Train), (&self.test, Split::Test)] {
            for (p, m) in pairs {
                w.write_record([p.as_str(), m.as_str(), split.as_str()])
                    .expect("write to Vec");
            }
        }
        w.into_inner().expect("flush to Vec")
    }
}

fn distinct<'a>(ids: &'a [String], what: &str) -> Result<BTreeSet<&'a String>, PrepError> {
    let set: BTreeSet<&String> = ids.iter().collect();
    if set.len() != ids.len() {
        return Err(PrepError::InfeasibleSplit(format!("duplicate {what} ids")));
    }
    Ok(set)
}

/// Draws `test_prompt_count` test prompts with a seeded shuffle. Test
/// prompts pair with every model; the rest pair with `train_models` only.
pub fn split_dataset(
    prompts: &[PromptId],
    models: &[ModelId],
    train_models: &[ModelId],
    test_prompt_count: usize,
    seed: u64,
) -> Result<DatasetSplit, PrepError> {
    let prompt_set = distinct(prompts, "prompt")?;
    let model_set = distinct(models, "model")?;
    let train_set = distinct(train_models, "train model")?;
    if test_prompt_count > prompts.len() {
        return Err(PrepError::InfeasibleSplit(format!(
            "{test_prompt_count} test prompts requested from {}",
            prompts.len()
        )));
    }
    if let Some(m) = train_set.iter().find(|m| !model_set.contains(*m)) {
        return Err(PrepError::InfeasibleSplit(format!("train model {m} is not in the model list")));
    }

    let mut order: Vec<&String> = prompt_set.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_prompts: BTreeSet<&String> = order[..test_prompt_count].iter().copied().collect();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for p in order {
        if test_prompts.contains(p) {
            test.extend(model_set.iter().map(|m| (p.clone(), (*m).clone())));
        } else {
            train.extend(train_set.iter().map(|m| (p.clone(), (*m).clone())));
        }
    }
    train.sort();
    test.sort();
    Ok(DatasetSplit { train, test })
}
