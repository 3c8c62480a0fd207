use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mosbench_core::benchmark::ScoreTarget;
use mosbench_core::dataprep::{
    grid_minipatch, quality_level, read_array, sample_offsets, split_dataset, write_array, FrameGridSpec,
    PatchOffsets, QualityLevel,
};
use mosbench_core::error::StoreError;
use mosbench_core::model::PromptId;
use mosbench_core::store::{load_mos, write_atomic, write_json};
use serde::Serialize;

use super::{ensure_dir, out_dir, require, seed};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::{CommonArgs, PrepArgs};

pub const SPLIT_FILE: &str = "split.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const LABELS_HEADER: [&str; 5] = ["video_id", "target", "score", "level", "level_index"];
pub const MINIPATCH_DIR: &str = "minipatch";
pub const OFFSETS_FILE: &str = "offsets.json";
pub const FRAME_EXT: &str = "mbar";

/// Runs each step whose input is configured: the split (`--prompts`),
/// quality labels (`--mos`) and mini-patch maps (`--frames`).
pub fn run(common: &CommonArgs, args: &PrepArgs, config: &RunConfig) -> Result<(), CliError> {
    let out = out_dir(common, config)?;
    let seed = seed(common, config);
    let c = &config.prep;
    let mut steps = 0;

    if let Some(prompts) = args.prompts.clone().or(c.prompts.clone()) {
        let models = require(&args.models, &c.models, "--models")?;
        let train = args.train_models.clone().or(c.train_models.clone()).unwrap_or_else(|| models.clone());
        let k = require(&args.test_prompts, &c.test_prompts, "--test-prompts")?;
        let prompt_ids = read_prompt_ids(&prompts)?;
        let split = split_dataset(&prompt_ids, &models, &train, k, seed)?;
        ensure_dir(&out)?;
        write_atomic(&out.join(SPLIT_FILE), &split.manifest_csv()).map_err(CliError::Output)?;
        tracing::info!(train = split.train.len(), test = split.test.len(), "wrote split manifest");
        steps += 1;
    }

    if let Some(mos) = args.mos.clone().or(c.mos.clone()) {
        let bounds = (args.label_min.or(c.label_min), args.label_max.or(c.label_max));
        let csv = labels_csv(&mos, bounds)?;
        ensure_dir(&out)?;
        write_atomic(&out.join(LABELS_FILE), &csv).map_err(CliError::Output)?;
        steps += 1;
    }

    if let Some(frames) = args.frames.clone().or(c.frames.clone()) {
        let defaults = FrameGridSpec::default();
        let grid = args.grid.or(c.grid).unwrap_or(defaults.grid);
        let patch = args.patch.or(c.patch).unwrap_or(defaults.patch);
        minipatch_maps(&frames, &out.join(MINIPATCH_DIR), grid, patch, seed)?;
        steps += 1;
    }

    if steps == 0 {
        return Err(CliError::Usage("nothing to prepare: give --prompts, --mos or --frames".into()));
    }
    Ok(())
}

fn input_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Input(StoreError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    })
}

/// Prompt ids from the `prompt_id` column of a CSV file.
pub fn read_prompt_ids(path: &Path) -> Result<Vec<PromptId>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| input_err(path, e.to_string()))?;
    let headers = reader.headers().map_err(|e| input_err(path, e.to_string()))?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "prompt_id")
        .ok_or_else(|| input_err(path, "no prompt_id column"))?;
    let mut ids = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| input_err(path, e.to_string()))?;
        let id = record.get(col).unwrap_or("").trim();
        if id.is_empty() {
            return Err(input_err(path, format!("empty prompt_id at record {}", ids.len() + 1)));
        }
        ids.push(id.to_string());
    }
    Ok(ids)
}

/// One row per video and score with a value; each target's range defaults
/// to its own observed minimum and maximum.
pub fn labels_csv(mos_path: &Path, bounds: (Option<f64>, Option<f64>)) -> Result<Vec<u8>, CliError> {
    let records = load_mos(mos_path).map_err(CliError::Input)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(LABELS_HEADER).expect("write to Vec");
    for target in ScoreTarget::ALL {
        let scores: Vec<(&str, f64)> = records
            .iter()
            .filter_map(|r| Some((r.video_id.as_str(), target.truth(r)?)))
            .collect();
        if scores.is_empty() {
            continue;
        }
        let lo = bounds.0.unwrap_or_else(|| scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min));
        let hi = bounds.1.unwrap_or_else(|| scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max));
        let mut counts: BTreeMap<QualityLevel, usize> = BTreeMap::new();
        for (video, score) in scores {
            let level = quality_level(score, lo, hi)?;
            *counts.entry(level).or_default() += 1;
            w.write_record([
                video,
                target.as_str(),
                &score.to_string(),
                level.as_str(),
                &level.index().to_string(),
            ])
            .expect("write to Vec");
        }
        tracing::info!(target_score = target.as_str(), min = lo, max = hi, levels = ?counts, "quality levels");
    }
    Ok(w.into_inner().expect("flush to Vec"))
}

#[derive(Serialize)]
struct OffsetsFile<'a> {
    video_id: &'a str,
    spec: FrameGridSpec,
    height: usize,
    width: usize,
    frames: usize,
    offsets: &'a PatchOffsets,
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let listing = fs::read_dir(dir).map_err(|source| {
        CliError::Input(StoreError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })?;
    let mut paths = Vec::new();
    for entry in listing {
        let entry = entry.map_err(|source| {
            CliError::Input(StoreError::Io {
                path: dir.to_path_buf(),
                source,
            })
        })?;
        paths.push(entry.path());
    }
    paths.sort();
    Ok(paths)
}

/// `{frames}/{video}/*.mbar` → `{out}/{video}/*.mbar` plus `offsets.json`.
/// The i-th video in name order samples with seed `seed + i`.
pub fn minipatch_maps(frames: &Path, out: &Path, grid: usize, patch: usize, seed: u64) -> Result<usize, CliError> {
    let videos: Vec<PathBuf> = sorted_entries(frames)?.into_iter().filter(|p| p.is_dir()).collect();
    if videos.is_empty() {
        return Err(input_err(frames, "no video directories"));
    }
    for (i, dir) in videos.iter().enumerate() {
        let video_id = dir.file_name().expect("listed entry").to_string_lossy().into_owned();
        let files: Vec<PathBuf> = sorted_entries(dir)?
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == FRAME_EXT))
            .collect();
        let stack = files
            .iter()
            .map(|f| read_array::<u8>(f))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Input)?;
        let spec = FrameGridSpec {
            grid,
            patch,
            seed: seed.wrapping_add(i as u64),
        };
        let maps = grid_minipatch(&stack, &spec)?;
        let (height, width, _) = stack[0].dim();
        let offsets = sample_offsets(&spec, height, width)?;

        let target = out.join(&video_id);
        ensure_dir(&target)?;
        for (file, map) in files.iter().zip(&maps) {
            write_array(&target.join(file.file_name().expect("listed file")), map).map_err(CliError::Output)?;
        }
        write_json(
            &target.join(OFFSETS_FILE),
            &OffsetsFile {
                video_id: &video_id,
                spec,
                height,
                width,
                frames: maps.len(),
                offsets: &offsets,
            },
        )
        .map_err(CliError::Output)?;
    }
    tracing::info!(videos = videos.len(), grid, patch, "wrote mini-patch maps");
    Ok(videos.len())
}
