use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use super::{ingest, AssetRecord, Manifest, PipelineConfig, PipelineError, ScorerSelection, Stage, Status};
use crate::assess::{apply_filter, proxy_report, ExternalScorer, ScoreReport};
use crate::camera::rig_to_json;
use crate::camera::rng::mix_seed;
use crate::caption::{parse_annotation, reward_with, split_sentences, ExternalSimilarity, RewardBreakdown, Similarity, TfCosine};
use crate::geometry::normalize;
use crate::mesh::{load_mesh, Mesh};
use crate::raster::{default_lighting, render_asset, ImageBuffer, PresetKind};

/// Test instrumentation.
#[derive(Debug, Clone, Default)]
pub struct StageHooks {
    /// Panic inside the worker while processing this asset.
    pub panic_on: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct StageSummary {
    pub eligible: usize,
    pub advanced: usize,
    pub failed: usize,
    /// Caption stage only: full breakdown per scored asset, by asset id.
    pub rewards: Vec<(String, RewardBreakdown)>,
}

/// Per-asset rig seed: the global seed mixed with the asset's content hash.
pub fn asset_seed(global: u64, asset_id: &str) -> u64 {
    let prefix = &asset_id[..asset_id.len().min(16)];
    let hash = u64::from_str_radix(prefix, 16).unwrap_or_else(|_| {
        asset_id.bytes().fold(0u64, |h, b| h.rotate_left(8) ^ b as u64)
    });
    mix_seed(global, hash)
}

enum Scorer {
    Builtin,
    External(ExternalScorer),
}

struct Context<'a> {
    config: &'a PipelineConfig,
    scorer: Option<Scorer>,
    similarity: Option<Box<dyn Similarity>>,
    lexicon: Option<crate::caption::PatternLexicon>,
    rewards: Mutex<Vec<(String, RewardBreakdown)>>,
}

fn load_normalized(record: &AssetRecord, config: &PipelineConfig) -> Result<Mesh, String> {
    let mesh = load_mesh(&record.source_path).map_err(|e| e.to_string())?;
    let (mesh, _) = normalize(&mesh, config.rotation).map_err(|e| e.to_string())?;
    Ok(mesh)
}

fn frame_name(i: usize) -> String {
    format!("frame_{i:03}.png")
}

fn write_frames(dir: &Path, frames: &[ImageBuffer], cameras_json: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for (i, f) in frames.iter().enumerate() {
        f.write_png(&dir.join(frame_name(i))).map_err(|e| e.to_string())?;
    }
    if let Some(first) = frames.first() {
        first.write_preview_png(&dir.join("preview.png")).map_err(|e| e.to_string())?;
    }
    std::fs::write(dir.join("cameras.json"), cameras_json).map_err(|e| format!("{}: {e}", dir.display()))
}

fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, String> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".png"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(format!("no frames in {}", dir.display()));
    }
    Ok(paths)
}

fn render(record: &mut AssetRecord, ctx: &Context, kind: PresetKind) -> Result<(), String> {
    let config = ctx.config;
    let mesh = load_normalized(record, config)?;
    let seed = *record.rig_seed.get_or_insert_with(|| asset_seed(config.seed, &record.asset_id));
    let preset = config.preset(kind);
    let rig = preset.build_rig(seed).map_err(|e| e.to_string())?;
    let frames = render_asset(&mesh, &rig, &preset, &default_lighting()).map_err(|e| e.to_string())?;
    let cameras = rig_to_json(&rig).map_err(|e| e.to_string())?;
    let sub = match kind {
        PresetKind::Coarse => "coarse",
        PresetKind::Fine => "fine",
    };
    let dir = std::path::absolute(config.output_dir.join(sub).join(&record.asset_id)).map_err(|e| e.to_string())?;
    write_frames(&dir, &frames, &cameras)?;
    match kind {
        PresetKind::Coarse => {
            record.coarse_dir = Some(dir);
            record.status = Status::CoarseRendered;
        }
        PresetKind::Fine => {
            record.fine_dir = Some(dir);
            record.radius = Some(rig.radius);
            record.status = Status::FineRendered;
        }
    }
    Ok(())
}

fn filter(record: &mut AssetRecord, ctx: &Context) -> Result<(), String> {
    let dir = record.coarse_dir.as_ref().ok_or("record has no coarse renders")?;
    let paths = frame_paths(dir)?;
    let report: ScoreReport = match ctx.scorer.as_ref().expect("scorer prepared for filter stage") {
        Scorer::Builtin => {
            let views = paths
                .iter()
                .map(|p| ImageBuffer::read_png(p).map_err(|e| format!("{}: {e}", p.display())))
                .collect::<Result<Vec<_>, _>>()?;
            proxy_report(&record.asset_id, &views)
        }
        Scorer::External(s) => s.score(&record.asset_id, &paths),
    }
    .map_err(|e| e.to_string())?;
    let decision = apply_filter(&report, &ctx.config.policy);
    record.scores = Some(super::Scores {
        aesthetic: report.aesthetic,
        quality: report.quality,
        scorer_id: report.scorer_id,
    });
    record.decision = Some(decision);
    record.status = if decision.keep { Status::Scored } else { Status::Rejected };
    Ok(())
}

fn caption_file(dir: &Path, record: &AssetRecord) -> Option<PathBuf> {
    let by_id = dir.join(format!("{}.txt", record.asset_id));
    if by_id.is_file() {
        return Some(by_id);
    }
    record
        .source_paths
        .iter()
        .filter_map(|p| p.file_stem())
        .map(|stem| dir.join(format!("{}.txt", stem.to_string_lossy())))
        .find(|p| p.is_file())
}

fn caption(record: &mut AssetRecord, ctx: &Context) -> Result<(), String> {
    let (Some(cap_dir), Some(ref_dir)) = (&ctx.config.captions_dir, &ctx.config.references_dir) else {
        return Err("caption stage needs captions and references directories".into());
    };
    let cap_path = caption_file(cap_dir, record).ok_or("no caption file")?;
    let ref_path = caption_file(ref_dir, record).ok_or("no reference file")?;
    let read = |p: &Path| std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()));
    let annotation = parse_annotation(&read(&cap_path)?).map_err(|e| e.to_string())?;
    for w in &annotation.warnings {
        log::debug!("{}: {w}", record.asset_id);
    }
    let reference = split_sentences(&read(&ref_path)?);
    let breakdown = reward_with(
        &annotation,
        &reference,
        ctx.lexicon.as_ref().expect("lexicon prepared for caption stage"),
        ctx.config.tau,
        ctx.similarity.as_deref().expect("similarity prepared for caption stage"),
    )
    .map_err(|e| e.to_string())?;
    record.reward = Some((&breakdown).into());
    record.status = Status::CaptionScored;
    ctx.rewards
        .lock()
        .unwrap_or_else(|e| e.into_inner())
        .push((record.asset_id.clone(), breakdown));
    Ok(())
}

fn process(stage: Stage, record: &AssetRecord, ctx: &Context, hooks: &StageHooks) -> AssetRecord {
    let started = Instant::now();
    let mut next = record.clone();
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        if hooks.panic_on.as_deref() == Some(record.asset_id.as_str()) {
            panic!("injected worker crash");
        }
        match stage {
            Stage::Coarse => render(&mut next, ctx, PresetKind::Coarse),
            Stage::Filter => filter(&mut next, ctx),
            Stage::Fine => render(&mut next, ctx, PresetKind::Fine),
            Stage::Caption => caption(&mut next, ctx),
            Stage::Ingest => unreachable!("ingest is not a per-record stage"),
        }
    }));
    let error = match outcome {
        Ok(Ok(())) => None,
        Ok(Err(e)) => Some(e),
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            Some(format!("worker panicked: {msg}"))
        }
    };
    let mut out = match error {
        None => next,
        Some(e) => record.clone().failed(stage, e),
    };
    out.timings
        .insert(stage.name().into(), started.elapsed().as_secs_f64() * 1e3);
    out
}

fn eligible(stage: Stage, manifest: &Manifest, config: &PipelineConfig) -> Vec<AssetRecord> {
    let Some(status) = stage.input_status() else {
        return Vec::new();
    };
    let mut records = manifest.with_status(status);
    if stage == Stage::Caption {
        // assets without a caption file wait for one
        match &config.captions_dir {
            Some(dir) => records.retain(|r| caption_file(dir, r).is_some()),
            None => records.clear(),
        }
    }
    records
}

fn prepare<'a>(stage: Stage, config: &'a PipelineConfig) -> Result<Context<'a>, PipelineError> {
    let mut ctx = Context {
        config,
        scorer: None,
        similarity: None,
        lexicon: None,
        rewards: Mutex::new(Vec::new()),
    };
    match stage {
        Stage::Filter => {
            ctx.scorer = Some(match &config.scorer {
                ScorerSelection::Builtin => Scorer::Builtin,
                ScorerSelection::External(s) => Scorer::External(ExternalScorer::new(s.clone())),
            });
        }
        Stage::Caption => {
            ctx.lexicon = Some(config.load_lexicon()?);
            ctx.similarity = Some(match &config.similarity {
                Some(p) => Box::new(ExternalSimilarity::new(p.clone())),
                None => Box::new(TfCosine),
            });
        }
        _ => {}
    }
    Ok(ctx)
}

/// Runs `f` over `items` on `workers` threads pulling from a shared index.
fn for_each_parallel<T: Sync>(items: &[T], workers: usize, f: impl Fn(&T) + Sync) {
    let next = AtomicUsize::new(0);
    let workers = workers.clamp(1, items.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                match items.get(i) {
                    Some(item) => f(item),
                    None => break,
                }
            });
        }
    });
}

pub fn run_stage(stage: Stage, config: &PipelineConfig, manifest: &Manifest) -> Result<StageSummary, PipelineError> {
    run_stage_with(stage, config, manifest, &StageHooks::default())
}

/// Processes every record eligible for `stage`. Each finished record is
/// appended to the manifest immediately; per-record errors mark that record
/// failed and never abort the batch.
pub fn run_stage_with(
    stage: Stage,
    config: &PipelineConfig,
    manifest: &Manifest,
    hooks: &StageHooks,
) -> Result<StageSummary, PipelineError> {
    config.validate()?;
    if stage == Stage::Ingest {
        let s = ingest(config, manifest)?;
        return Ok(StageSummary {
            eligible: s.ingested + s.failed,
            advanced: s.ingested,
            failed: s.failed,
            rewards: Vec::new(),
        });
    }
    let ctx = prepare(stage, config)?;
    let records = eligible(stage, manifest, config);
    let advanced = AtomicUsize::new(0);
    let failed = AtomicUsize::new(0);
    let write_error: Mutex<Option<PipelineError>> = Mutex::new(None);
    for_each_parallel(&records, config.workers, |record| {
        let out = process(stage, record, &ctx, hooks);
        if out.status == Status::Failed {
            log::warn!("{} failed at {}: {}", out.asset_id, stage.name(), out.error.as_deref().unwrap_or(""));
            failed.fetch_add(1, Ordering::Relaxed);
        } else {
            advanced.fetch_add(1, Ordering::Relaxed);
        }
        if let Err(e) = manifest.append(&out) {
            write_error.lock().unwrap_or_else(|e| e.into_inner()).get_or_insert(e);
        }
    });
    if let Some(e) = write_error.into_inner().unwrap_or_else(|e| e.into_inner()) {
        return Err(e);
    }
    let mut rewards = ctx.rewards.into_inner().unwrap_or_else(|e| e.into_inner());
    rewards.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(StageSummary {
        eligible: records.len(),
        advanced: advanced.into_inner(),
        failed: failed.into_inner(),
        rewards,
    })
}

/// Ingest, coarse render, filter, fine render and, when caption directories
/// are configured, caption scoring.
pub fn run_all(config: &PipelineConfig, manifest: &Manifest) -> Result<Vec<(Stage, StageSummary)>, PipelineError> {
    let mut stages = vec![Stage::Ingest, Stage::Coarse, Stage::Filter, Stage::Fine];
    if config.captions_dir.is_some() {
        stages.push(Stage::Caption);
    }
    stages
        .into_iter()
        .map(|s| run_stage(s, config, manifest).map(|summary| (s, summary)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_depend_on_both_inputs() {
        let a = asset_seed(0, "00000000000000010000000000000000");
        assert_eq!(a, mix_seed(0, 1));
        assert_ne!(a, asset_seed(1, "00000000000000010000000000000000"));
        assert_ne!(a, asset_seed(0, "00000000000000020000000000000000"));
    }

    #[test]
    fn parallel_visits_each_item_once() {
        let items: Vec<usize> = (0..100).collect();
        let seen = Mutex::new(Vec::new());
        for_each_parallel(&items, 4, |&i| seen.lock().unwrap().push(i));
        let mut seen = seen.into_inner().unwrap();
        seen.sort();
        assert_eq!(seen, items);
        for_each_parallel(&[] as &[usize], 3, |_| unreachable!());
    }
}
