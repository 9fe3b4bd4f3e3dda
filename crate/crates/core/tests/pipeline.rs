mod common;

use std::path::Path;
use std::process::Command;

use orbitforge::pipeline::{
    ingest, run_all, run_stage, run_stage_with, Manifest, PipelineConfig, Resolution, Stage, StageHooks, Status,
};

fn small_config(input: &Path, out: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(input, out);
    cfg.presets.coarse = Some(Resolution { width: 32, height: 32 });
    cfg.presets.fine = Some(Resolution { width: 24, height: 24 });
    cfg.policy.aesthetic_threshold = 0.0;
    cfg.policy.quality_threshold = 0.0;
    cfg
}

fn fixture(dir: &Path) {
    std::fs::write(dir.join("cube.obj"), common::cube_obj(1.0)).unwrap();
    std::fs::write(dir.join("tetra.obj"), common::tetra_obj()).unwrap();
    std::fs::write(dir.join("ball.obj"), common::sphere_obj(6, 8, 1, 0.1)).unwrap();
    std::fs::write(dir.join("broken.ply"), "ply\nformat ascii 1.0\nelement vertex 3\nend_header\n0 0\n").unwrap();
    std::fs::write(dir.join("notes.txt"), "not a mesh").unwrap();
}

#[test]
fn ingest_partitions_and_is_idempotent() {
    let input = tempfile::tempdir().unwrap();
    fixture(input.path());
    std::fs::create_dir(input.path().join("copies")).unwrap();
    std::fs::write(input.path().join("copies/cube_again.obj"), common::cube_obj(1.0)).unwrap();
    let out = tempfile::tempdir().unwrap();
    let cfg = small_config(input.path(), out.path());
    let m = Manifest::open(&cfg.manifest_path()).unwrap();

    let s = ingest(&cfg, &m).unwrap();
    assert_eq!((s.ingested, s.failed), (3, 1));
    assert_eq!(m.count(Status::Ingested), 3);
    let failed = m.with_status(Status::Failed);
    assert_eq!(failed.len(), 1);
    assert!(failed[0].error.as_deref().unwrap().contains("ply"), "{:?}", failed[0].error);
    let cube = m
        .records()
        .into_iter()
        .find(|r| r.source_paths.len() == 2)
        .expect("identical files share a record");
    assert!(cube.source_paths.iter().any(|p| p.ends_with("copies/cube_again.obj")));
    assert_eq!(cube.normalization.as_ref().unwrap().scale_applied, 0.5);

    let before = std::fs::read(m.path()).unwrap();
    let s = ingest(&cfg, &m).unwrap();
    assert_eq!((s.ingested, s.failed, s.updated), (0, 0, 0));
    assert_eq!(std::fs::read(m.path()).unwrap(), before);

    std::fs::write(input.path().join("copies/cube_third.obj"), common::cube_obj(1.0)).unwrap();
    let s = ingest(&cfg, &m).unwrap();
    assert_eq!(s.updated, 1);
    assert_eq!(m.get(&cube.asset_id).unwrap().source_paths.len(), 3);
}

#[test]
fn full_run_with_captions_and_crash_isolation() {
    let input = tempfile::tempdir().unwrap();
    fixture(input.path());
    let out = tempfile::tempdir().unwrap();
    let captions = tempfile::tempdir().unwrap();
    let references = tempfile::tempdir().unwrap();
    let mut cfg = small_config(input.path(), out.path());
    cfg.captions_dir = Some(captions.path().into());
    cfg.references_dir = Some(references.path().into());
    std::fs::write(
        captions.path().join("cube.txt"),
        "<think>Subject: a cube</think><answer>A grey cube. The front and back look the same.</answer>",
    )
    .unwrap();
    std::fs::write(references.path().join("cube.txt"), "A grey cube. It has six faces.").unwrap();

    let m = Manifest::open(&cfg.manifest_path()).unwrap();
    ingest(&cfg, &m).unwrap();
    let tetra = m
        .records()
        .into_iter()
        .find(|r| r.source_path.ends_with("tetra.obj"))
        .unwrap()
        .asset_id;
    let hooks = StageHooks {
        panic_on: Some(tetra.clone()),
    };
    let s = run_stage_with(Stage::Coarse, &cfg, &m, &hooks).unwrap();
    assert_eq!((s.eligible, s.advanced, s.failed), (3, 2, 1));
    let t = m.get(&tetra).unwrap();
    assert_eq!(t.status, Status::Failed);
    assert_eq!(t.failed_stage, Some(Stage::Coarse));
    assert!(t.error.unwrap().contains("injected worker crash"));

    let summaries = run_all(&cfg, &m).unwrap();
    let caption = summaries.iter().find(|(s, _)| *s == Stage::Caption).unwrap();
    assert_eq!(caption.1.advanced, 1);
    assert_eq!(m.count(Status::CaptionScored), 1);
    assert_eq!(m.count(Status::FineRendered), 1);
    let cube = m.with_status(Status::CaptionScored).remove(0);
    let reward = cube.reward.unwrap();
    assert_eq!(reward.precision, 0.5);
    assert_eq!(reward.recall, 0.5);
    assert_eq!(reward.pattern_matches, 2);
    assert!((reward.reward - 0.9).abs() < 1e-12);

    let fine = cube.fine_dir.unwrap();
    assert!(fine.join("frame_084.png").is_file());
    assert!(fine.join("cameras.json").is_file());
    assert!(fine.join("preview.png").is_file());
    let rig = orbitforge::camera::rig_from_json(&std::fs::read_to_string(fine.join("cameras.json")).unwrap()).unwrap();
    assert_eq!(rig.seed, cube.rig_seed.unwrap());
    assert_eq!(Some(rig.radius), cube.radius);

    for stage in [Stage::Coarse, Stage::Filter, Stage::Fine, Stage::Caption] {
        assert_eq!(run_stage(stage, &cfg, &m).unwrap().eligible, 0, "{stage:?}");
    }
}

#[test]
fn cli_exit_codes_and_outputs() {
    let input = tempfile::tempdir().unwrap();
    fixture(input.path());
    let out = tempfile::tempdir().unwrap();
    let manifest = out.path().join("m.jsonl");
    let run = |args: &[&str]| {
        Command::new(common::orbitforge_bin())
            .args(args)
            .env_remove("ORBITFORGE_WORKERS")
            .output()
            .unwrap()
    };
    let m = manifest.to_str().unwrap();
    let o = out.path().to_str().unwrap();

    let r = run(&["ingest", "--input", input.path().to_str().unwrap(), "--manifest", m]);
    assert_eq!(r.status.code(), Some(2), "corrupt mesh present");
    let r = run(&["render", "--mode", "coarse", "--manifest", m, "--out", o, "--resolution", "24"]);
    assert_eq!(r.status.code(), Some(2));
    let scorer = format!("cmd:{}", common::echo_scorer().display());
    let r = run(&["filter", "--manifest", m, "--scorer", &scorer, "--scorer-arg=--score=4.5"]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = out.path().join("hist.csv");
    let r = run(&["stats", "--manifest", m, "--out", csv.to_str().unwrap(), "--bin-width", "2.5"]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("aesthetic,2.5,5,3\n"), "{text}");
    let summary: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(summary["fraction_both_above"], 1.0);

    let r = run(&["compact", "--manifest", m]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&manifest).unwrap().lines().count(), 4);

    let r = run(&["filter", "--manifest", m, "--scorer", "laion"]);
    assert_eq!(r.status.code(), Some(1));
    let r = run(&["filter", "--manifest", out.path().join("absent.jsonl").to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(1));
    let r = run(&["render", "--mode", "sideways"]);
    assert_eq!(r.status.code(), Some(1));
    let r = Command::new(common::orbitforge_bin())
        .args(["render", "--mode", "fine", "--manifest", m, "--out", o])
        .env("ORBITFORGE_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn run_command_reads_config() {
    let input = tempfile::tempdir().unwrap();
    std::fs::write(input.path().join("cube.obj"), common::cube_obj(1.0)).unwrap();
    let out = tempfile::tempdir().unwrap();
    let cfg_path = out.path().join("config.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "input_dir": input.path(),
            "output_dir": "work",
            "presets": {"coarse": {"width": 16, "height": 16}, "fine": {"width": 16, "height": 16}},
            "policy": {"aesthetic_threshold": 0.0, "quality_threshold": 0.0},
            "workers": 2
        })
        .to_string(),
    )
    .unwrap();
    let r = Command::new(common::orbitforge_bin())
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let m = Manifest::open(&out.path().join("work/manifest.jsonl")).unwrap();
    assert_eq!(m.count(Status::FineRendered), 1);

    std::fs::write(&cfg_path, r#"{"input_dir": "x", "output_dir": "y", "workers": 0}"#).unwrap();
    let r = Command::new(common::orbitforge_bin())
        .args(["run", "--config", cfg_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(1));
}
