use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use orbitforge::assess::{score_histogram, FilterPolicy, ScoreReport};
use orbitforge::pipeline::{
    compute_savings_report, run_all, run_stage, Manifest, PipelineConfig, PipelineError, Resolution, ScorerSelection,
    Stage, Status,
};
use orbitforge::process::ProcessConfig;

#[derive(Parser)]
#[command(name = "orbitforge", version, about = "Multi-view render, filter and caption-reward pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Coarse,
    Fine,
}

#[derive(Subcommand)]
enum Command {
    /// Register mesh files under a directory in the manifest.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Render coarse screening views or fine views of filter survivors.
    Render {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Square frame size overriding the preset resolution.
        #[arg(long)]
        resolution: Option<u32>,
    },
    /// Score coarse renders and keep assets above both thresholds.
    Filter {
        #[arg(long)]
        manifest: PathBuf,
        /// `builtin` or `cmd:PATH`.
        #[arg(long, default_value = "builtin")]
        scorer: String,
        /// Extra argument passed to an external scorer before the file paths.
        #[arg(long = "scorer-arg", allow_hyphen_values = true)]
        scorer_args: Vec<String>,
        #[arg(long)]
        scorer_timeout_ms: Option<u64>,
        #[arg(long, default_value_t = 4.0)]
        aesthetic_threshold: f64,
        #[arg(long, default_value_t = 4.0)]
        quality_threshold: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Compute caption rewards for fine-rendered assets.
    CaptionScore {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        captions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 0.35)]
        tau: f64,
        /// External sentence-similarity provider.
        #[arg(long)]
        similarity: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Write the score histogram CSV and print summary statistics.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        bin_width: f64,
        #[arg(long, default_value_t = 4.0)]
        aesthetic_threshold: f64,
        #[arg(long, default_value_t = 4.0)]
        quality_threshold: f64,
    },
    /// Run every stage from a JSON configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rewrite the manifest keeping only the latest line per asset.
    Compact {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn finish(manifest: &Manifest) -> Result<ExitCode, PipelineError> {
    let failed = manifest.count(Status::Failed);
    if failed > 0 {
        eprintln!("{failed} record(s) failed; see `error` fields in {}", manifest.path().display());
        Ok(ExitCode::from(2))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn stage_config(workers: usize) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::new("", "");
    cfg.workers = workers;
    cfg.apply_env()?;
    Ok(cfg)
}

fn stage_run(stage: Stage, cfg: &PipelineConfig, manifest_path: &Path) -> Result<ExitCode, PipelineError> {
    let manifest = Manifest::open_existing(manifest_path)?;
    let s = run_stage(stage, cfg, &manifest)?;
    eprintln!("{}: {} eligible, {} advanced, {} failed", stage.name(), s.eligible, s.advanced, s.failed);
    for (id, breakdown) in &s.rewards {
        let mut obj = serde_json::to_value(breakdown).expect("breakdown serializes");
        obj["asset_id"] = json!(id);
        println!("{obj}");
    }
    finish(&manifest)
}

fn stats(
    manifest_path: &Path,
    out: &Path,
    bin_width: f64,
    policy: FilterPolicy,
) -> Result<ExitCode, PipelineError> {
    let manifest = Manifest::open_existing(manifest_path)?;
    let records = manifest.records();
    let reports: Vec<ScoreReport> = records
        .iter()
        .filter_map(|r| {
            r.scores.as_ref().map(|s| ScoreReport {
                asset_id: r.asset_id.clone(),
                aesthetic: s.aesthetic,
                quality: s.quality,
                scorer_id: s.scorer_id.clone(),
                per_view: None,
            })
        })
        .collect();
    let hist = score_histogram(&reports, bin_width, &policy).map_err(|e| PipelineError::InsufficientData(e.to_string()))?;
    std::fs::write(out, hist.to_csv()).map_err(|e| PipelineError::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut counts = serde_json::Map::new();
    for status in [
        Status::Ingested,
        Status::CoarseRendered,
        Status::Scored,
        Status::Rejected,
        Status::FineRendered,
        Status::CaptionScored,
        Status::Failed,
    ] {
        counts.insert(status.name().into(), json!(manifest.count(status)));
    }
    let savings = compute_savings_report(&records).ok();
    let summary = json!({
        "assets": records.len(),
        "status_counts": counts,
        "scored": hist.total,
        "fraction_aesthetic_above": hist.fraction_aesthetic_above,
        "fraction_quality_above": hist.fraction_quality_above,
        "fraction_both_above": hist.fraction_both_above,
        "savings": savings,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(ExitCode::SUCCESS)
}

fn execute(command: Command) -> Result<ExitCode, PipelineError> {
    match command {
        Command::Ingest { input, manifest } => {
            let mut cfg = stage_config(1)?;
            cfg.input_dir = input;
            let m = Manifest::open(&manifest)?;
            let s = orbitforge::pipeline::ingest(&cfg, &m)?;
            eprintln!(
                "ingest: {} ingested, {} failed, {} updated, {} unchanged, {} unreadable",
                s.ingested,
                s.failed,
                s.updated,
                s.unchanged,
                s.unreadable.len()
            );
            finish(&m)
        }
        Command::Render {
            mode,
            manifest,
            out,
            workers,
            seed,
            resolution,
        } => {
            let mut cfg = stage_config(workers)?;
            cfg.output_dir = out;
            cfg.seed = seed;
            let res = resolution.map(|r| Resolution { width: r, height: r });
            let stage = match mode {
                Mode::Coarse => {
                    cfg.presets.coarse = res;
                    Stage::Coarse
                }
                Mode::Fine => {
                    cfg.presets.fine = res;
                    Stage::Fine
                }
            };
            stage_run(stage, &cfg, &manifest)
        }
        Command::Filter {
            manifest,
            scorer,
            scorer_args,
            scorer_timeout_ms,
            aesthetic_threshold,
            quality_threshold,
            workers,
        } => {
            let mut cfg = stage_config(workers)?;
            cfg.scorer = ScorerSelection::parse(&scorer)?;
            if let ScorerSelection::External(s) = &mut cfg.scorer {
                s.process.args = scorer_args;
                if let Some(t) = scorer_timeout_ms {
                    s.process.timeout_ms = t;
                }
            }
            cfg.policy = FilterPolicy {
                aesthetic_threshold,
                quality_threshold,
            };
            stage_run(Stage::Filter, &cfg, &manifest)
        }
        Command::CaptionScore {
            manifest,
            captions,
            references,
            lexicon,
            tau,
            similarity,
            workers,
        } => {
            let mut cfg = stage_config(workers)?;
            cfg.captions_dir = Some(captions);
            cfg.references_dir = Some(references);
            cfg.lexicon = lexicon;
            cfg.tau = tau;
            cfg.similarity = similarity.map(ProcessConfig::new);
            stage_run(Stage::Caption, &cfg, &manifest)
        }
        Command::Stats {
            manifest,
            out,
            bin_width,
            aesthetic_threshold,
            quality_threshold,
        } => stats(
            &manifest,
            &out,
            bin_width,
            FilterPolicy {
                aesthetic_threshold,
                quality_threshold,
            },
        ),
        Command::Run { config } => {
            let mut cfg = PipelineConfig::load(&config)?;
            cfg.apply_env()?;
            cfg.validate()?;
            let m = Manifest::open(&cfg.manifest_path())?;
            for (stage, s) in run_all(&cfg, &m)? {
                eprintln!("{}: {} eligible, {} advanced, {} failed", stage.name(), s.eligible, s.advanced, s.failed);
            }
            let records = m.records();
            if let Ok(report) = compute_savings_report(&records) {
                eprintln!(
                    "two-pass speedup {:.2}x (coarse {:.1} ms, fine {:.1} ms, rejected {:.0}%)",
                    report.speedup,
                    report.coarse_ms_mean,
                    report.fine_ms_mean,
                    100.0 * report.rejection_fraction
                );
            }
            finish(&m)
        }
        Command::Compact { manifest } => {
            let m = Manifest::open_existing(&manifest)?;
            let n = m.compact()?;
            eprintln!("compacted to {n} record(s)");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
