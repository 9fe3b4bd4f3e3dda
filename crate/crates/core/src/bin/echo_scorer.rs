//! Reference external scorer for the file-based scoring protocol.
//!
//! Usage: `echo-scorer [--score X] [--override SUBSTR=SCORE]... [--sleep-ms N]
//! [--drop N] [--nan] [--fail] <request.json> <response.json>`
//!
//! Every requested image gets `--score` (default 5.0) unless its path contains
//! an override substring. The remaining flags produce protocol faults.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Parser;
use serde::Deserialize;

#[derive(Parser)]
struct Args {
    #[arg(long, default_value_t = 5.0)]
    score: f64,
    #[arg(long = "override", value_parser = parse_override)]
    overrides: Vec<(String, f64)>,
    #[arg(long, default_value_t = 0)]
    sleep_ms: u64,
    /// Omit this many images from the response.
    #[arg(long, default_value_t = 0)]
    drop: usize,
    /// Answer NaN for the first image.
    #[arg(long)]
    nan: bool,
    /// Exit with status 3 without writing a response.
    #[arg(long)]
    fail: bool,
    request: PathBuf,
    response: PathBuf,
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.rsplit_once('=').ok_or("expected SUBSTR=SCORE")?;
    Ok((k.to_string(), v.parse().map_err(|e| format!("{e}"))?))
}

#[derive(Deserialize)]
struct Request {
    images: Vec<String>,
}

fn main() {
    let args = Args::parse();
    if args.sleep_ms > 0 {
        std::thread::sleep(std::time::Duration::from_millis(args.sleep_ms));
    }
    if args.fail {
        std::process::exit(3);
    }
    let text = std::fs::read_to_string(&args.request).expect("read request");
    let req: Request = serde_json::from_str(&text).expect("parse request");
    let mut scores = serde_json::Map::new();
    let keep = req.images.len().saturating_sub(args.drop);
    for (i, path) in req.images.iter().take(keep).enumerate() {
        let score = args
            .overrides
            .iter()
            .find(|(k, _)| path.contains(k.as_str()))
            .map_or(args.score, |(_, v)| *v);
        let value = if args.nan && i == 0 {
            serde_json::Value::String("NaN".into())
        } else {
            serde_json::json!(score)
        };
        scores.insert(path.clone(), value);
    }
    let body: BTreeMap<&str, serde_json::Value> = BTreeMap::from([("scores", serde_json::Value::Object(scores))]);
    std::fs::write(&args.response, serde_json::to_vec(&body).expect("encode")).expect("write response");
}
