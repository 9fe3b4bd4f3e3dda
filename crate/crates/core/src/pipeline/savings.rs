use serde::{Deserialize, Serialize};

use super::{AssetRecord, PipelineError, Stage};

/// Speedup of screen-then-refine over fine-rendering every asset, with mean
/// coarse cost `c_c`, mean fine cost `c_f` and rejection fraction `r`:
/// `S = c_f / (c_c + (1 - r) c_f)`.
pub fn two_pass_speedup(c_c: f64, c_f: f64, r: f64) -> f64 {
    c_f / (c_c + (1.0 - r) * c_f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub coarse_assets: usize,
    pub fine_assets: usize,
    pub screened_assets: usize,
    pub coarse_ms_mean: f64,
    pub fine_ms_mean: f64,
    pub rejection_fraction: f64,
    pub speedup: f64,
}

fn mean_timing(records: &[AssetRecord], stage: Stage) -> (usize, f64) {
    let mut v: Vec<f64> = records.iter().filter_map(|r| r.timings.get(stage.name()).copied()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (n, if n == 0 { 0.0 } else { v.iter().sum::<f64>() / n as f64 })
}

/// Measured per-asset costs and the resulting speedup.
pub fn compute_savings_report(records: &[AssetRecord]) -> Result<SavingsReport, PipelineError> {
    let (coarse_assets, coarse_ms_mean) = mean_timing(records, Stage::Coarse);
    let (fine_assets, fine_ms_mean) = mean_timing(records, Stage::Fine);
    if coarse_assets == 0 || fine_assets == 0 {
        return Err(PipelineError::InsufficientData(format!(
            "need coarse and fine timings, have {coarse_assets} coarse and {fine_assets} fine"
        )));
    }
    let decisions: Vec<bool> = records.iter().filter_map(|r| r.decision.map(|d| d.keep)).collect();
    if decisions.is_empty() {
        return Err(PipelineError::InsufficientData("no filter decisions recorded".into()));
    }
    let rejected = decisions.iter().filter(|k| !**k).count();
    let rejection_fraction = rejected as f64 / decisions.len() as f64;
    Ok(SavingsReport {
        coarse_assets,
        fine_assets,
        screened_assets: decisions.len(),
        coarse_ms_mean,
        fine_ms_mean,
        rejection_fraction,
        speedup: two_pass_speedup(coarse_ms_mean, fine_ms_mean, rejection_fraction),
    })
}
