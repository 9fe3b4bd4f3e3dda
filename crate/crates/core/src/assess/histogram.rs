use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{AssessError, FilterPolicy, ScoreReport};

pub const SCORE_RANGE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Aesthetic,
    Quality,
}

impl Metric {
    pub const ALL: [Metric; 2] = [Metric::Aesthetic, Metric::Quality];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Aesthetic => "aesthetic",
            Metric::Quality => "quality",
        }
    }

    pub fn of(self, report: &ScoreReport) -> f64 {
        match self {
            Metric::Aesthetic => report.aesthetic,
            Metric::Quality => report.quality,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub metric: Metric,
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub total: u64,
    pub bins: Vec<HistogramBin>,
    pub aesthetic_threshold: f64,
    pub quality_threshold: f64,
    pub fraction_aesthetic_above: f64,
    pub fraction_quality_above: f64,
    pub fraction_both_above: f64,
}

impl Histogram {
    pub fn bins_for(&self, metric: Metric) -> impl Iterator<Item = &HistogramBin> {
        self.bins.iter().filter(move |b| b.metric == metric)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,bin_lo,bin_hi,count\n");
        for b in &self.bins {
            let _ = writeln!(out, "{},{},{},{}", b.metric.name(), b.lo, b.hi, b.count);
        }
        out
    }
}

/// Dense uniform bins over [0, 10] for both metrics. Scores outside the range
/// land in the first or last bin; the last bin is closed on the right.
pub fn score_histogram(
    reports: &[ScoreReport],
    bin_width: f64,
    policy: &FilterPolicy,
) -> Result<Histogram, AssessError> {
    if reports.is_empty() {
        return Err(AssessError::InvalidInput("no reports".into()));
    }
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(AssessError::InvalidInput(format!("bin width {bin_width} must be positive")));
    }
    let n_bins = ((SCORE_RANGE / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut bins = Vec::with_capacity(2 * n_bins);
    for metric in Metric::ALL {
        let mut counts = vec![0u64; n_bins];
        for r in reports {
            let v = metric.of(r);
            let idx = ((v / bin_width).floor().max(0.0) as usize).min(n_bins - 1);
            counts[idx] += 1;
        }
        for (i, count) in counts.into_iter().enumerate() {
            bins.push(HistogramBin {
                metric,
                lo: i as f64 * bin_width,
                hi: ((i + 1) as f64 * bin_width).min(SCORE_RANGE),
                count,
            });
        }
    }
    let total = reports.len() as f64;
    let frac = |pred: &dyn Fn(&ScoreReport) -> bool| reports.iter().filter(|r| pred(r)).count() as f64 / total;
    Ok(Histogram {
        bin_width,
        total: reports.len() as u64,
        bins,
        aesthetic_threshold: policy.aesthetic_threshold,
        quality_threshold: policy.quality_threshold,
        fraction_aesthetic_above: frac(&|r| r.aesthetic > policy.aesthetic_threshold),
        fraction_quality_above: frac(&|r| r.quality > policy.quality_threshold),
        fraction_both_above: frac(&|r| super::apply_filter(r, policy).keep),
    })
}
