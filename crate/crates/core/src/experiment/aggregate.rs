use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::campaign::{CampaignResults, CampaignRow};
use crate::error::{Error, Result};

pub const RHO_BANDS: [(f64, f64); 4] = [(0.1, 0.3), (0.3, 0.5), (0.5, 0.7), (0.7, 0.9)];
pub const ETA_BANDS: [(f64, f64); 6] = [(0.1, 0.4), (0.4, 0.7), (0.7, 1.0), (1.0, 4.0), (4.0, 7.0), (7.0, 10.0)];
pub const PERCENTILES: [u32; 5] = [10, 25, 50, 75, 90];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BucketBy {
    None,
    N,
    RhoBand,
    EtaBand,
}

impl FromStr for BucketBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "n" => Ok(Self::N),
            "rho_band" | "rho" => Ok(Self::RhoBand),
            "eta_band" | "eta" => Ok(Self::EtaBand),
            _ => Err(Error::InvalidParameter(format!("unknown bucket `{s}`"))),
        }
    }
}

/// Band of `x` among half-open `[lo, hi)` bands.
pub fn band_of(x: f64, bands: &[(f64, f64)]) -> Option<usize> {
    bands.iter().position(|&(lo, hi)| lo <= x && x < hi)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "by", rename_all = "snake_case")]
pub enum BucketKey {
    All,
    N { n: usize },
    RhoBand { lo: String, hi: String },
    EtaBand { lo: String, hi: String },
}

impl fmt::Display for BucketKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::All => write!(f, "all"),
            Self::N { n } => write!(f, "n={n}"),
            Self::RhoBand { lo, hi } => write!(f, "{lo}<=rho<{hi}"),
            Self::EtaBand { lo, hi } => write!(f, "{lo}<=eta<{hi}"),
        }
    }
}

/// Bucket of a row, keyed on the drawn (pre-rounding) ρ and η so every
/// generated instance falls inside the published bands.
fn bucket(row: &CampaignRow, by: BucketBy) -> Option<(usize, BucketKey)> {
    let banded = |x: f64, bands: &[(f64, f64)], rho: bool| {
        band_of(x, bands).map(|i| {
            let (lo, hi) = (bands[i].0.to_string(), bands[i].1.to_string());
            (i, if rho { BucketKey::RhoBand { lo, hi } } else { BucketKey::EtaBand { lo, hi } })
        })
    };
    match by {
        BucketBy::None => Some((0, BucketKey::All)),
        BucketBy::N => Some((row.n, BucketKey::N { n: row.n })),
        BucketBy::RhoBand => banded(row.target_rho, &RHO_BANDS, true),
        BucketBy::EtaBand => banded(row.target_eta, &ETA_BANDS, false),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// `100 (g_base − g) / g_base`.
    Improvement { policy: String, baseline: String },
    /// `100 (g − g*) / g*` on DP-feasible rows.
    Suboptimality { policy: String },
}

impl Comparison {
    pub fn label(&self) -> String {
        match self {
            Self::Improvement { policy, baseline } => format!("{policy} vs {baseline}"),
            Self::Suboptimality { policy } => format!("{policy} vs optimal"),
        }
    }

    fn value(&self, results: &CampaignResults, row: &CampaignRow) -> Result<Option<f64>> {
        let cost = |label: &str| -> Result<Option<f64>> {
            let i = results
                .policy_index(label)
                .ok_or_else(|| Error::InvalidParameter(format!("policy `{label}` not in results")))?;
            Ok(row.results[i].as_ref().map(|r| r.cost))
        };
        Ok(match self {
            Self::Improvement { policy, baseline } => match (cost(policy)?, cost(baseline)?) {
                (Some(g), Some(base)) if base > 0.0 => Some(improvement(base, g)),
                _ => None,
            },
            Self::Suboptimality { policy } => match (cost(policy)?, row.g_star) {
                (Some(g), Some(opt)) if row.feasible && opt > 0.0 => Some(suboptimality(g, opt)),
                _ => None,
            },
        })
    }
}

pub fn improvement(baseline: f64, g: f64) -> f64 {
    100.0 * (baseline - g) / baseline
}

pub fn suboptimality(g: f64, g_star: f64) -> f64 {
    100.0 * (g - g_star) / g_star
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// `1.96 s / √n`.
    pub half_width: f64,
    /// Nearest-rank percentiles at [`PERCENTILES`].
    pub percentiles: [f64; 5],
}

/// Nearest-rank percentile of an ascending sample.
pub fn nearest_rank(sorted: &[f64], p: u32) -> f64 {
    let n = sorted.len();
    let rank = (p as usize * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    // Summing in sorted order keeps the mean independent of row order.
    let mean = sorted.iter().sum::<f64>() / n;
    let half_width = if values.len() > 1 {
        let var = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        1.96 * (var / n).sqrt()
    } else {
        0.0
    };
    Some(Summary {
        count: values.len(),
        mean,
        half_width,
        percentiles: PERCENTILES.map(|p| nearest_rank(&sorted, p)),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub comparison: String,
    pub bucket: BucketKey,
    #[serde(flatten)]
    pub summary: Summary,
}

/// One row per (bucket, comparison) with at least one value, buckets in
/// band order.
pub fn aggregate(results: &CampaignResults, comparisons: &[Comparison], by: BucketBy) -> Result<Vec<AggregateRow>> {
    if results.rows.is_empty() {
        return Err(Error::Empty("no result rows".into()));
    }
    let mut keys: Vec<(usize, BucketKey)> = results.rows.iter().filter_map(|r| bucket(r, by)).collect();
    keys.sort();
    keys.dedup();
    let mut out = Vec::new();
    for (_, key) in &keys {
        for cmp in comparisons {
            let mut values = Vec::new();
            for row in &results.rows {
                if bucket(row, by).is_some_and(|(_, k)| &k == key) {
                    if let Some(v) = cmp.value(results, row)? {
                        values.push(v);
                    }
                }
            }
            if let Some(summary) = summarize(&values) {
                out.push(AggregateRow {
                    comparison: cmp.label(),
                    bucket: key.clone(),
                    summary,
                });
            }
        }
    }
    Ok(out)
}

/// Improvement of every policy over `baseline` (skipping the baseline).
pub fn improvements_over(results: &CampaignResults, baseline: &str) -> Vec<Comparison> {
    results
        .labels
        .iter()
        .filter(|l| *l != baseline)
        .map(|l| Comparison::Improvement {
            policy: l.clone(),
            baseline: baseline.into(),
        })
        .collect()
}

pub fn suboptimalities(results: &CampaignResults) -> Vec<Comparison> {
    results.labels.iter().map(|l| Comparison::Suboptimality { policy: l.clone() }).collect()
}

pub fn write_aggregate_csv<W: std::io::Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["comparison", "bucket", "count", "mean", "half_width", "p10", "p25", "p50", "p75", "p90"])?;
    for r in rows {
        let s = &r.summary;
        let mut rec = vec![
            r.comparison.clone(),
            r.bucket.to_string(),
            s.count.to_string(),
            format!("{:.4}", s.mean),
            format!("{:.4}", s.half_width),
        ];
        rec.extend(s.percentiles.iter().map(|p| format!("{p:.4}")));
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}
