use crate::encounter::{bin_count, bin_index};
use crate::error::Result;

use super::engine::Metrics;

/// z-score of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.96;

/// Metrics relative to a baseline; `None` where the baseline field is zero
/// or either side is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NormalizedMetrics {
    pub delivery_ratio: Option<f64>,
    pub avg_delay: Option<f64>,
    pub transmission_overhead: Option<f64>,
    pub storage_overhead: Option<f64>,
}

fn ratio(x: f64, base: f64) -> Option<f64> {
    (base != 0.0).then(|| x / base)
}

pub fn normalize_metrics(m: &Metrics, baseline: &Metrics) -> NormalizedMetrics {
    NormalizedMetrics {
        delivery_ratio: ratio(m.delivery_ratio, baseline.delivery_ratio),
        avg_delay: match (m.avg_delay, baseline.avg_delay) {
            (Some(x), Some(b)) => ratio(x, b),
            _ => None,
        },
        transmission_overhead: ratio(m.transmission_overhead as f64, baseline.transmission_overhead as f64),
        storage_overhead: ratio(m.storage_overhead as f64, baseline.storage_overhead as f64),
    }
}

/// Sample mean with a 95% normal-approximation half-width
/// `1.96 * s / sqrt(n)`, `s` being the sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

pub fn mean_ci(values: &[f64]) -> Option<MeanCi> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let half_width = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Z_95 * var.sqrt() / (n as f64).sqrt()
    };
    Some(MeanCi { mean, half_width, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitRow {
    pub lo: f64,
    pub hi: f64,
    pub delivery_ratio: MeanCi,
    /// Over runs that delivered at least once.
    pub avg_delay: Option<MeanCi>,
}

/// Buckets runs by the sender's similarity to the target. Empty bins are
/// omitted.
pub fn split_stats_by_sender_similarity(runs: &[(f64, Metrics)], bin_width: f64) -> Result<Vec<SplitRow>> {
    let bins = bin_count(bin_width)?;
    let mut buckets: Vec<Vec<&Metrics>> = vec![Vec::new(); bins];
    for (sim, m) in runs {
        buckets[bin_index(*sim, bins)].push(m);
    }
    Ok(buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| !b.is_empty())
        .map(|(i, b)| {
            let ratios: Vec<f64> = b.iter().map(|m| m.delivery_ratio).collect();
            let delays: Vec<f64> = b.iter().filter_map(|m| m.avg_delay).collect();
            SplitRow {
                lo: i as f64 * bin_width,
                hi: ((i + 1) as f64 * bin_width).min(1.0),
                delivery_ratio: mean_ci(&ratios).expect("non-empty bin"),
                avg_delay: mean_ci(&delays),
            }
        })
        .collect())
}
