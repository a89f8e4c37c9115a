//! Temporal stability of behavioral profiles: self-similarity of a user
//! across a time gap, and correlation of pair similarities across a gap.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::profile::{build_association_matrix, compute_profile, similarity, BehavioralProfile};
use crate::trace::{DailyUsage, Trace};

/// Stability measurements use untruncated profiles so that a window compared
/// with itself scores exactly one.
const STABILITY_POWER: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMetric {
    SelfSimilarity,
    PairCorrelation,
}

impl StabilityMetric {
    pub fn as_str(self) -> &'static str {
        match self {
            StabilityMetric::SelfSimilarity => "self_similarity",
            StabilityMetric::PairCorrelation => "pair_correlation",
        }
    }
}

/// One point of a stability curve: history length `d` and gap `t_gap`, both
/// in days.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPoint {
    pub d: u32,
    pub t_gap: u32,
    pub metric: StabilityMetric,
    pub value: f64,
    pub sample_count: usize,
    /// Users (self-similarity) or pairs (correlation) skipped for an empty
    /// window.
    pub skipped: usize,
}

/// Per-user profiles of every trailing `d`-day window, keyed by the
/// window's last day.
struct WindowProfiles {
    first_end: i64,
    last_end: i64,
    /// `profiles[user][end - first_end]`
    profiles: Vec<Vec<Option<BehavioralProfile>>>,
}

impl WindowProfiles {
    fn build(trace: &Trace, d: u32) -> Result<Self> {
        let days = trace
            .day_range()
            .ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
        let first_end = *days.start() + d as i64 - 1;
        let last_end = *days.end();
        if first_end > last_end {
            return Err(Error::InsufficientData(format!("trace shorter than d = {d} days")));
        }
        let usage = DailyUsage::from_trace(trace);
        let nodes: Vec<&str> = usage.nodes().collect();
        let profiles = nodes
            .par_iter()
            .map(|node| {
                let all = usage.vectors(node, *days.start()..=last_end);
                (first_end..=last_end)
                    .map(|end| {
                        let window: Vec<_> = all
                            .vectors
                            .iter()
                            .filter(|v| v.day > end - d as i64 && v.day <= end)
                            .cloned()
                            .collect();
                        build_association_matrix(&window)
                            .and_then(|m| compute_profile(&m, STABILITY_POWER))
                            .ok()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            first_end,
            last_end,
            profiles,
        })
    }

    fn get(&self, user: usize, end: i64) -> Option<&BehavioralProfile> {
        self.profiles[user][(end - self.first_end) as usize].as_ref()
    }

    /// Anchor days `t` such that both `t` and `t + gap` end a full window.
    fn anchors(&self, gap: u32) -> impl Iterator<Item = i64> + '_ {
        self.first_end..=self.last_end - gap as i64
    }

    fn users(&self) -> usize {
        self.profiles.len()
    }
}

/// Mean similarity between each user's trailing-`d`-day profile at `t` and at
/// `t + t_gap`, over all users and anchor days.
pub fn self_stability(trace: &Trace, d: u32, t_gap: u32) -> Result<StabilityPoint> {
    check_d(d)?;
    let windows = WindowProfiles::build(trace, d)?;
    let mut sum = 0.0;
    let mut samples = 0usize;
    let mut skipped = 0usize;
    for user in 0..windows.users() {
        for t in windows.anchors(t_gap) {
            match (windows.get(user, t), windows.get(user, t + t_gap as i64)) {
                (Some(a), Some(b)) => {
                    sum += similarity(a, b);
                    samples += 1;
                }
                _ => skipped += 1,
            }
        }
    }
    if samples == 0 {
        return Err(Error::InsufficientData(format!(
            "no user has data in both windows for d = {d}, T = {t_gap}"
        )));
    }
    Ok(StabilityPoint {
        d,
        t_gap,
        metric: StabilityMetric::SelfSimilarity,
        value: sum / samples as f64,
        sample_count: samples,
        skipped,
    })
}

/// Pearson correlation (population deviations) between pair similarities
/// at `t` and at `t + t_gap`, pooled over all eligible pairs and anchors.
pub fn pair_stability_correlation(trace: &Trace, d: u32, t_gap: u32) -> Result<StabilityPoint> {
    check_d(d)?;
    let windows = WindowProfiles::build(trace, d)?;
    let users = windows.users();
    let pairs: Vec<(usize, usize)> = (0..users).flat_map(|a| (a + 1..users).map(move |b| (a, b))).collect();

    let pair_sims = |end: i64| -> Vec<Option<f64>> {
        pairs
            .iter()
            .map(|&(a, b)| match (windows.get(a, end), windows.get(b, end)) {
                (Some(pa), Some(pb)) => Some(similarity(pa, pb)),
                _ => None,
            })
            .collect()
    };
    let ends: Vec<i64> = (windows.first_end..=windows.last_end).collect();
    let by_end: BTreeMap<i64, Vec<Option<f64>>> = ends.par_iter().map(|&e| (e, pair_sims(e))).collect();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut skipped = 0usize;
    for t in windows.anchors(t_gap) {
        let x_row = &by_end[&t];
        let y_row = &by_end[&(t + t_gap as i64)];
        for (x, y) in x_row.iter().zip(y_row) {
            match (x, y) {
                (Some(x), Some(y)) => {
                    xs.push(*x);
                    ys.push(*y);
                }
                _ => skipped += 1,
            }
        }
    }
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "fewer than two eligible pairs for d = {d}, T = {t_gap}"
        )));
    }
    let r = pearson_population(&xs, &ys)?;
    Ok(StabilityPoint {
        d,
        t_gap,
        metric: StabilityMetric::PairCorrelation,
        value: r,
        sample_count: xs.len(),
        skipped,
    })
}

/// `sum (x - mean_x)(y - mean_y) / (N s_x s_y)` with population deviations.
pub fn pearson_population(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sx = (xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n).sqrt();
    let sy = (ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / n).sqrt();
    if sx == 0.0 {
        return Err(Error::UndefinedCorrelation("X"));
    }
    if sy == 0.0 {
        return Err(Error::UndefinedCorrelation("Y"));
    }
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok((cov / (n * sx * sy)).clamp(-1.0, 1.0))
}

fn check_d(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidArgument(
            "history length d must be at least one day".into(),
        ));
    }
    Ok(())
}

/// Writes `d,T,metric,value,sample_count` rows. A `None` value marks a
/// skipped grid point and is written as `NA`.
pub fn write_stability_csv<W: Write>(
    rows: &[(u32, u32, StabilityMetric, Option<StabilityPoint>)],
    mut out: W,
) -> Result<()> {
    writeln!(out, "d,T,metric,value,sample_count")?;
    for (d, t, metric, point) in rows {
        match point {
            Some(p) => writeln!(out, "{d},{t},{},{:.9},{}", metric.as_str(), p.value, p.sample_count)?,
            None => writeln!(out, "{d},{t},{},NA,0", metric.as_str())?,
        }
    }
    Ok(())
}
