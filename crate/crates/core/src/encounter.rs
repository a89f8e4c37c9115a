//! Pairwise encounters derived from shared-location time overlap, and the
//! similarity-binned encounter statistics built on them.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use crate::error::{Error, Result};
use crate::profile::{similarity, BehavioralProfile};
use crate::trace::{Trace, TraceRecord};

pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

/// Co-presence of two nodes at one location; `node_a < node_b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EncounterEvent {
    pub node_a: String,
    pub node_b: String,
    pub location: String,
    pub start: i64,
    pub end: i64,
}

impl EncounterEvent {
    pub fn duration(&self) -> i64 {
        self.end - self.start
    }

    fn order_key(&self) -> (i64, &str, &str, &str, i64) {
        (self.start, &self.node_a, &self.node_b, &self.location, self.end)
    }
}

/// Encounters ordered by `(start, node_a, node_b, location, end)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EncounterStream {
    events: Vec<EncounterEvent>,
    by_pair: BTreeMap<(String, String), Vec<usize>>,
}

impl EncounterStream {
    pub fn new(mut events: Vec<EncounterEvent>) -> Self {
        events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        let mut by_pair: BTreeMap<(String, String), Vec<usize>> = BTreeMap::new();
        for (i, e) in events.iter().enumerate() {
            by_pair.entry((e.node_a.clone(), e.node_b.clone())).or_default().push(i);
        }
        Self { events, by_pair }
    }

    pub fn events(&self) -> &[EncounterEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events between two nodes, in stream order.
    pub fn between<'a>(&'a self, x: &str, y: &str) -> impl Iterator<Item = &'a EncounterEvent> + 'a {
        let key = if x < y {
            (x.to_string(), y.to_string())
        } else {
            (y.to_string(), x.to_string())
        };
        self.by_pair
            .get(&key)
            .into_iter()
            .flatten()
            .map(move |&i| &self.events[i])
    }

    /// Total encounter seconds between two nodes.
    pub fn pair_duration(&self, x: &str, y: &str) -> i64 {
        self.between(x, y).map(EncounterEvent::duration).sum()
    }

    /// Distinct unordered pairs that met.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_pair.keys().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// `E(node)`: the set of nodes this node met.
    pub fn encountered_sets(&self) -> BTreeMap<&str, BTreeSet<&str>> {
        let mut sets: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (a, b) in self.pairs() {
            sets.entry(a).or_default().insert(b);
            sets.entry(b).or_default().insert(a);
        }
        sets
    }

    /// Writes `node_a,node_b,location,start,end` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.events {
            writeln!(out, "{},{},{},{},{}", e.node_a, e.node_b, e.location, e.start, e.end)?;
        }
        Ok(())
    }
}

/// Emits the positive-length intersection of every pair of records from
/// different nodes at the same location, merging overlaps per
/// (pair, location).
/// Node pair and location.
type PairAt<'a> = (&'a str, &'a str, &'a str);

pub fn derive_encounters(trace: &Trace) -> EncounterStream {
    let mut by_location: BTreeMap<&str, Vec<&TraceRecord>> = BTreeMap::new();
    for r in trace.records() {
        by_location.entry(&r.location).or_default().push(r);
    }

    let mut raw: BTreeMap<PairAt<'_>, Vec<(i64, i64)>> = BTreeMap::new();
    for (location, records) in &by_location {
        // records inherit the trace's start ordering
        let mut active: Vec<&TraceRecord> = Vec::new();
        for r in records {
            active.retain(|a| a.end > r.start);
            for a in &active {
                if a.node == r.node {
                    continue;
                }
                let (lo, hi) = (r.start, a.end.min(r.end));
                if hi > lo {
                    let (x, y) = if a.node < r.node {
                        (&a.node, &r.node)
                    } else {
                        (&r.node, &a.node)
                    };
                    raw.entry((x.as_str(), y.as_str(), *location))
                        .or_default()
                        .push((lo, hi));
                }
            }
            active.push(r);
        }
    }

    let mut events = Vec::new();
    for ((a, b, location), mut intervals) in raw {
        intervals.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match merged.last_mut() {
                Some(last) if lo < last.1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        events.extend(merged.into_iter().map(|(start, end)| EncounterEvent {
            node_a: a.to_string(),
            node_b: b.to_string(),
            location: location.to_string(),
            start,
            end,
        }));
    }
    EncounterStream::new(events)
}

/// Encounter aggregates for node pairs whose similarity falls in `[lo, hi)`
/// (the last bin is closed).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityBinStats {
    pub lo: f64,
    pub hi: f64,
    /// Mean total encounter seconds per pair.
    pub total_duration: f64,
    pub encounter_probability: f64,
    /// Mean Jaccard index of encountered-node sets; `None` when no pair in
    /// the bin has a non-empty union.
    pub encountered_set_similarity: Option<f64>,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncounterStats {
    /// Non-empty bins in ascending similarity order.
    pub bins: Vec<SimilarityBinStats>,
    /// Pairs skipped because a node had no profile.
    pub excluded_pairs: usize,
}

/// Number of bins when `bin_width` evenly divides `[0, 1]`.
pub fn bin_count(bin_width: f64) -> Result<usize> {
    let n = (1.0 / bin_width).round();
    if !(bin_width > 0.0 && bin_width <= 1.0) || ((1.0 / bin_width) - n).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "bin width {bin_width} does not divide [0, 1]"
        )));
    }
    Ok(n as usize)
}

pub fn bin_index(value: f64, bins: usize) -> usize {
    ((value * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

/// `|E(A) ∩ E(B)| / |E(A) ∪ E(B)|`, or `None` for an empty union.
pub fn jaccard(a: &BTreeSet<&str>, b: &BTreeSet<&str>) -> Option<f64> {
    let union = a.union(b).count();
    (union > 0).then(|| a.intersection(b).count() as f64 / union as f64)
}

#[derive(Default, Clone)]
struct BinAccumulator {
    pairs: usize,
    met: usize,
    duration: f64,
    jaccard_sum: f64,
    jaccard_pairs: usize,
}

/// Bins every node pair by its profile similarity and aggregates encounter
/// duration, encounter probability and encountered-set overlap per bin.
pub fn encounter_stats(
    stream: &EncounterStream,
    profiles: &BTreeMap<String, BehavioralProfile>,
    bin_width: f64,
) -> Result<EncounterStats> {
    let nbins = bin_count(bin_width)?;
    let mut universe: BTreeSet<&str> = profiles.keys().map(String::as_str).collect();
    for e in stream.events() {
        universe.insert(&e.node_a);
        universe.insert(&e.node_b);
    }
    let nodes: Vec<&str> = universe.into_iter().collect();
    let sets = stream.encountered_sets();
    let empty = BTreeSet::new();

    let mut durations: BTreeMap<(&str, &str), i64> = BTreeMap::new();
    for e in stream.events() {
        *durations.entry((&e.node_a, &e.node_b)).or_default() += e.duration();
    }

    let mut acc = vec![BinAccumulator::default(); nbins];
    let mut excluded = 0usize;
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[i + 1..] {
            let (Some(pa), Some(pb)) = (profiles.get(*a), profiles.get(*b)) else {
                excluded += 1;
                continue;
            };
            let bin = &mut acc[bin_index(similarity(pa, pb), nbins)];
            bin.pairs += 1;
            let d = durations.get(&(*a, *b)).copied().unwrap_or(0);
            if d > 0 {
                bin.met += 1;
            }
            bin.duration += d as f64;
            let ea = sets.get(a).unwrap_or(&empty);
            let eb = sets.get(b).unwrap_or(&empty);
            if let Some(j) = jaccard(ea, eb) {
                bin.jaccard_sum += j;
                bin.jaccard_pairs += 1;
            }
        }
    }
    if excluded > 0 {
        log::warn!("{excluded} node pairs excluded for lack of a profile");
    }

    let bins = acc
        .into_iter()
        .enumerate()
        .filter(|(_, b)| b.pairs > 0)
        .map(|(i, b)| SimilarityBinStats {
            lo: i as f64 * bin_width,
            hi: (i + 1) as f64 * bin_width,
            total_duration: b.duration / b.pairs as f64,
            encounter_probability: b.met as f64 / b.pairs as f64,
            encountered_set_similarity: (b.jaccard_pairs > 0).then(|| b.jaccard_sum / b.jaccard_pairs as f64),
            pair_count: b.pairs,
        })
        .collect();
    Ok(EncounterStats {
        bins,
        excluded_pairs: excluded,
    })
}
