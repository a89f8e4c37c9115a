//! Session traces: parsing, synthetic generation, splitting and per-day
//! location-fraction vectors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;

/// One association interval of a node at a location.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TraceRecord {
    pub node: String,
    pub location: String,
    pub start: i64,
    pub end: i64,
}

impl TraceRecord {
    pub fn new(node: impl Into<String>, location: impl Into<String>, start: i64, end: i64) -> Self {
        Self {
            node: node.into(),
            location: location.into(),
            start,
            end,
        }
    }

    fn is_valid(&self) -> bool {
        self.start < self.end && !self.node.is_empty() && !self.location.is_empty()
    }

    fn sort_key(&self) -> (i64, &str, &str, i64) {
        (self.start, &self.node, &self.location, self.end)
    }
}

/// A time-sorted collection of association records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    records: Vec<TraceRecord>,
    epoch: i64,
    nodes: BTreeSet<String>,
    locations: BTreeSet<String>,
}

impl Trace {
    /// Builds a trace, sorting records by start time. Day boundaries fall at
    /// `epoch + k * 86400`.
    pub fn new(mut records: Vec<TraceRecord>, epoch: i64) -> Result<Self> {
        if let Some(bad) = records.iter().find(|r| !r.is_valid()) {
            return Err(Error::InvalidArgument(format!(
                "invalid record {}@{} [{}, {}]",
                bad.node, bad.location, bad.start, bad.end
            )));
        }
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let nodes = records.iter().map(|r| r.node.clone()).collect();
        let locations = records.iter().map(|r| r.location.clone()).collect();
        Ok(Self {
            records,
            epoch,
            nodes,
            locations,
        })
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    pub fn epoch(&self) -> i64 {
        self.epoch
    }

    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn locations(&self) -> &BTreeSet<String> {
        &self.locations
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `[earliest start, latest end]`, or `None` for an empty trace.
    pub fn span(&self) -> Option<(i64, i64)> {
        let first = self.records.first()?.start;
        let last = self.records.iter().map(|r| r.end).max()?;
        Some((first, last))
    }

    /// Day index of a timestamp relative to the epoch.
    pub fn day_of(&self, t: i64) -> i64 {
        (t - self.epoch).div_euclid(SECONDS_PER_DAY)
    }

    /// Inclusive range of day indices touched by the trace.
    pub fn day_range(&self) -> Option<RangeInclusive<i64>> {
        let (start, end) = self.span()?;
        Some(self.day_of(start)..=self.day_of(end - 1))
    }

    fn day_start(&self, day: i64) -> i64 {
        self.epoch + day * SECONDS_PER_DAY
    }

    /// Re-keys locations through an AP → building map; unmapped tokens pass
    /// through unchanged.
    pub fn remap_locations(&self, remap: &LocationRemap) -> Result<Trace> {
        let records = self
            .records
            .iter()
            .map(|r| TraceRecord {
                location: remap.map(&r.location).to_string(),
                ..r.clone()
            })
            .collect();
        Trace::new(records, self.epoch)
    }
}

/// Column layout of a delimiter-separated trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceSchema {
    pub delimiter: char,
    pub node: usize,
    pub location: usize,
    pub start: usize,
    pub end: usize,
}

impl Default for TraceSchema {
    fn default() -> Self {
        Self {
            delimiter: ',',
            node: 0,
            location: 1,
            start: 2,
            end: 3,
        }
    }
}

impl TraceSchema {
    /// Parses a column descriptor such as `"node,location,start,end"`; extra
    /// columns may be named anything and are ignored.
    pub fn from_columns(columns: &str, delimiter: char) -> Result<Self> {
        let names: Vec<&str> = columns.split(',').map(str::trim).collect();
        let find = |name: &str| {
            names
                .iter()
                .position(|c| c.eq_ignore_ascii_case(name))
                .ok_or_else(|| Error::InvalidArgument(format!("schema lacks a `{name}` column")))
        };
        Ok(Self {
            delimiter,
            node: find("node")?,
            location: find("location")?,
            start: find("start")?,
            end: find("end")?,
        })
    }

    fn parse_line(&self, line: &str) -> Option<TraceRecord> {
        let fields: Vec<&str> = line.split(self.delimiter).map(str::trim).collect();
        let record = TraceRecord {
            node: fields.get(self.node)?.to_string(),
            location: fields.get(self.location)?.to_string(),
            start: fields.get(self.start)?.parse().ok()?,
            end: fields.get(self.end)?.parse().ok()?,
        };
        record.is_valid().then_some(record)
    }
}

/// Outcome of [`parse_trace`].
#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub trace: Trace,
    pub malformed: usize,
}

/// Reads a trace. Blank lines and lines starting with `#` are skipped.
pub fn parse_trace<R: BufRead>(reader: R, schema: &TraceSchema, epoch: i64) -> Result<ParsedTrace> {
    let mut records = Vec::new();
    let mut malformed = 0usize;
    let mut total = 0usize;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::Input(format!("unreadable trace stream: {e}")))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        total += 1;
        match schema.parse_line(trimmed) {
            Some(r) => records.push(r),
            None => malformed += 1,
        }
    }
    if malformed * 2 > total {
        return Err(Error::SchemaMismatch { malformed, total });
    }
    if malformed > 0 {
        log::warn!("skipped {malformed} malformed trace lines of {total}");
    }
    Ok(ParsedTrace {
        trace: Trace::new(records, epoch)?,
        malformed,
    })
}

/// Writes the trace in the default column order.
pub fn write_trace<W: Write>(trace: &Trace, mut out: W, delimiter: char) -> Result<()> {
    for r in trace.records() {
        writeln!(
            out,
            "{}{d}{}{d}{}{d}{}",
            r.node,
            r.location,
            r.start,
            r.end,
            d = delimiter
        )?;
    }
    Ok(())
}

/// AP token → building token mapping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LocationRemap {
    map: HashMap<String, String>,
}

impl LocationRemap {
    pub fn parse<R: BufRead>(reader: R, delimiter: char) -> Result<Self> {
        let mut map = HashMap::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split(delimiter).map(str::trim);
            match (parts.next(), parts.next()) {
                (Some(ap), Some(building)) if !ap.is_empty() && !building.is_empty() => {
                    map.insert(ap.to_string(), building.to_string());
                }
                _ => {
                    return Err(Error::Input(format!("remap line {}: expected two columns", lineno + 1)));
                }
            }
        }
        Ok(Self { map })
    }

    pub fn map<'a>(&'a self, location: &'a str) -> &'a str {
        self.map.get(location).map(String::as_str).unwrap_or(location)
    }
}

/// Parameters of the community-structured trace generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub num_nodes: usize,
    pub num_locations: usize,
    pub num_communities: usize,
    pub days: usize,
    pub mean_sessions_per_day: f64,
    pub session_mean_s: f64,
    pub session_sigma_s: f64,
    pub intra_community_location_bias: f64,
    /// Start of the daily activity window, seconds after midnight.
    pub active_from_s: i64,
    /// End of the daily activity window, seconds after midnight.
    pub active_until_s: i64,
    pub rng_seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            num_nodes: 200,
            num_locations: 20,
            num_communities: 20,
            days: 42,
            mean_sessions_per_day: 6.0,
            session_mean_s: 7200.0,
            session_sigma_s: 2400.0,
            intra_community_location_bias: 0.9,
            active_from_s: 0,
            active_until_s: SECONDS_PER_DAY,
            rng_seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.num_nodes == 0 || self.num_locations == 0 || self.days == 0 {
            return bad("nodes, locations and days must be positive");
        }
        if self.num_communities == 0
            || self.num_communities > self.num_nodes
            || self.num_communities > self.num_locations
        {
            return bad("communities must be in 1..=min(nodes, locations)");
        }
        if !(0.0..=1.0).contains(&self.intra_community_location_bias) {
            return bad("intra_community_location_bias must lie in [0, 1]");
        }
        if !(self.mean_sessions_per_day.is_finite() && self.mean_sessions_per_day > 0.0) {
            return bad("mean_sessions_per_day must be positive");
        }
        if !(self.session_mean_s.is_finite()
            && self.session_mean_s > 0.0
            && self.session_sigma_s.is_finite()
            && self.session_sigma_s >= 0.0)
        {
            return bad("session duration parameters must be positive");
        }
        if !(0 <= self.active_from_s
            && self.active_from_s < self.active_until_s
            && self.active_until_s <= SECONDS_PER_DAY)
        {
            return bad("active window must satisfy 0 <= from < until <= 86400");
        }
        Ok(())
    }

    /// Community of node `i`; communities are contiguous blocks of nodes.
    pub fn community_of(&self, node: usize) -> usize {
        node * self.num_communities / self.num_nodes
    }

    /// Home locations of a community; locations are dealt round-robin.
    pub fn home_locations(&self, community: usize) -> Vec<usize> {
        (community..self.num_locations).step_by(self.num_communities).collect()
    }

    pub fn node_token(&self, node: usize) -> String {
        let width = digits(self.num_nodes - 1);
        format!("n{node:0width$}")
    }

    pub fn location_token(&self, location: usize) -> String {
        let width = digits(self.num_locations - 1);
        format!("L{location:0width$}")
    }
}

fn digits(mut n: usize) -> usize {
    let mut d = 1;
    while n >= 10 {
        n /= 10;
        d += 1;
    }
    d
}

/// Generates a trace in which each node favors its community's home
/// locations. Deterministic in the config, including the seed.
pub fn generate_synthetic_trace(cfg: &SyntheticConfig) -> Result<Trace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let sessions =
        Poisson::new(cfg.mean_sessions_per_day).map_err(|e| Error::InvalidConfig(format!("sessions per day: {e}")))?;
    let duration = Normal::new(cfg.session_mean_s, cfg.session_sigma_s)
        .map_err(|e| Error::InvalidConfig(format!("session duration: {e}")))?;
    let window = cfg.active_until_s - cfg.active_from_s;
    let homes: Vec<Vec<usize>> = (0..cfg.num_communities).map(|c| cfg.home_locations(c)).collect();
    let node_tokens: Vec<String> = (0..cfg.num_nodes).map(|n| cfg.node_token(n)).collect();
    let location_tokens: Vec<String> = (0..cfg.num_locations).map(|l| cfg.location_token(l)).collect();

    let mut records = Vec::new();
    for node in 0..cfg.num_nodes {
        let home = &homes[cfg.community_of(node)];
        for day in 0..cfg.days as i64 {
            let count = sessions.sample(&mut rng) as usize;
            if count == 0 {
                continue;
            }
            let mut lengths: Vec<f64> = (0..count).map(|_| duration.sample(&mut rng).max(60.0)).collect();
            let total: f64 = lengths.iter().sum();
            if total > window as f64 {
                let scale = window as f64 / total;
                lengths.iter_mut().for_each(|l| *l *= scale);
            }
            let slack = (window as f64 - lengths.iter().sum::<f64>()).max(0.0);
            let gaps: Vec<f64> = (0..=count).map(|_| rng.random::<f64>()).collect();
            let gap_total: f64 = gaps.iter().sum::<f64>().max(f64::MIN_POSITIVE);

            let day_origin = day * SECONDS_PER_DAY + cfg.active_from_s;
            let mut cursor = 0.0f64;
            for (i, len) in lengths.iter().enumerate() {
                cursor += slack * gaps[i] / gap_total;
                let start = day_origin + cursor.floor() as i64;
                cursor += len;
                let end = (day_origin + cursor.floor() as i64).min(day_origin + window);
                let location = if rng.random::<f64>() < cfg.intra_community_location_bias {
                    *home.choose(&mut rng).expect("every community owns a location")
                } else {
                    rng.random_range(0..cfg.num_locations)
                };
                if end > start {
                    records.push(TraceRecord {
                        node: node_tokens[node].clone(),
                        location: location_tokens[location].clone(),
                        start,
                        end,
                    });
                }
            }
        }
    }
    Trace::new(records, 0)
}

/// Splits at `span_start + fraction * (span_end - span_start)`; records
/// straddling the cut are truncated into both parts.
pub fn split_trace(trace: &Trace, fraction: f64) -> Result<(Trace, Trace)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split fraction {fraction} outside (0, 1)"
        )));
    }
    let (lo, hi) = trace
        .span()
        .ok_or_else(|| Error::InvalidArgument("cannot split an empty trace".into()))?;
    let cut = lo + ((hi - lo) as f64 * fraction).floor() as i64;
    Ok(split_trace_at(trace, cut))
}

/// Splits at an explicit cut time.
pub fn split_trace_at(trace: &Trace, cut: i64) -> (Trace, Trace) {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for r in trace.records() {
        if r.end <= cut {
            first.push(r.clone());
        } else if r.start >= cut {
            second.push(r.clone());
        } else {
            first.push(TraceRecord { end: cut, ..r.clone() });
            second.push(TraceRecord {
                start: cut,
                ..r.clone()
            });
        }
    }
    let build = |records| Trace::new(records, trace.epoch()).expect("split preserves validity");
    (build(first), build(second))
}

/// Fraction of a day's online time spent at each location.
pub type LocationVector = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct DailyVector {
    pub day: i64,
    pub fractions: LocationVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DailyVectors {
    pub vectors: Vec<DailyVector>,
    /// Days in the window with no associated time.
    pub omitted_days: Vec<i64>,
}

/// Per-node, per-day seconds at each location.
#[derive(Debug, Clone, Default)]
pub struct DailyUsage {
    per_node: BTreeMap<String, BTreeMap<i64, BTreeMap<String, i64>>>,
}

impl DailyUsage {
    pub fn from_trace(trace: &Trace) -> Self {
        let mut per_node: BTreeMap<String, BTreeMap<i64, BTreeMap<String, i64>>> = BTreeMap::new();
        for r in trace.records() {
            let days = per_node.entry(r.node.clone()).or_default();
            let mut day = trace.day_of(r.start);
            loop {
                let day_lo = trace.day_start(day);
                let day_hi = day_lo + SECONDS_PER_DAY;
                let overlap = r.end.min(day_hi) - r.start.max(day_lo);
                if overlap > 0 {
                    *days.entry(day).or_default().entry(r.location.clone()).or_default() += overlap;
                }
                if r.end <= day_hi {
                    break;
                }
                day += 1;
            }
        }
        Self { per_node }
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.per_node.keys().map(String::as_str)
    }

    /// Location-fraction vectors for each day in `window`.
    pub fn vectors(&self, node: &str, window: RangeInclusive<i64>) -> DailyVectors {
        let Some(days) = self.per_node.get(node) else {
            return DailyVectors::default();
        };
        let mut out = DailyVectors::default();
        for day in window {
            match days.get(&day) {
                Some(usage) => {
                    let total: i64 = usage.values().sum();
                    let fractions = usage
                        .iter()
                        .map(|(loc, secs)| (loc.clone(), *secs as f64 / total as f64))
                        .collect();
                    out.vectors.push(DailyVector { day, fractions });
                }
                None => out.omitted_days.push(day),
            }
        }
        out
    }
}

/// Daily location-fraction vectors of one node over a day window. An absent
/// node yields an empty result.
pub fn daily_location_vectors(trace: &Trace, node: &str, window: RangeInclusive<i64>) -> DailyVectors {
    let records: Vec<TraceRecord> = trace.records().iter().filter(|r| r.node == node).cloned().collect();
    if records.is_empty() {
        return DailyVectors::default();
    }
    let single = Trace::new(records, trace.epoch()).expect("records already validated");
    DailyUsage::from_trace(&single).vectors(node, window)
}
