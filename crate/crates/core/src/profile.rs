//! Association matrices, eigen-behavior profiles and weighted cosine
//! similarity between them.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::trace::DailyVector;

pub const DEFAULT_POWER_THRESHOLD: f64 = 0.9;

const ROW_SUM_TOL: f64 = 1e-9;

/// Day × location matrix of visit fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociationMatrix {
    rows: Vec<Vec<f64>>,
    location_keys: Vec<String>,
    day_indices: Vec<i64>,
}

impl AssociationMatrix {
    /// Validates that every row is a probability vector aligned with
    /// `location_keys`.
    pub fn new(rows: Vec<Vec<f64>>, location_keys: Vec<String>, day_indices: Vec<i64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyHistory);
        }
        if day_indices.len() != rows.len() {
            return Err(Error::InvalidArgument("one day index per row required".into()));
        }
        for row in &rows {
            if row.len() != location_keys.len() {
                return Err(Error::InvalidArgument("row width differs from location keys".into()));
            }
            if row.iter().any(|x| !(0.0..=1.0 + ROW_SUM_TOL).contains(x)) {
                return Err(Error::InvalidArgument("matrix entries must lie in [0, 1]".into()));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidArgument(format!("row sums to {sum}, expected 1")));
            }
        }
        Ok(Self {
            rows,
            location_keys,
            day_indices,
        })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn location_keys(&self) -> &[String] {
        &self.location_keys
    }

    pub fn day_indices(&self) -> &[i64] {
        &self.day_indices
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cols(&self) -> usize {
        self.location_keys.len()
    }
}

/// Stacks daily vectors into a matrix over the union of their locations,
/// zero-filling absent entries. Columns are in ascending key order.
pub fn build_association_matrix(daily: &[DailyVector]) -> Result<AssociationMatrix> {
    let days: Vec<&DailyVector> = daily.iter().filter(|d| !d.fractions.is_empty()).collect();
    if days.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let keys: Vec<String> = days
        .iter()
        .flat_map(|d| d.fractions.keys())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .cloned()
        .collect();
    let rows = days
        .iter()
        .map(|d| {
            keys.iter()
                .map(|k| d.fractions.get(k).copied().unwrap_or(0.0))
                .collect()
        })
        .collect();
    let day_indices = days.iter().map(|d| d.day).collect();
    AssociationMatrix::new(rows, keys, day_indices)
}

/// Weighted set of orthonormal eigen-behavior vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BehavioralProfile {
    location_keys: Vec<String>,
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl BehavioralProfile {
    /// Assembles a profile from parts. Keys must be strictly ascending and
    /// every vector must match their length.
    pub fn from_parts(location_keys: Vec<String>, vectors: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if vectors.len() != weights.len() {
            return Err(Error::InvalidArgument("one weight per vector required".into()));
        }
        if location_keys.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "location keys must be strictly ascending".into(),
            ));
        }
        if vectors.iter().any(|v| v.len() != location_keys.len()) {
            return Err(Error::InvalidArgument("vector width differs from location keys".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        Ok(Self {
            location_keys,
            vectors,
            weights,
        })
    }

    /// A profile with no vectors; it is similar to nothing.
    pub fn empty() -> Self {
        Self {
            location_keys: Vec::new(),
            vectors: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn location_keys(&self) -> &[String] {
        &self.location_keys
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The dominant eigen-behavior as sparse `(location, value)` entries.
    pub fn dominant_vector(&self) -> Option<BTreeMap<String, f64>> {
        let v = self.vectors.first()?;
        Some(
            self.location_keys
                .iter()
                .zip(v)
                .filter(|(_, x)| **x != 0.0)
                .map(|(k, x)| (k.clone(), *x))
                .collect(),
        )
    }

    /// Re-indexes onto `keys`, which must be a sorted superset of this
    /// profile's keys.
    fn reindexed(&self, keys: &[String]) -> Self {
        let positions: Vec<usize> = self
            .location_keys
            .iter()
            .map(|k| keys.binary_search(k).expect("superset of keys"))
            .collect();
        let vectors = self
            .vectors
            .iter()
            .map(|v| {
                let mut out = vec![0.0; keys.len()];
                for (&p, &x) in positions.iter().zip(v) {
                    out[p] = x;
                }
                out
            })
            .collect();
        Self {
            location_keys: keys.to_vec(),
            vectors,
            weights: self.weights.clone(),
        }
    }
}

/// Text form: one line per vector, `weight loc:value loc:value ...`.
impl fmt::Display for BehavioralProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, v) in self.weights.iter().zip(&self.vectors) {
            write!(f, "{w:?}")?;
            for (k, x) in self.location_keys.iter().zip(v) {
                if *x != 0.0 {
                    write!(f, " {k}:{x:?}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for BehavioralProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut weights = Vec::new();
        let mut sparse: Vec<Vec<(String, f64)>> = Vec::new();
        for line in s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
        {
            let mut tokens = line.split_whitespace();
            let weight = tokens
                .next()
                .and_then(|t| t.parse::<f64>().ok())
                .ok_or_else(|| Error::Input(format!("profile line lacks a weight: {line}")))?;
            let entries = tokens
                .map(|tok| {
                    let (k, v) = tok
                        .rsplit_once(':')
                        .ok_or_else(|| Error::Input(format!("bad profile entry `{tok}`")))?;
                    let v = v
                        .parse::<f64>()
                        .map_err(|_| Error::Input(format!("bad value in `{tok}`")))?;
                    Ok((k.to_string(), v))
                })
                .collect::<Result<Vec<_>>>()?;
            weights.push(weight);
            sparse.push(entries);
        }
        let keys: Vec<String> = sparse
            .iter()
            .flatten()
            .map(|(k, _)| k.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let vectors = sparse
            .iter()
            .map(|entries| {
                let mut v = vec![0.0; keys.len()];
                for (k, x) in entries {
                    v[keys.binary_search(k).expect("collected above")] = *x;
                }
                v
            })
            .collect();
        BehavioralProfile::from_parts(keys, vectors, weights)
    }
}

/// Extracts the eigen-behavior profile of `m`: right-singular vectors with
/// weights `sigma_i / ||sigma||`, truncated to the smallest prefix whose
/// cumulative squared weight reaches `power_threshold`.
pub fn compute_profile(m: &AssociationMatrix, power_threshold: f64) -> Result<BehavioralProfile> {
    if !(power_threshold > 0.0 && power_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "power threshold {power_threshold} outside (0, 1]"
        )));
    }
    let (n, cols) = (m.num_rows(), m.num_cols());
    if cols == 0 {
        return Err(Error::DegenerateProfile);
    }
    let dense = DMatrix::from_fn(n, cols, |i, j| m.rows[i][j]);
    let svd = dense.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");

    let mut pairs: Vec<(f64, Vec<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, v_t.row(i).iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let sigma_max = pairs.first().map_or(0.0, |p| p.0);
    let rank_tol = sigma_max * n.max(cols) as f64 * f64::EPSILON * 8.0;
    if sigma_max.is_nan() || sigma_max <= 0.0 {
        return Err(Error::DegenerateProfile);
    }
    let norm = pairs.iter().map(|p| p.0 * p.0).sum::<f64>().sqrt();
    pairs.retain(|p| p.0 > rank_tol);
    for (_, v) in &mut pairs {
        canonicalize_sign(v);
    }
    order_ties(&mut pairs, sigma_max);

    let mut weights = Vec::new();
    let mut vectors = Vec::new();
    let mut cumulative = 0.0;
    for (s, v) in pairs {
        let w = s / norm;
        weights.push(w);
        vectors.push(v);
        cumulative += w * w;
        if cumulative >= power_threshold - 1e-12 {
            break;
        }
    }
    Ok(BehavioralProfile {
        location_keys: m.location_keys.clone(),
        vectors,
        weights,
    })
}

fn canonicalize_sign(v: &mut [f64]) {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v.get(pivot).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Within runs of equal singular values, orders vectors lexicographically.
fn order_ties(pairs: &mut [(f64, Vec<f64>)], sigma_max: f64) {
    let tol = sigma_max * 1e-12;
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[start].0 - pairs[end].0).abs() <= tol {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lexicographic(&b.1, &a.1));
        start = end;
    }
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

/// Similarity of a profile to a target profile, with its threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetProfile {
    unit: BTreeMap<String, f64>,
    th_sim: f64,
}

impl TargetProfile {
    /// L2-normalizes `entries`. Rejects an all-zero vector or a threshold
    /// outside `[0, 1]`.
    pub fn new(entries: BTreeMap<String, f64>, th_sim: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&th_sim) {
            return Err(Error::InvalidTarget(format!("threshold {th_sim} outside [0, 1]")));
        }
        let norm = entries.values().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidTarget("target vector is zero".into()));
        }
        let unit = entries
            .into_iter()
            .filter(|(_, x)| *x != 0.0)
            .map(|(k, x)| (k, x / norm))
            .collect();
        Ok(Self { unit, th_sim })
    }

    /// A target concentrated on one location.
    pub fn singleton(location: &str, th_sim: f64) -> Result<Self> {
        Self::new(BTreeMap::from([(location.to_string(), 1.0)]), th_sim)
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.unit
    }

    pub fn th_sim(&self) -> f64 {
        self.th_sim
    }

    pub fn with_threshold(&self, th_sim: f64) -> Result<Self> {
        Self::new(self.unit.clone(), th_sim)
    }
}

/// Result of a profile comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityScore {
    /// Clamped to `[0, 1]`.
    pub value: f64,
    /// The unclamped weighted double sum.
    pub raw: f64,
    /// Set when either profile has no vectors.
    pub degenerate: bool,
}

/// Column pairs `(i, j)` where `a_keys[i] == b_keys[j]`; both sorted.
fn shared_columns(a_keys: &[String], b_keys: &[String]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a_keys.len() && j < b_keys.len() {
        match a_keys[i].cmp(&b_keys[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push((i, j));
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn canonical_cmp(a: &BehavioralProfile, b: &BehavioralProfile) -> Ordering {
    lexicographic(&a.weights, &b.weights)
        .then_with(|| {
            a.vectors
                .iter()
                .zip(&b.vectors)
                .map(|(x, y)| lexicographic(x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .then_with(|| a.location_keys.cmp(&b.location_keys))
}

/// Weighted sum `sum_i sum_j w_ai w_bj |a_i . b_j|` over the union of
/// location spaces, with degenerate-profile and clamping information.
pub fn similarity_detailed(a: &BehavioralProfile, b: &BehavioralProfile) -> SimilarityScore {
    if a.is_degenerate() || b.is_degenerate() {
        return SimilarityScore {
            value: 0.0,
            raw: 0.0,
            degenerate: true,
        };
    }
    let (a, b) = if canonical_cmp(a, b) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    let shared = shared_columns(&a.location_keys, &b.location_keys);
    let mut raw = 0.0;
    for (wa, va) in a.weights.iter().zip(&a.vectors) {
        for (wb, vb) in b.weights.iter().zip(&b.vectors) {
            let dot: f64 = shared.iter().map(|&(i, j)| va[i] * vb[j]).sum();
            raw += wa * wb * dot.abs();
        }
    }
    SimilarityScore {
        value: raw.clamp(0.0, 1.0),
        raw,
        degenerate: false,
    }
}

/// Behavioral similarity in `[0, 1]`; zero when either profile is empty.
pub fn similarity(a: &BehavioralProfile, b: &BehavioralProfile) -> f64 {
    similarity_detailed(a, b).value
}

/// `sum_i w_i |a_i . t|` for the unit target vector `t`.
pub fn similarity_to_target(a: &BehavioralProfile, tp: &TargetProfile) -> f64 {
    let columns: Vec<(usize, f64)> = a
        .location_keys
        .iter()
        .enumerate()
        .filter_map(|(i, k)| tp.unit.get(k).map(|t| (i, *t)))
        .collect();
    let raw: f64 = a
        .weights
        .iter()
        .zip(&a.vectors)
        .map(|(w, v)| w * columns.iter().map(|&(i, t)| v[i] * t).sum::<f64>().abs())
        .sum();
    raw.clamp(0.0, 1.0)
}

/// Re-indexes both profiles over the union of their location keys.
pub fn align_location_spaces(a: &BehavioralProfile, b: &BehavioralProfile) -> (BehavioralProfile, BehavioralProfile) {
    if a.location_keys == b.location_keys {
        return (a.clone(), b.clone());
    }
    let keys: Vec<String> = a
        .location_keys
        .iter()
        .chain(&b.location_keys)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    (a.reindexed(&keys), b.reindexed(&keys))
}
