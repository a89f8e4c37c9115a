use std::collections::{BTreeMap, BTreeSet};

use csi_core::encounter::{derive_encounters, encounter_stats};
use csi_core::profile::{build_association_matrix, compute_profile, similarity, BehavioralProfile};
use csi_core::trace::{generate_synthetic_trace, DailyUsage, SyntheticConfig, Trace, TraceRecord};
use proptest::prelude::*;

/// Seconds during which both nodes sat at `location`, counted one by one.
fn co_presence_seconds(trace: &Trace, x: &str, y: &str) -> i64 {
    let mut total = 0;
    for loc in trace.locations() {
        let seconds = |node: &str| -> BTreeSet<i64> {
            trace
                .records()
                .iter()
                .filter(|r| r.node == node && &r.location == loc)
                .flat_map(|r| r.start..r.end)
                .collect()
        };
        total += seconds(x).intersection(&seconds(y)).count() as i64;
    }
    total
}

fn profiles_of(trace: &Trace) -> BTreeMap<String, BehavioralProfile> {
    let usage = DailyUsage::from_trace(trace);
    let days = trace.day_range().unwrap();
    trace
        .nodes()
        .iter()
        .map(|n| {
            let m = build_association_matrix(&usage.vectors(n, days.clone()).vectors).unwrap();
            (n.clone(), compute_profile(&m, 0.9).unwrap())
        })
        .collect()
}

fn fixture() -> Trace {
    let day = 86_400;
    let mut records = Vec::new();
    for d in 0..3 {
        let t = d * day;
        records.push(TraceRecord::new("a", "lib", t + 100, t + 900));
        records.push(TraceRecord::new("a", "gym", t + 1000, t + 1300));
        records.push(TraceRecord::new("b", "lib", t + 200, t + 1000));
        records.push(TraceRecord::new("c", "gym", t + 1100, t + 1500));
        records.push(TraceRecord::new("c", "lib", t + 1500, t + 1600 + 50 * d));
        records.push(TraceRecord::new("d", "pool", t + 100, t + 2000));
        records.push(TraceRecord::new("e", "lib", t + 1550, t + 1700));
        records.push(TraceRecord::new("e", "pool", t + 1900, t + 2500));
    }
    Trace::new(records, 0).unwrap()
}

#[test]
fn five_node_bin_aggregates_match_all_pairs_enumeration() {
    let trace = fixture();
    let stream = derive_encounters(&trace);
    let profiles = profiles_of(&trace);
    let nodes: Vec<&String> = trace.nodes().iter().collect();
    assert_eq!(nodes.len(), 5);

    let met = |x: &str| -> BTreeSet<&str> {
        nodes
            .iter()
            .map(|n| n.as_str())
            .filter(|y| *y != x && co_presence_seconds(&trace, x, y) > 0)
            .collect()
    };
    let width = 0.25;
    let mut expected: BTreeMap<usize, (usize, usize, f64, f64, usize)> = BTreeMap::new();
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let (x, y) = (nodes[i].as_str(), nodes[j].as_str());
            let s = similarity(&profiles[x], &profiles[y]);
            let bin = ((s / width).floor() as usize).min(3);
            let secs = co_presence_seconds(&trace, x, y);
            let (ex, ey) = (met(x), met(y));
            let union = ex.union(&ey).count();
            let e = expected.entry(bin).or_default();
            e.0 += 1;
            e.1 += usize::from(secs > 0);
            e.2 += secs as f64;
            if union > 0 {
                e.3 += ex.intersection(&ey).count() as f64 / union as f64;
                e.4 += 1;
            }
        }
    }

    let stats = encounter_stats(&stream, &profiles, width).unwrap();
    assert_eq!(stats.excluded_pairs, 0);
    assert_eq!(stats.bins.len(), expected.len());
    for (b, (bin, e)) in stats.bins.iter().zip(&expected) {
        assert!((b.lo - *bin as f64 * width).abs() < 1e-12);
        assert_eq!(b.pair_count, e.0);
        assert!((b.encounter_probability - e.1 as f64 / e.0 as f64).abs() < 1e-12);
        assert!((b.total_duration - e.2 / e.0 as f64).abs() < 1e-9);
        let jac = (e.4 > 0).then(|| e.3 / e.4 as f64);
        match (b.encountered_set_similarity, jac) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-12),
            (x, y) => assert_eq!(x, y),
        }
    }
}

#[test]
fn missing_profile_excludes_pairs_and_counts_them() {
    let trace = fixture();
    let stream = derive_encounters(&trace);
    let mut profiles = profiles_of(&trace);
    profiles.remove("e");
    let stats = encounter_stats(&stream, &profiles, 0.1).unwrap();
    assert_eq!(stats.excluded_pairs, 4);
    assert_eq!(stats.bins.iter().map(|b| b.pair_count).sum::<usize>(), 6);
}

#[test]
fn encounter_probability_rises_with_similarity_on_community_trace() {
    let trace = generate_synthetic_trace(&SyntheticConfig::default()).unwrap();
    let stats = encounter_stats(&derive_encounters(&trace), &profiles_of(&trace), 0.1).unwrap();
    let dense: Vec<f64> = stats
        .bins
        .iter()
        .filter(|b| b.pair_count >= 30)
        .map(|b| b.encounter_probability)
        .collect();
    assert!(dense.len() >= 2);
    assert!(dense.windows(2).all(|w| w[0] <= w[1]), "{dense:?}");
}

fn small_trace() -> impl Strategy<Value = Trace> {
    proptest::collection::vec((0usize..5, 0usize..3, 0i64..600, 1i64..200), 1..25).prop_map(|rs| {
        let records = rs
            .into_iter()
            .map(|(n, l, s, len)| TraceRecord::new(format!("n{n}"), format!("l{l}"), s, s + len))
            .collect();
        Trace::new(records, 0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pair_durations_equal_counted_co_presence(trace in small_trace()) {
        let stream = derive_encounters(&trace);
        let nodes: Vec<&String> = trace.nodes().iter().collect();
        for x in &nodes {
            for y in &nodes {
                if x == y {
                    continue;
                }
                prop_assert_eq!(stream.pair_duration(x, y), stream.pair_duration(y, x));
                prop_assert_eq!(stream.pair_duration(x, y), co_presence_seconds(&trace, x, y));
            }
        }
    }

    #[test]
    fn stream_is_sorted_merged_and_deterministic(trace in small_trace()) {
        let stream = derive_encounters(&trace);
        prop_assert_eq!(&stream, &derive_encounters(&trace));
        let events = stream.events();
        prop_assert!(events.windows(2).all(|w| w[0].start <= w[1].start));
        for e in events {
            prop_assert!(e.node_a < e.node_b && e.start < e.end);
        }
        let mut per_key: BTreeMap<[&str; 3], Vec<(i64, i64)>> = BTreeMap::new();
        for e in events {
            per_key.entry([&e.node_a, &e.node_b, &e.location]).or_default().push((e.start, e.end));
        }
        for spans in per_key.values() {
            prop_assert!(spans.windows(2).all(|w| w[0].1 <= w[1].0));
        }
    }
}
