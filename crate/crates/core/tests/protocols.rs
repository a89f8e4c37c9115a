mod common;

use std::collections::BTreeMap;

use common::*;
use csi_core::protocols::{
    earliest_arrival, oracle_optimal_plan, oracle_single_path_plan, ActionKind, Contact, CsiDConfig, CsiTConfig,
    CsiTVariant, NodeIdx, RandomWalkConfig, RandomWalkMode, SimilarityTable,
};
use csi_core::sim::{replay, CsiDRun, CsiTRun, EpidemicRun, RandomWalkRun, Replay};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn n(i: u32) -> NodeIdx {
    NodeIdx(i)
}

fn script(events: &[(i64, u32, u32)]) -> Vec<Contact> {
    let mut out: Vec<Contact> = events.iter().map(|&(t, a, b)| Contact::new(t, n(a), n(b))).collect();
    out.sort();
    out
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(1)
}

fn csit(contacts: &[Contact], sims: &[f64], sender: NodeIdx, cfg: CsiTConfig) -> Replay {
    let intended: Vec<bool> = sims.iter().map(|&s| s > cfg.th_sim).collect();
    let mut p = CsiTRun::new(sims, sender, cfg);
    replay(
        &mut p,
        sims.len(),
        contacts,
        0,
        &intended,
        sender,
        &mut rng(),
        |_: &CsiTRun, _, _| {},
    )
}

fn epidemic(contacts: &[Contact], size: usize, sender: NodeIdx, intended: &[bool]) -> Replay {
    let mut p = EpidemicRun::new(size, sender, intended.to_vec());
    replay(
        &mut p,
        size,
        contacts,
        0,
        intended,
        sender,
        &mut rng(),
        |_: &EpidemicRun, _, _| {},
    )
}

fn tx(r: &Replay) -> u64 {
    r.action_counts[ActionKind::TransmitMessage.ordinal()]
}

#[test]
fn chain_fixture_climbs_in_two_transmissions() {
    // A = 0, B = 1, C = 2 with similarities 0.2, 0.5, 0.85 to the target.
    let sims = [0.2, 0.5, 0.85];
    let contacts = script(&[(100, 0, 1), (250, 1, 2)]);
    let r = csit(&contacts, &sims, n(0), CsiTConfig::new(0.8));
    assert_eq!(tx(&r), 2);
    assert_eq!(r.delivered_at, BTreeMap::from([(n(2), 250)]));
}

#[test]
fn group_spread_only_waits_for_a_member() {
    let sims = [0.2, 0.5, 0.85];
    let contacts = script(&[(100, 0, 1), (250, 1, 2)]);
    let cfg = CsiTConfig::new(0.8).with_variant(CsiTVariant::GroupSpreadOnly);
    let gso = csit(&contacts, &sims, n(0), cfg);
    assert!(gso.delivered_at.is_empty());
    assert_eq!(tx(&gso), 0);
    assert_eq!(csit(&contacts, &sims, n(0), CsiTConfig::new(0.8)).delivered_at.len(), 1);
}

#[test]
fn group_spread_only_matches_csit_when_sender_is_a_member() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let mut sims = random_sims(&mut r, 8);
        sims[0] = 0.9;
        let contacts = random_contacts(&mut r, 8, 30, 100);
        let full = csit(&contacts, &sims, n(0), CsiTConfig::new(0.8));
        let gso = csit(
            &contacts,
            &sims,
            n(0),
            CsiTConfig::new(0.8).with_variant(CsiTVariant::GroupSpreadOnly),
        );
        assert_eq!(full, gso);
    }
}

#[test]
fn single_path_oracle_beats_gradient_ascend_through_a_dip() {
    // S = 0 (0.5) meets D = 1 (0.1) who meets member M = 2 (0.9); the
    // uphill route through U = 3 (0.6) is slower.
    let sims = [0.5, 0.1, 0.9, 0.6];
    let contacts = script(&[(10, 0, 1), (20, 1, 2), (100, 0, 3), (110, 2, 3)]);
    let plan = oracle_single_path_plan(&contacts, &sims, n(0), 0, 0.8);
    assert_eq!(plan.entry, Some(n(2)));
    assert_eq!(plan.deliveries[&n(2)], 20);
    let r = csit(&contacts, &sims, n(0), CsiTConfig::new(0.8));
    assert_eq!(r.delivered_at[&n(2)], 110);
    assert!(plan.deliveries[&n(2)] < r.delivered_at[&n(2)]);
}

#[test]
fn single_path_oracle_spreads_from_sender_inside_neighborhood() {
    let sims = [0.9, 0.95, 0.1];
    let contacts = script(&[(5, 0, 2), (10, 0, 1)]);
    let plan = oracle_single_path_plan(&contacts, &sims, n(0), 0, 0.8);
    assert!(plan.path.is_empty());
    assert_eq!(plan.entry, Some(n(0)));
    assert_eq!(plan.deliveries, BTreeMap::from([(n(0), 0), (n(1), 10)]));
    assert_eq!(plan.transmissions, 1);
}

#[test]
fn unreachable_neighborhood_yields_nothing() {
    let sims = [0.1, 0.2, 0.9];
    let contacts = script(&[(5, 0, 1)]);
    let plan = oracle_single_path_plan(&contacts, &sims, n(0), 0, 0.8);
    assert!(plan.deliveries.is_empty() && plan.entry.is_none());
    let opt = oracle_optimal_plan(&contacts, 3, n(0), 0, &[n(2)]);
    assert_eq!(opt.deliveries[&n(2)], None);
    assert_eq!(opt.transmissions, 0);
}

#[test]
fn forced_chain_costs_two_relays() {
    let contacts = script(&[(1, 0, 1), (2, 1, 2)]);
    let plan = oracle_optimal_plan(&contacts, 3, n(0), 0, &[n(2)]);
    assert_eq!(plan.deliveries[&n(2)], Some(2));
    assert_eq!(plan.relays.len(), 2);
    assert_eq!(plan.transmissions, 2);
    let own = oracle_optimal_plan(&contacts, 3, n(0), 0, &[n(0)]);
    assert_eq!(own.deliveries[&n(0)], Some(0));
    assert_eq!(own.transmissions, 0);
}

#[test]
fn two_similar_holders_merge_into_one() {
    // S = 0 elects X = 1 and Y = 2; X, unaware of Y, elects Z = 3 which is
    // a behavioral neighbor of Y. Y and Z then meet.
    let mut m = [[0.1; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m[2][3] = 0.8;
    m[3][2] = 0.8;
    let sims = SimilarityTable::from_fn(4, |i, j| m[i][j]);
    let contacts = script(&[(1, 0, 1), (2, 0, 2), (3, 1, 3), (4, 2, 3)]);
    let intended = vec![false; 4];
    let mut p = CsiDRun::new(4, n(0), intended.clone(), CsiDConfig::default(), &sims);
    let r = replay(
        &mut p,
        4,
        &contacts,
        0,
        &intended,
        n(0),
        &mut rng(),
        |_: &CsiDRun<'_, SimilarityTable>, _, _| {},
    );
    assert_eq!(r.action_counts[ActionKind::ElectHolder.ordinal()], 3);
    assert_eq!(r.action_counts[ActionKind::CeaseHolder.ordinal()], 1);
    assert_eq!(r.peak_holders, 4);
    assert_eq!(r.final_holders, 3);
    assert!(!p.states[3].is_holder);
    assert!(p.states[2].is_holder);
    assert!(!p.states[2].known_holders.contains(&n(3)));
}

#[test]
fn random_walk_with_zero_ttl_never_moves() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let contacts = random_contacts(&mut r, 6, 40, 100);
    let sims = vec![0.0; 6];
    let intended = vec![true; 6];
    let cfg = RandomWalkConfig {
        num_copies: 3,
        ttl: 0,
        mode: RandomWalkMode::Dissemination,
    };
    let mut p = RandomWalkRun::new(&sims, n(0), intended.clone(), cfg);
    let out = replay(
        &mut p,
        6,
        &contacts,
        0,
        &intended,
        n(0),
        &mut rng(),
        |_: &RandomWalkRun, _, _| {},
    );
    let direct: Vec<NodeIdx> = contacts
        .iter()
        .filter(|c| c.involves(n(0)))
        .map(|c| c.other(n(0)))
        .collect();
    assert!(out.delivered_at.keys().all(|k| *k == n(0) || direct.contains(k)));
    assert_eq!(out.final_holders, 1);
}

fn stream_strategy() -> impl Strategy<Value = (usize, Vec<Contact>, Vec<f64>, u32)> {
    (3usize..=8, 1usize..=30, any::<u64>()).prop_map(|(size, events, seed)| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let contacts = random_contacts(&mut r, size, events, 50);
        let sims = random_sims(&mut r, size);
        let sender = (seed % size as u64) as u32;
        (size, contacts, sims, sender)
    })
}

fn similarity_table(size: usize, seed: u64) -> SimilarityTable {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let upper: Vec<f64> = (0..size * size).map(|_| rand::Rng::random::<f64>(&mut r)).collect();
    SimilarityTable::from_fn(
        size,
        |i, j| if i == j { 1.0 } else { upper[i.min(j) * size + i.max(j)] },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn csit_single_copy_soundness_and_privacy((_, contacts, sims, sender) in stream_strategy()) {
        let res = check_csit_invariants(&contacts, &sims, n(sender), 0.8);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn epidemic_realizes_earliest_arrival((size, contacts, _, sender) in stream_strategy()) {
        let intended = vec![true; size];
        let r = epidemic(&contacts, size, n(sender), &intended);
        let expected = enumerate_arrivals(&contacts, size, n(sender), 0);
        for (i, t) in expected.iter().enumerate() {
            prop_assert_eq!(r.delivered_at.get(&n(i as u32)).copied(), *t);
        }
    }

    #[test]
    fn optimal_plan_matches_enumeration_and_undercuts_epidemic((size, contacts, _, sender) in stream_strategy()) {
        let receivers: Vec<NodeIdx> = (0..size as u32).map(n).collect();
        let plan = oracle_optimal_plan(&contacts, size, n(sender), 0, &receivers);
        let expected = enumerate_arrivals(&contacts, size, n(sender), 0);
        for (i, t) in expected.iter().enumerate() {
            prop_assert_eq!(plan.deliveries[&n(i as u32)], *t);
        }
        let arrivals = earliest_arrival(&contacts, size, n(sender), 0);
        for a in arrivals.iter().flatten() {
            prop_assert!(a.relays.windows(2).all(|w| w[0].index < w[1].index));
        }
        let ep = epidemic(&contacts, size, n(sender), &vec![true; size]);
        prop_assert!(plan.transmissions as u64 <= tx(&ep));
    }

    #[test]
    fn csid_holder_lists_stay_consistent((size, contacts, _, sender) in stream_strategy(), seed in any::<u64>(), private in any::<bool>()) {
        let sims = similarity_table(size, seed);
        let intended: Vec<bool> = (0..size).map(|i| (seed >> i) & 1 == 1).collect();
        let cfg = CsiDConfig { private, ..CsiDConfig::default() };
        let res = check_csid_holder_lists(&contacts, &intended, n(sender), 0, cfg, &sims);
        prop_assert!(res.is_ok(), "{:?}", res);
    }

    #[test]
    fn epidemic_dominates_every_protocol((size, contacts, sims, sender) in stream_strategy(), seed in any::<u64>()) {
        let th = 0.8;
        let target: Vec<bool> = sims.iter().map(|&s| s > th).collect();
        let ep_target = epidemic(&contacts, size, n(sender), &target);
        let mut others = vec![
            csit(&contacts, &sims, n(sender), CsiTConfig::new(th)),
            csit(&contacts, &sims, n(sender), CsiTConfig::new(th).with_variant(CsiTVariant::GroupSpreadOnly)),
        ];
        let walk = RandomWalkConfig { num_copies: 2, ttl: 3, mode: RandomWalkMode::Target { th_sim: th } };
        let mut rw = RandomWalkRun::new(&sims, n(sender), target.clone(), walk);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        others.push(replay(&mut rw, size, &contacts, 0, &target, n(sender), &mut r, |_: &RandomWalkRun, _, _| {}));
        let single = oracle_single_path_plan(&contacts, &sims, n(sender), 0, th);
        for other in &others {
            for (k, t) in &other.delivered_at {
                prop_assert!(ep_target.delivered_at.get(k).is_some_and(|e| e <= t));
            }
        }
        for (k, t) in &single.deliveries {
            prop_assert!(ep_target.delivered_at.get(k).is_some_and(|e| e <= t));
        }

        let receivers: Vec<bool> = (0..size).map(|i| (seed >> (i + 8)) & 1 == 1).collect();
        let ep_set = epidemic(&contacts, size, n(sender), &receivers);
        let table = similarity_table(size, seed);
        let mut csid = CsiDRun::new(size, n(sender), receivers.clone(), CsiDConfig::default(), &table);
        let d = replay(&mut csid, size, &contacts, 0, &receivers, n(sender), &mut rng(), |_: &CsiDRun<'_, SimilarityTable>, _, _| {});
        for (k, t) in &d.delivered_at {
            prop_assert!(ep_set.delivered_at.get(k).is_some_and(|e| e <= t));
        }
        prop_assert!(d.delivered_at.len() <= ep_set.delivered_at.len());
    }
}
