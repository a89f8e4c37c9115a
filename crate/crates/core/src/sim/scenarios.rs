use std::collections::BTreeSet;

use log::warn;
use rand::seq::index::sample;

use super::world::World;
use crate::error::{Error, Result};
use crate::profile::TargetProfile;
use crate::protocols::{Audience, Message, NodeIdx};
use crate::rng::component_rng;

pub const DEFAULT_DOMINANT_PROFILES: usize = 10;
pub const DEFAULT_SENDERS_PER_TARGET: usize = 100;
pub const DEFAULT_TH_SIM: f64 = 0.8;
pub const DEFAULT_CSID_SENDERS: usize = 1000;
pub const DEFAULT_CSID_RECEIVERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    CsiT,
    CsiD,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::CsiT => "csit",
            ScenarioKind::CsiD => "csid",
        }
    }
}

/// Which part of the trace the profiles were built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileEpoch {
    FirstHalf,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    pub kind: ScenarioKind,
    pub messages: Vec<Message>,
    pub profile_epoch: ProfileEpoch,
    /// Similarity of the sender to the target (target scenarios only).
    pub sender_similarity: Option<f64>,
    /// Rank of the dominant profile used as target.
    pub target_rank: Option<usize>,
}

/// A behavioral cluster found by greedy clustering and the target profile
/// derived from its center.
#[derive(Debug, Clone, PartialEq)]
pub struct DominantProfile {
    pub center: NodeIdx,
    pub members: Vec<NodeIdx>,
    pub target: TargetProfile,
}

/// Greedy clustering: users ranked by how many others exceed `th_sim`
/// similarity to them; the top remaining user's dominant eigen-behavior
/// becomes a target and its remaining neighbors are removed. Clusters of a
/// single user are not dominant.
pub fn dominant_profiles(world: &World, k: usize, th_sim: f64) -> Result<Vec<DominantProfile>> {
    let candidates: Vec<NodeIdx> = world
        .nodes()
        .iter()
        .filter(|&n| !world.profile(n).is_degenerate())
        .collect();
    let degree = |u: NodeIdx| {
        candidates
            .iter()
            .filter(|&&v| v != u && world.similarity(u, v) > th_sim)
            .count()
    };
    let mut ranked: Vec<(usize, NodeIdx)> = candidates.iter().map(|&u| (degree(u), u)).collect();
    ranked.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));

    let mut remaining: BTreeSet<NodeIdx> = candidates.iter().copied().collect();
    let mut out = Vec::new();
    for &(_, u) in &ranked {
        if out.len() == k {
            break;
        }
        if !remaining.contains(&u) {
            continue;
        }
        let members: Vec<NodeIdx> = remaining
            .iter()
            .copied()
            .filter(|&v| v == u || world.similarity(u, v) > th_sim)
            .collect();
        if members.len() < 2 {
            continue;
        }
        for m in &members {
            remaining.remove(m);
        }
        let dominant = world.profile(u).dominant_vector().ok_or(Error::DegenerateProfile)?;
        out.push(DominantProfile {
            center: u,
            members,
            target: TargetProfile::new(dominant, th_sim)?,
        });
    }
    if out.len() < k {
        warn!("only {} dominant profiles found, {k} requested", out.len());
    }
    Ok(out)
}

/// One single-message scenario per (dominant target, sender); senders are
/// drawn uniformly without replacement for each target.
pub fn build_csit_scenarios(
    world: &World,
    k: usize,
    senders_per_tp: usize,
    th_sim: f64,
    seed: u64,
) -> Result<Vec<Scenario>> {
    if !(0.0..=1.0).contains(&th_sim) {
        return Err(Error::InvalidConfig(format!("th_sim {th_sim} outside [0, 1]")));
    }
    let n = world.len();
    if senders_per_tp > n {
        return Err(Error::InvalidArgument(format!(
            "{senders_per_tp} senders per target exceed the {n} nodes"
        )));
    }
    let targets = dominant_profiles(world, k, th_sim)?;
    let mut rng = component_rng(seed, "csit-scenarios");
    let mut out = Vec::new();
    for (rank, dp) in targets.iter().enumerate() {
        let sims = world.similarities_to_target(&dp.target);
        let mut senders: Vec<usize> = sample(&mut rng, n, senders_per_tp).into_vec();
        senders.sort_unstable();
        for s in senders {
            let id = out.len();
            out.push(Scenario {
                id,
                kind: ScenarioKind::CsiT,
                messages: vec![Message {
                    id: format!("m{id}"),
                    sender: NodeIdx::from(s),
                    created_at: world.eval_start(),
                    audience: Audience::Target(dp.target.clone()),
                    payload_size: 0,
                }],
                profile_epoch: ProfileEpoch::FirstHalf,
                sender_similarity: Some(sims[s]),
                target_rank: Some(rank),
            });
        }
    }
    Ok(out)
}

/// Distinct uniformly drawn senders, each with its own uniformly drawn
/// receiver set.
pub fn build_csid_scenarios(
    world: &World,
    num_senders: usize,
    receivers_per_msg: usize,
    seed: u64,
) -> Result<Vec<Scenario>> {
    let n = world.len();
    if num_senders > n || receivers_per_msg > n {
        return Err(Error::InvalidArgument(format!(
            "{num_senders} senders / {receivers_per_msg} receivers exceed the {n} nodes"
        )));
    }
    let mut rng = component_rng(seed, "csid-scenarios");
    let senders = sample(&mut rng, n, num_senders).into_vec();
    let mut out = Vec::new();
    for (id, s) in senders.into_iter().enumerate() {
        let receivers: BTreeSet<NodeIdx> = sample(&mut rng, n, receivers_per_msg)
            .into_iter()
            .map(NodeIdx::from)
            .collect();
        out.push(Scenario {
            id,
            kind: ScenarioKind::CsiD,
            messages: vec![Message {
                id: format!("m{id}"),
                sender: NodeIdx::from(s),
                created_at: world.eval_start(),
                audience: Audience::Receivers(receivers),
                payload_size: 0,
            }],
            profile_epoch: ProfileEpoch::FirstHalf,
            sender_similarity: None,
            target_rank: None,
        });
    }
    Ok(out)
}
