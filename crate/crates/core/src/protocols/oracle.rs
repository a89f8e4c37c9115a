//! Future-knowledge baselines computed over the whole contact sequence.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::csit::{csit_on_encounter, CsiTConfig, CsiTPhase, CsiTState};
use super::{ActionKind, Contact, NodeIdx, Peer};

/// A single relay: the message crosses contact `index` from `from` to `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relay {
    pub index: usize,
    pub time: i64,
    pub from: NodeIdx,
    pub to: NodeIdx,
}

/// Best known way a node was reached: arrival time, then hop count, then
/// the node sequence from the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrival {
    pub time: i64,
    pub nodes: Vec<NodeIdx>,
    pub relays: Vec<Relay>,
}

impl Arrival {
    pub fn hops(&self) -> usize {
        self.relays.len()
    }

    /// Contact index of the last relay; `None` at the source.
    pub fn index(&self) -> Option<usize> {
        self.relays.last().map(|r| r.index)
    }

    fn route_cmp(&self, other: &Self) -> Ordering {
        self.hops()
            .cmp(&other.hops())
            .then_with(|| self.nodes.cmp(&other.nodes))
    }

    fn full_cmp(&self, other: &Self) -> Ordering {
        self.time.cmp(&other.time).then_with(|| self.route_cmp(other))
    }

    fn extend(&self, relay: Relay) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.push(relay.to);
        let mut relays = self.relays.clone();
        relays.push(relay);
        Self {
            time: relay.time,
            nodes,
            relays,
        }
    }
}

/// Earliest arrival at every node from `source`, injected at `created_at`.
/// Contacts are processed in order and a relay may only follow relays at
/// strictly smaller indices. Ties prefer fewer hops, then the
/// lexicographically smallest node sequence.
pub fn earliest_arrival(contacts: &[Contact], n: usize, source: NodeIdx, created_at: i64) -> Vec<Option<Arrival>> {
    // `best` ranks by (time, hops, nodes); `carry` is the route a node
    // forwards, ranked by (hops, nodes) because onward arrival times depend
    // only on the later contact.
    let start = Arrival {
        time: created_at,
        nodes: vec![source],
        relays: Vec::new(),
    };
    let mut best: Vec<Option<Arrival>> = vec![None; n];
    let mut carry: Vec<Option<Arrival>> = vec![None; n];
    best[source.index()] = Some(start.clone());
    carry[source.index()] = Some(start);
    for (index, c) in contacts.iter().enumerate() {
        if c.time < created_at || c.a == c.b {
            continue;
        }
        let offers = [(c.a, c.b), (c.b, c.a)].map(|(from, to)| {
            carry[from.index()].as_ref().map(|route| {
                (
                    to,
                    route.extend(Relay {
                        index,
                        time: c.time,
                        from,
                        to,
                    }),
                )
            })
        });
        for (to, cand) in offers.into_iter().flatten() {
            if cand.nodes[..cand.nodes.len() - 1].contains(&to) {
                continue;
            }
            let slot = &mut best[to.index()];
            if slot.as_ref().is_none_or(|cur| cand.full_cmp(cur) == Ordering::Less) {
                *slot = Some(cand.clone());
            }
            let slot = &mut carry[to.index()];
            if slot.as_ref().is_none_or(|cur| cand.route_cmp(cur) == Ordering::Less) {
                *slot = Some(cand);
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalPlan {
    /// Earliest delivery time per intended receiver; `None` if unreachable.
    pub deliveries: BTreeMap<NodeIdx, Option<i64>>,
    /// Union of the chosen earliest-arrival paths.
    pub relays: Vec<Relay>,
    /// Nodes that receive a copy under the plan. Each is sent the message
    /// once, at its earliest relay in the union.
    pub transmissions: usize,
}

/// Relays the message only along earliest-arrival paths to the receivers.
pub fn oracle_optimal_plan(
    contacts: &[Contact],
    n: usize,
    sender: NodeIdx,
    created_at: i64,
    receivers: &[NodeIdx],
) -> OptimalPlan {
    let arrivals = earliest_arrival(contacts, n, sender, created_at);
    let mut deliveries = BTreeMap::new();
    let mut relays = Vec::new();
    for &r in receivers {
        let a = arrivals[r.index()].as_ref();
        deliveries.insert(r, a.map(|a| a.time));
        if let Some(a) = a {
            relays.extend_from_slice(&a.relays);
        }
    }
    relays.sort_unstable();
    relays.dedup();
    let mut recipients: Vec<NodeIdx> = relays.iter().map(|r| r.to).collect();
    recipients.sort_unstable();
    recipients.dedup();
    OptimalPlan {
        deliveries,
        relays,
        transmissions: recipients.len(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinglePathPlan {
    /// Relays from the sender to the first neighborhood member reached.
    pub path: Vec<Relay>,
    /// The first neighborhood member reached, if any.
    pub entry: Option<NodeIdx>,
    /// Delivery time of every neighborhood member that receives the message.
    pub deliveries: BTreeMap<NodeIdx, i64>,
    pub transmissions: usize,
}

/// Fastest single path into the target's neighborhood, followed by group
/// spread from the entry node onward.
pub fn oracle_single_path_plan(
    contacts: &[Contact],
    sims_to_tp: &[f64],
    sender: NodeIdx,
    created_at: i64,
    th_sim: f64,
) -> SinglePathPlan {
    let n = sims_to_tp.len();
    let arrivals = earliest_arrival(contacts, n, sender, created_at);
    let entry = arrivals
        .iter()
        .enumerate()
        .filter(|(i, a)| a.is_some() && sims_to_tp[*i] > th_sim)
        .map(|(i, a)| (NodeIdx::from(i), a.as_ref().unwrap()))
        .min_by(|x, y| x.1.full_cmp(y.1).then(x.0.cmp(&y.0)));
    let Some((entry, arrival)) = entry else {
        return SinglePathPlan {
            path: Vec::new(),
            entry: None,
            deliveries: BTreeMap::new(),
            transmissions: 0,
        };
    };

    let cfg = CsiTConfig::new(th_sim);
    let mut states: Vec<CsiTState> = sims_to_tp.iter().map(|&s| CsiTState::idle(s)).collect();
    for node in &arrival.nodes {
        states[node.index()].phase = CsiTPhase::DoneForwarded;
    }
    states[entry.index()].phase = CsiTPhase::GroupSpread;
    let mut deliveries = BTreeMap::from([(entry, arrival.time)]);
    let mut transmissions = arrival.hops();
    let from = arrival.index().map_or(0, |i| i + 1);
    for c in &contacts[from..] {
        if c.time < created_at {
            continue;
        }
        let (a, b) = (c.a.index(), c.b.index());
        let t = csit_on_encounter(
            Peer::new(c.a, &states[a], false),
            Peer::new(c.b, &states[b], false),
            &cfg,
            c.time,
        );
        for act in &t.actions {
            match act.kind {
                ActionKind::TransmitMessage => transmissions += 1,
                ActionKind::Deliver => {
                    deliveries.entry(act.to).or_insert(act.at);
                }
                _ => {}
            }
        }
        states[a] = t.a;
        states[b] = t.b;
    }
    SinglePathPlan {
        path: arrival.relays.clone(),
        entry: Some(entry),
        deliveries,
        transmissions,
    }
}
