//! Dissemination to an explicit receiver set through a sparse set of
//! behaviorally diverse message holders.

use super::{Action, ActionKind, NodeIdx, Peer, SimilarityLookup, Transition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiDConfig {
    /// A node is elected only if it is below this similarity to every known
    /// holder.
    pub th_fwd: f64,
    /// Similarity above which two nodes count as behavioral neighbors.
    pub th_nbr: f64,
    /// Holders send their holder list and let the peer decide locally.
    pub private: bool,
}

impl Default for CsiDConfig {
    fn default() -> Self {
        Self {
            th_fwd: 0.3,
            th_nbr: 0.7,
            private: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsiDState {
    pub is_holder: bool,
    /// Holders this node knows of, ascending; contains the node itself when
    /// it is a holder.
    pub known_holders: Vec<NodeIdx>,
    pub holder_in_group: bool,
    /// The node has received the payload at some point.
    pub has_message: bool,
}

impl CsiDState {
    pub fn sender(id: NodeIdx) -> Self {
        Self {
            is_holder: true,
            known_holders: vec![id],
            holder_in_group: false,
            has_message: true,
        }
    }

    fn become_holder(&mut self, id: NodeIdx, list: &[NodeIdx]) {
        self.is_holder = true;
        self.holder_in_group = false;
        self.has_message = true;
        self.known_holders = union(list, &[id]);
    }
}

fn union(x: &[NodeIdx], y: &[NodeIdx]) -> Vec<NodeIdx> {
    let mut out: Vec<NodeIdx> = x.iter().chain(y).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// One encounter of the holder-based protocol. Delivery to an intended
/// receiver is evaluated before election.
pub fn csid_on_encounter(
    a: Peer<'_, CsiDState>,
    b: Peer<'_, CsiDState>,
    cfg: &CsiDConfig,
    sims: &dyn SimilarityLookup,
    at: i64,
) -> Transition<CsiDState> {
    let mut sa = a.state.clone();
    let mut sb = b.state.clone();
    let mut actions = Vec::new();
    match (sa.is_holder, sb.is_holder) {
        (true, true) => holder_meets_holder(a.id, &mut sa, b.id, &mut sb, cfg, sims, at, &mut actions),
        (true, false) => holder_meets_other(
            a.id,
            &mut sa,
            b.id,
            &mut sb,
            b.intended_receiver,
            cfg,
            sims,
            at,
            &mut actions,
        ),
        (false, true) => holder_meets_other(
            b.id,
            &mut sb,
            a.id,
            &mut sa,
            a.intended_receiver,
            cfg,
            sims,
            at,
            &mut actions,
        ),
        (false, false) => {
            if sa.holder_in_group && !sb.holder_in_group {
                propagate_flag(a.id, b.id, &mut sb, cfg, sims, at, &mut actions);
            } else if sb.holder_in_group && !sa.holder_in_group {
                propagate_flag(b.id, a.id, &mut sa, cfg, sims, at, &mut actions);
            }
        }
    }
    Transition { a: sa, b: sb, actions }
}

#[allow(clippy::too_many_arguments)]
fn holder_meets_other(
    h: NodeIdx,
    hs: &mut CsiDState,
    e: NodeIdx,
    es: &mut CsiDState,
    e_intended: bool,
    cfg: &CsiDConfig,
    sims: &dyn SimilarityLookup,
    at: i64,
    actions: &mut Vec<Action>,
) {
    if e_intended && !es.has_message {
        actions.push(Action::new(ActionKind::TransmitMessage, h, e, at));
        actions.push(Action::new(ActionKind::Deliver, h, e, at));
        es.has_message = true;
    }
    if cfg.private {
        actions.push(Action::new(ActionKind::TransmitHolderList, h, e, at));
    } else {
        actions.push(Action::new(ActionKind::TransmitProfile, e, h, at));
    }
    let electable = !es.holder_in_group && hs.known_holders.iter().all(|&k| sims.similarity(e, k) < cfg.th_fwd);
    if electable {
        actions.push(Action::new(ActionKind::ElectHolder, h, e, at));
        if !es.has_message {
            actions.push(Action::new(ActionKind::TransmitMessage, h, e, at));
        }
        let list = hs.known_holders.clone();
        es.become_holder(e, &list);
        if !cfg.private {
            actions.push(Action::new(ActionKind::TransmitHolderList, h, e, at));
            hs.known_holders = es.known_holders.clone();
        }
    } else if !es.holder_in_group && hs.known_holders.iter().any(|&k| sims.similarity(e, k) > cfg.th_nbr) {
        actions.push(Action::new(ActionKind::SetHolderInGroup, h, e, at));
        es.holder_in_group = true;
    }
}

#[allow(clippy::too_many_arguments)]
fn holder_meets_holder(
    a: NodeIdx,
    sa: &mut CsiDState,
    b: NodeIdx,
    sb: &mut CsiDState,
    cfg: &CsiDConfig,
    sims: &dyn SimilarityLookup,
    at: i64,
    actions: &mut Vec<Action>,
) {
    let exchange = if cfg.private {
        ActionKind::TransmitHolderList
    } else {
        ActionKind::TransmitProfile
    };
    actions.push(Action::new(exchange, a, b, at));
    actions.push(Action::new(exchange, b, a, at));
    if sims.similarity(a, b) > cfg.th_nbr {
        let (keep, keep_s, gone, gone_s) = if a < b { (a, sa, b, sb) } else { (b, sb, a, sa) };
        actions.push(Action::new(ActionKind::CeaseHolder, gone, keep, at));
        gone_s.is_holder = false;
        gone_s.known_holders.clear();
        gone_s.holder_in_group = true;
        keep_s.known_holders.retain(|&k| k != gone);
    } else if sa.known_holders != sb.known_holders {
        let merged = union(&sa.known_holders, &sb.known_holders);
        if !cfg.private {
            actions.push(Action::new(ActionKind::TransmitHolderList, a, b, at));
            actions.push(Action::new(ActionKind::TransmitHolderList, b, a, at));
        }
        sa.known_holders = merged.clone();
        sb.known_holders = merged;
    }
}

fn propagate_flag(
    f: NodeIdx,
    e: NodeIdx,
    es: &mut CsiDState,
    cfg: &CsiDConfig,
    sims: &dyn SimilarityLookup,
    at: i64,
    actions: &mut Vec<Action>,
) {
    actions.push(Action::new(ActionKind::TransmitProfile, e, f, at));
    if sims.similarity(f, e) > cfg.th_nbr {
        actions.push(Action::new(ActionKind::SetHolderInGroup, f, e, at));
        es.holder_in_group = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::SimilarityTable;

    fn table(m: &[&[f64]]) -> SimilarityTable {
        SimilarityTable::from_fn(m.len(), |i, j| m[i][j])
    }

    fn kinds(t: &Transition<CsiDState>) -> Vec<ActionKind> {
        t.actions.iter().map(|a| a.kind).collect()
    }

    #[test]
    fn similar_peer_is_flagged_not_elected() {
        let sims = table(&[&[1.0, 0.9], &[0.9, 1.0]]);
        let h = CsiDState::sender(NodeIdx(0));
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &h, false),
            Peer::new(NodeIdx(1), &CsiDState::default(), false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert!(kinds(&t).contains(&ActionKind::SetHolderInGroup));
        assert!(!kinds(&t).contains(&ActionKind::ElectHolder));
        assert!(t.b.holder_in_group && !t.b.is_holder);
    }

    #[test]
    fn dissimilar_peer_is_elected() {
        let sims = table(&[&[1.0, 0.1], &[0.1, 1.0]]);
        let h = CsiDState::sender(NodeIdx(0));
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &h, false),
            Peer::new(NodeIdx(1), &CsiDState::default(), false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        let k = kinds(&t);
        assert!(k.contains(&ActionKind::ElectHolder));
        assert!(k.contains(&ActionKind::TransmitMessage));
        assert!(k.contains(&ActionKind::TransmitHolderList));
        assert!(t.b.is_holder);
        assert_eq!(t.a.known_holders, vec![NodeIdx(0), NodeIdx(1)]);
        assert_eq!(t.a.known_holders, t.b.known_holders);
    }

    #[test]
    fn flagged_peer_is_never_elected() {
        let sims = table(&[&[1.0, 0.1], &[0.1, 1.0]]);
        let h = CsiDState::sender(NodeIdx(0));
        let flagged = CsiDState {
            holder_in_group: true,
            ..CsiDState::default()
        };
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &h, false),
            Peer::new(NodeIdx(1), &flagged, false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert!(!t.b.is_holder);
    }

    #[test]
    fn similar_holders_merge_to_one() {
        let sims = table(&[&[1.0, 0.8], &[0.8, 1.0]]);
        let a = CsiDState::sender(NodeIdx(0));
        let b = CsiDState::sender(NodeIdx(1));
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &a, false),
            Peer::new(NodeIdx(1), &b, false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert_eq!(kinds(&t).iter().filter(|k| **k == ActionKind::CeaseHolder).count(), 1);
        assert!(t.a.is_holder && !t.b.is_holder);
        assert_eq!(t.a.known_holders, vec![NodeIdx(0)]);
    }

    #[test]
    fn dissimilar_holders_sync_lists() {
        let sims = table(&[&[1.0, 0.2, 0.1], &[0.2, 1.0, 0.1], &[0.1, 0.1, 1.0]]);
        let a = CsiDState {
            known_holders: vec![NodeIdx(0), NodeIdx(2)],
            ..CsiDState::sender(NodeIdx(0))
        };
        let b = CsiDState::sender(NodeIdx(1));
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &a, false),
            Peer::new(NodeIdx(1), &b, false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert_eq!(t.a.known_holders, vec![NodeIdx(0), NodeIdx(1), NodeIdx(2)]);
        assert_eq!(t.a.known_holders, t.b.known_holders);
    }

    #[test]
    fn holder_delivers_before_election() {
        let sims = table(&[&[1.0, 0.9], &[0.9, 1.0]]);
        let h = CsiDState::sender(NodeIdx(0));
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &h, false),
            Peer::new(NodeIdx(1), &CsiDState::default(), true),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert_eq!(kinds(&t)[..2], [ActionKind::TransmitMessage, ActionKind::Deliver]);
        assert!(t.b.has_message && !t.b.is_holder);
    }

    #[test]
    fn flag_propagates_to_close_peers() {
        let sims = table(&[&[1.0, 0.75], &[0.75, 1.0]]);
        let f = CsiDState {
            holder_in_group: true,
            ..CsiDState::default()
        };
        let t = csid_on_encounter(
            Peer::new(NodeIdx(0), &CsiDState::default(), false),
            Peer::new(NodeIdx(1), &f, false),
            &CsiDConfig::default(),
            &sims,
            5,
        );
        assert!(t.a.holder_in_group);
    }
}
