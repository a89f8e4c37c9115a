//! Target-profile dissemination: a single copy climbs toward the target by
//! gradient ascend, then floods within the target's neighborhood.

use super::{Action, ActionKind, Peer, Transition};
use crate::profile::{similarity_to_target, BehavioralProfile, TargetProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsiTPhase {
    Idle,
    GradientAscend,
    GroupSpread,
    DoneForwarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsiTVariant {
    /// Gradient ascend followed by group spread.
    Full,
    /// The sender waits for a neighborhood member; no intermediate relays.
    GroupSpreadOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiTConfig {
    pub th_sim: f64,
    pub variant: CsiTVariant,
    /// Holders offer the target profile and their own score instead of
    /// asking for the peer's profile.
    pub private: bool,
}

impl CsiTConfig {
    pub fn new(th_sim: f64) -> Self {
        Self {
            th_sim,
            variant: CsiTVariant::Full,
            private: false,
        }
    }

    pub fn with_variant(mut self, variant: CsiTVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_privacy(mut self, private: bool) -> Self {
        self.private = private;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiTState {
    pub phase: CsiTPhase,
    /// Cached similarity of this node's profile to the message's target.
    pub sim_to_tp: f64,
}

impl CsiTState {
    pub fn idle(sim_to_tp: f64) -> Self {
        Self {
            phase: CsiTPhase::Idle,
            sim_to_tp,
        }
    }

    /// Initial state of the sender: inside the neighborhood it starts
    /// spreading at once.
    pub fn sender(sim_to_tp: f64, th_sim: f64) -> Self {
        let phase = if sim_to_tp > th_sim {
            CsiTPhase::GroupSpread
        } else {
            CsiTPhase::GradientAscend
        };
        Self { phase, sim_to_tp }
    }

    pub fn from_profile(bp: &BehavioralProfile, tp: &TargetProfile) -> Self {
        Self::idle(similarity_to_target(bp, tp))
    }

    pub fn holds_copy(&self) -> bool {
        matches!(self.phase, CsiTPhase::GradientAscend | CsiTPhase::GroupSpread)
    }

    pub fn has_seen(&self) -> bool {
        self.phase != CsiTPhase::Idle
    }
}

/// What a holder discloses in the private handshake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandshakeOffer {
    pub holder_phase: CsiTPhase,
    pub holder_score: f64,
    pub th_sim: f64,
    pub variant: CsiTVariant,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeerDecision {
    pub request: bool,
    pub peer_score: f64,
    /// Phase the peer enters if it receives the copy.
    pub next_phase: CsiTPhase,
}

/// Peer-side decision of the private handshake: the peer scores itself
/// against the offered target and never reveals its profile.
pub fn privacy_handshake_csit(offer: &HandshakeOffer, tp: &TargetProfile, peer_bp: &BehavioralProfile) -> PeerDecision {
    decide(offer, similarity_to_target(peer_bp, tp))
}

fn decide(offer: &HandshakeOffer, peer_score: f64) -> PeerDecision {
    let in_group = peer_score > offer.th_sim;
    let request = match (offer.holder_phase, offer.variant) {
        (CsiTPhase::GroupSpread, _) => in_group,
        (CsiTPhase::GradientAscend, CsiTVariant::Full) => peer_score > offer.holder_score,
        (CsiTPhase::GradientAscend, CsiTVariant::GroupSpreadOnly) => in_group,
        _ => false,
    };
    let next_phase = if in_group {
        CsiTPhase::GroupSpread
    } else {
        CsiTPhase::GradientAscend
    };
    PeerDecision {
        request,
        peer_score,
        next_phase,
    }
}

/// One encounter of the target-profile protocol. Nodes that have already
/// seen the message are never offered it again.
pub fn csit_on_encounter(
    a: Peer<'_, CsiTState>,
    b: Peer<'_, CsiTState>,
    cfg: &CsiTConfig,
    at: i64,
) -> Transition<CsiTState> {
    let mut out = Transition {
        a: *a.state,
        b: *b.state,
        actions: Vec::new(),
    };
    let a_to_b = match (
        a.state.holds_copy(),
        b.state.has_seen(),
        b.state.holds_copy(),
        a.state.has_seen(),
    ) {
        (true, false, _, _) => true,
        (_, _, true, false) => false,
        _ => return out,
    };
    let (holder, peer) = if a_to_b { (a, b) } else { (b, a) };
    let offer = HandshakeOffer {
        holder_phase: holder.state.phase,
        holder_score: holder.state.sim_to_tp,
        th_sim: cfg.th_sim,
        variant: cfg.variant,
    };
    if cfg.private {
        out.actions
            .push(Action::new(ActionKind::TransmitTpAndScore, holder.id, peer.id, at));
    } else {
        out.actions
            .push(Action::new(ActionKind::TransmitProfile, peer.id, holder.id, at));
    }
    let decision = decide(&offer, peer.state.sim_to_tp);
    if !decision.request {
        return out;
    }
    out.actions
        .push(Action::new(ActionKind::TransmitMessage, holder.id, peer.id, at));
    let mut new_holder = *holder.state;
    let mut new_peer = *peer.state;
    new_peer.phase = decision.next_phase;
    if new_peer.phase == CsiTPhase::GroupSpread {
        out.actions
            .push(Action::new(ActionKind::Deliver, holder.id, peer.id, at));
    }
    if new_holder.phase == CsiTPhase::GradientAscend {
        new_holder.phase = CsiTPhase::DoneForwarded;
    }
    if a_to_b {
        out.a = new_holder;
        out.b = new_peer;
    } else {
        out.a = new_peer;
        out.b = new_holder;
    }
    out
}

/// The sender keeps its copy until it meets a neighborhood member, after
/// which the message spreads as in the full protocol.
pub fn group_spread_only_on_encounter(
    a: Peer<'_, CsiTState>,
    b: Peer<'_, CsiTState>,
    th_sim: f64,
    private: bool,
    at: i64,
) -> Transition<CsiTState> {
    let cfg = CsiTConfig::new(th_sim)
        .with_variant(CsiTVariant::GroupSpreadOnly)
        .with_privacy(private);
    csit_on_encounter(a, b, &cfg, at)
}
