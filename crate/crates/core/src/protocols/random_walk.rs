//! Random-walk baseline: a fixed number of copies wander between encounter
//! peers until their hop budget runs out.

use rand::Rng;

use super::{Action, ActionKind, NodeIdx, Peer, Transition};

/// Chance that a held copy moves to the peer of an encounter.
pub const TRANSFER_PROBABILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RandomWalkMode {
    /// A copy reaching a node above `th_sim` to the target starts group
    /// spread.
    Target { th_sim: f64 },
    /// Every visited node becomes a holder serving intended receivers.
    Dissemination,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomWalkConfig {
    pub num_copies: u32,
    pub ttl: u32,
    pub mode: RandomWalkMode,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RandomWalkState {
    /// Remaining hop budget of each walking copy held here.
    pub copies: Vec<u32>,
    /// Group-spread member (target mode) or visited holder (dissemination).
    pub holder: bool,
    pub has_message: bool,
    /// Similarity to the target; unused in dissemination mode.
    pub sim_to_tp: f64,
}

impl RandomWalkState {
    pub fn idle(sim_to_tp: f64) -> Self {
        Self {
            sim_to_tp,
            ..Self::default()
        }
    }

    pub fn sender(cfg: &RandomWalkConfig, sim_to_tp: f64) -> Self {
        let copies = vec![cfg.ttl; cfg.num_copies as usize];
        match cfg.mode {
            RandomWalkMode::Target { th_sim } if sim_to_tp > th_sim => Self {
                copies: Vec::new(),
                holder: true,
                has_message: true,
                sim_to_tp,
            },
            RandomWalkMode::Target { .. } => Self {
                copies,
                holder: false,
                has_message: true,
                sim_to_tp,
            },
            RandomWalkMode::Dissemination => Self {
                copies,
                holder: true,
                has_message: true,
                sim_to_tp,
            },
        }
    }
}

/// One encounter: each side may pass at most one of the copies it held
/// before the encounter, then spreading members and holders serve the peer.
pub fn random_walk_on_encounter<R: Rng + ?Sized>(
    a: Peer<'_, RandomWalkState>,
    b: Peer<'_, RandomWalkState>,
    cfg: &RandomWalkConfig,
    rng: &mut R,
    at: i64,
) -> Transition<RandomWalkState> {
    let mut sa = a.state.clone();
    let mut sb = b.state.clone();
    let mut actions = Vec::new();
    let held_a = sa.copies.len();
    let held_b = sb.copies.len();
    walk(
        a.id,
        &mut sa,
        held_a,
        b.id,
        &mut sb,
        b.intended_receiver,
        cfg,
        rng,
        at,
        &mut actions,
    );
    walk(
        b.id,
        &mut sb,
        held_b,
        a.id,
        &mut sa,
        a.intended_receiver,
        cfg,
        rng,
        at,
        &mut actions,
    );
    serve(
        a.id,
        &sa.clone(),
        b.id,
        &mut sb,
        b.intended_receiver,
        cfg,
        at,
        &mut actions,
    );
    serve(
        b.id,
        &sb.clone(),
        a.id,
        &mut sa,
        a.intended_receiver,
        cfg,
        at,
        &mut actions,
    );
    Transition { a: sa, b: sb, actions }
}

#[allow(clippy::too_many_arguments)]
fn walk<R: Rng + ?Sized>(
    x: NodeIdx,
    xs: &mut RandomWalkState,
    held: usize,
    y: NodeIdx,
    ys: &mut RandomWalkState,
    y_intended: bool,
    cfg: &RandomWalkConfig,
    rng: &mut R,
    at: i64,
    actions: &mut Vec<Action>,
) {
    if let RandomWalkMode::Target { .. } = cfg.mode {
        if ys.holder {
            return;
        }
    }
    let mut chosen = None;
    for i in 0..held.min(xs.copies.len()) {
        if xs.copies[i] == 0 {
            continue;
        }
        if rng.random_bool(TRANSFER_PROBABILITY) && chosen.is_none() {
            chosen = Some(i);
        }
    }
    let Some(i) = chosen else { return };
    let ttl = xs.copies.remove(i) - 1;
    actions.push(Action::new(ActionKind::TransmitMessage, x, y, at));
    match cfg.mode {
        RandomWalkMode::Target { th_sim } => {
            if ys.sim_to_tp > th_sim {
                ys.holder = true;
                ys.has_message = true;
                actions.push(Action::new(ActionKind::Deliver, x, y, at));
            } else {
                ys.copies.push(ttl);
                ys.has_message = true;
            }
        }
        RandomWalkMode::Dissemination => {
            ys.copies.push(ttl);
            ys.holder = true;
            if y_intended && !ys.has_message {
                actions.push(Action::new(ActionKind::Deliver, x, y, at));
            }
            ys.has_message = true;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn serve(
    x: NodeIdx,
    xs: &RandomWalkState,
    y: NodeIdx,
    ys: &mut RandomWalkState,
    y_intended: bool,
    cfg: &RandomWalkConfig,
    at: i64,
    actions: &mut Vec<Action>,
) {
    if !xs.holder {
        return;
    }
    let serves = match cfg.mode {
        RandomWalkMode::Target { th_sim } => !ys.holder && ys.sim_to_tp > th_sim,
        RandomWalkMode::Dissemination => y_intended && !ys.has_message,
    };
    if !serves {
        return;
    }
    actions.push(Action::new(ActionKind::TransmitMessage, x, y, at));
    actions.push(Action::new(ActionKind::Deliver, x, y, at));
    ys.has_message = true;
    if let RandomWalkMode::Target { .. } = cfg.mode {
        ys.holder = true;
    }
}
