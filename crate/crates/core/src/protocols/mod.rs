//! Encounter-driven dissemination protocols. Each protocol is a pure
//! transition over the two states involved in one encounter, emitting the
//! actions that metrics accounting consumes.

use std::fmt;

mod csid;
mod csit;
mod epidemic;
mod oracle;
mod random_walk;

pub use csid::{csid_on_encounter, CsiDConfig, CsiDState};
pub use csit::{
    csit_on_encounter, group_spread_only_on_encounter, privacy_handshake_csit, CsiTConfig, CsiTPhase, CsiTState,
    CsiTVariant, HandshakeOffer, PeerDecision,
};
pub use epidemic::{epidemic_on_encounter, EpidemicState};
pub use oracle::{
    earliest_arrival, oracle_optimal_plan, oracle_single_path_plan, Arrival, OptimalPlan, Relay, SinglePathPlan,
};
pub use random_walk::{random_walk_on_encounter, RandomWalkConfig, RandomWalkMode, RandomWalkState};

/// Dense node index. Indices follow ascending node-token order, so index
/// comparisons are token comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeIdx(pub u32);

impl NodeIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeIdx {
    fn from(i: usize) -> Self {
        NodeIdx(i as u32)
    }
}

impl fmt::Display for NodeIdx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// An encounter reduced to the instant it is processed at; `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Contact {
    pub time: i64,
    pub a: NodeIdx,
    pub b: NodeIdx,
}

impl Contact {
    pub fn new(time: i64, x: NodeIdx, y: NodeIdx) -> Self {
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        Self { time, a, b }
    }

    pub fn involves(&self, n: NodeIdx) -> bool {
        self.a == n || self.b == n
    }

    pub fn other(&self, n: NodeIdx) -> NodeIdx {
        if self.a == n {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    TransmitMessage,
    TransmitProfile,
    TransmitTpAndScore,
    TransmitHolderList,
    ElectHolder,
    CeaseHolder,
    SetHolderInGroup,
    Deliver,
}

impl ActionKind {
    /// Handshake traffic that reveals behavioral profiles.
    pub fn is_profile_exchange(self) -> bool {
        matches!(self, ActionKind::TransmitProfile | ActionKind::TransmitHolderList)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub kind: ActionKind,
    pub from: NodeIdx,
    pub to: NodeIdx,
    pub at: i64,
}

impl Action {
    pub fn new(kind: ActionKind, from: NodeIdx, to: NodeIdx, at: i64) -> Self {
        Self { kind, from, to, at }
    }
}

/// One side of an encounter as seen by a transition.
#[derive(Debug, Clone, Copy)]
pub struct Peer<'a, S> {
    pub id: NodeIdx,
    pub state: &'a S,
    pub intended_receiver: bool,
}

impl<'a, S> Peer<'a, S> {
    pub fn new(id: NodeIdx, state: &'a S, intended_receiver: bool) -> Self {
        Self {
            id,
            state,
            intended_receiver,
        }
    }
}

/// Post-encounter states of both sides plus the emitted actions.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S> {
    pub a: S,
    pub b: S,
    pub actions: Vec<Action>,
}

/// Pairwise behavioral similarity between nodes.
pub trait SimilarityLookup {
    fn similarity(&self, x: NodeIdx, y: NodeIdx) -> f64;
}

/// Dense symmetric similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityTable {
    /// Builds the table from `f(i, j)` evaluated for `i < j`; the diagonal is
    /// `f(i, i)`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let s = f(i, j);
                values[i * n + j] = s;
                values[j * n + i] = s;
            }
        }
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl SimilarityLookup for SimilarityTable {
    fn similarity(&self, x: NodeIdx, y: NodeIdx) -> f64 {
        self.values[x.index() * self.n + y.index()]
    }
}

/// Who a message is for.
#[derive(Debug, Clone, PartialEq)]
pub enum Audience {
    /// Every node whose similarity to the target exceeds its threshold.
    Target(crate::profile::TargetProfile),
    /// An explicit receiver set, orthogonal to behavior.
    Receivers(std::collections::BTreeSet<NodeIdx>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub id: String,
    pub sender: NodeIdx,
    pub created_at: i64,
    pub audience: Audience,
    /// Bookkeeping only.
    pub payload_size: u32,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::TransmitMessage,
        ActionKind::TransmitProfile,
        ActionKind::TransmitTpAndScore,
        ActionKind::TransmitHolderList,
        ActionKind::ElectHolder,
        ActionKind::CeaseHolder,
        ActionKind::SetHolderInGroup,
        ActionKind::Deliver,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::TransmitMessage => "transmit_message",
            ActionKind::TransmitProfile => "transmit_profile",
            ActionKind::TransmitTpAndScore => "transmit_tp_and_score",
            ActionKind::TransmitHolderList => "transmit_holder_list",
            ActionKind::ElectHolder => "elect_holder",
            ActionKind::CeaseHolder => "cease_holder",
            ActionKind::SetHolderInGroup => "set_holder_in_group",
            ActionKind::Deliver => "deliver",
        }
    }

    pub fn ordinal(self) -> usize {
        self as usize
    }
}
