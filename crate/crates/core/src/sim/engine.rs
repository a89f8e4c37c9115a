use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use super::world::World;
use crate::error::{Error, Result};
use crate::protocols::{
    csid_on_encounter, csit_on_encounter, epidemic_on_encounter, oracle_optimal_plan, oracle_single_path_plan,
    random_walk_on_encounter, Action, ActionKind, Audience, Contact, CsiDConfig, CsiDState, CsiTConfig, CsiTState,
    CsiTVariant, Message, NodeIdx, Peer, RandomWalkConfig, RandomWalkMode, RandomWalkState, SimilarityLookup,
};
use crate::rng::component_rng;

/// Protocol selector with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    Epidemic,
    CsiT { private: bool },
    GroupSpreadOnly,
    CsiD(CsiDConfig),
    RandomWalk { num_copies: u32, ttl: u32 },
    OracleOptimal,
    OracleSinglePath,
}

impl Protocol {
    pub fn label(&self) -> &'static str {
        match self {
            Protocol::Epidemic => "epidemic",
            Protocol::CsiT { private: false } => "csit",
            Protocol::CsiT { private: true } => "csit-private",
            Protocol::GroupSpreadOnly => "group-spread",
            Protocol::CsiD(cfg) if cfg.private => "csid-private",
            Protocol::CsiD(_) => "csid",
            Protocol::RandomWalk { .. } => "random-walk",
            Protocol::OracleOptimal => "optimal",
            Protocol::OracleSinglePath => "optimal-single-path",
        }
    }

    /// Whether the protocol needs a target profile to route by.
    pub fn needs_target(&self) -> bool {
        matches!(
            self,
            Protocol::CsiT { .. } | Protocol::GroupSpreadOnly | Protocol::OracleSinglePath
        )
    }
}

/// Per-message (or aggregated) outcome counters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    /// Delivered over intended (message, receiver) pairs; 0 when nothing was
    /// intended.
    pub delivery_ratio: f64,
    /// Mean delay over delivered pairs, seconds.
    pub avg_delay: Option<f64>,
    pub transmission_overhead: u64,
    pub storage_overhead: u64,
    pub profile_exchange_count: u64,
    /// Largest number of nodes holding a payload at any instant.
    pub peak_storage: u64,
    pub delivered: u64,
    pub intended: u64,
}

/// Result of one protocol over one scenario.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub metrics: Metrics,
    /// Per message, delay of each delivered intended receiver.
    pub deliveries: Vec<BTreeMap<NodeIdx, i64>>,
    /// Emitted actions per kind, indexed by `ActionKind::ordinal`.
    pub action_counts: [u64; 8],
}

impl RunOutcome {
    pub fn count(&self, kind: ActionKind) -> u64 {
        self.action_counts[kind.ordinal()]
    }
}

/// A protocol instance for one message, advanced one contact at a time.
pub trait Dissemination {
    fn holds_payload(&self, n: NodeIdx) -> bool;
    /// Cheap filter: `false` if the contact cannot produce any action.
    fn is_active(&self, c: &Contact) -> bool;
    fn on_contact(&mut self, c: &Contact, rng: &mut ChaCha8Rng) -> Vec<Action>;
}

/// What one replay produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Replay {
    /// First delivery time per intended receiver.
    pub delivered_at: BTreeMap<NodeIdx, i64>,
    pub action_counts: [u64; 8],
    pub final_holders: u64,
    pub peak_holders: u64,
}

/// Runs `p` over contacts at or after `created_at`. `inspect` sees the
/// protocol after every contact together with the actions it emitted.
#[allow(clippy::too_many_arguments)]
pub fn replay<P: Dissemination>(
    p: &mut P,
    n: usize,
    contacts: &[Contact],
    created_at: i64,
    intended: &[bool],
    sender: NodeIdx,
    rng: &mut ChaCha8Rng,
    mut inspect: impl FnMut(&P, &Contact, &[Action]),
) -> Replay {
    let mut out = Replay::default();
    if intended[sender.index()] {
        out.delivered_at.insert(sender, created_at);
    }
    let mut holders = (0..n).filter(|&i| p.holds_payload(NodeIdx::from(i))).count() as u64;
    out.peak_holders = holders;
    let start = contacts.partition_point(|c| c.time < created_at);
    for c in &contacts[start..] {
        if !p.is_active(c) {
            continue;
        }
        let before = p.holds_payload(c.a) as u64 + p.holds_payload(c.b) as u64;
        let actions = p.on_contact(c, rng);
        let after = p.holds_payload(c.a) as u64 + p.holds_payload(c.b) as u64;
        holders = holders + after - before;
        out.peak_holders = out.peak_holders.max(holders);
        for a in &actions {
            out.action_counts[a.kind.ordinal()] += 1;
            if a.kind == ActionKind::Deliver && intended[a.to.index()] {
                out.delivered_at.entry(a.to).or_insert(a.at);
            }
        }
        inspect(p, c, &actions);
    }
    out.final_holders = holders;
    out
}

fn peers<'s, S>(states: &'s [S], intended: &[bool], c: &Contact) -> (Peer<'s, S>, Peer<'s, S>) {
    (
        Peer::new(c.a, &states[c.a.index()], intended[c.a.index()]),
        Peer::new(c.b, &states[c.b.index()], intended[c.b.index()]),
    )
}

pub struct EpidemicRun {
    pub states: Vec<bool>,
    intended: Vec<bool>,
}

impl EpidemicRun {
    pub fn new(n: usize, sender: NodeIdx, intended: Vec<bool>) -> Self {
        let mut states = vec![false; n];
        states[sender.index()] = true;
        Self { states, intended }
    }
}

impl Dissemination for EpidemicRun {
    fn holds_payload(&self, n: NodeIdx) -> bool {
        self.states[n.index()]
    }

    fn is_active(&self, c: &Contact) -> bool {
        self.states[c.a.index()] != self.states[c.b.index()]
    }

    fn on_contact(&mut self, c: &Contact, _: &mut ChaCha8Rng) -> Vec<Action> {
        let (a, b) = peers(&self.states, &self.intended, c);
        let t = epidemic_on_encounter(a, b, c.time);
        self.states[c.a.index()] = t.a;
        self.states[c.b.index()] = t.b;
        t.actions
    }
}

pub struct CsiTRun {
    pub states: Vec<CsiTState>,
    pub cfg: CsiTConfig,
    intended: Vec<bool>,
}

impl CsiTRun {
    pub fn new(sims_to_tp: &[f64], sender: NodeIdx, cfg: CsiTConfig) -> Self {
        let mut states: Vec<CsiTState> = sims_to_tp.iter().map(|&s| CsiTState::idle(s)).collect();
        states[sender.index()] = CsiTState::sender(sims_to_tp[sender.index()], cfg.th_sim);
        let intended = sims_to_tp.iter().map(|&s| s > cfg.th_sim).collect();
        Self { states, cfg, intended }
    }
}

impl Dissemination for CsiTRun {
    fn holds_payload(&self, n: NodeIdx) -> bool {
        self.states[n.index()].holds_copy()
    }

    fn is_active(&self, c: &Contact) -> bool {
        self.states[c.a.index()].holds_copy() || self.states[c.b.index()].holds_copy()
    }

    fn on_contact(&mut self, c: &Contact, _: &mut ChaCha8Rng) -> Vec<Action> {
        let (a, b) = peers(&self.states, &self.intended, c);
        let t = csit_on_encounter(a, b, &self.cfg, c.time);
        self.states[c.a.index()] = t.a;
        self.states[c.b.index()] = t.b;
        t.actions
    }
}

pub struct CsiDRun<'w, L: SimilarityLookup + ?Sized> {
    pub states: Vec<CsiDState>,
    pub cfg: CsiDConfig,
    sims: &'w L,
    intended: Vec<bool>,
}

impl<'w, L: SimilarityLookup + ?Sized> CsiDRun<'w, L> {
    pub fn new(n: usize, sender: NodeIdx, intended: Vec<bool>, cfg: CsiDConfig, sims: &'w L) -> Self {
        let mut states = vec![CsiDState::default(); n];
        states[sender.index()] = CsiDState::sender(sender);
        Self {
            states,
            cfg,
            sims,
            intended,
        }
    }
}

struct Dyn<'a, L: ?Sized>(&'a L);

impl<L: SimilarityLookup + ?Sized> SimilarityLookup for Dyn<'_, L> {
    fn similarity(&self, x: NodeIdx, y: NodeIdx) -> f64 {
        self.0.similarity(x, y)
    }
}

impl<L: SimilarityLookup + ?Sized> Dissemination for CsiDRun<'_, L> {
    fn holds_payload(&self, n: NodeIdx) -> bool {
        self.states[n.index()].is_holder
    }

    fn is_active(&self, c: &Contact) -> bool {
        let (a, b) = (&self.states[c.a.index()], &self.states[c.b.index()]);
        a.is_holder || b.is_holder || a.holder_in_group != b.holder_in_group
    }

    fn on_contact(&mut self, c: &Contact, _: &mut ChaCha8Rng) -> Vec<Action> {
        let (a, b) = peers(&self.states, &self.intended, c);
        let t = csid_on_encounter(a, b, &self.cfg, &Dyn(self.sims), c.time);
        self.states[c.a.index()] = t.a;
        self.states[c.b.index()] = t.b;
        t.actions
    }
}

pub struct RandomWalkRun {
    pub states: Vec<RandomWalkState>,
    pub cfg: RandomWalkConfig,
    intended: Vec<bool>,
}

impl RandomWalkRun {
    pub fn new(sims_to_tp: &[f64], sender: NodeIdx, intended: Vec<bool>, cfg: RandomWalkConfig) -> Self {
        let mut states: Vec<RandomWalkState> = sims_to_tp.iter().map(|&s| RandomWalkState::idle(s)).collect();
        states[sender.index()] = RandomWalkState::sender(&cfg, sims_to_tp[sender.index()]);
        Self { states, cfg, intended }
    }
}

impl Dissemination for RandomWalkRun {
    fn holds_payload(&self, n: NodeIdx) -> bool {
        let s = &self.states[n.index()];
        s.holder || !s.copies.is_empty()
    }

    fn is_active(&self, c: &Contact) -> bool {
        self.holds_payload(c.a) || self.holds_payload(c.b)
    }

    fn on_contact(&mut self, c: &Contact, rng: &mut ChaCha8Rng) -> Vec<Action> {
        let (a, b) = peers(&self.states, &self.intended, c);
        let t = random_walk_on_encounter(a, b, &self.cfg, rng, c.time);
        self.states[c.a.index()] = t.a;
        self.states[c.b.index()] = t.b;
        t.actions
    }
}

fn ignore<P>(_: &P, _: &Contact, _: &[Action]) {}

/// Intended-receiver mask and per-node similarity to the target (zeros for
/// explicit receiver sets).
pub fn audience_of(world: &World, msg: &Message) -> (Vec<bool>, Vec<f64>) {
    match &msg.audience {
        Audience::Target(tp) => {
            let sims = world.similarities_to_target(tp);
            let intended = sims.iter().map(|&s| s > tp.th_sim()).collect();
            (intended, sims)
        }
        Audience::Receivers(set) => {
            let mut intended = vec![false; world.len()];
            for r in set {
                intended[r.index()] = true;
            }
            (intended, vec![0.0; world.len()])
        }
    }
}

fn target_threshold(msg: &Message, protocol: &Protocol) -> Result<Option<f64>> {
    match (&msg.audience, protocol.needs_target()) {
        (Audience::Target(tp), _) => Ok(Some(tp.th_sim())),
        (Audience::Receivers(_), true) => Err(Error::InvalidArgument(format!(
            "{} needs a target profile but message {} has an explicit receiver set",
            protocol.label(),
            msg.id
        ))),
        (Audience::Receivers(_), false) => Ok(None),
    }
}

/// Outcome of one message.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MessageOutcome {
    pub delays: BTreeMap<NodeIdx, i64>,
    pub intended: u64,
    pub action_counts: [u64; 8],
    pub storage: u64,
    pub peak_storage: u64,
}

/// Replays one message through `protocol` over the world's contacts.
pub fn run_message(world: &World, msg: &Message, protocol: &Protocol, rng: &mut ChaCha8Rng) -> Result<MessageOutcome> {
    let th = target_threshold(msg, protocol)?;
    let (intended, sims) = audience_of(world, msg);
    let n = world.len();
    if msg.sender.index() >= n {
        return Err(Error::InvalidArgument(format!(
            "sender {} outside the world",
            msg.sender
        )));
    }
    let contacts = world.contacts();
    let created = msg.created_at;
    let intended_count = intended.iter().filter(|&&x| x).count() as u64;
    let from_replay = |r: Replay| MessageOutcome {
        delays: r.delivered_at.iter().map(|(&k, &t)| (k, t - created)).collect(),
        intended: intended_count,
        action_counts: r.action_counts,
        storage: r.final_holders,
        peak_storage: r.peak_holders,
    };
    let out = match *protocol {
        Protocol::Epidemic => {
            let mut p = EpidemicRun::new(n, msg.sender, intended.clone());
            let mut o = from_replay(replay(&mut p, n, contacts, created, &intended, msg.sender, rng, ignore));
            o.storage = o.action_counts[ActionKind::TransmitMessage.ordinal()];
            o.peak_storage = o.storage;
            o
        }
        Protocol::CsiT { private } => {
            let cfg = CsiTConfig::new(th.unwrap()).with_privacy(private);
            let mut p = CsiTRun::new(&sims, msg.sender, cfg);
            from_replay(replay(&mut p, n, contacts, created, &intended, msg.sender, rng, ignore))
        }
        Protocol::GroupSpreadOnly => {
            let cfg = CsiTConfig::new(th.unwrap()).with_variant(CsiTVariant::GroupSpreadOnly);
            let mut p = CsiTRun::new(&sims, msg.sender, cfg);
            from_replay(replay(&mut p, n, contacts, created, &intended, msg.sender, rng, ignore))
        }
        Protocol::CsiD(cfg) => {
            let mut p = CsiDRun::new(n, msg.sender, intended.clone(), cfg, world.similarities());
            from_replay(replay(&mut p, n, contacts, created, &intended, msg.sender, rng, ignore))
        }
        Protocol::RandomWalk { num_copies, ttl } => {
            let mode = match th {
                Some(th_sim) => RandomWalkMode::Target { th_sim },
                None => RandomWalkMode::Dissemination,
            };
            let cfg = RandomWalkConfig { num_copies, ttl, mode };
            let mut p = RandomWalkRun::new(&sims, msg.sender, intended.clone(), cfg);
            from_replay(replay(&mut p, n, contacts, created, &intended, msg.sender, rng, ignore))
        }
        Protocol::OracleOptimal => {
            let receivers: Vec<NodeIdx> = (0..n).filter(|&i| intended[i]).map(NodeIdx::from).collect();
            let plan = oracle_optimal_plan(contacts, n, msg.sender, created, &receivers);
            let mut action_counts = [0; 8];
            action_counts[ActionKind::TransmitMessage.ordinal()] = plan.transmissions as u64;
            let delays: BTreeMap<NodeIdx, i64> = plan
                .deliveries
                .iter()
                .filter_map(|(&r, t)| t.map(|t| (r, t - created)))
                .collect();
            action_counts[ActionKind::Deliver.ordinal()] = delays.len() as u64;
            MessageOutcome {
                delays,
                intended: intended_count,
                action_counts,
                storage: plan.transmissions as u64,
                peak_storage: plan.transmissions as u64,
            }
        }
        Protocol::OracleSinglePath => {
            let plan = oracle_single_path_plan(contacts, &sims, msg.sender, created, th.unwrap());
            let mut action_counts = [0; 8];
            action_counts[ActionKind::TransmitMessage.ordinal()] = plan.transmissions as u64;
            action_counts[ActionKind::Deliver.ordinal()] = plan.deliveries.len() as u64;
            MessageOutcome {
                delays: plan.deliveries.iter().map(|(&r, &t)| (r, t - created)).collect(),
                intended: intended_count,
                action_counts,
                storage: plan.deliveries.len() as u64,
                peak_storage: plan.deliveries.len() as u64,
            }
        }
    };
    Ok(out)
}

/// Combines per-message outcomes into scenario metrics.
pub fn aggregate(outcomes: &[MessageOutcome]) -> RunOutcome {
    let mut run = RunOutcome::default();
    let mut delay_sum = 0i128;
    for o in outcomes {
        for (k, c) in o.action_counts.iter().enumerate() {
            run.action_counts[k] += c;
        }
        run.metrics.intended += o.intended;
        run.metrics.delivered += o.delays.len() as u64;
        run.metrics.storage_overhead += o.storage;
        run.metrics.peak_storage += o.peak_storage;
        delay_sum += o.delays.values().map(|&d| d as i128).sum::<i128>();
        run.deliveries.push(o.delays.clone());
    }
    let m = &mut run.metrics;
    m.delivery_ratio = if m.intended == 0 {
        0.0
    } else {
        m.delivered as f64 / m.intended as f64
    };
    m.avg_delay = (m.delivered > 0).then(|| delay_sum as f64 / m.delivered as f64);
    m.transmission_overhead = run.action_counts[ActionKind::TransmitMessage.ordinal()];
    m.profile_exchange_count = ActionKind::ALL
        .iter()
        .filter(|k| k.is_profile_exchange())
        .map(|k| run.action_counts[k.ordinal()])
        .sum();
    run
}

/// Runs every message of `scenario` through `protocol`. Randomness is
/// derived from `seed`, the protocol label, and the scenario id.
pub fn run_simulation(world: &World, scenario: &super::Scenario, protocol: &Protocol, seed: u64) -> Result<RunOutcome> {
    let mut rng = component_rng(seed, &format!("run/{}/{}", protocol.label(), scenario.id));
    let outcomes = scenario
        .messages
        .iter()
        .map(|m| run_message(world, m, protocol, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    Ok(aggregate(&outcomes))
}

/// Mean delay of `run` over the (message, receiver) pairs that both `run`
/// and `baseline` delivered, paired with the baseline's mean over the same
/// pairs.
pub fn common_delays(run: &RunOutcome, baseline: &RunOutcome) -> Option<(f64, f64)> {
    let mut own = 0i128;
    let mut base = 0i128;
    let mut count = 0u64;
    for (mine, theirs) in run.deliveries.iter().zip(&baseline.deliveries) {
        for (r, d) in mine {
            if let Some(b) = theirs.get(r) {
                own += *d as i128;
                base += *b as i128;
                count += 1;
            }
        }
    }
    (count > 0).then(|| (own as f64 / count as f64, base as f64 / count as f64))
}
