use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rayon::prelude::*;

use crate::encounter::{derive_encounters, EncounterStream};
use crate::error::{Error, Result};
use crate::profile::{
    build_association_matrix, compute_profile, similarity, similarity_to_target, BehavioralProfile, TargetProfile,
};
use crate::protocols::{Contact, NodeIdx, SimilarityLookup, SimilarityTable};
use crate::trace::{split_trace, DailyUsage, Trace};

/// Interns node tokens. Indices follow ascending token order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeIndex {
    tokens: Vec<String>,
    lookup: BTreeMap<String, NodeIdx>,
}

impl NodeIndex {
    pub fn new<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let tokens: Vec<String> = set.into_iter().collect();
        let lookup = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), NodeIdx::from(i)))
            .collect();
        Self { tokens, lookup }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<NodeIdx> {
        self.lookup.get(token).copied()
    }

    pub fn token(&self, idx: NodeIdx) -> &str {
        &self.tokens[idx.index()]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeIdx> + '_ {
        (0..self.tokens.len()).map(NodeIdx::from)
    }

    fn require(&self, token: &str) -> Result<NodeIdx> {
        self.get(token)
            .ok_or_else(|| Error::Input(format!("unknown node '{token}'")))
    }
}

/// Reduces an encounter stream to contacts processed at their start time.
pub fn contacts_from_stream(stream: &EncounterStream, nodes: &NodeIndex) -> Result<Vec<Contact>> {
    stream
        .events()
        .iter()
        .map(|e| {
            Ok(Contact::new(
                e.start,
                nodes.require(&e.node_a)?,
                nodes.require(&e.node_b)?,
            ))
        })
        .collect()
}

/// Parses `t,node_a,node_b` lines into contacts ordered by time, then node
/// order. Blank lines and `#` comments are skipped.
pub fn parse_contact_script<R: BufRead>(reader: R, nodes: &NodeIndex) -> Result<Vec<Contact>> {
    let mut contacts = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [t, a, b] = fields[..] else {
            return Err(Error::Input(format!("line {}: expected t,node_a,node_b", n + 1)));
        };
        let t: i64 = t
            .parse()
            .map_err(|_| Error::Input(format!("line {}: bad time '{t}'", n + 1)))?;
        let (a, b) = (nodes.require(a)?, nodes.require(b)?);
        if a == b {
            return Err(Error::Input(format!("line {}: a node cannot meet itself", n + 1)));
        }
        contacts.push(Contact::new(t, a, b));
    }
    contacts.sort();
    Ok(contacts)
}

/// Everything a simulation replays against: node profiles built from the
/// profiling half of a trace and contacts from the evaluation half.
#[derive(Debug, Clone)]
pub struct World {
    nodes: NodeIndex,
    profiles: Vec<BehavioralProfile>,
    sims: SimilarityTable,
    contacts: Vec<Contact>,
    eval_start: i64,
}

impl World {
    pub fn new(
        nodes: NodeIndex,
        profiles: Vec<BehavioralProfile>,
        contacts: Vec<Contact>,
        eval_start: i64,
    ) -> Result<Self> {
        if profiles.len() != nodes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} profiles for {} nodes",
                profiles.len(),
                nodes.len()
            )));
        }
        if let Some(c) = contacts.iter().find(|c| c.b.index() >= nodes.len()) {
            return Err(Error::InvalidArgument(format!(
                "contact references unknown node {}",
                c.b
            )));
        }
        let n = nodes.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| similarity(&profiles[i], &profiles[j])).collect())
            .collect();
        let sims = SimilarityTable::from_fn(n, |i, j| rows[i][j - i]);
        Ok(Self {
            nodes,
            profiles,
            sims,
            contacts,
            eval_start,
        })
    }

    /// Splits `trace` at `split_fraction` of its span: profiles come from the
    /// first part, contacts from the second. Nodes without history in the
    /// first part get an empty profile.
    pub fn from_trace(trace: &Trace, split_fraction: f64, power_threshold: f64) -> Result<Self> {
        let (first, second) = split_trace(trace, split_fraction)?;
        let nodes = NodeIndex::new(trace.nodes().iter().cloned());
        let usage = DailyUsage::from_trace(&first);
        let days = first
            .day_range()
            .ok_or_else(|| Error::InsufficientData("profiling half is empty".into()))?;
        let profiles = nodes
            .tokens()
            .par_iter()
            .map(|node| {
                let daily = usage.vectors(node, days.clone());
                match build_association_matrix(&daily.vectors) {
                    Ok(m) => compute_profile(&m, power_threshold),
                    Err(Error::EmptyHistory) => Ok(BehavioralProfile::empty()),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let stream = derive_encounters(&second);
        let contacts = contacts_from_stream(&stream, &nodes)?;
        let eval_start = second.span().map_or(0, |(s, _)| s);
        Self::new(nodes, profiles, contacts, eval_start)
    }

    pub fn nodes(&self) -> &NodeIndex {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn profile(&self, n: NodeIdx) -> &BehavioralProfile {
        &self.profiles[n.index()]
    }

    pub fn profiles(&self) -> &[BehavioralProfile] {
        &self.profiles
    }

    pub fn similarities(&self) -> &SimilarityTable {
        &self.sims
    }

    pub fn similarity(&self, x: NodeIdx, y: NodeIdx) -> f64 {
        self.sims.similarity(x, y)
    }

    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    /// Injection time of every message.
    pub fn eval_start(&self) -> i64 {
        self.eval_start
    }

    pub fn similarities_to_target(&self, tp: &TargetProfile) -> Vec<f64> {
        self.profiles.iter().map(|p| similarity_to_target(p, tp)).collect()
    }
}
