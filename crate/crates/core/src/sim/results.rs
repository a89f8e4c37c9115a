use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rayon::prelude::*;

use super::engine::{common_delays, run_simulation, Metrics, Protocol, RunOutcome};
use super::scenarios::{Scenario, ScenarioKind};
use super::stats::{normalize_metrics, NormalizedMetrics};
use super::world::World;
use crate::error::{Error, Result};
use crate::protocols::{ActionKind, CsiDConfig};

/// A protocol as selected for a batch. A matched random walk takes one copy
/// whose hop budget equals the relays the CSI scheme of the same scenario
/// spent outside deliveries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Run(Protocol),
    RandomWalkMatched { num_copies: u32 },
}

impl Selection {
    pub fn label(&self) -> &'static str {
        match self {
            Selection::Run(p) => p.label(),
            Selection::RandomWalkMatched { .. } => "random-walk",
        }
    }
}

/// One CSV row: raw metrics of a (protocol, scenario) run plus its ratios to
/// epidemic routing on the same scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub protocol: String,
    pub scenario_id: usize,
    pub seed: u64,
    pub kind: String,
    pub sender_sim: Option<f64>,
    pub metrics: Metrics,
    pub avg_delay_common: Option<f64>,
    /// Walk budget actually used by random-walk rows.
    pub ttl: Option<u32>,
    pub normalized: NormalizedMetrics,
    pub norm_avg_delay_common: Option<f64>,
}

impl ResultRow {
    pub fn new(protocol: &str, scenario: &Scenario, seed: u64, run: &RunOutcome, baseline: &RunOutcome) -> Self {
        let common = common_delays(run, baseline);
        Self {
            protocol: protocol.to_string(),
            scenario_id: scenario.id,
            seed,
            kind: scenario.kind.as_str().to_string(),
            sender_sim: scenario.sender_similarity,
            metrics: run.metrics.clone(),
            avg_delay_common: common.map(|c| c.0),
            ttl: None,
            normalized: normalize_metrics(&run.metrics, &baseline.metrics),
            norm_avg_delay_common: common.and_then(|(own, base)| (base != 0.0).then(|| own / base)),
        }
    }
}

fn matched_ttl(world: &World, scenario: &Scenario, csid: CsiDConfig, seed: u64) -> Result<u32> {
    let budget = match scenario.kind {
        ScenarioKind::CsiT => {
            let r = run_simulation(world, scenario, &Protocol::CsiT { private: false }, seed)?;
            r.count(ActionKind::TransmitMessage) - r.count(ActionKind::Deliver)
        }
        ScenarioKind::CsiD => {
            let r = run_simulation(world, scenario, &Protocol::CsiD(csid), seed)?;
            r.count(ActionKind::ElectHolder)
        }
    };
    Ok(budget.max(1) as u32)
}

/// Runs every selection on every scenario, scenarios in parallel. Rows come
/// out in (scenario, selection) order regardless of scheduling.
pub fn run_batch(
    world: &World,
    scenarios: &[Scenario],
    selections: &[Selection],
    csid: CsiDConfig,
    seed: u64,
) -> Result<Vec<ResultRow>> {
    let per_scenario = scenarios
        .par_iter()
        .map(|sc| {
            let baseline = run_simulation(world, sc, &Protocol::Epidemic, seed)?;
            selections
                .iter()
                .map(|sel| {
                    let (protocol, ttl) = match *sel {
                        Selection::Run(p) => (p, None),
                        Selection::RandomWalkMatched { num_copies } => {
                            let ttl = matched_ttl(world, sc, csid, seed)?;
                            (Protocol::RandomWalk { num_copies, ttl }, Some(ttl))
                        }
                    };
                    let ttl = ttl.or(match protocol {
                        Protocol::RandomWalk { ttl, .. } => Some(ttl),
                        _ => None,
                    });
                    let run = run_simulation(world, sc, &protocol, seed)?;
                    let mut row = ResultRow::new(sel.label(), sc, seed, &run, &baseline);
                    row.ttl = ttl;
                    Ok(row)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_scenario.into_iter().flatten().collect())
}

pub const RESULT_COLUMNS: [&str; 20] = [
    "protocol",
    "scenario_id",
    "seed",
    "kind",
    "sender_sim",
    "delivery_ratio",
    "avg_delay_s",
    "avg_delay_common_s",
    "tx_overhead",
    "storage_overhead",
    "profile_exchanges",
    "peak_holders",
    "delivered",
    "intended",
    "ttl",
    "norm_delivery_ratio",
    "norm_avg_delay",
    "norm_avg_delay_common",
    "norm_tx_overhead",
    "norm_storage_overhead",
];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.6}"))
}

pub fn write_results_csv<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    writeln!(out, "{}", RESULT_COLUMNS.join(","))?;
    for r in rows {
        let m = &r.metrics;
        let n = &r.normalized;
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.scenario_id,
            r.seed,
            r.kind,
            opt(r.sender_sim),
            m.delivery_ratio,
            opt(m.avg_delay),
            opt(r.avg_delay_common),
            m.transmission_overhead,
            m.storage_overhead,
            m.profile_exchange_count,
            m.peak_storage,
            m.delivered,
            m.intended,
            r.ttl.map_or_else(|| "NA".to_string(), |t| t.to_string()),
            opt(n.delivery_ratio),
            opt(n.avg_delay),
            opt(r.norm_avg_delay_common),
            opt(n.transmission_overhead),
            opt(n.storage_overhead),
        )?;
    }
    Ok(())
}

fn field<'a>(row: &BTreeMap<&str, &'a str>, name: &str, line: usize) -> Result<&'a str> {
    row.get(name)
        .copied()
        .ok_or_else(|| Error::Input(format!("line {line}: missing column {name}")))
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Input(format!("line {line}: bad {name} '{s}'")))
}

fn parse_opt(s: &str, name: &str, line: usize) -> Result<Option<f64>> {
    if s == "NA" {
        Ok(None)
    } else {
        parse_num(s, name, line).map(Some)
    }
}

/// Reads rows written by [`write_results_csv`]. Columns are matched by
/// header name.
pub fn read_results_csv<R: BufRead>(reader: R) -> Result<Vec<ResultRow>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Ok(Vec::new()),
    };
    let names: Vec<String> = header.trim().split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let ln = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<&str> = line.trim().split(',').collect();
        if values.len() != names.len() {
            return Err(Error::Input(format!(
                "line {ln}: {} fields, header has {}",
                values.len(),
                names.len()
            )));
        }
        let row: BTreeMap<&str, &str> = names.iter().map(String::as_str).zip(values).collect();
        let f = |name: &str| field(&row, name, ln);
        let ttl = f("ttl")?;
        rows.push(ResultRow {
            protocol: f("protocol")?.to_string(),
            scenario_id: parse_num(f("scenario_id")?, "scenario_id", ln)?,
            seed: parse_num(f("seed")?, "seed", ln)?,
            kind: f("kind")?.to_string(),
            sender_sim: parse_opt(f("sender_sim")?, "sender_sim", ln)?,
            metrics: Metrics {
                delivery_ratio: parse_num(f("delivery_ratio")?, "delivery_ratio", ln)?,
                avg_delay: parse_opt(f("avg_delay_s")?, "avg_delay_s", ln)?,
                transmission_overhead: parse_num(f("tx_overhead")?, "tx_overhead", ln)?,
                storage_overhead: parse_num(f("storage_overhead")?, "storage_overhead", ln)?,
                profile_exchange_count: parse_num(f("profile_exchanges")?, "profile_exchanges", ln)?,
                peak_storage: parse_num(f("peak_holders")?, "peak_holders", ln)?,
                delivered: parse_num(f("delivered")?, "delivered", ln)?,
                intended: parse_num(f("intended")?, "intended", ln)?,
            },
            avg_delay_common: parse_opt(f("avg_delay_common_s")?, "avg_delay_common_s", ln)?,
            ttl: if ttl == "NA" {
                None
            } else {
                Some(parse_num(ttl, "ttl", ln)?)
            },
            normalized: NormalizedMetrics {
                delivery_ratio: parse_opt(f("norm_delivery_ratio")?, "norm_delivery_ratio", ln)?,
                avg_delay: parse_opt(f("norm_avg_delay")?, "norm_avg_delay", ln)?,
                transmission_overhead: parse_opt(f("norm_tx_overhead")?, "norm_tx_overhead", ln)?,
                storage_overhead: parse_opt(f("norm_storage_overhead")?, "norm_storage_overhead", ln)?,
            },
            norm_avg_delay_common: parse_opt(f("norm_avg_delay_common")?, "norm_avg_delay_common", ln)?,
        });
    }
    Ok(rows)
}
