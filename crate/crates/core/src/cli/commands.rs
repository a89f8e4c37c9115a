use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};

use super::config::RunConfig;
use crate::analysis::{pair_stability_correlation, self_stability, write_stability_csv, StabilityMetric};
use crate::encounter::{derive_encounters, encounter_stats, EncounterStats};
use crate::error::{Error, Result};
use crate::profile::{build_association_matrix, compute_profile, BehavioralProfile};
use crate::sim::{
    build_csid_scenarios, build_csit_scenarios, mean_ci, read_results_csv, run_batch, split_stats_by_sender_similarity,
    write_results_csv, MeanCi, Metrics, ResultRow, Selection, World,
};
use crate::trace::{generate_synthetic_trace, parse_trace, write_trace, DailyUsage, Trace};

pub const EFFECTIVE_CONFIG: &str = "effective_config.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const STABILITY_FILE: &str = "stability.csv";
pub const ENCOUNTER_FILE: &str = "encounter_stats.csv";
pub const RESULTS_FILE: &str = "results.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

/// Creates the output directory and records the effective configuration in
/// it.
fn prepare_out_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.out_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut f = create(&dir.join(EFFECTIVE_CONFIG))?;
    f.write_all(cfg.to_file_text().as_bytes())?;
    f.flush()?;
    Ok(dir)
}

/// The configured trace file, or the synthetic trace when none is set.
pub fn load_trace(cfg: &RunConfig) -> Result<Trace> {
    match &cfg.trace {
        Some(path) => {
            let file = File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
            let parsed = parse_trace(BufReader::new(file), &cfg.schema()?, cfg.epoch)?;
            if parsed.trace.is_empty() {
                return Err(Error::Input(format!("{} holds no records", path.display())));
            }
            Ok(parsed.trace)
        }
        None => generate_synthetic_trace(&cfg.synthetic_config()),
    }
}

/// Writes the synthetic trace to `trace.csv` in the output directory.
pub fn cmd_generate(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.synthetic_config().validate()?;
    let trace = generate_synthetic_trace(&cfg.synthetic_config())?;
    let dir = prepare_out_dir(cfg)?;
    let path = dir.join(TRACE_FILE);
    let mut out = create(&path)?;
    write_trace(&trace, &mut out, cfg.delimiter)?;
    out.flush()?;
    info!("wrote {} records to {}", trace.records().len(), path.display());
    Ok(path)
}

/// Whole-trace profiles of every node with history.
fn trace_profiles(trace: &Trace, power: f64) -> Result<BTreeMap<String, BehavioralProfile>> {
    let usage = DailyUsage::from_trace(trace);
    let days = trace
        .day_range()
        .ok_or_else(|| Error::InsufficientData("empty trace".into()))?;
    let mut out = BTreeMap::new();
    for node in usage.nodes() {
        match build_association_matrix(&usage.vectors(node, days.clone()).vectors) {
            Ok(m) => {
                out.insert(node.to_string(), compute_profile(&m, power)?);
            }
            Err(Error::EmptyHistory) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn write_encounter_csv<W: Write>(stats: &EncounterStats, mut out: W) -> Result<()> {
    writeln!(
        out,
        "lo,hi,pair_count,encounter_probability,mean_total_duration_s,encountered_set_jaccard"
    )?;
    for b in &stats.bins {
        writeln!(
            out,
            "{:.6},{:.6},{},{:.6},{:.6},{}",
            b.lo,
            b.hi,
            b.pair_count,
            b.encounter_probability,
            b.total_duration,
            b.encountered_set_similarity
                .map_or_else(|| "NA".to_string(), |j| format!("{j:.6}"))
        )?;
    }
    Ok(())
}

/// Stability curves over the `d × T` grid and encounter statistics by
/// similarity bin.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    let trace = load_trace(cfg)?;
    let dir = prepare_out_dir(cfg)?;

    let mut rows = Vec::new();
    for &d in &cfg.d_list {
        for &t in &cfg.t_list {
            for metric in [StabilityMetric::SelfSimilarity, StabilityMetric::PairCorrelation] {
                let point = match metric {
                    StabilityMetric::SelfSimilarity => self_stability(&trace, d, t),
                    StabilityMetric::PairCorrelation => pair_stability_correlation(&trace, d, t),
                };
                match point {
                    Ok(p) => rows.push((d, t, metric, Some(p))),
                    Err(e @ (Error::InsufficientData(_) | Error::UndefinedCorrelation(_))) => {
                        warn!("skipping d = {d}, T = {t}, {}: {e}", metric.as_str());
                        rows.push((d, t, metric, None));
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    let mut out = create(&dir.join(STABILITY_FILE))?;
    write_stability_csv(&rows, &mut out)?;
    out.flush()?;

    let profiles = trace_profiles(&trace, cfg.power_threshold)?;
    let stats = encounter_stats(&derive_encounters(&trace), &profiles, cfg.bin_width)?;
    let mut out = create(&dir.join(ENCOUNTER_FILE))?;
    write_encounter_csv(&stats, &mut out)?;
    out.flush()?;
    Ok(())
}

fn is_target_family(name: &str) -> bool {
    matches!(name, "csit" | "csit-private" | "group-spread" | "optimal-single-path")
}

fn is_receiver_family(name: &str) -> bool {
    matches!(name, "csid" | "csid-private")
}

/// Runs every selected protocol on the same scenarios and returns raw and
/// epidemic-normalized metrics, target scenarios first. Target protocols run
/// on target scenarios, CSI:D on receiver-set scenarios, the rest on both.
pub fn simulate_rows(cfg: &RunConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    if cfg.protocols.is_empty() {
        return Err(Error::Usage("no protocols selected".into()));
    }
    let trace = load_trace(cfg)?;
    let world = World::from_trace(&trace, cfg.split_fraction, cfg.power_threshold)?;

    let any_target = cfg.protocols.iter().any(|p| is_target_family(p));
    let any_receiver = cfg.protocols.iter().any(|p| is_receiver_family(p));
    let neither = !any_target && !any_receiver;

    let mut rows: Vec<ResultRow> = Vec::new();
    if any_target || neither {
        let scenarios = build_csit_scenarios(
            &world,
            cfg.dominant_profiles,
            cfg.senders_per_target,
            cfg.th_sim,
            cfg.seed,
        )?;
        let sels = cfg
            .protocols
            .iter()
            .filter(|p| !is_receiver_family(p))
            .map(|p| cfg.selection(p))
            .collect::<Result<Vec<Selection>>>()?;
        rows.extend(run_batch(&world, &scenarios, &sels, cfg.csid(false), cfg.seed)?);
    }
    if any_receiver || neither {
        let scenarios = build_csid_scenarios(&world, cfg.csid_senders, cfg.csid_receivers, cfg.seed)?;
        let sels = cfg
            .protocols
            .iter()
            .filter(|p| !is_target_family(p))
            .map(|p| cfg.selection(p))
            .collect::<Result<Vec<Selection>>>()?;
        rows.extend(run_batch(&world, &scenarios, &sels, cfg.csid(false), cfg.seed)?);
    }
    Ok(rows)
}

/// [`simulate_rows`] written to `results.csv` in the output directory.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf> {
    let rows = simulate_rows(cfg)?;
    let dir = prepare_out_dir(cfg)?;
    let path = dir.join(RESULTS_FILE);
    let mut out = create(&path)?;
    write_results_csv(&rows, &mut out)?;
    out.flush()?;
    info!("wrote {} result rows to {}", rows.len(), path.display());
    Ok(path)
}

fn cell(ci: Option<MeanCi>) -> String {
    ci.map_or_else(
        || "NA\tNA".to_string(),
        |c| format!("{:.6}\t{:.6}", c.mean, c.half_width),
    )
}

/// Per-protocol means with 95% intervals and, for target scenarios, the
/// same split by sender-to-target similarity, as tab-separated tables.
pub fn cmd_report<W: Write>(results: &Path, bin_width: f64, mut out: W) -> Result<()> {
    let file = File::open(results).map_err(|e| Error::Input(format!("cannot read {}: {e}", results.display())))?;
    let rows = read_results_csv(BufReader::new(file))?;
    if rows.is_empty() {
        return Err(Error::EmptyReport(format!(
            "{} holds no result rows",
            results.display()
        )));
    }

    let mut groups: BTreeMap<(&str, &str), Vec<&ResultRow>> = BTreeMap::new();
    for r in &rows {
        groups.entry((&r.kind, &r.protocol)).or_default().push(r);
    }
    writeln!(
        out,
        "kind\tprotocol\truns\tdelivery_ratio\tci\tnorm_delivery_ratio\tci\tnorm_avg_delay\tci\tnorm_tx_overhead\tci\tnorm_storage_overhead\tci"
    )?;
    for ((kind, protocol), rs) in &groups {
        let col = |f: &dyn Fn(&ResultRow) -> Option<f64>| mean_ci(&rs.iter().filter_map(|r| f(r)).collect::<Vec<_>>());
        writeln!(
            out,
            "{kind}\t{protocol}\t{}\t{}\t{}\t{}\t{}\t{}",
            rs.len(),
            cell(col(&|r| Some(r.metrics.delivery_ratio))),
            cell(col(&|r| r.normalized.delivery_ratio)),
            cell(col(&|r| r.normalized.avg_delay)),
            cell(col(&|r| r.normalized.transmission_overhead)),
            cell(col(&|r| r.normalized.storage_overhead)),
        )?;
    }

    writeln!(out)?;
    writeln!(
        out,
        "protocol\tsim_lo\tsim_hi\truns\tdelivery_ratio\tci\tavg_delay_s\tci"
    )?;
    let mut by_protocol: BTreeMap<&str, Vec<(f64, Metrics)>> = BTreeMap::new();
    for r in &rows {
        if let Some(s) = r.sender_sim {
            by_protocol.entry(&r.protocol).or_default().push((s, r.metrics.clone()));
        }
    }
    for (protocol, runs) in &by_protocol {
        for row in split_stats_by_sender_similarity(runs, bin_width)? {
            writeln!(
                out,
                "{protocol}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                row.lo,
                row.hi,
                row.delivery_ratio.n,
                cell(Some(row.delivery_ratio)),
                cell(row.avg_delay),
            )?;
        }
    }
    Ok(())
}
