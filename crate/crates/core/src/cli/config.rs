use std::fmt::Display;
use std::io::BufRead;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::protocols::CsiDConfig;
use crate::rng::derive_seed;
use crate::sim::{Protocol, Selection};
use crate::trace::{SyntheticConfig, TraceSchema};

/// Protocol names accepted in `protocols`.
pub const PROTOCOL_NAMES: [&str; 9] = [
    "epidemic",
    "csit",
    "csit-private",
    "group-spread",
    "csid",
    "csid-private",
    "random-walk",
    "optimal",
    "optimal-single-path",
];

/// Everything a command needs, settable from a flat `key = value` file and
/// overridable per key on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Session trace to read; a synthetic trace is generated when unset.
    pub trace: Option<PathBuf>,
    pub trace_columns: String,
    pub delimiter: char,
    pub epoch: i64,
    pub synthetic: SyntheticConfig,
    pub split_fraction: f64,
    pub power_threshold: f64,
    pub protocols: Vec<String>,
    pub th_sim: f64,
    pub th_fwd: f64,
    pub th_nbr: f64,
    pub rw_copies: u32,
    /// Walk budget; `None` matches the CSI scheme's relays per scenario.
    pub rw_ttl: Option<u32>,
    pub dominant_profiles: usize,
    pub senders_per_target: usize,
    pub csid_senders: usize,
    pub csid_receivers: usize,
    pub d_list: Vec<u32>,
    pub t_list: Vec<u32>,
    pub bin_width: f64,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            trace: None,
            trace_columns: "node,location,start,end".into(),
            delimiter: ',',
            epoch: 0,
            synthetic: SyntheticConfig::default(),
            split_fraction: 0.5,
            power_threshold: 0.9,
            protocols: ["epidemic", "csit", "group-spread", "optimal", "csid", "random-walk"]
                .map(String::from)
                .to_vec(),
            th_sim: 0.8,
            th_fwd: 0.3,
            th_nbr: 0.7,
            rw_copies: 1,
            rw_ttl: None,
            dominant_profiles: 10,
            senders_per_target: 20,
            csid_senders: 100,
            csid_receivers: 50,
            d_list: vec![1, 3, 5, 7],
            t_list: vec![0, 1, 7, 14, 28],
            bin_width: 0.1,
            seed: 42,
            out_dir: PathBuf::from("out"),
        }
    }
}

/// Every configuration key with a one-line description.
pub const KEYS: [(&str, &str); 31] = [
    ("trace", "session trace file; empty for a synthetic trace"),
    ("trace_columns", "column names of the trace file"),
    ("delimiter", "trace field delimiter"),
    ("epoch", "timestamp of day 0 midnight"),
    ("nodes", "synthetic: node count"),
    ("locations", "synthetic: location count"),
    ("communities", "synthetic: community count"),
    ("days", "synthetic: trace length in days"),
    ("sessions_per_day", "synthetic: mean sessions per node and day"),
    ("session_mean_s", "synthetic: mean session length, seconds"),
    ("session_sigma_s", "synthetic: session length deviation, seconds"),
    ("bias", "synthetic: probability a session goes to a home location"),
    (
        "active_from_s",
        "synthetic: daily activity start, seconds after midnight",
    ),
    (
        "active_until_s",
        "synthetic: daily activity end, seconds after midnight",
    ),
    ("split_fraction", "share of the trace span used for profiling"),
    ("power_threshold", "cumulative power kept in a profile"),
    ("protocols", "comma-separated protocols to simulate"),
    ("th_sim", "target similarity threshold"),
    ("th_fwd", "CSI:D election dissimilarity bound"),
    ("th_nbr", "CSI:D neighborhood similarity bound"),
    ("rw_copies", "random walk copies"),
    ("rw_ttl", "random walk hop budget, or `matched`"),
    ("dominant_profiles", "number of dominant target profiles"),
    ("senders_per_target", "senders drawn per target profile"),
    ("csid_senders", "CSI:D senders"),
    ("csid_receivers", "CSI:D receivers per message"),
    ("d_list", "history lengths in days for stability analysis"),
    ("t_list", "time gaps in days for stability analysis"),
    ("bin_width", "similarity bin width"),
    ("seed", "top-level random seed"),
    ("out_dir", "output directory"),
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let syn = &mut self.synthetic;
        match key {
            "trace" => self.trace = (!value.is_empty()).then(|| PathBuf::from(value)),
            "trace_columns" => self.trace_columns = value.to_string(),
            "delimiter" => {
                let mut chars = value.chars();
                self.delimiter = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ if value == "\\t" || value == "tab" => '\t',
                    _ => {
                        return Err(Error::InvalidConfig(format!(
                            "delimiter: '{value}' is not one character"
                        )))
                    }
                }
            }
            "epoch" => self.epoch = parse(key, value)?,
            "nodes" => syn.num_nodes = parse(key, value)?,
            "locations" => syn.num_locations = parse(key, value)?,
            "communities" => syn.num_communities = parse(key, value)?,
            "days" => syn.days = parse(key, value)?,
            "sessions_per_day" => syn.mean_sessions_per_day = parse(key, value)?,
            "session_mean_s" => syn.session_mean_s = parse(key, value)?,
            "session_sigma_s" => syn.session_sigma_s = parse(key, value)?,
            "bias" => syn.intra_community_location_bias = parse(key, value)?,
            "active_from_s" => syn.active_from_s = parse(key, value)?,
            "active_until_s" => syn.active_until_s = parse(key, value)?,
            "split_fraction" => self.split_fraction = parse(key, value)?,
            "power_threshold" => self.power_threshold = parse(key, value)?,
            "protocols" => self.protocols = parse_list(key, value)?,
            "th_sim" => self.th_sim = parse(key, value)?,
            "th_fwd" => self.th_fwd = parse(key, value)?,
            "th_nbr" => self.th_nbr = parse(key, value)?,
            "rw_copies" => self.rw_copies = parse(key, value)?,
            "rw_ttl" => {
                self.rw_ttl = if value == "matched" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "dominant_profiles" => self.dominant_profiles = parse(key, value)?,
            "senders_per_target" => self.senders_per_target = parse(key, value)?,
            "csid_senders" => self.csid_senders = parse(key, value)?,
            "csid_receivers" => self.csid_receivers = parse(key, value)?,
            "d_list" => self.d_list = parse_list(key, value)?,
            "t_list" => self.t_list = parse_list(key, value)?,
            "bin_width" => self.bin_width = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Usage(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_file<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Current value of every key, in [`KEYS`] order, as it would be written
    /// to a configuration file.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.synthetic;
        let delimiter = if self.delimiter == '\t' {
            "tab".to_string()
        } else {
            self.delimiter.to_string()
        };
        vec![
            (
                "trace",
                self.trace
                    .as_ref()
                    .map_or_else(String::new, |p| p.display().to_string()),
            ),
            ("trace_columns", self.trace_columns.clone()),
            ("delimiter", delimiter),
            ("epoch", self.epoch.to_string()),
            ("nodes", s.num_nodes.to_string()),
            ("locations", s.num_locations.to_string()),
            ("communities", s.num_communities.to_string()),
            ("days", s.days.to_string()),
            ("sessions_per_day", s.mean_sessions_per_day.to_string()),
            ("session_mean_s", s.session_mean_s.to_string()),
            ("session_sigma_s", s.session_sigma_s.to_string()),
            ("bias", s.intra_community_location_bias.to_string()),
            ("active_from_s", s.active_from_s.to_string()),
            ("active_until_s", s.active_until_s.to_string()),
            ("split_fraction", self.split_fraction.to_string()),
            ("power_threshold", self.power_threshold.to_string()),
            ("protocols", self.protocols.join(",")),
            ("th_sim", self.th_sim.to_string()),
            ("th_fwd", self.th_fwd.to_string()),
            ("th_nbr", self.th_nbr.to_string()),
            ("rw_copies", self.rw_copies.to_string()),
            (
                "rw_ttl",
                self.rw_ttl.map_or_else(|| "matched".to_string(), |t| t.to_string()),
            ),
            ("dominant_profiles", self.dominant_profiles.to_string()),
            ("senders_per_target", self.senders_per_target.to_string()),
            ("csid_senders", self.csid_senders.to_string()),
            ("csid_receivers", self.csid_receivers.to_string()),
            ("d_list", join(&self.d_list)),
            ("t_list", join(&self.t_list)),
            ("bin_width", self.bin_width.to_string()),
            ("seed", self.seed.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ]
    }

    pub fn to_file_text(&self) -> String {
        let mut out = String::from("# effective configuration\n");
        for (k, v) in self.entries() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("th_sim", self.th_sim),
            ("th_fwd", self.th_fwd),
            ("th_nbr", self.th_nbr),
            ("power_threshold", self.power_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.power_threshold <= 0.0 {
            return bad("power_threshold must be positive".into());
        }
        if self.th_fwd > self.th_nbr {
            return bad(format!("th_fwd {} exceeds th_nbr {}", self.th_fwd, self.th_nbr));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split_fraction {} outside (0, 1)", self.split_fraction));
        }
        if self.rw_copies == 0 {
            return bad("rw_copies must be positive".into());
        }
        if self.trace.is_none() {
            self.synthetic.validate()?;
        }
        for p in &self.protocols {
            if !PROTOCOL_NAMES.contains(&p.as_str()) {
                return Err(Error::Usage(format!(
                    "unknown protocol '{p}'; expected one of {}",
                    PROTOCOL_NAMES.join(", ")
                )));
            }
        }
        Ok(())
    }

    /// Synthetic generator parameters with the seed derived from the
    /// top-level seed.
    pub fn synthetic_config(&self) -> SyntheticConfig {
        SyntheticConfig {
            rng_seed: derive_seed(self.seed, "synthetic-trace"),
            ..self.synthetic.clone()
        }
    }

    pub fn schema(&self) -> Result<TraceSchema> {
        TraceSchema::from_columns(&self.trace_columns, self.delimiter)
    }

    pub fn csid(&self, private: bool) -> CsiDConfig {
        CsiDConfig {
            th_fwd: self.th_fwd,
            th_nbr: self.th_nbr,
            private,
        }
    }

    /// The simulation selection for a protocol name.
    pub fn selection(&self, name: &str) -> Result<Selection> {
        let run = |p| Ok(Selection::Run(p));
        match name {
            "epidemic" => run(Protocol::Epidemic),
            "csit" => run(Protocol::CsiT { private: false }),
            "csit-private" => run(Protocol::CsiT { private: true }),
            "group-spread" => run(Protocol::GroupSpreadOnly),
            "csid" => run(Protocol::CsiD(self.csid(false))),
            "csid-private" => run(Protocol::CsiD(self.csid(true))),
            "random-walk" => match self.rw_ttl {
                Some(ttl) => run(Protocol::RandomWalk {
                    num_copies: self.rw_copies,
                    ttl,
                }),
                None => Ok(Selection::RandomWalkMatched {
                    num_copies: self.rw_copies,
                }),
            },
            "optimal" => run(Protocol::OracleOptimal),
            "optimal-single-path" => run(Protocol::OracleSinglePath),
            _ => Err(Error::Usage(format!("unknown protocol '{name}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_text_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.set("th_sim", "0.75").unwrap();
        cfg.set("rw_ttl", "4").unwrap();
        cfg.set("trace", "data/t.csv").unwrap();
        cfg.set("delimiter", "tab").unwrap();
        let mut back = RunConfig::default();
        back.apply_file(cfg.to_file_text().as_bytes()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = RunConfig::default();
        assert!(matches!(cfg.set("nope", "1"), Err(Error::Usage(_))));
        assert!(matches!(cfg.set("th_sim", "x"), Err(Error::InvalidConfig(_))));
        cfg.set("th_fwd", "0.9").unwrap();
        assert!(cfg.validate().is_err());
        let mut cfg = RunConfig::default();
        cfg.set("protocols", "epidemic,flood").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Usage(_))));
    }

    #[test]
    fn every_key_is_listed() {
        let listed: Vec<&str> = KEYS.iter().map(|k| k.0).collect();
        let written: Vec<&str> = RunConfig::default().entries().iter().map(|e| e.0).collect();
        assert_eq!(listed, written);
    }
}
