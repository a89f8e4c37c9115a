//! Trace-replay simulation: scenario construction, protocol runs over the
//! evaluation contacts, and metrics accounting.

mod engine;
mod results;
mod scenarios;
mod stats;
mod world;

pub use engine::{
    aggregate, audience_of, common_delays, replay, run_message, run_simulation, CsiDRun, CsiTRun, Dissemination,
    EpidemicRun, MessageOutcome, Metrics, Protocol, RandomWalkRun, Replay, RunOutcome,
};
pub use results::{read_results_csv, run_batch, write_results_csv, ResultRow, Selection, RESULT_COLUMNS};
pub use scenarios::{
    build_csid_scenarios, build_csit_scenarios, dominant_profiles, DominantProfile, ProfileEpoch, Scenario,
    ScenarioKind, DEFAULT_CSID_RECEIVERS, DEFAULT_CSID_SENDERS, DEFAULT_DOMINANT_PROFILES, DEFAULT_SENDERS_PER_TARGET,
    DEFAULT_TH_SIM,
};
pub use stats::{
    mean_ci, normalize_metrics, split_stats_by_sender_similarity, MeanCi, NormalizedMetrics, SplitRow, Z_95,
};
pub use world::{contacts_from_stream, parse_contact_script, NodeIndex, World};
