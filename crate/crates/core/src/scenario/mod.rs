//! Scenario plumbing for the command-line front end: configuration
//! documents, the reference presets, CSV output and run comparison.

mod compare;
mod config;
mod output;
mod presets;

pub use compare::{
    compare_runs, junction_trace, shock_position, ComparisonReport, MarkerOutcome, RoadComparison,
    SnapshotComparison,
};
pub use config::{
    parse_config, parse_document, ConfigDocument, Entry, ScenarioConfig, DEFAULT_DELTA,
};
pub use output::{emit_snapshots, read_snapshots, MANIFEST_NAME};
pub use presets::{find_preset, ExpectedMarker, Quantity, ScenarioPreset, PRESETS};

use crate::network::{RunReport, SimulationConfig, Snapshot};

/// Snapshots of one run with the settings that produced them.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub config: SimulationConfig,
    pub snapshots: Vec<Snapshot>,
}

impl RunRecord {
    pub fn new(config: &SimulationConfig, report: &RunReport) -> Self {
        Self {
            config: config.clone(),
            snapshots: report.snapshots.clone(),
        }
    }
}
