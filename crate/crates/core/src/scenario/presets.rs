use std::fmt;

use super::config::DEFAULT_DELTA;
use crate::network::{Coupling, Model, SimulationConfig};

/// A scalar read off a run, or off a pair of runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quantity {
    /// Density of the cell next to the junction on a road (1-based).
    JunctionTrace { road: usize },
    /// Macroscopic coupling flux from the initial densities.
    CouplingFlux { road: usize },
    /// Halfway crossing of the density profile; see `shock_position`.
    ShockPosition { road: usize },
    /// L1 distance between the kinetic and the LWR profile.
    L1Distance { road: usize },
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::JunctionTrace { road } => write!(f, "junction trace road {road}"),
            Quantity::CouplingFlux { road } => write!(f, "coupling flux C{road}"),
            Quantity::ShockPosition { road } => write!(f, "shock position road {road}"),
            Quantity::L1Distance { road } => write!(f, "L1 distance road {road}"),
        }
    }
}

/// `|quantity - value| <= tolerance` at the final snapshot. `model` names
/// the run the quantity is read from; `None` for quantities of the pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpectedMarker {
    pub model: Option<Model>,
    pub quantity: Quantity,
    pub value: f64,
    pub tolerance: f64,
}

const fn marker(
    model: Option<Model>,
    quantity: Quantity,
    value: f64,
    tolerance: f64,
) -> ExpectedMarker {
    ExpectedMarker {
        model,
        quantity,
        value,
        tolerance,
    }
}

const K: Option<Model> = Some(Model::Kinetic);
const L: Option<Model> = Some(Model::Lwr);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub initial_densities: [f64; 3],
    /// Priority coupling (truncated with `DEFAULT_DELTA` for the kinetic
    /// model) instead of fair merging.
    pub priority: bool,
    pub expected_markers: &'static [ExpectedMarker],
}

impl ScenarioPreset {
    pub fn coupling(&self, model: Model) -> Coupling {
        match (model, self.priority) {
            (Model::Kinetic, false) => Coupling::KineticFair,
            (Model::Kinetic, true) => Coupling::KineticPriorityTruncated(DEFAULT_DELTA),
            (Model::Lwr, false) => Coupling::MacroFair,
            (Model::Lwr, true) => Coupling::MacroPriority,
        }
    }

    /// Default run settings for one model.
    pub fn config(&self, model: Model) -> SimulationConfig {
        SimulationConfig::new(model, self.coupling(model), self.initial_densities)
    }
}

// rho_+(1/8) = (1 + sqrt(1/2)) / 2
const RHO_PLUS_HALF_SIGMA: f64 = 0.853_553_390_593_273_8;

pub const PRESETS: &[ScenarioPreset] = &[
    ScenarioPreset {
        name: "merge_fair_1",
        description: "fair merge, light traffic: everything passes",
        initial_densities: [0.1, 0.15, 0.2],
        priority: false,
        expected_markers: &[
            marker(K, Quantity::JunctionTrace { road: 3 }, 0.3197, 2e-3),
            marker(L, Quantity::JunctionTrace { road: 3 }, 0.3197, 2e-3),
            marker(None, Quantity::L1Distance { road: 1 }, 0.0, 0.02),
            marker(None, Quantity::L1Distance { road: 2 }, 0.0, 0.02),
            marker(None, Quantity::L1Distance { road: 3 }, 0.0, 0.02),
        ],
    },
    ScenarioPreset {
        name: "merge_fair_2",
        description: "fair merge, both incoming roads congested",
        initial_densities: [0.7, 0.6, 0.2],
        priority: false,
        expected_markers: &[
            marker(
                K,
                Quantity::JunctionTrace { road: 1 },
                RHO_PLUS_HALF_SIGMA,
                5e-3,
            ),
            marker(
                K,
                Quantity::JunctionTrace { road: 2 },
                RHO_PLUS_HALF_SIGMA,
                5e-3,
            ),
            marker(L, Quantity::CouplingFlux { road: 1 }, 0.125, 1e-12),
            marker(L, Quantity::CouplingFlux { road: 2 }, 0.125, 1e-12),
        ],
    },
    ScenarioPreset {
        name: "merge_fair_3",
        description: "fair merge, few cars on road 1 and many on road 2",
        initial_densities: [0.05, 0.6, 0.2],
        priority: false,
        expected_markers: &[
            marker(K, Quantity::JunctionTrace { road: 2 }, 0.7179, 2e-3),
            marker(L, Quantity::JunctionTrace { road: 2 }, 0.7179, 2e-3),
        ],
    },
    ScenarioPreset {
        name: "merge_fair_4",
        description: "fair merge into a congested outgoing road",
        initial_densities: [0.2, 0.5, 0.8],
        priority: false,
        expected_markers: &[
            marker(K, Quantity::JunctionTrace { road: 1 }, 0.9123, 2e-3),
            marker(K, Quantity::JunctionTrace { road: 2 }, 0.9123, 2e-3),
        ],
    },
    ScenarioPreset {
        name: "merge_priority_1",
        description: "priority merge, road 1 saturates road 3 and road 2 waits",
        initial_densities: [0.6, 0.7, 0.2],
        priority: true,
        expected_markers: &[
            marker(L, Quantity::CouplingFlux { road: 2 }, 0.0, 1e-12),
            marker(K, Quantity::JunctionTrace { road: 2 }, 1.0, 2e-3),
            marker(L, Quantity::JunctionTrace { road: 2 }, 1.0, 2e-3),
        ],
    },
    ScenarioPreset {
        name: "merge_priority_2",
        description: "priority merge, free outflow from road 1",
        initial_densities: [0.1, 0.5, 0.2],
        priority: true,
        expected_markers: &[
            marker(L, Quantity::CouplingFlux { road: 1 }, 0.09, 1e-12),
            marker(L, Quantity::CouplingFlux { road: 2 }, 0.16, 1e-12),
            marker(L, Quantity::JunctionTrace { road: 1 }, 0.1, 2e-3),
        ],
    },
    ScenarioPreset {
        name: "merge_priority_3",
        description: "priority merge, equal incoming roads and little space downstream",
        initial_densities: [0.4, 0.4, 0.7],
        priority: true,
        // Shocks at x = 1 + s t with s = -0.1 (road 1) and s = -0.4 (road 2).
        expected_markers: &[
            marker(L, Quantity::ShockPosition { road: 1 }, 0.9, 0.02),
            marker(L, Quantity::ShockPosition { road: 2 }, 0.6, 0.02),
            marker(K, Quantity::ShockPosition { road: 1 }, 0.9, 0.03),
            marker(K, Quantity::ShockPosition { road: 2 }, 0.6, 0.03),
        ],
    },
];

pub fn find_preset(name: &str) -> Option<&'static ScenarioPreset> {
    PRESETS.iter().find(|p| p.name == name)
}
