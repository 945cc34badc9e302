//! Time integration of a 2-to-1 merge network: roads 1 and 2 end at the
//! junction at `x = 1`, road 3 starts there at `x = 0`. Outer boundaries are
//! zero-Neumann.

use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};
use crate::junction::{
    kinetic_junction_fluxes, macro_merge, JunctionTrace, KineticCoupling, MacroCoupling,
};
use crate::kinetic::{self, godunov_flux, relax_exact, CellState};
use crate::lwr::{self, scalar_godunov_flux, ScalarCell};

/// Steps below this are treated as a collapse of the time loop.
pub const MIN_DT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    Kinetic,
    Lwr,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Coupling {
    KineticFair,
    KineticPriority,
    KineticPriorityTruncated(f64),
    MacroFair,
    MacroPriority,
}

impl Coupling {
    pub fn model(&self) -> Model {
        match self {
            Coupling::MacroFair | Coupling::MacroPriority => Model::Lwr,
            _ => Model::Kinetic,
        }
    }

    fn kinetic(&self) -> Option<KineticCoupling> {
        match *self {
            Coupling::KineticFair => Some(KineticCoupling::Fair),
            Coupling::KineticPriority => Some(KineticCoupling::Priority),
            Coupling::KineticPriorityTruncated(d) => Some(KineticCoupling::PriorityTruncated(d)),
            _ => None,
        }
    }

    fn macroscopic(&self) -> Option<MacroCoupling> {
        match self {
            Coupling::MacroFair => Some(MacroCoupling::Fair),
            Coupling::MacroPriority => Some(MacroCoupling::Priority),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JunctionEnd {
    /// Incoming road, junction at `x = 1`.
    AtRight,
    /// Outgoing road, junction at `x = 0`.
    AtLeft,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RoadCells {
    Kinetic(Vec<CellState>),
    Scalar(Vec<ScalarCell>),
}

impl RoadCells {
    pub fn len(&self) -> usize {
        match self {
            RoadCells::Kinetic(c) => c.len(),
            RoadCells::Scalar(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rho(&self, i: usize) -> f64 {
        match self {
            RoadCells::Kinetic(c) => c[i].rho(),
            RoadCells::Scalar(c) => c[i].rho,
        }
    }
}

/// Uniform grid on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadGrid {
    pub cells: RoadCells,
    pub dx: f64,
    pub junction_end: JunctionEnd,
}

impl RoadGrid {
    pub fn mass(&self) -> f64 {
        let sum: f64 = (0..self.cells.len()).map(|i| self.cells.rho(i)).sum();
        sum * self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// Density in the cell next to the junction.
    pub fn junction_density(&self) -> f64 {
        match self.junction_end {
            JunctionEnd::AtRight => self.cells.rho(self.cells.len() - 1),
            JunctionEnd::AtLeft => self.cells.rho(0),
        }
    }
}

/// Two incoming roads and one outgoing road.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeNode {
    pub incoming: [usize; 2],
    pub outgoing: usize,
    pub coupling: Coupling,
}

#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub model: Model,
    pub epsilon: f64,
    pub cells_per_road: usize,
    pub t_end: f64,
    pub cfl_number: f64,
    pub initial_densities: [f64; 3],
    pub diagram: FundamentalDiagram,
    pub coupling: Coupling,
    /// Requested output times; empty means only `t_end`.
    pub snapshot_times: Vec<f64>,
}

impl SimulationConfig {
    /// Defaults of the reference experiments: 1000 cells, `eps = 1e-3`,
    /// `T = 1`, CFL 0.45 on the LWR diagram.
    pub fn new(model: Model, coupling: Coupling, initial_densities: [f64; 3]) -> Self {
        Self {
            model,
            epsilon: 1e-3,
            cells_per_road: 1000,
            t_end: 1.0,
            cfl_number: kinetic::DEFAULT_CFL,
            initial_densities,
            diagram: FundamentalDiagram::lwr(),
            coupling,
            snapshot_times: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.model == Model::Kinetic && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.cells_per_road == 0 {
            return bad("cells must be at least 1".into());
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if !(self.cfl_number > 0.0 && self.cfl_number < 1.0) {
            return bad(format!("cfl must lie in (0, 1), got {}", self.cfl_number));
        }
        for (i, r) in self.initial_densities.iter().enumerate() {
            if !(0.0..=1.0).contains(r) {
                return bad(format!("rho{} must lie in [0, 1], got {r}", i + 1));
            }
        }
        if self.coupling.model() != self.model {
            return bad(format!(
                "coupling {:?} cannot be used with the {:?} model",
                self.coupling, self.model
            ));
        }
        if let Coupling::KineticPriorityTruncated(delta) = self.coupling {
            let delta_bar = self.diagram.delta_bar();
            if !(0.0..=delta_bar).contains(&delta) {
                return bad(format!("delta must lie in [0, {delta_bar}], got {delta}"));
            }
        }
        if let Some(t) = self
            .snapshot_times
            .iter()
            .find(|t| !(**t >= 0.0 && t.is_finite()))
        {
            return bad(format!("snapshot time {t} is invalid"));
        }
        Ok(())
    }
}

/// Full state of the network.
#[derive(Clone, Debug)]
pub struct NetworkState {
    pub time: f64,
    pub steps: usize,
    pub roads: Vec<RoadGrid>,
    pub node: MergeNode,
    pub diagram: FundamentalDiagram,
    pub model: Model,
    pub epsilon: f64,
    pub cfl_number: f64,
}

/// Mass bookkeeping of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Mass entering through the outer boundaries during the step.
    pub boundary_inflow: f64,
    /// `|C^1 + C^2 - C^3|` at the junction.
    pub junction_imbalance: f64,
}

pub fn initialize(config: &SimulationConfig) -> Result<NetworkState> {
    config.validate()?;
    let n = config.cells_per_road;
    let dx = 1.0 / n as f64;
    let roads = config
        .initial_densities
        .iter()
        .zip([
            JunctionEnd::AtRight,
            JunctionEnd::AtRight,
            JunctionEnd::AtLeft,
        ])
        .map(|(&rho, junction_end)| {
            let cells = match config.model {
                Model::Kinetic => {
                    RoadCells::Kinetic(vec![CellState::equilibrium(&config.diagram, rho); n])
                }
                Model::Lwr => RoadCells::Scalar(vec![ScalarCell { rho }; n]),
            };
            RoadGrid {
                cells,
                dx,
                junction_end,
            }
        })
        .collect();
    Ok(NetworkState {
        time: 0.0,
        steps: 0,
        roads,
        node: MergeNode {
            incoming: [0, 1],
            outgoing: 2,
            coupling: config.coupling,
        },
        diagram: config.diagram.clone(),
        model: config.model,
        epsilon: config.epsilon,
        cfl_number: config.cfl_number,
    })
}

impl NetworkState {
    pub fn total_mass(&self) -> f64 {
        self.roads.iter().map(RoadGrid::mass).sum()
    }

    /// Largest step allowed by the CFL condition on every road.
    pub fn stable_dt(&self) -> f64 {
        self.roads
            .iter()
            .map(|road| match &road.cells {
                RoadCells::Kinetic(c) => kinetic::stable_dt(c, road.dx, self.cfl_number),
                RoadCells::Scalar(_) => lwr::stable_dt(&self.diagram, road.dx, self.cfl_number),
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn kinetic_cells(&self, road: usize) -> &[CellState] {
        match &self.roads[road].cells {
            RoadCells::Kinetic(c) => c,
            RoadCells::Scalar(_) => unreachable!("model and cells are paired at initialization"),
        }
    }

    fn scalar_cells(&self, road: usize) -> &[ScalarCell] {
        match &self.roads[road].cells {
            RoadCells::Scalar(c) => c,
            RoadCells::Kinetic(_) => unreachable!("model and cells are paired at initialization"),
        }
    }
}

/// One synchronized step of all roads.
pub fn advance(state: &mut NetworkState, dt: f64) -> Result<StepReport> {
    let report = match state.model {
        Model::Kinetic => advance_kinetic(state, dt)?,
        Model::Lwr => advance_lwr(state, dt)?,
    };
    state.time += dt;
    state.steps += 1;
    Ok(report)
}

fn advance_kinetic(state: &mut NetworkState, dt: f64) -> Result<StepReport> {
    let mode = state
        .node
        .coupling
        .kinetic()
        .ok_or_else(|| Error::Config("macroscopic coupling on a kinetic network".into()))?;
    let [r1, r2] = state.node.incoming;
    let r3 = state.node.outgoing;
    let (c1, c2, c3) = (
        state.kinetic_cells(r1),
        state.kinetic_cells(r2),
        state.kinetic_cells(r3),
    );
    let (Some(last_1), Some(last_2), Some(first_3)) = (c1.last(), c2.last(), c3.first()) else {
        return Err(Error::Config("roads must have at least one cell".into()));
    };
    let trace = JunctionTrace::from_cells(last_1, last_2, first_3);
    let junction = kinetic_junction_fluxes(&trace, mode, &state.diagram)?;
    let [j1, j2, j3] = junction.fluxes;
    let imbalance = (j1.mass_flux + j2.mass_flux - j3.mass_flux).abs();

    // Zero-Neumann: the ghost copies the boundary cell.
    let own = |c: &CellState| godunov_flux(c, c);
    let in_1 = own(&c1[0]);
    let in_2 = own(&c2[0]);
    let out_3 = own(c3.last().expect("checked non-empty"));

    let mut next: Vec<(usize, Vec<CellState>)> = Vec::with_capacity(3);
    for (road, left, right) in [(r1, in_1, j1), (r2, in_2, j2), (r3, j3, out_3)] {
        let cells = state.kinetic_cells(road);
        let moved =
            kinetic::transport_step_with_fluxes(cells, left, right, dt, state.roads[road].dx)?;
        next.push((road, moved));
    }
    for (road, mut cells) in next {
        for c in cells.iter_mut() {
            *c = relax_exact(c, dt, state.epsilon, &state.diagram);
        }
        state.roads[road].cells = RoadCells::Kinetic(cells);
    }
    Ok(StepReport {
        dt,
        boundary_inflow: dt * (in_1.mass_flux + in_2.mass_flux - out_3.mass_flux),
        junction_imbalance: imbalance,
    })
}

fn advance_lwr(state: &mut NetworkState, dt: f64) -> Result<StepReport> {
    let mode = state
        .node
        .coupling
        .macroscopic()
        .ok_or_else(|| Error::Config("kinetic coupling on an LWR network".into()))?;
    let d = &state.diagram;
    let [r1, r2] = state.node.incoming;
    let r3 = state.node.outgoing;
    let (c1, c2, c3) = (
        state.scalar_cells(r1),
        state.scalar_cells(r2),
        state.scalar_cells(r3),
    );
    let (Some(last_1), Some(last_2), Some(first_3)) = (c1.last(), c2.last(), c3.first()) else {
        return Err(Error::Config("roads must have at least one cell".into()));
    };
    let merge = macro_merge(d, [last_1.rho, last_2.rho, first_3.rho], mode);
    let [j1, j2, j3] = merge.fluxes;
    let imbalance = (j1 + j2 - j3).abs();
    let own = |c: &ScalarCell| scalar_godunov_flux(d, c.rho, c.rho);
    let in_1 = own(&c1[0]);
    let in_2 = own(&c2[0]);
    let out_3 = own(c3.last().expect("checked non-empty"));

    let mut next = Vec::with_capacity(3);
    for (road, left, right) in [(r1, in_1, j1), (r2, in_2, j2), (r3, j3, out_3)] {
        let cells = state.scalar_cells(road);
        let moved = lwr::scalar_step(d, cells, left, right, dt, state.roads[road].dx)?;
        next.push((road, moved));
    }
    for (road, cells) in next {
        state.roads[road].cells = RoadCells::Scalar(cells);
    }
    Ok(StepReport {
        dt,
        boundary_inflow: dt * (in_1 + in_2 - out_3),
        junction_imbalance: imbalance,
    })
}

/// Field values of one road at one output time.
#[derive(Clone, Debug, PartialEq)]
pub struct RoadSnapshot {
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    /// Flux `q` (kinetic) or `F(rho)` (LWR).
    pub q: Vec<f64>,
    /// Riemann invariant `Z`; kinetic runs only.
    pub z: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub requested_time: f64,
    pub time: f64,
    pub roads: Vec<RoadSnapshot>,
}

pub fn take_snapshot(state: &NetworkState, requested_time: f64) -> Snapshot {
    let roads = state
        .roads
        .iter()
        .map(|road| {
            let n = road.cells.len();
            let x = (0..n).map(|i| road.x(i)).collect();
            match &road.cells {
                RoadCells::Kinetic(c) => RoadSnapshot {
                    x,
                    rho: c.iter().map(CellState::rho).collect(),
                    q: c.iter().map(CellState::q).collect(),
                    z: Some(c.iter().map(CellState::z).collect()),
                },
                RoadCells::Scalar(c) => RoadSnapshot {
                    x,
                    rho: c.iter().map(|s| s.rho).collect(),
                    q: c.iter().map(|s| state.diagram.flux(s.rho)).collect(),
                    z: None,
                },
            }
        })
        .collect();
    Snapshot {
        requested_time,
        time: state.time,
        roads,
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub snapshots: Vec<Snapshot>,
    pub final_state: NetworkState,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Time integral of the net outer-boundary inflow.
    pub boundary_flux_integral: f64,
    pub max_junction_imbalance: f64,
}

impl RunReport {
    /// `|m(T) - m(0) - inflow| / max(m(0), m(T))`.
    pub fn relative_mass_error(&self) -> f64 {
        let scale = self.initial_mass.max(self.final_mass);
        let err = (self.final_mass - self.initial_mass - self.boundary_flux_integral).abs();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }
}

/// Runs to `t_end`, clipping the adaptive step to the requested output
/// times.
pub fn run(config: &SimulationConfig) -> Result<RunReport> {
    let mut state = initialize(config)?;
    let mut requested: Vec<f64> = if config.snapshot_times.is_empty() {
        vec![config.t_end]
    } else {
        config
            .snapshot_times
            .iter()
            .copied()
            .filter(|&t| t <= config.t_end)
            .collect()
    };
    requested.sort_by(f64::total_cmp);
    requested.dedup();

    let initial_mass = state.total_mass();
    let mut inflow = 0.0;
    let mut imbalance: f64 = 0.0;
    let mut snapshots = Vec::with_capacity(requested.len());
    let mut pending = requested.into_iter().peekable();

    loop {
        while let Some(&t) = pending.peek() {
            if t <= state.time {
                snapshots.push(take_snapshot(&state, t));
                pending.next();
            } else {
                break;
            }
        }
        if state.time >= config.t_end {
            break;
        }
        let target = pending
            .peek()
            .copied()
            .unwrap_or(config.t_end)
            .min(config.t_end);
        let dt_cfl = state.stable_dt();
        if dt_cfl < MIN_DT {
            return Err(Error::StepCollapse {
                dt: dt_cfl,
                time: state.time,
            });
        }
        let remaining = target - state.time;
        let dt = if dt_cfl >= remaining {
            remaining
        } else {
            dt_cfl
        };
        let report = advance(&mut state, dt)?;
        if dt == remaining {
            // Land exactly on the target despite round-off in the sum.
            state.time = target;
        }
        inflow += report.boundary_inflow;
        imbalance = imbalance.max(report.junction_imbalance);
    }

    Ok(RunReport {
        snapshots,
        initial_mass,
        final_mass: state.total_mass(),
        boundary_flux_integral: inflow,
        max_junction_imbalance: imbalance,
        final_state: state,
    })
}
