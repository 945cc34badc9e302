use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::error::{Error, Result};
use crate::network::{Coupling, Model, RoadSnapshot, SimulationConfig, Snapshot};

pub const MANIFEST_NAME: &str = "manifest.toml";

const KINETIC_HEADER: [&str; 4] = ["x", "rho", "q", "Z"];
const LWR_HEADER: [&str; 3] = ["x", "rho", "flux"];

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    model: String,
    coupling: String,
    rho1: f64,
    rho2: f64,
    rho3: f64,
    epsilon: f64,
    cells: usize,
    t_end: f64,
    cfl: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    snapshot: Vec<ManifestSnapshot>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestSnapshot {
    requested_time: f64,
    time: f64,
    files: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let source = match e.into_kind() {
        csv::ErrorKind::Io(io) => io,
        other => std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{other:?}")),
    };
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path, msg: impl Into<String>) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, msg.into()),
    }
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn file_name(road: usize, index: usize) -> String {
    format!("road{}_t{index:03}.csv", road + 1)
}

fn write_road(path: &Path, road: &RoadSnapshot) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let result = match &road.z {
        Some(z) => {
            w.write_record(KINETIC_HEADER)
                .map_err(|e| csv_err(path, e))?;
            (0..road.x.len()).try_for_each(|i| {
                w.write_record([
                    fmt17(road.x[i]),
                    fmt17(road.rho[i]),
                    fmt17(road.q[i]),
                    fmt17(z[i]),
                ])
            })
        }
        None => {
            w.write_record(LWR_HEADER).map_err(|e| csv_err(path, e))?;
            (0..road.x.len()).try_for_each(|i| {
                w.write_record([fmt17(road.x[i]), fmt17(road.rho[i]), fmt17(road.q[i])])
            })
        }
    };
    result.map_err(|e| csv_err(path, e))?;
    w.flush().map_err(io_err(path))
}

fn coupling_name(c: Coupling) -> (&'static str, Option<f64>) {
    match c {
        Coupling::KineticFair | Coupling::MacroFair => ("fair", None),
        Coupling::KineticPriority => ("priority", Some(0.0)),
        Coupling::KineticPriorityTruncated(d) => ("priority", Some(d)),
        Coupling::MacroPriority => ("priority", None),
    }
}

/// Writes one CSV per road and snapshot plus a manifest echoing the
/// settings. Returns the paths written, manifest last.
pub fn emit_snapshots(record: &RunRecord, output_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(output_dir).map_err(io_err(output_dir))?;
    let cfg = &record.config;
    let mut written = Vec::new();
    let mut entries = Vec::with_capacity(record.snapshots.len());
    for (index, snap) in record.snapshots.iter().enumerate() {
        let mut files = Vec::with_capacity(snap.roads.len());
        for (road, data) in snap.roads.iter().enumerate() {
            let name = file_name(road, index);
            let path = output_dir.join(&name);
            write_road(&path, data)?;
            written.push(path);
            files.push(name);
        }
        entries.push(ManifestSnapshot {
            requested_time: snap.requested_time,
            time: snap.time,
            files,
        });
    }
    let (coupling, delta) = coupling_name(cfg.coupling);
    let manifest = Manifest {
        model: match cfg.model {
            Model::Kinetic => "kinetic",
            Model::Lwr => "lwr",
        }
        .into(),
        coupling: coupling.into(),
        rho1: cfg.initial_densities[0],
        rho2: cfg.initial_densities[1],
        rho3: cfg.initial_densities[2],
        epsilon: cfg.epsilon,
        cells: cfg.cells_per_road,
        t_end: cfg.t_end,
        cfl: cfg.cfl_number,
        delta,
        snapshot: entries,
    };
    let path = output_dir.join(MANIFEST_NAME);
    let text = toml::to_string(&manifest).map_err(|e| invalid(&path, e.to_string()))?;
    fs::write(&path, text).map_err(io_err(&path))?;
    written.push(path);
    Ok(written)
}

fn read_road(path: &Path, kinetic: bool) -> Result<RoadSnapshot> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let expected: &[&str] = if kinetic {
        &KINETIC_HEADER
    } else {
        &LWR_HEADER
    };
    if header.iter().ne(expected.iter().copied()) {
        return Err(invalid(
            path,
            format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        ));
    }
    let mut road = RoadSnapshot {
        x: Vec::new(),
        rho: Vec::new(),
        q: Vec::new(),
        z: kinetic.then(Vec::new),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let values: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(path, format!("row {}: {e}", line + 2)))?;
        road.x.push(values[0]);
        road.rho.push(values[1]);
        road.q.push(values[2]);
        if let Some(z) = road.z.as_mut() {
            z.push(values[3]);
        }
    }
    Ok(road)
}

/// Reads back what [`emit_snapshots`] wrote.
pub fn read_snapshots(dir: &Path) -> Result<RunRecord> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| invalid(&path, e.to_string()))?;
    let model = match m.model.as_str() {
        "kinetic" => Model::Kinetic,
        "lwr" => Model::Lwr,
        other => return Err(invalid(&path, format!("unknown model `{other}`"))),
    };
    let coupling = match (model, m.coupling.as_str(), m.delta) {
        (Model::Kinetic, "fair", _) => Coupling::KineticFair,
        (Model::Kinetic, "priority", d) => Coupling::KineticPriorityTruncated(d.unwrap_or(0.0)),
        (Model::Lwr, "fair", _) => Coupling::MacroFair,
        (Model::Lwr, "priority", _) => Coupling::MacroPriority,
        (_, other, _) => return Err(invalid(&path, format!("unknown coupling `{other}`"))),
    };
    let mut config = SimulationConfig::new(model, coupling, [m.rho1, m.rho2, m.rho3]);
    config.epsilon = m.epsilon;
    config.cells_per_road = m.cells;
    config.t_end = m.t_end;
    config.cfl_number = m.cfl;
    config.snapshot_times = m.snapshot.iter().map(|s| s.requested_time).collect();

    let snapshots = m
        .snapshot
        .iter()
        .map(|s| {
            let roads = s
                .files
                .iter()
                .map(|f| read_road(&dir.join(f), model == Model::Kinetic))
                .collect::<Result<_>>()?;
            Ok(Snapshot {
                requested_time: s.requested_time,
                time: s.time,
                roads,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RunRecord { config, snapshots })
}
