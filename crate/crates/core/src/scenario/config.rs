use std::path::PathBuf;

use serde::Deserialize;
use toml::Spanned;

use super::presets::find_preset;
use crate::diagram::FundamentalDiagram;
use crate::error::{Error, Result};
use crate::network::{Coupling, Model, SimulationConfig};

pub const DEFAULT_DELTA: f64 = 0.5;

/// A value together with the line it came from; `None` for values set on
/// the command line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry<T> {
    pub value: T,
    pub line: Option<usize>,
}

impl<T> Entry<T> {
    pub fn flag(value: T) -> Self {
        Self { value, line: None }
    }

    fn fail(&self, msg: impl std::fmt::Display) -> Error {
        match self.line {
            Some(line) => Error::Config(format!("line {line}: {msg}")),
            None => Error::Config(format!("command line: {msg}")),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    preset: Option<Spanned<String>>,
    model: Option<Spanned<String>>,
    coupling: Option<Spanned<String>>,
    rho1: Option<Spanned<f64>>,
    rho2: Option<Spanned<f64>>,
    rho3: Option<Spanned<f64>>,
    epsilon: Option<Spanned<f64>>,
    cells: Option<Spanned<i64>>,
    t_end: Option<Spanned<f64>>,
    cfl: Option<Spanned<f64>>,
    delta: Option<Spanned<f64>>,
    snapshots: Option<Spanned<Vec<f64>>>,
    output_dir: Option<Spanned<String>>,
}

/// Unresolved scenario settings. Command-line flags are merged in by
/// overwriting fields before [`ConfigDocument::resolve`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigDocument {
    pub preset: Option<Entry<String>>,
    pub model: Option<Entry<String>>,
    pub coupling: Option<Entry<String>>,
    pub rho: [Option<Entry<f64>>; 3],
    pub epsilon: Option<Entry<f64>>,
    pub cells: Option<Entry<i64>>,
    pub t_end: Option<Entry<f64>>,
    pub cfl: Option<Entry<f64>>,
    pub delta: Option<Entry<f64>>,
    pub snapshots: Option<Entry<Vec<f64>>>,
    pub output_dir: Option<Entry<String>>,
}

/// A resolved scenario: the simulation settings and where to write them.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub simulation: SimulationConfig,
    pub output_dir: Option<PathBuf>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Reads a flat TOML document without resolving it.
pub fn parse_document(text: &str) -> Result<ConfigDocument> {
    let raw: RawDocument =
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
    fn entry<T>(text: &str, s: Option<Spanned<T>>) -> Option<Entry<T>> {
        s.map(|s| {
            let line = Some(line_of(text, s.span().start));
            Entry {
                value: s.into_inner(),
                line,
            }
        })
    }
    Ok(ConfigDocument {
        preset: entry(text, raw.preset),
        model: entry(text, raw.model),
        coupling: entry(text, raw.coupling),
        rho: [
            entry(text, raw.rho1),
            entry(text, raw.rho2),
            entry(text, raw.rho3),
        ],
        epsilon: entry(text, raw.epsilon),
        cells: entry(text, raw.cells),
        t_end: entry(text, raw.t_end),
        cfl: entry(text, raw.cfl),
        delta: entry(text, raw.delta),
        snapshots: entry(text, raw.snapshots),
        output_dir: entry(text, raw.output_dir),
    })
}

/// Parses and validates a scenario document.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    parse_document(text)?.resolve()
}

fn check(entry: &Entry<f64>, name: &str, ok: bool, range: &str) -> Result<f64> {
    if ok && entry.value.is_finite() {
        Ok(entry.value)
    } else {
        Err(entry.fail(format!("{name} must be {range}, got {}", entry.value)))
    }
}

impl ConfigDocument {
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let preset = match &self.preset {
            Some(p) => Some(
                find_preset(&p.value)
                    .ok_or_else(|| p.fail(format!("unknown preset `{}`", p.value)))?,
            ),
            None => None,
        };

        let model = match &self.model {
            None => Model::Kinetic,
            Some(e) => match e.value.as_str() {
                "kinetic" => Model::Kinetic,
                "lwr" => Model::Lwr,
                other => {
                    return Err(e.fail(format!("model must be `kinetic` or `lwr`, got `{other}`")))
                }
            },
        };

        let delta = match &self.delta {
            None => DEFAULT_DELTA,
            Some(e) => {
                let bar = FundamentalDiagram::lwr().delta_bar();
                check(
                    e,
                    "delta",
                    (0.0..=bar).contains(&e.value),
                    &format!("in [0, {bar}]"),
                )?
            }
        };

        let priority = match (&self.coupling, preset) {
            (Some(e), _) => match e.value.as_str() {
                "fair" => false,
                "priority" => true,
                other => {
                    return Err(e.fail(format!(
                        "coupling must be `fair` or `priority`, got `{other}`"
                    )))
                }
            },
            (None, Some(p)) => p.priority,
            (None, None) => false,
        };
        let coupling = match (model, priority) {
            (Model::Kinetic, false) => Coupling::KineticFair,
            (Model::Kinetic, true) => Coupling::KineticPriorityTruncated(delta),
            (Model::Lwr, false) => Coupling::MacroFair,
            (Model::Lwr, true) => Coupling::MacroPriority,
        };

        let mut initial_densities = [0.0; 3];
        for (k, slot) in self.rho.iter().enumerate() {
            initial_densities[k] = match (slot, preset) {
                (Some(e), _) => check(
                    e,
                    &format!("rho{}", k + 1),
                    (0.0..=1.0).contains(&e.value),
                    "in [0, 1]",
                )?,
                (None, Some(p)) => p.initial_densities[k],
                (None, None) => return Err(Error::Config(format!("missing key `rho{}`", k + 1))),
            };
        }

        let mut simulation = SimulationConfig::new(model, coupling, initial_densities);
        if let Some(e) = &self.epsilon {
            simulation.epsilon = check(e, "epsilon", e.value > 0.0, "positive")?;
        }
        if let Some(e) = &self.cells {
            if e.value < 1 {
                return Err(e.fail(format!("cells must be at least 1, got {}", e.value)));
            }
            simulation.cells_per_road = e.value as usize;
        }
        if let Some(e) = &self.t_end {
            simulation.t_end = check(e, "t_end", e.value >= 0.0, "non-negative")?;
        }
        if let Some(e) = &self.cfl {
            simulation.cfl_number = check(e, "cfl", e.value > 0.0 && e.value < 1.0, "in (0, 1)")?;
        }
        if let Some(e) = &self.snapshots {
            if let Some(t) = e.value.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
                return Err(e.fail(format!("snapshot times must be non-negative, got {t}")));
            }
            simulation.snapshot_times = e.value.clone();
        }
        simulation.validate()?;

        Ok(ScenarioConfig {
            simulation,
            output_dir: self.output_dir.as_ref().map(|e| PathBuf::from(&e.value)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err(text: &str) -> String {
        match parse_config(text) {
            Err(Error::Config(msg)) => msg,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config("model = \"kinetic\"\nrho1 = 0.1\nrho2 = 0.15\nrho3 = 0.2\n").unwrap();
        let s = &c.simulation;
        assert_eq!(s.model, Model::Kinetic);
        assert_eq!(s.coupling, Coupling::KineticFair);
        assert_eq!(
            (s.cells_per_road, s.epsilon, s.t_end, s.cfl_number),
            (1000, 0.001, 1.0, 0.45)
        );
        assert_eq!(s.initial_densities, [0.1, 0.15, 0.2]);
        assert!(s.snapshot_times.is_empty() && c.output_dir.is_none());
    }

    #[test]
    fn priority_uses_delta() {
        let c =
            parse_config("coupling = \"priority\"\nrho1 = 0.6\nrho2 = 0.7\nrho3 = 0.2\n").unwrap();
        assert_eq!(
            c.simulation.coupling,
            Coupling::KineticPriorityTruncated(0.5)
        );
        let c = parse_config(
            "model = \"lwr\"\ncoupling = \"priority\"\ndelta = 0.1\nrho1 = 0\nrho2 = 0\nrho3 = 0\n",
        )
        .unwrap();
        assert_eq!(c.simulation.coupling, Coupling::MacroPriority);
    }

    #[test]
    fn preset_fills_densities() {
        let c = parse_config("preset = \"merge_fair_1\"\n").unwrap();
        assert_eq!(c.simulation.initial_densities, [0.1, 0.15, 0.2]);
        assert_eq!(c.simulation.coupling, Coupling::KineticFair);
        let c =
            parse_config("preset = \"merge_priority_1\"\nmodel = \"lwr\"\nrho3 = 0.3\n").unwrap();
        assert_eq!(c.simulation.initial_densities, [0.6, 0.7, 0.3]);
        assert_eq!(c.simulation.coupling, Coupling::MacroPriority);
    }

    #[test]
    fn bad_values_report_their_line() {
        let msg = err("rho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\nepsilon = 0\n");
        assert!(
            msg.starts_with("line 4:") && msg.contains("epsilon"),
            "{msg}"
        );
        let msg = err("rho1 = 1.5\nrho2 = 0.1\nrho3 = 0.1\n");
        assert!(msg.starts_with("line 1:"), "{msg}");
        let msg = err("rho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\n\ncells = 0\n");
        assert!(msg.starts_with("line 5:"), "{msg}");
        let msg = err("model = \"car\"\nrho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\n");
        assert!(msg.contains("line 1") && msg.contains("car"), "{msg}");
        let msg = err("rho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\ncfl = 1.0\n");
        assert!(msg.starts_with("line 4:"), "{msg}");
    }

    #[test]
    fn unknown_keys_and_syntax_errors_are_rejected() {
        let msg = err("rho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\nspeed = 3\n");
        assert!(msg.contains("speed") && msg.contains("line 4"), "{msg}");
        let msg = err("rho1 = 0.1\nrho2 = \n");
        assert!(msg.contains("line 2"), "{msg}");
        let msg = err("rho1 = 0.1\nrho3 = 0.1\n");
        assert!(msg.contains("rho2"), "{msg}");
    }

    #[test]
    fn flags_override_file_values() {
        let mut doc = parse_document("rho1 = 0.1\nrho2 = 0.1\nrho3 = 0.1\ncells = 50\n").unwrap();
        doc.cells = Some(Entry::flag(20));
        doc.rho[1] = Some(Entry::flag(0.4));
        let c = doc.resolve().unwrap();
        assert_eq!(c.simulation.cells_per_road, 20);
        assert_eq!(c.simulation.initial_densities, [0.1, 0.4, 0.1]);
        doc.t_end = Some(Entry::flag(-1.0));
        let Err(Error::Config(msg)) = doc.resolve() else {
            panic!()
        };
        assert!(msg.starts_with("command line:"), "{msg}");
    }
}
