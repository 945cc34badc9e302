use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mergeflow::network::{run, Model, RunReport, SimulationConfig};
use mergeflow::scenario::{
    compare_runs, emit_snapshots, find_preset, junction_trace, parse_document, read_snapshots,
    ComparisonReport, ConfigDocument, Entry, ExpectedMarker, RunRecord, PRESETS,
};

#[derive(Parser)]
#[command(
    name = "mergeflow",
    version,
    about = "Kinetic and LWR traffic on a 2-to-1 merge junction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file and/or flags.
    Run {
        /// Flat TOML file; flags override its values.
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[command(flatten)]
        scenario: ScenarioArgs,
    },
    /// Compare two output directories written by `run`.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// Check the expected markers of this preset.
        #[arg(long)]
        preset: Option<String>,
    },
    /// Built-in reference scenarios.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// List the presets and their markers.
    List,
    /// Run a preset with both models, compare them and check its markers.
    Run {
        name: String,
        #[command(flatten)]
        settings: RunSettings,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    preset: Option<String>,
    /// `kinetic` or `lwr`.
    #[arg(long)]
    model: Option<String>,
    /// `fair` or `priority`.
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long)]
    rho1: Option<f64>,
    #[arg(long)]
    rho2: Option<f64>,
    #[arg(long)]
    rho3: Option<f64>,
    #[command(flatten)]
    settings: RunSettings,
}

#[derive(Args)]
struct RunSettings {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    cells: Option<i64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Truncation of the kinetic priority coupling.
    #[arg(long)]
    delta: Option<f64>,
    /// Comma-separated output times.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<f64>>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

fn set<T>(slot: &mut Option<Entry<T>>, value: Option<T>) {
    if let Some(v) = value {
        *slot = Some(Entry::flag(v));
    }
}

impl RunSettings {
    fn apply(self, doc: &mut ConfigDocument) {
        set(&mut doc.epsilon, self.epsilon);
        set(&mut doc.cells, self.cells);
        set(&mut doc.t_end, self.t_end);
        set(&mut doc.cfl, self.cfl);
        set(&mut doc.delta, self.delta);
        set(&mut doc.snapshots, self.snapshots);
        set(
            &mut doc.output_dir,
            self.output_dir.map(|p| p.to_string_lossy().into_owned()),
        );
    }
}

impl ScenarioArgs {
    fn apply(self, doc: &mut ConfigDocument) {
        set(&mut doc.preset, self.preset);
        set(&mut doc.model, self.model);
        set(&mut doc.coupling, self.coupling);
        for (slot, v) in doc.rho.iter_mut().zip([self.rho1, self.rho2, self.rho3]) {
            set(slot, v);
        }
        self.settings.apply(doc);
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Kinetic => "kinetic",
        Model::Lwr => "lwr",
    }
}

fn print_run(config: &SimulationConfig, report: &RunReport) {
    println!(
        "{} run, coupling {:?}, {} cells per road, {} steps to t = {}",
        model_name(config.model),
        config.coupling,
        config.cells_per_road,
        report.final_state.steps,
        report.final_state.time
    );
    println!(
        "  mass {:.12} -> {:.12}, relative conservation error {:.2e}, max junction imbalance {:.2e}",
        report.initial_mass,
        report.final_mass,
        report.relative_mass_error(),
        report.max_junction_imbalance
    );
    if let Some(last) = report.snapshots.last() {
        let traces: Vec<String> = last
            .roads
            .iter()
            .enumerate()
            .map(|(k, r)| format!("road {} {:.6}", k + 1, junction_trace(k, r)))
            .collect();
        println!(
            "  junction traces at t = {}: {}",
            last.time,
            traces.join(", ")
        );
    }
}

fn execute(config: &SimulationConfig, output_dir: Option<&Path>) -> Result<RunRecord> {
    let report = run(config).with_context(|| format!("{} run failed", model_name(config.model)))?;
    print_run(config, &report);
    let record = RunRecord::new(config, &report);
    if let Some(dir) = output_dir {
        let files = emit_snapshots(&record, dir)?;
        println!("  wrote {} files to {}", files.len(), dir.display());
    }
    Ok(record)
}

fn print_comparison(report: &ComparisonReport) {
    if let Some(last) = report.snapshots.last() {
        println!("comparison at t = {}", last.time);
        for r in &last.roads {
            let offset = r
                .shock_offset()
                .map_or("-".to_string(), |o| format!("{o:+.4}"));
            println!(
                "  road {}: L1 {:.3e}  Linf {:.3e}  traces {:.6} / {:.6}  shock offset {}",
                r.road, r.l1, r.linf, r.trace_a, r.trace_b, offset
            );
        }
    }
    for m in &report.markers {
        let source = m.marker.model.map_or("pair", model_name);
        let observed = m.observed.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        println!(
            "  {} {} ({}): observed {} expected {} +/- {:e}",
            if m.passed { "PASS" } else { "FAIL" },
            m.marker.quantity,
            source,
            observed,
            m.marker.value,
            m.marker.tolerance
        );
    }
}

fn verdict(report: &ComparisonReport) -> ExitCode {
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        let failed = report.markers.iter().filter(|m| !m.passed).count();
        eprintln!("{failed} expected marker(s) failed");
        ExitCode::FAILURE
    }
}

fn cmd_run(config: Option<PathBuf>, scenario: ScenarioArgs) -> Result<ExitCode> {
    let mut doc = match &config {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_document(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => ConfigDocument::default(),
    };
    scenario.apply(&mut doc);
    let resolved = doc.resolve()?;
    execute(&resolved.simulation, resolved.output_dir.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compare(a: &Path, b: &Path, preset: Option<&str>) -> Result<ExitCode> {
    let markers: &[ExpectedMarker] = match preset {
        Some(name) => {
            find_preset(name)
                .with_context(|| format!("unknown preset `{name}`"))?
                .expected_markers
        }
        None => &[],
    };
    let ra = read_snapshots(a)?;
    let rb = read_snapshots(b)?;
    let report = compare_runs(&ra, &rb, markers)?;
    print_comparison(&report);
    Ok(verdict(&report))
}

fn cmd_preset_list() {
    for p in PRESETS {
        let [r1, r2, r3] = p.initial_densities;
        let coupling = if p.priority { "priority" } else { "fair" };
        println!(
            "{:<18} {coupling:<8} rho = ({r1}, {r2}, {r3})  {}",
            p.name, p.description
        );
        for m in p.expected_markers {
            let source = m.model.map_or("pair", model_name);
            println!(
                "    {} ({source}) = {} +/- {:e}",
                m.quantity, m.value, m.tolerance
            );
        }
    }
}

fn cmd_preset_run(name: &str, settings: RunSettings) -> Result<ExitCode> {
    let preset = find_preset(name).with_context(|| format!("unknown preset `{name}`"))?;
    let mut doc = ConfigDocument {
        preset: Some(Entry::flag(name.to_string())),
        ..Default::default()
    };
    settings.apply(&mut doc);
    let mut resolved = Vec::new();
    for model in [Model::Kinetic, Model::Lwr] {
        doc.model = Some(Entry::flag(model_name(model).to_string()));
        resolved.push(doc.resolve()?);
    }
    let reports = std::thread::scope(|s| {
        let handles: Vec<_> = resolved
            .iter()
            .map(|c| s.spawn(move || run(&c.simulation).map(|r| (c, r))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect::<Vec<_>>()
    });
    let mut records = Vec::new();
    for result in reports {
        let (c, report) = result?;
        print_run(&c.simulation, &report);
        let record = RunRecord::new(&c.simulation, &report);
        if let Some(dir) = &c.output_dir {
            let dir = dir.join(model_name(c.simulation.model));
            let files = emit_snapshots(&record, &dir)?;
            println!("  wrote {} files to {}", files.len(), dir.display());
        }
        records.push(record);
    }
    let [kinetic, lwr] = &records[..] else {
        bail!("expected one run per model");
    };
    let report = compare_runs(kinetic, lwr, preset.expected_markers)?;
    print_comparison(&report);
    Ok(verdict(&report))
}

fn main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, scenario } => cmd_run(config, scenario),
        Command::Compare { a, b, preset } => cmd_compare(&a, &b, preset.as_deref()),
        Command::Preset { action } => match action {
            PresetAction::List => {
                cmd_preset_list();
                Ok(ExitCode::SUCCESS)
            }
            PresetAction::Run { name, settings } => cmd_preset_run(&name, settings),
        },
    }
}
