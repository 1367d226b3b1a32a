//! Batch experiment harness: runs single- or multi-source scenarios from a
//! TOML config (or built-in defaults), and preset parameter sweeps. All
//! outputs are written atomically (temp file + rename) together with an echo
//! of the effective configuration, so any result directory can be
//! reproduced exactly by pointing `--config` back at the echo.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use soundseek::config::{load_config, ScenarioConfig, ScenarioKind};
use soundseek::sim::multi::run_multi_source_with;
use soundseek::sim::single::run_single_source_with;
use soundseek::sim::sweep::{
    sweep_convergence_grid, sweep_detection_grid, ConvergenceCell, DetectionCell,
    CONVERGENCE_GRID_DOA_CONCENTRATIONS, CONVERGENCE_GRID_DURATIONS_S,
    CONVERGENCE_GRID_STEP_VARIANCES,
};
use soundseek::sim::{run_seed, RunMetrics, RunOptions, RunSummary};

#[derive(Parser)]
#[command(
    name = "soundseek",
    about = "Deterministic multi-agent acoustic source-seeking experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario for one or more seeded runs.
    Run(RunArgs),
    /// Execute a preset experiment grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario kind; required unless --config is given.
    #[arg(long, value_enum)]
    scenario: Option<ScenarioArg>,
    /// Configuration file (TOML). Flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; run k uses seed XOR k.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeded runs.
    #[arg(long)]
    runs: Option<u32>,
    /// Simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Number of randomly spawned targets (multi scenario).
    #[arg(long)]
    targets: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Emit decimated per-agent trajectory CSVs.
    #[arg(long, value_enum, default_value_t = Switch::Off)]
    emit_trajectories: Switch,
}

#[derive(Args)]
struct SweepArgs {
    /// Preset grid: 1 = convergence times over noise levels (single),
    /// 2 = detection counts over target numbers (multi).
    #[arg(long)]
    table: u8,
    /// Base configuration file; defaults to the scenario defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed for per-cell seed derivation.
    #[arg(long)]
    seed: Option<u64>,
    /// Runs per grid cell.
    #[arg(long, default_value_t = 1)]
    runs: u32,
    /// Override the per-cell simulated duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScenarioArg {
    Single,
    Multi,
}

impl From<ScenarioArg> for ScenarioKind {
    fn from(value: ScenarioArg) -> Self {
        match value {
            ScenarioArg::Single => ScenarioKind::Single,
            ScenarioArg::Multi => ScenarioKind::Multi,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

enum CliError {
    Usage(String),
    Config(String),
    Runtime(String),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Sweep(args) => sweep_command(args),
    };
    match result {
        Ok(()) => {}
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            std::process::exit(1);
        }
        Err(CliError::Config(message)) => {
            eprintln!("config error: {message}");
            std::process::exit(2);
        }
        Err(CliError::Runtime(message)) => {
            eprintln!("runtime error: {message}");
            std::process::exit(3);
        }
    }
}

fn load_base_config(
    config: &Option<PathBuf>,
    scenario: Option<ScenarioKind>,
) -> Result<ScenarioConfig, CliError> {
    let cfg = match config {
        Some(path) => load_config(path).map_err(|e| CliError::Config(e.to_string()))?,
        None => match scenario {
            Some(kind) => ScenarioConfig::defaults_for(kind),
            None => {
                return Err(CliError::Usage(
                    "give --scenario or --config".to_string(),
                ))
            }
        },
    };
    if let Some(kind) = scenario {
        if cfg.scenario != kind {
            return Err(CliError::Usage(format!(
                "--scenario {} conflicts with the {} config file",
                kind, cfg.scenario
            )));
        }
    }
    Ok(cfg)
}

fn run_command(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = load_base_config(&args.config, args.scenario.map(Into::into))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(runs) = args.runs {
        cfg.runs = runs;
    }
    if let Some(duration) = args.duration {
        cfg.duration_s = duration;
    }
    if let Some(targets) = args.targets {
        match &mut cfg.spawn {
            Some(spawn) => spawn.count = targets,
            None => {
                return Err(CliError::Config(
                    "--targets needs a random-spawn configuration (multi scenario)".to_string(),
                ))
            }
        }
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;

    let options = RunOptions {
        emit_trajectories: args.emit_trajectories == Switch::On,
    };
    let mut runs: Vec<RunMetrics> = Vec::new();
    for k in 0..cfg.runs {
        let seed = run_seed(cfg.seed, 0, k);
        let metrics = match cfg.scenario {
            ScenarioKind::Single => run_single_source_with(&cfg, seed, options),
            ScenarioKind::Multi => run_multi_source_with(&cfg, seed, options),
        }
        .map_err(|e| CliError::Runtime(e.to_string()))?;
        runs.push(metrics);
    }

    write_atomic(&args.out.join("effective_config.toml"), cfg.to_toml().as_bytes())?;
    let summaries: Vec<RunSummary> = runs.iter().map(|m| m.summary()).collect();
    let report = RunReport {
        command: "run",
        aggregate: aggregate(&summaries),
        runs: summaries,
    };
    write_json(&args.out.join("metrics.json"), &report)?;

    for (k, metrics) in runs.iter().enumerate() {
        write_atomic(
            &args.out.join(format!("events_run{k}.csv")),
            events_csv(metrics)?.as_bytes(),
        )?;
        match cfg.scenario {
            ScenarioKind::Single => {
                write_atomic(
                    &args.out.join(format!("centroid_distance_run{k}.csv")),
                    centroid_csv(metrics)?.as_bytes(),
                )?;
            }
            ScenarioKind::Multi => {
                write_atomic(
                    &args.out.join(format!("detection_map_run{k}.csv")),
                    detection_map_csv(metrics)?.as_bytes(),
                )?;
            }
        }
        if options.emit_trajectories {
            write_atomic(
                &args.out.join(format!("trajectories_run{k}.csv")),
                trajectories_csv(metrics)?.as_bytes(),
            )?;
        }
    }

    for summary in &report.runs {
        match cfg.scenario {
            ScenarioKind::Single => println!(
                "seed {}: t_s = {}, final centroid distance = {:.4} m",
                summary.seed,
                summary
                    .t_s_s
                    .map(|t| format!("{t:.3} s"))
                    .unwrap_or_else(|| "not reached".to_string()),
                summary.final_centroid_distance_m.unwrap_or(f64::NAN),
            ),
            ScenarioKind::Multi => println!(
                "seed {}: located {} source(s) in {} detection event(s)",
                summary.seed,
                summary.sources_located.unwrap_or(0),
                summary.detection_events,
            ),
        }
    }
    println!("outputs written to {}", args.out.display());
    Ok(())
}

fn sweep_command(args: SweepArgs) -> Result<(), CliError> {
    match args.table {
        1 => sweep_table1(args),
        2 => sweep_table2(args),
        other => Err(CliError::Usage(format!(
            "unknown preset table {other}; use --table 1 or --table 2"
        ))),
    }
}

fn sweep_table1(args: SweepArgs) -> Result<(), CliError> {
    let mut cfg = load_base_config(&args.config, Some(ScenarioKind::Single))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let durations = match args.duration {
        Some(d) => [d; 5],
        None => CONVERGENCE_GRID_DURATIONS_S,
    };
    let cells = sweep_convergence_grid(&cfg, args.runs, cfg.seed, &durations)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    write_atomic(&args.out.join("effective_config.toml"), cfg.to_toml().as_bytes())?;
    write_json(
        &args.out.join("metrics.json"),
        &Table1Report {
            command: "sweep --table 1",
            runs_per_cell: args.runs,
            base_seed: cfg.seed,
            cells: &cells,
        },
    )?;
    write_atomic(&args.out.join("table1.csv"), table1_csv(&cells)?.as_bytes())?;
    write_atomic(
        &args.out.join("table1_runs.csv"),
        table1_runs_csv(&cells, cfg.seed)?.as_bytes(),
    )?;
    println!("{}", table1_text(&cells));
    println!("outputs written to {}", args.out.display());
    Ok(())
}

fn sweep_table2(args: SweepArgs) -> Result<(), CliError> {
    let mut cfg = load_base_config(&args.config, Some(ScenarioKind::Multi))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(duration) = args.duration {
        cfg.duration_s = duration;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let cells = sweep_detection_grid(&cfg, args.runs, cfg.seed)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    write_atomic(&args.out.join("effective_config.toml"), cfg.to_toml().as_bytes())?;
    write_json(
        &args.out.join("metrics.json"),
        &Table2Report {
            command: "sweep --table 2",
            runs_per_cell: args.runs,
            base_seed: cfg.seed,
            cells: &cells,
        },
    )?;
    write_atomic(&args.out.join("table2.csv"), table2_csv(&cells)?.as_bytes())?;
    write_atomic(
        &args.out.join("table2_runs.csv"),
        table2_runs_csv(&cells, cfg.seed)?.as_bytes(),
    )?;
    for cell in &cells {
        println!(
            "{} targets: mean detections {:.2} (baseline {:.1})",
            cell.target_count, cell.mean_detections, cell.baseline_mean
        );
    }
    println!("outputs written to {}", args.out.display());
    Ok(())
}

#[derive(Serialize)]
struct RunReport {
    command: &'static str,
    aggregate: Aggregate,
    runs: Vec<RunSummary>,
}

#[derive(Serialize)]
struct Aggregate {
    mean_t_s_s: Option<f64>,
    mean_sources_located: Option<f64>,
}

fn aggregate(summaries: &[RunSummary]) -> Aggregate {
    let t_s: Vec<f64> = summaries.iter().filter_map(|s| s.t_s_s).collect();
    let located: Vec<usize> = summaries.iter().filter_map(|s| s.sources_located).collect();
    Aggregate {
        mean_t_s_s: (t_s.len() == summaries.len() && !t_s.is_empty())
            .then(|| t_s.iter().sum::<f64>() / t_s.len() as f64),
        mean_sources_located: (!located.is_empty())
            .then(|| located.iter().sum::<usize>() as f64 / located.len() as f64),
    }
}

#[derive(Serialize)]
struct Table1Report<'a> {
    command: &'static str,
    runs_per_cell: u32,
    base_seed: u64,
    cells: &'a [ConvergenceCell],
}

#[derive(Serialize)]
struct Table2Report<'a> {
    command: &'static str,
    runs_per_cell: u32,
    base_seed: u64,
    cells: &'a [DetectionCell],
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::Writer::from_writer(Vec::new())
}

fn finish_csv(writer: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(e.to_string()))
}

fn events_csv(metrics: &RunMetrics) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["time_s", "agent_id", "event", "x_m", "y_m", "payload"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for e in &metrics.events {
        w.write_record(&[
            e.time_s.to_string(),
            e.unit.to_string(),
            e.kind.as_str().to_string(),
            e.position.x.to_string(),
            e.position.y.to_string(),
            e.payload.to_string(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn centroid_csv(metrics: &RunMetrics) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["time_s", "centroid_distance_m"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for (t, d) in &metrics.centroid_distance_series {
        w.write_record(&[t.to_string(), d.to_string()])
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn detection_map_csv(metrics: &RunMetrics) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["kind", "x_m", "y_m", "time_s", "agent_id"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for s in &metrics.true_sources {
        w.write_record(&[
            "source".to_string(),
            s.x.to_string(),
            s.y.to_string(),
            String::new(),
            String::new(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    for d in &metrics.detections {
        w.write_record(&[
            "detection".to_string(),
            d.position.x.to_string(),
            d.position.y.to_string(),
            d.time_s.to_string(),
            d.agent.to_string(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn trajectories_csv(metrics: &RunMetrics) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record([
        "time_s",
        "agent_id",
        "x_m",
        "y_m",
        "mode",
        "mu_s_m",
        "mu_theta_rad",
        "P",
        "K",
    ])
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    for t in &metrics.trajectories {
        let mode = match t.mode {
            soundseek::OperatingMode::Listening => "listening",
            soundseek::OperatingMode::Moving => "moving",
        };
        w.write_record(&[
            t.time_s.to_string(),
            t.agent.to_string(),
            t.position.x.to_string(),
            t.position.y.to_string(),
            mode.to_string(),
            t.step_mean.to_string(),
            t.doa_mean.to_string(),
            t.step_variance.to_string(),
            t.doa_concentration.to_string(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn table1_csv(cells: &[ConvergenceCell]) -> Result<String, CliError> {
    let mut w = csv_writer();
    let mut header = vec!["sigma_d2".to_string()];
    for k in CONVERGENCE_GRID_DOA_CONCENTRATIONS {
        header.push(format!("k_theta_{k}"));
    }
    w.write_record(&header)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let cols = CONVERGENCE_GRID_DOA_CONCENTRATIONS.len();
    for (row, &sigma) in CONVERGENCE_GRID_STEP_VARIANCES.iter().enumerate() {
        let mut record = vec![sigma.to_string()];
        for col in 0..cols {
            let cell = &cells[row * cols + col];
            record.push(
                cell.mean_t_s
                    .map(|t| t.to_string())
                    .unwrap_or_else(|| "unconverged".to_string()),
            );
        }
        w.write_record(&record)
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn table1_runs_csv(cells: &[ConvergenceCell], base_seed: u64) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["sigma_d2", "k_theta", "run", "seed", "t_s_s"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for (cell_index, cell) in cells.iter().enumerate() {
        for (run, t_s) in cell.t_s_runs.iter().enumerate() {
            w.write_record(&[
                cell.step_variance.to_string(),
                cell.doa_concentration.to_string(),
                run.to_string(),
                run_seed(base_seed, cell_index, run as u32).to_string(),
                t_s.map(|t| t.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    finish_csv(w)
}

fn table1_text(cells: &[ConvergenceCell]) -> String {
    let mut out = String::new();
    let cols = CONVERGENCE_GRID_DOA_CONCENTRATIONS.len();
    let _ = writeln!(out, "mean convergence time t_s (s):");
    let mut header = format!("{:>10}", "sigma_d2");
    for k in CONVERGENCE_GRID_DOA_CONCENTRATIONS {
        let _ = write!(header, " k_theta={k:<8}");
    }
    let _ = writeln!(out, "{header}");
    for (row, &sigma) in CONVERGENCE_GRID_STEP_VARIANCES.iter().enumerate() {
        let mut line = format!("{sigma:>10}");
        for col in 0..cols {
            match cells[row * cols + col].mean_t_s {
                Some(t) => {
                    let _ = write!(line, " {t:<16.3}");
                }
                None => {
                    let _ = write!(line, " {:<16}", "unconverged");
                }
            }
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

fn table2_csv(cells: &[DetectionCell]) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["targets", "mean_detections", "baseline_mean_detections"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for cell in cells {
        w.write_record(&[
            cell.target_count.to_string(),
            cell.mean_detections.to_string(),
            cell.baseline_mean.to_string(),
        ])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    finish_csv(w)
}

fn table2_runs_csv(cells: &[DetectionCell], base_seed: u64) -> Result<String, CliError> {
    let mut w = csv_writer();
    w.write_record(["targets", "run", "seed", "sources_located"])
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    for (cell_index, cell) in cells.iter().enumerate() {
        for (run, located) in cell.detections_runs.iter().enumerate() {
            w.write_record(&[
                cell.target_count.to_string(),
                run.to_string(),
                run_seed(base_seed, cell_index, run as u32).to_string(),
                located.to_string(),
            ])
            .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
    }
    finish_csv(w)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Write via a temp file in the same directory, then rename into place, so a
/// crash never leaves a half-written output.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let parent = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(parent)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", parent.display())))?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, contents)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Runtime(format!("renaming into {}: {e}", path.display())))?;
    Ok(())
}
