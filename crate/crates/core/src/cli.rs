//! Operator surface: load a scene, render coverage heatmaps, run a control
//! policy, and compare two finished runs.
//!
//! Exit codes: 0 success, 2 parse/validation errors, 3 I/O failures,
//! 4 mismatched runs in `compare`. Every error path prints a single line
//! starting with `ERROR <code>:` to stderr.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::metrics::{build_report, compare_policies, MeanDomain};
use crate::policy::{
    context_selection, run_simulation, Policy, SelectionMode, SimulationTrace, SlotRecord,
    TimelineConfig,
};
use crate::propagation::{coverage_grid, PropagationParams, Summation};
use crate::scene::{load_scene, scene_to_string, Scene};

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        // The error contract is one machine-parsable line; multi-line
        // sources (like TOML span diagnostics) get collapsed.
        let message = message
            .into()
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join("; ");
        CliError { code, message }
    }

    fn io(context: &str, err: std::io::Error) -> Self {
        CliError::new(3, format!("IoError: {context}: {err}"))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ERROR {}: {}", self.code, self.message)
    }
}

#[derive(Parser)]
#[command(
    name = "ris-sim",
    version,
    about = "Deterministic 2D RIS propagation simulator",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a coverage grid for one RIS angle as CSV and PGM.
    Heatmap {
        /// Scene file.
        scene: PathBuf,
        /// RIS angle in degrees; must be in the scene's allowed set.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        angle: f64,
        /// Grid spacing in meters.
        #[arg(long, default_value_t = 0.1)]
        spacing: f64,
        /// Output path prefix; writes <out>.csv and <out>.pgm.
        #[arg(long, default_value = "heatmap")]
        out: PathBuf,
        #[command(flatten)]
        prop: PropArgs,
    },
    /// Run a control policy over the timeline and write trace + metrics.
    Run {
        /// Scene file.
        scene: PathBuf,
        /// Policy spec: static:<angle> | periodic | context:all-best |
        /// context:minimal-cover.
        #[arg(long)]
        policy: String,
        /// Output directory; writes trace.csv, metrics.csv, summary.txt,
        /// meta.toml.
        #[arg(long, default_value = "run-out")]
        out: PathBuf,
        /// Total number of slots.
        #[arg(long, default_value_t = 96)]
        slots: usize,
        /// Slots the panel dwells per angle outside the probe phase.
        #[arg(long, default_value_t = 2)]
        dwell: usize,
        /// Slots per angle during the probe sweep.
        #[arg(long, default_value_t = 1)]
        probe_dwell: usize,
        /// Averaging domain for the mean statistic: db | linear.
        #[arg(long, default_value = "db")]
        mean_domain: String,
        #[command(flatten)]
        prop: PropArgs,
    },
    /// Compare two finished runs (same scene, same receivers).
    Compare {
        /// Directory written by `run` (the left side of a - b).
        run_a: PathBuf,
        /// Directory written by `run` (the right side).
        run_b: PathBuf,
        /// Output path prefix; writes <out>.csv and <out>.txt.
        #[arg(long, default_value = "compare")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct PropArgs {
    /// Maximum reflection order (0..=4).
    #[arg(long, default_value_t = 3)]
    max_order: usize,
    /// Loss per bounce in dB.
    #[arg(long, default_value_t = 3.0)]
    reflection_loss: f64,
    /// Multipath combining: power-sum | strongest.
    #[arg(long, default_value = "power-sum")]
    summation: String,
    /// Reported power when no path exists, dBm.
    #[arg(long, default_value_t = -200.0, allow_negative_numbers = true)]
    noise_floor: f64,
}

impl PropArgs {
    fn to_params(&self) -> Result<PropagationParams, CliError> {
        let summation = match self.summation.as_str() {
            "power-sum" => Summation::PowerSum,
            "strongest" => Summation::StrongestPath,
            other => {
                return Err(CliError::new(
                    2,
                    format!("ParseError: summation: unknown mode {other:?}"),
                ))
            }
        };
        let params = PropagationParams {
            max_order: self.max_order,
            reflection_loss_db: self.reflection_loss,
            summation,
            noise_floor_dbm: self.noise_floor,
        };
        params.validate().map_err(|e| CliError::new(2, e.to_string()))?;
        Ok(params)
    }
}

/// Parses the policy mini-grammar.
pub fn parse_policy(spec: &str) -> Result<Policy, String> {
    match spec {
        "periodic" => Ok(Policy::Periodic),
        "context:all-best" => Ok(Policy::ContextAware(SelectionMode::AllBest)),
        "context:minimal-cover" => Ok(Policy::ContextAware(SelectionMode::MinimalCover)),
        _ => {
            if let Some(angle) = spec.strip_prefix("static:") {
                let angle: f64 = angle.parse().map_err(|_| {
                    format!("policy: invalid static angle {angle:?}")
                })?;
                Ok(Policy::Static(angle))
            } else {
                Err(format!(
                    "policy: unknown spec {spec:?}; expected static:<angle>, periodic, \
                     context:all-best or context:minimal-cover"
                ))
            }
        }
    }
}

fn load_scene_file(path: &Path) -> Result<Scene, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    load_scene(&text).map_err(|e| CliError::new(2, e.to_string()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
}

fn policy_label(policy: &Policy) -> String {
    match policy {
        Policy::Static(a) => format!("static:{a}"),
        Policy::Periodic => "periodic".to_string(),
        Policy::ContextAware(SelectionMode::AllBest) => "context:all-best".to_string(),
        Policy::ContextAware(SelectionMode::MinimalCover) => "context:minimal-cover".to_string(),
    }
}

// ---------------------------------------------------------------------------
// Run metadata (meta.toml)
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RunMeta {
    policy: String,
    total_slots: usize,
    dwell_slots: usize,
    probe_dwell: usize,
    max_order: usize,
    reflection_loss_db: f64,
    summation: String,
    noise_floor_dbm: f64,
    mean_domain: String,
    receivers: Vec<String>,
    /// Canonical serialization of the scene the run used.
    scene: String,
}

fn parse_trace_csv(text: &str) -> Result<SimulationTrace, CliError> {
    let bad = |msg: &str| CliError::new(2, format!("ParseError: trace.csv: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 3 || cols[0] != "slot" || cols[1] != "angle_deg" {
        return Err(bad("unexpected header"));
    }
    let receivers: Vec<String> = cols[2..].iter().map(|s| s.to_string()).collect();
    let mut slots = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad("ragged row"));
        }
        let slot = fields[0].parse().map_err(|_| bad("bad slot index"))?;
        let angle_deg = fields[1].parse().map_err(|_| bad("bad angle"))?;
        let powers_dbm = fields[2..]
            .iter()
            .map(|f| f.parse())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| bad("bad power value"))?;
        slots.push(SlotRecord { slot, angle_deg, powers_dbm });
    }
    Ok(SimulationTrace { receivers, slots })
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_heatmap(
    scene_path: &Path,
    angle: f64,
    spacing: f64,
    out: &Path,
    prop: &PropArgs,
) -> Result<(), CliError> {
    let scene = load_scene_file(scene_path)?;
    let params = prop.to_params()?;
    let applied = scene.apply_ris_angle(angle).map_err(|e| CliError::new(2, e.to_string()))?;
    let grid = coverage_grid(&applied, spacing, &params)
        .map_err(|e| CliError::new(2, e.to_string()))?;

    let csv_path = out.with_extension("csv");
    let pgm_path = out.with_extension("pgm");
    write_file(&csv_path, grid.to_csv().as_bytes())?;
    write_file(&pgm_path, &grid.to_pgm(params.noise_floor_dbm, scene.tx.power_dbm))?;

    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &grid.values_dbm {
        min = min.min(v);
        max = max.max(v);
    }
    println!("grid {}x{} cells at {} m spacing", grid.cols, grid.rows, spacing);
    println!("min {min:.2} dBm");
    println!("max {max:.2} dBm");
    println!("wrote {} and {}", csv_path.display(), pgm_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    scene_path: &Path,
    policy_spec: &str,
    out: &Path,
    slots: usize,
    dwell: usize,
    probe_dwell: usize,
    mean_domain: &str,
    prop: &PropArgs,
) -> Result<(), CliError> {
    let scene = load_scene_file(scene_path)?;
    let params = prop.to_params()?;
    let policy =
        parse_policy(policy_spec).map_err(|m| CliError::new(2, format!("ParseError: {m}")))?;
    let mean_domain = match mean_domain {
        "db" => MeanDomain::Db,
        "linear" => MeanDomain::Linear,
        other => {
            return Err(CliError::new(2, format!("ParseError: mean_domain: unknown {other:?}")))
        }
    };
    let timeline = TimelineConfig { total_slots: slots, dwell_slots: dwell, probe_dwell };

    let trace = run_simulation(&scene, &policy, &timeline, &params)
        .map_err(|e| CliError::new(2, e.to_string()))?;
    let report = build_report(&trace, &scene.receivers, mean_domain)
        .map_err(|e| CliError::new(2, e.to_string()))?;

    let mut summary = String::new();
    summary.push_str(&format!("policy: {}\n", policy_label(&policy)));
    summary.push_str(&format!(
        "timeline: {} slots, dwell {}, probe dwell {}\n",
        timeline.total_slots, timeline.dwell_slots, timeline.probe_dwell
    ));
    summary.push_str(&format!(
        "propagation: max order {}, reflection loss {} dB, {}, noise floor {} dBm\n",
        params.max_order,
        params.reflection_loss_db,
        match params.summation {
            Summation::PowerSum => "power-sum",
            Summation::StrongestPath => "strongest",
        },
        params.noise_floor_dbm
    ));
    if let Policy::ContextAware(mode) = policy {
        let selection = context_selection(&scene, mode, &params)
            .map_err(|e| CliError::new(2, e.to_string()))?;
        let angles: Vec<String> = selection.angles_deg.iter().map(|a| a.to_string()).collect();
        summary.push_str(&format!(
            "selected angles: [{}]{}\n",
            angles.join(", "),
            if selection.feasible { "" } else { " (infeasible, per-receiver best fallback)" }
        ));
    }
    summary.push('\n');
    summary.push_str(&report.to_table());

    fs::create_dir_all(out).map_err(|e| CliError::io(&format!("creating {}", out.display()), e))?;
    write_file(&out.join("trace.csv"), trace.to_csv().as_bytes())?;
    write_file(&out.join("metrics.csv"), report.to_csv().as_bytes())?;
    write_file(&out.join("summary.txt"), summary.as_bytes())?;

    let meta = RunMeta {
        policy: policy_label(&policy),
        total_slots: timeline.total_slots,
        dwell_slots: timeline.dwell_slots,
        probe_dwell: timeline.probe_dwell,
        max_order: params.max_order,
        reflection_loss_db: params.reflection_loss_db,
        summation: prop.summation.clone(),
        noise_floor_dbm: params.noise_floor_dbm,
        mean_domain: match mean_domain {
            MeanDomain::Db => "db".to_string(),
            MeanDomain::Linear => "linear".to_string(),
        },
        receivers: scene.receiver_names(),
        scene: scene_to_string(&scene),
    };
    let meta_text =
        toml::to_string(&meta).map_err(|e| CliError::new(3, format!("IoError: meta: {e}")))?;
    write_file(&out.join("meta.toml"), meta_text.as_bytes())?;

    print!("{summary}");
    println!("wrote {}", out.display());
    Ok(())
}

fn load_run_dir(dir: &Path) -> Result<(RunMeta, SimulationTrace), CliError> {
    let meta_text = fs::read_to_string(dir.join("meta.toml"))
        .map_err(|e| CliError::io(&format!("reading {}", dir.join("meta.toml").display()), e))?;
    let meta: RunMeta = toml::from_str(&meta_text)
        .map_err(|e| CliError::new(2, format!("ParseError: meta.toml: {e}")))?;
    let trace_text = fs::read_to_string(dir.join("trace.csv"))
        .map_err(|e| CliError::io(&format!("reading {}", dir.join("trace.csv").display()), e))?;
    let trace = parse_trace_csv(&trace_text)?;
    Ok((meta, trace))
}

fn cmd_compare(run_a: &Path, run_b: &Path, out: &Path) -> Result<(), CliError> {
    let (meta_a, trace_a) = load_run_dir(run_a)?;
    let (meta_b, trace_b) = load_run_dir(run_b)?;

    if meta_a.receivers != meta_b.receivers {
        return Err(CliError::new(
            4,
            format!(
                "ReceiverSetMismatch: {:?} vs {:?}",
                meta_a.receivers, meta_b.receivers
            ),
        ));
    }
    if meta_a.scene != meta_b.scene {
        return Err(CliError::new(4, "SceneMismatch: runs used different scenes".to_string()));
    }

    let scene = load_scene(&meta_a.scene)
        .map_err(|e| CliError::new(2, format!("meta.toml scene: {e}")))?;
    let mean_domain = match meta_a.mean_domain.as_str() {
        "linear" => MeanDomain::Linear,
        _ => MeanDomain::Db,
    };
    let report_a = build_report(&trace_a, &scene.receivers, mean_domain)
        .map_err(|e| CliError::new(4, e.to_string()))?;
    let report_b = build_report(&trace_b, &scene.receivers, mean_domain)
        .map_err(|e| CliError::new(4, e.to_string()))?;
    let delta =
        compare_policies(&report_a, &report_b).map_err(|e| CliError::new(4, e.to_string()))?;

    let mut text = format!(
        "comparing {} ({}) minus {} ({})\n\n",
        run_a.display(),
        meta_a.policy,
        run_b.display(),
        meta_b.policy
    );
    text.push_str(&delta.to_table());

    write_file(&out.with_extension("csv"), delta.to_csv().as_bytes())?;
    write_file(&out.with_extension("txt"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

/// Parses arguments and executes one command, returning the process exit
/// code. Errors are printed to stderr as a single `ERROR <code>:` line.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return 0;
            }
            let reason = err.to_string();
            let line = reason.lines().next().unwrap_or("invalid arguments");
            eprintln!("ERROR 2: ParseError: {line}");
            return 2;
        }
    };

    let result = match &cli.command {
        Command::Heatmap { scene, angle, spacing, out, prop } => {
            cmd_heatmap(scene, *angle, *spacing, out, prop)
        }
        Command::Run { scene, policy, out, slots, dwell, probe_dwell, mean_domain, prop } => {
            cmd_run(scene, policy, out, *slots, *dwell, *probe_dwell, mean_domain, prop)
        }
        Command::Compare { run_a, run_b, out } => cmd_compare(run_a, run_b, out),
    };

    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("{err}");
            err.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_grammar_round_trips() {
        assert_eq!(parse_policy("static:0").unwrap(), Policy::Static(0.0));
        assert_eq!(parse_policy("static:-20").unwrap(), Policy::Static(-20.0));
        assert_eq!(parse_policy("periodic").unwrap(), Policy::Periodic);
        assert_eq!(
            parse_policy("context:all-best").unwrap(),
            Policy::ContextAware(SelectionMode::AllBest)
        );
        assert_eq!(
            parse_policy("context:minimal-cover").unwrap(),
            Policy::ContextAware(SelectionMode::MinimalCover)
        );
        assert!(parse_policy("context:fastest").is_err());
        assert!(parse_policy("static:abc").is_err());
    }

    #[test]
    fn trace_csv_round_trips() {
        let trace = SimulationTrace {
            receivers: vec!["A".into(), "B".into()],
            slots: vec![
                SlotRecord { slot: 0, angle_deg: -20.0, powers_dbm: vec![-80.25, -90.5] },
                SlotRecord { slot: 1, angle_deg: 5.0, powers_dbm: vec![-70.0, -60.75] },
            ],
        };
        let parsed = parse_trace_csv(&trace.to_csv()).unwrap();
        assert_eq!(parsed, trace);
    }
}
