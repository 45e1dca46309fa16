//! Command-line front end for the `vsl` binary.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or
//! arguments, 3 a runtime invariant was violated.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    classify_stability, closed_loop_equilibria, open_loop_equilibria, optimal_speed_limit,
    Equilibrium, OptimalSpeedLimit, Stability,
};
use crate::engine::{self, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flow::LaneDrop;
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "vsl",
    version,
    about = "Lane-drop bottleneck simulation with variable speed limit control"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trace, summary and plots.
    Simulate(SimulateArgs),
    /// Print equilibria and their stability for the reference model.
    Equilibria(EquilibriaArgs),
    /// Sweep the target-density error or the capacity-drop magnitude.
    Sweep(SweepArgs),
    /// Travel-time reduction of a controlled scenario against a baseline.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    pub plot: bool,
    /// Override the late-window fraction.
    #[arg(long)]
    pub window_frac: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EquilibriaArgs {
    /// Constant upstream demand (veh/s).
    #[arg(long)]
    pub demand: f64,
    /// Constant speed limit (open loop).
    #[arg(long, conflicts_with_all = ["alpha", "beta"])]
    pub u_star: Option<f64>,
    /// Proportional gain (closed loop).
    #[arg(long, requires = "beta")]
    pub alpha: Option<f64>,
    /// Integral gain (closed loop).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Zone length used for stability rates (m).
    #[arg(long, default_value_t = 600.0)]
    pub l_0: f64,
    /// Capacity-drop magnitude; defaults to the reference value.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Xi,
    Delta,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub kind: SweepKind,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    /// Number of seeds (0..n) for stochastic scenarios.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Output directory for `sweep.json` and, with `--plot`, `sweep.svg`.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Controlled scenario.
    pub config_vsl: PathBuf,
    /// Baseline scenario.
    pub config_base: PathBuf,
    /// Number of seeds (0..n); defaults to the configured seed only.
    #[arg(long)]
    pub seeds: Option<u64>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } | Error::Csv(_) => 1,
        Error::Invariant { .. } => 3,
        Error::Config { .. } | Error::Json(_) | Error::Domain(_) | Error::Contract(_) => 2,
    }
}

/// Parses `std::env::args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a),
        Command::Equilibria(a) => equilibria(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes a line to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(line: &str) -> Result<()> {
    use std::io::Write;
    match writeln!(std::io::stdout().lock(), "{line}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut cfg = ScenarioConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if let Some(w) = a.window_frac {
        cfg.window_frac = w;
    }
    let trace = engine::run(&cfg)?;
    create_dir(&a.out)?;
    io::write_trace(&a.out.join("trace.csv"), &trace.records)?;
    let report = io::RunReport::new(&cfg, trace.summary.clone())?;
    io::write_atomic(&a.out.join("summary.json"), report.to_json()?.as_bytes())?;
    if a.plot {
        let title = if cfg.name.is_empty() {
            "scenario"
        } else {
            &cfg.name
        };
        let svg = io::series_panels_svg(title, &trace.records);
        io::write_atomic(&a.out.join("series.svg"), svg.as_bytes())?;
        if let Some(svg) = io::density_contour_svg(title, &trace.records, cfg.fd.k_j) {
            io::write_atomic(&a.out.join("density.svg"), svg.as_bytes())?;
        }
    }
    let s = &trace.summary;
    emit(&format!(
        "{}: steps={} travel_time={} late_mean_g={:.6} late_drop_steps={}",
        a.config.display(),
        s.steps,
        s.avg_travel_time
            .map_or("n/a".into(), |t| format!("{t:.3}")),
        s.late_mean_discharge,
        s.late_capacity_drop_steps
    ))
}

#[derive(Serialize)]
struct ClassifiedEquilibrium {
    #[serde(flatten)]
    equilibrium: Equilibrium,
    #[serde(skip_serializing_if = "Option::is_none")]
    stability: Option<Stability>,
}

#[derive(Serialize)]
struct EquilibriaReport {
    demand: f64,
    equilibria: Vec<ClassifiedEquilibrium>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal_speed_limit: Option<OptimalSpeedLimit>,
}

fn equilibria(a: &EquilibriaArgs) -> Result<()> {
    let mut model = LaneDrop::reference();
    if let Some(delta) = a.delta {
        model = model.with_delta(delta)?;
    }
    let report = match (a.u_star, a.alpha, a.beta) {
        (Some(u), _, _) => {
            let eqs = open_loop_equilibria(&model, a.demand, u)?;
            let equilibria = eqs
                .into_iter()
                .map(|eq| {
                    Ok(ClassifiedEquilibrium {
                        stability: Some(classify_stability(&model, a.l_0, &eq, a.demand)?),
                        equilibrium: eq,
                    })
                })
                .collect::<Result<_>>()?;
            EquilibriaReport {
                demand: a.demand,
                equilibria,
                optimal_speed_limit: Some(optimal_speed_limit(&model, a.demand)?),
            }
        }
        (None, alpha, Some(beta)) => {
            let eqs = closed_loop_equilibria(&model, a.demand, alpha.unwrap_or(0.0), beta)?;
            EquilibriaReport {
                demand: a.demand,
                equilibria: eqs
                    .into_iter()
                    .map(|equilibrium| ClassifiedEquilibrium {
                        equilibrium,
                        stability: None,
                    })
                    .collect(),
                optimal_speed_limit: None,
            }
        }
        _ => {
            return Err(Error::config(
                "equilibria",
                "give either --u-star or --beta (with optional --alpha)",
            ))
        }
    };
    print_json(&report)
}

/// `from, from + step, ...` up to and including `to` (within rounding).
pub fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    if !(step.is_finite() && step > 0.0 && from.is_finite() && to.is_finite() && to >= from) {
        return Err(Error::config(
            "sweep",
            format!("need from <= to and step > 0, got {from}..{to} by {step}"),
        ));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    // Round away accumulated representation error so 0.15 prints as 0.15.
    Ok((0..=n)
        .map(|i| ((from + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let cfg = ScenarioConfig::load(&a.config)?;
    let values = grid(a.from, a.to, a.step)?;
    let seeds: Vec<u64> = (0..a.seeds.max(1)).collect();
    create_dir(&a.out)?;
    let (json, points, label) = match a.kind {
        SweepKind::Xi => {
            let pts = engine::xi_sweep(&cfg, &values, &seeds)?;
            let xy = pts
                .iter()
                .map(|p| (p.xi, p.late_mean_discharge))
                .collect::<Vec<_>>();
            (
                serde_json::to_string_pretty(&pts)?,
                xy,
                "late mean discharge vs xi",
            )
        }
        SweepKind::Delta => {
            let pts = engine::delta_sweep(&cfg, &values, &seeds)?;
            let xy = pts
                .iter()
                .map(|p| (p.delta, p.reduction.mean))
                .collect::<Vec<_>>();
            (
                serde_json::to_string_pretty(&pts)?,
                xy,
                "travel-time reduction vs delta",
            )
        }
    };
    io::write_atomic(&a.out.join("sweep.json"), json.as_bytes())?;
    if a.plot {
        let svg = io::sweep_svg(label, label, &points);
        io::write_atomic(&a.out.join("sweep.svg"), svg.as_bytes())?;
    }
    for (x, y) in points {
        emit(&format!("{x}\t{y}"))?;
    }
    Ok(())
}

fn compare(a: &CompareArgs) -> Result<()> {
    let vsl = ScenarioConfig::load(&a.config_vsl)?;
    let base = ScenarioConfig::load(&a.config_base)?;
    let seeds: Vec<u64> = match a.seeds {
        Some(n) => (0..n.max(1)).collect(),
        None => vec![vsl.seed],
    };
    if a.seeds.is_none() && vsl.seed != base.seed {
        return Err(Error::config(
            "seed",
            format!(
                "configs use different seeds ({} vs {})",
                vsl.seed, base.seed
            ),
        ));
    }
    let runs = engine::run_ensemble(&vsl, &base, &seeds)?;
    let comparisons: Vec<_> = runs.into_iter().map(|(_, _, c)| c).collect();
    print_json(&comparisons)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoint() {
        let g = grid(-0.1, 0.1, 0.05).unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[4] - 0.1).abs() < 1e-15);
        assert!(grid(1.0, 0.0, 0.1).is_err());
    }

    #[test]
    fn bad_arguments_exit_with_two() {
        assert_eq!(main_with_args(["vsl", "equilibria", "--demand", "0.5"]), 2);
        assert_eq!(main_with_args(["vsl", "frobnicate"]), 2);
    }
}
