//! Subcommand argument sets and runners.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use tautband_core::bounds::bound_report;
use tautband_core::buffer::{fifo_losses, optimal_losses, penalty, PenaltyFunction};
use tautband_core::montecarlo::{
    convergence_sweep, run_experiment_full, run_experiment_with_law, ExperimentConfig, Mode,
};
use tautband_core::paths::{Seed, TimeGrid};
use tautband_core::pursuit::SpeedLaw;
use tautband_core::stats::fmt_sig;
use tautband_core::tautstring::{solve, Contact, EndConstraint, Tube};

use crate::manifest;
use crate::{io, CliError, Command};

/// Stderr progress notes: first message immediately, later ones at most
/// every two seconds, final summaries always; `--quiet` drops all of them.
struct Progress {
    quiet: bool,
    last: std::cell::Cell<Option<Instant>>,
}

impl Progress {
    fn new(quiet: bool) -> Self {
        Progress { quiet, last: std::cell::Cell::new(None) }
    }

    fn note(&self, msg: &str) {
        if self.quiet {
            return;
        }
        let due = match self.last.get() {
            None => true,
            Some(at) => at.elapsed().as_secs_f64() >= 2.0,
        };
        if due {
            eprintln!("{msg}");
            self.last.set(Some(Instant::now()));
        }
    }

    fn done(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

pub fn execute(command: Command, quiet: bool) -> Result<(), CliError> {
    let progress = Progress::new(quiet);
    let started = Instant::now();
    let (seed, manifest_anchor) = match &command {
        Command::Solve(a) => (None, Some(a.out.clone())),
        Command::Estimate(a) => (Some(a.seed), Some(a.out.clone())),
        Command::Pursuit(a) => (Some(a.seed), Some(a.out.clone())),
        Command::Bounds(a) => (None, a.out.clone()),
        Command::Buffer(a) => (None, Some(a.out.clone())),
        Command::Sweep(a) => (Some(a.seed), Some(a.out.clone())),
    };
    match &command {
        Command::Solve(a) => run_solve(a)?,
        Command::Estimate(a) => run_estimate(a, &progress)?,
        Command::Pursuit(a) => run_pursuit(a, &progress)?,
        Command::Bounds(a) => run_bounds(a)?,
        Command::Buffer(a) => run_buffer(a)?,
        Command::Sweep(a) => run_sweep(a, &progress)?,
    }
    if let Some(anchor) = manifest_anchor {
        manifest::write(&anchor, &command, seed, started.elapsed())?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndModeArg {
    /// Pin the final knot (give the value with --end-value)
    Fixed,
    /// Let the final knot float anywhere inside the tube
    Free,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    TautFixed,
    TautFree,
    Pursuit,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::TautFixed => Mode::TautFixed,
            ModeArg::TautFree => Mode::TautFree,
            ModeArg::Pursuit => Mode::Pursuit,
        }
    }
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct SolveArgs {
    /// Tube CSV with header `t,lower,upper`, one row per knot
    #[arg(long)]
    pub tube: PathBuf,
    /// End condition at the final knot
    #[arg(long, value_enum, default_value = "fixed")]
    pub end: EndModeArg,
    /// Value at the first knot
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Final value when --end fixed
    #[arg(long)]
    pub end_value: Option<f64>,
    /// Output CSV `t,value,contact`; energy goes to standard output as JSON
    #[arg(long)]
    pub out: PathBuf,
}

fn run_solve(args: &SolveArgs) -> Result<(), CliError> {
    let (times, lower, upper) = io::read_tube_csv(&args.tube)?;
    let n = times.len() - 1;
    let end = match (args.end, args.end_value) {
        (EndModeArg::Fixed, Some(v)) => EndConstraint::FixedAt(v),
        (EndModeArg::Fixed, None) => {
            return Err(CliError::Input(
                "--end fixed needs --end-value to pin the final knot (or use --end free)".into(),
            ))
        }
        (EndModeArg::Free, None) => EndConstraint::Interval { lo: lower[n], hi: upper[n] },
        (EndModeArg::Free, Some(_)) => {
            return Err(CliError::Input(
                "--end-value only makes sense together with --end fixed".into(),
            ))
        }
    };
    let grid = Arc::new(TimeGrid::new(times)?);
    let tube = Tube::new(grid, lower, upper, args.start, end)?;
    let solution = solve(&tube)?;
    io::write_solution_csv(&args.out, &solution)?;
    let count = |c: Contact| solution.contact.iter().filter(|&&x| x == c).count();
    println!(
        "{}",
        json!({
            "energy": solution.energy_value,
            "sqrt_energy": solution.energy_value.sqrt(),
            "knots": solution.path.len(),
            "contacts": {
                "lower": count(Contact::Lower),
                "upper": count(Contact::Upper),
                "interior": count(Contact::Interior),
            },
        })
    );
    Ok(())
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct EstimateArgs {
    /// Which effort to estimate
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    /// Horizon T
    #[arg(long)]
    pub t: f64,
    /// Grid resolution; the run uses round(T × this) uniform steps
    #[arg(long, default_value_t = 1000)]
    pub steps_per_unit: usize,
    /// Tube radius (taut modes)
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Number of independent paths
    #[arg(long)]
    pub paths: usize,
    /// Master seed; path k draws from stream k
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bins of the normalized-effort histogram
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Stats JSON: config echo plus every statistic with standard errors
    #[arg(long)]
    pub out: PathBuf,
    /// Optional histogram CSV `bin_lo,bin_hi,count,frequency`
    #[arg(long)]
    pub hist: Option<PathBuf>,
    /// Optional per-path CSV `path,normalized,raw`
    #[arg(long)]
    pub per_path: Option<PathBuf>,
}

impl EstimateArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            horizon: self.t,
            steps: (self.t * self.steps_per_unit as f64).round() as usize,
            radius: self.r,
            paths: self.paths,
            master_seed: Seed(self.seed),
            mode: self.mode.into(),
            bins: self.bins,
        }
    }
}

fn run_estimate(args: &EstimateArgs, progress: &Progress) -> Result<(), CliError> {
    let config = args.config();
    progress.note(&format!(
        "estimate: {} paths × {} steps at T = {}",
        config.paths, config.steps, config.horizon
    ));
    let begun = Instant::now();
    let output = run_experiment_full(&config)?;
    io::emit_json(Some(&args.out), &json!({ "config": output.config, "stats": output.stats }))?;
    if let Some(hist) = &args.hist {
        io::write_hist_csv(hist, &output.stats.histogram)?;
    }
    if let Some(per_path) = &args.per_path {
        io::write_per_path_csv(per_path, &output.per_path)?;
    }
    progress.done(&format!(
        "estimate: mean {} ± {} in {:.1} s",
        fmt_sig(output.stats.sample_mean, 6),
        fmt_sig(output.stats.se_mean, 3),
        begun.elapsed().as_secs_f64()
    ));
    Ok(())
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct PursuitArgs {
    /// Horizon T
    #[arg(long)]
    pub t: f64,
    /// Total number of uniform steps over [0, T]
    #[arg(long)]
    pub steps: usize,
    /// Number of independent paths
    #[arg(long)]
    pub paths: usize,
    /// Clamp margin: the follower is kept within this distance of the target
    #[arg(long, default_value_t = 0.99)]
    pub clamp: f64,
    /// Master seed; path k draws from stream k
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bins of the occupancy histogram over [-1, 1]
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Stats JSON: config echo plus every statistic with standard errors
    #[arg(long)]
    pub out: PathBuf,
    /// Optional occupancy histogram CSV `bin_lo,bin_hi,count,frequency`
    #[arg(long)]
    pub hist: Option<PathBuf>,
}

fn run_pursuit(args: &PursuitArgs, progress: &Progress) -> Result<(), CliError> {
    let config = ExperimentConfig {
        horizon: args.t,
        steps: args.steps,
        radius: 1.0,
        paths: args.paths,
        master_seed: Seed(args.seed),
        mode: Mode::Pursuit,
        bins: args.bins,
    };
    progress.note(&format!(
        "pursuit: {} paths × {} steps at T = {}, clamp {}",
        config.paths, config.steps, config.horizon, args.clamp
    ));
    let begun = Instant::now();
    let law = SpeedLaw::optimal().with_clamp(args.clamp)?;
    let output = run_experiment_with_law(&config, &law)?;
    io::emit_json(
        Some(&args.out),
        &json!({ "config": output.config, "clamp": args.clamp, "stats": output.stats }),
    )?;
    if let Some(hist) = &args.hist {
        let occupancy = output
            .occupancy
            .as_ref()
            .expect("pursuit experiments always report occupancy");
        io::write_hist_csv(hist, occupancy)?;
    }
    progress.done(&format!(
        "pursuit: mean {} ± {} in {:.1} s",
        fmt_sig(output.stats.sample_mean, 6),
        fmt_sig(output.stats.se_mean, 3),
        begun.elapsed().as_secs_f64()
    ));
    Ok(())
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct BoundsArgs {
    /// Report JSON; written to standard output when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn run_bounds(args: &BoundsArgs) -> Result<(), CliError> {
    let report = bound_report()?.rounded(12);
    io::emit_json(args.out.as_deref(), &report)?;
    Ok(())
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct BufferArgs {
    /// Traffic CSV with header `slot,S,C`
    #[arg(long)]
    pub trace: PathBuf,
    /// Buffer size B ≥ 0
    #[arg(long)]
    pub buffer: f64,
    /// Per-slot penalty: `quad`, `exp`, or `poly:a0,a1,…` (coefficients of x⁰,x¹,…)
    #[arg(long, default_value = "quad")]
    pub phi: String,
    /// Schedule CSV `slot,S,C,L_opt,L_fifo,B_opt,B_fifo`; summary JSON goes
    /// to standard output
    #[arg(long)]
    pub out: PathBuf,
    /// Include the FIFO baseline's penalty in the summary
    #[arg(long)]
    pub compare_fifo: bool,
}

fn parse_phi(raw: &str) -> Result<PenaltyFunction, CliError> {
    match raw {
        "quad" => Ok(PenaltyFunction::quadratic()),
        "exp" => Ok(PenaltyFunction::exponential()),
        s if s.starts_with("poly:") => {
            let coeffs = s["poly:".len()..]
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| {
                        CliError::Input(format!("bad polynomial coefficient {c:?} in {s:?}"))
                    })
                })
                .collect::<Result<Vec<f64>, CliError>>()?;
            if coeffs.is_empty() {
                return Err(CliError::Input("poly: needs at least one coefficient".into()));
            }
            Ok(PenaltyFunction::new(s.to_string(), move |x| {
                coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a)
            })?)
        }
        other => Err(CliError::Input(format!(
            "unknown penalty {other:?}; use quad, exp, or poly:a0,a1,…"
        ))),
    }
}

fn run_buffer(args: &BufferArgs) -> Result<(), CliError> {
    let trace = io::read_trace_csv(&args.trace)?;
    let phi = parse_phi(&args.phi)?;
    let optimal = optimal_losses(&trace, args.buffer, &phi)?;
    let fifo = fifo_losses(&trace, args.buffer)?;
    io::write_schedule_csv(&args.out, &trace, &optimal, &fifo)?;
    let f_opt = penalty(&optimal, &trace, &phi)?;
    let mut summary = json!({
        "phi": phi.name(),
        "buffer": args.buffer,
        "slots": trace.slots(),
        "f_opt": f_opt,
        "total_loss_opt": optimal.losses.iter().sum::<f64>(),
        "lattice_fallback": optimal.lattice_fallback,
    });
    if args.compare_fifo {
        let f_fifo = penalty(&fifo, &trace, &phi)?;
        summary["f_fifo"] = json!(f_fifo);
        summary["total_loss_fifo"] = json!(fifo.losses.iter().sum::<f64>());
    }
    println!("{summary}");
    Ok(())
}

#[derive(Args, Clone, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Which effort to sweep
    #[arg(long, value_enum, default_value = "taut-fixed")]
    pub mode: ModeArg,
    /// Comma-separated horizons, e.g. 125,250,500,1000
    #[arg(long = "t-list", value_delimiter = ',', required = true)]
    pub t_list: Vec<f64>,
    /// Grid resolution shared by every point
    #[arg(long, default_value_t = 1000)]
    pub steps_per_unit: usize,
    /// Tube radius (taut modes)
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Paths per sweep point
    #[arg(long)]
    pub paths: usize,
    /// Master seed, shared across points to couple them
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bins of the per-point histograms
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    /// Output CSV, one row per horizon
    #[arg(long)]
    pub out: PathBuf,
}


fn run_sweep(args: &SweepArgs, progress: &Progress) -> Result<(), CliError> {
    let first = *args
        .t_list
        .first()
        .ok_or_else(|| CliError::Input("--t-list needs at least one horizon".into()))?;
    let base = ExperimentConfig {
        horizon: first,
        steps: ((first * args.steps_per_unit as f64).round() as usize).max(1),
        radius: args.r,
        paths: args.paths,
        master_seed: Seed(args.seed),
        mode: args.mode.into(),
        bins: args.bins,
    };
    progress.note(&format!(
        "sweep: {} horizons × {} paths at {} steps/unit",
        args.t_list.len(),
        args.paths,
        args.steps_per_unit
    ));
    let begun = Instant::now();
    let points = convergence_sweep(&base, &args.t_list)?;
    io::write_sweep_csv(&args.out, &points)?;
    progress.done(&format!(
        "sweep: {} points in {:.1} s, final mean {}",
        points.len(),
        begun.elapsed().as_secs_f64(),
        fmt_sig(points.last().unwrap().stats.sample_mean, 6)
    ));
    Ok(())
}
