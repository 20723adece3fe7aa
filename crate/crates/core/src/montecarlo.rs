//! Monte Carlo experiments over independent Wiener paths.
//!
//! Each experiment draws `paths` independent targets on a uniform grid and
//! reduces every path to one normalized effort number:
//!
//! * `TautFixed` / `TautFree` — taut-string energy `E` through the radius-
//!   `r` tube, normalized to `(r/√T)·√E`, which is the scale-free quantity
//!   that settles as the horizon grows;
//! * `Pursuit` — causal follower energy, normalized to `√(E/T)`.
//!
//! Reproducibility contract: path `i` always consumes its own RNG stream
//! (`master_seed` + stream index `i`), workers return results in path
//! order, and all aggregation happens in a single sequential pass, so the
//! output is bit-identical across thread counts, across the
//! parallel/sequential backends, and across repeated runs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::paths::{energy, simulate_wiener_with, Seed, TimeGrid};
use crate::pursuit::{pursue_stream, SpeedLaw};
use crate::stats::{median, moments, Histogram};
use crate::tautstring::{crossing_count, free_knot_string, standard_tube_energy};

/// Which per-path functional the experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Taut string pinned to the target's final value.
    TautFixed,
    /// Taut string with a free end inside the tube's final interval.
    TautFree,
    /// Causal follower driven by a speed law.
    Pursuit,
}

/// Full description of one experiment; everything needed to reproduce it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Time horizon `T`.
    pub horizon: f64,
    /// Number of grid steps over `[0, T]`.
    pub steps: usize,
    /// Tube radius (taut modes; the pursuit clamp lives in its speed law).
    pub radius: f64,
    /// Number of independent target paths.
    pub paths: usize,
    pub master_seed: Seed,
    pub mode: Mode,
    /// Bin count for the sample histogram (and the occupancy histogram in
    /// pursuit mode).
    pub bins: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Input(format!(
                "horizon must be positive and finite, got {}",
                self.horizon
            )));
        }
        if self.steps == 0 {
            return Err(Error::Input("need at least one grid step".into()));
        }
        if self.paths == 0 {
            return Err(Error::Input("need at least one path".into()));
        }
        if self.bins == 0 {
            return Err(Error::Input("need at least one histogram bin".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Input(format!(
                "tube radius must be positive and finite, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Range of the normalized-sample histogram: the taut normalization
    /// concentrates below 1, the causal one below 2, so these fixed ranges
    /// keep histograms comparable across runs.
    pub fn normalized_range(&self) -> (f64, f64) {
        match self.mode {
            Mode::TautFixed | Mode::TautFree => (0.0, 2.0),
            Mode::Pursuit => (0.0, 3.0),
        }
    }

    fn normalize(&self, raw_energy: f64) -> f64 {
        match self.mode {
            Mode::TautFixed | Mode::TautFree => {
                (self.radius / self.horizon.sqrt()) * raw_energy.sqrt()
            }
            Mode::Pursuit => (raw_energy / self.horizon).sqrt(),
        }
    }
}

/// Summary statistics of the normalized per-path samples.
///
/// `sample_variance` is the population variance, so the identity
/// `second_moment = sample_variance + sample_mean²` holds exactly up to
/// rounding. Standard errors use the usual `n - 1` forms (0 when `n = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub paths: usize,
    pub sample_mean: f64,
    pub sample_median: f64,
    pub sample_variance: f64,
    pub second_moment: f64,
    pub se_mean: f64,
    pub se_variance: f64,
    /// Mean of the raw (unnormalized) per-path energies.
    pub raw_mean: f64,
    /// Population variance of the raw energies.
    pub raw_variance: f64,
    /// Histogram of the normalized samples.
    pub histogram: Histogram,
}

impl EnergyStats {
    fn from_samples(normalized: &[f64], raw: &[f64], range: (f64, f64), bins: usize) -> Self {
        let n = normalized.len();
        let (mean, var, m2) = moments(normalized);
        let (raw_mean, raw_var, _) = moments(raw);
        let mut histogram = Histogram::new(range.0, range.1, bins);
        for &x in normalized {
            histogram.add(x);
        }
        let (se_mean, se_variance) = if n > 1 {
            let nm1 = (n - 1) as f64;
            ((var / nm1).sqrt(), var * (2.0 / nm1).sqrt())
        } else {
            (0.0, 0.0)
        };
        EnergyStats {
            paths: n,
            sample_mean: mean,
            sample_median: median(normalized),
            sample_variance: var,
            second_moment: m2,
            se_mean,
            se_variance,
            raw_mean,
            raw_variance: raw_var,
            histogram,
        }
    }
}

/// One path's contribution, in path order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub index: usize,
    pub normalized: f64,
    pub raw: f64,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub stats: EnergyStats,
    /// Merged signed-distance occupancy over all paths (pursuit mode only).
    pub occupancy: Option<Histogram>,
    pub per_path: Vec<PathSample>,
}

/// Runs the experiment and returns only the summary statistics.
pub fn run_experiment(config: &ExperimentConfig) -> Result<EnergyStats> {
    run_experiment_full(config).map(|out| out.stats)
}

/// Runs the experiment on the default execution backend (data-parallel when
/// the `parallel` feature is on).
pub fn run_experiment_full(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_with(config, None, true)
}

/// Same experiment, forced onto the sequential backend; exists so the two
/// backends can be compared directly (tests assert their outputs are
/// identical, benches compare their speed).
pub fn run_experiment_full_seq(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_with(config, None, false)
}

/// Pursuit experiment under a caller-supplied speed law.
pub fn run_experiment_with_law(
    config: &ExperimentConfig,
    law: &SpeedLaw,
) -> Result<ExperimentOutput> {
    if config.mode != Mode::Pursuit {
        return Err(Error::Input(
            "a speed law only applies to pursuit-mode experiments".into(),
        ));
    }
    run_with(config, Some(law), true)
}

fn run_with(
    config: &ExperimentConfig,
    law: Option<&SpeedLaw>,
    parallel: bool,
) -> Result<ExperimentOutput> {
    config.validate()?;
    let seed = config.master_seed;
    let n_paths = config.paths;
    let results: Vec<Result<(f64, Option<Histogram>)>> = match config.mode {
        Mode::TautFixed | Mode::TautFree => {
            let grid = Arc::new(TimeGrid::uniform(config.horizon, config.steps)?);
            let fixed = config.mode == Mode::TautFixed;
            let radius = config.radius;
            let job = |i: usize| -> Result<(f64, Option<Histogram>)> {
                let mut rng = seed.rng_for_path(i as u64);
                let w = simulate_wiener_with(&grid, &mut rng);
                Ok((standard_tube_energy(&w, radius, fixed)?, None))
            };
            if parallel {
                exec::map_indexed(n_paths, job)
            } else {
                exec::map_indexed_seq(n_paths, job)
            }
        }
        Mode::Pursuit => {
            let fallback;
            let law = match law {
                Some(l) => l,
                None => {
                    fallback = SpeedLaw::optimal();
                    &fallback
                }
            };
            let job = |i: usize| -> Result<(f64, Option<Histogram>)> {
                let mut rng = seed.rng_for_path(i as u64);
                let (e, occ) =
                    pursue_stream(config.horizon, config.steps, law, config.bins, &mut rng);
                Ok((e, Some(occ)))
            };
            if parallel {
                exec::map_indexed(n_paths, job)
            } else {
                exec::map_indexed_seq(n_paths, job)
            }
        }
    };

    // single sequential aggregation pass, in path order
    let mut normalized = Vec::with_capacity(n_paths);
    let mut raw = Vec::with_capacity(n_paths);
    let mut per_path = Vec::with_capacity(n_paths);
    let mut occupancy: Option<Histogram> = None;
    for (index, item) in results.into_iter().enumerate() {
        let (e, occ) = item?;
        let norm = config.normalize(e);
        normalized.push(norm);
        raw.push(e);
        per_path.push(PathSample { index, normalized: norm, raw: e });
        if let Some(o) = occ {
            match occupancy.as_mut() {
                Some(total) => total.merge(&o),
                None => occupancy = Some(o),
            }
        }
    }
    let stats =
        EnergyStats::from_samples(&normalized, &raw, config.normalized_range(), config.bins);
    Ok(ExperimentOutput { config: *config, stats, occupancy, per_path })
}

/// One horizon in a convergence sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub horizon: f64,
    pub steps: usize,
    pub stats: EnergyStats,
}

/// Reruns `base` at each horizon in `horizons`, keeping the step density
/// (steps per unit time) and the master seed fixed.
///
/// The shared seed makes consecutive points positively correlated, which
/// sharpens comparisons of means across horizons.
pub fn convergence_sweep(
    base: &ExperimentConfig,
    horizons: &[f64],
) -> Result<Vec<SweepPoint>> {
    base.validate()?;
    if horizons.is_empty() {
        return Err(Error::Input("sweep needs at least one horizon".into()));
    }
    let density = base.steps as f64 / base.horizon;
    let mut points = Vec::with_capacity(horizons.len());
    for &t in horizons {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Input(format!("sweep horizon must be positive, got {t}")));
        }
        let steps = ((density * t).round() as usize).max(1);
        let cfg = ExperimentConfig { horizon: t, steps, ..*base };
        let out = run_experiment_full(&cfg)?;
        points.push(SweepPoint { horizon: t, steps, stats: out.stats });
    }
    Ok(points)
}

/// Outcome of replaying an experiment under the diffusive rescaling
/// `t → λ²t`, `value → λ·value`, `radius → λ·radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub base_mean: f64,
    pub scaled_mean: f64,
    /// Largest relative difference between paired per-path normalized
    /// samples.
    pub max_rel_deviation: f64,
    /// Whether every paired sample matched bit for bit (exact for scale
    /// factors whose square is a power of two).
    pub bitwise_identical: bool,
}

/// Verifies the advertised scale invariance of the normalized taut-string
/// effort: the same seeds replayed at `(λ²T, λr)` must reproduce each
/// path's normalized sample.
pub fn scaling_check(config: &ExperimentConfig, lambda: f64) -> Result<ScalingReport> {
    if config.mode == Mode::Pursuit {
        return Err(Error::Input(
            "the diffusive rescaling check applies to taut-string modes".into(),
        ));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Input(format!("scale factor must be positive, got {lambda}")));
    }
    let base = run_experiment_full(config)?;
    let scaled_cfg = ExperimentConfig {
        horizon: lambda * lambda * config.horizon,
        radius: lambda * config.radius,
        ..*config
    };
    let scaled = run_experiment_full(&scaled_cfg)?;
    let mut max_rel = 0.0f64;
    let mut bitwise = true;
    for (a, b) in base.per_path.iter().zip(&scaled.per_path) {
        if a.normalized != b.normalized {
            bitwise = false;
        }
        let denom = a.normalized.abs().max(1e-12);
        max_rel = max_rel.max((a.normalized - b.normalized).abs() / denom);
    }
    Ok(ScalingReport {
        lambda,
        base_mean: base.stats.sample_mean,
        scaled_mean: scaled.stats.sample_mean,
        max_rel_deviation: max_rel,
        bitwise_identical: bitwise,
    })
}

/// Estimate at one threshold in a free-knot experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeKnotPoint {
    pub epsilon: f64,
    /// Mean of `ε·sqrt(energy of the approximant)` — the radius-ε
    /// normalized effort of the free-knot construction; settles at
    /// `2·sqrt(E[1/τ])` as ε shrinks (with the grid refined accordingly).
    pub mean: f64,
    pub se: f64,
    /// Mean number of threshold crossings.
    pub mean_knots: f64,
    /// `mean_knots · ε²/4` — settles at `1/E[τ] = 1`.
    pub knots_eps2: f64,
    /// Set when the grid is too coarse to resolve the threshold (fewer than
    /// ~100 grid steps per expected crossing), which biases the estimate.
    pub coarse_grid: bool,
}

/// Runs the free-knot construction at each threshold in `eps_list` over a
/// common family of unit-horizon Wiener paths (paired across thresholds).
pub fn free_knot_estimate(
    steps: usize,
    eps_list: &[f64],
    paths: usize,
    seed: Seed,
) -> Result<Vec<FreeKnotPoint>> {
    if steps < 2 {
        return Err(Error::Input("need at least two grid steps".into()));
    }
    if paths == 0 {
        return Err(Error::Input("need at least one path".into()));
    }
    if eps_list.is_empty() {
        return Err(Error::Input("need at least one threshold".into()));
    }
    for &eps in eps_list {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Input(format!("threshold must be positive, got {eps}")));
        }
    }
    let grid = Arc::new(TimeGrid::uniform(1.0, steps)?);
    let eps_owned: Vec<f64> = eps_list.to_vec();
    let per_path: Vec<Result<Vec<(f64, usize)>>> = exec::map_indexed(paths, |i| {
        let mut rng = seed.rng_for_path(i as u64);
        let w = simulate_wiener_with(&grid, &mut rng);
        eps_owned
            .iter()
            .map(|&eps| {
                let g = free_knot_string(&w, eps)?;
                Ok((eps * energy(&g).sqrt(), crossing_count(&w, &g)))
            })
            .collect()
    });
    let mut by_eps: Vec<(Vec<f64>, Vec<f64>)> =
        vec![(Vec::with_capacity(paths), Vec::with_capacity(paths)); eps_list.len()];
    for item in per_path {
        for (slot, (norm, knots)) in item?.into_iter().enumerate() {
            by_eps[slot].0.push(norm);
            by_eps[slot].1.push(knots as f64);
        }
    }
    Ok(eps_list
        .iter()
        .zip(by_eps)
        .map(|(&eps, (norms, knots))| {
            let (mean, var, _) = moments(&norms);
            let (mean_knots, _, _) = moments(&knots);
            let se = if paths > 1 { (var / (paths - 1) as f64).sqrt() } else { 0.0 };
            FreeKnotPoint {
                epsilon: eps,
                mean,
                se,
                mean_knots,
                knots_eps2: mean_knots * eps * eps / 4.0,
                coarse_grid: (steps as f64) * eps * eps / 4.0 < 100.0,
            }
        })
        .collect())
}
