//! Time grids, piecewise-linear sampled paths, and the Sobolev-type path
//! functionals the rest of the toolkit is built on.
//!
//! A `SampledPath` holds values at the knots of a `TimeGrid` and is read as
//! the piecewise-linear interpolant between knots. For such a path the
//! (squared-derivative) energy is
//!
//! ```text
//!   energy(p) = sum_i (v_i - v_{i-1})^2 / (t_i - t_{i-1})
//! ```
//!
//! which is exactly `∫ p'(t)^2 dt` of the interpolant. Total variation and
//! sup distance are the corresponding knot-wise sums. Wiener paths are
//! simulated by summing independent Gaussian increments with variance equal
//! to the knot spacing.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::fmt_sig;

/// RNG seed. One seed determines one reproducible stream of experiments;
/// batch runs derive one independent substream per path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed(pub u64);

impl Seed {
    /// Root RNG for this seed (substream 0).
    pub fn rng(self) -> ChaCha8Rng {
        self.rng_for_path(0)
    }

    /// Independent RNG for path `index` under this seed. Uses the cipher's
    /// stream parameter, so distinct indices never overlap and results do
    /// not depend on scheduling order.
    pub fn rng_for_path(self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

/// Strictly increasing time knots starting at 0. At least two knots.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Grid(format!(
                "need at least 2 knots, got {}",
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::Grid(format!("first knot must be 0, got {}", times[0])));
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(Error::Grid(format!(
                    "times must be strictly increasing, violated at knot {} ({} then {})",
                    i,
                    times[i - 1],
                    times[i]
                )));
            }
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Grid("times must be finite".into()));
        }
        Ok(TimeGrid { times })
    }

    /// Uniform grid of `steps` intervals on `[0, horizon]`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        if steps < 1 {
            return Err(Error::Grid("need at least 1 step".into()));
        }
        let n = steps as f64;
        let times = (0..=steps).map(|i| horizon * (i as f64 / n)).collect();
        TimeGrid::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // validated: at least two knots
    }

    /// Number of intervals (knots - 1).
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Last knot time.
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// True when all knot spacings agree with the mean spacing to relative
    /// tolerance `rel_tol`.
    pub fn is_uniform(&self, rel_tol: f64) -> bool {
        let mean = self.horizon() / self.steps() as f64;
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - mean).abs() <= rel_tol * mean)
    }
}

/// A path sampled on a time grid, interpreted piecewise-linearly.
///
/// Values are immutable after construction; the grid is shared via `Arc` so
/// thousands of paths on a common grid do not copy the knot vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPath {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Input(format!(
                "value count {} does not match grid knot count {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("path values must be finite".into()));
        }
        Ok(SampledPath { grid, values })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.times()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> f64 {
        self.values[0]
    }

    pub fn last(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// Piecewise-linear evaluation at an arbitrary time inside `[0, horizon]`.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let times = self.times();
        if t < times[0] || t > self.horizon() {
            return Err(Error::Input(format!(
                "time {t} outside path domain [0, {}]",
                self.horizon()
            )));
        }
        // partition_point: first index with times[i] > t, so seg ends there
        let hi = times.partition_point(|&x| x <= t);
        if hi == times.len() {
            return Ok(*self.values.last().unwrap());
        }
        let lo = hi - 1;
        let (t0, t1) = (times[lo], times[hi]);
        let (v0, v1) = (self.values[lo], self.values[hi]);
        Ok(v0 + (v1 - v0) * ((t - t0) / (t1 - t0)))
    }

    /// Resamples this path onto another grid by piecewise-linear
    /// interpolation. The target grid must live inside this path's domain.
    pub fn resample(&self, grid: &Arc<TimeGrid>) -> Result<SampledPath> {
        let values = grid
            .times()
            .iter()
            .map(|&t| self.value_at(t))
            .collect::<Result<Vec<_>>>()?;
        SampledPath::new(Arc::clone(grid), values)
    }

    /// Writes the path as CSV (`t,value`) with full float precision.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.times().iter().zip(&self.values) {
            writeln!(out, "{},{}", fmt_sig(*t, 17), fmt_sig(*v, 17))?;
        }
        Ok(())
    }

    /// Parses a `t,value` CSV produced by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: BufRead>(input: R) -> Result<SampledPath> {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 {
                if line != "t,value" {
                    return Err(Error::Parse(format!(
                        "expected header 't,value', got '{line}'"
                    )));
                }
                continue;
            }
            let mut parts = line.split(',');
            let t = parse_field(parts.next(), "t", lineno + 1)?;
            let v = parse_field(parts.next(), "value", lineno + 1)?;
            if parts.next().is_some() {
                return Err(Error::Parse(format!("line {}: too many fields", lineno + 1)));
            }
            times.push(t);
            values.push(v);
        }
        SampledPath::new(Arc::new(TimeGrid::new(times)?), values)
    }
}

pub(crate) fn parse_field(field: Option<&str>, name: &str, lineno: usize) -> Result<f64> {
    let raw = field
        .ok_or_else(|| Error::Parse(format!("line {lineno}: missing field '{name}'")))?
        .trim();
    raw.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {lineno}: field '{name}' is not a number: '{raw}'")))
}

/// Energy `∫ p'(t)^2 dt` of the piecewise-linear interpolant.
pub fn energy(p: &SampledPath) -> f64 {
    let t = p.times();
    let v = p.values();
    let mut e = 0.0;
    for i in 1..v.len() {
        let dv = v[i] - v[i - 1];
        e += dv * dv / (t[i] - t[i - 1]);
    }
    e
}

/// Total variation: sum of absolute knot-to-knot increments.
pub fn variation(p: &SampledPath) -> f64 {
    p.values().windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Knot-wise sup distance between two paths on the *same* grid.
pub fn sup_distance(p: &SampledPath, q: &SampledPath) -> Result<f64> {
    let same = Arc::ptr_eq(p.grid(), q.grid()) || p.times() == q.times();
    if !same {
        return Err(Error::Input(
            "sup_distance requires both paths on the same grid".into(),
        ));
    }
    Ok(p.values()
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// Simulates a Wiener path on `grid`: W(0) = 0 and independent increments
/// with variance equal to the knot spacing. Deterministic per seed.
pub fn simulate_wiener(grid: &Arc<TimeGrid>, seed: Seed) -> SampledPath {
    simulate_wiener_with(grid, &mut seed.rng())
}

/// Same as [`simulate_wiener`] but drawing from a caller-supplied RNG, which
/// lets batch drivers hand each path its own substream.
pub fn simulate_wiener_with<R: Rng>(grid: &Arc<TimeGrid>, rng: &mut R) -> SampledPath {
    let times = grid.times();
    let mut values = Vec::with_capacity(times.len());
    values.push(0.0);
    let mut w = 0.0;
    for i in 1..times.len() {
        let dt = times[i] - times[i - 1];
        let z: f64 = rng.sample(StandardNormal);
        w += dt.sqrt() * z;
        values.push(w);
    }
    SampledPath { grid: Arc::clone(grid), values }
}

/// Maps a path on `[0, horizon]` to `[0, 1]` by `s = t/horizon`,
/// `x = v/sqrt(horizon)`. This is the Brownian scaling map; it preserves
/// energy exactly (each term picks up a factor `horizon/horizon`).
pub fn rescale_to_unit(p: &SampledPath, horizon: f64) -> Result<SampledPath> {
    if !(horizon > 0.0) {
        return Err(Error::Input(format!(
            "rescale horizon must be positive, got {horizon}"
        )));
    }
    let span = p.horizon();
    if (span - horizon).abs() > 1e-9 * horizon {
        return Err(Error::Input(format!(
            "path spans [0, {span}] but rescale horizon is {horizon}"
        )));
    }
    let root = horizon.sqrt();
    let times = p.times().iter().map(|t| t / horizon).collect();
    let values = p.values().iter().map(|v| v / root).collect();
    SampledPath::new(Arc::new(TimeGrid::new(times)?), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::moments;

    fn path(times: &[f64], values: &[f64]) -> SampledPath {
        SampledPath::new(
            Arc::new(TimeGrid::new(times.to_vec()).unwrap()),
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(vec![0.0]).is_err());
        assert!(TimeGrid::new(vec![0.5, 1.0]).is_err()); // must start at 0
        assert!(TimeGrid::new(vec![0.0, 1.0, 1.0]).is_err()); // not strict
        assert!(TimeGrid::new(vec![0.0, 2.0, 1.0]).is_err()); // decreasing
        assert!(TimeGrid::uniform(0.0, 10).is_err());
        assert!(TimeGrid::uniform(-1.0, 10).is_err());
    }

    #[test]
    fn uniform_grid_hits_endpoints_exactly() {
        let g = TimeGrid::uniform(1000.0, 100_000).unwrap();
        assert_eq!(g.times()[0], 0.0);
        assert_eq!(g.horizon(), 1000.0);
        assert!(g.is_uniform(1e-9));
    }

    #[test]
    fn energy_hand_values() {
        // constant path has zero energy
        assert_eq!(energy(&path(&[0.0, 0.3, 1.0], &[2.0, 2.0, 2.0])), 0.0);
        // straight chord: a^2 / T
        let p = path(&[0.0, 1.0], &[0.0, 3.0]);
        assert_eq!(energy(&p), 9.0);
        // tent on {0, 1/2, 1} with values {0, 1, 0}: 1/(1/2) + 1/(1/2) = 4
        let tent = path(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]);
        assert_eq!(energy(&tent), 4.0);
        assert_eq!(variation(&tent), 2.0);
    }

    #[test]
    fn variation_of_monotone_path_telescopes() {
        let p = path(&[0.0, 0.1, 0.7, 1.0], &[-1.0, 0.0, 2.5, 4.0]);
        assert_eq!(variation(&p), 5.0);
    }

    #[test]
    fn sup_distance_basics() {
        let p = path(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]);
        let q = path(&[0.0, 0.5, 1.0], &[0.25, 1.25, 0.25]);
        assert_eq!(sup_distance(&p, &p).unwrap(), 0.0);
        assert!((sup_distance(&p, &q).unwrap() - 0.25).abs() < 1e-15);
        let r = path(&[0.0, 0.4, 1.0], &[0.0, 1.0, 0.0]);
        assert!(sup_distance(&p, &r).is_err());
    }

    #[test]
    fn value_at_interpolates() {
        let p = path(&[0.0, 0.5, 1.0], &[0.0, 1.0, 0.0]);
        assert_eq!(p.value_at(0.25).unwrap(), 0.5);
        assert_eq!(p.value_at(1.0).unwrap(), 0.0);
        assert!(p.value_at(1.5).is_err());
    }

    #[test]
    fn wiener_starts_at_zero_and_is_deterministic() {
        let grid = Arc::new(TimeGrid::uniform(2.0, 64).unwrap());
        let a = simulate_wiener(&grid, Seed(42));
        let b = simulate_wiener(&grid, Seed(42));
        assert_eq!(a.values()[0], 0.0);
        assert_eq!(a.values(), b.values());
        let c = simulate_wiener(&grid, Seed(43));
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn wiener_terminal_moments_match_theory() {
        // W(1) over many seeds: mean ~ 0, variance ~ 1 (3-sigma bands)
        let grid = Arc::new(TimeGrid::uniform(1.0, 4).unwrap());
        let n = 10_000;
        let finals: Vec<f64> = (0..n)
            .map(|i| simulate_wiener(&grid, Seed(1_000 + i as u64)).last())
            .collect();
        let (mean, var, _) = moments(&finals);
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn wiener_disjoint_increments_are_uncorrelated() {
        // increments over [0, 1/4] and [1/2, 1]: empirical correlation small
        let grid = Arc::new(TimeGrid::new(vec![0.0, 0.25, 0.5, 1.0]).unwrap());
        let n = 10_000;
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let w = simulate_wiener(&grid, Seed(77_000 + i as u64));
            let v = w.values();
            xs.push(v[1] - v[0]);
            ys.push(v[3] - v[2]);
        }
        let (mx, vx, _) = moments(&xs);
        let (my, vy, _) = moments(&ys);
        let cov: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / n as f64;
        let corr = cov / (vx * vy).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr}");
    }

    #[test]
    fn rescale_is_identity_at_unit_horizon() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 16).unwrap());
        let w = simulate_wiener(&grid, Seed(5));
        let r = rescale_to_unit(&w, 1.0).unwrap();
        assert_eq!(w.values(), r.values());
        assert_eq!(w.times(), r.times());
    }

    #[test]
    fn rescale_preserves_chord_and_random_energy() {
        // chord on [0, T]: energy a^2/T before, (a/sqrt(T))^2 / 1 after
        let t = 7.0;
        let chord = path(&[0.0, t], &[0.0, 3.0]);
        let r = rescale_to_unit(&chord, t).unwrap();
        let rel = (energy(&r) - energy(&chord)).abs() / energy(&chord);
        assert!(rel < 1e-12, "rel {rel}");

        let grid = Arc::new(TimeGrid::uniform(50.0, 400).unwrap());
        let w = simulate_wiener(&grid, Seed(9));
        let rw = rescale_to_unit(&w, 50.0).unwrap();
        let rel = (energy(&rw) - energy(&w)).abs() / energy(&w);
        assert!(rel < 1e-12, "rel {rel}");
        assert!(rescale_to_unit(&w, 0.0).is_err());
        assert!(rescale_to_unit(&w, -2.0).is_err());
    }

    #[test]
    fn energy_of_linear_trend_expands_exactly() {
        // energy(p + c t) = energy(p) + c^2 T + 2 c (p(T) - p(0))
        let grid = Arc::new(TimeGrid::uniform(3.0, 128).unwrap());
        let w = simulate_wiener(&grid, Seed(21));
        let c = 0.8;
        let shifted = SampledPath::new(
            Arc::clone(&grid),
            w.times()
                .iter()
                .zip(w.values())
                .map(|(t, v)| v + c * t)
                .collect(),
        )
        .unwrap();
        let expect = energy(&w) + c * c * 3.0 + 2.0 * c * (w.last() - w.first());
        let rel = (energy(&shifted) - expect).abs() / expect.abs().max(1.0);
        assert!(rel < 1e-12, "rel {rel}");
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = Arc::new(TimeGrid::uniform(2.5, 97).unwrap());
        let w = simulate_wiener(&grid, Seed(31));
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let back = SampledPath::read_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), w.values());
        assert_eq!(back.times(), w.times());
    }

    #[test]
    fn csv_rejects_malformed_input() {
        let bad_header = "time,val\n0,0\n";
        assert!(SampledPath::read_csv(bad_header.as_bytes()).is_err());
        let bad_field = "t,value\n0,zero\n1,1\n";
        assert!(SampledPath::read_csv(bad_field.as_bytes()).is_err());
        let bad_grid = "t,value\n0,0\n0,1\n";
        assert!(SampledPath::read_csv(bad_grid.as_bytes()).is_err());
    }
}
