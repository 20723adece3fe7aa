//! Shared Monte Carlo oracles for the integration tests.
//!
//! The samplers here correct for discretization with Brownian-bridge
//! identities, so they converge at O(dt) instead of O(sqrt dt) and can act
//! as independent checks of closed-form quantities at modest sample sizes.

// Each integration harness compiles its own copy and uses a subset.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tautband_core::paths::{SampledPath, TimeGrid};
use tautband_core::tautstring::{EndConstraint, Tube};

/// Range (max minus min) of a Wiener path on `[0, 1]`, with per-segment
/// bridge extremes: conditioned on endpoints `a, b` over a segment of
/// length `dt`, the maximum is distributed as
/// `(a + b + sqrt((b - a)^2 - 2 dt ln U)) / 2`, `U` uniform, and the
/// minimum mirrors it.
pub fn bridge_range_sample(rng: &mut ChaCha8Rng, steps: usize) -> f64 {
    let dt = 1.0 / steps as f64;
    let sd = dt.sqrt();
    let mut a = 0.0f64;
    let mut hi = 0.0f64;
    let mut lo = 0.0f64;
    for _ in 0..steps {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let b = a + sd * z;
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let v: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let gap = b - a;
        let seg_max = 0.5 * (a + b + (gap * gap - 2.0 * dt * u.ln()).sqrt());
        let seg_min = 0.5 * (a + b - (gap * gap - 2.0 * dt * v.ln()).sqrt());
        hi = hi.max(seg_max);
        lo = lo.min(seg_min);
        a = b;
    }
    hi - lo
}

/// First exit time of a Wiener path from `[-1, 1]`, with the bridge
/// crossing correction: a segment from `a` to `b` staying inside may still
/// have touched the barrier in between, with probability
/// `exp(-2 (1 - a)(1 - b) / dt)` for the upper one (mirrored below). When
/// a hidden crossing fires, the midpoint of the segment stands in for the
/// exit time.
pub fn exit_time_sample(rng: &mut ChaCha8Rng, dt: f64) -> f64 {
    let sd = dt.sqrt();
    let mut pos = 0.0f64;
    let mut t = 0.0f64;
    loop {
        let z: f64 = rng.sample(rand_distr::StandardNormal);
        let next = pos + sd * z;
        if next.abs() >= 1.0 {
            // linear interpolation to the barrier inside the step
            let barrier = if next > 0.0 { 1.0 } else { -1.0 };
            let frac = ((barrier - pos) / (next - pos)).clamp(0.0, 1.0);
            return t + frac * dt;
        }
        let p_up = (-2.0 * (1.0 - pos) * (1.0 - next) / dt).exp();
        let p_down = (-2.0 * (1.0 + pos) * (1.0 + next) / dt).exp();
        let u: f64 = rng.gen();
        if u < p_up + p_down {
            return t + 0.5 * dt;
        }
        pos = next;
        t += dt;
    }
}

/// A random feasible tube: random positive knot spacings, a random walk
/// midline, per-knot radii, and either end constraint flavor.
pub fn random_tube(rng: &mut ChaCha8Rng, max_knots: usize, free_end: bool) -> Tube {
    let n = rng.gen_range(2..=max_knots.max(2));
    let mut times = Vec::with_capacity(n + 1);
    times.push(0.0);
    for i in 0..n {
        let dt = rng.gen_range(0.02..0.4);
        times.push(times[i] + dt);
    }
    let mut mid = vec![0.0f64];
    for i in 0..n {
        let dt: f64 = times[i + 1] - times[i];
        let step: f64 = rng.gen_range(-1.5..1.5);
        mid.push(mid[i] + step * dt.sqrt());
    }
    let mut lower = Vec::with_capacity(n + 1);
    let mut upper = Vec::with_capacity(n + 1);
    for &m in &mid {
        let r: f64 = rng.gen_range(0.2..2.0);
        if rng.gen_bool(0.08) {
            lower.push(m);
            upper.push(m);
        } else {
            lower.push(m - r);
            upper.push(m + r);
        }
    }
    lower[0] = lower[0].min(0.0);
    upper[0] = upper[0].max(0.0);
    let end = if free_end {
        EndConstraint::Interval { lo: lower[n], hi: upper[n] }
    } else {
        let u: f64 = rng.gen_range(0.0..1.0);
        EndConstraint::FixedAt(lower[n] + u * (upper[n] - lower[n]))
    };
    let grid = Arc::new(TimeGrid::new(times).unwrap());
    Tube::new(grid, lower, upper, 0.0, end).unwrap()
}

/// A random piecewise-linear path on the given grid with bounded sup norm,
/// for perturbation arguments.
pub fn random_disturbance(rng: &mut ChaCha8Rng, grid: &Arc<TimeGrid>, amp: f64) -> SampledPath {
    let vals: Vec<f64> = grid
        .times()
        .iter()
        .map(|_| rng.gen_range(-amp..amp))
        .collect();
    let mut vals = vals;
    vals[0] = 0.0;
    SampledPath::new(Arc::clone(grid), vals).unwrap()
}
