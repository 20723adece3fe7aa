//! Brute-force reference solver for small tubes.
//!
//! Cyclic coordinate descent on the energy quadratic program: each pass
//! replaces every free value by its exact one-dimensional minimizer clamped
//! into the knot interval. The objective is strictly convex with box
//! constraints, so the iteration converges to the unique optimum; it is
//! deliberately naive and shares nothing with the hull sweep in the parent
//! module, which it certifies in tests.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::paths::{energy, SampledPath};

use super::{classify_contacts, EndConstraint, TautStringResult, Tube};

/// Knot-count guard: beyond this the quadratic-time descent gets slow and
/// its fixed stopping rule loses headroom.
const MAX_KNOTS: usize = 200;

const MAX_SWEEPS: usize = 2_000_000;

/// Solves the tube by clamped cyclic coordinate descent.
///
/// Intended for cross-checks on modest tubes (at most 200 knots); returns an
/// input error above that and an internal error if the descent fails to
/// settle, which would indicate a bug rather than a hard instance.
pub fn brute_force_oracle(tube: &Tube) -> Result<TautStringResult> {
    let times = tube.grid().times();
    let n = times.len() - 1;
    if times.len() > MAX_KNOTS {
        return Err(Error::Input(format!(
            "brute-force oracle handles at most {MAX_KNOTS} knots, got {}",
            times.len()
        )));
    }
    let lower = tube.lower();
    let upper = tube.upper();
    let (end_lo, end_hi) = match tube.end() {
        EndConstraint::FixedAt(v) => (v, v),
        EndConstraint::Interval { lo, hi } => (lo.max(lower[n]), hi.min(upper[n])),
    };

    // feasible start: clamped chord from the start value to the end box
    let end_guess = 0.5 * (end_lo + end_hi);
    let mut h: Vec<f64> = (0..=n)
        .map(|i| {
            let frac = times[i] / times[n];
            let chord = tube.start() + frac * (end_guess - tube.start());
            chord.clamp(lower[i], upper[i])
        })
        .collect();
    h[0] = tube.start();
    h[n] = end_guess;

    let scale = tube.extent().max(1.0);
    let stop = 1e-13 * scale;

    let mut settled = false;
    for _ in 0..MAX_SWEEPS {
        let mut largest = 0.0f64;
        let mut relax = |i: usize, h: &mut Vec<f64>| {
            let new = if i == n {
                // free-end knot: unconstrained minimizer equals the neighbor
                h[n - 1].clamp(end_lo, end_hi)
            } else {
                let dt_l = times[i] - times[i - 1];
                let dt_r = times[i + 1] - times[i];
                let star =
                    (h[i - 1] / dt_l + h[i + 1] / dt_r) / (1.0 / dt_l + 1.0 / dt_r);
                star.clamp(lower[i], upper[i])
            };
            largest = largest.max((new - h[i]).abs());
            h[i] = new;
        };
        for i in 1..n {
            relax(i, &mut h);
        }
        if end_lo < end_hi {
            relax(n, &mut h);
        }
        for i in (1..n).rev() {
            relax(i, &mut h);
        }
        if largest < stop {
            settled = true;
            break;
        }
    }
    if !settled {
        return Err(Error::Solver(
            "coordinate-descent oracle did not settle within the sweep budget".into(),
        ));
    }

    let path = SampledPath::new(Arc::clone(tube.grid()), h)?;
    let energy_value = energy(&path);
    let contact = classify_contacts(tube, path.values());
    Ok(TautStringResult { path, energy_value, contact })
}
