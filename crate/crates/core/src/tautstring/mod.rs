//! Taut strings through discrete tubes.
//!
//! A tube prescribes, at every knot of a time grid, an interval
//! `[lower_i, upper_i]` the path must pass through, together with a fixed
//! start value and an end constraint (pinned value or interval). Among all
//! paths threading the tube, the taut string is the unique minimizer of the
//! energy `∫ h'(t)^2 dt`; with both endpoints fixed it simultaneously
//! minimizes every convex functional of the derivative (total variation
//! included), which is what makes it useful far beyond energy bookkeeping.
//!
//! The solver walks the knots once, maintaining two hulls anchored at the
//! last committed point of the string: the greatest convex minorant of the
//! ceiling knots and the least concave majorant of the floor knots. While
//! the hulls are compatible the string can still be drawn straight; when a
//! new knot makes them cross, the string is forced to bend at hull vertices,
//! which are committed as output knots and become the new anchor. Each knot
//! enters and leaves a hull at most once, so the sweep is O(n) amortized.
//! Bends at the ceiling are convex kinks and bends at the floor are concave
//! kinks, matching the optimality conditions of the quadratic program.
//!
//! An independent brute-force oracle (cyclic coordinate descent on the same
//! program) lives in [`oracle`] and is used by the test suites to certify
//! the sweep; it shares no code with it.

mod oracle;

pub use oracle::brute_force_oracle;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::paths::{SampledPath, TimeGrid};
use crate::stats::golden_section_min;

/// Constraint on the final knot of a tube.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EndConstraint {
    /// The path must end exactly at this value.
    FixedAt(f64),
    /// The path may end anywhere in `[lo, hi]` (intersected with the tube's
    /// own interval at the last knot).
    Interval { lo: f64, hi: f64 },
}

/// End-mode shorthand used when wrapping a tube around a reference path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndMode {
    /// End pinned to the reference path's final value.
    Fixed,
    /// End free within the tube's final interval.
    Free,
}

/// Per-knot contact diagnostic for a solved string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Contact {
    Lower,
    Upper,
    Interior,
}

impl std::fmt::Display for Contact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Contact::Lower => write!(f, "lower"),
            Contact::Upper => write!(f, "upper"),
            Contact::Interior => write!(f, "interior"),
        }
    }
}

impl std::str::FromStr for Contact {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Contact::Lower),
            "upper" => Ok(Contact::Upper),
            "interior" => Ok(Contact::Interior),
            other => Err(Error::Parse(format!("unknown contact flag '{other}'"))),
        }
    }
}

/// A discrete tube: per-knot intervals plus endpoint constraints.
///
/// Validated on construction; a `Tube` that exists is feasible. Zero-width
/// intervals (`lower_i == upper_i`) are allowed and force the path through
/// that point.
#[derive(Debug, Clone)]
pub struct Tube {
    grid: Arc<TimeGrid>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    start: f64,
    end: EndConstraint,
}

impl Tube {
    pub fn new(
        grid: Arc<TimeGrid>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        start: f64,
        end: EndConstraint,
    ) -> Result<Self> {
        let n = grid.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::Input(format!(
                "tube bounds need {} knots, got lower {} / upper {}",
                n,
                lower.len(),
                upper.len()
            )));
        }
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("tube bounds must be finite".into()));
        }
        for i in 0..n {
            if lower[i] > upper[i] {
                return Err(Error::Infeasible {
                    knot: i,
                    detail: format!("lower {} exceeds upper {}", lower[i], upper[i]),
                });
            }
        }
        if !(lower[0] <= start && start <= upper[0]) {
            return Err(Error::Infeasible {
                knot: 0,
                detail: format!(
                    "start value {start} outside initial interval [{}, {}]",
                    lower[0], upper[0]
                ),
            });
        }
        let last = n - 1;
        match end {
            EndConstraint::FixedAt(v) => {
                if !(lower[last] <= v && v <= upper[last]) {
                    return Err(Error::Infeasible {
                        knot: last,
                        detail: format!(
                            "end value {v} outside final interval [{}, {}]",
                            lower[last], upper[last]
                        ),
                    });
                }
            }
            EndConstraint::Interval { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::Input(format!(
                        "end interval is empty: [{lo}, {hi}]"
                    )));
                }
                if lo.max(lower[last]) > hi.min(upper[last]) {
                    return Err(Error::Infeasible {
                        knot: last,
                        detail: format!(
                            "end interval [{lo}, {hi}] misses final tube interval [{}, {}]",
                            lower[last], upper[last]
                        ),
                    });
                }
            }
        }
        Ok(Tube { grid, lower, upper, start, end })
    }

    /// Symmetric tube of the given radius around a reference path. The start
    /// is pinned to the reference start; the end follows `mode`.
    pub fn around(reference: &SampledPath, radius: f64, mode: EndMode) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Input(format!("tube radius must be positive, got {radius}")));
        }
        let lower: Vec<f64> = reference.values().iter().map(|v| v - radius).collect();
        let upper: Vec<f64> = reference.values().iter().map(|v| v + radius).collect();
        let last = reference.last();
        let end = match mode {
            EndMode::Fixed => EndConstraint::FixedAt(last),
            EndMode::Free => EndConstraint::Interval { lo: last - radius, hi: last + radius },
        };
        Tube::new(
            Arc::clone(reference.grid()),
            lower,
            upper,
            reference.first(),
            end,
        )
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn start(&self) -> f64 {
        self.start
    }
    pub fn end(&self) -> EndConstraint {
        self.end
    }

    /// Overall vertical extent, used to scale tolerances.
    pub(crate) fn extent(&self) -> f64 {
        let hi = self.upper.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = self.lower.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        (hi - lo).max(0.0)
    }

    /// Effective end interval (end constraint intersected with the tube's
    /// final knot interval). Nonempty by construction.
    fn end_interval(&self) -> (f64, f64) {
        let last = self.grid.len() - 1;
        match self.end {
            EndConstraint::FixedAt(v) => (v, v),
            EndConstraint::Interval { lo, hi } => {
                (lo.max(self.lower[last]), hi.min(self.upper[last]))
            }
        }
    }
}

/// A solved taut string: the path, its energy, and per-knot contact flags.
#[derive(Debug, Clone)]
pub struct TautStringResult {
    pub path: SampledPath,
    pub energy_value: f64,
    pub contact: Vec<Contact>,
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    i: usize,
    t: f64,
    y: f64,
}

#[inline]
fn slope(a: Pt, b: Pt) -> f64 {
    (b.y - a.y) / (b.t - a.t)
}

/// Funnel state for the hull sweep.
struct Funnel {
    apex: Pt,
    ceiling: VecDeque<Pt>,
    floor: VecDeque<Pt>,
    committed: Vec<Pt>,
}

impl Funnel {
    fn new(start: Pt) -> Self {
        Funnel {
            apex: start,
            ceiling: VecDeque::new(),
            floor: VecDeque::new(),
            committed: vec![start],
        }
    }

    fn commit(&mut self, p: Pt) {
        self.committed.push(p);
        self.apex = p;
    }

    /// Adds the ceiling point of the next knot, restoring hull convexity and
    /// advancing the apex along the floor hull if the funnel crossed.
    fn add_ceiling(&mut self, c: Pt) {
        while let Some(&b) = self.ceiling.back() {
            let a = if self.ceiling.len() >= 2 {
                self.ceiling[self.ceiling.len() - 2]
            } else {
                self.apex
            };
            // slopes along the ceiling hull must strictly increase
            if slope(a, b) >= slope(b, c) {
                self.ceiling.pop_back();
            } else {
                break;
            }
        }
        if self.ceiling.is_empty() {
            // c now caps the first slope; if that cap dips below the first
            // floor-hull slope the string must bend down at floor vertices
            while let Some(&f) = self.floor.front() {
                if slope(self.apex, c) < slope(self.apex, f) {
                    self.floor.pop_front();
                    self.commit(f);
                } else {
                    break;
                }
            }
        }
        self.ceiling.push_back(c);
    }

    /// Mirror image of [`add_ceiling`](Self::add_ceiling) for floor points.
    fn add_floor(&mut self, f: Pt) {
        while let Some(&b) = self.floor.back() {
            let a = if self.floor.len() >= 2 {
                self.floor[self.floor.len() - 2]
            } else {
                self.apex
            };
            // slopes along the floor hull must strictly decrease
            if slope(a, b) <= slope(b, f) {
                self.floor.pop_back();
            } else {
                break;
            }
        }
        if self.floor.is_empty() {
            while let Some(&u) = self.ceiling.front() {
                if slope(self.apex, f) > slope(self.apex, u) {
                    self.ceiling.pop_front();
                    self.commit(u);
                } else {
                    break;
                }
            }
        }
        self.floor.push_back(f);
    }
}

/// Runs the hull sweep for a fixed end value and returns the string's knots
/// (always including the first and last grid knot).
fn funnel_vertices(tube: &Tube, end_value: f64) -> Result<Vec<Pt>> {
    funnel_pass(
        tube.grid.times(),
        |i| (tube.lower[i], tube.upper[i]),
        tube.start,
        end_value,
    )
}

/// The sweep itself, reading per-knot boxes through a callback so batch
/// drivers can run it off a reference path without materializing bound
/// vectors.
fn funnel_pass(
    times: &[f64],
    box_at: impl Fn(usize) -> (f64, f64),
    start: f64,
    end_value: f64,
) -> Result<Vec<Pt>> {
    let n = times.len() - 1;
    let mut funnel = Funnel::new(Pt { i: 0, t: times[0], y: start });
    for i in 1..=n {
        let (lb, ub) = if i == n { (end_value, end_value) } else { box_at(i) };
        funnel.add_ceiling(Pt { i, t: times[i], y: ub });
        funnel.add_floor(Pt { i, t: times[i], y: lb });
    }
    // Close out: both hulls end at the tip (t_n, end_value). At most one of
    // them can still hold interior vertices; the string follows that hull.
    // Both holding vertices would mean the funnel invariant broke.
    let Funnel { ceiling, floor, mut committed, apex } = funnel;
    if ceiling.len() > 1 && floor.len() > 1 {
        return Err(Error::Solver(
            "taut-string funnel left both hulls bent at the final knot".into(),
        ));
    }
    let tail: Vec<Pt> = if ceiling.len() > 1 {
        ceiling.into_iter().collect()
    } else if floor.len() > 1 {
        floor.into_iter().collect()
    } else {
        vec![Pt { i: n, t: times[n], y: end_value }]
    };
    for p in tail {
        if p.i > apex.i {
            committed.push(p);
        }
    }
    debug_assert_eq!(committed.last().map(|p| p.i), Some(n));
    Ok(committed)
}

fn energy_of_vertices(verts: &[Pt]) -> f64 {
    let mut e = 0.0;
    for w in verts.windows(2) {
        let dv = w[1].y - w[0].y;
        e += dv * dv / (w[1].t - w[0].t);
    }
    e
}

fn classify_contacts(tube: &Tube, values: &[f64]) -> Vec<Contact> {
    let tol = 1e-9 * tube.extent().max(1.0);
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if (v - tube.lower[i]).abs() <= tol {
                Contact::Lower
            } else if (v - tube.upper[i]).abs() <= tol {
                Contact::Upper
            } else {
                Contact::Interior
            }
        })
        .collect()
}

/// Expands string knots to per-grid-knot values by linear interpolation.
fn fill_path(tube: &Tube, verts: &[Pt]) -> Result<SampledPath> {
    let times = tube.grid.times();
    let mut values = vec![0.0; times.len()];
    for w in verts.windows(2) {
        let (p, q) = (w[0], w[1]);
        values[p.i] = p.y;
        for k in p.i + 1..q.i {
            values[k] = p.y + (q.y - p.y) * ((times[k] - p.t) / (q.t - p.t));
        }
    }
    let last = verts.last().expect("nonempty vertex list");
    values[last.i] = last.y;
    SampledPath::new(Arc::clone(&tube.grid), values)
}

/// Solves with the end pinned to `end_value`, which must lie inside the
/// tube's final interval (callers minimizing their own end-value functional
/// probe this directly).
pub(crate) fn solve_fixed(tube: &Tube, end_value: f64) -> Result<TautStringResult> {
    let verts = funnel_vertices(tube, end_value)?;
    let energy_value = energy_of_vertices(&verts);
    let path = fill_path(tube, &verts)?;
    let contact = classify_contacts(tube, path.values());
    Ok(TautStringResult { path, energy_value, contact })
}

/// Solves a tube for its taut string.
///
/// Fixed ends run the hull sweep directly. Free (interval) ends minimize the
/// fixed-end energy over the endpoint — the energy is convex in the end
/// value — by golden-section search to absolute tolerance `1e-10` times the
/// interval half-width, then keep the best endpoint actually evaluated
/// (search result, interval ends, midpoint).
pub fn solve(tube: &Tube) -> Result<TautStringResult> {
    solve_with_end_hint(tube, None)
}

/// [`solve`] with an extra candidate end value to probe for interval ends.
///
/// Callers that know a distinguished feasible endpoint (e.g. the reference
/// path's own final value) pass it here; probing it guarantees orderings
/// like "free-end energy ≤ fixed-end energy" hold exactly, not just up to
/// search tolerance.
pub(crate) fn solve_with_end_hint(tube: &Tube, hint: Option<f64>) -> Result<TautStringResult> {
    let (a, b) = tube.end_interval();
    if a == b {
        return solve_fixed(tube, a);
    }
    let (best_v, _) = best_end_value(a, b, hint, |v| {
        Ok(energy_of_vertices(&funnel_vertices(tube, v)?))
    })?;
    solve_fixed(tube, best_v)
}

/// Minimizes a convex end-value energy over `[a, b]`: golden-section search
/// plus explicit probes of the interval ends, midpoint, and an optional
/// hint, keeping whichever evaluated point is best.
fn best_end_value(
    a: f64,
    b: f64,
    hint: Option<f64>,
    mut eval: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let tol = (0.5e-10 * (b - a)).max(f64::MIN_POSITIVE);
    let (gs_v, _) = golden_section_min(|v| eval(v).unwrap_or(f64::INFINITY), a, b, tol);
    let mut candidates = vec![gs_v, a, b, 0.5 * (a + b)];
    if let Some(h) = hint {
        candidates.push(h.clamp(a, b));
    }
    let mut best_v = candidates[0];
    let mut best_e = eval(best_v)?;
    for &v in &candidates[1..] {
        let e = eval(v)?;
        if e < best_e {
            best_e = e;
            best_v = v;
        }
    }
    Ok((best_v, best_e))
}

/// Energy of the taut string through the radius-`r` tube around `w`,
/// without materializing bound vectors, the filled path, or contact flags.
///
/// This is the Monte Carlo hot path; it performs exactly the same funnel
/// and end-value searches as [`taut_energy`], so the two agree bit for bit.
/// Preconditions (positive radius, start at 0) are the caller's job.
pub(crate) fn standard_tube_energy(w: &SampledPath, r: f64, fixed_end: bool) -> Result<f64> {
    let times = w.times();
    let wv = w.values();
    let box_at = |i: usize| (wv[i] - r, wv[i] + r);
    let last = wv[wv.len() - 1];
    if fixed_end {
        return Ok(energy_of_vertices(&funnel_pass(times, box_at, wv[0], last)?));
    }
    let (a, b) = (last - r, last + r);
    let (_, best_e) = best_end_value(a, b, Some(last), |v| {
        Ok(energy_of_vertices(&funnel_pass(times, &box_at, wv[0], v)?))
    })?;
    Ok(best_e)
}

/// Taut-string energy of the tube of radius `r` around a path started at 0:
/// the free-end variant if `mode` is `Free`, the pinned variant otherwise.
/// Returns the full solve result; the energy is `result.energy_value`.
pub fn taut_energy(w: &SampledPath, r: f64, mode: EndMode) -> Result<TautStringResult> {
    if w.first() != 0.0 {
        return Err(Error::Input(format!(
            "reference path must start at 0, got {}",
            w.first()
        )));
    }
    let tube = Tube::around(w, r, mode)?;
    match mode {
        EndMode::Fixed => solve(&tube),
        EndMode::Free => solve_with_end_hint(&tube, Some(w.last())),
    }
}

/// Free-knot approximant of a path on `[0, 1]`: knots at successive first
/// grid times where the path has moved at least `eps/2` from the previous
/// knot value (overshoot kept), linearly interpolated, and extended to t = 1
/// by holding the last knot value constant.
pub fn free_knot_string(w: &SampledPath, eps: f64) -> Result<SampledPath> {
    if !(eps > 0.0) {
        return Err(Error::Input(format!("eps must be positive, got {eps}")));
    }
    if (w.horizon() - 1.0).abs() > 1e-12 {
        return Err(Error::Input(format!(
            "free-knot construction expects a path on [0, 1], horizon is {}",
            w.horizon()
        )));
    }
    let times = w.times();
    let vals = w.values();
    let half = 0.5 * eps;
    let mut kt = vec![times[0]];
    let mut kv = vec![vals[0]];
    let mut anchor = vals[0];
    for i in 1..times.len() {
        if (vals[i] - anchor).abs() >= half {
            kt.push(times[i]);
            kv.push(vals[i]);
            anchor = vals[i];
        }
    }
    if *kt.last().unwrap() < w.horizon() {
        kt.push(w.horizon());
        kv.push(anchor);
    }
    SampledPath::new(Arc::new(TimeGrid::new(kt)?), kv)
}

/// Number of threshold crossings in a free-knot approximant (its knot count
/// minus the start knot and minus the constant extension knot if present).
pub fn crossing_count(w: &SampledPath, g: &SampledPath) -> usize {
    let extended = g.last() != w.last() || g.times().len() < 2 || {
        // extension knot duplicates the previous value
        let v = g.values();
        v.len() >= 2 && v[v.len() - 1] == v[v.len() - 2]
    };
    g.len() - 1 - usize::from(extended)
}
