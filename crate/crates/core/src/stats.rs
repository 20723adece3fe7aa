//! Small numeric utilities shared by the statistics-producing modules:
//! fixed-range histograms, significant-digit formatting for data files,
//! and a golden-section line search.

use serde::{Deserialize, Serialize};

/// Histogram over a fixed range `[lo, hi)` with equal-width bins.
///
/// Bins are closed on the left. Samples outside the range are counted in the
/// nearest edge bin so that the total count always equals the number of
/// samples added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo, "histogram needs bins > 0 and hi > lo");
        Histogram { lo, hi, counts: vec![0; bins] }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    /// Left edge of bin `b`.
    pub fn edge(&self, b: usize) -> f64 {
        self.lo + self.bin_width() * b as f64
    }

    pub fn add(&mut self, x: f64) {
        let n = self.counts.len();
        let raw = ((x - self.lo) / (self.hi - self.lo) * n as f64).floor();
        let b = if raw < 0.0 {
            0
        } else if raw >= n as f64 {
            n - 1
        } else {
            raw as usize
        };
        self.counts[b] += 1;
    }

    /// Merge another histogram with identical geometry into this one.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.counts.len(), other.counts.len(), "bin count mismatch");
        assert!(self.lo == other.lo && self.hi == other.hi, "range mismatch");
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// L1 distance between the empirical bin frequencies and reference bin
    /// masses (same length, expected to sum to ~1).
    pub fn l1_distance(&self, reference_mass: &[f64]) -> f64 {
        assert_eq!(reference_mass.len(), self.counts.len());
        let total = self.total().max(1) as f64;
        self.counts
            .iter()
            .zip(reference_mass)
            .map(|(&c, &m)| (c as f64 / total - m).abs())
            .sum()
    }
}

/// Formats a float in plain decimal notation with `sig` significant digits
/// (17 round-trips an `f64` exactly). Used for all CSV output.
pub fn fmt_sig(v: f64, sig: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    // digits after the decimal point so that total significant digits = sig
    let prec = (sig as i32 - 1 - mag).clamp(0, 60) as usize;
    format!("{v:.prec$}")
}

/// Rounds `v` to `sig` significant digits (used when emitting JSON reports
/// that promise a fixed precision).
pub fn round_sig(v: f64, sig: u32) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    let mag = v.abs().log10().floor() as i32;
    let scale = 10f64.powi(sig as i32 - 1 - mag);
    (v * scale).round() / scale
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket is narrower than `tol` and returns the best point
/// actually evaluated, so the reported minimum is attained by a concrete
/// probe rather than an interpolated guess.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    debug_assert!(b >= a);
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut best = (a, f(a));
    let fb = f(b);
    if fb < best.1 {
        best = (b, fb);
    }
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
        let (xc, fc) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
        if fc < best.1 {
            best = (xc, fc);
        }
    }
    best
}

/// Mean, population variance, and second moment of a sample in one pass
/// (Welford update). Population variance keeps the exact identity
/// `second_moment = variance + mean^2` up to rounding.
pub fn moments(values: &[f64]) -> (f64, f64, f64) {
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (k, &v) in values.iter().enumerate() {
        let delta = v - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (v - mean);
    }
    let n = values.len().max(1) as f64;
    let var = m2 / n;
    (mean, var, var + mean * mean)
}

/// Median via a sorted copy; even-length samples average the middle pair.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_edges_and_overflow() {
        let mut h = Histogram::new(0.0, 2.0, 4);
        for x in [0.0, 0.49, 0.5, 1.99, 2.0, 2.5, -1.0] {
            h.add(x);
        }
        // out-of-range samples land in edge bins, so total is preserved
        assert_eq!(h.total(), 7);
        assert_eq!(h.counts, vec![3, 1, 0, 3]);
        assert_eq!(h.bin_width(), 0.5);
        assert_eq!(h.edge(1), 0.5);
    }

    #[test]
    fn fmt_sig_round_trips_f64() {
        for &v in &[
            0.5,
            std::f64::consts::PI,
            1.0 / 3.0,
            123456.789,
            1.23e-7,
            -9.869604401089358,
        ] {
            let s = fmt_sig(v, 17);
            assert!(!s.contains('e'), "decimal notation expected: {s}");
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "{s} did not round-trip");
        }
    }

    #[test]
    fn round_sig_truncates_precision() {
        let r = round_sig(std::f64::consts::FRAC_PI_2, 12);
        assert!((r - 1.57079632679).abs() < 1e-12, "{r}");
        assert_eq!(round_sig(0.0, 12), 0.0);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        // x is only determined up to the fp flat zone of the objective,
        // about sqrt(eps) wide for a quadratic; the value is much tighter
        let (x, fx) = golden_section_min(|x| (x - 1.25) * (x - 1.25) + 3.0, -4.0, 6.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-6, "{x}");
        assert!((fx - 3.0).abs() < 1e-14);
    }

    #[test]
    fn moments_match_hand_values() {
        let (mean, var, m2) = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mean, 2.5);
        assert!((var - 1.25).abs() < 1e-15);
        assert!((m2 - (var + mean * mean)).abs() < 1e-12);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
