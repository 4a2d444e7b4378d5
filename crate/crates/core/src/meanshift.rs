//! One-dimensional flat-kernel Mean Shift.
//!
//! Every distinct value seeds a trajectory that repeatedly moves to the mean
//! of the values within `bandwidth` of it. Converged modes are deduplicated
//! (modes closer than `merge_fraction * bandwidth` collapse into the one with
//! the larger window population) and each value joins its nearest mode,
//! ties going to the larger mode.

use alloc::vec;
use alloc::vec::Vec;

use libm::{ceil, fabs};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Bandwidth {
    /// Mean distance from each value to its `ceil(q * n)`-th nearest other
    /// value.
    Quantile(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct MeanShiftConfig {
    pub bandwidth: Bandwidth,
    pub max_iter: usize,
    /// Convergence threshold as a fraction of the data range.
    pub tolerance: f64,
    pub merge_fraction: f64,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            bandwidth: Bandwidth::Quantile(0.3),
            max_iter: 300,
            tolerance: 1e-6,
            merge_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanShiftResult {
    /// Cluster of each input value, indexing into `modes`.
    pub labels: Vec<usize>,
    /// Modes in ascending order.
    pub modes: Vec<f64>,
    pub bandwidth: f64,
}

impl MeanShiftResult {
    pub fn n_clusters(&self) -> usize {
        self.modes.len()
    }
}

/// Quantile bandwidth estimator over a 1-D sample.
pub fn estimate_bandwidth(values: &[f64], quantile: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = (ceil(n as f64 * quantile) as usize).clamp(1, n - 1);
    let mut total = 0.0;
    for i in 0..n {
        // Grow a contiguous window around i by always taking the nearer side.
        let (mut lo, mut hi) = (i, i);
        let mut radius = 0.0_f64;
        for _ in 0..k {
            let left = if lo > 0 { Some(sorted[i] - sorted[lo - 1]) } else { None };
            let right = if hi + 1 < n { Some(sorted[hi + 1] - sorted[i]) } else { None };
            let step = match (left, right) {
                (Some(l), Some(r)) if l <= r => {
                    lo -= 1;
                    l
                }
                (Some(_), Some(r)) => {
                    hi += 1;
                    r
                }
                (Some(l), None) => {
                    lo -= 1;
                    l
                }
                (None, Some(r)) => {
                    hi += 1;
                    r
                }
                (None, None) => break,
            };
            radius = radius.max(step);
        }
        total += radius;
    }
    total / n as f64
}

/// Sorted sample with prefix sums for O(log n) window means.
struct Windowed {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl Windowed {
    fn new(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        Windowed { sorted, prefix }
    }

    /// Mean and population of the values within `h` of `center`.
    fn window(&self, center: f64, h: f64) -> (f64, usize) {
        let lo = self.sorted.partition_point(|&x| x < center - h);
        let hi = self.sorted.partition_point(|&x| x <= center + h);
        let count = hi - lo;
        if count == 0 {
            return (center, 0);
        }
        ((self.prefix[hi] - self.prefix[lo]) / count as f64, count)
    }
}

/// Applies one flat-kernel mean-shift step at `center`.
pub fn shift_once(values: &[f64], center: f64, bandwidth: f64) -> f64 {
    Windowed::new(values).window(center, bandwidth).0
}

pub fn mean_shift_1d(values: &[f64], config: &MeanShiftConfig) -> Result<MeanShiftResult> {
    if values.is_empty() {
        return Err(Error::EmptyInput("mean shift needs at least one value"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("mean shift values must be finite"));
    }
    let bandwidth = match config.bandwidth {
        Bandwidth::Quantile(q) if q > 0.0 && q <= 1.0 => estimate_bandwidth(values, q),
        Bandwidth::Fixed(h) if h >= 0.0 && h.is_finite() => h,
        _ => return Err(Error::InvalidConfig("bandwidth must be a quantile in (0, 1] or a non-negative width")),
    };
    let data = Windowed::new(values);
    let range = data.sorted[data.sorted.len() - 1] - data.sorted[0];
    if range == 0.0 {
        return Ok(MeanShiftResult {
            labels: vec![0; values.len()],
            modes: vec![data.sorted[0]],
            bandwidth,
        });
    }
    let tol = config.tolerance * range;

    let mut seeds = data.sorted.clone();
    seeds.dedup();
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(seeds.len());
    for seed in seeds {
        let mut m = seed;
        let mut count = 0;
        for _ in 0..config.max_iter.max(1) {
            let (next, c) = data.window(m, bandwidth);
            let moved = fabs(next - m);
            m = next;
            count = c;
            if moved < tol {
                break;
            }
        }
        candidates.push((m, count));
    }

    // Most populated modes first; ties favour the larger mode.
    candidates.sort_by(|a, b| b.1.cmp(&a.1).then(b.0.total_cmp(&a.0)));
    let merge_radius = config.merge_fraction * bandwidth;
    let mut kept: Vec<f64> = Vec::new();
    for (mode, _) in candidates {
        if kept.iter().all(|&k| fabs(k - mode) >= merge_radius && k != mode) {
            kept.push(mode);
        }
    }
    kept.sort_by(f64::total_cmp);

    let assign = |v: f64| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &m) in kept.iter().enumerate() {
            let d = fabs(v - m);
            // Ascending modes, so `<=` resolves ties toward the larger mode.
            if d <= best_d {
                best = i;
                best_d = d;
            }
        }
        best
    };
    let raw: Vec<usize> = values.iter().map(|&v| assign(v)).collect();

    // Drop modes that attracted no values.
    let mut used = vec![false; kept.len()];
    for &l in &raw {
        used[l] = true;
    }
    let mut remap = vec![usize::MAX; kept.len()];
    let mut modes = Vec::new();
    for (i, m) in kept.iter().enumerate() {
        if used[i] {
            remap[i] = modes.len();
            modes.push(*m);
        }
    }
    Ok(MeanShiftResult {
        labels: raw.into_iter().map(|l| remap[l]).collect(),
        modes,
        bandwidth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_is_one_cluster() {
        let r = mean_shift_1d(&[7.0], &MeanShiftConfig::default()).unwrap();
        assert_eq!(r.labels, vec![0]);
        assert_eq!(r.modes, vec![7.0]);
    }

    #[test]
    fn equal_values_are_one_cluster() {
        let r = mean_shift_1d(&[3.0; 9], &MeanShiftConfig::default()).unwrap();
        assert_eq!(r.n_clusters(), 1);
    }

    #[test]
    fn empty_input_errors() {
        assert!(mean_shift_1d(&[], &MeanShiftConfig::default()).is_err());
    }

    #[test]
    fn bandwidth_of_two_groups() {
        // n = 6, k = 2: second nearest other value, always inside the group.
        let h = estimate_bandwidth(&[5.0, 5.1, 4.9, 50.0, 49.5, 50.5], 0.3);
        assert!((h - (0.1 + 0.2 + 0.2 + 0.5 + 1.0 + 1.0) / 6.0).abs() < 1e-12);
    }

    #[test]
    fn fixed_bandwidth_separates_groups() {
        let cfg = MeanShiftConfig {
            bandwidth: Bandwidth::Fixed(2.0),
            ..MeanShiftConfig::default()
        };
        let r = mean_shift_1d(&[1.0, 1.5, 2.0, 10.0, 10.5], &cfg).unwrap();
        assert_eq!(r.n_clusters(), 2);
        assert_eq!(r.labels, vec![0, 0, 0, 1, 1]);
        assert!((r.modes[0] - 1.5).abs() < 1e-12);
        assert!((r.modes[1] - 10.25).abs() < 1e-12);
    }

    #[test]
    fn invalid_bandwidth_rejected() {
        let cfg = MeanShiftConfig {
            bandwidth: Bandwidth::Quantile(0.0),
            ..MeanShiftConfig::default()
        };
        assert!(mean_shift_1d(&[1.0, 2.0], &cfg).is_err());
    }
}
