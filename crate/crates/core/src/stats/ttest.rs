use libm::{fabs, sqrt};

use super::{mean, sample_variance, student_t};
use crate::error::{Error, Result};

/// One-sided null hypothesis about the mean of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Hypothesis {
    /// `H0^-`: mean <= 0. Rejected by significantly positive samples.
    NonPositive,
    /// `H0^+`: mean >= 0. Rejected by significantly negative samples.
    NonNegative,
}

impl Hypothesis {
    pub const BOTH: [Hypothesis; 2] = [Hypothesis::NonPositive, Hypothesis::NonNegative];

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::NonPositive => "H0_minus",
            Hypothesis::NonNegative => "H0_plus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Outcome {
    Accepted,
    Rejected,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Accepted => "ACCEPTED",
            Outcome::Rejected => "REJECTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TTestResult {
    pub hypothesis: Hypothesis,
    pub n: usize,
    pub mean: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub outcome: Outcome,
    /// Zero sample variance: the p-value is 0, 1/2 or 1 by the sign of the mean.
    pub degenerate: bool,
}

/// One-sample Student t-test of the mean against zero.
pub fn one_sided_t_test(sample: &[f64], hypothesis: Hypothesis, alpha: f64) -> Result<TTestResult> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    let m = mean(sample);
    let var = sample_variance(sample, m).max(0.0);
    let scale = sample.iter().fold(0.0_f64, |acc, x| acc.max(fabs(*x)));
    let degenerate = var <= (1e-14 * scale) * (1e-14 * scale);
    let t_stat = if degenerate {
        if m > 0.0 {
            f64::INFINITY
        } else if m < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    } else {
        m / sqrt(var / n as f64)
    };
    let dof = (n - 1) as f64;
    let p_value = match hypothesis {
        Hypothesis::NonPositive => student_t::sf(t_stat, dof),
        Hypothesis::NonNegative => student_t::cdf(t_stat, dof),
    };
    let outcome = if p_value < alpha {
        Outcome::Rejected
    } else {
        Outcome::Accepted
    };
    Ok(TTestResult {
        hypothesis,
        n,
        mean: m,
        t_stat,
        p_value,
        alpha,
        outcome,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfidenceInterval {
    pub n: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

impl ConfidenceInterval {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

/// Two-sided t interval `mean ± t_{(1+level)/2, n-1} · s/√n`.
pub fn confidence_interval(sample: &[f64], level: f64) -> Result<ConfidenceInterval> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewObservations { needed: 2, got: n });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidConfig("confidence level must be in (0, 1)"));
    }
    let m = mean(sample);
    let var = sample_variance(sample, m).max(0.0);
    let crit = student_t::quantile(0.5 * (1.0 + level), (n - 1) as f64);
    let half = crit * sqrt(var / n as f64);
    Ok(ConfidenceInterval {
        n,
        mean: m,
        lower: m - half,
        upper: m + half,
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn all_zero_sample_accepts_both() {
        let zeros = vec![0.0; 12];
        for h in Hypothesis::BOTH {
            let r = one_sided_t_test(&zeros, h, 0.01).unwrap();
            assert_eq!(r.p_value, 0.5);
            assert_eq!(r.outcome, Outcome::Accepted);
            assert!(r.degenerate);
        }
    }

    #[test]
    fn constant_positive_sample_is_degenerate_rejection() {
        let ones = vec![1.0; 30];
        let minus = one_sided_t_test(&ones, Hypothesis::NonPositive, 0.01).unwrap();
        assert!(minus.degenerate);
        assert_eq!(minus.p_value, 0.0);
        assert_eq!(minus.outcome, Outcome::Rejected);
        let plus = one_sided_t_test(&ones, Hypothesis::NonNegative, 0.01).unwrap();
        assert_eq!(plus.p_value, 1.0);
        assert_eq!(plus.outcome, Outcome::Accepted);
    }

    #[test]
    fn known_t_statistic() {
        // mean 2, s = sqrt(2.5), n = 5 -> t = 2 / sqrt(0.5)
        let s = [0.0, 1.0, 2.0, 3.0, 4.0];
        let r = one_sided_t_test(&s, Hypothesis::NonPositive, 0.05).unwrap();
        assert!((r.t_stat - 2.0 / libm::sqrt(0.5)).abs() < 1e-12);
        assert_eq!(r.n, 5);
    }

    #[test]
    fn too_small_samples_error() {
        assert!(one_sided_t_test(&[1.0], Hypothesis::NonPositive, 0.01).is_err());
        assert!(confidence_interval(&[1.0], 0.99).is_err());
        assert!(confidence_interval(&[], 0.99).is_err());
    }

    #[test]
    fn constant_sample_has_zero_width_interval() {
        let ci = confidence_interval(&[3.5; 8], 0.99).unwrap();
        assert_eq!(ci.lower, 3.5);
        assert_eq!(ci.upper, 3.5);
    }

    #[test]
    fn symmetric_sample_gives_symmetric_interval() {
        let ci = confidence_interval(&[-1.0, 1.0], 0.99).unwrap();
        assert_eq!(ci.mean, 0.0);
        assert_eq!(ci.lower, -ci.upper);
        assert!(ci.upper > 0.0);
    }

    #[test]
    fn p_values_are_complementary() {
        let s: Vec<f64> = (0..40).map(|i| libm::sin(i as f64) + 0.1).collect();
        let a = one_sided_t_test(&s, Hypothesis::NonPositive, 0.01).unwrap();
        let b = one_sided_t_test(&s, Hypothesis::NonNegative, 0.01).unwrap();
        assert!((a.p_value + b.p_value - 1.0).abs() < 1e-12);
    }
}
