//! Longitudinal statistics: growth rates, second differences of growth
//! rates, one-sided t-tests and t-based confidence intervals.

mod growth;
mod report;
pub mod student_t;
mod ttest;

pub use growth::{
    growth_rate, growth_second_difference, GrowthExclusions, GrowthTriple, MetricSeries,
    SecondDifferences,
};
pub use report::{
    lockdown_report, period_intervals, IntervalEstimate, LockdownReport, LockdownRow,
    MetricInput, MetricReport, ReportOptions,
};
pub use ttest::{
    confidence_interval, one_sided_t_test, ConfidenceInterval, Hypothesis, Outcome, TTestResult,
};

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (two-pass).
pub(crate) fn sample_variance(xs: &[f64], mean: f64) -> f64 {
    let n = xs.len() as f64;
    let (ss, comp) = xs.iter().fold((0.0, 0.0), |(ss, comp), &x| {
        let d = x - mean;
        (ss + d * d, comp + d)
    });
    (ss - comp * comp / n) / (n - 1.0)
}
