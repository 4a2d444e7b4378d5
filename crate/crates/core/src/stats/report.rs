use alloc::string::String;
use alloc::vec::Vec;

use super::growth::{growth_second_difference, GrowthExclusions, MetricSeries};
use super::ttest::{confidence_interval, one_sided_t_test, Hypothesis, Outcome, TTestResult};

/// A confidence interval attached to a period (or to the center of a triple).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalEstimate {
    pub index: usize,
    pub n: usize,
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LockdownRow {
    /// `(i - 1, i, i + 1)`.
    pub triple: [usize; 3],
    pub hypothesis: Hypothesis,
    /// `None` when fewer than two users have both growth rates defined.
    pub result: Option<TTestResult>,
}

impl LockdownRow {
    pub fn rejected(&self) -> bool {
        matches!(self.result, Some(r) if r.outcome == Outcome::Rejected)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub metric: String,
    pub alpha: f64,
    pub level: f64,
    pub rows: Vec<LockdownRow>,
    pub period_means: Vec<IntervalEstimate>,
    /// Mean and interval of the growth-rate second difference, indexed by
    /// the triple's center period.
    pub difference_means: Vec<IntervalEstimate>,
    pub exclusions: GrowthExclusions,
}

impl MetricReport {
    pub fn row(&self, center: usize, hypothesis: Hypothesis) -> Option<&LockdownRow> {
        self.rows
            .iter()
            .find(|r| r.triple[1] == center && r.hypothesis == hypothesis)
    }

    /// `(center, hypothesis)` of every rejected row.
    pub fn rejections(&self) -> Vec<(usize, Hypothesis)> {
        self.rows
            .iter()
            .filter(|r| r.rejected())
            .map(|r| (r.triple[1], r.hypothesis))
            .collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LockdownReport {
    pub metrics: Vec<MetricReport>,
}

impl LockdownReport {
    pub fn metric(&self, name: &str) -> Option<&MetricReport> {
        self.metrics.iter().find(|m| m.metric == name)
    }
}

pub struct MetricInput<'a> {
    pub series: &'a MetricSeries,
    /// Significance level of both one-sided tests.
    pub alpha: f64,
    /// Confidence level of the plotted intervals.
    pub level: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportOptions {
    /// Divide alpha by the number of tests per metric.
    pub bonferroni: bool,
}

/// Per-period mean and confidence interval of a metric across users.
pub fn period_intervals(series: &MetricSeries, level: f64) -> Vec<IntervalEstimate> {
    (0..series.periods)
        .filter_map(|p| interval(p, &series.column(p), level))
        .collect()
}

fn interval(index: usize, sample: &[f64], level: f64) -> Option<IntervalEstimate> {
    let ci = confidence_interval(sample, level).ok()?;
    Some(IntervalEstimate {
        index,
        n: ci.n,
        mean: ci.mean,
        lower: ci.lower,
        upper: ci.upper,
        level,
    })
}

/// Tests `H0^-` and `H0^+` on the growth-rate second difference of every
/// metric at every consecutive triple of periods.
pub fn lockdown_report(inputs: &[MetricInput<'_>], options: ReportOptions) -> LockdownReport {
    let metrics = inputs
        .iter()
        .map(|input| {
            let series = input.series;
            let diffs = growth_second_difference(series);
            let centers = 1..series.periods.saturating_sub(1);
            let tests = 2 * centers.len();
            let alpha = if options.bonferroni && tests > 0 {
                input.alpha / tests as f64
            } else {
                input.alpha
            };
            let mut rows = Vec::with_capacity(tests);
            let mut difference_means = Vec::new();
            for center in centers {
                let sample = diffs.sample(center);
                for hypothesis in Hypothesis::BOTH {
                    rows.push(LockdownRow {
                        triple: [center - 1, center, center + 1],
                        hypothesis,
                        result: one_sided_t_test(&sample, hypothesis, alpha).ok(),
                    });
                }
                difference_means.extend(interval(center, &sample, input.level));
            }
            MetricReport {
                metric: series.name.clone(),
                alpha,
                level: input.level,
                rows,
                period_means: period_intervals(series, input.level),
                difference_means,
                exclusions: diffs.exclusions,
            }
        })
        .collect();
    LockdownReport { metrics }
}
