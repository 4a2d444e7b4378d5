//! Per-user metric series of a cohort: active size, polarity percentages and
//! unique topics, plus the standard lockdown report over them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::cohort::CohortConfig;
use crate::egonet::{build_snapshot, EgoNetworkSnapshot};
use crate::error::Result;
use crate::model::{within_period, InteractionRecord, PeriodSchedule, RecordStore, UserId};
use crate::semantic::topic_profile;
use crate::signed::{polarity_percentages, signed_ties, SignedConfig};
use crate::stats::{lockdown_report, LockdownReport, MetricInput, MetricSeries, ReportOptions};

pub const SIZE: &str = "active_size";
pub const PCT_NEGATIVE: &str = "pct_negative";
pub const PCT_POSITIVE: &str = "pct_positive";
pub const TOPICS: &str = "unique_topics";

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PipelineParams {
    pub cohort: CohortConfig,
    pub signed: SignedConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Alphas {
    pub structure: f64,
    pub polarity: f64,
    pub topics: f64,
}

impl Default for Alphas {
    fn default() -> Self {
        Alphas { structure: 0.01, polarity: 0.01, topics: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EgoPeriodMetrics {
    pub period: usize,
    pub active_size: usize,
    pub n_rings: usize,
    pub circle_sizes: Vec<usize>,
    /// Missing when no active tie carries a polarity label.
    pub pct_negative: Option<f64>,
    pub pct_positive: Option<f64>,
    pub unlabeled_ties: usize,
    /// Missing when the period has no topic-labeled record.
    pub unique_topics: Option<usize>,
}

/// Snapshot and metrics of one ego in every period. `records` holds the
/// ego's records in canonical order.
pub fn ego_metrics(
    ego: UserId,
    records: &[InteractionRecord],
    schedule: &PeriodSchedule,
    params: &PipelineParams,
) -> Result<Vec<(EgoNetworkSnapshot, EgoPeriodMetrics)>> {
    schedule
        .periods()
        .iter()
        .map(|p| {
            let in_period = within_period(records, p);
            let snapshot = build_snapshot(ego, p, in_period, &params.cohort.egonet)?;
            let signed = signed_ties(&snapshot, in_period, |_| true, &params.signed);
            let polarity = polarity_percentages(&snapshot, &signed.ties).ok();
            let topics = topic_profile(ego, p, in_period);
            let m = EgoPeriodMetrics {
                period: p.index,
                active_size: snapshot.active_size,
                n_rings: snapshot.n_rings(),
                circle_sizes: snapshot.circle_sizes(),
                pct_negative: polarity.map(|s| s.pct_negative),
                pct_positive: polarity.map(|s| s.pct_positive),
                unlabeled_ties: signed.unlabeled_ties,
                unique_topics: topics.has_labels().then_some(topics.unique_count),
            };
            Ok((snapshot, m))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortMetrics {
    pub size: MetricSeries,
    pub pct_negative: MetricSeries,
    pub pct_positive: MetricSeries,
    pub topics: MetricSeries,
    /// Egos per period without any signed active tie.
    pub polarity_excluded: Vec<usize>,
    pub unlabeled_ties: usize,
}

impl CohortMetrics {
    pub fn new(periods: usize) -> Self {
        CohortMetrics {
            size: MetricSeries::new(SIZE, periods),
            pct_negative: MetricSeries::new(PCT_NEGATIVE, periods),
            pct_positive: MetricSeries::new(PCT_POSITIVE, periods),
            topics: MetricSeries::new(TOPICS, periods),
            polarity_excluded: alloc::vec![0; periods],
            unlabeled_ties: 0,
        }
    }

    pub fn insert(&mut self, user: UserId, rows: &[EgoPeriodMetrics]) {
        for m in rows {
            self.size.set(user, m.period, m.active_size as f64);
            match (m.pct_negative, m.pct_positive) {
                (Some(n), Some(p)) => {
                    self.pct_negative.set(user, m.period, n);
                    self.pct_positive.set(user, m.period, p);
                }
                _ => self.polarity_excluded[m.period] += 1,
            }
            if let Some(t) = m.unique_topics {
                self.topics.set(user, m.period, t as f64);
            }
            self.unlabeled_ties += m.unlabeled_ties;
        }
    }
}

/// Metrics of every cohort user, sequentially.
pub fn cohort_metrics(
    store: &RecordStore,
    cohort: &[UserId],
    schedule: &PeriodSchedule,
    params: &PipelineParams,
) -> Result<CohortMetrics> {
    let mut out = CohortMetrics::new(schedule.len());
    for &user in cohort {
        let rows: Vec<EgoPeriodMetrics> = ego_metrics(user, store.ego_records(user), schedule, params)?
            .into_iter()
            .map(|(_, m)| m)
            .collect();
        out.insert(user, &rows);
    }
    Ok(out)
}

/// Lockdown tests over the four standard metrics. Interval levels are
/// `1 - alpha` of each metric family.
pub fn standard_report(metrics: &CohortMetrics, alphas: &Alphas, options: ReportOptions) -> LockdownReport {
    let inputs = [
        MetricInput { series: &metrics.size, alpha: alphas.structure, level: 1.0 - alphas.structure },
        MetricInput { series: &metrics.pct_negative, alpha: alphas.polarity, level: 1.0 - alphas.polarity },
        MetricInput { series: &metrics.pct_positive, alpha: alphas.polarity, level: 1.0 - alphas.polarity },
        MetricInput { series: &metrics.topics, alpha: alphas.topics, level: 1.0 - alphas.topics },
    ];
    lockdown_report(&inputs, options)
}

/// Collects metric series by name.
pub fn series_by_name(metrics: &CohortMetrics) -> BTreeMap<&'static str, &MetricSeries> {
    let mut m = BTreeMap::new();
    m.insert(SIZE, &metrics.size);
    m.insert(PCT_NEGATIVE, &metrics.pct_negative);
    m.insert(PCT_POSITIVE, &metrics.pct_positive);
    m.insert(TOPICS, &metrics.topics);
    m
}
