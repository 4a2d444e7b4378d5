//! Longitudinal cohort selection: regular users, account activity and
//! per-period ego-network-size outliers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use libm::{ceil, floor};

use crate::egonet::{contact_frequencies, EgonetConfig};
use crate::error::{Error, Result};
use crate::model::{InteractionKind, InteractionRecord, Period, PeriodSchedule, RecordStore, UserId, SECONDS_PER_MONTH};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CohortConfig {
    /// Share of a period's months that must contain an interaction.
    pub regular_month_share: f64,
    /// Allowed gap beyond the mean inter-event interval, in months.
    pub activity_slack_months: f64,
    pub iqr_multiplier: f64,
    pub fence_population: FencePopulation,
    /// Kinds that count as interactions for regularity.
    pub regular_kinds: Vec<InteractionKind>,
    pub egonet: EgonetConfig,
}

/// Users whose active sizes set a period's outlier fences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FencePopulation {
    /// Users regular in that period.
    #[default]
    PeriodRegular,
    /// Users regular and active in that period.
    PeriodRegularActive,
    /// Users regular and active in every period.
    Cohort,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            regular_month_share: 0.5,
            activity_slack_months: 6.0,
            iqr_multiplier: 1.5,
            fence_population: FencePopulation::default(),
            regular_kinds: InteractionKind::ALL.to_vec(),
            egonet: EgonetConfig::default(),
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.regular_month_share > 0.0 && self.regular_month_share <= 1.0) {
            return Err(Error::InvalidConfig("regular_month_share must be in (0, 1]"));
        }
        if !(self.activity_slack_months >= 0.0 && self.activity_slack_months.is_finite()) {
            return Err(Error::InvalidConfig("activity_slack_months must be non-negative"));
        }
        if !(self.iqr_multiplier >= 0.0 && self.iqr_multiplier.is_finite()) {
            return Err(Error::InvalidConfig("iqr_multiplier must be non-negative"));
        }
        if self.regular_kinds.is_empty() {
            return Err(Error::InvalidConfig("regular_kinds must not be empty"));
        }
        Ok(())
    }
}

/// Number of distinct months with activity needed in a period of `months`.
pub fn required_months(months: u32, share: f64) -> usize {
    ceil(share * f64::from(months) - 1e-9) as usize
}

/// True when `user` interacted in at least `ceil(share * M)` distinct calendar
/// months of `period`.
pub fn is_regular(
    user: UserId,
    period: &Period,
    records: &[InteractionRecord],
    share: f64,
    kinds: &[InteractionKind],
) -> bool {
    let months: BTreeSet<i64> = records
        .iter()
        .filter(|r| r.ego == user && period.contains(r.timestamp) && kinds.contains(&r.kind))
        .map(|r| r.timestamp.month_key())
        .collect();
    let needed = required_months(period.months, share);
    needed > 0 && months.len() >= needed
}

/// True when the gap between the end of `period` and the user's last record
/// is shorter than their mean inter-event interval plus the slack. Users with
/// fewer than two records up to the period end are not active.
pub fn is_account_active(user: UserId, period: &Period, records: &[InteractionRecord], slack_months: f64) -> bool {
    let mut count = 0usize;
    let mut first = i64::MAX;
    let mut last = i64::MIN;
    for r in records.iter().filter(|r| r.ego == user && r.timestamp <= period.end) {
        count += 1;
        first = first.min(r.timestamp.0);
        last = last.max(r.timestamp.0);
    }
    if count < 2 {
        return false;
    }
    let mean_interval = (last - first) as f64 / (count - 1) as f64;
    let gap = (period.end.0 - last) as f64;
    gap < mean_interval + slack_months * SECONDS_PER_MONTH
}

/// Linear-interpolation quantile of an ascending sample.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = floor(h) as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Tukey fences `(Q1 - k * IQR, Q3 + k * IQR)`.
pub fn iqr_outlier_fences(values: &[f64], multiplier: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::EmptyInput("fences need at least one value"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok((q1 - multiplier * iqr, q3 + multiplier * iqr))
}

/// Regularity, activity and active ego-network size of one user in one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PeriodStatus {
    pub regular: bool,
    pub active: bool,
    pub active_size: usize,
}

/// Status of `user` in every period. `records` may hold other users' records
/// too; only the user's own are read.
pub fn user_status(
    user: UserId,
    records: &[InteractionRecord],
    schedule: &PeriodSchedule,
    config: &CohortConfig,
) -> Vec<PeriodStatus> {
    schedule
        .periods()
        .iter()
        .map(|p| PeriodStatus {
            regular: is_regular(user, p, records, config.regular_month_share, &config.regular_kinds),
            active: is_account_active(user, p, records, config.activity_slack_months),
            active_size: contact_frequencies(user, p, records, &config.egonet)
                .iter()
                .filter(|t| t.frequency >= config.egonet.active_threshold)
                .count(),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortFilterReport {
    /// Users remaining after each filter, in application order.
    pub per_stage_counts: Vec<(String, usize)>,
    /// Fences per period index, computed over that period's regular and
    /// active users.
    pub outlier_fences: BTreeMap<usize, (f64, f64)>,
    /// Users flagged as size outliers per period.
    pub outliers_per_period: BTreeMap<usize, usize>,
}

/// Reduces per-user statuses to the longitudinal cohort.
pub fn cohort_from_status(
    statuses: &BTreeMap<UserId, Vec<PeriodStatus>>,
    periods: usize,
    config: &CohortConfig,
) -> (Vec<UserId>, CohortFilterReport) {
    let mut report = CohortFilterReport::default();
    report.per_stage_counts.push(("all_users".into(), statuses.len()));

    let regular: Vec<UserId> = statuses
        .iter()
        .filter(|(_, s)| s.len() == periods && s.iter().all(|p| p.regular))
        .map(|(u, _)| *u)
        .collect();
    report.per_stage_counts.push(("regular_all_periods".into(), regular.len()));

    let active: Vec<UserId> = regular
        .iter()
        .copied()
        .filter(|u| statuses[u].iter().all(|p| p.active))
        .collect();
    report.per_stage_counts.push(("active_all_periods".into(), active.len()));

    let mut outliers: BTreeSet<UserId> = BTreeSet::new();
    for i in 0..periods {
        let eligible: Vec<(UserId, f64)> = statuses
            .iter()
            .filter(|(u, s)| {
                s.len() == periods
                    && match config.fence_population {
                        FencePopulation::PeriodRegular => s[i].regular,
                        FencePopulation::PeriodRegularActive => s[i].regular && s[i].active,
                        FencePopulation::Cohort => active.binary_search(u).is_ok(),
                    }
            })
            .map(|(u, s)| (*u, s[i].active_size as f64))
            .collect();
        let sizes: Vec<f64> = eligible.iter().map(|(_, v)| *v).collect();
        let Ok((lower, upper)) = iqr_outlier_fences(&sizes, config.iqr_multiplier) else {
            continue;
        };
        report.outlier_fences.insert(i, (lower, upper));
        let mut flagged = 0;
        for (u, v) in eligible {
            if v < lower || v > upper {
                outliers.insert(u);
                flagged += 1;
            }
        }
        report.outliers_per_period.insert(i, flagged);
    }

    let cohort: Vec<UserId> = active.into_iter().filter(|u| !outliers.contains(u)).collect();
    report.per_stage_counts.push(("non_outlier".into(), cohort.len()));
    (cohort, report)
}

/// Users regular and active in every period and never a size outlier.
pub fn longitudinal_cohort(
    store: &RecordStore,
    schedule: &PeriodSchedule,
    config: &CohortConfig,
) -> (Vec<UserId>, CohortFilterReport) {
    let statuses: BTreeMap<UserId, Vec<PeriodStatus>> = store
        .egos()
        .map(|u| (u, user_status(u, store.ego_records(u), schedule, config)))
        .collect();
    cohort_from_status(&statuses, schedule.len(), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Timestamp;
    use alloc::vec;

    fn schedule() -> PeriodSchedule {
        PeriodSchedule::default()
    }

    fn reply(ego: u64, alter: u64, y: i32, m: u32, d: u32) -> InteractionRecord {
        InteractionRecord::new(
            UserId(ego),
            UserId(alter),
            Timestamp::from_ymd(y, m, d).unwrap(),
            InteractionKind::Reply,
        )
    }

    #[test]
    fn regular_needs_half_the_months() {
        let s = schedule();
        let p = s.period(0).unwrap();
        let six: Vec<_> = (3..=8).map(|m| reply(1, 2, 2015, m, 10)).collect();
        assert!(is_regular(UserId(1), p, &six, 0.5, &InteractionKind::ALL));
        let five = &six[..5];
        assert!(!is_regular(UserId(1), p, five, 0.5, &InteractionKind::ALL));
        assert!(!is_regular(UserId(1), p, &[], 0.5, &InteractionKind::ALL));
        // Repeats inside one month do not add months.
        let same: Vec<_> = (1..=20).map(|d| reply(1, 2, 2015, 4, d)).collect();
        assert!(!is_regular(UserId(1), p, &same, 0.5, &InteractionKind::ALL));
    }

    #[test]
    fn activity_examples() {
        let s = schedule();
        let p = s.period(0).unwrap();
        // Ten-day cadence ending a day before the period end.
        let mut recs = Vec::new();
        let end = p.end.0;
        for k in 0..20 {
            recs.push(InteractionRecord::new(
                UserId(1),
                UserId(2),
                Timestamp(end - 86_400 - k * 10 * 86_400),
                InteractionKind::Mention,
            ));
        }
        assert!(is_account_active(UserId(1), p, &recs, 6.0));
        // Monthly cadence that stopped eight months before the end.
        let recs: Vec<_> = (0..6)
            .map(|k| InteractionRecord::new(
                UserId(1),
                UserId(2),
                Timestamp(end - (8.0 * SECONDS_PER_MONTH) as i64 - k * (SECONDS_PER_MONTH as i64)),
                InteractionKind::Mention,
            ))
            .collect();
        assert!(!is_account_active(UserId(1), p, &recs, 6.0));
        assert!(!is_account_active(UserId(1), p, &[reply(1, 2, 2015, 6, 1)], 6.0));
    }

    #[test]
    fn fences() {
        assert_eq!(iqr_outlier_fences(&[5.0; 4], 1.5).unwrap(), (5.0, 5.0));
        assert_eq!(iqr_outlier_fences(&[3.0], 1.5).unwrap(), (3.0, 3.0));
        assert!(iqr_outlier_fences(&[], 1.5).is_err());
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 500.0];
        let (lo, hi) = iqr_outlier_fences(&v, 1.5).unwrap();
        // Q1 = 3.25, Q3 = 7.75.
        assert!((lo - (3.25 - 6.75)).abs() < 1e-12);
        assert!((hi - (7.75 + 6.75)).abs() < 1e-12);
        assert!(500.0 > hi);
    }

    #[test]
    fn cohort_report_is_monotone() {
        let ok = PeriodStatus { regular: true, active: true, active_size: 10 };
        let mut statuses = BTreeMap::new();
        for u in 0..20 {
            statuses.insert(UserId(u), vec![ok; 7]);
        }
        let mut missing = vec![ok; 7];
        missing[3].regular = false;
        statuses.insert(UserId(100), missing);
        let mut big = vec![ok; 7];
        big[2].active_size = 500;
        statuses.insert(UserId(101), big);
        let (cohort, report) = cohort_from_status(&statuses, 7, &CohortConfig::default());
        assert_eq!(cohort.len(), 20);
        assert!(!cohort.contains(&UserId(100)));
        assert!(!cohort.contains(&UserId(101)));
        let counts: Vec<usize> = report.per_stage_counts.iter().map(|c| c.1).collect();
        assert_eq!(counts, vec![22, 21, 21, 20]);
    }
}
