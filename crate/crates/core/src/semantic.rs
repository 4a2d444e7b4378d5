//! Topic diversity of an ego's social tweets per period.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::model::{InteractionKind, InteractionRecord, Period, PeriodSchedule, RecordStore, TopicId, UserId};
use crate::stats::MetricSeries;

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopicProfile {
    pub ego: UserId,
    pub period: usize,
    /// Distinct non-outlier topics, ascending.
    pub topics: Vec<TopicId>,
    pub unique_count: usize,
    pub n_outlier_tweets: usize,
    /// Non-retweet records carrying a topic label, outliers included.
    pub n_considered_tweets: usize,
}

impl TopicProfile {
    /// Profiles without any labeled record are left out of growth statistics.
    pub fn has_labels(&self) -> bool {
        self.n_considered_tweets > 0
    }
}

pub fn topic_profile(ego: UserId, period: &Period, records: &[InteractionRecord]) -> TopicProfile {
    let mut topics = BTreeSet::new();
    let mut outliers = 0;
    let mut considered = 0;
    for r in records
        .iter()
        .filter(|r| r.ego == ego && r.kind != InteractionKind::Retweet && period.contains(r.timestamp))
    {
        let Some(topic) = r.topic else { continue };
        considered += 1;
        if topic.is_outlier() {
            outliers += 1;
        } else {
            topics.insert(topic);
        }
    }
    TopicProfile {
        ego,
        period: period.index,
        unique_count: topics.len(),
        topics: topics.into_iter().collect(),
        n_outlier_tweets: outliers,
        n_considered_tweets: considered,
    }
}

/// Unique-topic counts of each cohort user over the schedule. Periods
/// without labeled records stay missing.
pub fn diversity_series(cohort: &[UserId], schedule: &PeriodSchedule, store: &RecordStore) -> MetricSeries {
    let mut series = MetricSeries::new("topics", schedule.len());
    for &user in cohort {
        let records = store.ego_records(user);
        for p in schedule.periods() {
            let profile = topic_profile(user, p, crate::model::within_period(records, p));
            if profile.has_labels() {
                series.set(user, p.index, profile.unique_count as f64);
            }
        }
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Timestamp;
    use alloc::vec;

    fn rec(kind: InteractionKind, topic: i32) -> InteractionRecord {
        InteractionRecord::new(UserId(1), UserId(2), Timestamp::from_ymd(2016, 1, 1).unwrap(), kind).with_topic(TopicId(topic))
    }

    #[test]
    fn profile_examples() {
        let s = PeriodSchedule::default();
        let p = s.period(0).unwrap();
        let recs: Vec<_> = [3, 3, 7, -1, 12].iter().map(|&t| rec(InteractionKind::Reply, t)).collect();
        let prof = topic_profile(UserId(1), p, &recs);
        assert_eq!(prof.topics, vec![TopicId(3), TopicId(7), TopicId(12)]);
        assert_eq!(prof.unique_count, 3);
        assert_eq!(prof.n_outlier_tweets, 1);

        let all_out: Vec<_> = (0..4).map(|_| rec(InteractionKind::Mention, -1)).collect();
        let prof = topic_profile(UserId(1), p, &all_out);
        assert_eq!(prof.unique_count, 0);
        assert!(prof.has_labels());

        let prof = topic_profile(UserId(1), p, &[rec(InteractionKind::Retweet, 5)]);
        assert_eq!(prof.unique_count, 0);
        assert!(!prof.has_labels());
    }

    #[test]
    fn empty_cohort_gives_empty_series() {
        let s = PeriodSchedule::default();
        let store = RecordStore::from_canonical(vec![]);
        assert_eq!(diversity_series(&[], &s, &store).users(), 0);
    }
}
