//! Shared vocabulary: identifiers, timestamps, interaction records and the
//! yearly period schedule.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use chrono::{DateTime, Datelike, Months, NaiveDate, Utc};

use crate::error::{Error, Result};

/// Seconds in one year of 365.25 days.
pub const SECONDS_PER_YEAR: f64 = 365.25 * 86_400.0;

/// Average calendar month length in seconds (a twelfth of a 365.25-day year).
pub const SECONDS_PER_MONTH: f64 = SECONDS_PER_YEAR / 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Topic label produced by an external topic model. Negative values mark
/// documents the model left unassigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct TopicId(pub i32);

impl TopicId {
    pub const OUTLIER: TopicId = TopicId(-1);

    pub fn is_outlier(self) -> bool {
        self.0 < 0
    }
}

/// UTC instant with one-second resolution, stored as Unix seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_date(date: NaiveDate) -> Self {
        Timestamp(date.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
    }

    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(Self::from_date)
    }

    pub fn to_datetime(self) -> DateTime<Utc> {
        DateTime::from_timestamp(self.0, 0).expect("timestamp within chrono range")
    }

    /// Calendar month index `year * 12 + (month - 1)`.
    pub fn month_key(self) -> i64 {
        let dt = self.to_datetime();
        i64::from(dt.year()) * 12 + i64::from(dt.month0())
    }

    pub fn seconds_since(self, earlier: Timestamp) -> i64 {
        self.0 - earlier.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum InteractionKind {
    Reply,
    Mention,
    Retweet,
    Quote,
}

impl InteractionKind {
    pub const ALL: [InteractionKind; 4] = [
        InteractionKind::Reply,
        InteractionKind::Mention,
        InteractionKind::Retweet,
        InteractionKind::Quote,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InteractionKind::Reply => "reply",
            InteractionKind::Mention => "mention",
            InteractionKind::Retweet => "retweet",
            InteractionKind::Quote => "quote",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "reply" => Some(InteractionKind::Reply),
            "mention" => Some(InteractionKind::Mention),
            "retweet" => Some(InteractionKind::Retweet),
            "quote" => Some(InteractionKind::Quote),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PolarityLabel {
    Positive,
    Negative,
    Neutral,
}

impl PolarityLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PolarityLabel::Positive => "positive",
            PolarityLabel::Negative => "negative",
            PolarityLabel::Neutral => "neutral",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "positive" => Some(PolarityLabel::Positive),
            "negative" => Some(PolarityLabel::Negative),
            "neutral" => Some(PolarityLabel::Neutral),
            _ => None,
        }
    }
}

/// One directed social event from `ego` to `alter`.
///
/// Field order doubles as the canonical sort order of a [`RecordStore`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InteractionRecord {
    pub ego: UserId,
    pub timestamp: Timestamp,
    pub alter: UserId,
    pub kind: InteractionKind,
    pub polarity: Option<PolarityLabel>,
    pub topic: Option<TopicId>,
    pub text: Option<String>,
}

impl InteractionRecord {
    pub fn new(ego: UserId, alter: UserId, timestamp: Timestamp, kind: InteractionKind) -> Self {
        InteractionRecord {
            ego,
            timestamp,
            alter,
            kind,
            polarity: None,
            topic: None,
            text: None,
        }
    }

    pub fn with_polarity(mut self, polarity: PolarityLabel) -> Self {
        self.polarity = Some(polarity);
        self
    }

    pub fn with_topic(mut self, topic: TopicId) -> Self {
        self.topic = Some(topic);
        self
    }

    pub fn with_text(mut self, text: impl Into<String>) -> Self {
        self.text = Some(text.into());
        self
    }

    pub fn is_self_loop(&self) -> bool {
        self.ego == self.alter
    }

    /// Retweets reshare content, so their polarity is always neutral.
    pub fn normalize_polarity(&mut self) {
        if self.kind == InteractionKind::Retweet {
            self.polarity = Some(PolarityLabel::Neutral);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Period {
    pub index: usize,
    pub start: Timestamp,
    /// Exclusive.
    pub end: Timestamp,
    pub length_years: f64,
    /// Whole calendar months covered by the period.
    pub months: u32,
}

impl Period {
    pub fn contains(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    pub fn seconds(&self) -> i64 {
        self.end.0 - self.start.0
    }
}

/// Contiguous sequence of equally strided calendar periods.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSchedule {
    anchor: NaiveDate,
    stride_months: u32,
    periods: Vec<Period>,
}

impl Default for PeriodSchedule {
    /// Seven yearly periods starting March 1, 2015.
    fn default() -> Self {
        let anchor = NaiveDate::from_ymd_opt(2015, 3, 1).unwrap();
        PeriodSchedule::new(anchor, 7, 1.0).expect("default schedule is valid")
    }
}

impl PeriodSchedule {
    /// Builds `count` periods of `stride_years` each starting at `anchor`.
    ///
    /// The stride must be a whole number of months and the anchor must be the
    /// first day of a month, so every period covers whole calendar months.
    pub fn new(anchor: NaiveDate, count: usize, stride_years: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidSchedule("count must be at least 1"));
        }
        if !(stride_years > 0.0) || !stride_years.is_finite() {
            return Err(Error::InvalidSchedule("stride must be positive"));
        }
        let months_f = stride_years * 12.0;
        let stride_months = libm::round(months_f);
        if libm::fabs(months_f - stride_months) > 1e-9 || stride_months < 1.0 {
            return Err(Error::InvalidSchedule("stride must be a whole number of months"));
        }
        if anchor.day() != 1 {
            return Err(Error::InvalidSchedule("anchor must be the first day of a month"));
        }
        let stride_months = stride_months as u32;
        let boundary = |k: usize| -> Result<Timestamp> {
            let months = u32::try_from(k)
                .ok()
                .and_then(|k| k.checked_mul(stride_months))
                .ok_or(Error::InvalidSchedule("schedule too long"))?;
            anchor
                .checked_add_months(Months::new(months))
                .map(Timestamp::from_date)
                .ok_or(Error::InvalidSchedule("schedule exceeds calendar range"))
        };
        let mut periods = Vec::with_capacity(count);
        let mut start = boundary(0)?;
        for k in 0..count {
            let end = boundary(k + 1)?;
            periods.push(Period {
                index: k,
                start,
                end,
                length_years: (end.0 - start.0) as f64 / SECONDS_PER_YEAR,
                months: stride_months,
            });
            start = end;
        }
        Ok(PeriodSchedule {
            anchor,
            stride_months,
            periods,
        })
    }

    pub fn anchor(&self) -> NaiveDate {
        self.anchor
    }

    pub fn stride_months(&self) -> u32 {
        self.stride_months
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn period(&self, index: usize) -> Option<&Period> {
        self.periods.get(index)
    }

    pub fn span_start(&self) -> Timestamp {
        self.periods[0].start
    }

    pub fn span_end(&self) -> Timestamp {
        self.periods[self.periods.len() - 1].end
    }

    /// The period containing `t`. Boundary instants belong to the later period.
    pub fn period_of(&self, t: Timestamp) -> Option<&Period> {
        if t < self.span_start() || t >= self.span_end() {
            return None;
        }
        let idx = self.periods.partition_point(|p| p.start <= t) - 1;
        Some(&self.periods[idx])
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StoreStats {
    pub offered: usize,
    pub dropped_self_loops: usize,
    pub dropped_out_of_span: usize,
    pub retained: usize,
}

/// Records in canonical order, indexed by ego.
#[derive(Debug, Clone, Default)]
pub struct RecordStore {
    records: Vec<InteractionRecord>,
    egos: Vec<(UserId, Range<usize>)>,
}

impl RecordStore {
    /// Applies the ingest invariants (no self-loops, inside the schedule span,
    /// neutral retweets) and sorts into canonical order.
    pub fn new(
        records: impl IntoIterator<Item = InteractionRecord>,
        schedule: &PeriodSchedule,
    ) -> (Self, StoreStats) {
        let mut stats = StoreStats::default();
        let mut kept = Vec::new();
        for mut r in records {
            stats.offered += 1;
            if r.is_self_loop() {
                stats.dropped_self_loops += 1;
                continue;
            }
            if schedule.period_of(r.timestamp).is_none() {
                stats.dropped_out_of_span += 1;
                continue;
            }
            r.normalize_polarity();
            kept.push(r);
        }
        stats.retained = kept.len();
        (Self::from_canonical(kept), stats)
    }

    /// Wraps records that already satisfy the ingest invariants.
    pub fn from_canonical(mut records: Vec<InteractionRecord>) -> Self {
        records.sort_unstable();
        let mut egos: Vec<(UserId, Range<usize>)> = Vec::new();
        let mut start = 0;
        for i in 1..=records.len() {
            if i == records.len() || records[i].ego != records[start].ego {
                if i > start {
                    egos.push((records[start].ego, start..i));
                }
                start = i;
            }
        }
        RecordStore { records, egos }
    }

    pub fn records(&self) -> &[InteractionRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<InteractionRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn egos(&self) -> impl ExactSizeIterator<Item = UserId> + '_ {
        self.egos.iter().map(|(id, _)| *id)
    }

    /// All records authored by `ego`, ordered by timestamp.
    pub fn ego_records(&self, ego: UserId) -> &[InteractionRecord] {
        match self.egos.binary_search_by_key(&ego, |(id, _)| *id) {
            Ok(i) => &self.records[self.egos[i].1.clone()],
            Err(_) => &[],
        }
    }

    /// Records authored by `ego` inside `period`.
    pub fn ego_period_records(&self, ego: UserId, period: &Period) -> &[InteractionRecord] {
        within_period(self.ego_records(ego), period)
    }
}

/// Narrows a timestamp-sorted slice to the records inside `period`.
pub fn within_period<'a>(records: &'a [InteractionRecord], period: &Period) -> &'a [InteractionRecord] {
    let lo = records.partition_point(|r| r.timestamp < period.start);
    let hi = records.partition_point(|r| r.timestamp < period.end);
    &records[lo..hi.max(lo)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ts(y: i32, m: u32, d: u32) -> Timestamp {
        Timestamp::from_ymd(y, m, d).unwrap()
    }

    #[test]
    fn default_schedule_starts_on_march_first() {
        let s = PeriodSchedule::default();
        assert_eq!(s.len(), 7);
        for (k, p) in s.periods().iter().enumerate() {
            assert_eq!(p.start, ts(2015 + k as i32, 3, 1));
            assert_eq!(p.end, ts(2016 + k as i32, 3, 1));
            assert_eq!(p.months, 12);
        }
        // I_0 and I_4 contain Feb 29.
        assert!((s.periods()[0].length_years - 366.0 / 365.25).abs() < 1e-12);
        assert!((s.periods()[1].length_years - 365.0 / 365.25).abs() < 1e-12);
    }

    #[test]
    fn period_of_examples() {
        let s = PeriodSchedule::default();
        assert_eq!(s.period_of(ts(2015, 3, 1)).unwrap().index, 0);
        assert_eq!(s.period_of(ts(2020, 3, 1)).unwrap().index, 5);
        assert_eq!(s.period_of(Timestamp(ts(2020, 3, 1).0 - 1)).unwrap().index, 4);
        assert!(s.period_of(ts(2014, 12, 31)).is_none());
        assert!(s.period_of(ts(2022, 3, 1)).is_none());
    }

    #[test]
    fn schedule_validation() {
        let a = NaiveDate::from_ymd_opt(2015, 3, 1).unwrap();
        assert!(PeriodSchedule::new(a, 0, 1.0).is_err());
        assert!(PeriodSchedule::new(a, 3, 0.3).is_err());
        assert!(PeriodSchedule::new(NaiveDate::from_ymd_opt(2015, 3, 2).unwrap(), 3, 1.0).is_err());
        let half = PeriodSchedule::new(a, 4, 0.5).unwrap();
        assert_eq!(half.periods()[1].start, ts(2015, 9, 1));
        assert_eq!(half.periods()[0].months, 6);
    }

    #[test]
    fn store_applies_ingest_invariants() {
        let s = PeriodSchedule::default();
        let recs = vec![
            InteractionRecord::new(UserId(2), UserId(3), ts(2016, 1, 1), InteractionKind::Retweet)
                .with_polarity(PolarityLabel::Negative),
            InteractionRecord::new(UserId(1), UserId(1), ts(2016, 1, 1), InteractionKind::Reply),
            InteractionRecord::new(UserId(1), UserId(4), ts(2010, 1, 1), InteractionKind::Reply),
            InteractionRecord::new(UserId(1), UserId(4), ts(2017, 1, 1), InteractionKind::Reply),
        ];
        let (store, stats) = RecordStore::new(recs, &s);
        assert_eq!(stats.dropped_self_loops, 1);
        assert_eq!(stats.dropped_out_of_span, 1);
        assert_eq!(stats.retained, 2);
        assert_eq!(store.egos().collect::<Vec<_>>(), vec![UserId(1), UserId(2)]);
        assert_eq!(store.ego_records(UserId(2))[0].polarity, Some(PolarityLabel::Neutral));
        let p1 = &s.periods()[1];
        assert_eq!(store.ego_period_records(UserId(1), p1).len(), 1);
        assert!(store.ego_records(UserId(9)).is_empty());
    }
}
