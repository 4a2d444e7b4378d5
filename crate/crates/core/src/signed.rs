//! Binary tie signs from per-interaction polarity labels.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::egonet::EgoNetworkSnapshot;
use crate::error::{Error, Result};
use crate::model::{InteractionRecord, PolarityLabel, UserId};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SignedConfig {
    /// A tie is negative when its negative fraction is strictly above this.
    pub negative_threshold: f64,
    /// Count neutral interactions in the fraction's denominator.
    pub neutral_in_denominator: bool,
}

impl Default for SignedConfig {
    fn default() -> Self {
        SignedConfig {
            negative_threshold: 0.17,
            neutral_in_denominator: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum TieSign {
    Positive,
    Negative,
}

impl TieSign {
    pub fn as_str(self) -> &'static str {
        match self {
            TieSign::Positive => "positive",
            TieSign::Negative => "negative",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolarityTally {
    pub positive: u32,
    pub negative: u32,
    pub neutral: u32,
}

impl PolarityTally {
    pub fn from_labels(labels: &[PolarityLabel]) -> Self {
        let mut t = PolarityTally::default();
        for &l in labels {
            t.add(l);
        }
        t
    }

    pub fn add(&mut self, label: PolarityLabel) {
        match label {
            PolarityLabel::Positive => self.positive += 1,
            PolarityLabel::Negative => self.negative += 1,
            PolarityLabel::Neutral => self.neutral += 1,
        }
    }

    pub fn total(&self) -> u32 {
        self.positive + self.negative + self.neutral
    }

    pub fn negative_fraction(&self, neutral_in_denominator: bool) -> Result<f64> {
        if self.total() == 0 {
            return Err(Error::EmptyTie);
        }
        let denom = if neutral_in_denominator {
            self.total()
        } else {
            self.positive + self.negative
        };
        if denom == 0 {
            return Ok(0.0);
        }
        Ok(f64::from(self.negative) / f64::from(denom))
    }

    /// Negative fraction and the resulting sign.
    pub fn classify(&self, config: &SignedConfig) -> Result<(f64, TieSign)> {
        let fraction = self.negative_fraction(config.neutral_in_denominator)?;
        let sign = if fraction > config.negative_threshold {
            TieSign::Negative
        } else {
            TieSign::Positive
        };
        Ok((fraction, sign))
    }
}

/// Tallies `labels` and signs the tie.
pub fn classify_tie(labels: &[PolarityLabel], config: &SignedConfig) -> Result<(PolarityTally, f64, TieSign)> {
    let tally = PolarityTally::from_labels(labels);
    let (fraction, sign) = tally.classify(config)?;
    Ok((tally, fraction, sign))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignedTie {
    pub ego: UserId,
    pub alter: UserId,
    pub period: usize,
    pub n_positive: u32,
    pub n_negative: u32,
    pub n_neutral: u32,
    pub negative_fraction: f64,
    pub sign: TieSign,
}

#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignedEgoNetwork {
    pub ties: Vec<SignedTie>,
    /// Active ties whose interactions carry no polarity label at all.
    pub unlabeled_ties: usize,
}

/// Signs every active tie of `snapshot` from the ego's `records` in the
/// snapshot's period. Unlabeled interactions are ignored; ties left without
/// any label are excluded and counted.
pub fn signed_ties(
    snapshot: &EgoNetworkSnapshot,
    records: &[InteractionRecord],
    period_contains: impl Fn(&InteractionRecord) -> bool,
    config: &SignedConfig,
) -> SignedEgoNetwork {
    let mut tallies: BTreeMap<UserId, PolarityTally> = snapshot.active_alters().map(|a| (a, PolarityTally::default())).collect();
    for r in records.iter().filter(|r| r.ego == snapshot.ego && period_contains(r)) {
        if let (Some(t), Some(label)) = (tallies.get_mut(&r.alter), r.polarity) {
            t.add(label);
        }
    }
    let mut out = SignedEgoNetwork::default();
    for (alter, tally) in tallies {
        match tally.classify(config) {
            Ok((negative_fraction, sign)) => out.ties.push(SignedTie {
                ego: snapshot.ego,
                alter,
                period: snapshot.period,
                n_positive: tally.positive,
                n_negative: tally.negative,
                n_neutral: tally.neutral,
                negative_fraction,
                sign,
            }),
            Err(_) => out.unlabeled_ties += 1,
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PolaritySummary {
    pub ego: UserId,
    pub period: usize,
    pub pct_negative: f64,
    pub pct_positive: f64,
    pub n_ties: usize,
}

/// Percentages of negative and positive ties over the signed active ties.
pub fn polarity_percentages(snapshot: &EgoNetworkSnapshot, ties: &[SignedTie]) -> Result<PolaritySummary> {
    if ties.is_empty() {
        return Err(Error::ZeroActiveSize);
    }
    let mut negative = 0usize;
    for t in ties {
        if snapshot.tie(t.alter).is_none() {
            return Err(Error::TieNotActive(t.alter.0));
        }
        if t.sign == TieSign::Negative {
            negative += 1;
        }
    }
    let pct_negative = 100.0 * negative as f64 / ties.len() as f64;
    Ok(PolaritySummary {
        ego: snapshot.ego,
        period: snapshot.period,
        pct_negative,
        pct_positive: 100.0 - pct_negative,
        n_ties: ties.len(),
    })
}
