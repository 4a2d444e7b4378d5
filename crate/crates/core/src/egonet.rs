//! Layered ego networks: contact frequencies, active ties, Mean Shift rings
//! and cumulative circles.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use libm::log;

use crate::error::{Error, Result};
use crate::meanshift::{mean_shift_1d, MeanShiftConfig};
use crate::model::{InteractionKind, InteractionRecord, Period, UserId};

/// Event tallies per interaction kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KindCounts {
    pub reply: u32,
    pub mention: u32,
    pub retweet: u32,
    pub quote: u32,
}

impl KindCounts {
    pub fn add(&mut self, kind: InteractionKind) {
        match kind {
            InteractionKind::Reply => self.reply += 1,
            InteractionKind::Mention => self.mention += 1,
            InteractionKind::Retweet => self.retweet += 1,
            InteractionKind::Quote => self.quote += 1,
        }
    }

    pub fn get(&self, kind: InteractionKind) -> u32 {
        match kind {
            InteractionKind::Reply => self.reply,
            InteractionKind::Mention => self.mention,
            InteractionKind::Retweet => self.retweet,
            InteractionKind::Quote => self.quote,
        }
    }

    pub fn total(&self) -> u32 {
        self.reply + self.mention + self.retweet + self.quote
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TieFrequency {
    pub alter: UserId,
    pub events: KindCounts,
    /// Counted events per year.
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct EgonetConfig {
    /// Minimum frequency (events per year) of an active tie.
    pub active_threshold: f64,
    pub quotes_in_frequency: bool,
    /// Cluster `ln(frequency)` instead of raw frequencies.
    pub log_scale: bool,
    pub meanshift: MeanShiftConfig,
}

impl Default for EgonetConfig {
    fn default() -> Self {
        EgonetConfig {
            active_threshold: 1.0,
            quotes_in_frequency: false,
            log_scale: false,
            meanshift: MeanShiftConfig::default(),
        }
    }
}

/// Contact frequency of `ego` towards each alter it addressed in `period`:
/// `(n_reply + n_mention + n_retweet) / length_years`. Quotes are tallied but
/// only counted when `quotes_in_frequency` is set.
pub fn contact_frequencies(
    ego: UserId,
    period: &Period,
    records: &[InteractionRecord],
    config: &EgonetConfig,
) -> Vec<TieFrequency> {
    let mut tallies: BTreeMap<UserId, KindCounts> = BTreeMap::new();
    for r in records
        .iter()
        .filter(|r| r.ego == ego && period.contains(r.timestamp) && !r.is_self_loop())
    {
        tallies.entry(r.alter).or_default().add(r.kind);
    }
    tallies
        .into_iter()
        .map(|(alter, events)| {
            let mut counted = events.reply + events.mention + events.retweet;
            if config.quotes_in_frequency {
                counted += events.quote;
            }
            TieFrequency {
                alter,
                events,
                frequency: f64::from(counted) / period.length_years,
            }
        })
        .collect()
}

pub fn active_ties(ties: &[TieFrequency], threshold: f64) -> Vec<TieFrequency> {
    ties.iter().copied().filter(|t| t.frequency >= threshold).collect()
}

/// Clusters frequencies into rings. Returns a ring index per value, ring 0
/// having the highest mean frequency.
pub fn mean_shift_rings(frequencies: &[f64], config: &EgonetConfig) -> Result<Vec<usize>> {
    if frequencies.is_empty() {
        return Err(Error::EmptyActiveNetwork);
    }
    let clustered: Vec<f64> = if config.log_scale {
        if frequencies.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::InvalidConfig("log-scale clustering needs positive frequencies"));
        }
        frequencies.iter().map(|&f| log(f)).collect()
    } else {
        frequencies.to_vec()
    };
    let ms = mean_shift_1d(&clustered, &config.meanshift)?;
    let k = ms.n_clusters();
    let mut sums = alloc::vec![(0.0, 0usize); k];
    for (&label, &f) in ms.labels.iter().zip(frequencies) {
        sums[label].0 += f;
        sums[label].1 += 1;
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ma = sums[a].0 / sums[a].1 as f64;
        let mb = sums[b].0 / sums[b].1 as f64;
        mb.total_cmp(&ma)
    });
    let mut rank = alloc::vec![0; k];
    for (r, &cluster) in order.iter().enumerate() {
        rank[cluster] = r;
    }
    Ok(ms.labels.iter().map(|&l| rank[l]).collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ring {
    /// Sorted by id.
    pub alters: Vec<UserId>,
    pub mean_frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EgoNetworkSnapshot {
    pub ego: UserId,
    pub period: usize,
    /// Active ties, sorted by alter id.
    pub ties: Vec<TieFrequency>,
    /// Innermost first.
    pub rings: Vec<Ring>,
    pub active_size: usize,
}

impl EgoNetworkSnapshot {
    pub fn empty(ego: UserId, period: usize) -> Self {
        EgoNetworkSnapshot {
            ego,
            period,
            ties: Vec::new(),
            rings: Vec::new(),
            active_size: 0,
        }
    }

    /// True when the ego had no active tie in the period.
    pub fn is_empty(&self) -> bool {
        self.active_size == 0
    }

    pub fn n_rings(&self) -> usize {
        self.rings.len()
    }

    /// `C_k = C_{k-1} ∪ R_k`, each circle sorted by id.
    pub fn circles(&self) -> Vec<Vec<UserId>> {
        let mut acc: Vec<UserId> = Vec::new();
        self.rings
            .iter()
            .map(|ring| {
                acc.extend_from_slice(&ring.alters);
                acc.sort_unstable();
                acc.clone()
            })
            .collect()
    }

    pub fn circle_sizes(&self) -> Vec<usize> {
        self.rings
            .iter()
            .scan(0, |acc, ring| {
                *acc += ring.alters.len();
                Some(*acc)
            })
            .collect()
    }

    /// Zero-based ring index of `alter`, if active.
    pub fn ring_of(&self, alter: UserId) -> Option<usize> {
        self.rings
            .iter()
            .position(|r| r.alters.binary_search(&alter).is_ok())
    }

    pub fn active_alters(&self) -> impl Iterator<Item = UserId> + '_ {
        self.ties.iter().map(|t| t.alter)
    }

    pub fn tie(&self, alter: UserId) -> Option<&TieFrequency> {
        self.ties
            .binary_search_by_key(&alter, |t| t.alter)
            .ok()
            .map(|i| &self.ties[i])
    }
}

/// Builds the layered ego network of `ego` in `period`. An ego without active
/// ties yields an empty snapshot.
pub fn build_snapshot(
    ego: UserId,
    period: &Period,
    records: &[InteractionRecord],
    config: &EgonetConfig,
) -> Result<EgoNetworkSnapshot> {
    let ties = active_ties(
        &contact_frequencies(ego, period, records, config),
        config.active_threshold,
    );
    if ties.is_empty() {
        return Ok(EgoNetworkSnapshot::empty(ego, period.index));
    }
    let freqs: Vec<f64> = ties.iter().map(|t| t.frequency).collect();
    let labels = mean_shift_rings(&freqs, config)?;
    let n_rings = labels.iter().max().map_or(0, |m| m + 1);
    let mut rings: Vec<Ring> = (0..n_rings)
        .map(|_| Ring {
            alters: Vec::new(),
            mean_frequency: 0.0,
        })
        .collect();
    for (tie, &ring) in ties.iter().zip(&labels) {
        rings[ring].alters.push(tie.alter);
        rings[ring].mean_frequency += tie.frequency;
    }
    for ring in &mut rings {
        ring.mean_frequency /= ring.alters.len() as f64;
    }
    Ok(EgoNetworkSnapshot {
        ego,
        period: period.index,
        active_size: ties.len(),
        ties,
        rings,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RingTransitionSummary {
    pub moved_inward: usize,
    pub moved_outward: usize,
    pub stayed: usize,
    pub entered: usize,
    pub exited: usize,
}

/// Movement of alters between two snapshots of the same ego. Ring positions
/// are compared as normalized ranks `(ring + 1) / n_rings`, so 1.0 is always
/// the outermost ring.
pub fn ring_transition_summary(
    a: &EgoNetworkSnapshot,
    b: &EgoNetworkSnapshot,
) -> RingTransitionSummary {
    let mut s = RingTransitionSummary::default();
    let (na, nb) = (a.n_rings(), b.n_rings());
    for alter in a.active_alters() {
        let Some(ra) = a.ring_of(alter) else { continue };
        match b.ring_of(alter) {
            None => s.exited += 1,
            Some(rb) => {
                // Compare (ra+1)/na with (rb+1)/nb exactly.
                let lhs = (ra + 1) * nb;
                let rhs = (rb + 1) * na;
                match rhs.cmp(&lhs) {
                    core::cmp::Ordering::Less => s.moved_inward += 1,
                    core::cmp::Ordering::Greater => s.moved_outward += 1,
                    core::cmp::Ordering::Equal => s.stayed += 1,
                }
            }
        }
    }
    s.entered = b.active_alters().filter(|&x| a.ring_of(x).is_none()).count();
    s
}
