//! Synthetic cohorts with planted layers, polarity and topic shocks.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::model::{
    InteractionKind, InteractionRecord, PeriodSchedule, PolarityLabel, RecordStore, Timestamp, TopicId, UserId,
};

/// Alter ids start here so they never collide with ego ids.
pub const ALTER_BASE: u64 = 1_000_000_000;
/// Maximum alters per planted layer.
pub const MAX_LAYER_SIZE: usize = 10_000;
/// Layers per ego; alter ids reserve 100000 slots per ego.
pub const MAX_LAYERS: usize = 10;
/// Egos take ids `1..=n_users`, below every alter id.
pub const MAX_USERS: u64 = ALTER_BASE;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSpec {
    /// Mean number of alters in the layer.
    pub size: f64,
    /// Mean contact frequency, events per year.
    pub frequency: f64,
    /// Relative half-width of the uniform frequency band around the mean.
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ShockConfig {
    pub n_users: usize,
    pub seed: u64,
    /// Per-period multiplier of every layer's expected size.
    pub size_multiplier: Vec<f64>,
    /// Per-period probability that a non-retweet interaction is negative.
    pub negative_probability: Vec<f64>,
    /// Per-period multiplier of the topic pool.
    pub topic_pool_multiplier: Vec<f64>,
    pub base_topic_pool: usize,
    /// Innermost layer first.
    pub layers: Vec<LayerSpec>,
    /// Egos scale their layer sizes by a factor uniform in `1 +- spread`.
    pub ego_scale_spread: f64,
    /// Quotes per counted event.
    pub quote_rate: f64,
    pub topic_outlier_probability: f64,
    /// Relative weights of reply, mention and retweet events.
    pub kind_weights: [f64; 3],
}

impl Default for ShockConfig {
    fn default() -> Self {
        ShockConfig {
            n_users: 1000,
            seed: 0,
            size_multiplier: vec![1.0; 7],
            negative_probability: vec![0.10; 7],
            topic_pool_multiplier: vec![1.0; 7],
            base_topic_pool: 400,
            layers: vec![
                LayerSpec { size: 2.0, frequency: 48.0, spread: 0.1 },
                LayerSpec { size: 4.0, frequency: 24.0, spread: 0.1 },
                LayerSpec { size: 8.0, frequency: 12.0, spread: 0.1 },
                LayerSpec { size: 16.0, frequency: 8.0, spread: 0.1 },
            ],
            ego_scale_spread: 0.3,
            quote_rate: 0.1,
            topic_outlier_probability: 0.2,
            kind_weights: [0.45, 0.35, 0.20],
        }
    }
}

impl ShockConfig {
    /// Planted size shock at `period` that reverts afterwards.
    pub fn with_size_shock(mut self, period: usize, factor: f64) -> Self {
        self.size_multiplier[period] = factor;
        self
    }

    pub fn with_negative_shock(mut self, period: usize, probability: f64) -> Self {
        self.negative_probability[period] = probability;
        self
    }

    pub fn with_topic_surge(mut self, period: usize, factor: f64) -> Self {
        self.topic_pool_multiplier[period] = factor;
        self
    }

    pub fn validate(&self, schedule: &PeriodSchedule) -> Result<()> {
        let k = schedule.len();
        if self.size_multiplier.len() != k
            || self.negative_probability.len() != k
            || self.topic_pool_multiplier.len() != k
        {
            return Err(Error::InvalidConfig("per-period vectors must match the schedule length"));
        }
        if self.size_multiplier.iter().chain(&self.topic_pool_multiplier).any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::InvalidConfig("multipliers must be positive"));
        }
        if self.negative_probability.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidConfig("negative probabilities must lie in [0, 1]"));
        }
        if self.layers.is_empty() || self.layers.len() > MAX_LAYERS {
            return Err(Error::InvalidConfig("between 1 and 10 layers are required"));
        }
        if self.n_users as u64 >= MAX_USERS {
            return Err(Error::InvalidConfig("n_users must stay below 10^9"));
        }
        for w in self.layers.windows(2) {
            if !(w[0].frequency > w[1].frequency) {
                return Err(Error::InvalidConfig("layer frequencies must decrease outward"));
            }
        }
        let max_mult = self.size_multiplier.iter().cloned().fold(0.0, f64::max);
        for l in &self.layers {
            if !(l.size >= 0.0 && l.frequency > 0.0 && (0.0..1.0).contains(&l.spread)) {
                return Err(Error::InvalidConfig("layer sizes, frequencies or spreads out of range"));
            }
            // Poisson draws rarely exceed mean + 10 sd; beyond that the slot pool runs out.
            let mean = l.size * (1.0 + self.ego_scale_spread) * max_mult;
            if mean + 10.0 * libm::sqrt(mean) + 10.0 > MAX_LAYER_SIZE as f64 {
                return Err(Error::InvalidConfig("layer size exceeds the alter pool"));
            }
        }
        if !(0.0..1.0).contains(&self.ego_scale_spread)
            || !(self.quote_rate >= 0.0)
            || !(0.0..=1.0).contains(&self.topic_outlier_probability)
            || self.base_topic_pool == 0
        {
            return Err(Error::InvalidConfig("synthetic generator parameter out of range"));
        }
        if self.kind_weights.iter().any(|w| !(*w >= 0.0)) || self.kind_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidConfig("kind weights must be non-negative with a positive sum"));
        }
        Ok(())
    }

    /// Topic pool size in `period`.
    pub fn topic_pool(&self, period: usize) -> usize {
        let v = libm::round(self.base_topic_pool as f64 * self.topic_pool_multiplier[period]) as usize;
        v.max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlantedTie {
    pub alter: UserId,
    pub layer: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EgoTruth {
    pub ego: UserId,
    pub scale: f64,
    /// Planted ties per period.
    pub periods: Vec<Vec<PlantedTie>>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundTruth {
    pub seed: u64,
    pub topic_pool: Vec<usize>,
    pub negative_probability: Vec<f64>,
    pub size_multiplier: Vec<f64>,
    pub egos: Vec<EgoTruth>,
}

pub fn ego_id(index: usize) -> UserId {
    UserId(index as u64 + 1)
}

pub fn alter_id(ego_index: usize, layer: usize, slot: usize) -> UserId {
    UserId(ALTER_BASE + ego_index as u64 * 100_000 + layer as u64 * MAX_LAYER_SIZE as u64 + slot as u64)
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    let d = Poisson::new(mean).expect("finite positive mean");
    d.sample(rng) as u64
}

/// Random stream of one ego, independent of how egos are scheduled.
pub fn ego_rng(seed: u64, ego_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(ego_index as u64);
    rng
}

/// Records and planted ties of one synthetic ego. The config must be valid.
pub fn generate_ego(config: &ShockConfig, schedule: &PeriodSchedule, ego_index: usize) -> (Vec<InteractionRecord>, EgoTruth) {
    let mut rng = ego_rng(config.seed, ego_index);
    let ego = ego_id(ego_index);
    let s = config.ego_scale_spread;
    let scale = if s > 0.0 { rng.random_range(1.0 - s..1.0 + s) } else { 1.0 };
    let weights = config.kind_weights;
    let weight_sum: f64 = weights.iter().sum();
    let mut records = Vec::new();
    let mut truth = EgoTruth { ego, scale, periods: Vec::with_capacity(schedule.len()) };
    for period in schedule.periods() {
        let p = period.index;
        let mut planted = Vec::new();
        let pool = config.topic_pool(p) as i32;
        for (layer, spec) in config.layers.iter().enumerate() {
            let n = (poisson(&mut rng, spec.size * scale * config.size_multiplier[p]) as usize).min(MAX_LAYER_SIZE);
            for slot in 0..n {
                let alter = alter_id(ego_index, layer, slot);
                let frequency = if spec.spread > 0.0 {
                    spec.frequency * rng.random_range(1.0 - spec.spread..1.0 + spec.spread)
                } else {
                    spec.frequency
                };
                planted.push(PlantedTie { alter, layer, frequency });
                let counted = poisson(&mut rng, frequency * period.length_years);
                let quotes = poisson(&mut rng, config.quote_rate * frequency * period.length_years);
                for e in 0..counted + quotes {
                    let kind = if e >= counted {
                        InteractionKind::Quote
                    } else {
                        let u = rng.random_range(0.0..weight_sum);
                        if u < weights[0] {
                            InteractionKind::Reply
                        } else if u < weights[0] + weights[1] {
                            InteractionKind::Mention
                        } else {
                            InteractionKind::Retweet
                        }
                    };
                    let timestamp = Timestamp(rng.random_range(period.start.0..period.end.0));
                    let mut r = InteractionRecord::new(ego, alter, timestamp, kind);
                    if kind == InteractionKind::Retweet {
                        r.polarity = Some(PolarityLabel::Neutral);
                    } else {
                        r.polarity = Some(if rng.random_bool(config.negative_probability[p]) {
                            PolarityLabel::Negative
                        } else {
                            PolarityLabel::Positive
                        });
                        r.topic = Some(if rng.random_bool(config.topic_outlier_probability) {
                            TopicId::OUTLIER
                        } else {
                            TopicId(rng.random_range(0..pool))
                        });
                    }
                    records.push(r);
                }
            }
        }
        truth.periods.push(planted);
    }
    (records, truth)
}

/// Generates the whole cohort into a canonical record store.
pub fn generate_cohort(config: &ShockConfig, schedule: &PeriodSchedule) -> Result<(RecordStore, GroundTruth)> {
    config.validate(schedule)?;
    let mut records = Vec::new();
    let mut egos = Vec::with_capacity(config.n_users);
    for i in 0..config.n_users {
        let (r, t) = generate_ego(config, schedule, i);
        records.extend(r);
        egos.push(t);
    }
    Ok((RecordStore::from_canonical(records), ground_truth(config, egos)))
}

pub fn ground_truth(config: &ShockConfig, egos: Vec<EgoTruth>) -> GroundTruth {
    GroundTruth {
        seed: config.seed,
        topic_pool: (0..config.topic_pool_multiplier.len()).map(|p| config.topic_pool(p)).collect(),
        negative_probability: config.negative_probability.clone(),
        size_multiplier: config.size_multiplier.clone(),
        egos,
    }
}

/// Frequencies of a planted layered profile with exact layer sizes
/// (`spec.size` rounded). Returns `(frequency, layer)` pairs, innermost layer
/// first.
pub fn planted_frequency_profile<R: Rng>(layers: &[LayerSpec], rng: &mut R) -> Vec<(f64, usize)> {
    let mut out = Vec::new();
    for (layer, spec) in layers.iter().enumerate() {
        let n = libm::round(spec.size) as usize;
        for _ in 0..n {
            let f = if spec.spread > 0.0 {
                spec.frequency * rng.random_range(1.0 - spec.spread..1.0 + spec.spread)
            } else {
                spec.frequency
            };
            out.push((f, layer));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ShockConfig {
        ShockConfig { n_users: 5, ..ShockConfig::default() }
    }

    #[test]
    fn deterministic_given_seed() {
        let s = PeriodSchedule::default();
        let (a, ta) = generate_cohort(&small(), &s).unwrap();
        let (b, tb) = generate_cohort(&small(), &s).unwrap();
        assert_eq!(a.records(), b.records());
        assert_eq!(ta, tb);
        let (c, _) = generate_cohort(&ShockConfig { seed: 1, ..small() }, &s).unwrap();
        assert_ne!(a.records(), c.records());
    }

    #[test]
    fn ego_streams_are_independent_of_cohort_size() {
        let s = PeriodSchedule::default();
        let (one, _) = generate_ego(&small(), &s, 3);
        let (again, _) = generate_ego(&ShockConfig { n_users: 50, ..small() }, &s, 3);
        assert_eq!(one, again);
    }

    #[test]
    fn retweets_are_neutral_and_untopiced() {
        let s = PeriodSchedule::default();
        let (store, _) = generate_cohort(&small(), &s).unwrap();
        for r in store.records() {
            assert!(s.period_of(r.timestamp).is_some());
            if r.kind == InteractionKind::Retweet {
                assert_eq!(r.polarity, Some(PolarityLabel::Neutral));
                assert_eq!(r.topic, None);
            }
        }
    }

    #[test]
    fn invalid_configs() {
        let s = PeriodSchedule::default();
        let mut c = small();
        c.size_multiplier.pop();
        assert!(c.validate(&s).is_err());
        let mut c = small();
        c.layers.swap(0, 1);
        assert!(c.validate(&s).is_err());
        let mut c = small();
        c.layers[0].size = 20_000.0;
        assert!(c.validate(&s).is_err());
        let c = small().with_size_shock(5, 0.0);
        assert!(c.validate(&s).is_err());
        let mut c = small();
        c.layers = (0..11).map(|i| LayerSpec { size: 1.0, frequency: 100.0 - i as f64, spread: 0.0 }).collect();
        assert!(c.validate(&s).is_err());
        c.layers.pop();
        assert!(c.validate(&s).is_ok());
        let c = ShockConfig { n_users: 1_000_000_000, ..small() };
        assert!(c.validate(&s).is_err());
    }
}
