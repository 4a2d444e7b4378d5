//! Pipeline configuration, read from TOML.

use std::path::Path;

use chrono::NaiveDate;
use egoshift_core::cohort::{CohortConfig, FencePopulation};
use egoshift_core::dbcv::Metric;
use egoshift_core::egonet::EgonetConfig;
use egoshift_core::meanshift::{Bandwidth, MeanShiftConfig};
use egoshift_core::metrics::{Alphas, PipelineParams};
use egoshift_core::model::{InteractionKind, PeriodSchedule};
use egoshift_core::signed::SignedConfig;
use egoshift_core::synth::ShockConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};
use crate::ingest::TextRules;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    /// First day of the first period, `YYYY-MM-DD`.
    pub anchor: String,
    pub count: usize,
    pub stride_years: f64,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { anchor: "2015-03-01".into(), count: 7, stride_years: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub active_frequency: f64,
    pub negative_fraction: f64,
    pub regular_month_share: f64,
    pub activity_slack_months: f64,
    pub iqr_multiplier: f64,
    pub fence_population: FencePopulation,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            active_frequency: 1.0,
            negative_fraction: 0.17,
            regular_month_share: 0.5,
            activity_slack_months: 6.0,
            iqr_multiplier: 1.5,
            fence_population: FencePopulation::PeriodRegular,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub quotes_in_frequency: bool,
    pub neutral_in_denominator: bool,
    pub log_scale_meanshift: bool,
    /// Count quotes as activity when testing regularity.
    pub quotes_in_regularity: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            quotes_in_frequency: false,
            neutral_in_denominator: true,
            log_scale_meanshift: false,
            quotes_in_regularity: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeanShiftSection {
    pub bandwidth_quantile: f64,
    /// Overrides the quantile estimator when set.
    pub fixed_bandwidth: Option<f64>,
    pub merge_fraction: f64,
    pub max_iter: usize,
    pub tolerance: f64,
}

impl Default for MeanShiftSection {
    fn default() -> Self {
        let d = MeanShiftConfig::default();
        MeanShiftSection {
            bandwidth_quantile: 0.3,
            fixed_bandwidth: None,
            merge_fraction: d.merge_fraction,
            max_iter: d.max_iter,
            tolerance: d.tolerance,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub bonferroni: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextSection {
    /// Token patterns stripped from tweet text before deduplication.
    pub strip_patterns: Vec<String>,
}

impl Default for TextSection {
    fn default() -> Self {
        TextSection { strip_patterns: TextRules::DEFAULT_PATTERNS.iter().map(|s| s.to_string()).collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DbcvSection {
    pub metric: String,
    /// Proportional sample size; the full set is scored when unset.
    pub sample: Option<usize>,
    pub seed: u64,
}

impl Default for DbcvSection {
    fn default() -> Self {
        DbcvSection { metric: "euclidean".into(), sample: None, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schedule: ScheduleConfig,
    pub thresholds: Thresholds,
    pub alphas: Alphas,
    pub toggles: Toggles,
    pub meanshift: MeanShiftSection,
    pub stats: StatsSection,
    pub text: TextSection,
    pub dbcv: DbcvSection,
    pub synth: ShockConfig,
}

fn check(ok: bool, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(PipelineError::Config(message.to_string()))
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Overrides every seed in the configuration.
    pub fn set_seed(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.dbcv.seed = seed;
    }

    /// SHA-256 over the canonical JSON form of the configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("configuration serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn schedule(&self) -> Result<PeriodSchedule> {
        let anchor = NaiveDate::parse_from_str(&self.schedule.anchor, "%Y-%m-%d")
            .map_err(|e| PipelineError::Config(format!("schedule.anchor: {e}")))?;
        PeriodSchedule::new(anchor, self.schedule.count, self.schedule.stride_years)
            .map_err(|e| PipelineError::Config(format!("schedule: {e}")))
    }

    pub fn meanshift(&self) -> MeanShiftConfig {
        MeanShiftConfig {
            bandwidth: match self.meanshift.fixed_bandwidth {
                Some(h) => Bandwidth::Fixed(h),
                None => Bandwidth::Quantile(self.meanshift.bandwidth_quantile),
            },
            max_iter: self.meanshift.max_iter,
            tolerance: self.meanshift.tolerance,
            merge_fraction: self.meanshift.merge_fraction,
        }
    }

    pub fn params(&self) -> PipelineParams {
        let mut regular_kinds = vec![InteractionKind::Reply, InteractionKind::Mention, InteractionKind::Retweet];
        if self.toggles.quotes_in_regularity {
            regular_kinds.push(InteractionKind::Quote);
        }
        PipelineParams {
            cohort: CohortConfig {
                regular_month_share: self.thresholds.regular_month_share,
                activity_slack_months: self.thresholds.activity_slack_months,
                iqr_multiplier: self.thresholds.iqr_multiplier,
                fence_population: self.thresholds.fence_population,
                regular_kinds,
                egonet: EgonetConfig {
                    active_threshold: self.thresholds.active_frequency,
                    quotes_in_frequency: self.toggles.quotes_in_frequency,
                    log_scale: self.toggles.log_scale_meanshift,
                    meanshift: self.meanshift(),
                },
            },
            signed: SignedConfig {
                negative_threshold: self.thresholds.negative_fraction,
                neutral_in_denominator: self.toggles.neutral_in_denominator,
            },
        }
    }

    pub fn text_rules(&self) -> Result<TextRules> {
        TextRules::new(&self.text.strip_patterns).map_err(|e| PipelineError::Config(format!("text.strip_patterns: {e}")))
    }

    pub fn metric(&self) -> Result<Metric> {
        Metric::parse(&self.dbcv.metric)
            .ok_or_else(|| PipelineError::Config(format!("dbcv.metric: unknown metric {:?}", self.dbcv.metric)))
    }

    /// Range checks shared by every stage.
    pub fn validate(&self) -> Result<()> {
        self.schedule()?;
        let t = &self.thresholds;
        check(t.active_frequency > 0.0 && t.active_frequency.is_finite(), "thresholds.active_frequency must be positive")?;
        check((0.0..=1.0).contains(&t.negative_fraction), "thresholds.negative_fraction must lie in [0, 1]")?;
        check(t.regular_month_share > 0.0 && t.regular_month_share <= 1.0, "thresholds.regular_month_share must lie in (0, 1]")?;
        check(t.activity_slack_months >= 0.0 && t.activity_slack_months.is_finite(), "thresholds.activity_slack_months must be non-negative")?;
        check(t.iqr_multiplier >= 0.0 && t.iqr_multiplier.is_finite(), "thresholds.iqr_multiplier must be non-negative")?;
        for (name, a) in [("structure", self.alphas.structure), ("polarity", self.alphas.polarity), ("topics", self.alphas.topics)] {
            check(a > 0.0 && a < 1.0, &format!("alphas.{name} must lie in (0, 1)"))?;
        }
        let m = &self.meanshift;
        check(m.bandwidth_quantile > 0.0 && m.bandwidth_quantile <= 1.0, "meanshift.bandwidth_quantile must lie in (0, 1]")?;
        check(m.fixed_bandwidth.is_none_or(|h| h > 0.0 && h.is_finite()), "meanshift.fixed_bandwidth must be positive")?;
        check(m.merge_fraction > 0.0 && m.merge_fraction.is_finite(), "meanshift.merge_fraction must be positive")?;
        check(m.max_iter >= 1, "meanshift.max_iter must be at least 1")?;
        check(m.tolerance > 0.0 && m.tolerance < 1.0, "meanshift.tolerance must lie in (0, 1)")?;
        self.text_rules()?;
        self.metric()?;
        Ok(())
    }

    /// Checks of the synthetic generator section, needed only by `synth`.
    pub fn validate_synth(&self) -> Result<()> {
        let schedule = self.schedule()?;
        self.synth.validate(&schedule).map_err(|e| PipelineError::Config(format!("synth: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = PipelineConfig::default();
        c.validate().unwrap();
        c.validate_synth().unwrap();
        let back = PipelineConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = PipelineConfig::from_toml("[thresholds]\nnegative_fraction = 0.2\n").unwrap();
        assert_eq!(c.thresholds.negative_fraction, 0.2);
        assert_eq!(c.thresholds.active_frequency, 1.0);
        assert_eq!(c.alphas.topics, 0.05);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("[thresholds]\nnegative_fractoin = 0.2\n").is_err());
        let c = PipelineConfig::from_toml("[alphas]\nstructure = 1.5\n").unwrap();
        assert!(matches!(c.validate(), Err(PipelineError::Config(_))));
        let c = PipelineConfig::from_toml("[schedule]\nanchor = \"2015-03-02\"\n").unwrap();
        assert!(c.validate().is_err());
        let c = PipelineConfig::from_toml("[text]\nstrip_patterns = [\"(\"]\n").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn seed_changes_hash() {
        let mut c = PipelineConfig::default();
        let h = c.hash();
        c.set_seed(9);
        assert_ne!(c.hash(), h);
    }
}
