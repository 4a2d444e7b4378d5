//! File-based stages. Every stage reads the artifacts of its upstream stages
//! from the output directory, writes its own artifacts atomically and
//! records a manifest with the config hash and the digests of its inputs and
//! outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use egoshift_core::cohort::{cohort_from_status, user_status, CohortFilterReport, PeriodStatus};
use egoshift_core::dbcv::{dbcv_score, proportional_sample, DbcvScore, LabeledPointSet, Metric};
use egoshift_core::egonet::{build_snapshot, ring_transition_summary, EgoNetworkSnapshot};
use egoshift_core::metrics::{self, Alphas, CohortMetrics};
use egoshift_core::model::{PeriodSchedule, RecordStore, UserId};
use egoshift_core::semantic::topic_profile;
use egoshift_core::signed::{polarity_percentages, signed_ties, SignedTie};
use egoshift_core::stats::{LockdownReport, MetricReport, ReportOptions};
use egoshift_core::synth::{generate_ego, ground_truth};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::error::{PipelineError, Result};
use crate::formats::{
    atomic_write, digest, hashed_json, hashed_jsonl, num, opt_num, read_csv, read_jsonl, FileDigest, HashedCsv,
    Manifest,
};
use crate::ingest::{self, CorpusStats, LineError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, ValueEnum)]
pub enum Stage {
    Synth,
    Ingest,
    Cohort,
    Egonet,
    Signed,
    Topics,
    Stats,
    Dbcv,
    Report,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Ingest => "ingest",
            Stage::Cohort => "cohort",
            Stage::Egonet => "egonet",
            Stage::Signed => "signed",
            Stage::Topics => "topics",
            Stage::Stats => "stats",
            Stage::Dbcv => "dbcv",
            Stage::Report => "report",
        }
    }
}

/// Artifact locations inside the output directory.
pub mod paths {
    pub const SYNTH_RECORDS: &str = "synth/records.jsonl";
    pub const SYNTH_TRUTH: &str = "synth/ground_truth.json";
    pub const STORE: &str = "ingest/store.jsonl";
    pub const INGEST_STATS: &str = "ingest/stats.json";
    pub const CORPUS: &str = "ingest/corpus.jsonl";
    pub const COHORT: &str = "cohort/cohort.txt";
    pub const COHORT_REPORT: &str = "cohort/filter_report.json";
    pub const EGONET_CSV: &str = "egonet/egonet.csv";
    pub const TRANSITIONS: &str = "egonet/transitions.csv";
    pub const SNAPSHOT_DIR: &str = "egonet/snapshots";
    pub const SIGNED_CSV: &str = "signed/signed.csv";
    pub const SIGNED_TIES: &str = "signed/ties.jsonl";
    pub const TOPICS_CSV: &str = "topics/topics.csv";
    pub const TESTS_CSV: &str = "stats/tests.csv";
    pub const TESTS_JSON: &str = "stats/tests.json";
    pub const INTERVALS: &str = "stats/intervals.csv";
    pub const DIFFERENCES: &str = "stats/differences.csv";
    pub const EXCLUSIONS: &str = "stats/exclusions.csv";
    pub const DBCV: &str = "dbcv/dbcv.json";
    pub const REPORT_DIR: &str = "report";

    pub fn snapshot_file(period: usize) -> String {
        format!("{SNAPSHOT_DIR}/period_{period}.jsonl")
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Interaction log for `ingest`; defaults to the `synth` output.
    pub input: Option<PathBuf>,
    /// `id,topic` sidecar applied during `ingest`.
    pub topic_labels: Option<PathBuf>,
    pub points: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    /// Suppresses per-line warnings on stderr.
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stage: Stage,
    pub outputs: Vec<PathBuf>,
}

pub struct Runner {
    config: PipelineConfig,
    hash: String,
    schedule: PeriodSchedule,
    opts: RunOptions,
}

/// Collects outputs of one stage and writes its manifest.
struct StageWriter<'a> {
    runner: &'a Runner,
    stage: Stage,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
}

impl<'a> StageWriter<'a> {
    fn new(runner: &'a Runner, stage: Stage) -> Self {
        StageWriter { runner, stage, inputs: Vec::new(), outputs: Vec::new() }
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(digest(&self.runner.opts.out_dir, path)?);
        Ok(())
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.runner.opts.out_dir.join(rel);
        atomic_write(&path, bytes)?;
        self.outputs.push(path);
        Ok(())
    }

    fn finish(self) -> Result<StageOutcome> {
        let root = &self.runner.opts.out_dir;
        let outputs = self.outputs.iter().map(|p| digest(root, p)).collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            stage: self.stage.as_str().to_string(),
            config_hash: self.runner.hash.clone(),
            inputs: self.inputs,
            outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("serializable");
        bytes.push(b'\n');
        let path = root.join(self.stage.as_str()).join("manifest.json");
        atomic_write(&path, &bytes)?;
        let mut all = self.outputs;
        all.push(path);
        Ok(StageOutcome { stage: self.stage, outputs: all })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EgonetRow {
    ego: u64,
    period: usize,
    active_size: usize,
    n_rings: usize,
    circle_sizes: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SignedRow {
    ego: u64,
    period: usize,
    pct_negative: Option<f64>,
    pct_positive: Option<f64>,
    n_signed_ties: usize,
    unlabeled_ties: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TopicsRow {
    ego: u64,
    period: usize,
    unique_count: usize,
    n_outlier_tweets: usize,
    n_considered_tweets: usize,
    labeled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IngestReport {
    input: String,
    records: CorpusStats,
    text_corpus: CorpusStats,
    topic_sidecar_matches: Option<usize>,
    malformed: Vec<LineErrorRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LineErrorRow {
    line: usize,
    message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StatsBundle {
    alphas: Alphas,
    bonferroni: bool,
    report: LockdownReport,
    polarity_excluded: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DbcvOutput {
    metric: Metric,
    n_points: usize,
    n_scored: usize,
    sample_seed: Option<u64>,
    score: DbcvScore,
}

#[derive(Debug, Clone, Serialize)]
struct MetricSummary {
    metric: String,
    alpha: f64,
    rejections: Vec<String>,
    users: usize,
    zero_base_exclusions: usize,
    excluded_triples: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
struct ReportSummary {
    cohort: Vec<(String, usize)>,
    metrics: Vec<MetricSummary>,
    polarity_excluded: Vec<usize>,
}

const MAX_REPORTED_LINE_ERRORS: usize = 1000;

fn triple_label(t: [usize; 3]) -> String {
    format!("I{}-I{}-I{}", t[0], t[1], t[2])
}

impl Runner {
    /// Validates the configuration before any stage runs.
    pub fn new(config: PipelineConfig, opts: RunOptions) -> Result<Self> {
        config.validate()?;
        let schedule = config.schedule()?;
        let hash = config.hash();
        Ok(Runner { config, hash, schedule, opts })
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn out_dir(&self) -> &Path {
        &self.opts.out_dir
    }

    pub fn run(&self, stage: Stage) -> Result<StageOutcome> {
        match stage {
            Stage::Synth => self.synth(),
            Stage::Ingest => self.ingest(),
            Stage::Cohort => self.cohort(),
            Stage::Egonet => self.egonet(),
            Stage::Signed => self.signed(),
            Stage::Topics => self.topics(),
            Stage::Stats => self.stats(),
            Stage::Dbcv => self.dbcv(),
            Stage::Report => self.report(),
        }
    }

    fn require(&self, stage: &'static str, rel: &str) -> Result<PathBuf> {
        let path = self.opts.out_dir.join(rel);
        if path.is_file() {
            Ok(path)
        } else {
            Err(PipelineError::MissingStage { stage, path })
        }
    }

    fn load_store(&self, w: &mut StageWriter) -> Result<RecordStore> {
        let path = self.require("ingest", paths::STORE)?;
        w.input(&path)?;
        ingest::read_store(&path, &self.schedule)
    }

    fn load_cohort(&self, w: &mut StageWriter) -> Result<Vec<UserId>> {
        let path = self.require("cohort", paths::COHORT)?;
        w.input(&path)?;
        let text = std::fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.parse::<u64>().map(UserId).map_err(|e| PipelineError::data(&path, format!("{l:?}: {e}"))))
            .collect()
    }

    fn synth(&self) -> Result<StageOutcome> {
        self.config.validate_synth()?;
        let cfg = &self.config.synth;
        let generated: Vec<_> = (0..cfg.n_users).into_par_iter().map(|i| generate_ego(cfg, &self.schedule, i)).collect();
        let mut records = Vec::new();
        let mut truths = Vec::with_capacity(generated.len());
        for (r, t) in generated {
            records.extend(r);
            truths.push(t);
        }
        let store = RecordStore::from_canonical(records);
        let mut w = StageWriter::new(self, Stage::Synth);
        let mut bytes = hashed_jsonl::<()>(&self.hash, []);
        ingest::write_records(&mut bytes, store.records()).map_err(|e| PipelineError::io(paths::SYNTH_RECORDS, e))?;
        w.write(paths::SYNTH_RECORDS, &bytes)?;
        w.write(paths::SYNTH_TRUTH, &hashed_json(&self.hash, &ground_truth(cfg, truths)))?;
        w.finish()
    }

    fn ingest(&self) -> Result<StageOutcome> {
        let input = match &self.opts.input {
            Some(p) => p.clone(),
            None => self.require("synth", paths::SYNTH_RECORDS)?,
        };
        let rules = self.config.text_rules()?;
        let mut w = StageWriter::new(self, Stage::Ingest);
        w.input(&input)?;
        let mut parsed = ingest::parse_file(&input)?;
        if !self.opts.quiet {
            for LineError { line, message } in parsed.errors.iter().take(20) {
                eprintln!("warning: {}:{line}: {message}", input.display());
            }
            if parsed.errors.len() > 20 {
                eprintln!("warning: {} more malformed lines", parsed.errors.len() - 20);
            }
        }
        let sidecar_matches = match &self.opts.topic_labels {
            Some(path) => {
                w.input(path)?;
                let labels = ingest::read_topic_sidecar(path)?;
                Some(ingest::apply_topic_sidecar(&mut parsed.records, &labels))
            }
            None => None,
        };
        let (store, stats) = ingest::build_store(&parsed, &self.schedule);
        let (corpus, corpus_stats) = ingest::build_text_corpus(&parsed.records, &self.schedule, &rules);

        let mut bytes = hashed_jsonl::<()>(&self.hash, []);
        ingest::write_records(&mut bytes, store.records()).map_err(|e| PipelineError::io(paths::STORE, e))?;
        w.write(paths::STORE, &bytes)?;
        w.write(paths::CORPUS, &hashed_jsonl(&self.hash, &corpus))?;
        let report = IngestReport {
            input: crate::formats::display_path(&self.opts.out_dir, &input),
            records: stats,
            text_corpus: corpus_stats,
            topic_sidecar_matches: sidecar_matches,
            malformed: parsed
                .errors
                .iter()
                .take(MAX_REPORTED_LINE_ERRORS)
                .map(|e| LineErrorRow { line: e.line, message: e.message.clone() })
                .collect(),
        };
        w.write(paths::INGEST_STATS, &hashed_json(&self.hash, &report))?;
        w.finish()
    }

    fn cohort(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Cohort);
        let store = self.load_store(&mut w)?;
        let params = self.config.params();
        let egos: Vec<UserId> = store.egos().collect();
        let statuses: BTreeMap<UserId, Vec<PeriodStatus>> = egos
            .par_iter()
            .map(|&u| (u, user_status(u, store.ego_records(u), &self.schedule, &params.cohort)))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        let (cohort, report) = cohort_from_status(&statuses, self.schedule.len(), &params.cohort);
        let mut text = format!("# config_hash={}\n", self.hash);
        for u in &cohort {
            text.push_str(&format!("{}\n", u.0));
        }
        w.write(paths::COHORT, text.as_bytes())?;
        w.write(paths::COHORT_REPORT, &hashed_json(&self.hash, &report))?;
        w.finish()
    }

    fn egonet(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Egonet);
        let store = self.load_store(&mut w)?;
        let cohort = self.load_cohort(&mut w)?;
        let cfg = self.config.params().cohort.egonet;
        let snapshots: Vec<Vec<EgoNetworkSnapshot>> = cohort
            .par_iter()
            .map(|&ego| {
                let records = store.ego_records(ego);
                self.schedule
                    .periods()
                    .iter()
                    .map(|p| build_snapshot(ego, p, egoshift_core::model::within_period(records, p), &cfg))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;

        let mut tidy = HashedCsv::new(&self.hash, &["ego", "period", "active_size", "n_rings", "circle_sizes"]);
        let mut transitions = HashedCsv::new(
            &self.hash,
            &["ego", "from_period", "to_period", "moved_inward", "moved_outward", "stayed", "entered", "exited"],
        );
        for per_ego in &snapshots {
            for s in per_ego {
                let circles = s.circle_sizes().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";");
                tidy.row([s.ego.0.to_string(), s.period.to_string(), s.active_size.to_string(), s.n_rings().to_string(), circles]);
            }
            for pair in per_ego.windows(2) {
                let t = ring_transition_summary(&pair[0], &pair[1]);
                transitions.row([
                    pair[0].ego.0.to_string(),
                    pair[0].period.to_string(),
                    pair[1].period.to_string(),
                    t.moved_inward.to_string(),
                    t.moved_outward.to_string(),
                    t.stayed.to_string(),
                    t.entered.to_string(),
                    t.exited.to_string(),
                ]);
            }
        }
        w.write(paths::EGONET_CSV, &tidy.into_bytes())?;
        w.write(paths::TRANSITIONS, &transitions.into_bytes())?;
        for p in self.schedule.periods() {
            let rows = snapshots.iter().map(|per_ego| &per_ego[p.index]);
            w.write(&paths::snapshot_file(p.index), &hashed_jsonl(&self.hash, rows))?;
        }
        w.finish()
    }

    fn signed(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Signed);
        let mut snapshots: Vec<EgoNetworkSnapshot> = Vec::new();
        for p in self.schedule.periods() {
            let path = self.require("egonet", &paths::snapshot_file(p.index))?;
            w.input(&path)?;
            snapshots.extend(read_jsonl::<EgoNetworkSnapshot>(&path)?);
        }
        let store = self.load_store(&mut w)?;
        let signed_cfg = self.config.params().signed;
        let results: Vec<(SignedRow, Vec<SignedTie>)> = snapshots
            .par_iter()
            .map(|s| {
                let period = &self.schedule.periods()[s.period];
                let records = store.ego_period_records(s.ego, period);
                let signed = signed_ties(s, records, |_| true, &signed_cfg);
                let summary = polarity_percentages(s, &signed.ties).ok();
                let row = SignedRow {
                    ego: s.ego.0,
                    period: s.period,
                    pct_negative: summary.map(|x| x.pct_negative),
                    pct_positive: summary.map(|x| x.pct_positive),
                    n_signed_ties: signed.ties.len(),
                    unlabeled_ties: signed.unlabeled_ties,
                };
                (row, signed.ties)
            })
            .collect();
        let mut csv = HashedCsv::new(
            &self.hash,
            &["ego", "period", "pct_negative", "pct_positive", "n_signed_ties", "unlabeled_ties"],
        );
        for (r, _) in &results {
            csv.row([
                r.ego.to_string(),
                r.period.to_string(),
                opt_num(r.pct_negative),
                opt_num(r.pct_positive),
                r.n_signed_ties.to_string(),
                r.unlabeled_ties.to_string(),
            ]);
        }
        w.write(paths::SIGNED_CSV, &csv.into_bytes())?;
        w.write(paths::SIGNED_TIES, &hashed_jsonl(&self.hash, results.iter().flat_map(|(_, t)| t)))?;
        w.finish()
    }

    fn topics(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Topics);
        let store = self.load_store(&mut w)?;
        let cohort = self.load_cohort(&mut w)?;
        let rows: Vec<Vec<TopicsRow>> = cohort
            .par_iter()
            .map(|&ego| {
                self.schedule
                    .periods()
                    .iter()
                    .map(|p| {
                        let prof = topic_profile(ego, p, store.ego_period_records(ego, p));
                        TopicsRow {
                            ego: ego.0,
                            period: p.index,
                            unique_count: prof.unique_count,
                            n_outlier_tweets: prof.n_outlier_tweets,
                            n_considered_tweets: prof.n_considered_tweets,
                            labeled: prof.has_labels(),
                        }
                    })
                    .collect()
            })
            .collect();
        let mut csv = HashedCsv::new(
            &self.hash,
            &["ego", "period", "unique_count", "n_outlier_tweets", "n_considered_tweets", "labeled"],
        );
        for r in rows.iter().flatten() {
            csv.row([
                r.ego.to_string(),
                r.period.to_string(),
                r.unique_count.to_string(),
                r.n_outlier_tweets.to_string(),
                r.n_considered_tweets.to_string(),
                r.labeled.to_string(),
            ]);
        }
        w.write(paths::TOPICS_CSV, &csv.into_bytes())?;
        w.finish()
    }

    /// Metric series rebuilt from the tidy CSVs of upstream stages.
    fn load_metrics(&self, w: &mut StageWriter) -> Result<CohortMetrics> {
        let egonet = self.require("egonet", paths::EGONET_CSV)?;
        let signed = self.require("signed", paths::SIGNED_CSV)?;
        let topics = self.require("topics", paths::TOPICS_CSV)?;
        for p in [&egonet, &signed, &topics] {
            w.input(p)?;
        }
        let k = self.schedule.len();
        let check = |path: &Path, period: usize| {
            if period >= k {
                Err(PipelineError::data(path, format!("period {period} outside a schedule of {k} periods")))
            } else {
                Ok(())
            }
        };
        let mut m = CohortMetrics::new(k);
        for r in read_csv::<EgonetRow>(&egonet)? {
            check(&egonet, r.period)?;
            m.size.set(UserId(r.ego), r.period, r.active_size as f64);
        }
        for r in read_csv::<SignedRow>(&signed)? {
            check(&signed, r.period)?;
            match (r.pct_negative, r.pct_positive) {
                (Some(n), Some(p)) => {
                    m.pct_negative.set(UserId(r.ego), r.period, n);
                    m.pct_positive.set(UserId(r.ego), r.period, p);
                }
                _ => m.polarity_excluded[r.period] += 1,
            }
            m.unlabeled_ties += r.unlabeled_ties;
        }
        for r in read_csv::<TopicsRow>(&topics)? {
            check(&topics, r.period)?;
            if r.labeled {
                m.topics.set(UserId(r.ego), r.period, r.unique_count as f64);
            }
        }
        Ok(m)
    }

    fn stats(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Stats);
        let m = self.load_metrics(&mut w)?;
        let options = ReportOptions { bonferroni: self.config.stats.bonferroni };
        let report = metrics::standard_report(&m, &self.config.alphas, options);

        w.write(paths::TESTS_CSV, &tests_csv(&self.hash, &report.metrics))?;
        w.write(paths::INTERVALS, &intervals_csv(&self.hash, &report.metrics, false))?;
        w.write(paths::DIFFERENCES, &intervals_csv(&self.hash, &report.metrics, true))?;
        w.write(paths::EXCLUSIONS, &exclusions_csv(&self.hash, &report.metrics))?;
        let bundle = StatsBundle {
            alphas: self.config.alphas,
            bonferroni: options.bonferroni,
            report,
            polarity_excluded: m.polarity_excluded,
        };
        w.write(paths::TESTS_JSON, &hashed_json(&self.hash, &bundle))?;
        w.finish()
    }

    fn dbcv(&self) -> Result<StageOutcome> {
        let points_path = self.opts.points.clone().ok_or_else(|| PipelineError::Usage("dbcv needs --points".into()))?;
        let labels_path = self.opts.labels.clone().ok_or_else(|| PipelineError::Usage("dbcv needs --labels".into()))?;
        let mut w = StageWriter::new(self, Stage::Dbcv);
        w.input(&points_path)?;
        w.input(&labels_path)?;
        let points = crate::formats::read_points(&points_path)?;
        let labels = crate::formats::read_labels(&labels_path)?;
        let data = LabeledPointSet::new(points.values, labels, points.dim).map_err(|e| PipelineError::data(&labels_path, e))?;
        let metric = self.config.metric()?;
        let (scored, seed) = match self.config.dbcv.sample {
            Some(n) if n < data.len() => (proportional_sample(&data, n, self.config.dbcv.seed)?, Some(self.config.dbcv.seed)),
            _ => (data.clone(), None),
        };
        let score = dbcv_score(&scored, metric).map_err(|e| PipelineError::data(&labels_path, e))?;
        let out = DbcvOutput { metric, n_points: data.len(), n_scored: scored.len(), sample_seed: seed, score };
        w.write(paths::DBCV, &hashed_json(&self.hash, &out))?;
        w.finish()
    }

    fn report(&self) -> Result<StageOutcome> {
        let mut w = StageWriter::new(self, Stage::Report);
        let tests = self.require("stats", paths::TESTS_JSON)?;
        let filters = self.require("cohort", paths::COHORT_REPORT)?;
        w.input(&tests)?;
        w.input(&filters)?;
        let bundle: StatsBundle = read_hashed_json(&tests)?;
        let filter_report: CohortFilterReport = read_hashed_json(&filters)?;

        let dir = paths::REPORT_DIR;
        let mut summaries = Vec::new();
        for mr in &bundle.report.metrics {
            let one = std::slice::from_ref(mr);
            w.write(&format!("{dir}/tests_{}.csv", mr.metric), &tests_csv(&self.hash, one))?;
            w.write(&format!("{dir}/intervals_{}.csv", mr.metric), &intervals_csv(&self.hash, one, false))?;
            w.write(&format!("{dir}/differences_{}.csv", mr.metric), &intervals_csv(&self.hash, one, true))?;
            summaries.push(MetricSummary {
                metric: mr.metric.clone(),
                alpha: mr.alpha,
                rejections: mr
                    .rejections()
                    .into_iter()
                    .map(|(c, h)| format!("{} {}", h.label(), triple_label([c - 1, c, c + 1])))
                    .collect(),
                users: mr.period_means.first().map_or(0, |e| e.n),
                zero_base_exclusions: mr.exclusions.total_zero_base(),
                excluded_triples: mr.exclusions.excluded_triples.clone(),
            });
        }
        let mut filters_csv = HashedCsv::new(&self.hash, &["stage", "users"]);
        for (name, n) in &filter_report.per_stage_counts {
            filters_csv.row([name.clone(), n.to_string()]);
        }
        w.write(&format!("{dir}/cohort_filters.csv"), &filters_csv.into_bytes())?;
        w.write(&format!("{dir}/exclusions.csv"), &exclusions_csv(&self.hash, &bundle.report.metrics))?;
        let summary = ReportSummary {
            cohort: filter_report.per_stage_counts.clone(),
            metrics: summaries,
            polarity_excluded: bundle.polarity_excluded.clone(),
        };
        w.write(&format!("{dir}/summary.json"), &hashed_json(&self.hash, &summary))?;
        w.finish()
    }
}

fn read_hashed_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(|e| PipelineError::data(path, e))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("config_hash");
    }
    serde_json::from_value(v).map_err(|e| PipelineError::data(path, e))
}

fn tests_csv(hash: &str, reports: &[MetricReport]) -> Vec<u8> {
    let mut csv = HashedCsv::new(
        hash,
        &["metric", "triple", "hypothesis", "n", "mean", "t_stat", "p_value", "alpha", "outcome", "degenerate"],
    );
    for mr in reports {
        for row in &mr.rows {
            let mut fields = vec![mr.metric.clone(), triple_label(row.triple), row.hypothesis.label().to_string()];
            match &row.result {
                Some(r) => fields.extend([
                    r.n.to_string(),
                    num(r.mean),
                    num(r.t_stat),
                    num(r.p_value),
                    num(r.alpha),
                    r.outcome.as_str().to_string(),
                    r.degenerate.to_string(),
                ]),
                None => fields.extend([
                    "0".to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    num(mr.alpha),
                    "NOT_TESTED".to_string(),
                    String::new(),
                ]),
            }
            csv.row(fields);
        }
    }
    csv.into_bytes()
}

fn intervals_csv(hash: &str, reports: &[MetricReport], differences: bool) -> Vec<u8> {
    let index = if differences { "triple" } else { "period" };
    let mut csv = HashedCsv::new(hash, &["metric", index, "n", "mean", "lower", "upper", "level"]);
    for mr in reports {
        let rows = if differences { &mr.difference_means } else { &mr.period_means };
        for e in rows {
            let label = if differences { triple_label([e.index - 1, e.index, e.index + 1]) } else { format!("I{}", e.index) };
            csv.row([mr.metric.clone(), label, e.n.to_string(), num(e.mean), num(e.lower), num(e.upper), num(e.level)]);
        }
    }
    csv.into_bytes()
}

fn exclusions_csv(hash: &str, reports: &[MetricReport]) -> Vec<u8> {
    let mut csv = HashedCsv::new(hash, &["metric", "transition", "zero_base", "missing_value"]);
    for mr in reports {
        let ex = &mr.exclusions;
        for (i, (z, m)) in ex.zero_base.iter().zip(&ex.missing_value).enumerate() {
            csv.row([mr.metric.clone(), format!("I{}-I{}", i, i + 1), z.to_string(), m.to_string()]);
        }
    }
    csv.into_bytes()
}

/// Runs `stages` in order inside a pool of `jobs` workers (all cores when
/// `None`).
pub fn run_stages(runner: &Runner, stages: &[Stage], jobs: Option<usize>) -> Result<Vec<StageOutcome>> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| PipelineError::Usage(format!("thread pool: {e}")))?;
    pool.install(|| stages.iter().map(|&s| runner.run(s)).collect())
}
