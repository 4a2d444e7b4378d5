//! Interaction log parsing, tweet text cleaning and the canonical record
//! store format.
//!
//! Input lines are JSON objects (or CSV rows with the same columns):
//!
//! ```text
//! {"id": "t1", "ego_id": 12, "alter_id": "34", "timestamp": "2016-05-01T10:00:00Z",
//!  "kind": "reply", "polarity": "negative", "topic": 7, "text": "..."}
//! ```
//!
//! `id`, `polarity`, `topic` and `text` are optional. User ids are unsigned
//! integers, given as numbers or digit strings. Timestamps are RFC 3339 and
//! are stored at whole-second resolution in UTC. A JSON line carrying a
//! `config_hash` key and no `ego_id` is a header and is skipped.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat};
use egoshift_core::model::{
    InteractionKind, InteractionRecord, PeriodSchedule, PolarityLabel, RecordStore, Timestamp, TopicId, UserId,
};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PipelineError, Result};

/// Tokens stripped from tweet text.
#[derive(Debug, Clone)]
pub struct TextRules {
    pattern: Regex,
}

impl TextRules {
    pub const DEFAULT_PATTERNS: [&'static str; 3] = [r"https?://\S*", r"t\.co/\S*", r"pic\.twitter\.com/\S*"];

    pub fn new<S: AsRef<str>>(patterns: &[S]) -> std::result::Result<Self, regex::Error> {
        let joined = if patterns.is_empty() {
            // Matches nothing.
            r"[^\s\S]".to_string()
        } else {
            patterns.iter().map(|p| format!("(?:{})", p.as_ref())).collect::<Vec<_>>().join("|")
        };
        Ok(TextRules { pattern: Regex::new(&joined)? })
    }

    pub fn is_match(&self, text: &str) -> bool {
        self.pattern.is_match(text)
    }

    /// Removes matching tokens and collapses whitespace.
    pub fn preprocess(&self, raw: &str) -> String {
        let stripped = self.pattern.replace_all(raw, " ");
        stripped.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

impl Default for TextRules {
    fn default() -> Self {
        TextRules::new(&Self::DEFAULT_PATTERNS).expect("default patterns compile")
    }
}

/// Strips URL and media tokens with the default rules.
pub fn preprocess_text(raw: &str) -> String {
    TextRules::default().preprocess(raw)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_records: usize,
    pub malformed_lines: usize,
    pub dropped_self_loops: usize,
    pub dropped_out_of_span: usize,
    pub dropped_retweets_for_text: usize,
    pub dropped_duplicates: usize,
    pub dropped_empty_text: usize,
    pub retained: usize,
    /// Retained records per period index; sums to `retained`.
    pub per_period_counts: BTreeMap<usize, usize>,
}

/// A parsed record with its source identifier: the `id` field when present,
/// otherwise `L<line number>`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourcedRecord {
    pub id: String,
    pub record: InteractionRecord,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct Parsed {
    pub records: Vec<SourcedRecord>,
    pub errors: Vec<LineError>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdField {
    Number(u64),
    Text(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TopicField {
    Number(i32),
    Text(String),
}

#[derive(Deserialize)]
struct JsonLine {
    id: Option<Value>,
    ego_id: IdField,
    alter_id: IdField,
    timestamp: String,
    kind: String,
    polarity: Option<String>,
    topic: Option<TopicField>,
    text: Option<String>,
}

#[derive(Deserialize)]
struct CsvRow {
    id: Option<String>,
    ego_id: String,
    alter_id: String,
    timestamp: String,
    kind: String,
    polarity: Option<String>,
    topic: Option<String>,
    text: Option<String>,
}

fn parse_user(field: IdField) -> std::result::Result<UserId, String> {
    match field {
        IdField::Number(n) => Ok(UserId(n)),
        IdField::Text(s) => s.trim().parse::<u64>().map(UserId).map_err(|_| format!("user id {s:?} is not an unsigned integer")),
    }
}

fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| Timestamp(t.timestamp()))
        .map_err(|e| format!("timestamp {s:?}: {e}"))
}

pub fn format_timestamp(t: Timestamp) -> String {
    t.to_datetime().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_kind(s: &str) -> std::result::Result<InteractionKind, String> {
    InteractionKind::parse(&s.trim().to_ascii_lowercase()).ok_or_else(|| format!("unknown kind {s:?}"))
}

fn parse_polarity(s: Option<&str>) -> std::result::Result<Option<PolarityLabel>, String> {
    match s.map(str::trim) {
        None | Some("") => Ok(None),
        Some(p) => PolarityLabel::parse(&p.to_ascii_lowercase()).map(Some).ok_or_else(|| format!("unknown polarity {p:?}")),
    }
}

fn parse_topic(s: Option<TopicField>) -> std::result::Result<Option<TopicId>, String> {
    match s {
        None => Ok(None),
        Some(TopicField::Number(n)) => Ok(Some(TopicId(n))),
        Some(TopicField::Text(t)) if t.trim().is_empty() => Ok(None),
        Some(TopicField::Text(t)) => t.trim().parse::<i32>().map(|n| Some(TopicId(n))).map_err(|_| format!("topic {t:?} is not an integer")),
    }
}

fn build(
    ego: IdField,
    alter: IdField,
    timestamp: &str,
    kind: &str,
    polarity: Option<&str>,
    topic: Option<TopicField>,
    text: Option<String>,
) -> std::result::Result<InteractionRecord, String> {
    let mut r = InteractionRecord::new(parse_user(ego)?, parse_user(alter)?, parse_timestamp(timestamp)?, parse_kind(kind)?);
    r.polarity = parse_polarity(polarity)?;
    r.topic = parse_topic(topic)?;
    r.text = text;
    r.normalize_polarity();
    Ok(r)
}

fn is_header(value: &Value) -> bool {
    value.get("config_hash").is_some() && value.get("ego_id").is_none()
}

fn parse_json_line(line: &str, line_no: usize) -> std::result::Result<Option<SourcedRecord>, String> {
    let raw: JsonLine = match serde_json::from_str(line) {
        Ok(raw) => raw,
        Err(e) => {
            return match serde_json::from_str::<Value>(line) {
                Ok(v) if is_header(&v) => Ok(None),
                _ => Err(e.to_string()),
            }
        }
    };
    let id = match raw.id {
        Some(Value::String(s)) => s,
        Some(Value::Number(n)) => n.to_string(),
        None | Some(Value::Null) => format!("L{line_no}"),
        Some(other) => return Err(format!("id {other} must be a string or number")),
    };
    let record = build(raw.ego_id, raw.alter_id, &raw.timestamp, &raw.kind, raw.polarity.as_deref(), raw.topic, raw.text)?;
    Ok(Some(SourcedRecord { id, record }))
}

/// Parses JSON lines. Malformed lines are collected, never fatal.
pub fn parse_jsonl<R: BufRead>(reader: R) -> std::io::Result<Parsed> {
    let mut out = Parsed::default();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match parse_json_line(&line, line_no) {
            Ok(Some(r)) => out.records.push(r),
            Ok(None) => {}
            Err(message) => out.errors.push(LineError { line: line_no, message }),
        }
    }
    Ok(out)
}

/// Parses the CSV variant (header row required, `#` lines are comments).
pub fn parse_csv<R: std::io::Read>(reader: R) -> std::io::Result<Parsed> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).flexible(false).from_reader(reader);
    let mut out = Parsed::default();
    for (i, row) in rdr.deserialize::<CsvRow>().enumerate() {
        let line_no = i + 2;
        let parsed = row.map_err(|e| e.to_string()).and_then(|row| {
            let id = row.id.filter(|s| !s.is_empty()).unwrap_or_else(|| format!("L{line_no}"));
            let topic = row.topic.map(TopicField::Text);
            let text = row.text.filter(|s| !s.is_empty());
            build(IdField::Text(row.ego_id), IdField::Text(row.alter_id), &row.timestamp, &row.kind, row.polarity.as_deref(), topic, text)
                .map(|record| SourcedRecord { id, record })
        });
        match parsed {
            Ok(r) => out.records.push(r),
            Err(message) => out.errors.push(LineError { line: line_no, message }),
        }
    }
    Ok(out)
}

/// Parses a file, choosing the CSV reader for `.csv` paths.
pub fn parse_file(path: &Path) -> Result<Parsed> {
    let file = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_csv(reader)
    } else {
        parse_jsonl(reader)
    };
    parsed.map_err(|e| PipelineError::io(path, e))
}

/// Reads a topic sidecar: CSV with `id,topic` columns.
pub fn read_topic_sidecar(path: &Path) -> Result<HashMap<String, TopicId>> {
    #[derive(Deserialize)]
    struct Row {
        id: String,
        topic: i32,
    }
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| PipelineError::data(path, e))?;
    let mut map = HashMap::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| PipelineError::data(path, e))?;
        map.insert(row.id, TopicId(row.topic));
    }
    Ok(map)
}

/// Overwrites topic labels from a sidecar. Returns how many records matched.
pub fn apply_topic_sidecar(records: &mut [SourcedRecord], labels: &HashMap<String, TopicId>) -> usize {
    let mut matched = 0;
    for r in records {
        if let Some(&t) = labels.get(&r.id) {
            r.record.topic = Some(t);
            matched += 1;
        }
    }
    matched
}

/// Builds the record store and the ingest counters.
pub fn build_store(parsed: &Parsed, schedule: &PeriodSchedule) -> (RecordStore, CorpusStats) {
    let (store, s) = RecordStore::new(parsed.records.iter().map(|r| r.record.clone()), schedule);
    let mut stats = CorpusStats {
        total_records: parsed.records.len() + parsed.errors.len(),
        malformed_lines: parsed.errors.len(),
        dropped_self_loops: s.dropped_self_loops,
        dropped_out_of_span: s.dropped_out_of_span,
        retained: s.retained,
        ..CorpusStats::default()
    };
    for r in store.records() {
        if let Some(p) = schedule.period_of(r.timestamp) {
            *stats.per_period_counts.entry(p.index).or_default() += 1;
        }
    }
    (store, stats)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextEntry {
    pub id: String,
    pub ego: u64,
    pub alter: u64,
    pub period: usize,
    pub timestamp: String,
    pub kind: String,
    pub text: String,
}

/// Cleaned, deduplicated texts of non-retweet interactions inside the
/// schedule. The first occurrence of a text is kept.
pub fn build_text_corpus(records: &[SourcedRecord], schedule: &PeriodSchedule, rules: &TextRules) -> (Vec<TextEntry>, CorpusStats) {
    let mut stats = CorpusStats { total_records: records.len(), ..CorpusStats::default() };
    let mut seen: HashSet<String> = HashSet::new();
    let mut entries = Vec::new();
    for s in records {
        let r = &s.record;
        if r.is_self_loop() {
            stats.dropped_self_loops += 1;
            continue;
        }
        let Some(period) = schedule.period_of(r.timestamp) else {
            stats.dropped_out_of_span += 1;
            continue;
        };
        if r.kind == InteractionKind::Retweet {
            stats.dropped_retweets_for_text += 1;
            continue;
        }
        let Some(raw) = r.text.as_deref() else {
            stats.dropped_empty_text += 1;
            continue;
        };
        let text = rules.preprocess(raw);
        if text.is_empty() {
            stats.dropped_empty_text += 1;
            continue;
        }
        if !seen.insert(text.clone()) {
            stats.dropped_duplicates += 1;
            continue;
        }
        *stats.per_period_counts.entry(period.index).or_default() += 1;
        entries.push(TextEntry {
            id: s.id.clone(),
            ego: r.ego.0,
            alter: r.alter.0,
            period: period.index,
            timestamp: format_timestamp(r.timestamp),
            kind: r.kind.as_str().to_string(),
            text,
        });
    }
    stats.retained = entries.len();
    (entries, stats)
}

#[derive(Serialize)]
struct StoreLine<'a> {
    ego_id: u64,
    alter_id: u64,
    timestamp: String,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    polarity: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    topic: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
}

/// Writes records as canonical JSON lines.
pub fn write_records<'a, W: Write>(mut w: W, records: impl IntoIterator<Item = &'a InteractionRecord>) -> std::io::Result<()> {
    for r in records {
        let line = StoreLine {
            ego_id: r.ego.0,
            alter_id: r.alter.0,
            timestamp: format_timestamp(r.timestamp),
            kind: r.kind.as_str(),
            polarity: r.polarity.map(PolarityLabel::as_str),
            topic: r.topic.map(|t| t.0),
            text: r.text.as_deref(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a canonical store written by [`write_records`]. Any malformed line
/// is a data error here, since the store is produced by this tool.
pub fn read_store(path: &Path, schedule: &PeriodSchedule) -> Result<RecordStore> {
    let parsed = parse_file(path)?;
    if let Some(e) = parsed.errors.first() {
        return Err(PipelineError::data(path, format!("line {}: {}", e.line, e.message)));
    }
    let (store, stats) = RecordStore::new(parsed.records.into_iter().map(|r| r.record), schedule);
    if stats.retained != stats.offered {
        return Err(PipelineError::data(path, "store holds records outside the schedule; rerun ingest with this configuration"));
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_examples() {
        assert_eq!(preprocess_text("great news https://t.co/abc"), "great news");
        assert_eq!(preprocess_text(""), "");
        assert_eq!(preprocess_text("pic.twitter.com/xyz only"), "only");
        assert_eq!(preprocess_text("a  t.co/x\tb http://x.y/z"), "a b");
    }

    #[test]
    fn json_lines() {
        let input = r#"{"config_hash":"abc"}
{"ego_id": 1, "alter_id": "2", "timestamp": "2016-01-01T00:00:00Z", "kind": "reply", "polarity": "negative"}
{"ego_id": 1, "alter_id": 2, "timestamp": "2016-01-01T00:00:00+02:00", "kind": "retweet", "polarity": "negative", "id": 77}
{"ego_id": "x", "alter_id": 2, "timestamp": "2016-01-01T00:00:00Z", "kind": "reply"}
not json

{"ego_id": 1, "alter_id": 2, "timestamp": "2016-01-01", "kind": "reply"}
"#;
        let p = parse_jsonl(input.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![4, 5, 7]);
        assert_eq!(p.records[0].record.kind, InteractionKind::Reply);
        assert_eq!(p.records[0].id, "L2");
        assert_eq!(p.records[1].record.polarity, Some(PolarityLabel::Neutral));
        assert_eq!(p.records[1].id, "77");
        assert_eq!(p.records[1].record.timestamp.0, p.records[0].record.timestamp.0 - 7200);
    }

    #[test]
    fn csv_rows() {
        let input = "ego_id,alter_id,timestamp,kind,polarity,topic,text\n\
                     1,2,2016-01-01T00:00:00Z,mention,positive,4,hi there\n\
                     1,2,2016-01-01T00:00:00Z,mention,,,\n\
                     1,2,bad,mention,,,\n";
        let p = parse_csv(input.as_bytes()).unwrap();
        assert_eq!(p.records.len(), 2);
        assert_eq!(p.errors.len(), 1);
        assert_eq!(p.records[0].record.topic, Some(TopicId(4)));
        assert_eq!(p.records[1].record.polarity, None);
        assert_eq!(p.records[1].record.text, None);
    }

    #[test]
    fn self_loops_and_span() {
        let s = PeriodSchedule::default();
        let input = r#"{"ego_id": 1, "alter_id": 1, "timestamp": "2016-01-01T00:00:00Z", "kind": "reply"}
{"ego_id": 1, "alter_id": 2, "timestamp": "2010-01-01T00:00:00Z", "kind": "reply"}
{"ego_id": 1, "alter_id": 2, "timestamp": "2016-01-01T00:00:00Z", "kind": "reply"}
"#;
        let (store, stats) = build_store(&parse_jsonl(input.as_bytes()).unwrap(), &s);
        assert_eq!(store.len(), 1);
        assert_eq!((stats.dropped_self_loops, stats.dropped_out_of_span, stats.retained), (1, 1, 1));
        assert_eq!(stats.per_period_counts.values().sum::<usize>(), 1);
    }

    #[test]
    fn corpus_rules() {
        let s = PeriodSchedule::default();
        let t = Timestamp::from_ymd(2017, 5, 5).unwrap();
        let mk = |id: &str, kind, text: &str| SourcedRecord {
            id: id.into(),
            record: InteractionRecord::new(UserId(1), UserId(2), t, kind).with_text(text),
        };
        let recs = vec![
            mk("a", InteractionKind::Reply, "same words"),
            mk("b", InteractionKind::Mention, "same   words https://t.co/q"),
            mk("c", InteractionKind::Retweet, "a retweet"),
            mk("d", InteractionKind::Reply, "https://t.co/only"),
        ];
        let (entries, stats) = build_text_corpus(&recs, &s, &TextRules::default());
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].id, "a");
        assert_eq!((stats.dropped_duplicates, stats.dropped_retweets_for_text, stats.dropped_empty_text), (1, 1, 1));
    }
}
