//! Output helpers: atomic writes, hashed CSV and JSON files, manifests and
//! the DBCV point and label files.

use std::io::{BufRead, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| PipelineError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| PipelineError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| PipelineError::io(path, e))?;
    tmp.persist(path).map_err(|e| PipelineError::io(path, e.error))?;
    Ok(())
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Shortest round-tripping decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV text starting with a `# config_hash=` comment line.
pub struct HashedCsv {
    writer: csv::Writer<Vec<u8>>,
}

impl HashedCsv {
    pub fn new(config_hash: &str, header: &[&str]) -> Self {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={config_hash}").expect("write to memory");
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        writer.write_record(header).expect("write to memory");
        HashedCsv { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("write to memory");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("flush to memory")
    }
}

/// Pretty JSON of `value` with a `config_hash` field added at the top level.
pub fn hashed_json<T: Serialize>(config_hash: &str, value: &T) -> Vec<u8> {
    let mut v = serde_json::to_value(value).expect("serializable");
    let mut obj = serde_json::Map::new();
    obj.insert("config_hash".into(), config_hash.into());
    match v.take() {
        serde_json::Value::Object(m) => obj.extend(m),
        other => {
            obj.insert("data".into(), other);
        }
    }
    let mut out = serde_json::to_vec_pretty(&serde_json::Value::Object(obj)).expect("serializable");
    out.push(b'\n');
    out
}

/// JSON lines preceded by a `{"config_hash": ...}` header line.
pub fn hashed_jsonl<T: Serialize>(config_hash: &str, rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, &serde_json::json!({ "config_hash": config_hash })).expect("serializable");
    out.push(b'\n');
    for r in rows {
        serde_json::to_writer(&mut out, &r).expect("serializable");
        out.push(b'\n');
    }
    out
}

/// Reads CSV rows, skipping `#` comment lines.
pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| PipelineError::data(path, e))?;
    rdr.deserialize().map(|r| r.map_err(|e| PipelineError::data(path, e))).collect()
}

/// Reads JSON lines, skipping a `config_hash` header line.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let f = std::fs::File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() || (i == 0 && line.starts_with("{\"config_hash\"")) {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| PipelineError::data(path, format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Path relative to `root` when inside it, else the bare file name.
pub fn display_path(root: &Path, path: &Path) -> String {
    match path.strip_prefix(root) {
        Ok(rel) => rel.to_string_lossy().replace('\\', "/"),
        Err(_) => path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
    }
}

pub fn digest(root: &Path, path: &Path) -> Result<FileDigest> {
    Ok(FileDigest { path: display_path(root, path), sha256: sha256_file(path)? })
}

/// Row-major points and their dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Points {
    pub values: Vec<f64>,
    pub dim: usize,
}

/// Reads points from CSV (one row per point, optional header) or from the
/// packed binary layout: little-endian `u64` n and d, then n*d `f64` values.
pub fn read_points(path: &Path) -> Result<Points> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    let is_binary = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("bin"));
    if is_binary {
        return decode_binary_points(&bytes).map_err(|m| PipelineError::data(path, m));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_reader(bytes.as_slice());
    let mut values = Vec::new();
    let mut dim = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| PipelineError::data(path, e))?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(PipelineError::data(path, format!("row {}: {e}", i + 1))),
        };
        if dim == 0 {
            dim = row.len();
        } else if row.len() != dim {
            return Err(PipelineError::data(path, format!("row {} has {} columns, expected {dim}", i + 1, row.len())));
        }
        values.extend(row);
    }
    if dim == 0 {
        return Err(PipelineError::data(path, "no points"));
    }
    Ok(Points { values, dim })
}

pub fn encode_binary_points(points: &Points) -> Vec<u8> {
    let n = points.values.len() / points.dim;
    let mut out = Vec::with_capacity(16 + points.values.len() * 8);
    out.extend((n as u64).to_le_bytes());
    out.extend((points.dim as u64).to_le_bytes());
    for v in &points.values {
        out.extend(v.to_le_bytes());
    }
    out
}

pub fn decode_binary_points(bytes: &[u8]) -> std::result::Result<Points, String> {
    if bytes.len() < 16 {
        return Err("binary points file shorter than its header".into());
    }
    let n = u64::from_le_bytes(bytes[0..8].try_into().expect("8 bytes")) as usize;
    let dim = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
    let expected = n.checked_mul(dim).and_then(|c| c.checked_mul(8)).ok_or("header overflows")?;
    if dim == 0 || bytes.len() - 16 != expected {
        return Err(format!("header declares {n} x {dim} values but the payload holds {} bytes", bytes.len() - 16));
    }
    let values = bytes[16..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(Points { values, dim })
}

/// One integer label per line; blank and `#` lines are skipped. A first line
/// that is not an integer is taken as a header.
pub fn read_labels(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<i64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => {}
            Err(e) => return Err(PipelineError::data(path, format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

pub fn stage_dir(out_dir: &Path, stage: &str) -> PathBuf {
    out_dir.join(stage)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_points_round_trip() {
        let p = Points { values: vec![1.0, -2.5, 3.25, 0.0, 1e-300, f64::MAX], dim: 3 };
        assert_eq!(decode_binary_points(&encode_binary_points(&p)).unwrap(), p);
        assert!(decode_binary_points(&[0; 10]).is_err());
        let mut bad = encode_binary_points(&p);
        bad.pop();
        assert!(decode_binary_points(&bad).is_err());
    }

    #[test]
    fn hashed_outputs_carry_the_hash() {
        let mut c = HashedCsv::new("abc", &["a", "b"]);
        c.row(["1", "2"]);
        assert_eq!(String::from_utf8(c.into_bytes()).unwrap(), "# config_hash=abc\na,b\n1,2\n");
        let j = String::from_utf8(hashed_json("abc", &serde_json::json!({"x": 1}))).unwrap();
        assert!(j.contains("\"config_hash\": \"abc\""));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        atomic_write(&p, b"one").unwrap();
        atomic_write(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
