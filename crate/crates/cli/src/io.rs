//! Trajectory files and result tables.
//!
//! CSV trajectories start with `#` comment lines, one of which holds the
//! JSON metadata, followed by a header of `name[unit]` cells and one row per
//! sample. The binary format is
//!
//! ```text
//! magic  b"QCTRAJ\0\x01"       8 bytes
//! len    u64 little endian     length of the JSON header
//! header JSON metadata          `len` bytes, UTF-8
//! data   f64 little endian      column-major, `rows` values per column
//! ```
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the trajectory bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use quadcool_core::sim::{Column, ColumnKind, ModelTier, Trajectory, TrajectoryMeta};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::error::CliError;

pub const BINARY_MAGIC: &[u8; 8] = b"QCTRAJ\0\x01";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ColumnHeader {
    name: String,
    unit: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    model: String,
    seed: u64,
    index: u64,
    dt: f64,
    record_stride: usize,
    params_digest: String,
    sample_rate_hz: f64,
    rows: usize,
    columns: Vec<ColumnHeader>,
}

impl Header {
    fn of(t: &Trajectory) -> Self {
        Header {
            model: t.meta.model.name().into(),
            seed: t.meta.seed,
            index: t.meta.index,
            dt: t.meta.dt,
            record_stride: t.meta.record_stride,
            params_digest: t.meta.params_digest.clone(),
            sample_rate_hz: t.sample_rate,
            rows: t.len(),
            columns: t
                .columns
                .iter()
                .map(|c| ColumnHeader { name: c.kind.name().into(), unit: c.kind.unit().into() })
                .collect(),
        }
    }

    fn trajectory(&self, data: Vec<Vec<f64>>, source: &str) -> Result<Trajectory, CliError> {
        let bad = |m: String| CliError::Input(format!("{source}: {m}"));
        let model = ModelTier::from_name(&self.model).ok_or_else(|| bad(format!("unknown model `{}`", self.model)))?;
        if !(self.sample_rate_hz > 0.0) {
            return Err(bad("sample rate must be positive".into()));
        }
        let meta = TrajectoryMeta {
            model,
            seed: self.seed,
            index: self.index,
            dt: self.dt,
            record_stride: self.record_stride,
            params_digest: self.params_digest.clone(),
        };
        let mut t = Trajectory::new(self.sample_rate_hz, meta);
        for (h, values) in self.columns.iter().zip(data) {
            let kind = ColumnKind::from_name(&h.name).ok_or_else(|| bad(format!("unknown column `{}`", h.name)))?;
            if h.unit != kind.unit() {
                return Err(bad(format!("column `{}` has unit `{}`, expected `{}`", h.name, h.unit, kind.unit())));
            }
            t.columns.push(Column { kind, values });
        }
        t.validate().map_err(|e| bad(e.to_string()))?;
        Ok(t)
    }
}

/// Shortest representation that parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub fn trajectory_file_name(index: u64, format: Format) -> String {
    match format {
        Format::Csv => format!("traj_{index:04}.csv"),
        Format::Binary => format!("traj_{index:04}.qct"),
    }
}

pub fn write_trajectory(path: &Path, t: &Trajectory, format: Format) -> Result<(), CliError> {
    let bytes = match format {
        Format::Csv => trajectory_csv(t).into_bytes(),
        Format::Binary => trajectory_binary(t),
    };
    write_file(path, &bytes)
}

fn trajectory_csv(t: &Trajectory) -> String {
    let header = Header::of(t);
    let mut s = String::new();
    s.push_str("# quadcool trajectory\n# ");
    s.push_str(&serde_json::to_string(&header).expect("header serializes"));
    s.push('\n');
    let names: Vec<String> = header.columns.iter().map(|c| format!("{}[{}]", c.name, c.unit)).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    for i in 0..t.len() {
        for (j, c) in t.columns.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "{:e}", c.values[i]).expect("string write");
        }
        s.push('\n');
    }
    s
}

fn trajectory_binary(t: &Trajectory) -> Vec<u8> {
    let json = serde_json::to_vec(&Header::of(t)).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + 8 * t.len() * t.columns.len());
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for c in &t.columns {
        for v in &c.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

/// Reads either format, detected from the leading bytes.
pub fn read_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let source = path.display().to_string();
    if bytes.starts_with(BINARY_MAGIC) {
        parse_binary(&bytes, &source)
    } else {
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::Input(format!("{source}: not UTF-8 text")))?;
        parse_csv(text, &source)
    }
}

fn parse_binary(bytes: &[u8], source: &str) -> Result<Trajectory, CliError> {
    let bad = |m: &str| CliError::Input(format!("{source}: {m}"));
    let len_bytes: [u8; 8] = bytes.get(8..16).ok_or_else(|| bad("truncated header"))?.try_into().expect("8 bytes");
    let len = u64::from_le_bytes(len_bytes) as usize;
    let json = bytes.get(16..16 + len).ok_or_else(|| bad("truncated header"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| bad(&e.to_string()))?;
    let data = &bytes[16 + len..];
    if data.len() != 8 * header.rows * header.columns.len() {
        return Err(bad("data length does not match the header"));
    }
    let columns = data
        .chunks_exact(8 * header.rows.max(1))
        .take(header.columns.len())
        .map(|chunk| chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))).collect())
        .collect();
    header.trajectory(columns, source)
}

fn parse_csv(text: &str, source: &str) -> Result<Trajectory, CliError> {
    let bad = |m: String| CliError::Input(format!("{source}: {m}"));
    let mut header: Option<Header> = None;
    let mut lines = text.lines().enumerate().peekable();
    while let Some((_, line)) = lines.peek() {
        let Some(comment) = line.strip_prefix('#') else { break };
        let comment = comment.trim();
        if comment.starts_with('{') {
            header = Some(serde_json::from_str(comment).map_err(|e| bad(format!("metadata: {e}")))?);
        }
        lines.next();
    }
    let header = header.ok_or_else(|| bad("no metadata line".into()))?;
    let (_, names) = lines.next().ok_or_else(|| bad("no header row".into()))?;
    let cells: Vec<&str> = names.split(',').collect();
    if cells.len() != header.columns.len() {
        return Err(bad("header row does not match the metadata".into()));
    }
    for (cell, h) in cells.iter().zip(&header.columns) {
        let expected = format!("{}[{}]", h.name, h.unit);
        if cell.trim() != expected {
            return Err(bad(format!("header cell `{cell}` should be `{expected}` (units are required)")));
        }
    }
    let mut columns = vec![Vec::with_capacity(header.rows); cells.len()];
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut n = 0;
        for (j, cell) in line.split(',').enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| bad(format!("line {}: bad number `{cell}`", lineno + 1)))?;
            columns.get_mut(j).ok_or_else(|| bad(format!("line {}: too many cells", lineno + 1)))?.push(v);
            n += 1;
        }
        if n != cells.len() {
            return Err(bad(format!("line {}: expected {} cells, got {n}", lineno + 1, cells.len())));
        }
    }
    if columns.first().map_or(0, Vec::len) != header.rows {
        return Err(bad(format!("metadata promises {} rows", header.rows)));
    }
    header.trajectory(columns, source)
}

/// Plain CSV table.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, self.to_csv().as_bytes())
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn create_dir(dir: &Path) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}
