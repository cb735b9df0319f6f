//! Persistent artifacts: binary matrices, CSV tables, manifests and run summaries.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use faer::{Mat, MatRef};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Result, SfvError};

pub const MATRIX_MAGIC: &[u8; 8] = b"SFVM0001";
const HEADER_LEN: usize = 24;

/// Serializes `m` as magic, `u64` rows, `u64` cols and a column-major `f64` payload, all little-endian.
pub fn matrix_to_bytes(m: MatRef<'_, f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.nrows() * m.ncols());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            out.extend_from_slice(&m[(r, c)].to_le_bytes());
        }
    }
    out
}

fn parse_header(bytes: &[u8]) -> Result<(usize, usize)> {
    if bytes.len() < HEADER_LEN {
        return Err(SfvError::format(format!("matrix header truncated ({} bytes)", bytes.len())));
    }
    if &bytes[..8] != MATRIX_MAGIC {
        return Err(SfvError::format("bad matrix magic"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let to_usize = |v: u64| usize::try_from(v).map_err(|_| SfvError::format("matrix dimension overflows"));
    Ok((to_usize(rows)?, to_usize(cols)?))
}

fn payload_len(rows: usize, cols: usize) -> Result<usize> {
    rows.checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| SfvError::format(format!("matrix shape {rows}x{cols} overflows")))
}

pub fn matrix_from_bytes(bytes: &[u8]) -> Result<Mat<f64>> {
    let (rows, cols) = parse_header(bytes)?;
    let need = payload_len(rows, cols)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != need {
        return Err(SfvError::format(format!(
            "matrix {rows}x{cols} needs {need} payload bytes, found {}",
            payload.len()
        )));
    }
    let at = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().unwrap());
    Ok(Mat::from_fn(rows, cols, |r, c| at(c * rows + r)))
}

pub fn write_matrix(path: impl AsRef<Path>, m: MatRef<'_, f64>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&matrix_to_bytes(m))?;
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Mat<f64>> {
    let mut f = File::open(path)?;
    let mut header = [0u8; HEADER_LEN];
    f.read_exact(&mut header).map_err(|_| SfvError::format("matrix header truncated"))?;
    let (rows, cols) = parse_header(&header)?;
    let need = payload_len(rows, cols)?;
    let actual = f.metadata()?.len() as usize - HEADER_LEN;
    if actual != need {
        return Err(SfvError::format(format!(
            "matrix {rows}x{cols} needs {need} payload bytes, found {actual}"
        )));
    }
    let mut bytes = header.to_vec();
    bytes.reserve(need);
    BufReader::new(f).read_to_end(&mut bytes)?;
    matrix_from_bytes(&bytes)
}

/// Writes a matrix one column at a time; the column count is patched on [`finish`](Self::finish).
pub struct MatrixWriter {
    out: BufWriter<File>,
    rows: usize,
    cols: usize,
}

impl MatrixWriter {
    pub fn create(path: impl AsRef<Path>, rows: usize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        out.write_all(MATRIX_MAGIC)?;
        out.write_all(&(rows as u64).to_le_bytes())?;
        out.write_all(&0u64.to_le_bytes())?;
        Ok(Self { out, rows, cols: 0 })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn push_column(&mut self, col: &[f64]) -> Result<()> {
        if col.len() != self.rows {
            return Err(SfvError::format(format!("column of length {} for {} rows", col.len(), self.rows)));
        }
        for v in col {
            self.out.write_all(&v.to_le_bytes())?;
        }
        self.cols += 1;
        Ok(())
    }

    /// Appends every column of another matrix file with the same row count.
    pub fn append_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = File::open(path)?;
        let mut header = [0u8; HEADER_LEN];
        f.read_exact(&mut header).map_err(|_| SfvError::format("matrix header truncated"))?;
        let (rows, cols) = parse_header(&header)?;
        if rows != self.rows {
            return Err(SfvError::format(format!("cannot append {rows}-row matrix to {} rows", self.rows)));
        }
        let copied = std::io::copy(&mut BufReader::new(f), &mut self.out)?;
        if copied as usize != payload_len(rows, cols)? {
            return Err(SfvError::format("appended matrix payload truncated"));
        }
        self.cols += cols;
        Ok(())
    }

    pub fn finish(self) -> Result<usize> {
        let cols = self.cols;
        let mut f = self.out.into_inner().map_err(|e| SfvError::Io(e.into_error()))?;
        f.seek(SeekFrom::Start(16))?;
        f.write_all(&(cols as u64).to_le_bytes())?;
        f.sync_all()?;
        Ok(cols)
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a header row and equally long numeric columns.
pub fn write_csv(path: impl AsRef<Path>, header: &[String], columns: &[Vec<f64>]) -> Result<()> {
    if header.len() != columns.len() {
        return Err(SfvError::format("CSV header and column counts differ"));
    }
    let len = columns.first().map_or(0, Vec::len);
    if columns.iter().any(|c| c.len() != len) {
        return Err(SfvError::format("CSV columns have different lengths"));
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for r in 0..len {
        w.write_record(columns.iter().map(|c| format_f64(c[r]))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Header and columns of a numeric CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.header.iter().position(|h| h == name).map(|k| self.columns[k].as_slice())
    }
}

fn csv_error(e: csv::Error) -> SfvError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => SfvError::Io(e),
        k => SfvError::format(format!("CSV: {k:?}")),
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(SfvError::format("empty CSV"));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for record in r.records() {
        let record = record.map_err(csv_error)?;
        for (c, f) in record.iter().enumerate() {
            let v = f.parse::<f64>().map_err(|_| SfvError::format(format!("bad number '{f}'")))?;
            columns[c].push(v);
        }
    }
    Ok(CsvTable { header, columns })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<CsvTable> {
    parse_csv(&std::fs::read_to_string(path)?)
}

/// Flat `key=value` metadata; `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SfvError::format(format!("manifest line {} has no '='", n + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(SfvError::format(format!("manifest line {} has an empty key", n + 1)));
            }
            if entries.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(SfvError::format(format!("duplicate manifest key '{k}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let v = value.to_string().replace(['\n', '\r'], " ");
        self.entries.insert(key.to_string(), v);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| SfvError::format(format!("manifest missing '{key}'")))
    }

    pub fn get_usize(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse().map_err(|_| SfvError::format(format!("manifest '{key}' is not an integer: '{v}'")))
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let v = self.require(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| s.trim().parse().map_err(|_| SfvError::format(format!("manifest '{key}' has bad number '{s}'"))))
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let mut f = BufReader::new(File::open(path)?);
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        h.update(&buf[..k]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Machine-readable summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub problem: String,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: Vec<usize>,
    pub q: usize,
    pub method: String,
    #[serde(rename = "N")]
    pub n_modes: Option<usize>,
    #[serde(rename = "N_H")]
    pub n_hyper: Option<usize>,
    pub t_final: f64,
    pub errors: BTreeMap<String, f64>,
    pub flux_evaluations: u64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub wall_time_s: f64,
    pub notes: Vec<String>,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
