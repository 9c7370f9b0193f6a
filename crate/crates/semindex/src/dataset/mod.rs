//! Dataset types and their on-disk formats.
//!
//! Three artifact formats live here:
//!
//! * feature files (`kind=1`): dense `n x d` row-major f32 matrices,
//! * label files (`kind=2`): per-item sparse top-k classifier confidences,
//! * ground-truth files: UTF-8 text, one `<query>: <id> <id> ...` line per
//!   query plus optional `<query>!: ...` junk lines.
//!
//! All binary payloads are little-endian and round-trip bit-exactly.

mod synth;

pub use synth::{synth_dataset, SyntheticConfig, SyntheticData};

use std::collections::BTreeSet;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fio::{self, FmtReader, FmtWriter};

/// A dense set of `n` vectors of dimension `d`, stored row-major. Item ids
/// are implicit: row `i` is item `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub d: usize,
    pub data: Vec<f32>,
}

impl FeatureSet {
    /// Wraps a row-major buffer. The dimension must be at least 1, the buffer
    /// length a multiple of `d`, and every value finite.
    pub fn new(d: usize, data: Vec<f32>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Param("feature dimension must be >= 1".into()));
        }
        if data.len() % d != 0 {
            return Err(Error::Param(format!(
                "feature buffer length {} is not a multiple of d={}",
                data.len(),
                d
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Param(format!(
                "non-finite feature value at flat position {pos}"
            )));
        }
        Ok(FeatureSet { d, data })
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

/// One sparse label row: `(label_id, confidence)` pairs sorted by descending
/// confidence, ties broken by ascending label id.
pub type LabelRow = Vec<(u32, f32)>;

/// Per-item classifier confidences over a vocabulary of `n_labels` labels.
/// Only a top-k slice per row is stored; the underlying dense confidence
/// vector is never materialized.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub n_labels: u32,
    pub rows: Vec<LabelRow>,
}

impl LabelMatrix {
    /// Builds a matrix from raw rows, sorting each into canonical order and
    /// validating bounds, duplicates and confidence ranges.
    pub fn new(n_labels: u32, mut rows: Vec<LabelRow>) -> Result<Self> {
        for (i, row) in rows.iter_mut().enumerate() {
            canonicalize_row(row);
            validate_row(row, n_labels)
                .map_err(|e| Error::Param(format!("label row {i}: {e}")))?;
        }
        Ok(LabelMatrix { n_labels, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &LabelRow {
        &self.rows[i]
    }
}

/// Sorts a row by descending confidence, breaking ties by ascending label id.
pub fn canonicalize_row(row: &mut LabelRow) {
    row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
}

fn validate_row(row: &LabelRow, n_labels: u32) -> std::result::Result<(), String> {
    let mut seen = BTreeSet::new();
    for &(label, conf) in row {
        if label >= n_labels {
            return Err(format!("label id {label} out of range (n_labels={n_labels})"));
        }
        if !seen.insert(label) {
            return Err(format!("duplicate label id {label}"));
        }
        if !conf.is_finite() || !(0.0..=1.0).contains(&conf) {
            return Err(format!("confidence {conf} for label {label} outside [0, 1]"));
        }
    }
    Ok(())
}

/// Relevance judgements for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct GtEntry {
    pub query_id: u64,
    pub relevant: BTreeSet<u64>,
    /// Items excluded from scoring entirely (removed from rankings before
    /// metrics are computed). Empty by default.
    pub junk: BTreeSet<u64>,
}

/// Ground truth for a query set, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub entries: Vec<GtEntry>,
}

impl GroundTruth {
    pub fn entry_for(&self, query_id: u64) -> Option<&GtEntry> {
        self.entries.iter().find(|e| e.query_id == query_id)
    }
}

// ---------------------------------------------------------------------------
// Feature files
// ---------------------------------------------------------------------------

pub fn read_features_from(r: impl Read) -> Result<FeatureSet> {
    let mut r = FmtReader::new(r);
    r.header(fio::KIND_FEATURES)?;
    let n = r.u64()? as usize;
    let at = r.offset();
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(Error::format(at, "dimension must be >= 1"));
    }
    let payload_start = r.offset();
    let mut data = Vec::new();
    r.f32_into(&mut data, n * d)?;
    if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::format(
            payload_start + 4 * pos as u64,
            format!("non-finite feature value {}", data[pos]),
        ));
    }
    r.expect_eof()?;
    Ok(FeatureSet { d, data })
}

pub fn write_features_to(w: impl Write, fs: &FeatureSet) -> Result<()> {
    let mut w = FmtWriter::new(w);
    w.header(fio::KIND_FEATURES)?;
    w.u64(fs.n() as u64)?;
    w.u32(fs.d as u32)?;
    w.f32_slice(&fs.data)?;
    w.flush()
}

pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_features_from(std::io::BufReader::new(file)).map_err(|e| e.in_file(path))
}

pub fn write_features(path: impl AsRef<Path>, fs: &FeatureSet) -> Result<()> {
    fio::write_atomic(path.as_ref(), |w| {
        w.header(fio::KIND_FEATURES)?;
        w.u64(fs.n() as u64)?;
        w.u32(fs.d as u32)?;
        w.f32_slice(&fs.data)
    })
}

// ---------------------------------------------------------------------------
// Label files
// ---------------------------------------------------------------------------

pub fn read_labels_from(r: impl Read) -> Result<LabelMatrix> {
    let mut r = FmtReader::new(r);
    r.header(fio::KIND_LABELS)?;
    let n = r.u64()? as usize;
    let n_labels = r.u32()?;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let k = r.u16()? as usize;
        let mut row: LabelRow = Vec::with_capacity(k);
        for _ in 0..k {
            let at = r.offset();
            let label = r.u32()?;
            let conf = r.f32()?;
            if label >= n_labels {
                return Err(Error::format(
                    at,
                    format!("label id {label} out of range (n_labels={n_labels})"),
                ));
            }
            if !conf.is_finite() || !(0.0..=1.0).contains(&conf) {
                return Err(Error::format(
                    at + 4,
                    format!("confidence {conf} outside [0, 1]"),
                ));
            }
            if row.iter().any(|&(l, _)| l == label) {
                return Err(Error::format(at, format!("duplicate label id {label} in row")));
            }
            row.push((label, conf));
        }
        // Rows are re-sorted on load; writers are not trusted to store them
        // in canonical order.
        canonicalize_row(&mut row);
        rows.push(row);
    }
    r.expect_eof()?;
    Ok(LabelMatrix { n_labels, rows })
}

pub fn write_labels_to(w: impl Write, labels: &LabelMatrix) -> Result<()> {
    let mut w = FmtWriter::new(w);
    write_labels_inner(&mut w, labels)?;
    w.flush()
}

fn write_labels_inner<W: Write>(w: &mut FmtWriter<W>, labels: &LabelMatrix) -> Result<()> {
    w.header(fio::KIND_LABELS)?;
    w.u64(labels.n() as u64)?;
    w.u32(labels.n_labels)?;
    for row in &labels.rows {
        let k = u16::try_from(row.len())
            .map_err(|_| Error::Param(format!("label row too long ({} entries)", row.len())))?;
        w.u16(k)?;
        for &(label, conf) in row {
            w.u32(label)?;
            w.f32(conf)?;
        }
    }
    Ok(())
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_labels_from(std::io::BufReader::new(file)).map_err(|e| e.in_file(path))
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelMatrix) -> Result<()> {
    fio::write_atomic(path.as_ref(), |w| write_labels_inner(w, labels))
}

// ---------------------------------------------------------------------------
// Ground-truth files
// ---------------------------------------------------------------------------

pub fn read_ground_truth_from(r: impl Read) -> Result<GroundTruth> {
    let reader = std::io::BufReader::new(r);
    let mut entries: Vec<GtEntry> = Vec::new();
    let mut byte_offset: u64 = 0;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        let line_start = byte_offset;
        byte_offset += line.len() as u64 + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let colon = trimmed.find(':').ok_or_else(|| {
            Error::format(line_start, format!("line {}: missing ':'", line_no + 1))
        })?;
        let (head, tail) = trimmed.split_at(colon);
        let ids_str = &tail[1..];
        let (id_str, is_junk) = match head.strip_suffix('!') {
            Some(prefix) => (prefix, true),
            None => (head, false),
        };
        let query_id: u64 = id_str.trim().parse().map_err(|_| {
            Error::format(
                line_start,
                format!("line {}: bad query id {:?}", line_no + 1, id_str.trim()),
            )
        })?;
        let mut ids = BTreeSet::new();
        let mut dups = 0usize;
        for tok in ids_str.split_whitespace() {
            let id: u64 = tok.parse().map_err(|_| {
                Error::format(
                    line_start,
                    format!("line {}: bad item id {:?}", line_no + 1, tok),
                )
            })?;
            if !ids.insert(id) {
                dups += 1;
            }
        }
        if dups > 0 {
            log::warn!(
                "ground truth line {}: {} duplicate id(s) removed for query {}",
                line_no + 1,
                dups,
                query_id
            );
        }
        if is_junk {
            match entries.iter_mut().find(|e| e.query_id == query_id) {
                Some(entry) => {
                    if !entry.junk.is_empty() {
                        return Err(Error::GroundTruth(format!(
                            "query {query_id} has more than one junk line"
                        )));
                    }
                    entry.junk = ids;
                }
                None => {
                    // Junk may precede the relevant line; remember it and
                    // require the relevant line to show up later.
                    entries.push(GtEntry {
                        query_id,
                        relevant: BTreeSet::new(),
                        junk: ids,
                    });
                }
            }
        } else {
            if ids.is_empty() {
                return Err(Error::GroundTruth(format!(
                    "query {query_id} has an empty relevant set"
                )));
            }
            match entries.iter_mut().find(|e| e.query_id == query_id) {
                Some(entry) if entry.relevant.is_empty() => entry.relevant = ids,
                Some(_) => {
                    return Err(Error::GroundTruth(format!(
                        "query {query_id} appears on more than one relevant line"
                    )));
                }
                None => entries.push(GtEntry {
                    query_id,
                    relevant: ids,
                    junk: BTreeSet::new(),
                }),
            }
        }
    }
    for entry in &entries {
        if entry.relevant.is_empty() {
            return Err(Error::GroundTruth(format!(
                "query {} has junk ids but no relevant line",
                entry.query_id
            )));
        }
        if entry.relevant.intersection(&entry.junk).next().is_some() {
            return Err(Error::GroundTruth(format!(
                "query {}: relevant and junk sets overlap",
                entry.query_id
            )));
        }
    }
    Ok(GroundTruth { entries })
}

pub fn write_ground_truth_to(mut w: impl Write, gt: &GroundTruth) -> Result<()> {
    for entry in &gt.entries {
        write!(w, "{}:", entry.query_id)?;
        for id in &entry.relevant {
            write!(w, " {id}")?;
        }
        writeln!(w)?;
        if !entry.junk.is_empty() {
            write!(w, "{}!:", entry.query_id)?;
            for id in &entry.junk {
                write!(w, " {id}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_ground_truth_from(file).map_err(|e| e.in_file(path))
}

pub fn write_ground_truth(path: impl AsRef<Path>, gt: &GroundTruth) -> Result<()> {
    let mut buf = Vec::new();
    write_ground_truth_to(&mut buf, gt)?;
    let tmp = path.as_ref().with_extension("txt.tmp");
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, path.as_ref())?;
    Ok(())
}
