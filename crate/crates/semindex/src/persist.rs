//! Index persistence.
//!
//! Layout (all little-endian) after the common `SIDX | version | kind=3`
//! header:
//!
//! ```text
//! alpha u32 | n_labels u32
//! has_mapping u8 [ n_cells u32, cell_of u32 * n_labels ]
//! posting lists: per cell, len u64 then ids u64*   (cell count = n_cells
//!                                                    with a mapping, else
//!                                                    n_labels)
//! has_split u8 [ L u32, d u32, per cell: n_sub u32,
//!                per sub: centroid f32*d, len u64, ids u64* ]
//! has_pq u8 [ kind u8=4, M u32, K u32, d u32,
//!             codebooks f32 * (M * 2^K * d/M),
//!             centroids f32 * (n_cells * d),
//!             per posting-list entry: id u64 + M code bytes ]
//! ```
//!
//! Writes are atomic (temp file + rename), so a failed build never leaves a
//! partial index behind.

use std::io::{BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fio::{self, FmtReader, FmtWriter};
use crate::index::{CellSplit, IndexParams, LabelMapping, SemanticIndex, SplitStructure};
use crate::quant::{Centroids, PqCodebook, ResidualPq};

pub fn save_index(
    path: impl AsRef<Path>,
    index: &SemanticIndex,
    pq: Option<&ResidualPq>,
) -> Result<()> {
    fio::write_atomic(path.as_ref(), |w| write_index(w, index, pq))
}

fn write_index<W: std::io::Write>(
    w: &mut FmtWriter<W>,
    index: &SemanticIndex,
    pq: Option<&ResidualPq>,
) -> Result<()> {
    w.header(fio::KIND_INDEX)?;
    w.u32(index.params.alpha)?;
    w.u32(index.params.n_labels)?;

    match &index.mapping {
        Some(m) => {
            w.u8(1)?;
            w.u32(m.n_cells)?;
            for &c in &m.cell_of {
                w.u32(c)?;
            }
        }
        None => w.u8(0)?,
    }

    for list in &index.lists {
        w.u64(list.len() as u64)?;
        for &id in list {
            w.u64(id)?;
        }
    }

    match &index.split {
        Some(s) => {
            w.u8(1)?;
            w.u32(s.l)?;
            w.u32(s.d as u32)?;
            for cell in &s.cells {
                w.u32(cell.centroids.k as u32)?;
                for sub in 0..cell.centroids.k {
                    w.f32_slice(cell.centroids.row(sub))?;
                    let list = &cell.lists[sub];
                    w.u64(list.len() as u64)?;
                    for &id in list {
                        w.u64(id)?;
                    }
                }
            }
        }
        None => w.u8(0)?,
    }

    match pq {
        Some(pq) => {
            if pq.n_cells() != index.n_cells() {
                return Err(Error::Param(format!(
                    "PQ storage covers {} cells, index has {}",
                    pq.n_cells(),
                    index.n_cells()
                )));
            }
            w.u8(1)?;
            w.u8(fio::KIND_PQ)?;
            w.u32(pq.codebook.m as u32)?;
            w.u32(pq.codebook.k_bits)?;
            w.u32(pq.codebook.d() as u32)?;
            w.f32_slice(&pq.codebook.codewords)?;
            w.f32_slice(&pq.centroids.data)?;
            for (cell, list) in index.lists.iter().enumerate() {
                for (entry, &id) in list.iter().enumerate() {
                    w.u64(id)?;
                    w.bytes(pq.code(cell, entry))?;
                }
            }
        }
        None => w.u8(0)?,
    }
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<(SemanticIndex, Option<ResidualPq>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_index(BufReader::new(file)).map_err(|e| e.in_file(path))
}

pub fn read_index(r: impl Read) -> Result<(SemanticIndex, Option<ResidualPq>)> {
    let mut r = FmtReader::new(r);
    r.header(fio::KIND_INDEX)?;
    let alpha = r.u32()?;
    let n_labels = r.u32()?;
    let params = IndexParams::new(alpha, n_labels)?;

    let mapping = match r.u8()? {
        0 => None,
        1 => {
            let n_cells = r.u32()?;
            let mut cell_of = Vec::with_capacity(n_labels as usize);
            for _ in 0..n_labels {
                cell_of.push(r.u32()?);
            }
            let mapping = LabelMapping {
                n_labels,
                n_cells,
                cell_of,
            };
            mapping.validate()?;
            Some(mapping)
        }
        other => {
            return Err(Error::format(
                r.offset() - 1,
                format!("bad mapping flag {other}"),
            ))
        }
    };

    let n_cells = mapping
        .as_ref()
        .map(|m| m.n_cells as usize)
        .unwrap_or(n_labels as usize);
    let mut lists = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        let len = r.u64()? as usize;
        let mut list = Vec::with_capacity(len);
        let mut prev: Option<u64> = None;
        for _ in 0..len {
            let at = r.offset();
            let id = r.u64()?;
            if let Some(p) = prev {
                if id <= p {
                    return Err(Error::format(at, "posting list ids not strictly ascending"));
                }
            }
            prev = Some(id);
            list.push(id);
        }
        lists.push(list);
    }

    let split = match r.u8()? {
        0 => None,
        1 => {
            let l = r.u32()?;
            let d = r.u32()? as usize;
            let mut cells = Vec::with_capacity(n_cells);
            for _ in 0..n_cells {
                let n_sub = r.u32()? as usize;
                let mut centroids = Centroids::zeros(0, d);
                let mut sub_lists = Vec::with_capacity(n_sub);
                for _ in 0..n_sub {
                    r.f32_into(&mut centroids.data, d)?;
                    centroids.k += 1;
                    let len = r.u64()? as usize;
                    let mut list = Vec::with_capacity(len);
                    for _ in 0..len {
                        list.push(r.u64()?);
                    }
                    sub_lists.push(list);
                }
                cells.push(CellSplit {
                    centroids,
                    lists: sub_lists,
                });
            }
            Some(SplitStructure { l, d, cells })
        }
        other => {
            return Err(Error::format(
                r.offset() - 1,
                format!("bad split flag {other}"),
            ))
        }
    };

    let pq = match r.u8()? {
        0 => None,
        1 => {
            let at = r.offset();
            let kind = r.u8()?;
            if kind != fio::KIND_PQ {
                return Err(Error::format(at, format!("bad PQ block kind {kind}")));
            }
            let m = r.u32()? as usize;
            let k_bits = r.u32()?;
            let at = r.offset();
            let d = r.u32()? as usize;
            if m == 0 || d == 0 || d % m != 0 {
                return Err(Error::format(at, "inconsistent PQ geometry"));
            }
            if k_bits == 0 || k_bits > 8 {
                return Err(Error::format(at, format!("unsupported k_bits {k_bits}")));
            }
            let n_codes = 1usize << k_bits;
            let mut codewords = Vec::new();
            r.f32_into(&mut codewords, m * n_codes * (d / m))?;
            let codebook = PqCodebook {
                m,
                k_bits,
                sub_dim: d / m,
                codewords,
            };
            let mut centroid_data = Vec::new();
            r.f32_into(&mut centroid_data, n_cells * d)?;
            let centroids = Centroids {
                k: n_cells,
                d,
                data: centroid_data,
            };
            let mut codes = Vec::with_capacity(n_cells);
            for list in &lists {
                let mut buf = vec![0u8; list.len() * m];
                for (entry, &id) in list.iter().enumerate() {
                    let at = r.offset();
                    let stored = r.u64()?;
                    if stored != id {
                        return Err(Error::format(
                            at,
                            format!("PQ entry id {stored} does not match posting list id {id}"),
                        ));
                    }
                    r.fill(&mut buf[entry * m..(entry + 1) * m])?;
                }
                codes.push(buf);
            }
            Some(ResidualPq::from_parts(codebook, centroids, codes))
        }
        other => {
            return Err(Error::format(
                r.offset() - 1,
                format!("bad PQ flag {other}"),
            ))
        }
    };

    r.expect_eof()?;
    Ok((SemanticIndex::from_parts(params, mapping, lists, split), pq))
}
