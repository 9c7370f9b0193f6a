//! Product quantization and ADC lookup tables.
//!
//! A vector is split into `m` sub-vectors; each sub-vector is quantized to
//! the nearest of `2^k_bits` codewords trained per subspace. A code is `m`
//! bytes. Query scoring precomputes per-subspace tables so the distance to a
//! code is a sum of `m` lookups.

use crate::error::{Error, Result};
use crate::math::{dot, sq_l2};

use super::{kmeans, Points, DEFAULT_KMEANS_ITERS};
use crate::math::sub_seed_n;

/// Per-subspace codebooks. `codewords` is laid out as
/// `[subspace][code][sub_dim]`, always padded to the full `2^k_bits` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct PqCodebook {
    pub m: usize,
    pub k_bits: u32,
    pub sub_dim: usize,
    pub codewords: Vec<f32>,
}

impl PqCodebook {
    pub fn d(&self) -> usize {
        self.m * self.sub_dim
    }

    pub fn n_codes(&self) -> usize {
        1usize << self.k_bits
    }

    pub fn codeword(&self, subspace: usize, code: usize) -> &[f32] {
        let stride = self.n_codes() * self.sub_dim;
        let start = subspace * stride + code * self.sub_dim;
        &self.codewords[start..start + self.sub_dim]
    }
}

/// Trains independent per-subspace codebooks with k-means.
///
/// Requires `d % m == 0` and `k_bits <= 8` (codes persist as single bytes).
/// Subspaces whose data holds fewer distinct sub-vectors than `2^k_bits`
/// produce a partially trained codebook padded with copies of the first
/// codeword; encoding never selects a pad because ties go to the lowest
/// index.
pub fn train_pq(points: &Points, m: usize, k_bits: u32, seed: u64) -> Result<PqCodebook> {
    if m == 0 {
        return Err(Error::Param("pq requires m >= 1".into()));
    }
    if points.d % m != 0 {
        return Err(Error::Param(format!(
            "dimension {} is not divisible by m={}",
            points.d, m
        )));
    }
    if k_bits == 0 || k_bits > 8 {
        return Err(Error::Param(
            "k_bits must lie in 1..=8 (codes are stored as single bytes)".into(),
        ));
    }
    if points.n() == 0 {
        return Err(Error::Param("pq training requires a non-empty point set".into()));
    }
    let sub_dim = points.d / m;
    let n_codes = 1usize << k_bits;
    let mut codewords = vec![0.0f32; m * n_codes * sub_dim];
    let mut sub_data = vec![0.0f32; points.n() * sub_dim];
    for subspace in 0..m {
        for i in 0..points.n() {
            let row = points.row(i);
            sub_data[i * sub_dim..(i + 1) * sub_dim]
                .copy_from_slice(&row[subspace * sub_dim..(subspace + 1) * sub_dim]);
        }
        let fit = kmeans(
            &Points::new(sub_dim, &sub_data),
            n_codes,
            sub_seed_n(seed, "pq-subspace", subspace as u64),
            DEFAULT_KMEANS_ITERS,
        )?;
        let stride = n_codes * sub_dim;
        for code in 0..n_codes {
            let src = if code < fit.centroids.k {
                fit.centroids.row(code)
            } else {
                fit.centroids.row(0)
            };
            codewords[subspace * stride + code * sub_dim..subspace * stride + (code + 1) * sub_dim]
                .copy_from_slice(src);
        }
    }
    Ok(PqCodebook {
        m,
        k_bits,
        sub_dim,
        codewords,
    })
}

/// Encodes a point: per subspace, the index of the nearest codeword
/// (ties resolve to the lowest index).
pub fn encode(codebook: &PqCodebook, point: &[f32]) -> Result<Vec<u8>> {
    if point.len() != codebook.d() {
        return Err(Error::Dimension {
            expected: codebook.d(),
            got: point.len(),
        });
    }
    let mut code = Vec::with_capacity(codebook.m);
    for subspace in 0..codebook.m {
        let sub = &point[subspace * codebook.sub_dim..(subspace + 1) * codebook.sub_dim];
        let mut best = (0usize, f64::INFINITY);
        for j in 0..codebook.n_codes() {
            let d = sq_l2(codebook.codeword(subspace, j), sub);
            if d < best.1 {
                best = (j, d);
            }
        }
        code.push(best.0 as u8);
    }
    Ok(code)
}

/// Reconstructs the vector a code stands for.
pub fn decode(codebook: &PqCodebook, code: &[u8]) -> Vec<f32> {
    debug_assert_eq!(code.len(), codebook.m);
    let mut out = Vec::with_capacity(codebook.d());
    for (subspace, &c) in code.iter().enumerate() {
        out.extend_from_slice(codebook.codeword(subspace, c as usize));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Entries are squared distances from a query sub-vector to a codeword.
    SquaredL2,
    /// Entries are inner products of a query sub-vector with a codeword.
    InnerProduct,
}

/// Per-query lookup tables: `m * 2^k_bits` entries.
#[derive(Debug, Clone)]
pub struct AdcTables {
    pub kind: TableKind,
    pub m: usize,
    pub n_codes: usize,
    pub table: Vec<f32>,
}

impl AdcTables {
    /// Sum of the table entries selected by `code`.
    pub fn lookup_sum(&self, code: &[u8]) -> f64 {
        debug_assert_eq!(code.len(), self.m);
        let mut sum = 0.0f64;
        for (subspace, &c) in code.iter().enumerate() {
            sum += self.table[subspace * self.n_codes + c as usize] as f64;
        }
        sum
    }
}

fn build_tables(codebook: &PqCodebook, query: &[f32], kind: TableKind) -> Result<AdcTables> {
    if query.len() != codebook.d() {
        return Err(Error::Dimension {
            expected: codebook.d(),
            got: query.len(),
        });
    }
    let n_codes = codebook.n_codes();
    let mut table = vec![0.0f32; codebook.m * n_codes];
    for subspace in 0..codebook.m {
        let q_sub = &query[subspace * codebook.sub_dim..(subspace + 1) * codebook.sub_dim];
        for j in 0..n_codes {
            let w = codebook.codeword(subspace, j);
            table[subspace * n_codes + j] = match kind {
                TableKind::SquaredL2 => sq_l2(q_sub, w) as f32,
                TableKind::InnerProduct => dot(q_sub, w) as f32,
            };
        }
    }
    Ok(AdcTables {
        kind,
        m: codebook.m,
        n_codes,
        table,
    })
}

/// Squared-L2 lookup tables for `query`; `adc_distance` over them equals the
/// squared distance from the query to the decoded code.
pub fn adc_tables(codebook: &PqCodebook, query: &[f32]) -> Result<AdcTables> {
    build_tables(codebook, query, TableKind::SquaredL2)
}

/// Inner-product lookup tables for residual scoring.
pub fn inner_product_tables(codebook: &PqCodebook, query: &[f32]) -> Result<AdcTables> {
    build_tables(codebook, query, TableKind::InnerProduct)
}

/// Asymmetric distance: the sum of per-subspace squared distances selected by
/// `code`.
pub fn adc_distance(tables: &AdcTables, code: &[u8]) -> f64 {
    debug_assert_eq!(tables.kind, TableKind::SquaredL2);
    tables.lookup_sum(code)
}
