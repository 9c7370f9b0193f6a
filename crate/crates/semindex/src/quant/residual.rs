//! Residual product quantization against partition centroids, and the
//! query-time scoring that decomposes distances into precomputed tables.
//!
//! A stored point is approximated as `centroid + decode(code)` where the code
//! quantizes the residual `x - centroid`. For a query `q`, partition `i` and
//! code `r`:
//!
//! * squared L2:  `|q|^2 - 2<q,c_i> - 2 sum_m <q_m, r_m> + sum_m |c_i_m + r_m|^2`
//! * cosine:      `(<q,c_i> + sum_m <q_m, r_m>) / (|q| * sqrt(sum_m |c_i_m + r_m|^2))`
//!
//! Both equal the exact metric against the reconstruction; the subspace
//! decomposition is algebraically exact because subspaces partition the
//! coordinates. The `<q,c_i>` terms and the inner-product tables are
//! query-local; the `|c_i_m + r_m|^2` table is query-independent and built
//! once per storage.

use crate::dataset::FeatureSet;
use crate::error::{Error, Result};
use crate::math::{dot, norm_sq};

use super::pq::{encode, inner_product_tables, train_pq, AdcTables, PqCodebook};
use super::{Centroids, Points};

/// Mean of each partition's member vectors. Empty partitions carry a zero
/// centroid and are flagged; they are skipped in scoring.
pub fn partition_centroids(db: &FeatureSet, lists: &[Vec<u64>]) -> (Centroids, Vec<bool>) {
    let d = db.d;
    let mut centroids = Centroids::zeros(lists.len(), d);
    let mut empty = vec![false; lists.len()];
    for (cell, list) in lists.iter().enumerate() {
        if list.is_empty() {
            empty[cell] = true;
            continue;
        }
        let mut acc = vec![0.0f64; d];
        for &id in list {
            for (a, v) in acc.iter_mut().zip(db.row(id as usize)) {
                *a += *v as f64;
            }
        }
        for (out, a) in centroids.row_mut(cell).iter_mut().zip(&acc) {
            *out = (*a / list.len() as f64) as f32;
        }
    }
    (centroids, empty)
}

/// Encodes `x - centroid` with the given residual codebook.
pub fn encode_residual(centroid: &[f32], codebook: &PqCodebook, x: &[f32]) -> Result<Vec<u8>> {
    if x.len() != centroid.len() {
        return Err(Error::Dimension {
            expected: centroid.len(),
            got: x.len(),
        });
    }
    let residual: Vec<f32> = x.iter().zip(centroid).map(|(v, c)| v - c).collect();
    encode(codebook, &residual)
}

/// Query-independent table of `|c_i_m + r_j^m|^2` per partition, subspace and
/// codeword.
#[derive(Debug, Clone)]
pub struct ResidualNormTable {
    pub m: usize,
    pub n_codes: usize,
    pub per_cell: Vec<Vec<f32>>,
}

pub fn residual_norm_table(centroids: &Centroids, codebook: &PqCodebook) -> ResidualNormTable {
    let m = codebook.m;
    let n_codes = codebook.n_codes();
    let sub_dim = codebook.sub_dim;
    let mut per_cell = Vec::with_capacity(centroids.k);
    for cell in 0..centroids.k {
        let c = centroids.row(cell);
        let mut table = vec![0.0f32; m * n_codes];
        for subspace in 0..m {
            let c_sub = &c[subspace * sub_dim..(subspace + 1) * sub_dim];
            for j in 0..n_codes {
                let w = codebook.codeword(subspace, j);
                let mut s = 0.0f64;
                for (cv, wv) in c_sub.iter().zip(w) {
                    let v = *cv as f64 + *wv as f64;
                    s += v * v;
                }
                table[subspace * n_codes + j] = s as f32;
            }
        }
        per_cell.push(table);
    }
    ResidualNormTable {
        m,
        n_codes,
        per_cell,
    }
}

impl ResidualNormTable {
    pub fn lookup_sum(&self, cell: usize, code: &[u8]) -> f64 {
        let table = &self.per_cell[cell];
        let mut sum = 0.0f64;
        for (subspace, &c) in code.iter().enumerate() {
            sum += table[subspace * self.n_codes + c as usize] as f64;
        }
        sum
    }
}

/// Residual-PQ storage over a set of partitions: one centroid per partition
/// and, aligned with each posting list, one residual code per member.
#[derive(Debug, Clone)]
pub struct ResidualPq {
    pub codebook: PqCodebook,
    pub centroids: Centroids,
    pub empty: Vec<bool>,
    /// `codes[cell]` is a flat buffer, `m` bytes per posting-list entry, in
    /// posting-list order.
    pub codes: Vec<Vec<u8>>,
    pub norm_table: ResidualNormTable,
}

impl ResidualPq {
    pub fn code(&self, cell: usize, entry: usize) -> &[u8] {
        let m = self.codebook.m;
        &self.codes[cell][entry * m..(entry + 1) * m]
    }

    pub fn n_cells(&self) -> usize {
        self.centroids.k
    }

    /// Reconstruction of one stored entry: `centroid + decode(code)`.
    pub fn reconstruct(&self, cell: usize, entry: usize) -> Vec<f32> {
        let mut v = super::pq::decode(&self.codebook, self.code(cell, entry));
        for (out, c) in v.iter_mut().zip(self.centroids.row(cell)) {
            *out += c;
        }
        v
    }

    pub fn from_parts(codebook: PqCodebook, centroids: Centroids, codes: Vec<Vec<u8>>) -> Self {
        let empty = codes.iter().map(|c| c.is_empty()).collect();
        let norm_table = residual_norm_table(&centroids, &codebook);
        ResidualPq {
            codebook,
            centroids,
            empty,
            codes,
            norm_table,
        }
    }
}

/// Trains a shared residual codebook on residuals pooled over all partitions
/// and encodes every posting-list entry against its partition centroid. An
/// item that appears in several lists is encoded once per list.
///
/// `max_train` caps the pooled training set with a deterministic stride.
pub fn build_residual_pq(
    db: &FeatureSet,
    lists: &[Vec<u64>],
    m: usize,
    k_bits: u32,
    seed: u64,
    max_train: Option<usize>,
) -> Result<ResidualPq> {
    let d = db.d;
    let (centroids, _empty) = partition_centroids(db, lists);

    let total: usize = lists.iter().map(|l| l.len()).sum();
    if total == 0 {
        return Err(Error::Param(
            "residual PQ requires at least one posting-list entry".into(),
        ));
    }
    let cap = max_train.unwrap_or(usize::MAX).max(1);
    let stride = total.div_ceil(cap).max(1);
    let mut pool = Vec::with_capacity(total.min(cap) * d);
    let mut cursor = 0usize;
    for (cell, list) in lists.iter().enumerate() {
        let c = centroids.row(cell);
        for &id in list {
            if cursor % stride == 0 {
                let row = db.row(id as usize);
                pool.extend(row.iter().zip(c).map(|(v, cv)| v - cv));
            }
            cursor += 1;
        }
    }
    let codebook = train_pq(&Points::new(d, &pool), m, k_bits, seed)?;

    let mut codes = Vec::with_capacity(lists.len());
    for (cell, list) in lists.iter().enumerate() {
        let c = centroids.row(cell);
        let mut buf = Vec::with_capacity(list.len() * m);
        for &id in list {
            let code = encode_residual(c, &codebook, db.row(id as usize))?;
            buf.extend_from_slice(&code);
        }
        codes.push(buf);
    }
    Ok(ResidualPq::from_parts(codebook, centroids, codes))
}

/// Plain (non-residual) PQ storage over the whole database, scored with
/// squared-L2 lookup tables.
#[derive(Debug, Clone)]
pub struct FlatPq {
    pub codebook: PqCodebook,
    /// `m` bytes per item, in item-id order.
    pub codes: Vec<u8>,
    /// `|r_j^m|^2` per subspace and codeword, for cosine scoring.
    pub codeword_norms: Vec<f32>,
}

impl FlatPq {
    pub fn n(&self) -> usize {
        self.codes.len() / self.codebook.m
    }

    pub fn code(&self, id: usize) -> &[u8] {
        let m = self.codebook.m;
        &self.codes[id * m..(id + 1) * m]
    }

    pub fn norm_sum(&self, code: &[u8]) -> f64 {
        let n_codes = self.codebook.n_codes();
        code.iter()
            .enumerate()
            .map(|(s, &c)| self.codeword_norms[s * n_codes + c as usize] as f64)
            .sum()
    }

    pub fn from_parts(codebook: PqCodebook, codes: Vec<u8>) -> Self {
        let n_codes = codebook.n_codes();
        let mut codeword_norms = vec![0.0f32; codebook.m * n_codes];
        for subspace in 0..codebook.m {
            for j in 0..n_codes {
                codeword_norms[subspace * n_codes + j] =
                    norm_sq(codebook.codeword(subspace, j)) as f32;
            }
        }
        FlatPq {
            codebook,
            codes,
            codeword_norms,
        }
    }
}

/// Trains plain PQ on the database and encodes every item.
pub fn build_flat_pq(
    db: &FeatureSet,
    m: usize,
    k_bits: u32,
    seed: u64,
    max_train: Option<usize>,
) -> Result<FlatPq> {
    if db.n() == 0 {
        return Err(Error::Param("flat PQ requires a non-empty database".into()));
    }
    let cap = max_train.unwrap_or(usize::MAX).max(1);
    let stride = db.n().div_ceil(cap).max(1);
    let mut pool = Vec::new();
    for i in (0..db.n()).step_by(stride) {
        pool.extend_from_slice(db.row(i));
    }
    let codebook = train_pq(&Points::new(db.d, &pool), m, k_bits, seed)?;
    let mut codes = Vec::with_capacity(db.n() * m);
    for i in 0..db.n() {
        codes.extend_from_slice(&encode(&codebook, db.row(i))?);
    }
    Ok(FlatPq::from_parts(codebook, codes))
}

/// Query-local tables for residual scoring over a set of prepared partitions.
pub struct AdcScorer<'a> {
    storage: &'a ResidualPq,
    q_norm_sq: f64,
    q_norm: f64,
    ip: AdcTables,
    /// `<q, c_i>` for each prepared partition.
    q_dot_centroid: Vec<Option<f64>>,
}

impl<'a> AdcScorer<'a> {
    /// Precomputes `|q|^2`, the inner-product tables and `<q, c_i>` for every
    /// partition in `cells`.
    pub fn prepare(storage: &'a ResidualPq, query: &[f32], cells: &[u32]) -> Result<Self> {
        if query.len() != storage.centroids.d {
            return Err(Error::Dimension {
                expected: storage.centroids.d,
                got: query.len(),
            });
        }
        let q_norm_sq = norm_sq(query);
        let ip = inner_product_tables(&storage.codebook, query)?;
        let mut q_dot_centroid = vec![None; storage.n_cells()];
        for &cell in cells {
            let cell = cell as usize;
            q_dot_centroid[cell] = Some(dot(query, storage.centroids.row(cell)));
        }
        Ok(AdcScorer {
            storage,
            q_norm_sq,
            q_norm: q_norm_sq.sqrt(),
            ip,
            q_dot_centroid,
        })
    }

    fn q_dot(&self, cell: usize) -> Result<f64> {
        self.q_dot_centroid
            .get(cell)
            .copied()
            .flatten()
            .ok_or(Error::TablesNotPrepared(cell as u32))
    }

    /// Squared distance from the query to `centroid + decode(code)`.
    pub fn score_l2(&self, cell: usize, code: &[u8]) -> Result<f64> {
        let qc = self.q_dot(cell)?;
        let ip_sum = self.ip.lookup_sum(code);
        let norm_sum = self.storage.norm_table.lookup_sum(cell, code);
        Ok(self.q_norm_sq - 2.0 * qc - 2.0 * ip_sum + norm_sum)
    }

    /// Cosine similarity between the query and `centroid + decode(code)`.
    /// A zero-norm reconstruction scores negative infinity so it ranks last.
    pub fn score_cosine(&self, cell: usize, code: &[u8]) -> Result<f64> {
        if self.q_norm == 0.0 {
            return Err(Error::Param("cosine scoring requires |q| > 0".into()));
        }
        let qc = self.q_dot(cell)?;
        let ip_sum = self.ip.lookup_sum(code);
        let norm_sum = self.storage.norm_table.lookup_sum(cell, code);
        if norm_sum <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok((qc + ip_sum) / (self.q_norm * norm_sum.sqrt()))
    }
}
