//! Partition splitting: subdivides each cell with k-means so queries can
//! prune to the sub-cells nearest the query vector.

use crate::dataset::FeatureSet;
use crate::error::{Error, Result};
use crate::math::{sq_l2, sub_seed_n};
use crate::quant::{kmeans, Centroids, Points, DEFAULT_KMEANS_ITERS};

use super::{reclaimed_cells, CandidateList, SemanticIndex};

/// Sub-cells of one partition: `centroids.k` sub-centroids and the matching
/// sub-posting-lists, which disjointly cover the partition. Only non-empty
/// sub-cells are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSplit {
    pub centroids: Centroids,
    pub lists: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitStructure {
    /// Requested sub-cells per partition; a partition smaller than `l` gets
    /// one sub-cell per member.
    pub l: u32,
    pub d: usize,
    pub cells: Vec<CellSplit>,
}

/// Splits every partition of `index` into at most `l` sub-cells by k-means
/// over the partition's vectors. Returns a new index carrying the split
/// structure; posting lists and any mapping are unchanged.
pub fn split_index(
    index: &SemanticIndex,
    features: &FeatureSet,
    l: u32,
    seed: u64,
) -> Result<SemanticIndex> {
    if l == 0 {
        return Err(Error::Param("split requires L >= 1".into()));
    }
    if index.n_items() > features.n() as u64 {
        return Err(Error::Param(format!(
            "features cover {} items but the index references ids up to {}",
            features.n(),
            index.n_items().saturating_sub(1)
        )));
    }
    let d = features.d;
    let mut cells = Vec::with_capacity(index.n_cells());
    let mut buf: Vec<f32> = Vec::new();
    for (cell, list) in index.lists.iter().enumerate() {
        if list.is_empty() {
            cells.push(CellSplit {
                centroids: Centroids::zeros(0, d),
                lists: Vec::new(),
            });
            continue;
        }
        buf.clear();
        for &id in list {
            buf.extend_from_slice(features.row(id as usize));
        }
        let k = (l as usize).min(list.len());
        let fit = kmeans(
            &Points::new(d, &buf),
            k,
            sub_seed_n(seed, "split-cell", cell as u64),
            DEFAULT_KMEANS_ITERS,
        )?;
        let mut sub_lists: Vec<Vec<u64>> = vec![Vec::new(); fit.centroids.k];
        for (pos, &id) in list.iter().enumerate() {
            sub_lists[fit.assignments[pos] as usize].push(id);
        }
        // Drop empty sub-cells, keeping centroid rows aligned with lists.
        let mut centroids = Centroids::zeros(0, d);
        let mut lists_kept = Vec::new();
        for (sub, sub_list) in sub_lists.into_iter().enumerate() {
            if sub_list.is_empty() {
                continue;
            }
            centroids.data.extend_from_slice(fit.centroids.row(sub));
            centroids.k += 1;
            lists_kept.push(sub_list);
        }
        cells.push(CellSplit {
            centroids,
            lists: lists_kept,
        });
    }
    let mut out = index.clone();
    out.split = Some(SplitStructure { l, d, cells });
    Ok(out)
}

/// Candidate list with sub-cell pruning: for each reclaimed partition, rank
/// its sub-cells by squared distance from the query vector to the
/// sub-centroids and keep the `ceil(tau * n_subcells)` nearest.
pub fn pruned_candidate_list(
    index: &SemanticIndex,
    query_vec: &[f32],
    query_row: &crate::dataset::LabelRow,
    beta: usize,
    tau: f64,
) -> Result<CandidateList> {
    let split = index.split.as_ref().ok_or(Error::MissingSplit)?;
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Param(format!("tau must lie in (0, 1], got {tau}")));
    }
    if query_vec.len() != split.d {
        return Err(Error::Dimension {
            expected: split.d,
            got: query_vec.len(),
        });
    }
    let cells = reclaimed_cells(index, query_row, beta)?;
    let mut ids: Vec<u64> = Vec::new();
    for &cell in &cells {
        let cs = &split.cells[cell as usize];
        let n_sub = cs.centroids.k;
        if n_sub == 0 {
            continue;
        }
        let keep = ((tau * n_sub as f64).ceil() as usize).clamp(1, n_sub);
        let mut order: Vec<(f64, usize)> = (0..n_sub)
            .map(|s| (sq_l2(query_vec, cs.centroids.row(s)), s))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, s) in order.iter().take(keep) {
            ids.extend_from_slice(&cs.lists[s]);
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(CandidateList {
        ids,
        source_cells: cells,
    })
}
