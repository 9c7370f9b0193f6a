//! The label-partitioned inverted index.
//!
//! Database items are stored under their top-`alpha` classifier labels
//! (the fusion parameter); queries reclaim the posting lists of their
//! top-`beta` labels (the expanding parameter) and the deduplicated union
//! becomes the candidate list. An optional label mapping (from merging) sends
//! several labels into one cell; an optional split structure subdivides each
//! partition for pruning.

mod cooc;
mod split;

pub use cooc::{
    cooccurrence_matrix, label_similarity, merge_labels, pearson, CooccurrenceMatrix,
    LabelMapping,
};
pub use split::{pruned_candidate_list, split_index, CellSplit, SplitStructure};

use crate::dataset::{LabelMatrix, LabelRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexParams {
    /// Fusion parameter: number of top labels each database item is stored
    /// under. Controls partition overlap.
    pub alpha: u32,
    pub n_labels: u32,
}

impl IndexParams {
    pub fn new(alpha: u32, n_labels: u32) -> Result<Self> {
        if alpha == 0 || alpha > n_labels {
            return Err(Error::Param(format!(
                "alpha must lie in 1..=n_labels (alpha={alpha}, n_labels={n_labels})"
            )));
        }
        Ok(IndexParams { alpha, n_labels })
    }
}

/// The inverted index: one posting list per cell. Without a mapping the cells
/// are the labels themselves. Posting lists are sorted ascending by item id.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticIndex {
    pub params: IndexParams,
    pub mapping: Option<LabelMapping>,
    pub lists: Vec<Vec<u64>>,
    pub split: Option<SplitStructure>,
    n_items: u64,
}

impl SemanticIndex {
    pub fn n_cells(&self) -> usize {
        self.lists.len()
    }

    pub fn n_items(&self) -> u64 {
        self.n_items
    }

    /// Cell a label falls into under the index's mapping (identity without
    /// one).
    pub fn cell_of(&self, label: u32) -> u32 {
        match &self.mapping {
            Some(m) => m.cell_of[label as usize],
            None => label,
        }
    }

    pub(crate) fn from_parts(
        params: IndexParams,
        mapping: Option<LabelMapping>,
        lists: Vec<Vec<u64>>,
        split: Option<SplitStructure>,
    ) -> Self {
        let n_items = lists
            .iter()
            .flat_map(|l| l.iter())
            .max()
            .map(|&m| m + 1)
            .unwrap_or(0);
        SemanticIndex {
            params,
            mapping,
            lists,
            split,
            n_items,
        }
    }
}

/// Deduplicated union of reclaimed posting lists for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateList {
    /// Unique item ids, ascending.
    pub ids: Vec<u64>,
    /// Cells reclaimed for the query, in label-rank order, deduplicated.
    pub source_cells: Vec<u32>,
}

/// The `k` label ids with the highest confidences in a row. Rows are stored
/// sorted (descending confidence, ties by ascending label id), so this is the
/// prefix of the row.
pub fn top_labels(row: &LabelRow, k: usize) -> Result<Vec<u32>> {
    if k > row.len() {
        return Err(Error::LabelBudget {
            have: row.len(),
            need: k,
        });
    }
    Ok(row[..k].iter().map(|&(label, _)| label).collect())
}

/// Builds the inverted index: each item is inserted into the posting list of
/// every label in its top-`alpha`, mapped through `mapping` when present
/// (deduplicated per item).
pub fn build_index(
    db_labels: &LabelMatrix,
    params: IndexParams,
    mapping: Option<LabelMapping>,
) -> Result<SemanticIndex> {
    if params.n_labels != db_labels.n_labels {
        return Err(Error::Param(format!(
            "index n_labels {} does not match label matrix ({})",
            params.n_labels, db_labels.n_labels
        )));
    }
    if let Some(m) = &mapping {
        if m.n_labels != params.n_labels {
            return Err(Error::Param(format!(
                "mapping covers {} labels, index expects {}",
                m.n_labels, params.n_labels
            )));
        }
    }
    let n_cells = mapping
        .as_ref()
        .map(|m| m.n_cells as usize)
        .unwrap_or(params.n_labels as usize);
    let mut lists: Vec<Vec<u64>> = vec![Vec::new(); n_cells];
    let alpha = params.alpha as usize;
    let mut cells_buf: Vec<u32> = Vec::with_capacity(alpha);
    for (id, row) in db_labels.rows.iter().enumerate() {
        let labels = top_labels(row, alpha)?;
        cells_buf.clear();
        for label in labels {
            let cell = match &mapping {
                Some(m) => m.cell_of[label as usize],
                None => label,
            };
            if !cells_buf.contains(&cell) {
                cells_buf.push(cell);
            }
        }
        for &cell in &cells_buf {
            lists[cell as usize].push(id as u64);
        }
    }
    // Insertion in ascending id order keeps each list sorted.
    let mut index = SemanticIndex::from_parts(params, mapping, lists, None);
    index.n_items = db_labels.n() as u64;
    Ok(index)
}

/// Cells reclaimed for a query row at a given `beta`, in label-rank order
/// with duplicate cells reclaimed once.
pub fn reclaimed_cells(index: &SemanticIndex, query_row: &LabelRow, beta: usize) -> Result<Vec<u32>> {
    if beta == 0 || beta > index.params.n_labels as usize {
        return Err(Error::Param(format!(
            "beta must lie in 1..=n_labels (beta={beta}, n_labels={})",
            index.params.n_labels
        )));
    }
    let labels = top_labels(query_row, beta)?;
    let mut cells = Vec::with_capacity(labels.len());
    for label in labels {
        let cell = index.cell_of(label);
        if !cells.contains(&cell) {
            cells.push(cell);
        }
    }
    Ok(cells)
}

/// Deduplicated, ascending union of the posting lists reclaimed by the
/// query's top-`beta` labels.
pub fn candidate_list(
    index: &SemanticIndex,
    query_row: &LabelRow,
    beta: usize,
) -> Result<CandidateList> {
    let cells = reclaimed_cells(index, query_row, beta)?;
    let mut ids: Vec<u64> = cells
        .iter()
        .flat_map(|&c| index.lists[c as usize].iter().copied())
        .collect();
    ids.sort_unstable();
    ids.dedup();
    Ok(CandidateList {
        ids,
        source_cells: cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::LabelMatrix;

    fn matrix(n_labels: u32, rows: Vec<Vec<(u32, f32)>>) -> LabelMatrix {
        LabelMatrix::new(n_labels, rows).unwrap()
    }

    #[test]
    fn top_labels_takes_sorted_prefix() {
        let row = vec![(0u32, 0.5f32), (1, 0.3), (2, 0.2)];
        assert_eq!(top_labels(&row, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn top_labels_argmax() {
        let mut row = vec![(2u32, 0.6f32), (0, 0.2), (1, 0.2)];
        crate::dataset::canonicalize_row(&mut row);
        assert_eq!(top_labels(&row, 1).unwrap(), vec![2]);
    }

    #[test]
    fn top_labels_tie_prefers_lower_label() {
        let labels = matrix(4, vec![vec![(1, 0.4), (0, 0.4)]]);
        assert_eq!(top_labels(labels.row(0), 1).unwrap(), vec![0]);
    }

    #[test]
    fn top_labels_budget_error() {
        let row = vec![(0u32, 0.5f32)];
        assert!(matches!(
            top_labels(&row, 2),
            Err(Error::LabelBudget { have: 1, need: 2 })
        ));
    }

    #[test]
    fn alpha_bounds_are_rejected() {
        assert!(IndexParams::new(0, 5).is_err());
        assert!(IndexParams::new(6, 5).is_err());
        assert!(IndexParams::new(5, 5).is_ok());
    }

    #[test]
    fn build_rejects_rows_shorter_than_alpha() {
        let labels = matrix(6, vec![vec![(0, 0.9), (1, 0.05)]]);
        assert!(matches!(
            build_index(&labels, IndexParams::new(3, 6).unwrap(), None),
            Err(Error::LabelBudget { have: 2, need: 3 })
        ));
    }

    #[test]
    fn build_inserts_under_top_alpha() {
        let labels = matrix(
            5,
            vec![
                vec![(1, 0.6), (3, 0.3), (0, 0.1)],
                vec![(3, 0.7), (4, 0.2), (1, 0.1)],
            ],
        );
        let index = build_index(&labels, IndexParams::new(2, 5).unwrap(), None).unwrap();
        assert_eq!(index.lists[1], vec![0]);
        assert_eq!(index.lists[3], vec![0, 1]);
        assert_eq!(index.lists[4], vec![1]);
        assert!(index.lists[0].is_empty());
        assert!(index.lists[2].is_empty());
    }

    #[test]
    fn alpha_equal_n_labels_puts_every_item_everywhere() {
        let dense: Vec<Vec<(u32, f32)>> = (0..3)
            .map(|i| (0..4).map(|l| (l as u32, 0.9 - 0.1 * (l + i) as f32)).collect())
            .collect();
        let labels = matrix(4, dense);
        let index = build_index(&labels, IndexParams::new(4, 4).unwrap(), None).unwrap();
        for list in &index.lists {
            assert_eq!(list, &vec![0, 1, 2]);
        }
    }

    #[test]
    fn multiplicity_is_alpha_times_n() {
        let cfg = crate::dataset::SyntheticConfig {
            n_db: 200,
            n_queries: 0,
            d: 4,
            n_labels: 40,
            clusters: 10,
            label_noise: 0.2,
            seed: 3,
        };
        let data = crate::dataset::synth_dataset(&cfg).unwrap();
        let alpha = 5u32;
        let index =
            build_index(&data.db_labels, IndexParams::new(alpha, 40).unwrap(), None).unwrap();
        let total: usize = index.lists.iter().map(|l| l.len()).sum();
        assert_eq!(total, alpha as usize * 200);
        // Every item appears in exactly alpha distinct lists.
        let mut memberships = vec![0usize; 200];
        for list in &index.lists {
            for &id in list {
                memberships[id as usize] += 1;
            }
        }
        assert!(memberships.iter().all(|&m| m == alpha as usize));
    }

    #[test]
    fn candidate_union_dedups() {
        let labels = matrix(
            5,
            vec![
                vec![(1, 0.6), (3, 0.3), (0, 0.1)],
                vec![(3, 0.7), (4, 0.2), (1, 0.1)],
            ],
        );
        let index = build_index(&labels, IndexParams::new(2, 5).unwrap(), None).unwrap();
        let query = vec![(3u32, 0.5f32), (4, 0.4)];
        let cl = candidate_list(&index, &query, 2).unwrap();
        assert_eq!(cl.ids, vec![0, 1]);
        assert_eq!(cl.source_cells, vec![3, 4]);
    }

    #[test]
    fn beta_equal_n_labels_reaches_everything() {
        let dense: Vec<Vec<(u32, f32)>> = (0..4)
            .map(|i| {
                (0..6)
                    .map(|l| (l as u32, 0.9 - 0.05 * ((l + i) % 6) as f32))
                    .collect()
            })
            .collect();
        let labels = matrix(6, dense.clone());
        let index = build_index(&labels, IndexParams::new(2, 6).unwrap(), None).unwrap();
        let cl = candidate_list(&index, &dense[0], 6).unwrap();
        assert_eq!(cl.ids, vec![0, 1, 2, 3]);
    }

    #[test]
    fn beta_three_reclaims_three_cells() {
        let rows: Vec<Vec<(u32, f32)>> = (0..6)
            .map(|i| {
                (0..5)
                    .map(|j| (((i + j) % 8) as u32, 0.5 - 0.05 * j as f32))
                    .collect()
            })
            .collect();
        let labels = matrix(8, rows);
        let index = build_index(&labels, IndexParams::new(5, 8).unwrap(), None).unwrap();
        let query = vec![(0u32, 0.4f32), (1, 0.3), (2, 0.2), (3, 0.1), (4, 0.05)];
        let cl = candidate_list(&index, &query, 3).unwrap();
        assert_eq!(cl.source_cells.len(), 3);
    }

    #[test]
    fn beta_out_of_range_rejected() {
        let labels = matrix(3, vec![vec![(0, 0.9), (1, 0.05), (2, 0.01)]]);
        let index = build_index(&labels, IndexParams::new(1, 3).unwrap(), None).unwrap();
        assert!(candidate_list(&index, labels.row(0), 4).is_err());
        assert!(candidate_list(&index, labels.row(0), 0).is_err());
    }

    /// Without label noise every item's top label equals its group's top
    /// label, so even beta = 1 reclaims every relevant item.
    #[test]
    fn noiseless_candidates_cover_relevant_for_any_beta() {
        let cfg = crate::dataset::SyntheticConfig {
            n_db: 260,
            n_queries: 30,
            d: 4,
            n_labels: 24,
            clusters: 8,
            label_noise: 0.0,
            seed: 15,
        };
        let data = crate::dataset::synth_dataset(&cfg).unwrap();
        let index =
            build_index(&data.db_labels, IndexParams::new(5, 24).unwrap(), None).unwrap();
        for (qid, entry) in data.ground_truth.entries.iter().enumerate() {
            for beta in [1usize, 3, 5] {
                let ids = candidate_list(&index, data.query_labels.row(qid), beta)
                    .unwrap()
                    .ids;
                for id in &entry.relevant {
                    assert!(
                        ids.binary_search(id).is_ok(),
                        "query {qid} beta {beta} misses relevant {id}"
                    );
                }
            }
        }
    }

    #[test]
    fn candidates_nested_in_beta_and_alpha() {
        let cfg = crate::dataset::SyntheticConfig {
            n_db: 150,
            n_queries: 20,
            d: 4,
            n_labels: 30,
            clusters: 10,
            label_noise: 0.3,
            seed: 9,
        };
        let data = crate::dataset::synth_dataset(&cfg).unwrap();
        let mut by_alpha: Vec<SemanticIndex> = Vec::new();
        for alpha in 1..=6u32 {
            by_alpha.push(
                build_index(&data.db_labels, IndexParams::new(alpha, 30).unwrap(), None).unwrap(),
            );
        }
        for q in 0..20 {
            let row = data.query_labels.row(q);
            // beta monotonicity at fixed alpha
            let index = &by_alpha[4];
            let mut prev: Vec<u64> = Vec::new();
            for beta in 1..=8usize {
                let ids = candidate_list(index, row, beta).unwrap().ids;
                assert!(prev.iter().all(|id| ids.binary_search(id).is_ok()));
                prev = ids;
            }
            // alpha monotonicity at fixed beta
            let mut prev: Vec<u64> = Vec::new();
            for index in &by_alpha {
                let ids = candidate_list(index, row, 3).unwrap().ids;
                assert!(prev.iter().all(|id| ids.binary_search(id).is_ok()));
                prev = ids;
            }
        }
    }
}
