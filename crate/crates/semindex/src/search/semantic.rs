//! Semantic retrieval paths: exact re-ranking over the label-reclaimed
//! candidate list, its residual-ADC variant, and the flat-ADC baseline.

use std::collections::HashMap;

use crate::dataset::{FeatureSet, LabelRow};
use crate::error::{Error, Result};
use crate::index::{candidate_list, pruned_candidate_list, reclaimed_cells, SemanticIndex};
use crate::math::norm_sq;
use crate::quant::{adc_tables, inner_product_tables, AdcScorer, FlatPq, ResidualPq};

use super::{rank_items, Metric, Ranking};

/// Exact-metric ranking of the candidate list reclaimed by the query's
/// top-`beta` labels. With `tau` set, each reclaimed partition is pruned to
/// its nearest sub-cells first (requires a split structure).
#[allow(clippy::too_many_arguments)]
pub fn semantic_search(
    index: &SemanticIndex,
    db: &FeatureSet,
    query_id: u64,
    query_vec: &[f32],
    query_row: &LabelRow,
    beta: usize,
    r: usize,
    metric: Metric,
    tau: Option<f64>,
) -> Result<Ranking> {
    if query_vec.len() != db.d {
        return Err(Error::Dimension {
            expected: db.d,
            got: query_vec.len(),
        });
    }
    let candidates = match tau {
        Some(tau) => pruned_candidate_list(index, query_vec, query_row, beta, tau)?,
        None => candidate_list(index, query_row, beta)?,
    };
    let scored: Vec<(u64, f64)> = candidates
        .ids
        .iter()
        .map(|&id| (id, metric.score(query_vec, db.row(id as usize))))
        .collect();
    Ok(rank_items(query_id, metric, scored, Some(r)))
}

/// Residual-ADC ranking of the reclaimed candidate list. An item stored in
/// several reclaimed partitions is scored once per `(partition, code)` pair
/// and keeps its best score.
#[allow(clippy::too_many_arguments)]
pub fn semantic_adc_search(
    index: &SemanticIndex,
    storage: &ResidualPq,
    query_id: u64,
    query_vec: &[f32],
    query_row: &LabelRow,
    beta: usize,
    r: usize,
    metric: Metric,
) -> Result<Ranking> {
    if storage.n_cells() != index.n_cells() {
        return Err(Error::Param(format!(
            "PQ storage covers {} partitions, index has {}",
            storage.n_cells(),
            index.n_cells()
        )));
    }
    let cells = reclaimed_cells(index, query_row, beta)?;
    let scorer = AdcScorer::prepare(storage, query_vec, &cells)?;
    let mut best: HashMap<u64, f64> = HashMap::new();
    for &cell in &cells {
        let list = &index.lists[cell as usize];
        for (entry, &id) in list.iter().enumerate() {
            let code = storage.code(cell as usize, entry);
            let score = match metric {
                Metric::L2 => scorer.score_l2(cell as usize, code)?,
                Metric::Cosine => scorer.score_cosine(cell as usize, code)?,
            };
            best.entry(id)
                .and_modify(|s| {
                    if metric.better(score, *s) {
                        *s = score;
                    }
                })
                .or_insert(score);
        }
    }
    let scored: Vec<(u64, f64)> = best.into_iter().collect();
    Ok(rank_items(query_id, metric, scored, Some(r)))
}

/// Flat ADC over the whole compressed database: per-subspace lookup tables,
/// no inverted index.
pub fn flat_adc_search(
    storage: &FlatPq,
    query_id: u64,
    query: &[f32],
    r: usize,
    metric: Metric,
) -> Result<Ranking> {
    let scored: Vec<(u64, f64)> = match metric {
        Metric::L2 => {
            let tables = adc_tables(&storage.codebook, query)?;
            (0..storage.n())
                .map(|i| (i as u64, tables.lookup_sum(storage.code(i))))
                .collect()
        }
        Metric::Cosine => {
            let q_norm = norm_sq(query).sqrt();
            if q_norm == 0.0 {
                return Err(Error::Param("cosine scoring requires |q| > 0".into()));
            }
            let ip = inner_product_tables(&storage.codebook, query)?;
            (0..storage.n())
                .map(|i| {
                    let code = storage.code(i);
                    let norm_sum = storage.norm_sum(code);
                    let score = if norm_sum <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        ip.lookup_sum(code) / (q_norm * norm_sum.sqrt())
                    };
                    (i as u64, score)
                })
                .collect()
        }
    };
    Ok(rank_items(query_id, metric, scored, Some(r)))
}
