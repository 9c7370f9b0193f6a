//! Classical inverted-file baseline: k-means coarse cells, probed in order
//! of centroid distance, optionally with residual PQ codes (IVF-ADC).

use crate::dataset::FeatureSet;
use crate::error::{Error, Result};
use crate::math::{sq_l2, sub_seed};
use crate::quant::{
    build_residual_pq, kmeans, AdcScorer, Centroids, ResidualPq, DEFAULT_KMEANS_ITERS,
};

use super::{rank_items, Metric, Ranking};

/// Inverted file over k-means coarse cells. Each item lives in exactly one
/// list (its nearest centroid).
#[derive(Debug, Clone)]
pub struct IvfIndex {
    pub centroids: Centroids,
    pub lists: Vec<Vec<u64>>,
    /// Residual codes against the coarse centroids, when attached.
    pub pq: Option<ResidualPq>,
}

impl IvfIndex {
    pub fn n_items(&self) -> usize {
        self.lists.iter().map(|l| l.len()).sum()
    }

    pub fn k_coarse(&self) -> usize {
        self.centroids.k
    }
}

/// Clusters the database into `k_coarse` cells.
pub fn ivf_build(db: &FeatureSet, k_coarse: usize, seed: u64) -> Result<IvfIndex> {
    let fit = kmeans(
        &db.points(),
        k_coarse,
        sub_seed(seed, "ivf-coarse"),
        DEFAULT_KMEANS_ITERS,
    )?;
    let mut lists: Vec<Vec<u64>> = vec![Vec::new(); fit.centroids.k];
    for (id, &c) in fit.assignments.iter().enumerate() {
        lists[c as usize].push(id as u64);
    }
    Ok(IvfIndex {
        centroids: fit.centroids,
        lists,
        pq: None,
    })
}

/// Trains residual PQ against the coarse centroids and stores one code per
/// item (each item is encoded against its single coarse cell).
pub fn ivf_attach_pq(
    index: &mut IvfIndex,
    db: &FeatureSet,
    m: usize,
    k_bits: u32,
    seed: u64,
    max_train: Option<usize>,
) -> Result<()> {
    let pq = build_residual_pq(db, &index.lists, m, k_bits, seed, max_train)?;
    index.pq = Some(pq);
    Ok(())
}

/// Cells to visit for a query, nearest centroid first. `nprobe` beyond the
/// cell count clamps with a warning.
pub fn probe_order(index: &IvfIndex, query: &[f32], nprobe: usize) -> Vec<usize> {
    let k = index.centroids.k;
    let nprobe = if nprobe > k {
        log::warn!("nprobe {nprobe} exceeds k_coarse {k}; clamping");
        k
    } else {
        nprobe.max(1)
    };
    let mut order: Vec<(f64, usize)> = (0..k)
        .map(|c| (sq_l2(query, index.centroids.row(c)), c))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.truncate(nprobe);
    order.into_iter().map(|(_, c)| c).collect()
}

/// Ranks exact vectors from the `nprobe` nearest coarse cells.
pub fn ivf_search(
    index: &IvfIndex,
    db: &FeatureSet,
    query_id: u64,
    query: &[f32],
    nprobe: usize,
    r: usize,
    metric: Metric,
) -> Result<Ranking> {
    if query.len() != db.d {
        return Err(Error::Dimension {
            expected: db.d,
            got: query.len(),
        });
    }
    let probes = probe_order(index, query, nprobe);
    let scored: Vec<(u64, f64)> = probes
        .iter()
        .flat_map(|&c| index.lists[c].iter().copied())
        .map(|id| (id, metric.score(query, db.row(id as usize))))
        .collect();
    Ok(rank_items(query_id, metric, scored, Some(r)))
}

/// Ranks residual-PQ codes from the `nprobe` nearest coarse cells.
pub fn ivf_adc_search(
    index: &IvfIndex,
    query_id: u64,
    query: &[f32],
    nprobe: usize,
    r: usize,
    metric: Metric,
) -> Result<Ranking> {
    let pq = index.pq.as_ref().ok_or(Error::MissingPq)?;
    let probes = probe_order(index, query, nprobe);
    let cells: Vec<u32> = probes.iter().map(|&c| c as u32).collect();
    let scorer = AdcScorer::prepare(pq, query, &cells)?;
    let mut scored: Vec<(u64, f64)> = Vec::new();
    for &cell in &probes {
        for (entry, &id) in index.lists[cell].iter().enumerate() {
            let code = pq.code(cell, entry);
            let score = match metric {
                Metric::L2 => scorer.score_l2(cell, code)?,
                Metric::Cosine => scorer.score_cosine(cell, code)?,
            };
            scored.push((id, score));
        }
    }
    Ok(rank_items(query_id, metric, scored, Some(r)))
}
