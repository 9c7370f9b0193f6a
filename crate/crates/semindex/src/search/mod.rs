//! Retrieval strategies sharing one ranking contract: exhaustive scan, IVF,
//! flat ADC, IVF-ADC, semantic, and semantic-ADC.
//!
//! Every ranking is duplicate-free and sorted ascending by L2 distance or
//! descending by cosine similarity, with score ties broken by ascending item
//! id.

mod ivf;
mod semantic;

pub use ivf::{ivf_adc_search, ivf_attach_pq, ivf_build, ivf_search, probe_order, IvfIndex};
pub use semantic::{flat_adc_search, semantic_adc_search, semantic_search};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureSet, GroundTruth, LabelMatrix};
use crate::error::{Error, Result};
use crate::index::SemanticIndex;
use crate::math::{cosine, sq_l2};
use crate::quant::{FlatPq, ResidualPq};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    L2,
    Cosine,
}

impl Metric {
    /// Exact score of `query` against `item` under this metric.
    pub fn score(&self, query: &[f32], item: &[f32]) -> f64 {
        match self {
            Metric::L2 => sq_l2(query, item),
            Metric::Cosine => cosine(query, item),
        }
    }

    /// True when `a` is strictly better than `b`.
    pub fn better(&self, a: f64, b: f64) -> bool {
        match self {
            Metric::L2 => a < b,
            Metric::Cosine => a > b,
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Metric::L2),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Param(format!(
                "unknown metric {other:?} (expected l2 or cosine)"
            ))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::L2 => write!(f, "l2"),
            Metric::Cosine => write!(f, "cosine"),
        }
    }
}

/// An ordered result list for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    pub query_id: u64,
    pub metric: Metric,
    /// `(item_id, score)` pairs in rank order.
    pub items: Vec<(u64, f64)>,
}

/// Sorts scored items into a ranking and truncates to the top `r`
/// (`r = None` keeps everything).
pub fn rank_items(
    query_id: u64,
    metric: Metric,
    mut scored: Vec<(u64, f64)>,
    r: Option<usize>,
) -> Ranking {
    match metric {
        Metric::L2 => scored.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0))),
        Metric::Cosine => scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))),
    }
    if let Some(r) = r {
        scored.truncate(r);
    }
    Ranking {
        query_id,
        metric,
        items: scored,
    }
}

/// Exact top-`r` scan over the whole database. `r` larger than the database
/// returns every item.
pub fn exhaustive_search(
    db: &FeatureSet,
    query_id: u64,
    query: &[f32],
    r: usize,
    metric: Metric,
) -> Result<Ranking> {
    if query.len() != db.d {
        return Err(Error::Dimension {
            expected: db.d,
            got: query.len(),
        });
    }
    let scored: Vec<(u64, f64)> = (0..db.n())
        .map(|i| (i as u64, metric.score(query, db.row(i))))
        .collect();
    Ok(rank_items(query_id, metric, scored, Some(r)))
}

/// A prepared retrieval strategy: everything needed to answer queries and to
/// report the candidate set each answer was drawn from.
pub enum Engine<'a> {
    Exhaustive {
        db: &'a FeatureSet,
    },
    Ivf {
        index: &'a IvfIndex,
        db: &'a FeatureSet,
        nprobe: usize,
    },
    IvfAdc {
        index: &'a IvfIndex,
        nprobe: usize,
    },
    FlatAdc {
        storage: &'a FlatPq,
    },
    Semantic {
        index: &'a SemanticIndex,
        db: &'a FeatureSet,
        beta: usize,
        /// Prune each reclaimed partition to its nearest sub-cells; requires
        /// a split structure.
        tau: Option<f64>,
    },
    SemanticAdc {
        index: &'a SemanticIndex,
        storage: &'a ResidualPq,
        beta: usize,
    },
}

/// Inputs shared by every query of an evaluation run.
pub struct QuerySet<'a> {
    pub queries: &'a FeatureSet,
    pub query_labels: Option<&'a LabelMatrix>,
    pub ground_truth: &'a GroundTruth,
}

impl Engine<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Exhaustive { .. } => "exhaustive",
            Engine::Ivf { .. } => "ivf",
            Engine::IvfAdc { .. } => "ivf-adc",
            Engine::FlatAdc { .. } => "adc",
            Engine::Semantic { .. } => "semantic",
            Engine::SemanticAdc { .. } => "semantic-adc",
        }
    }

    pub fn n_db(&self) -> usize {
        match self {
            Engine::Exhaustive { db } => db.n(),
            Engine::Ivf { index, .. } | Engine::IvfAdc { index, .. } => index.n_items(),
            Engine::FlatAdc { storage } => storage.n(),
            Engine::Semantic { index, .. } => index.n_items() as usize,
            Engine::SemanticAdc { index, .. } => index.n_items() as usize,
        }
    }

    fn query_row(
        labels: Option<&LabelMatrix>,
        query_id: u64,
    ) -> Result<&crate::dataset::LabelRow> {
        let labels = labels.ok_or_else(|| {
            Error::Param("this strategy requires query labels (--query-labels)".into())
        })?;
        labels
            .rows
            .get(query_id as usize)
            .ok_or_else(|| Error::Param(format!("query {query_id} has no label row")))
    }

    /// Ranks one query. `r = None` ranks every candidate (needed for mAP).
    pub fn search(
        &self,
        qs: &QuerySet,
        query_id: u64,
        r: Option<usize>,
        metric: Metric,
    ) -> Result<Ranking> {
        let q = qs.queries.row(query_id as usize);
        let full = self.n_db();
        let r = r.unwrap_or(full);
        match self {
            Engine::Exhaustive { db } => exhaustive_search(db, query_id, q, r, metric),
            Engine::Ivf { index, db, nprobe } => {
                ivf_search(index, db, query_id, q, *nprobe, r, metric)
            }
            Engine::IvfAdc { index, nprobe } => {
                ivf_adc_search(index, query_id, q, *nprobe, r, metric)
            }
            Engine::FlatAdc { storage } => flat_adc_search(storage, query_id, q, r, metric),
            Engine::Semantic {
                index,
                db,
                beta,
                tau,
            } => {
                let row = Self::query_row(qs.query_labels, query_id)?;
                semantic_search(index, db, query_id, q, row, *beta, r, metric, *tau)
            }
            Engine::SemanticAdc {
                index,
                storage,
                beta,
            } => {
                let row = Self::query_row(qs.query_labels, query_id)?;
                semantic_adc_search(index, storage, query_id, q, row, *beta, r, metric)
            }
        }
    }

    /// The candidate set the strategy restricts one query to, ascending and
    /// deduplicated. Exhaustive and flat-ADC strategies scan everything.
    pub fn candidates(&self, qs: &QuerySet, query_id: u64) -> Result<Vec<u64>> {
        let q = qs.queries.row(query_id as usize);
        match self {
            Engine::Exhaustive { db } => Ok((0..db.n() as u64).collect()),
            Engine::FlatAdc { storage } => Ok((0..storage.n() as u64).collect()),
            Engine::Ivf { index, nprobe, .. } | Engine::IvfAdc { index, nprobe } => {
                let probes = probe_order(index, q, *nprobe);
                let mut ids: Vec<u64> = probes
                    .iter()
                    .flat_map(|&c| index.lists[c].iter().copied())
                    .collect();
                ids.sort_unstable();
                Ok(ids)
            }
            Engine::Semantic {
                index, beta, tau, ..
            } => {
                let row = Self::query_row(qs.query_labels, query_id)?;
                let cl = match tau {
                    Some(tau) => {
                        crate::index::pruned_candidate_list(index, q, row, *beta, *tau)?
                    }
                    None => crate::index::candidate_list(index, row, *beta)?,
                };
                Ok(cl.ids)
            }
            Engine::SemanticAdc { index, beta, .. } => {
                let row = Self::query_row(qs.query_labels, query_id)?;
                Ok(crate::index::candidate_list(index, row, *beta)?.ids)
            }
        }
    }
}
