//! Retrieval metrics and the evaluation harness: mean average precision,
//! recall at rank, candidate recall, scope ratio and wall time, emitted as a
//! machine-readable report.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::search::{Engine, Metric, QuerySet, Ranking};

/// Uninterpolated average precision of a ranking against a relevant set.
/// Junk ids are removed from the ranking before scoring; relevant items that
/// never appear contribute zero.
pub fn average_precision(
    ranking: &Ranking,
    relevant: &BTreeSet<u64>,
    junk: &BTreeSet<u64>,
) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::GroundTruth("relevant set is empty".into()));
    }
    let mut found = 0usize;
    let mut rank = 0usize;
    let mut sum = 0.0f64;
    for &(id, _) in &ranking.items {
        if junk.contains(&id) {
            continue;
        }
        rank += 1;
        if relevant.contains(&id) {
            found += 1;
            sum += found as f64 / rank as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

/// Fraction of the relevant set present in the top `r` of a junk-filtered
/// ranking. Rankings shorter than `r` treat the missing tail as non-relevant.
pub fn recall_at(ranking: &Ranking, relevant: &BTreeSet<u64>, junk: &BTreeSet<u64>, r: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let mut rank = 0usize;
    let mut hits = 0usize;
    for &(id, _) in &ranking.items {
        if junk.contains(&id) {
            continue;
        }
        rank += 1;
        if rank > r {
            break;
        }
        if relevant.contains(&id) {
            hits += 1;
        }
    }
    hits as f64 / relevant.len() as f64
}

/// Fraction of the relevant set present in a candidate list.
pub fn candidate_recall(candidates: &[u64], relevant: &BTreeSet<u64>) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let hits = relevant
        .iter()
        .filter(|id| candidates.binary_search(id).is_ok())
        .count();
    hits as f64 / relevant.len() as f64
}

/// Candidate-list size relative to the database.
pub fn scope_ratio(candidates: &[u64], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    candidates.len() as f64 / n as f64
}

/// Configuration echoed into every report so runs are self-describing.
#[derive(Debug, Clone, Serialize, Default)]
pub struct ConfigEcho {
    pub strategy: String,
    pub metric: String,
    pub alpha: Option<u32>,
    pub beta: Option<u32>,
    pub tau: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<u32>,
    #[serde(rename = "M")]
    pub m: Option<u32>,
    #[serde(rename = "K")]
    pub k: Option<u32>,
    pub nprobe: Option<u32>,
    pub merge_cells: Option<u32>,
    pub seed: u64,
}

/// One evaluation run. `r_at` carries the per-query mean (the headline
/// number); the `_pooled` variants aggregate hit counts over all queries
/// before dividing.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub config: ConfigEcho,
    pub n_db: usize,
    pub n_queries: usize,
    pub map: f64,
    pub recall_candidates: f64,
    pub recall_candidates_pooled: f64,
    pub r_at: BTreeMap<usize, f64>,
    pub r_at_pooled: BTreeMap<usize, f64>,
    pub scope_ratio: f64,
    pub wall_time_s: f64,
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn csv_header(r_list: &[usize]) -> String {
        let mut cols = vec![
            "strategy", "metric", "alpha", "beta", "tau", "L", "M", "K", "nprobe",
            "merge_cells", "seed", "n_db", "n_queries", "map", "recall_candidates",
            "recall_candidates_pooled",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for r in r_list {
            cols.push(format!("r_at_{r}"));
        }
        for r in r_list {
            cols.push(format!("r_at_pooled_{r}"));
        }
        cols.push("scope_ratio".into());
        cols.push("wall_time_s".into());
        cols.join(",")
    }

    pub fn csv_row(&self) -> String {
        fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
            v.as_ref().map(|x| x.to_string()).unwrap_or_default()
        }
        let mut cols = vec![
            self.config.strategy.clone(),
            self.config.metric.clone(),
            opt(&self.config.alpha),
            opt(&self.config.beta),
            opt(&self.config.tau),
            opt(&self.config.l),
            opt(&self.config.m),
            opt(&self.config.k),
            opt(&self.config.nprobe),
            opt(&self.config.merge_cells),
            self.config.seed.to_string(),
            self.n_db.to_string(),
            self.n_queries.to_string(),
            format!("{:.6}", self.map),
            format!("{:.6}", self.recall_candidates),
            format!("{:.6}", self.recall_candidates_pooled),
        ];
        for v in self.r_at.values() {
            cols.push(format!("{v:.6}"));
        }
        for v in self.r_at_pooled.values() {
            cols.push(format!("{v:.6}"));
        }
        cols.push(format!("{:.6}", self.scope_ratio));
        cols.push(format!("{:.6}", self.wall_time_s));
        cols.join(",")
    }
}

/// Runs every ground-truth query through the engine and averages the
/// metrics. Wall time covers the query loop only, not index construction.
pub fn evaluate(
    engine: &Engine,
    qs: &QuerySet,
    metric: Metric,
    r_list: &[usize],
    config: ConfigEcho,
) -> Result<MetricsReport> {
    let gt = qs.ground_truth;
    if gt.entries.is_empty() {
        return Err(Error::GroundTruth("ground truth has no queries".into()));
    }
    for entry in &gt.entries {
        if entry.query_id as usize >= qs.queries.n() {
            return Err(Error::GroundTruth(format!(
                "ground truth references query {} but only {} query vectors are loaded",
                entry.query_id,
                qs.queries.n()
            )));
        }
    }
    let n_db = engine.n_db();
    let nq = gt.entries.len();

    let mut map_sum = 0.0;
    let mut cand_recall_sum = 0.0;
    let mut cand_hits_total = 0usize;
    let mut relevant_total = 0usize;
    let mut scope_sum = 0.0;
    let mut r_at_sum: BTreeMap<usize, f64> = r_list.iter().map(|&r| (r, 0.0)).collect();
    let mut r_at_hits: BTreeMap<usize, usize> = r_list.iter().map(|&r| (r, 0)).collect();

    let started = Instant::now();
    for entry in &gt.entries {
        let ranking = engine.search(qs, entry.query_id, None, metric)?;
        let candidates = engine.candidates(qs, entry.query_id)?;

        map_sum += average_precision(&ranking, &entry.relevant, &entry.junk)?;
        let cr = candidate_recall(&candidates, &entry.relevant);
        cand_recall_sum += cr;
        cand_hits_total += (cr * entry.relevant.len() as f64).round() as usize;
        relevant_total += entry.relevant.len();
        scope_sum += scope_ratio(&candidates, n_db);
        for &r in r_list {
            let rec = recall_at(&ranking, &entry.relevant, &entry.junk, r);
            *r_at_sum.get_mut(&r).unwrap() += rec;
            *r_at_hits.get_mut(&r).unwrap() +=
                (rec * entry.relevant.len() as f64).round() as usize;
        }
    }
    let wall_time_s = started.elapsed().as_secs_f64();

    let r_at = r_at_sum.iter().map(|(&r, &s)| (r, s / nq as f64)).collect();
    let r_at_pooled = r_at_hits
        .iter()
        .map(|(&r, &h)| (r, h as f64 / relevant_total as f64))
        .collect();

    Ok(MetricsReport {
        config,
        n_db,
        n_queries: nq,
        map: map_sum / nq as f64,
        recall_candidates: cand_recall_sum / nq as f64,
        recall_candidates_pooled: cand_hits_total as f64 / relevant_total as f64,
        r_at,
        r_at_pooled,
        scope_ratio: scope_sum / nq as f64,
        wall_time_s,
    })
}
