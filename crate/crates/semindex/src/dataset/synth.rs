//! Seeded synthetic datasets whose label structure tracks geometric
//! neighborhoods.
//!
//! Items belong to latent groups. Each group has a feature-space center and a
//! characteristic ranked label list; an item's features are sampled around
//! its group center and its label row is the group list with per-slot
//! corruption. Group centers are laid out around a circle (with Gaussian
//! jitter) in the order of their label ranges, so groups that share labels
//! are also feature-space neighbors, and group sizes are skewed so that a few
//! groups hold far more items than the rest. A query's relevant set is every
//! database item of its group.
//!
//! With `label_noise = 0` every item's row equals its group list exactly, so
//! a query shares its full top-5 with every relevant item.

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::math::sub_seed;

use super::{FeatureSet, GroundTruth, GtEntry, LabelMatrix, LabelRow};

/// Stored label entries per row. Queries and builds can use any top-k up to
/// this budget.
pub const ROW_ENTRIES: usize = 10;

/// Confidence assigned to slot `j` of a row: strictly decreasing, positive,
/// and summing below 1 over any row length.
fn slot_confidence(j: usize) -> f32 {
    0.5f32.powi(j as i32 + 1)
}

/// Every tenth group is "heavy" and receives this many times the weight of an
/// ordinary group when database items are apportioned.
const HEAVY_WEIGHT: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_db: usize,
    pub n_queries: usize,
    pub d: usize,
    pub n_labels: u32,
    pub clusters: usize,
    /// Probability that any one row slot is replaced by a random label.
    pub label_noise: f64,
    pub seed: u64,
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("d must be >= 1".into()));
        }
        if self.n_labels < 5 {
            return Err(Error::Config(
                "n_labels must be >= 5 so each group has a ranked label list of >= 5 labels"
                    .into(),
            ));
        }
        if self.clusters == 0 {
            return Err(Error::Config("clusters must be >= 1".into()));
        }
        if self.clusters > self.n_labels as usize {
            return Err(Error::Config(format!(
                "clusters ({}) must not exceed n_labels ({})",
                self.clusters, self.n_labels
            )));
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Config("label_noise must lie in [0, 1]".into()));
        }
        if self.n_queries > 0 && self.n_db == 0 {
            return Err(Error::Config(
                "queries require a non-empty database (relevant sets must be non-empty)".into(),
            ));
        }
        Ok(())
    }

    fn row_entries(&self) -> usize {
        ROW_ENTRIES.min(self.n_labels as usize)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub db: FeatureSet,
    pub queries: FeatureSet,
    pub db_labels: LabelMatrix,
    pub query_labels: LabelMatrix,
    pub ground_truth: GroundTruth,
    /// Group of each database item; handy for diagnostics and tests.
    pub db_groups: Vec<usize>,
    pub query_groups: Vec<usize>,
}

/// Distance between the feature centers of adjacent groups.
fn adjacent_gap(d: usize) -> f64 {
    8.0 * (d as f64).sqrt()
}

fn group_centers(cfg: &SyntheticConfig, rng: &mut ChaCha20Rng) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let gap = adjacent_gap(cfg.d);
    let c = cfg.clusters;
    let mut centers = Vec::with_capacity(c);
    for g in 0..c {
        let mut center = vec![0.0f64; cfg.d];
        if c > 1 {
            if cfg.d >= 2 {
                let radius = gap / (2.0 * (std::f64::consts::PI / c as f64).sin());
                let theta = 2.0 * std::f64::consts::PI * g as f64 / c as f64;
                center[0] = radius * theta.cos();
                center[1] = radius * theta.sin();
            } else {
                center[0] = g as f64 * gap;
            }
        }
        for v in center.iter_mut() {
            *v += normal.sample(rng);
        }
        centers.push(center);
    }
    centers
}

/// Ranked label list of group `g`: a contiguous run starting at the group's
/// base label, wrapping around the vocabulary. Adjacent groups overlap.
fn group_labels(cfg: &SyntheticConfig, g: usize) -> Vec<u32> {
    let base = (g * cfg.n_labels as usize) / cfg.clusters;
    (0..cfg.row_entries())
        .map(|j| ((base + j) % cfg.n_labels as usize) as u32)
        .collect()
}

/// Largest-remainder apportionment of `n` items over weighted groups.
fn group_sizes(cfg: &SyntheticConfig) -> Vec<usize> {
    let weights: Vec<usize> = (0..cfg.clusters)
        .map(|g| if g % 10 == 0 { HEAVY_WEIGHT } else { 1 })
        .collect();
    let total: usize = weights.iter().sum();
    let mut sizes: Vec<usize> = weights
        .iter()
        .map(|w| cfg.n_db * w / total)
        .collect();
    let assigned: usize = sizes.iter().sum();
    let mut rest: Vec<(usize, usize)> = weights
        .iter()
        .enumerate()
        .map(|(g, w)| (cfg.n_db * w % total, g))
        .collect();
    rest.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for i in 0..(cfg.n_db - assigned) {
        sizes[rest[i].1] += 1;
    }
    sizes
}

fn sample_features(
    centers: &[Vec<f64>],
    groups: &[usize],
    d: usize,
    rng: &mut ChaCha20Rng,
) -> FeatureSet {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut data = Vec::with_capacity(groups.len() * d);
    for &g in groups {
        for j in 0..d {
            data.push((centers[g][j] + normal.sample(rng)) as f32);
        }
    }
    FeatureSet { d, data }
}

fn sample_row(
    cfg: &SyntheticConfig,
    labels_of_group: &[u32],
    rng: &mut ChaCha20Rng,
) -> LabelRow {
    let k = cfg.row_entries();
    let mut used = BTreeSet::new();
    let mut row: LabelRow = Vec::with_capacity(k);
    for (j, &label) in labels_of_group.iter().enumerate().take(k) {
        let corrupted = cfg.label_noise > 0.0 && rng.gen::<f64>() < cfg.label_noise;
        let chosen = if !corrupted && !used.contains(&label) {
            label
        } else {
            // Either noise fired or the group label was already taken by an
            // earlier corrupted slot; draw a fresh unused label.
            loop {
                let candidate = rng.gen_range(0..cfg.n_labels);
                if !used.contains(&candidate) {
                    break candidate;
                }
            }
        };
        used.insert(chosen);
        row.push((chosen, slot_confidence(j)));
    }
    row
}

/// Generates a seeded dataset bundle. Identical configurations produce
/// identical bytes.
pub fn synth_dataset(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;

    let mut centers_rng = ChaCha20Rng::seed_from_u64(sub_seed(cfg.seed, "synth-centers"));
    let centers = group_centers(cfg, &mut centers_rng);
    let labels_per_group: Vec<Vec<u32>> = (0..cfg.clusters)
        .map(|g| group_labels(cfg, g))
        .collect();

    let sizes = group_sizes(cfg);
    let mut db_groups = Vec::with_capacity(cfg.n_db);
    for (g, &s) in sizes.iter().enumerate() {
        db_groups.extend(std::iter::repeat_n(g, s));
    }

    let query_groups: Vec<usize> = (0..cfg.n_queries)
        .map(|j| db_groups[j * cfg.n_db / cfg.n_queries])
        .collect();

    let mut db_feat_rng = ChaCha20Rng::seed_from_u64(sub_seed(cfg.seed, "synth-db-features"));
    let db = sample_features(&centers, &db_groups, cfg.d, &mut db_feat_rng);
    let mut q_feat_rng = ChaCha20Rng::seed_from_u64(sub_seed(cfg.seed, "synth-query-features"));
    let queries = sample_features(&centers, &query_groups, cfg.d, &mut q_feat_rng);

    let mut db_label_rng = ChaCha20Rng::seed_from_u64(sub_seed(cfg.seed, "synth-db-labels"));
    let db_rows: Vec<LabelRow> = db_groups
        .iter()
        .map(|&g| sample_row(cfg, &labels_per_group[g], &mut db_label_rng))
        .collect();
    let mut q_label_rng = ChaCha20Rng::seed_from_u64(sub_seed(cfg.seed, "synth-query-labels"));
    let query_rows: Vec<LabelRow> = query_groups
        .iter()
        .map(|&g| sample_row(cfg, &labels_per_group[g], &mut q_label_rng))
        .collect();

    // Rows come out sorted already (confidences strictly decrease by slot),
    // but normalize through the constructor to enforce the invariants.
    let db_labels = LabelMatrix::new(cfg.n_labels, db_rows)?;
    let query_labels = LabelMatrix::new(cfg.n_labels, query_rows)?;

    let mut group_members: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); cfg.clusters];
    for (id, &g) in db_groups.iter().enumerate() {
        group_members[g].insert(id as u64);
    }
    let entries: Vec<GtEntry> = query_groups
        .iter()
        .enumerate()
        .map(|(qid, &g)| GtEntry {
            query_id: qid as u64,
            relevant: group_members[g].clone(),
            junk: BTreeSet::new(),
        })
        .collect();

    Ok(SyntheticData {
        db,
        queries,
        db_labels,
        query_labels,
        ground_truth: GroundTruth { entries },
        db_groups,
        query_groups,
    })
}
