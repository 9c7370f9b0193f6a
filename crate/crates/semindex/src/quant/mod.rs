//! Vector quantization: k-means training, product quantization, ADC lookup
//! tables, and the residual scoring used by the compressed search paths.

mod pq;
mod residual;

pub use pq::{
    adc_distance, adc_tables, decode, encode, inner_product_tables, train_pq, AdcTables,
    PqCodebook, TableKind,
};
pub use residual::{
    build_flat_pq, build_residual_pq, encode_residual, partition_centroids, residual_norm_table,
    AdcScorer, FlatPq, ResidualNormTable, ResidualPq,
};

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::math::sq_l2;

/// Default Lloyd iteration cap used throughout the crate.
pub const DEFAULT_KMEANS_ITERS: usize = 25;

/// Borrowed view over a row-major matrix of f32 vectors.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    pub d: usize,
    pub data: &'a [f32],
}

impl<'a> Points<'a> {
    pub fn new(d: usize, data: &'a [f32]) -> Self {
        assert!(d > 0 && data.len() % d == 0);
        Points { d, data }
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn row(&self, i: usize) -> &'a [f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }
}

impl crate::dataset::FeatureSet {
    pub fn points(&self) -> Points<'_> {
        Points::new(self.d, &self.data)
    }
}

/// A `k x d` matrix of cluster centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Centroids {
    pub k: usize,
    pub d: usize,
    pub data: Vec<f32>,
}

impl Centroids {
    pub fn zeros(k: usize, d: usize) -> Self {
        Centroids {
            k,
            d,
            data: vec![0.0; k * d],
        }
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> Points<'_> {
        Points::new(self.d, &self.data)
    }
}

/// Result of a k-means fit.
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub centroids: Centroids,
    /// Index of the nearest centroid per input point.
    pub assignments: Vec<u32>,
    /// Final total squared distance of points to their centroids.
    pub distortion: f64,
    /// Distortion measured after every assignment step; non-increasing.
    pub distortion_history: Vec<f64>,
}

/// Index of the centroid nearest to `v`; ties resolve to the lowest index.
pub fn nearest_centroid(centroids: &Centroids, v: &[f32]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for c in 0..centroids.k {
        let d = sq_l2(centroids.row(c), v);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_row_count(points: &Points) -> usize {
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for i in 0..points.n() {
        seen.insert(points.row(i).iter().map(|v| v.to_bits()).collect());
    }
    seen.len()
}

/// Lloyd's algorithm with k-means++ seeding.
///
/// Deterministic for a fixed seed. Runs until the assignment reaches a
/// fixpoint or `max_iters` passes complete. Empty clusters are repaired by
/// re-seeding them with the farthest member of the highest-distortion
/// cluster. When `k` exceeds the number of distinct points it is reduced to
/// that count (logged).
pub fn kmeans(points: &Points, k: usize, seed: u64, max_iters: usize) -> Result<KmeansFit> {
    let n = points.n();
    if n == 0 {
        return Err(Error::Param("kmeans requires a non-empty point set".into()));
    }
    if k == 0 {
        return Err(Error::Param("kmeans requires k >= 1".into()));
    }
    let mut k = k;
    if k > n {
        k = n;
    }
    if k > 1 {
        let distinct = distinct_row_count(points);
        if k > distinct {
            log::warn!("kmeans: k={k} exceeds {distinct} distinct points; reducing k");
            k = distinct;
        }
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);

    let mut assignments = vec![0u32; n];
    let mut dists = vec![0.0f64; n];
    let mut history = Vec::new();

    for iter in 0..max_iters.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (c, d) = nearest_centroid(&centroids, points.row(i));
            if assignments[i] != c as u32 || iter == 0 {
                changed = changed || assignments[i] != c as u32 || iter == 0;
                assignments[i] = c as u32;
            }
            dists[i] = d;
        }
        history.push(dists.iter().sum());
        if !changed && iter > 0 {
            break;
        }

        // Means update with f64 accumulators.
        let mut sums = vec![0.0f64; k * points.d];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let c = assignments[i] as usize;
            counts[c] += 1;
            for (s, v) in sums[c * points.d..(c + 1) * points.d]
                .iter_mut()
                .zip(points.row(i))
            {
                *s += *v as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            for (out, s) in centroids
                .row_mut(c)
                .iter_mut()
                .zip(&sums[c * points.d..(c + 1) * points.d])
            {
                *out = (*s / counts[c] as f64) as f32;
            }
        }

        repair_empty_clusters(points, &mut centroids, &mut assignments, &mut dists, &mut counts);
    }

    // Final assignment against the last centroid update.
    let mut distortion = 0.0;
    for i in 0..n {
        let (c, d) = nearest_centroid(&centroids, points.row(i));
        assignments[i] = c as u32;
        distortion += d;
    }
    history.push(distortion);

    Ok(KmeansFit {
        centroids,
        assignments,
        distortion,
        distortion_history: history,
    })
}

fn plus_plus_init(points: &Points, k: usize, rng: &mut ChaCha20Rng) -> Centroids {
    let n = points.n();
    let mut centroids = Centroids::zeros(k, points.d);
    let first = rng.gen_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));

    let mut dists: Vec<f64> = (0..n)
        .map(|i| sq_l2(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dists.iter().sum();
        let chosen = if total > 0.0 {
            let r = rng.gen::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, w) in dists.iter().enumerate() {
                acc += w;
                if acc > r {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(chosen));
        for i in 0..n {
            let d = sq_l2(points.row(i), centroids.row(c));
            if d < dists[i] {
                dists[i] = d;
            }
        }
    }
    centroids
}

/// Gives every empty cluster the farthest point of the cluster with the
/// largest total distortion, then reassigns that point.
fn repair_empty_clusters(
    points: &Points,
    centroids: &mut Centroids,
    assignments: &mut [u32],
    dists: &mut [f64],
    counts: &mut [usize],
) {
    let k = centroids.k;
    let mut cluster_cost = vec![0.0f64; k];
    for i in 0..points.n() {
        // Costs against the refreshed centroids.
        dists[i] = sq_l2(points.row(i), centroids.row(assignments[i] as usize));
        cluster_cost[assignments[i] as usize] += dists[i];
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let donor = cluster_cost
            .iter()
            .enumerate()
            .filter(|&(c, _)| counts[c] > 1)
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c);
        let Some(donor) = donor else { break };
        let victim = (0..points.n())
            .filter(|&i| assignments[i] == donor as u32)
            .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
            .expect("donor cluster has members");
        centroids.row_mut(empty).copy_from_slice(points.row(victim));
        cluster_cost[donor] -= dists[victim];
        counts[donor] -= 1;
        assignments[victim] = empty as u32;
        dists[victim] = 0.0;
        counts[empty] = 1;
    }
}
