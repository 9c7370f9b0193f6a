//! Label co-occurrence statistics and label merging.
//!
//! Two labels are similar when their co-occurrence profiles correlate: the
//! matrix counts how often label pairs appear together in per-item top-k
//! label sets, each row is treated as that label's profile, and similarity is
//! the Pearson correlation of two profiles. Merging runs average-linkage
//! agglomerative clustering on `1 - similarity` down to a target cell count.

use crate::dataset::LabelMatrix;
use crate::error::{Error, Result};

use super::top_labels;

/// Symmetric co-occurrence counts over a label vocabulary. `counts[i][j]`
/// (i != j) is the number of items whose top-k contains both labels;
/// `counts[i][i]` is the number of items whose top-k contains label `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceMatrix {
    pub n_labels: u32,
    counts: Vec<u32>,
}

impl CooccurrenceMatrix {
    pub fn new(n_labels: u32) -> Self {
        let n = n_labels as usize;
        CooccurrenceMatrix {
            n_labels,
            counts: vec![0; n * n],
        }
    }

    /// Builds a matrix from raw counts (row-major `n_labels x n_labels`).
    pub fn from_counts(n_labels: u32, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != (n_labels as usize).pow(2) {
            return Err(Error::Param("co-occurrence count buffer has wrong size".into()));
        }
        Ok(CooccurrenceMatrix { n_labels, counts })
    }

    pub fn get(&self, i: u32, j: u32) -> u32 {
        self.counts[i as usize * self.n_labels as usize + j as usize]
    }

    fn bump(&mut self, i: u32, j: u32) {
        self.counts[i as usize * self.n_labels as usize + j as usize] += 1;
    }

    /// Row `i` as the label's co-occurrence profile.
    pub fn row(&self, i: u32) -> &[u32] {
        let n = self.n_labels as usize;
        &self.counts[i as usize * n..(i as usize + 1) * n]
    }
}

/// Counts top-`k` label co-occurrences over all rows of `labels`.
pub fn cooccurrence_matrix(labels: &LabelMatrix, k: usize) -> Result<CooccurrenceMatrix> {
    let mut m = CooccurrenceMatrix::new(labels.n_labels);
    for row in &labels.rows {
        let top = top_labels(row, k)?;
        for (a, &i) in top.iter().enumerate() {
            m.bump(i, i);
            for &j in &top[a + 1..] {
                m.bump(i, j);
                m.bump(j, i);
            }
        }
    }
    Ok(m)
}

/// Pearson correlation of two equal-length sequences. Returns 0 when either
/// side has zero variance (the correlation is undefined there; degenerate
/// profiles are treated as unrelated).
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)
}

/// Similarity of two labels: the Pearson correlation of their co-occurrence
/// profiles.
pub fn label_similarity(c: &CooccurrenceMatrix, i: u32, j: u32) -> f64 {
    let xs: Vec<f64> = c.row(i).iter().map(|&v| v as f64).collect();
    let ys: Vec<f64> = c.row(j).iter().map(|&v| v as f64).collect();
    pearson(&xs, &ys)
}

/// Maps each original label to a merged cell id in `0..n_cells`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    pub n_labels: u32,
    pub n_cells: u32,
    pub cell_of: Vec<u32>,
}

impl LabelMapping {
    pub fn identity(n_labels: u32) -> Self {
        LabelMapping {
            n_labels,
            n_cells: n_labels,
            cell_of: (0..n_labels).collect(),
        }
    }

    /// Validates surjectivity onto `0..n_cells`.
    pub fn validate(&self) -> Result<()> {
        if self.cell_of.len() != self.n_labels as usize {
            return Err(Error::Param("mapping length does not match n_labels".into()));
        }
        let mut hit = vec![false; self.n_cells as usize];
        for &c in &self.cell_of {
            if c >= self.n_cells {
                return Err(Error::Param(format!("mapping cell {c} out of range")));
            }
            hit[c as usize] = true;
        }
        if !hit.iter().all(|&h| h) {
            return Err(Error::Param("mapping is not surjective onto its cells".into()));
        }
        Ok(())
    }
}

/// Merges labels down to `target_cells` cells by average-linkage
/// agglomerative clustering on distance `1 - similarity`.
///
/// Deterministic: when merge distances tie, the lexicographically smallest
/// pair of cluster representatives (their minimum original label ids) merges
/// first. Final cell ids are assigned in order of each cluster's minimum
/// label, so `target_cells == n_labels` yields the identity mapping.
pub fn merge_labels(c: &CooccurrenceMatrix, target_cells: u32) -> Result<LabelMapping> {
    let n = c.n_labels as usize;
    if target_cells == 0 || target_cells > c.n_labels {
        return Err(Error::Param(format!(
            "target_cells must lie in 1..=n_labels (got {target_cells})"
        )));
    }
    if target_cells == c.n_labels {
        return Ok(LabelMapping::identity(c.n_labels));
    }

    // Pairwise distances; profiles are compared once up front.
    let profiles: Vec<Vec<f64>> = (0..n)
        .map(|i| c.row(i as u32).iter().map(|&v| v as f64).collect())
        .collect();
    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = 1.0 - pearson(&profiles[i], &profiles[j]);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // Clusters are keyed by their minimum member label; `parent[l]` tracks
    // membership for the final mapping.
    let mut active: Vec<bool> = vec![true; n];
    let mut size: Vec<usize> = vec![1; n];
    let mut members: Vec<Vec<u32>> = (0..n).map(|i| vec![i as u32]).collect();
    let mut n_active = n;

    while n_active > target_cells as usize {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i * n + j];
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => d < bd || (d == bd && (i, j) < (bi, bj)),
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active clusters");
        // Average linkage via the Lance-Williams update; the merged cluster
        // keeps key `i` (the smaller representative).
        let (si, sj) = (size[i] as f64, size[j] as f64);
        for x in 0..n {
            if !active[x] || x == i || x == j {
                continue;
            }
            let d = (si * dist[i * n + x] + sj * dist[j * n + x]) / (si + sj);
            dist[i * n + x] = d;
            dist[x * n + i] = d;
        }
        size[i] += size[j];
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        active[j] = false;
        n_active -= 1;
    }

    let mut cell_of = vec![0u32; n];
    let mut cell = 0u32;
    for i in 0..n {
        if !active[i] {
            continue;
        }
        for &label in &members[i] {
            cell_of[label as usize] = cell;
        }
        cell += 1;
    }
    debug_assert_eq!(cell, target_cells);
    Ok(LabelMapping {
        n_labels: c.n_labels,
        n_cells: target_cells,
        cell_of,
    })
}
