//! Resizing the label codebook: merging correlated labels into fewer cells
//! and splitting partitions into prunable sub-cells.
//!
//! ```sh
//! cargo run --example merge_and_split
//! ```

use semindex::dataset::{synth_dataset, SyntheticConfig};
use semindex::index::{
    build_index, candidate_list, cooccurrence_matrix, label_similarity, merge_labels,
    pruned_candidate_list, split_index, IndexParams,
};

fn main() -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        n_db: 4000,
        n_queries: 30,
        d: 16,
        n_labels: 60,
        clusters: 20,
        label_noise: 0.1,
        seed: 11,
    };
    let data = synth_dataset(&cfg)?;

    // Label similarity from top-5 co-occurrence statistics.
    let cooc = cooccurrence_matrix(&data.db_labels, 5)?;
    println!(
        "co-occurrence profiles: s(0,1) = {:.3} (adjacent labels), s(0,30) = {:.3} (unrelated)",
        label_similarity(&cooc, 0, 1),
        label_similarity(&cooc, 0, 30)
    );

    // Merge 60 labels into 40 cells and rebuild.
    let mapping = merge_labels(&cooc, 40)?;
    let unmerged = build_index(&data.db_labels, IndexParams::new(5, 60)?, None)?;
    let merged = build_index(&data.db_labels, IndexParams::new(5, 60)?, Some(mapping))?;
    println!("merged codebook: {} -> {} cells", unmerged.n_cells(), merged.n_cells());

    let row = data.query_labels.row(0);
    let a = candidate_list(&unmerged, row, 5)?;
    let b = candidate_list(&merged, row, 5)?;
    println!(
        "query 0 candidates: {} unmerged vs {} merged (merged cells absorb whole labels, \
         so the merged set is a superset)",
        a.ids.len(),
        b.ids.len()
    );
    assert!(a.ids.iter().all(|id| b.ids.binary_search(id).is_ok()));

    // Split each partition into 10 sub-cells and prune at query time.
    let split = split_index(&unmerged, &data.db, 10, 11)?;
    let qv = data.queries.row(0);
    println!("pruning sweep at beta = 5 (tau = kept fraction of sub-cells):");
    for tau in [0.1, 0.3, 0.5, 1.0] {
        let pruned = pruned_candidate_list(&split, qv, row, 5, tau)?;
        let relevant = &data.ground_truth.entries[0].relevant;
        let recall = relevant
            .iter()
            .filter(|id| pruned.ids.binary_search(id).is_ok())
            .count() as f64
            / relevant.len() as f64;
        println!(
            "  tau={tau:.1}: {:5} candidates  candidate recall {recall:.3}",
            pruned.ids.len()
        );
    }
    Ok(())
}
