//! Builds a label-partitioned index and walks through candidate generation
//! and re-ranking for one query.
//!
//! ```sh
//! cargo run --example build_and_query
//! ```

use semindex::dataset::{synth_dataset, SyntheticConfig};
use semindex::index::{build_index, candidate_list, top_labels, IndexParams};
use semindex::search::{exhaustive_search, semantic_search, Metric};

fn main() -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        n_db: 5000,
        n_queries: 20,
        d: 32,
        n_labels: 80,
        clusters: 25,
        label_noise: 0.1,
        seed: 7,
    };
    let data = synth_dataset(&cfg)?;

    let alpha = 5;
    let index = build_index(
        &data.db_labels,
        IndexParams::new(alpha, cfg.n_labels)?,
        None,
    )?;
    let entries: usize = index.lists.iter().map(|l| l.len()).sum();
    println!(
        "index: {} cells, {} posting entries (= alpha {} x n {})",
        index.n_cells(),
        entries,
        alpha,
        data.db.n()
    );

    let qid = 0usize;
    let row = data.query_labels.row(qid);
    println!("query {qid} top-5 labels: {:?}", top_labels(row, 5)?);

    for beta in [1usize, 3, 5] {
        let cl = candidate_list(&index, row, beta)?;
        println!(
            "  beta={beta}: {} cells reclaimed, {} candidates ({:.1}% of the database)",
            cl.source_cells.len(),
            cl.ids.len(),
            100.0 * cl.ids.len() as f64 / data.db.n() as f64
        );
    }

    let qv = data.queries.row(qid);
    let sem = semantic_search(&index, &data.db, qid as u64, qv, row, 5, 10, Metric::L2, None)?;
    let exh = exhaustive_search(&data.db, qid as u64, qv, 10, Metric::L2)?;
    println!("top-10 semantic:   {:?}", ids(&sem.items));
    println!("top-10 exhaustive: {:?}", ids(&exh.items));
    let relevant = &data.ground_truth.entries[qid].relevant;
    let hits = sem.items.iter().filter(|(id, _)| relevant.contains(id)).count();
    println!("{hits}/10 of the semantic top-10 are relevant for this query");
    Ok(())
}

fn ids(items: &[(u64, f64)]) -> Vec<u64> {
    items.iter().map(|&(id, _)| id).collect()
}
