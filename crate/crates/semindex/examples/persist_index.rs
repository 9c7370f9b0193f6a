//! Index persistence: saves a fully loaded index (mapping + split + PQ block)
//! and shows the reload reproduces query output bit-identically.
//!
//! ```sh
//! cargo run --example persist_index
//! ```

use semindex::dataset::{synth_dataset, SyntheticConfig};
use semindex::index::{build_index, cooccurrence_matrix, merge_labels, split_index, IndexParams};
use semindex::persist::{load_index, save_index};
use semindex::quant::build_residual_pq;
use semindex::search::{semantic_adc_search, Metric};

fn main() -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        n_db: 1500,
        n_queries: 10,
        d: 16,
        n_labels: 40,
        clusters: 15,
        label_noise: 0.1,
        seed: 21,
    };
    let data = synth_dataset(&cfg)?;

    let cooc = cooccurrence_matrix(&data.db_labels, 5)?;
    let mapping = merge_labels(&cooc, 30)?;
    let index = build_index(&data.db_labels, IndexParams::new(5, 40)?, Some(mapping))?;
    let index = split_index(&index, &data.db, 4, 21)?;
    let pq = build_residual_pq(&data.db, &index.lists, 4, 8, 21, None)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("bundle.sidx");
    save_index(&path, &index, Some(&pq))?;
    println!(
        "saved index with {} cells, split L={}, PQ {}x{} to {:?} ({} bytes)",
        index.n_cells(),
        index.split.as_ref().unwrap().l,
        pq.codebook.m,
        pq.codebook.n_codes(),
        path,
        std::fs::metadata(&path)?.len()
    );

    let (loaded, loaded_pq) = load_index(&path)?;
    let loaded_pq = loaded_pq.expect("PQ block round-trips");
    assert_eq!(index, loaded);

    for qid in 0..data.queries.n() {
        let before = semantic_adc_search(
            &index,
            &pq,
            qid as u64,
            data.queries.row(qid),
            data.query_labels.row(qid),
            5,
            10,
            Metric::L2,
        )?;
        let after = semantic_adc_search(
            &loaded,
            &loaded_pq,
            qid as u64,
            data.queries.row(qid),
            data.query_labels.row(qid),
            5,
            10,
            Metric::L2,
        )?;
        assert_eq!(before.items, after.items);
    }
    println!("reloaded index answers every query bit-identically");
    Ok(())
}
