//! Generates a seeded synthetic dataset bundle, writes all five files and
//! reads them back.
//!
//! ```sh
//! cargo run --example synth_dataset
//! ```

use semindex::dataset::{
    read_features, read_ground_truth, read_labels, synth_dataset, write_features,
    write_ground_truth, write_labels, SyntheticConfig,
};

fn main() -> anyhow::Result<()> {
    let cfg = SyntheticConfig {
        n_db: 2000,
        n_queries: 50,
        d: 32,
        n_labels: 60,
        clusters: 20,
        label_noise: 0.1,
        seed: 42,
    };
    let data = synth_dataset(&cfg)?;

    println!(
        "generated {} database vectors (d={}), {} queries, {} labels, {} groups",
        data.db.n(),
        data.db.d,
        data.queries.n(),
        data.db_labels.n_labels,
        cfg.clusters
    );

    let sizes: Vec<usize> = (0..cfg.clusters)
        .map(|g| data.db_groups.iter().filter(|&&x| x == g).count())
        .collect();
    println!(
        "group sizes: min {} / max {} (a few heavy groups dominate)",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );

    let row = data.db_labels.row(0);
    println!("item 0 label row: {row:?}");
    let entry = &data.ground_truth.entries[0];
    println!(
        "query 0 has {} relevant items (its group)",
        entry.relevant.len()
    );

    let dir = tempfile::tempdir()?;
    write_features(dir.path().join("db.fvec"), &data.db)?;
    write_features(dir.path().join("queries.fvec"), &data.queries)?;
    write_labels(dir.path().join("db.lbl"), &data.db_labels)?;
    write_labels(dir.path().join("queries.lbl"), &data.query_labels)?;
    write_ground_truth(dir.path().join("gt.txt"), &data.ground_truth)?;

    let db = read_features(dir.path().join("db.fvec"))?;
    let labels = read_labels(dir.path().join("db.lbl"))?;
    let gt = read_ground_truth(dir.path().join("gt.txt"))?;
    assert_eq!(db, data.db);
    assert_eq!(labels, data.db_labels);
    assert_eq!(gt, data.ground_truth);
    println!("wrote and re-read all files bit-exactly under {:?}", dir.path());
    Ok(())
}
