//! End-to-end tests of the `semindex` binary: every subcommand, determinism
//! of outputs, and the error paths.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_semindex"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed:\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json_of(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        Workspace { _dir: dir, root }
    }

    fn synth(&self, extra: &[&str]) {
        let mut args = vec![
            "synth", "--out", "data", "--n-db", "400", "--n-queries", "25", "--d", "8",
            "--n-labels", "30", "--clusters", "10", "--label-noise", "0.1", "--seed", "7",
        ];
        args.extend_from_slice(extra);
        run_ok(&args, &self.root);
    }

    fn path(&self, rel: &str) -> String {
        self.root.join(rel).to_string_lossy().into_owned()
    }
}

#[test]
fn synth_build_eval_exhaustive() {
    let ws = Workspace::new();
    ws.synth(&[]);
    let build = run_ok(
        &[
            "build", "--labels", "data/db.lbl", "--index", "idx.sidx", "--alpha", "5",
            "--seed", "7",
        ],
        &ws.root,
    );
    let summary = json_of(&build);
    assert_eq!(summary["n"], 400);
    assert_eq!(summary["alpha"], 5);
    assert_eq!(summary["posting_entries"], 400 * 5);

    let eval = run_ok(
        &[
            "eval", "--features", "data/db.fvec", "--queries", "data/queries.fvec",
            "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt",
            "--strategy", "exhaustive", "--seed", "7",
        ],
        &ws.root,
    );
    let report = json_of(&eval);
    assert_eq!(report["scope_ratio"], 1.0);
    assert_eq!(report["recall_candidates"], 1.0);
}

#[test]
fn build_twice_is_byte_identical() {
    let ws = Workspace::new();
    ws.synth(&[]);
    for out in ["a.sidx", "b.sidx"] {
        run_ok(
            &[
                "build", "--labels", "data/db.lbl", "--features", "data/db.fvec", "--index",
                out, "--alpha", "5", "--pq", "--pq-m", "4", "--pq-k", "6", "--seed", "7",
            ],
            &ws.root,
        );
    }
    assert_eq!(
        std::fs::read(ws.path("a.sidx")).unwrap(),
        std::fs::read(ws.path("b.sidx")).unwrap()
    );
}

#[test]
fn query_output_is_deterministic() {
    let ws = Workspace::new();
    ws.synth(&[]);
    run_ok(
        &["build", "--labels", "data/db.lbl", "--index", "idx.sidx", "--seed", "7"],
        &ws.root,
    );
    let args = [
        "query", "--index", "idx.sidx", "--features", "data/db.fvec", "--queries",
        "data/queries.fvec", "--query-labels", "data/queries.lbl", "--strategy", "semantic",
        "--beta", "5", "--top", "10", "--seed", "7",
    ];
    let a = run_ok(&args, &ws.root);
    let b = run_ok(&args, &ws.root);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
}

/// With rows that store every label, beta = n_labels reclaims the whole
/// database and the semantic ranking equals the exhaustive one.
#[test]
fn full_beta_query_matches_exhaustive() {
    let ws = Workspace::new();
    run_ok(
        &[
            "synth", "--out", "data", "--n-db", "120", "--n-queries", "10", "--d", "6",
            "--n-labels", "10", "--clusters", "5", "--label-noise", "0.1", "--seed", "9",
        ],
        &ws.root,
    );
    run_ok(
        &["build", "--labels", "data/db.lbl", "--index", "idx.sidx", "--alpha", "5", "--seed", "9"],
        &ws.root,
    );
    let sem = run_ok(
        &[
            "query", "--index", "idx.sidx", "--features", "data/db.fvec", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--strategy",
            "semantic", "--beta", "10", "--top", "20",
        ],
        &ws.root,
    );
    let exh = run_ok(
        &[
            "query", "--features", "data/db.fvec", "--queries", "data/queries.fvec",
            "--strategy", "exhaustive", "--top", "20",
        ],
        &ws.root,
    );
    assert_eq!(sem.stdout, exh.stdout);
}

#[test]
fn sweep_emits_monotone_grid() {
    let ws = Workspace::new();
    ws.synth(&[]);
    let out = run_ok(
        &[
            "sweep", "--features", "data/db.fvec", "--labels", "data/db.lbl", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt",
            "--alphas", "1,5,10", "--betas", "1,5,10", "--R", "1,10", "--seed", "7",
            "--csv", "sweep.csv",
        ],
        &ws.root,
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    assert_eq!(rows.len(), 9, "3x3 grid emits 9 rows");

    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (a_col, b_col, rc_col) = (col("alpha"), col("beta"), col("recall_candidates"));
    let cell = |row: &Vec<String>, c: usize| row[c].parse::<f64>().unwrap();
    // Candidate recall is non-decreasing along both grid axes.
    for alpha in ["1", "5", "10"] {
        let mut axis: Vec<&Vec<String>> = rows.iter().filter(|r| r[a_col] == alpha).collect();
        axis.sort_by_key(|r| r[b_col].parse::<u32>().unwrap());
        for pair in axis.windows(2) {
            assert!(cell(pair[1], rc_col) >= cell(pair[0], rc_col) - 1e-12);
        }
    }
    for beta in ["1", "5", "10"] {
        let mut axis: Vec<&Vec<String>> = rows.iter().filter(|r| r[b_col] == beta).collect();
        axis.sort_by_key(|r| r[a_col].parse::<u32>().unwrap());
        for pair in axis.windows(2) {
            assert!(cell(pair[1], rc_col) >= cell(pair[0], rc_col) - 1e-12);
        }
    }
    // The CSV file holds the same 9 rows plus a header.
    let csv = std::fs::read_to_string(ws.path("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 10);
}

#[test]
fn merge_reports_cell_count() {
    let ws = Workspace::new();
    ws.synth(&[]);
    let build = run_ok(
        &[
            "build", "--labels", "data/db.lbl", "--index", "merged.sidx", "--alpha", "5",
            "--merge-cells", "18", "--seed", "7",
        ],
        &ws.root,
    );
    let summary = json_of(&build);
    assert_eq!(summary["cells"], 18);
    assert_eq!(summary["merged"], true);

    // The standalone merge command rebuilds an existing index.
    run_ok(
        &["build", "--labels", "data/db.lbl", "--index", "plain.sidx", "--seed", "7"],
        &ws.root,
    );
    let merge = run_ok(
        &[
            "merge", "--index", "plain.sidx", "--labels", "data/db.lbl", "--merge-cells",
            "12", "--out", "remerged.sidx",
        ],
        &ws.root,
    );
    assert_eq!(json_of(&merge)["cells"], 12);
}

#[test]
fn semantic_adc_eval_needs_no_database_vectors() {
    let ws = Workspace::new();
    ws.synth(&[]);
    run_ok(
        &[
            "build", "--labels", "data/db.lbl", "--features", "data/db.fvec", "--index",
            "idx.sidx", "--pq", "--pq-m", "4", "--pq-k", "6", "--seed", "7",
        ],
        &ws.root,
    );
    // No --features here: the PQ block inside the index is all the eval uses.
    let eval = run_ok(
        &[
            "eval", "--index", "idx.sidx", "--queries", "data/queries.fvec",
            "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt", "--strategy",
            "semantic-adc", "--beta", "5", "--seed", "7",
        ],
        &ws.root,
    );
    let report = json_of(&eval);
    assert_eq!(report["strategy"], "semantic-adc");
    assert_eq!(report["M"], 4);
    assert!(report["map"].as_f64().unwrap() > 0.5);
}

#[test]
fn split_enables_pruned_search() {
    let ws = Workspace::new();
    ws.synth(&[]);
    run_ok(
        &["build", "--labels", "data/db.lbl", "--index", "idx.sidx", "--seed", "7"],
        &ws.root,
    );
    let split = run_ok(
        &[
            "split", "--index", "idx.sidx", "--features", "data/db.fvec", "--out",
            "split.sidx", "--L", "4", "--seed", "7",
        ],
        &ws.root,
    );
    assert_eq!(json_of(&split)["L"], 4);

    // tau = 1 keeps every sub-cell, so the report matches the unsplit one.
    let base = run_ok(
        &[
            "eval", "--index", "idx.sidx", "--features", "data/db.fvec", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt",
            "--strategy", "semantic", "--beta", "5", "--seed", "7",
        ],
        &ws.root,
    );
    let full = run_ok(
        &[
            "eval", "--index", "split.sidx", "--features", "data/db.fvec", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt",
            "--strategy", "semantic", "--beta", "5", "--tau", "1.0", "--seed", "7",
        ],
        &ws.root,
    );
    let (base, full) = (json_of(&base), json_of(&full));
    assert_eq!(base["map"], full["map"]);
    assert_eq!(base["scope_ratio"], full["scope_ratio"]);

    // Default tau (0.1) engages pruning on a split index and shrinks scope.
    let pruned = run_ok(
        &[
            "eval", "--index", "split.sidx", "--features", "data/db.fvec", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--gt", "data/gt.txt",
            "--strategy", "semantic", "--beta", "5", "--seed", "7",
        ],
        &ws.root,
    );
    let pruned = json_of(&pruned);
    assert_eq!(pruned["tau"], 0.1);
    assert!(
        pruned["scope_ratio"].as_f64().unwrap() < base["scope_ratio"].as_f64().unwrap(),
        "pruning should shrink the scope"
    );
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let ws = Workspace::new();
    ws.synth(&[]);
    std::fs::write(
        ws.root.join("run.conf"),
        "# defaults for this bundle\nlabels = data/db.lbl\nalpha = 3\nseed = 7\n",
    )
    .unwrap();
    let from_file = run_ok(
        &["build", "--config", "run.conf", "--index", "a.sidx"],
        &ws.root,
    );
    assert_eq!(json_of(&from_file)["alpha"], 3);
    // An explicit flag overrides the file value.
    let overridden = run_ok(
        &["build", "--config", "run.conf", "--index", "b.sidx", "--alpha", "4"],
        &ws.root,
    );
    assert_eq!(json_of(&overridden)["alpha"], 4);
}

#[test]
fn missing_inputs_fail_with_nonzero_exit() {
    let ws = Workspace::new();
    let out = bin()
        .args(["build", "--labels", "nope.lbl", "--index", "x.sidx"])
        .current_dir(&ws.root)
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert!(!ws.root.join("x.sidx").exists(), "no partial index on failure");

    let out = bin()
        .args(["eval", "--strategy", "warp-drive"])
        .current_dir(&ws.root)
        .output()
        .unwrap();
    assert!(!out.status.success());
}

#[test]
fn beta_beyond_stored_labels_directs_regeneration() {
    let ws = Workspace::new();
    ws.synth(&[]);
    run_ok(
        &["build", "--labels", "data/db.lbl", "--index", "idx.sidx", "--seed", "7"],
        &ws.root,
    );
    // Rows store 10 entries; beta = 20 must fail with the regeneration hint.
    let out = bin()
        .args([
            "query", "--index", "idx.sidx", "--features", "data/db.fvec", "--queries",
            "data/queries.fvec", "--query-labels", "data/queries.lbl", "--strategy",
            "semantic", "--beta", "20",
        ])
        .current_dir(&ws.root)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("regenerate"), "stderr: {stderr}");
}
