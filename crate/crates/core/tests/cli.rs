use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde_json::Value;

use sglig::commands::main_with_args;
use sglig::io::{read_edge_list, write_dataset_csv, write_graph_csv};
use sglig::numerics::SeededRng;
use sglig::synth::Dataset;
use sglig::UndirectedGraph;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("sglig").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn simulate_small(out: &Path, seed: &str) -> i32 {
    run(&[
        "--seed", seed, "--out", s(out), "simulate", "--p", "30", "--n", "90", "--parents", "2", "--reps", "3",
    ])
}

fn chain_dataset(n: usize) -> Dataset {
    let mut rng = SeededRng::new(31);
    let mut x = Array2::zeros((n, 3));
    for r in 0..n {
        x[[r, 0]] = rng.normal();
        x[[r, 1]] = 0.8 * x[[r, 0]] + 0.6 * rng.normal();
        x[[r, 2]] = 0.8 * x[[r, 1]] + 0.6 * rng.normal();
    }
    let y = x.column(0).to_owned();
    Dataset::new(x, y).unwrap()
}

#[test]
fn simulate_writes_one_directory_per_dataset() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(simulate_small(dir.path(), "5"), 0);
    let files = files_under(dir.path());
    assert_eq!(files.len(), 18);
    for g in 0..2 {
        for r in 0..3 {
            let base = PathBuf::from(format!("two_class/parent{g}/rep{r}"));
            for name in ["problem.json", "data.csv", "graph.csv"] {
                assert!(files.contains(&base.join(name)), "missing {}", base.join(name).display());
            }
        }
    }
    let header = fs::read_to_string(dir.path().join("two_class/parent0/rep0/data.csv")).unwrap();
    assert!(header.starts_with("x0,x1,"));
    assert!(!header.contains('\r'));
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(simulate_small(a.path(), "17"), 0);
    assert_eq!(simulate_small(b.path(), "17"), 0);
    let files = files_under(a.path());
    assert_eq!(files, files_under(b.path()));
    for f in files {
        assert_eq!(fs::read(a.path().join(&f)).unwrap(), fs::read(b.path().join(&f)).unwrap(), "{}", f.display());
    }
    let c = tempfile::tempdir().unwrap();
    assert_eq!(simulate_small(c.path(), "18"), 0);
    let path = "two_class/parent0/rep0/data.csv";
    assert_ne!(fs::read(a.path().join(path)).unwrap(), fs::read(c.path().join(path)).unwrap());
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    // stochastic commands need a seed
    assert_eq!(run(&["--out", s(dir.path()), "simulate", "--p", "30"]), 1);
    assert_eq!(run(&["no-such-command"]), 1);
    assert_eq!(run(&["simulate", "--scenario", "hexagonal"]), 1);
    assert_eq!(run(&["--config", s(&dir.path().join("missing.json")), "simulate"]), 1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"simulation\": {\"unknown_field\": 1}}").unwrap();
    assert_eq!(run(&["--config", s(&bad), "--seed", "1", "simulate"]), 1);
    assert_eq!(run(&["--seed", "1", "--out", s(dir.path()), "simulate", "--p", "10"]), 1);
    assert_eq!(run(&["estimate-graph", "--data", s(&dir.path().join("missing.csv"))]), 1);
    assert_eq!(run(&["--seed", "1", "benchmark", "--split", "10,10"]), 1);
}

#[test]
fn help_and_version_exit_with_zero() {
    assert_eq!(run(&["--help"]), 0);
    assert_eq!(run(&["--version"]), 0);
}

#[test]
fn unwritable_output_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("chain.csv");
    write_dataset_csv(&data, &chain_dataset(200)).unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("sub");
    assert_eq!(run(&["--out", s(&out), "estimate-graph", "--data", s(&data)]), 2);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"seed": 3, "simulation": {"p": 30, "n": 50, "parents": 1, "reps": 2}}"#,
    )
    .unwrap();
    let out = dir.path().join("sim");
    assert_eq!(run(&["--config", s(&cfg), "--out", s(&out), "simulate", "--reps", "1"]), 0);
    assert_eq!(files_under(&out).len(), 3);
}

#[test]
fn estimate_graph_recovers_the_chain() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("chain.csv");
    write_dataset_csv(&data, &chain_dataset(2000)).unwrap();
    let out = dir.path().join("or");
    assert_eq!(run(&["--out", s(&out), "estimate-graph", "--data", s(&data)]), 0);
    assert_eq!(read_edge_list(&out.join("graph.csv")).unwrap(), vec![(0, 1), (1, 2)]);

    let and = dir.path().join("and");
    assert_eq!(run(&["--out", s(&and), "estimate-graph", "--data", s(&data), "--rule", "and"]), 0);
    let or_edges = read_edge_list(&out.join("graph.csv")).unwrap();
    assert!(read_edge_list(&and.join("graph.csv")).unwrap().iter().all(|e| or_edges.contains(e)));
}

#[test]
fn estimate_graph_on_independent_columns_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = SeededRng::new(2);
    let x = Array2::from_shape_fn((1000, 5), |_| rng.normal());
    let y = x.column(0).to_owned();
    let data = dir.path().join("ind.csv");
    write_dataset_csv(&data, &Dataset::new(x, y).unwrap()).unwrap();
    assert_eq!(run(&["--out", s(dir.path()), "estimate-graph", "--data", s(&data)]), 0);
    assert_eq!(fs::read_to_string(dir.path().join("graph.csv")).unwrap(), "i,j\n");
}

#[test]
fn consensus_thresholds_edge_counts() {
    let dir = tempfile::tempdir().unwrap();
    let graphs = [
        vec![(0, 1), (1, 2)],
        vec![(0, 1), (2, 3)],
        vec![(0, 1), (1, 2), (2, 3)],
    ];
    let mut paths = Vec::new();
    for (k, edges) in graphs.iter().enumerate() {
        let path = dir.path().join(format!("g{k}.csv"));
        write_graph_csv(&path, &UndirectedGraph::from_edges(4, edges.iter().copied()).unwrap()).unwrap();
        paths.push(path);
    }
    let out = dir.path().join("out");
    let mut args = vec!["--out", s(&out), "consensus", "--threshold", "1", "--graphs"];
    args.extend(paths.iter().map(|p| s(p)));
    assert_eq!(run(&args), 0);
    assert_eq!(
        fs::read_to_string(out.join("edge_counts.csv")).unwrap(),
        "i,j,count\n0,1,3\n1,2,2\n2,3,2\n"
    );
    assert_eq!(fs::read_to_string(out.join("consensus.csv")).unwrap(), "i,j\n0,1\n1,2\n2,3\n");

    let strict = dir.path().join("strict");
    let mut args = vec!["--out", s(&strict), "consensus", "--threshold", "2", "--graphs"];
    args.extend(paths.iter().map(|p| s(p)));
    assert_eq!(run(&args), 0);
    assert_eq!(fs::read_to_string(strict.join("consensus.csv")).unwrap(), "i,j\n0,1\n");

    // node 3 does not exist on 3 nodes
    let mut args = vec!["--out", s(&strict), "consensus", "--p", "3", "--graphs"];
    args.extend(paths.iter().map(|p| s(p)));
    assert_ne!(run(&args), 0);
    let mut args = vec!["--out", s(&strict), "consensus", "--total", "5", "--graphs"];
    args.extend(paths.iter().map(|p| s(p)));
    assert_eq!(run(&args), 1);
}

fn read_report(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn tune_writes_grid_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert_eq!(
        run(&["--seed", "9", "--out", s(&sim), "simulate", "--p", "30", "--n", "120", "--parents", "1", "--reps", "1"]),
        0
    );
    let out = dir.path().join("tune");
    let data = sim.join("two_class/parent0/rep0");
    assert_eq!(
        run(&[
            "--seed", "9", "--out", s(&out), "tune", "--data", s(&data), "--models", "srig,sglig",
            "--graph-source", "true", "--split", "40,40,40",
        ]),
        0
    );
    let reports: Vec<PathBuf> = files_under(&out).into_iter().filter(|f| f.extension().is_some_and(|e| e == "json")).collect();
    assert_eq!(reports.len(), 2, "{reports:?}");
    for rel in reports {
        let report = read_report(&out.join(&rel));
        let entries = report["entries"].as_array().unwrap();
        assert_eq!(entries.len(), 50);
        if rel.to_str().unwrap().contains("sglig") {
            let lmax = report["lambda_max"].as_f64().unwrap();
            for e in entries {
                let ls = e["params"]["lambda_star"].as_f64().unwrap();
                assert!((ls - lmax / 5.0).abs() <= 1e-12 * lmax);
            }
        }
    }
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("scenario,model,p,edges,"));
}

#[test]
fn benchmark_summarizes_each_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench");
    assert_eq!(
        run(&[
            "--seed", "4", "--out", s(&out), "--threads", "2", "benchmark", "--p", "30", "--n", "150",
            "--parents", "3", "--reps", "1", "--models", "srig,sglig", "--split", "50,50,50", "--n-lambda", "10",
            "--n-alpha", "10",
        ]),
        0
    );
    let mut summary = csv::Reader::from_path(out.join("summary.csv")).unwrap();
    let headers = summary.headers().unwrap().clone();
    let rows: Vec<csv::StringRecord> = summary.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();

    let mut detail = csv::Reader::from_path(out.join("detail.csv")).unwrap();
    let dh = detail.headers().unwrap().clone();
    let drows: Vec<csv::StringRecord> = detail.records().map(Result::unwrap).collect();
    assert_eq!(drows.len(), 6);
    let dcol = |name: &str| dh.iter().position(|h| h == name).unwrap();
    let srig_edges: Vec<f64> = drows
        .iter()
        .filter(|r| &r[dcol("model")] == "srig")
        .map(|r| r[dcol("edges")].parse().unwrap())
        .collect();
    let mean = srig_edges.iter().sum::<f64>() / srig_edges.len() as f64;
    let reported: f64 = rows[0][col("edges")].parse().unwrap();
    assert_eq!(&rows[0][col("model")], "srig");
    assert!((reported - mean).abs() < 1e-9);
}
