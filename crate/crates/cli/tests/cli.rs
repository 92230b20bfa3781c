//! End-to-end runs of the `napx` binary against files in `tests/data`.
//! Set `UPDATE_GOLDEN=1` to rewrite the expected outputs.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use napx::{parse_solution, SolverKind};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn napx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_napx")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn golden(name: &str, actual: &str) {
    let path = data(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, actual).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, want, "output differs from {}", path.display());
}

fn ok(args: &[&str]) -> String {
    let out = napx(args);
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    stdout(&out)
}

#[test]
fn solve_cherry() {
    let text = ok(&["solve", "-i", data("cherry.nap.json").to_str().unwrap(), "--epsilon", "0.2"]);
    golden("cherry.solve.golden.json", &text);
    let doc = parse_solution(&text).unwrap();
    assert_eq!(doc.solver, SolverKind::Napx);
    assert!(doc.params.is_some());
    assert_eq!(doc.selected.len(), 1);
}

#[test]
fn solve_with_oracle() {
    let text = ok(&["solve", "-i", data("yule8.nap.json").to_str().unwrap(), "--epsilon", "0.2", "--oracle"]);
    golden("yule8.solve-oracle.golden.json", &text);
    let doc = parse_solution(&text).unwrap();
    assert!(doc.oracle.unwrap().ratio >= 0.8);
}

#[test]
fn solve_flags_do_not_change_the_answer() {
    let path = data("yule8.nap.json");
    let base = ok(&["solve", "-i", path.to_str().unwrap(), "--epsilon", "0.3"]);
    for flag in ["--force-general-path", "--parallel"] {
        assert_eq!(ok(&["solve", "-i", path.to_str().unwrap(), "--epsilon", "0.3", flag]), base, "{flag}");
    }
}

#[test]
fn solve_annotated_newick() {
    let text = ok(&["solve", "-i", data("clades.nap.nwk").to_str().unwrap(), "--epsilon", "0.05"]);
    golden("clades.solve.golden.json", &text);
    assert_eq!(parse_solution(&text).unwrap().selected, vec!["w", "y"]);
}

#[test]
fn exact_with_zero_budget() {
    let text = ok(&["exact", "-i", data("nobudget.nap.json").to_str().unwrap()]);
    golden("nobudget.exact.golden.json", &text);
    assert!(parse_solution(&text).unwrap().selected.is_empty());
}

#[test]
fn pg_matches_exact() {
    let path = data("zero_one.nap.nwk");
    let pg = ok(&["pg", "-i", path.to_str().unwrap()]);
    golden("zero_one.pg.golden.json", &pg);
    let exact = parse_solution(&ok(&["exact", "-i", path.to_str().unwrap()])).unwrap();
    assert!((parse_solution(&pg).unwrap().score - exact.score).abs() < 1e-9);
}

#[test]
fn pg_rejects_general_instances() {
    let out = napx(&["pg", "-i", data("cherry.nap.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("restriction error"), "{}", stderr(&out));
}

#[test]
fn malformed_inputs_exit_with_input_error() {
    for (file, line) in [("malformed.nap.json", "line 1"), ("unbalanced.nap.nwk", "line 4")] {
        let out = napx(&["solve", "-i", data(file).to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(2), "{file}");
        assert!(stderr(&out).contains(line), "{file}: {}", stderr(&out));
    }
    let out = napx(&["solve", "-i", data("does-not-exist.nap.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = napx(&["solve", "-i", data("cherry.nap.json").to_str().unwrap(), "--epsilon", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_deterministic_and_matches_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.nap.json");
    let b = dir.path().join("b.nap.json");
    for p in [&a, &b] {
        let summary = ok(&["gen", "--topology", "yule", "-n", "8", "--seed", "3", "-o", p.to_str().unwrap()]);
        assert!(summary.contains("n=8 h=6 total_cost=31 budget=11"), "{summary}");
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert_eq!(text, fs::read_to_string(data("yule8.nap.json")).unwrap());
}

#[test]
fn gen_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let cat = dir.path().join("cat.nap.nwk");
    let summary = ok(&["gen", "--topology", "caterpillar", "-n", "10", "--seed", "7", "--format", "newick", "-o", cat.to_str().unwrap()]);
    assert!(summary.contains("n=10 h=10"), "{summary}");
    let cherry = dir.path().join("cherry.nap.json");
    let summary = ok(&["gen", "--topology", "yule", "-n", "2", "--seed", "1", "-o", cherry.to_str().unwrap()]);
    assert!(summary.contains("n=2 h=2"), "{summary}");
    let out = napx(&["gen", "-n", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = napx(&["gen", "--topology", "bush", "-n", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_scores_a_selection() {
    let path = data("clades.nap.nwk");
    let text = ok(&["eval", "-i", path.to_str().unwrap(), "-s", "w,y"]);
    golden("clades.eval.golden.json", &text);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!((v["score"].as_f64().unwrap() - 113.5).abs() < 1e-9);
    let out = napx(&["eval", "-i", path.to_str().unwrap(), "-s", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown taxon"));
}

#[test]
fn bench_writes_versioned_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bench.csv");
    ok(&[
        "bench", "--n", "6,8", "--budget", "3", "--epsilon", "0.5,0.2", "--seeds", "2", "--paired-general", "-o",
        csv_path.to_str().unwrap(),
    ]);
    let mut reader = csv::Reader::from_path(&csv_path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(&headers[0], "schema_version");
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    // 2 topologies x 2 sizes x 2 seeds x 2 epsilons x 2 paths
    assert_eq!(rows.len(), 32);
    for row in &rows {
        assert_eq!(&row[0], "1");
        assert_eq!(&row[col("status")], "ok");
        let eps: f64 = row[col("epsilon")].parse().unwrap();
        let ratio: f64 = row[col("ratio")].parse().unwrap();
        assert!(ratio >= 1.0 - eps - 1e-9 && ratio <= 1.0 + 1e-9);
    }
    // fast and general rows of the same run agree on the score
    for pair in rows.chunks(2) {
        assert_eq!(&pair[0][col("solver")], "napx");
        assert_eq!(&pair[1][col("solver")], "napx-general");
        assert_eq!(&pair[0][col("reported_score")], &pair[1][col("reported_score")]);
    }
}

#[test]
fn bench_sweep_is_deterministic_apart_from_timing() {
    let args = ["bench", "--n", "5", "--budget", "2,4", "--epsilon", "0.4", "--seeds", "1"];
    let strip = |text: String| -> Vec<String> {
        text.lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f[9] = "";
                f.join(",")
            })
            .collect()
    };
    assert_eq!(strip(ok(&args)), strip(ok(&args)));
    let mut parallel = args.to_vec();
    parallel.push("--parallel");
    assert_eq!(strip(ok(&args)), strip(ok(&parallel)));
}
