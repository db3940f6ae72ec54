use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ccm_core::statistics::degree_distribution;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccm-select"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Star-plus-triangle graph in canonical form.
fn fixture_graph(dir: &Path) -> PathBuf {
    let g = ccm_core::Graph::new(
        (0..7).map(|i| format!("n{i}")).collect(),
        vec![
            ccm_core::NodeType::Primary,
            ccm_core::NodeType::Specialty,
            ccm_core::NodeType::Specialty,
            ccm_core::NodeType::Primary,
            ccm_core::NodeType::Specialty,
            ccm_core::NodeType::Primary,
            ccm_core::NodeType::Specialty,
        ],
        [(0, 1), (0, 2), (0, 3), (0, 4), (4, 5), (5, 6), (4, 6), (1, 2)],
    )
    .unwrap();
    let p = dir.join("g.json");
    std::fs::write(&p, ccm_select::graph_json::to_canonical_json(&g)).unwrap();
    p
}

const PRIORS: &str = "[m2]\nalpha = 2.0\nbeta = 5.0\n\n[m3]\nmean = 0.5\nsd = 0.25\n\n[m4]\npp_alpha = 1.0\npp_beta = 1.0\nps_alpha = 1.0\nps_beta = 2.0\nss_alpha = 2.0\nss_beta = 1.0\n\n[m5]\nmean = [-1.0, 0.0, 0.0]\ncovariance = [[1.0, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 0.25]]\n";

#[test]
fn ingest_stats_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let shared = write(
        dir.path(),
        "shared.csv",
        "npi_a,npi_b,shared_count\n1,2,3\n2,1,3\n1,3,5\n3,4,1\n2,9,4\n",
    );
    let providers = write(
        dir.path(),
        "providers.csv",
        "npi,state,specialty\n1,WY,Family Practice\n2,WY,Cardiology\n3,WY,Internal Medicine\n4,WY,Podiatry\n9,CO,Family Practice\n",
    );
    let graph = dir.path().join("wy.json");
    let summary = ok_json(&[
        "ingest", "--shared", s(&shared), "--providers", s(&providers), "--state", "WY", "--threshold", "2", "--out",
        s(&graph),
    ]);
    let r = &summary["result"];
    assert_eq!((r["nodes"].as_u64(), r["edges"].as_u64()), (Some(3), Some(2)));
    assert_eq!((r["primary"].as_u64(), r["specialty"].as_u64()), (Some(2), Some(1)));
    assert_eq!(r["cross_state_pairs"].as_u64(), Some(1));
    assert_eq!(summary["manifest"]["command"], "ingest");
    assert!(summary["manifest"]["seed"].is_null());

    let stats = ok_json(&["stats", "--graph", s(&graph)]);
    assert_eq!(stats["result"]["n"].as_u64(), Some(3));
    assert_eq!(stats["result"]["edges"].as_u64(), Some(2));

    let g = ccm_select::graph_json::read_graph(&graph).unwrap();
    let report = ok_json(&["report", "--graph", s(&graph), "--kind", "degdist"]);
    let rows: Vec<(u64, u64)> = report["result"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r[0].as_u64().unwrap(), r[1].as_u64().unwrap()))
        .collect();
    let expected: Vec<(u64, u64)> = degree_distribution(&g).nonzero().map(|(k, c)| (k as u64, c)).collect();
    assert_eq!(rows, expected);

    let csv = run(&["report", "--graph", s(&graph), "--kind", "degdist", "--format", "csv"]);
    assert_eq!(String::from_utf8(csv.stdout).unwrap(), "degree,count\n1,2\n2,1\n");
}

#[test]
fn parse_errors_are_json_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let shared = write(dir.path(), "shared.csv", "npi_a,npi_b,shared_count\n1,2,3\n1,3,many\n");
    let providers = write(dir.path(), "providers.csv", "npi,state,specialty\n1,WY,x\n");
    let out = run(&[
        "ingest", "--shared", s(&shared), "--providers", s(&providers), "--state", "WY", "--out",
        s(&dir.path().join("g.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "parse");
    assert_eq!(err["error"]["line"], 3);
    assert!(!dir.path().join("g.json").exists());
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["stats", "--graph", "x.json", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "usage");

    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let out = run(&["simulate", "--mechanism", "er", "--n", "10", "--p", "0.1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "simulate needs --seed");

    let out = run(&["simulate", "--mechanism", "er", "--n", "10", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2), "er needs --p");
}

#[test]
fn help_lists_every_subcommand() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["ingest", "stats", "volume", "evidence", "select", "fit-prior", "simulate", "report"] {
        assert!(text.contains(sub), "{sub}");
    }
    let out = run(&["volume", "--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--graph", "--statistic", "--samples", "--seed", "--jobs", "--streams", "--out"] {
        assert!(text.contains(flag), "{flag}");
    }
}

#[test]
fn sampled_volume_needs_a_seed_and_ignores_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_graph(dir.path());
    let base = ["volume", "--graph", s(&graph), "--statistic", "degdist", "--exact-limit", "0", "--samples", "400"];
    let out = run(&base);
    assert_eq!(out.status.code(), Some(2));
    // Small graphs are counted exactly without a seed.
    let exact = ok_json(&["volume", "--graph", s(&graph), "--statistic", "degdist"]);
    assert_eq!(exact["result"]["method"], "Oracle");

    let with = |jobs: &str| {
        let mut args = base.to_vec();
        args.extend(["--seed", "5", "--jobs", jobs]);
        let mut v = ok_json(&args);
        v["manifest"]["timings"] = Value::Null;
        v
    };
    let one = with("1");
    assert_eq!(one, with("4"));
    assert_eq!(one["result"]["method"], "ImportanceSampling");
    let est = one["result"]["log_count"].as_f64().unwrap();
    let truth = exact["result"]["log_count"].as_f64().unwrap();
    let se = one["result"]["std_error_log"].as_f64().unwrap();
    assert!((est - truth).abs() < 4.0 * se + 1e-9, "{est} vs {truth} (se {se})");
}

#[test]
fn evidence_and_select() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_graph(dir.path());
    let priors = write(dir.path(), "priors.toml", PRIORS);
    let ev = ok_json(&["evidence", "--graph", s(&graph), "--model", "m2", "--prior", s(&priors)]);
    let r = &ev["result"];
    let ln = r["log_evidence"].as_f64().unwrap();
    assert!((r["log10_evidence"].as_f64().unwrap() - ln / std::f64::consts::LN_10).abs() < 1e-12);
    assert!((ln - (r["log_integral"].as_f64().unwrap() - r["log_volume"].as_f64().unwrap())).abs() < 1e-12);
    assert!(r["evidence_scientific"].as_str().unwrap().contains('e'));

    let sel = ok_json(&["select", "--graph", s(&graph), "--models", "m2,m3", "--priors", s(&priors)]);
    let rows = sel["result"]["models"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    let total: f64 = rows.iter().map(|r| r["posterior"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    for key in ["model", "log_evidence", "log10_evidence", "posterior"] {
        assert!(rows[0].get(key).is_some(), "{key}");
    }

    let all = ok_json(&["select", "--graph", s(&graph), "--models", "m1,m2,m3,m4,m5", "--priors", s(&priors)]);
    assert_eq!(all["result"]["models"].as_array().unwrap().len(), 5);

    let out = run(&["select", "--graph", s(&graph), "--models", "m2,m2", "--priors", s(&priors)]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["evidence", "--graph", s(&graph), "--model", "m2"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}

#[test]
fn identical_runs_are_byte_identical_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let graph = fixture_graph(dir.path());
    let priors = write(dir.path(), "priors.toml", PRIORS);
    let strip = |out: Output| -> Value {
        assert!(out.status.success());
        let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
        v["manifest"]["timings"] = Value::Null;
        v
    };
    let args = [
        "select", "--graph", s(&graph), "--models", "m3,m5", "--priors", s(&priors), "--exact-limit", "0", "--seed",
        "11", "--samples", "200", "--m5-mc-samples", "500",
    ];
    let a = strip(run(&args));
    let b = strip(run(&args));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let mut other = args.to_vec();
    other[10] = "12";
    let c = strip(run(&other));
    assert_ne!(a["manifest"]["config_digest"], c["manifest"]["config_digest"]);
}

#[test]
fn simulate_then_fit_prior_then_select() {
    let dir = tempfile::tempdir().unwrap();
    let er = dir.path().join("states");
    let out = run(&["simulate", "--mechanism", "er", "--n", "60", "--p", "0.1", "--reps", "4", "--seed", "3", "--out", s(&er), "--jobs", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: Value = serde_json::from_slice(&std::fs::read(er.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(manifest["result"]["replicas"].as_array().unwrap().len(), 4);
    assert_eq!(manifest["manifest"]["seed"], 3);

    let again = dir.path().join("again");
    assert!(run(&["simulate", "--mechanism", "er", "--n", "60", "--p", "0.1", "--reps", "4", "--seed", "3", "--out", s(&again)])
        .status
        .success());
    for r in 0..4 {
        let f = format!("rep_{r:04}.json");
        assert_eq!(std::fs::read(er.join(&f)).unwrap(), std::fs::read(again.join(&f)).unwrap());
    }
    std::fs::remove_file(er.join("simulate.json")).unwrap();

    let priors = dir.path().join("priors.toml");
    for model in ["m2", "m3"] {
        let out = run(&["fit-prior", "--graphs", s(&er), "--exclude", "rep_0000", "--model", model, "--out", s(&priors)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&priors).unwrap();
    assert!(text.contains("[m2]") && text.contains("[m3]"), "{text}");
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("priors.m2.report.json")).unwrap()).unwrap();
    assert_eq!(report["result"]["target_state"], "rep_0000");
    assert_eq!(report["result"]["per_state_summaries"].as_object().unwrap().len(), 3);

    let sel = ok_json(&[
        "select", "--graph", s(&er.join("rep_0000.json")), "--models", "m2,m3", "--priors", s(&priors), "--seed", "1",
        "--samples", "100",
    ]);
    assert_eq!(sel["result"]["best"], "m2");
}
