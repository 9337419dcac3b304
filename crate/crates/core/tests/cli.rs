//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_ids-graph");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/configs"))
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    fs::write(dir.join("test.graph"), "3\n1 1 0\n1 1 1\n0 1 1\n").unwrap();
    let path = dir.join("test.cfg");
    fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

#[test]
fn bundled_configs_parse() {
    let a = ids_graph::config::parse_config(configs().join("appendix_b.cfg")).unwrap();
    assert_eq!(
        (a.arms, a.horizon, a.trials, a.grid_size),
        (5, 1000, 1000, 1000)
    );
    let g = ids_graph::graph::Adjacency::two_clique_bowtie();
    assert!(
        matches!(&a.feedback, ids_graph::config::FeedbackSpec::Graph { graph, .. } if *graph == g)
    );
    let e = ids_graph::config::parse_config(configs().join("er_025.cfg")).unwrap();
    assert_eq!(
        e.feedback,
        ids_graph::config::FeedbackSpec::ErdosRenyi(ids_graph::config::RateSpec::Constant(0.25))
    );
    for name in ["graph_sequence.cfg", "er_uniform.cfg"] {
        let c = ids_graph::config::parse_config(configs().join(name)).unwrap();
        assert!(c.feedback_model().unwrap().covers(c.horizon));
    }
}

#[test]
fn smoke_run_writes_four_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("appendix_b.cfg");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["curves.csv", "aggregate.csv", "bounds.csv", "monitor.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn flags_override_and_outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "arms = 3\nhorizon = 30\ntrials = 50\ngrid = 200\nfeedback = graph\ngraph = test.graph\n",
    );
    let out = dir.path().join("a");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--trials",
        "5",
        "--out",
        out.to_str().unwrap(),
        "--policies",
        "ts-n,ucb-maxn",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let bounds = fs::read_to_string(out.join("bounds.csv")).unwrap();
    let lines: Vec<&str> = bounds.lines().collect();
    assert_eq!(lines[0], "policy,theoretical_bound");
    assert!(lines[1].starts_with("ts-n,") && lines[1].len() > 5);
    assert_eq!(lines[2], "ucb-maxn,");

    // recompute aggregate means from the curves
    let mut curves = csv::Reader::from_path(out.join("curves.csv")).unwrap();
    let mut sums = std::collections::BTreeMap::<(String, usize), (f64, usize)>::new();
    let mut trials = std::collections::BTreeSet::new();
    for rec in curves.records() {
        let rec = rec.unwrap();
        trials.insert((rec[0].to_string(), rec[1].to_string()));
        let e = sums
            .entry((rec[0].to_string(), rec[2].parse().unwrap()))
            .or_default();
        e.0 += rec[4].parse::<f64>().unwrap();
        e.1 += 1;
    }
    assert_eq!(trials.len(), 10);
    let mut agg = csv::Reader::from_path(out.join("aggregate.csv")).unwrap();
    let mut rows = 0;
    for rec in agg.records() {
        let rec = rec.unwrap();
        let (sum, n) = sums[&(rec[0].to_string(), rec[1].parse().unwrap())];
        assert_eq!(n, 5);
        assert!((sum / n as f64 - rec[2].parse::<f64>().unwrap()).abs() < 1e-12);
        rows += 1;
    }
    assert_eq!(rows, 60);

    let again = dir.path().join("b");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "4",
        "--trials",
        "5",
        "--out",
        again.to_str().unwrap(),
        "--policies",
        "ts-n,ucb-maxn",
    ]);
    assert!(o.status.success());
    assert_eq!(
        fs::read(out.join("curves.csv")).unwrap(),
        fs::read(again.join("curves.csv")).unwrap()
    );
}

#[test]
fn monitor_off_skips_monitor_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "arms = 3\nhorizon = 10\ntrials = 2\ngrid = 100\nfeedback = erdos-renyi\nr = 0.5\nmonitor = off\n",
    );
    let out = dir.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(out.join("aggregate.csv").exists());
    assert!(!out.join("monitor.csv").exists());
}

#[test]
fn bad_input_fails_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "arms = 3\nhorizon = 10\nfeedback = graph\ngraph = nope.graph\n",
    );
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("test.cfg:4") && err.contains("`graph`"),
        "{err}"
    );

    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--policies",
        "ts-n,bogus",
    ]);
    assert_eq!(o.status.code(), Some(1));
}
