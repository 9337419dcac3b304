//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::fs;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ids_graph::config::{ExperimentConfig, FeedbackSpec, RateSpec};
use ids_graph::graph::{Adjacency, FeedbackModel};
use ids_graph::oracle::{
    brute_force_lp, brute_force_p1, check_superadditivity, joint_information_gain,
    monte_carlo_alpha,
};
use ids_graph::policy::PolicyId;
use ids_graph::posterior::{BetaParams, PosteriorState};
use ids_graph::report;
use ids_graph::sim::{
    expected_regret_bound, run_experiment, run_trial, ExperimentResult, ExperimentSpec, TrialSpec,
};
use ids_graph::solvers::{solve_constrained_lp, solve_p1, RatioProblem};

const K: usize = 5;
const T: usize = 1000;
const TRIALS: usize = 500;
const POLICIES: [PolicyId; 5] = [
    PolicyId::TsN,
    PolicyId::IdsN,
    PolicyId::IdsnLp,
    PolicyId::IdsLp,
    PolicyId::UcbN,
];

struct Outcome {
    passed: usize,
    failed: Vec<String>,
}

impl Outcome {
    fn record(&mut self, id: usize, title: &str, pass: bool, detail: String) {
        println!(
            "[{}] criterion {id}: {title} :: {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(format!("{id}"));
        }
    }
}

fn experiment(model: FeedbackModel) -> ExperimentResult {
    let spec = ExperimentSpec {
        policies: POLICIES.to_vec(),
        model,
        prior: vec![BetaParams::uniform(); K],
        horizon: T,
        trials: TRIALS,
        grid_size: 1000,
        master_seed: 20_240_611,
        parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        monitor: true,
    };
    run_experiment(&spec).expect("experiment runs")
}

fn bound_check(
    result: &ExperimentResult,
    model: &FeedbackModel,
    policies: &[PolicyId],
    expected: f64,
) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &p in policies {
        let r = result.get(p).unwrap();
        let bound = expected_regret_bound(p, model, T, K, result.prior_entropy).unwrap();
        ok &= (bound - expected).abs() < 0.01;
        let pass = r.final_mean() <= bound + 3.0 * r.final_stderr();
        ok &= pass;
        parts.push(format!(
            "{p} {:.2}±{:.2} vs {bound:.2}",
            r.final_mean(),
            r.final_stderr()
        ));
    }
    (ok, parts.join(", "))
}

/// Mean and paired standard error of `worse - better` at the horizon.
fn paired_gap(result: &ExperimentResult, better: PolicyId, worse: PolicyId) -> (f64, f64) {
    let a = &result.get(better).unwrap().curves;
    let b = &result.get(worse).unwrap().curves;
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| y.total() - x.total())
        .collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn ordering_check(result: &ExperimentResult) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    let pairs = [
        (PolicyId::IdsN, PolicyId::TsN),
        (PolicyId::IdsnLp, PolicyId::TsN),
        (PolicyId::IdsLp, PolicyId::TsN),
        (PolicyId::TsN, PolicyId::UcbN),
    ];
    for (better, worse) in pairs {
        let (gap, se) = paired_gap(result, better, worse);
        ok &= gap > 2.0 * se;
        parts.push(format!("{worse}-{better} {gap:.2} (se {se:.2})"));
    }
    (ok, parts.join(", "))
}

fn criterion_6(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut all_super = true;
    let mut worst_singleton: f64 = 0.0;
    let graphs = [
        Adjacency::complete(3),
        Adjacency::star(3, 0),
        Adjacency::star(3, 1),
    ];
    for _ in 0..20 {
        let prior: Vec<BetaParams> = (0..3)
            .map(|_| {
                BetaParams::new(rng.random_range(1.0..=10.0), rng.random_range(1.0..=10.0)).unwrap()
            })
            .collect();
        let state = PosteriorState::new(&prior, 1000).unwrap();
        let h = state.compute_statistics().unwrap().h;
        for g in &graphs {
            for i in 0..3 {
                let row: Vec<bool> = (0..3).map(|j| g.has_edge(i, j)).collect();
                all_super &= check_superadditivity(&state, i, &row).unwrap();
            }
        }
        for (a, h_a) in h.iter().enumerate() {
            let single = joint_information_gain(&state, &[a], 60).unwrap();
            worst_singleton = worst_singleton.max((single - h_a).abs());
        }
    }
    out.record(
        6,
        "graph information superadditivity oracle",
        all_super && worst_singleton <= 2e-3,
        format!("superadditive in all cases: {all_super}, max |g({{a}}) - h(a)| = {worst_singleton:.2e}"),
    );
}

fn criterion_7(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut p1_err: f64 = 0.0;
    let mut lp_err: f64 = 0.0;
    let mut max_support = 0;
    for _ in 0..1000 {
        let k = rng.random_range(2..=5);
        let delta: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let info: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..1.0)).collect();
        let problem = RatioProblem::new(delta.clone(), info.clone()).unwrap();
        let (dist, obj) = solve_p1(&problem).unwrap();
        max_support = max_support.max(dist.support().len());
        p1_err = p1_err.max((brute_force_p1(&problem, 1_000_000) - obj).abs());

        let k = rng.random_range(2..=8);
        let delta: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let info: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let max = info.iter().copied().fold(0.0, f64::max);
        let level = rng.random::<f64>() * max;
        let (dist, obj) = solve_constrained_lp(&delta, &info, level).unwrap();
        max_support = max_support.max(dist.support().len());
        lp_err = lp_err.max((brute_force_lp(&delta, &info, level).unwrap() - obj).abs());
    }
    out.record(
        7,
        "solver and brute-force agreement",
        p1_err <= 1e-6 && lp_err <= 1e-7 && max_support <= 2,
        format!("ratio max err {p1_err:.2e}, LP max err {lp_err:.2e}, max support {max_support}"),
    );
}

fn criterion_8(out: &mut Outcome) {
    let two = PosteriorState::with_common_prior(2, BetaParams::uniform(), 1000).unwrap();
    let s = two.compute_statistics().unwrap();
    let rho_ok = (s.rho_star - 2.0 / 3.0).abs() <= 2e-3;
    let alpha_ok = s.alpha.iter().all(|a| (a - 0.5).abs() <= 1e-6);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mc_ok = true;
    let mut worst_z: f64 = 0.0;
    let cases = [
        vec![BetaParams::uniform(); 2],
        vec![
            BetaParams::new(3.0, 2.0).unwrap(),
            BetaParams::new(2.0, 2.0).unwrap(),
            BetaParams::new(6.0, 5.0).unwrap(),
        ],
        vec![
            BetaParams::new(10.0, 4.0).unwrap(),
            BetaParams::new(7.0, 3.0).unwrap(),
            BetaParams::new(1.0, 1.0).unwrap(),
            BetaParams::new(20.0, 9.0).unwrap(),
            BetaParams::new(2.0, 5.0).unwrap(),
        ],
    ];
    for prior in &cases {
        let alpha = PosteriorState::new(prior, 1000)
            .unwrap()
            .compute_statistics()
            .unwrap()
            .alpha;
        let (freq, se) = monte_carlo_alpha(prior, 1_000_000, &mut rng).unwrap();
        for a in 0..prior.len() {
            let z = if se[a] > 0.0 {
                (alpha[a] - freq[a]).abs() / se[a]
            } else {
                0.0
            };
            worst_z = worst_z.max(z);
            mc_ok &= z <= 3.0;
        }
    }
    out.record(
        8,
        "posterior statistics",
        rho_ok && alpha_ok && mc_ok,
        format!(
            "rho* = {:.5}, alpha = ({:.9}, {:.9}), worst Monte Carlo |z| = {worst_z:.2}",
            s.rho_star, s.alpha[0], s.alpha[1]
        ),
    );
}

fn criterion_9(out: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let graph = Adjacency::two_clique_bowtie();
    let base = ExperimentConfig {
        arms: K,
        horizon: 200,
        trials: 24,
        grid_size: 1000,
        seed: 99,
        policies: PolicyId::ALL.to_vec(),
        feedback: FeedbackSpec::Graph {
            path: "two_clique.graph".into(),
            graph,
        },
        schedule_seed: None,
        prior: vec![BetaParams::uniform(); K],
        output: dir.path().join("unused"),
        monitor: true,
        parallelism: 1,
    };
    let run = |name: &str, parallelism: usize, feedback: FeedbackSpec| {
        let cfg = ExperimentConfig {
            output: dir.path().join(name),
            parallelism,
            feedback,
            ..base.clone()
        };
        report::run(&cfg).unwrap();
        fs::read(cfg.output.join("curves.csv")).unwrap()
    };
    let a = run("a", 1, base.feedback.clone());
    let b = run("b", 1, base.feedback.clone());
    let c = run("c", 8, base.feedback.clone());
    let er = FeedbackSpec::ErdosRenyi(RateSpec::Uniform);
    let d = run("d", 1, er.clone());
    let e = run("e", 8, er);
    out.record(
        9,
        "determinism of curves.csv",
        a == b && a == c && d == e,
        format!(
            "rerun identical: {}, parallelism 1 vs 8 identical: {} (graph) {} (random graph), {} bytes",
            a == b,
            a == c,
            d == e,
            a.len()
        ),
    );
}

fn criterion_10(out: &mut Outcome) {
    let model = FeedbackModel::fixed_graph(Adjacency::two_clique_bowtie());
    let prior = vec![BetaParams::uniform(); K];
    let spec = TrialSpec {
        policy: PolicyId::IdsN,
        model: &model,
        prior: &prior,
        horizon: T,
        grid_size: 1000,
        monitor: true,
    };
    let start = Instant::now();
    run_trial(&spec, 10).unwrap();
    let trial_secs = start.elapsed().as_secs_f64();

    let mut points = Vec::new();
    for k in [2usize, 4, 8, 16] {
        let mut state = PosteriorState::with_common_prior(k, BetaParams::uniform(), 1000).unwrap();
        for i in 0..20 * k {
            state.update(&[(i % k, u8::from(i % 3 == 0))]).unwrap();
        }
        let reps = 4000 / k;
        let start = Instant::now();
        let mut sink = 0.0;
        for _ in 0..reps {
            sink += state.compute_statistics().unwrap().rho_star;
        }
        assert!(sink.is_finite());
        points.push((
            (k as f64).ln(),
            (start.elapsed().as_secs_f64() / reps as f64).ln(),
        ));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let per_call: Vec<String> = points
        .iter()
        .map(|p| format!("{:.0}us", p.1.exp() * 1e6))
        .collect();
    out.record(
        10,
        "performance envelope",
        trial_secs < 60.0 && slope <= 2.3,
        format!(
            "single trial {trial_secs:.2}s, statistics cost at K=2,4,8,16: {} (log-log slope {slope:.2})",
            per_call.join(", ")
        ),
    );
}

fn main() {
    let started = Instant::now();
    let mut out = Outcome {
        passed: 0,
        failed: Vec::new(),
    };
    println!("acceptance suite: K={K}, T={T}, {TRIALS} trials per policy and setting");

    // Fast criteria first.
    criterion_6(&mut out);
    criterion_7(&mut out);
    criterion_8(&mut out);
    criterion_9(&mut out);
    criterion_10(&mut out);

    let graph_model = FeedbackModel::fixed_graph(Adjacency::two_clique_bowtie());
    let graph_run = experiment(graph_model.clone());
    let er_model = FeedbackModel::erdos_renyi(K, 0.25).unwrap();
    let er_run = experiment(er_model.clone());

    let graph_bayes = [PolicyId::TsN, PolicyId::IdsN, PolicyId::IdsnLp];
    let (ok, detail) = bound_check(&graph_run, &graph_model, &graph_bayes, 40.12);
    out.record(
        1,
        "two-clique graph regret within the clique-cover bound",
        ok,
        detail,
    );
    let (ok, detail) = bound_check(&graph_run, &graph_model, &[PolicyId::IdsLp], 63.43);
    out.record(2, "IDS-LP regret within the K/2 bound", ok, detail);
    let (ok, detail) = bound_check(&er_run, &er_model, &graph_bayes, 44.85);
    out.record(3, "random graph r=0.25 regret within the bound", ok, detail);

    let (ok_g, detail_g) = ordering_check(&graph_run);
    let (ok_e, detail_e) = ordering_check(&er_run);
    out.record(
        4,
        "policy ordering IDS <= TS-N <= UCB-N",
        ok_g && ok_e,
        format!("graph: {detail_g}; random graph: {detail_e}"),
    );

    let count = |r: &ExperimentResult, f: &dyn Fn(&ids_graph::sim::RoundSummary) -> bool| {
        r.results
            .iter()
            .filter(|p| p.policy.is_bayesian())
            .flat_map(|p| &p.monitor)
            .filter(|s| f(s))
            .count()
    };
    let graph_violations = graph_run.total_violations();
    let er_violations = er_run.total_violations();
    let rounds_checked = count(&graph_run, &|_| true) + count(&er_run, &|_| true);
    out.record(
        5,
        "per-round invariants",
        graph_violations == 0 && er_violations == 0,
        format!(
            "violations: {graph_violations} (graph), {er_violations} (random graph); {TRIALS} trials behind each of {rounds_checked} (policy, round) summaries"
        ),
    );

    println!(
        "{} of 10 criteria passed in {:.0}s",
        out.passed,
        started.elapsed().as_secs_f64()
    );
    if !out.failed.is_empty() {
        println!("failed: {}", out.failed.join(", "));
        std::process::exit(1);
    }
}
