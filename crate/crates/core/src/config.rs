//! Experiment configuration files.
//!
//! One `key = value` pair per line; `#` starts a comment. Keys:
//!
//! | key | value | default |
//! |---|---|---|
//! | `arms` | number of arms `K` | required |
//! | `horizon` | rounds `T` | required |
//! | `trials` | independent trials | 1000 |
//! | `grid` | posterior grid size `n` | 1000 |
//! | `seed` | master seed | 0 |
//! | `policies` | comma-separated policy ids | all six |
//! | `feedback` | `graph`, `graph-sequence` or `erdos-renyi` | required |
//! | `graph` | adjacency file, relative to the config file | for `graph` |
//! | `edge_probability` | edge probability of each round's graph | for `graph-sequence` |
//! | `r` | a number, a comma-separated per-round list, or `uniform` | for `erdos-renyi` |
//! | `schedule_seed` | seed for generated graph or `r` sequences | `seed` |
//! | `prior` | `a b` for every arm, or `a b; a b; ...` per arm | `1 1` |
//! | `output` | output directory | `results` |
//! | `monitor` | `on` or `off` | `on` |
//! | `parallelism` | worker threads | available cores |
//!
//! `graph-sequence` draws an independent undirected G(K, p) graph for every
//! round; `r = uniform` draws every `r_t` uniformly from `[0, 1]`. Both are
//! generated once from `schedule_seed` and shared by all trials.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, FeedbackModel};
use crate::policy::PolicyId;
use crate::posterior::{BetaParams, DEFAULT_GRID};
use crate::sim::ExperimentSpec;

pub const DEFAULT_TRIALS: usize = 1000;

const KEYS: [&str; 15] = [
    "arms",
    "horizon",
    "trials",
    "grid",
    "seed",
    "policies",
    "feedback",
    "graph",
    "edge_probability",
    "r",
    "schedule_seed",
    "prior",
    "output",
    "monitor",
    "parallelism",
];

/// Rate schedule of Erdős–Rényi feedback.
#[derive(Debug, Clone, PartialEq)]
pub enum RateSpec {
    Constant(f64),
    PerRound(Vec<f64>),
    /// `r_t ~ U[0, 1]` independently per round.
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeedbackSpec {
    /// One fixed graph.
    Graph {
        path: PathBuf,
        graph: Adjacency,
    },
    /// A fresh G(K, p) graph per round, revealed before the decision.
    GraphSequence {
        edge_probability: f64,
    },
    ErdosRenyi(RateSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arms: usize,
    pub horizon: usize,
    pub trials: usize,
    pub grid_size: usize,
    pub seed: u64,
    pub policies: Vec<PolicyId>,
    pub feedback: FeedbackSpec,
    /// Defaults to `seed` when unset.
    pub schedule_seed: Option<u64>,
    pub prior: Vec<BetaParams>,
    pub output: PathBuf,
    pub monitor: bool,
    pub parallelism: usize,
}

impl ExperimentConfig {
    /// Builds the feedback model, generating any random schedule.
    pub fn feedback_model(&self) -> Result<FeedbackModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.schedule_seed.unwrap_or(self.seed));
        match &self.feedback {
            FeedbackSpec::Graph { graph, .. } => Ok(FeedbackModel::fixed_graph(graph.clone())),
            FeedbackSpec::GraphSequence { edge_probability } => {
                let graphs = (0..self.horizon)
                    .map(|_| Adjacency::sample_erdos_renyi(self.arms, *edge_probability, &mut rng))
                    .collect::<Result<Vec<_>>>()?;
                FeedbackModel::graph_sequence(graphs)
            }
            FeedbackSpec::ErdosRenyi(RateSpec::Constant(r)) => {
                FeedbackModel::erdos_renyi(self.arms, *r)
            }
            FeedbackSpec::ErdosRenyi(RateSpec::PerRound(r)) => {
                FeedbackModel::erdos_renyi_schedule(self.arms, r.clone())
            }
            FeedbackSpec::ErdosRenyi(RateSpec::Uniform) => {
                let r = (0..self.horizon).map(|_| rng.random::<f64>()).collect();
                FeedbackModel::erdos_renyi_schedule(self.arms, r)
            }
        }
    }

    pub fn experiment_spec(&self) -> Result<ExperimentSpec> {
        Ok(ExperimentSpec {
            policies: self.policies.clone(),
            model: self.feedback_model()?,
            prior: self.prior.clone(),
            horizon: self.horizon,
            trials: self.trials,
            grid_size: self.grid_size,
            master_seed: self.seed,
            parallelism: self.parallelism,
            monitor: self.monitor,
        })
    }
}

/// Reads and validates a configuration file.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, path)
}

/// Parses configuration text; `path` is used for error messages and to
/// resolve the graph file.
pub fn parse_config_str(text: &str, path: &Path) -> Result<ExperimentConfig> {
    let err = |line: usize, key: &str, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        key: key.to_string(),
        message,
    };

    let mut entries: HashMap<&str, (usize, &str)> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(line_no, line, "expected `key = value`".into()))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(err(line_no, key, "unknown key".into()));
        }
        if entries.insert(key, (line_no, value.trim())).is_some() {
            return Err(err(line_no, key, "key given twice".into()));
        }
    }

    let get = |key: &str| entries.get(key).copied();
    let required = |key: &str| get(key).ok_or_else(|| err(0, key, "missing required key".into()));
    fn number<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String>
    where
        T::Err: std::fmt::Display,
    {
        v.parse::<T>().map_err(|e| format!("`{v}`: {e}"))
    }
    let positive = |key: &str, default: Option<usize>| -> Result<usize> {
        match (get(key), default) {
            (Some((line, v)), _) => match number::<usize>(v) {
                Ok(0) => Err(err(line, key, "must be positive".into())),
                Ok(n) => Ok(n),
                Err(m) => Err(err(line, key, m)),
            },
            (None, Some(d)) => Ok(d),
            (None, None) => Err(err(0, key, "missing required key".into())),
        }
    };
    let probability = |line: usize, key: &str, v: &str| -> Result<f64> {
        let p = number::<f64>(v).map_err(|m| err(line, key, m))?;
        if (0.0..=1.0).contains(&p) {
            Ok(p)
        } else {
            Err(err(line, key, format!("{p} is outside [0, 1]")))
        }
    };
    let seed_value = |key: &str| -> Result<Option<u64>> {
        get(key)
            .map(|(line, v)| number::<u64>(v).map_err(|m| err(line, key, m)))
            .transpose()
    };

    let arms = positive("arms", None)?;
    if arms < 2 {
        return Err(err(
            required("arms")?.0,
            "arms",
            "need at least 2 arms".into(),
        ));
    }
    let horizon = positive("horizon", None)?;
    let trials = positive("trials", Some(DEFAULT_TRIALS))?;
    let grid_size = positive("grid", Some(DEFAULT_GRID))?;
    let seed = seed_value("seed")?.unwrap_or(0);
    let schedule_seed = seed_value("schedule_seed")?;
    let parallelism = positive(
        "parallelism",
        Some(std::thread::available_parallelism().map_or(1, |n| n.get())),
    )?;

    let policies = match get("policies") {
        Some((line, v)) => parse_policies(v).map_err(|e| err(line, "policies", e.to_string()))?,
        None => PolicyId::ALL.to_vec(),
    };

    let monitor = match get("monitor") {
        None => true,
        Some((_, "on" | "true" | "yes")) => true,
        Some((_, "off" | "false" | "no")) => false,
        Some((line, v)) => return Err(err(line, "monitor", format!("`{v}`: expected on or off"))),
    };

    let (feedback_line, kind) = required("feedback")?;
    let feedback = match kind {
        "graph" => {
            let (line, file) = required("graph")?;
            let base = path.parent().unwrap_or(Path::new("."));
            let graph_path = base.join(file);
            let graph = Adjacency::load(&graph_path)
                .map_err(|e| err(line, "graph", format!("{}: {e}", graph_path.display())))?;
            if graph.arms() != arms {
                return Err(err(
                    line,
                    "graph",
                    format!("graph has {} arms but arms = {arms}", graph.arms()),
                ));
            }
            FeedbackSpec::Graph {
                path: graph_path,
                graph,
            }
        }
        "graph-sequence" => {
            let (line, v) = required("edge_probability")?;
            FeedbackSpec::GraphSequence {
                edge_probability: probability(line, "edge_probability", v)?,
            }
        }
        "erdos-renyi" => {
            let (line, v) = required("r")?;
            let spec = if v == "uniform" {
                RateSpec::Uniform
            } else if v.contains(',') {
                let rates = v
                    .split(',')
                    .map(|s| probability(line, "r", s.trim()))
                    .collect::<Result<Vec<_>>>()?;
                if rates.len() < horizon {
                    return Err(err(
                        line,
                        "r",
                        format!("{} rates listed but horizon is {horizon}", rates.len()),
                    ));
                }
                RateSpec::PerRound(rates)
            } else {
                RateSpec::Constant(probability(line, "r", v)?)
            };
            FeedbackSpec::ErdosRenyi(spec)
        }
        other => {
            return Err(err(
                feedback_line,
                "feedback",
                format!("`{other}`: expected graph, graph-sequence or erdos-renyi"),
            ))
        }
    };

    let prior = match get("prior") {
        None => vec![BetaParams::uniform(); arms],
        Some((line, v)) => parse_prior(v, arms).map_err(|m| err(line, "prior", m))?,
    };

    let output = get("output").map_or_else(|| PathBuf::from("results"), |(_, v)| PathBuf::from(v));

    Ok(ExperimentConfig {
        arms,
        horizon,
        trials,
        grid_size,
        seed,
        policies,
        feedback,
        schedule_seed,
        prior,
        output,
        monitor,
        parallelism,
    })
}

/// Parses a comma-separated list of policy ids.
pub fn parse_policies(v: &str) -> Result<Vec<PolicyId>> {
    let list = v
        .split(',')
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<PolicyId>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty policy list".into()));
    }
    Ok(list)
}

fn parse_prior(v: &str, arms: usize) -> std::result::Result<Vec<BetaParams>, String> {
    let pairs: Vec<&str> = v
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    let parse_pair = |s: &str| -> std::result::Result<BetaParams, String> {
        let nums: Vec<f64> = s
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        match nums[..] {
            [a, b] => BetaParams::new(a, b).map_err(|e| e.to_string()),
            _ => Err(format!("`{s}`: expected two numbers `a b`")),
        }
    };
    match pairs.len() {
        1 => Ok(vec![parse_pair(pairs[0])?; arms]),
        n if n == arms => pairs.into_iter().map(parse_pair).collect(),
        n => Err(format!("{n} Beta pairs given for {arms} arms")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        parse_config_str(text, Path::new("test.cfg"))
    }

    #[test]
    fn defaults() {
        let c = parse("arms = 3\nhorizon = 10\nfeedback = erdos-renyi\nr = 0.5\n").unwrap();
        assert_eq!(c.grid_size, 1000);
        assert_eq!(c.trials, 1000);
        assert!(c.monitor);
        assert_eq!(c.seed, 0);
        assert_eq!(c.policies, PolicyId::ALL.to_vec());
        assert_eq!(c.prior, vec![BetaParams::uniform(); 3]);
        assert_eq!(
            c.feedback,
            FeedbackSpec::ErdosRenyi(RateSpec::Constant(0.5))
        );
    }

    #[test]
    fn comments_and_lists() {
        let c = parse(
            "# header\narms = 2  # two arms\nhorizon = 3\nfeedback = erdos-renyi\nr = 0.1, 0.2, 0.3\n\
             policies = ts-n, ucb-n\nprior = 1 2; 3 4\nmonitor = off\n",
        )
        .unwrap();
        assert_eq!(
            c.feedback,
            FeedbackSpec::ErdosRenyi(RateSpec::PerRound(vec![0.1, 0.2, 0.3]))
        );
        assert_eq!(c.policies, vec![PolicyId::TsN, PolicyId::UcbN]);
        assert_eq!(c.prior[1], BetaParams::new(3.0, 4.0).unwrap());
        assert!(!c.monitor);
    }

    fn parse_error(text: &str) -> (usize, String) {
        match parse(text) {
            Err(Error::Parse { line, key, .. }) => (line, key),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errors_name_key_and_line() {
        let base = "arms = 3\nhorizon = 10\nfeedback = erdos-renyi\n";
        assert_eq!(
            parse_error(&format!("{base}r = 0.5\ncolour = red\n")),
            (5, "colour".into())
        );
        assert_eq!(parse_error(&format!("{base}r = 1.5\n")), (4, "r".into()));
        assert_eq!(
            parse_error(&format!("{base}r = 0.5\ntrials = 0\n")),
            (5, "trials".into())
        );
        assert_eq!(
            parse_error(&format!("{base}r = 0.5\npolicies = ts-n, foo\n")),
            (5, "policies".into())
        );
        assert_eq!(
            parse_error(&format!("{base}r = 0.1, 0.2\n")),
            (4, "r".into())
        );
        assert_eq!(parse_error(base), (0, "r".into()));
        assert_eq!(
            parse_error("arms = 3\nhorizon = 10\nfeedback = graph\ngraph = missing.graph\n"),
            (4, "graph".into())
        );
    }

    #[test]
    fn generated_schedules_are_seeded() {
        let c = parse("arms = 4\nhorizon = 20\nfeedback = erdos-renyi\nr = uniform\nseed = 3\n")
            .unwrap();
        let a = c.feedback_model().unwrap();
        assert_eq!(a, c.feedback_model().unwrap());
        assert!(a.covers(20) && !a.covers(21));
        let c =
            parse("arms = 4\nhorizon = 20\nfeedback = graph-sequence\nedge_probability = 0.25\n")
                .unwrap();
        let m = c.feedback_model().unwrap();
        assert!(m.is_deterministic() && m.covers(20));
    }
}
