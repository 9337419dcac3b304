//! The simulation loop, Bayesian regret aggregation, the per-round
//! invariant monitor and the theoretical regret bounds.
//!
//! Each trial draws an environment from the prior and runs, for
//! `t = 1..=T`: statistics → policy → sample `A_t` → reveal outcomes of the
//! observed arms → posterior update. Regret is accounted as the expected
//! instantaneous regret `max θ - θ[A_t]`.
//!
//! # Random streams
//!
//! A trial seed drives four independent ChaCha8 streams (same key,
//! different stream ids): environment draw, policy sampling, feedback
//! realization, and rewards. Rewards are drawn for every arm every round,
//! so two policies run on the same trial seed face the same environment
//! and the same outcome sequence.
//!
//! Trial `i` of an experiment uses seed `splitmix64(master ^ i)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{greedy_clique_cover, FeedbackModel, Schedule};
use crate::policy::{decide, EmpiricalCounts, PolicyContext, PolicyId};
use crate::posterior::{dot, BanditStatistics, BetaParams, PosteriorState};
use crate::solvers::information_ratio;

/// Absolute slack on every monitored inequality.
pub const MONITOR_TOLERANCE: f64 = 1e-6;

/// Squared regrets at or below this are treated as zero when forming
/// ratios: at `|πᵀΔ| <= 1e-9` both numerator and denominator are rounding
/// noise.
pub const NEGLIGIBLE_REGRET_SQ: f64 = 1e-18;

const STREAM_ENV: u64 = 0;
const STREAM_POLICY: u64 = 1;
const STREAM_FEEDBACK: u64 = 2;
const STREAM_REWARD: u64 = 3;

/// Trials run per parallel batch; bounds the memory held by monitor logs.
const BATCH: usize = 64;

/// SplitMix64 finaliser.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master`.
pub fn trial_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ index as u64)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// True Bernoulli means of one bandit instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub theta: Vec<f64>,
    pub best_arm: usize,
    pub best_mean: f64,
}

impl Environment {
    pub fn from_means(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() || theta.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(Error::InvalidArgument(format!(
                "arm means must lie in [0, 1]: {theta:?}"
            )));
        }
        let best_arm = crate::posterior::argmax(&theta);
        Ok(Environment {
            best_mean: theta[best_arm],
            best_arm,
            theta,
        })
    }

    /// Draws every arm mean independently from its Beta prior.
    pub fn sample<R: Rng + ?Sized>(prior: &[BetaParams], rng: &mut R) -> Result<Self> {
        let theta = prior
            .iter()
            .map(|p| {
                Beta::new(p.a, p.b)
                    .map(|d| d.sample(rng))
                    .map_err(|e| Error::InvalidArgument(format!("Beta({}, {}): {e}", p.a, p.b)))
            })
            .collect::<Result<Vec<_>>>()?;
        Environment::from_means(theta)
    }
}

/// One trial's regret trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretCurve {
    pub policy: PolicyId,
    pub trial_seed: u64,
    /// `best_mean - θ[A_t]` for `t = 1..=T`.
    pub instant: Vec<f64>,
}

impl RegretCurve {
    /// Cumulative regret for `t = 0..=T`; entry 0 is 0.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.instant.len() + 1);
        let mut acc = 0.0;
        out.push(acc);
        for r in &self.instant {
            acc += r;
            out.push(acc);
        }
        out
    }

    pub fn total(&self) -> f64 {
        self.instant.iter().sum()
    }
}

/// Which monitored inequalities failed in a round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Violations {
    /// `(Δᵀα)² <= (K/2) hᵀα`
    pub bandit_information: bool,
    /// `(Δᵀα)² <= ½ hᵀ1`
    pub full_information: bool,
    /// the policy's ratio exceeds `ψ_t` (TS-N, IDS-N, IDSN-LP) or `K/2`
    /// (IDS-LP)
    pub policy_ratio: bool,
    /// `ψ_t` exceeds the graph bound (`|C_t|/2` or `K / (2(K r_t + 1 - r_t))`)
    pub graph_bound: bool,
}

impl Violations {
    pub fn any(&self) -> bool {
        self.bandit_information || self.full_information || self.policy_ratio || self.graph_bound
    }
}

/// One round of monitor output.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRecord {
    pub round: usize,
    /// `(Δᵀα)² / ((G h)ᵀα)`.
    pub psi: f64,
    /// `(πᵀΔ)² / (πᵀ G h)`, or `(πᵀΔ)² / (αᵀh)` for IDS-LP.
    pub policy_ratio: f64,
    /// The bound `policy_ratio` is held to; `None` for the UCB baselines.
    pub bound: Option<f64>,
    /// Per-round bound on `ψ_t` from the graph.
    pub graph_bound: f64,
    pub violations: Violations,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonitorLog {
    pub records: Vec<MonitorRecord>,
}

impl MonitorLog {
    pub fn violation_count(&self) -> usize {
        self.records.iter().filter(|r| r.violations.any()).count()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0
    }
}

/// `regret² / info`, with negligible regrets mapped to zero.
pub fn monitored_ratio(regret: f64, info: f64) -> f64 {
    if regret * regret <= NEGLIGIBLE_REGRET_SQ {
        0.0
    } else {
        information_ratio(regret, info)
    }
}

/// Checks every monitored inequality for one round.
pub fn monitor_round(
    round: usize,
    policy: PolicyId,
    stats: &BanditStatistics,
    ctx: &PolicyContext<'_>,
    pi: &[f64],
    graph_bound: f64,
) -> MonitorRecord {
    let k = stats.arms() as f64;
    let tol = MONITOR_TOLERANCE;
    let info = ctx.graph_information();
    let gap = stats.expected_regret();
    let psi = monitored_ratio(gap, dot(&stats.alpha, &info));
    let policy_regret = dot(pi, &stats.delta);

    let (policy_ratio, bound) = match policy {
        PolicyId::IdsLp => (
            monitored_ratio(policy_regret, dot(&stats.alpha, &stats.h)),
            Some(k / 2.0),
        ),
        PolicyId::TsN | PolicyId::IdsN | PolicyId::IdsnLp => (
            monitored_ratio(policy_regret, dot(pi, &info)),
            Some(graph_bound),
        ),
        PolicyId::UcbN | PolicyId::UcbMaxN => {
            (monitored_ratio(policy_regret, dot(pi, &info)), None)
        }
    };
    let policy_violation = match policy {
        PolicyId::IdsLp => policy_ratio > k / 2.0 + tol,
        PolicyId::TsN | PolicyId::IdsN | PolicyId::IdsnLp => policy_ratio > psi + tol,
        PolicyId::UcbN | PolicyId::UcbMaxN => false,
    };

    let gap_sq = gap * gap;
    MonitorRecord {
        round,
        psi,
        policy_ratio,
        bound,
        graph_bound,
        violations: Violations {
            bandit_information: gap_sq > k / 2.0 * dot(&stats.h, &stats.alpha) + tol,
            full_information: gap_sq > 0.5 * stats.h.iter().sum::<f64>() + tol,
            policy_ratio: policy_violation,
            graph_bound: psi > graph_bound + tol,
        },
    }
}

/// Per-round bound on `ψ_t` implied by the feedback model.
pub fn graph_ratio_bound(model: &FeedbackModel, round: usize) -> Result<f64> {
    let k = model.arms() as f64;
    match model {
        FeedbackModel::Deterministic(s) => Ok(greedy_clique_cover(s.at(round)?).len() as f64 / 2.0),
        FeedbackModel::ErdosRenyi { r, .. } => {
            let r = *r.at(round)?;
            Ok(k / (2.0 * (k * r + 1.0 - r)))
        }
    }
}

/// Bayesian regret bound for `policy` over `horizon` rounds, given the
/// prior entropy `H(α_1)` in nats.
///
/// IDS-LP: `sqrt(K/2 · T · H)`. TS-N, IDS-N, IDSN-LP: `sqrt(Σ_t b_t · H)`
/// with `b_t = |C_t|/2` for the greedy clique cover of the round's graph,
/// or `b_t = K / (2(K r_t + 1 - r_t))` under Erdős–Rényi feedback.
pub fn expected_regret_bound(
    policy: PolicyId,
    model: &FeedbackModel,
    horizon: usize,
    arms: usize,
    prior_entropy: f64,
) -> Result<f64> {
    match policy {
        PolicyId::IdsLp => Ok((arms as f64 / 2.0 * horizon as f64 * prior_entropy).sqrt()),
        PolicyId::TsN | PolicyId::IdsN | PolicyId::IdsnLp => {
            let per_round_sum = match model {
                FeedbackModel::Deterministic(Schedule::Constant(_))
                | FeedbackModel::ErdosRenyi {
                    r: Schedule::Constant(_),
                    ..
                } => graph_ratio_bound(model, 1)? * horizon as f64,
                _ => (1..=horizon)
                    .map(|t| graph_ratio_bound(model, t))
                    .sum::<Result<f64>>()?,
            };
            Ok((per_round_sum * prior_entropy).sqrt())
        }
        PolicyId::UcbN | PolicyId::UcbMaxN => Err(Error::NoBound(policy)),
    }
}

/// Parameters of a single trial.
#[derive(Debug, Clone)]
pub struct TrialSpec<'a> {
    pub policy: PolicyId,
    pub model: &'a FeedbackModel,
    pub prior: &'a [BetaParams],
    pub horizon: usize,
    pub grid_size: usize,
    pub monitor: bool,
}

impl TrialSpec<'_> {
    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidArgument("horizon must be at least 1".into()));
        }
        if self.prior.len() != self.model.arms() {
            return Err(Error::InvalidArgument(format!(
                "prior has {} arms but the feedback model has {}",
                self.prior.len(),
                self.model.arms()
            )));
        }
        if !self.model.covers(self.horizon) {
            // report the first missing round
            self.model.effective_matrix(self.horizon)?;
        }
        Ok(())
    }
}

/// Result of one trial.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub curve: RegretCurve,
    /// Empty when monitoring is off.
    pub monitor: MonitorLog,
    /// Observation counts at the end of the trial.
    pub counts: EmpiricalCounts,
    pub environment: Environment,
}

/// Runs one trial with the environment drawn from the prior.
pub fn run_trial(spec: &TrialSpec<'_>, seed: u64) -> Result<TrialOutcome> {
    spec.validate()?;
    let env = Environment::sample(spec.prior, &mut stream(seed, STREAM_ENV))?;
    run_trial_in(spec, env, seed)
}

/// Runs one trial against a given environment.
pub fn run_trial_in(spec: &TrialSpec<'_>, env: Environment, seed: u64) -> Result<TrialOutcome> {
    spec.validate()?;
    let k = spec.prior.len();
    if env.theta.len() != k {
        return Err(Error::InvalidArgument(
            "environment size does not match prior".into(),
        ));
    }
    let mut policy_rng = stream(seed, STREAM_POLICY);
    let mut feedback_rng = stream(seed, STREAM_FEEDBACK);
    let mut reward_rng = stream(seed, STREAM_REWARD);

    let mut state = PosteriorState::new(spec.prior, spec.grid_size)?;
    // UCB baselines never read the statistics; unless monitoring, they run
    // on the prior statistics and skip posterior tracking.
    let track_posterior = spec.policy.is_bayesian() || spec.monitor;
    let prior_stats = state.compute_statistics()?;
    let fixed_bound = match spec.model {
        FeedbackModel::Deterministic(Schedule::Constant(_))
        | FeedbackModel::ErdosRenyi {
            r: Schedule::Constant(_),
            ..
        } => Some(graph_ratio_bound(spec.model, 1)?),
        _ => None,
    };

    let mut empirical = EmpiricalCounts::new(k);
    let mut instant = Vec::with_capacity(spec.horizon);
    let mut monitor = MonitorLog::default();
    let mut outcomes = vec![0u8; k];
    let mut pairs = Vec::with_capacity(k);

    for t in 1..=spec.horizon {
        let at_round = |e: Error| Error::AtRound {
            round: t,
            source: Box::new(e),
        };
        let fresh;
        let stats = if track_posterior && t > 1 {
            fresh = state.compute_statistics().map_err(at_round)?;
            &fresh
        } else {
            &prior_stats
        };
        let feedback = spec.model.effective_matrix(t).map_err(at_round)?;
        let ctx = PolicyContext {
            stats,
            feedback: &feedback,
            graph: spec.model.graph_at(t).map_err(at_round)?,
            round: t,
            empirical: &empirical,
        };
        let pi = decide(spec.policy, &ctx);
        if spec.monitor {
            let bound = match fixed_bound {
                Some(b) => b,
                None => graph_ratio_bound(spec.model, t).map_err(at_round)?,
            };
            monitor.records.push(monitor_round(
                t,
                spec.policy,
                stats,
                &ctx,
                pi.weights(),
                bound,
            ));
        }

        let arm = pi.sample_with(policy_rng.random::<f64>());
        for (a, y) in outcomes.iter_mut().enumerate() {
            *y = u8::from(reward_rng.random::<f64>() < env.theta[a]);
        }
        let obs = spec
            .model
            .realize_observations(t, arm, &mut feedback_rng)
            .map_err(at_round)?;
        pairs.clear();
        pairs.extend(obs.observed.iter().map(|&a| (a, outcomes[a])));
        if track_posterior {
            state.update(&pairs).map_err(at_round)?;
        }
        empirical.record(&pairs);
        instant.push(env.best_mean - env.theta[arm]);
    }

    Ok(TrialOutcome {
        curve: RegretCurve {
            policy: spec.policy,
            trial_seed: seed,
            instant,
        },
        monitor,
        counts: empirical,
        environment: env,
    })
}

/// Parameters of a multi-trial experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub policies: Vec<PolicyId>,
    pub model: FeedbackModel,
    pub prior: Vec<BetaParams>,
    pub horizon: usize,
    pub trials: usize,
    pub grid_size: usize,
    pub master_seed: u64,
    /// Worker threads; results do not depend on it.
    pub parallelism: usize,
    pub monitor: bool,
}

/// Monitor output reduced over trials, one entry per round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundSummary {
    pub round: usize,
    pub max_psi: f64,
    pub max_policy_ratio: f64,
    pub bound: Option<f64>,
    pub graph_bound: f64,
    /// Trials with any violation in this round.
    pub violations: usize,
}

#[derive(Debug, Clone)]
pub struct PolicyResult {
    pub policy: PolicyId,
    pub curves: Vec<RegretCurve>,
    /// Mean cumulative regret for `t = 0..=T`.
    pub mean: Vec<f64>,
    /// Standard error of the mean for `t = 0..=T`.
    pub stderr: Vec<f64>,
    /// Empty when monitoring is off.
    pub monitor: Vec<RoundSummary>,
    /// Rounds with a violation, summed over trials.
    pub violations: usize,
}

impl PolicyResult {
    pub fn final_mean(&self) -> f64 {
        *self.mean.last().expect("curve has round 0")
    }

    pub fn final_stderr(&self) -> f64 {
        *self.stderr.last().expect("curve has round 0")
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub results: Vec<PolicyResult>,
    /// `H(α_1)` in nats.
    pub prior_entropy: f64,
}

impl ExperimentResult {
    pub fn get(&self, policy: PolicyId) -> Option<&PolicyResult> {
        self.results.iter().find(|r| r.policy == policy)
    }

    pub fn total_violations(&self) -> usize {
        self.results.iter().map(|r| r.violations).sum()
    }
}

/// Runs every policy on the same `trials` trial seeds.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    let prior_entropy = PosteriorState::new(&spec.prior, spec.grid_size)?
        .compute_statistics()?
        .entropy;

    let mut results = Vec::with_capacity(spec.policies.len());
    for &policy in &spec.policies {
        let trial = TrialSpec {
            policy,
            model: &spec.model,
            prior: &spec.prior,
            horizon: spec.horizon,
            grid_size: spec.grid_size,
            monitor: spec.monitor,
        };
        trial.validate()?;
        let mut curves = Vec::with_capacity(spec.trials);
        let mut summary: Vec<RoundSummary> = Vec::new();
        for start in (0..spec.trials).step_by(BATCH) {
            let end = (start + BATCH).min(spec.trials);
            let batch: Vec<Result<TrialOutcome>> = pool.install(|| {
                (start..end)
                    .into_par_iter()
                    .map(|i| {
                        let seed = trial_seed(spec.master_seed, i);
                        run_trial(&trial, seed).map_err(|e| Error::TrialFailed {
                            trial: i,
                            seed,
                            source: Box::new(e),
                        })
                    })
                    .collect()
            });
            for outcome in batch {
                let outcome = outcome?;
                if spec.monitor {
                    merge_monitor(&mut summary, &outcome.monitor);
                }
                curves.push(outcome.curve);
            }
        }
        let (mean, stderr) = mean_and_stderr(&curves);
        let violations = summary.iter().map(|r| r.violations).sum();
        results.push(PolicyResult {
            policy,
            curves,
            mean,
            stderr,
            monitor: summary,
            violations,
        });
    }
    Ok(ExperimentResult {
        results,
        prior_entropy,
    })
}

fn merge_monitor(summary: &mut Vec<RoundSummary>, log: &MonitorLog) {
    if summary.is_empty() {
        summary.extend(log.records.iter().map(|r| RoundSummary {
            round: r.round,
            max_psi: f64::NEG_INFINITY,
            max_policy_ratio: f64::NEG_INFINITY,
            bound: r.bound,
            graph_bound: r.graph_bound,
            violations: 0,
        }));
    }
    for (s, r) in summary.iter_mut().zip(&log.records) {
        s.max_psi = s.max_psi.max(r.psi);
        s.max_policy_ratio = s.max_policy_ratio.max(r.policy_ratio);
        s.violations += usize::from(r.violations.any());
    }
}

/// Per-round mean and standard error (sample deviation over `sqrt(N)`) of
/// the cumulative curves, summed in trial order.
pub fn mean_and_stderr(curves: &[RegretCurve]) -> (Vec<f64>, Vec<f64>) {
    let cumulative: Vec<Vec<f64>> = curves.iter().map(RegretCurve::cumulative).collect();
    let len = cumulative.first().map_or(0, Vec::len);
    let n = cumulative.len() as f64;
    let mut mean = vec![0.0; len];
    let mut stderr = vec![0.0; len];
    for t in 0..len {
        let m = cumulative.iter().map(|c| c[t]).sum::<f64>() / n;
        mean[t] = m;
        if cumulative.len() > 1 {
            let var = cumulative.iter().map(|c| (c[t] - m).powi(2)).sum::<f64>() / (n - 1.0);
            stderr[t] = (var / n).sqrt();
        }
    }
    (mean, stderr)
}
