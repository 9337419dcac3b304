//! Decision rules mapping the round's statistics and feedback matrix to a
//! sampling distribution.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::{Adjacency, Matrix};
use crate::posterior::{argmax, dot, BanditStatistics};
use crate::solvers::{solve_constrained_lp, solve_p1, RatioProblem, SamplingDistribution};

/// Registered policies. The string forms are stable CLI identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyId {
    /// Thompson sampling: play `α`.
    TsN,
    /// Minimise the information ratio.
    IdsN,
    /// Minimise regret with at least TS-N's graph information.
    IdsnLp,
    /// Minimise regret with at least bandit-feedback TS information.
    IdsLp,
    /// UCB1 on all observations, side observations included.
    UcbN,
    /// UCB-N, then the best-looking neighbour of its choice.
    UcbMaxN,
}

impl PolicyId {
    pub const ALL: [PolicyId; 6] = [
        PolicyId::TsN,
        PolicyId::IdsN,
        PolicyId::IdsnLp,
        PolicyId::IdsLp,
        PolicyId::UcbN,
        PolicyId::UcbMaxN,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyId::TsN => "ts-n",
            PolicyId::IdsN => "ids-n",
            PolicyId::IdsnLp => "idsn-lp",
            PolicyId::IdsLp => "ids-lp",
            PolicyId::UcbN => "ucb-n",
            PolicyId::UcbMaxN => "ucb-maxn",
        }
    }

    /// Whether the policy acts on the Bayesian statistics.
    pub fn is_bayesian(&self) -> bool {
        !matches!(self, PolicyId::UcbN | PolicyId::UcbMaxN)
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PolicyId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown policy `{s}`")))
    }
}

/// Per-arm observation counts and success sums, side observations included.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCounts {
    pub counts: Vec<u64>,
    pub sums: Vec<u64>,
}

impl EmpiricalCounts {
    pub fn new(arms: usize) -> Self {
        EmpiricalCounts {
            counts: vec![0; arms],
            sums: vec![0; arms],
        }
    }

    pub fn record(&mut self, observations: &[(usize, u8)]) {
        for &(a, y) in observations {
            self.counts[a] += 1;
            self.sums[a] += u64::from(y);
        }
    }

    /// Empirical mean, `None` for an unobserved arm.
    pub fn mean(&self, a: usize) -> Option<f64> {
        (self.counts[a] > 0).then(|| self.sums[a] as f64 / self.counts[a] as f64)
    }
}

/// Everything a policy may look at in round `t`.
#[derive(Debug, Clone, Copy)]
pub struct PolicyContext<'a> {
    pub stats: &'a BanditStatistics,
    /// Observation probabilities for this round; unit diagonal.
    pub feedback: &'a Matrix,
    /// The round's graph under deterministic feedback, `None` under
    /// Erdős–Rényi feedback.
    pub graph: Option<&'a Adjacency>,
    /// 1-based round index.
    pub round: usize,
    pub empirical: &'a EmpiricalCounts,
}

impl PolicyContext<'_> {
    pub fn arms(&self) -> usize {
        self.stats.arms()
    }

    /// `G·h`: expected information from playing each arm.
    pub fn graph_information(&self) -> Vec<f64> {
        self.feedback.mul_vec(&self.stats.h)
    }

    fn fallback(&self) -> SamplingDistribution {
        SamplingDistribution::point_mass(self.arms(), self.stats.argmax_alpha())
    }

    /// Regrets clamped at zero; the grid statistics may dip a rounding
    /// error below.
    fn clamped_delta(&self) -> Vec<f64> {
        self.stats.delta.iter().map(|d| d.max(0.0)).collect()
    }
}

/// Dispatches to the rule for `policy`.
pub fn decide(policy: PolicyId, ctx: &PolicyContext<'_>) -> SamplingDistribution {
    match policy {
        PolicyId::TsN => ts_n(ctx),
        PolicyId::IdsN => ids_n(ctx),
        PolicyId::IdsnLp => idsn_lp(ctx),
        PolicyId::IdsLp => ids_lp(ctx),
        PolicyId::UcbN => ucb_n(ctx),
        PolicyId::UcbMaxN => ucb_max_n(ctx),
    }
}

pub fn ts_n(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    let alpha = &ctx.stats.alpha;
    let sum: f64 = alpha.iter().sum();
    SamplingDistribution::from_weights(alpha.iter().map(|a| a / sum).collect())
        .unwrap_or_else(|_| ctx.fallback())
}

pub fn ids_n(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    RatioProblem::new(ctx.clamped_delta(), ctx.graph_information())
        .and_then(|p| solve_p1(&p))
        .map(|(dist, _)| dist)
        .unwrap_or_else(|_| ctx.fallback())
}

pub fn idsn_lp(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    let info = ctx.graph_information();
    let level = dot(&ctx.stats.alpha, &info);
    constrained(ctx, &info, level)
}

pub fn ids_lp(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    let info = ctx.graph_information();
    let level = dot(&ctx.stats.alpha, &ctx.stats.h);
    constrained(ctx, &info, level)
}

fn constrained(ctx: &PolicyContext<'_>, info: &[f64], level: f64) -> SamplingDistribution {
    solve_constrained_lp(&ctx.clamped_delta(), info, level)
        .map(|(dist, _)| dist)
        .unwrap_or_else(|_| ctx.fallback())
}

/// The UCB1 arm: unobserved arms first in index order, otherwise the
/// largest `x̄_a + sqrt(2 ln t / n_a)`, lowest index on ties.
pub fn ucb_arm(ctx: &PolicyContext<'_>) -> usize {
    let emp = ctx.empirical;
    if let Some(a) = emp.counts.iter().position(|&c| c == 0) {
        return a;
    }
    let log_t = (ctx.round.max(1) as f64).ln();
    let index: Vec<f64> = (0..ctx.arms())
        .map(|a| {
            let n = emp.counts[a] as f64;
            emp.sums[a] as f64 / n + (2.0 * log_t / n).sqrt()
        })
        .collect();
    argmax(&index)
}

pub fn ucb_n(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    SamplingDistribution::point_mass(ctx.arms(), ucb_arm(ctx))
}

/// Plays the neighbour of the UCB arm with the highest empirical mean,
/// keeping the UCB arm on ties. Without a known graph the neighbourhood is
/// the UCB arm alone.
pub fn ucb_max_n(ctx: &PolicyContext<'_>) -> SamplingDistribution {
    let lead = ucb_arm(ctx);
    let mut best = lead;
    if let (Some(g), Some(mut best_mean)) = (ctx.graph, ctx.empirical.mean(lead)) {
        for a in g.neighbors(lead) {
            if let Some(m) = ctx.empirical.mean(a) {
                if m > best_mean {
                    best = a;
                    best_mean = m;
                }
            }
        }
    }
    SamplingDistribution::point_mass(ctx.arms(), best)
}
