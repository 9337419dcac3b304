//! Per-round subproblems over the probability simplex.
//!
//! * [`solve_p1`] minimises the information ratio `(πᵀΔ)² / (πᵀv)`.
//! * [`solve_constrained_lp`] minimises the regret `πᵀΔ` subject to
//!   `πᵀv >= c`.
//!
//! Both problems have optimal solutions supported on at most two arms, so
//! each solver enumerates single arms and pairs of arms. Candidates are
//! visited in lexicographic order of their support (`{0} < {0,1} < {0,2} <
//! {1} < ...`) and only a strictly better objective replaces the incumbent,
//! which fixes the tie-breaking.

use crate::error::{Error, Result};
use crate::posterior::dot;

/// Interval width at which the golden-section search stops.
pub const GOLDEN_TOLERANCE: f64 = 1e-10;

/// Absolute slack on the LP feasibility precondition.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    weights: Vec<f64>,
}

impl SamplingDistribution {
    pub fn point_mass(arms: usize, arm: usize) -> Self {
        let mut weights = vec![0.0; arms];
        weights[arm] = 1.0;
        SamplingDistribution { weights }
    }

    /// Wraps `weights` after checking they are non-negative and sum to 1
    /// within `1e-9`.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if weights.is_empty()
            || weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "not a probability vector: {weights:?}"
            )));
        }
        Ok(SamplingDistribution { weights })
    }

    fn pair(arms: usize, i: usize, j: usize, weight_i: f64) -> Self {
        let mut weights = vec![0.0; arms];
        weights[i] = weight_i;
        weights[j] = 1.0 - weight_i;
        SamplingDistribution { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn arms(&self) -> usize {
        self.weights.len()
    }

    /// Arms with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }

    /// Maps a uniform draw `u ∈ [0, 1)` to an arm by inverse CDF.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }
}

/// Inputs of the ratio-minimisation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioProblem {
    pub delta: Vec<f64>,
    /// Information gain of each arm, `G·h` (or `g`).
    pub info: Vec<f64>,
}

impl RatioProblem {
    pub fn new(delta: Vec<f64>, info: Vec<f64>) -> Result<Self> {
        if delta.len() != info.len() || delta.is_empty() {
            return Err(Error::InvalidArgument(
                "delta and info must be non-empty and of equal length".into(),
            ));
        }
        if delta
            .iter()
            .chain(&info)
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::InvalidArgument(
                "delta and info must be finite and non-negative".into(),
            ));
        }
        Ok(RatioProblem { delta, info })
    }

    pub fn arms(&self) -> usize {
        self.delta.len()
    }

    /// `Ψ(π)`, with `Ψ = 0` when `πᵀΔ = 0` and `+∞` when only the
    /// denominator vanishes.
    pub fn objective(&self, pi: &[f64]) -> f64 {
        information_ratio(dot(pi, &self.delta), dot(pi, &self.info))
    }
}

/// `regret² / info`, taking zero regret as zero cost.
pub fn information_ratio(regret: f64, info: f64) -> f64 {
    let num = regret * regret;
    if num == 0.0 {
        0.0
    } else if info <= 0.0 {
        f64::INFINITY
    } else {
        num / info
    }
}

/// Minimises `(πᵀΔ)² / (πᵀv)` over the simplex.
///
/// Each pair `(i, j)` is solved by golden-section search on the convex
/// scalar function `q ↦ Ψ(q e_i + (1-q) e_j)`; single arms are evaluated
/// directly. Fails with [`Error::NoInformation`] when every candidate has a
/// positive regret and zero information.
pub fn solve_p1(p: &RatioProblem) -> Result<(SamplingDistribution, f64)> {
    let k = p.arms();
    let (d, v) = (&p.delta, &p.info);
    let pair_ratio = |i: usize, j: usize, q: f64| {
        information_ratio(q * d[i] + (1.0 - q) * d[j], q * v[i] + (1.0 - q) * v[j])
    };

    let mut best: Option<(SamplingDistribution, f64)> = None;
    let mut offer = |dist: SamplingDistribution, obj: f64| {
        if obj.is_finite() && best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((dist, obj));
        }
    };

    for i in 0..k {
        offer(
            SamplingDistribution::point_mass(k, i),
            information_ratio(d[i], v[i]),
        );
        for j in i + 1..k {
            if v[i] <= 0.0 && v[j] <= 0.0 {
                continue;
            }
            let q = golden_section(|q| pair_ratio(i, j, q));
            // Prefer an endpoint when it is at least as good; order favours
            // more weight on the lower index.
            let mut choice = (1.0, pair_ratio(i, j, 1.0));
            for cand in [q, 0.0] {
                let obj = pair_ratio(i, j, cand);
                if obj < choice.1 {
                    choice = (cand, obj);
                }
            }
            offer(SamplingDistribution::pair(k, i, j, choice.0), choice.1);
        }
    }
    best.ok_or(Error::NoInformation)
}

/// Minimiser of a convex function on `[0, 1]`, to within
/// [`GOLDEN_TOLERANCE`].
fn golden_section(f: impl Fn(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0f64, 1.0f64);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let (mut fc, mut fe) = (f(c), f(e));
    while b - a > GOLDEN_TOLERANCE {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    0.5 * (a + b)
}

/// Minimises `πᵀΔ` over the simplex subject to `πᵀv >= level`.
///
/// The optimum sits at a vertex of the feasible polytope: either a single
/// arm with `v_i >= level`, or a mixture of a pair straddling the level with
/// the constraint tight, `λ = (v_j - level) / (v_j - v_i)` on the arm below.
/// All such candidates are enumerated (`O(K²)`).
pub fn solve_constrained_lp(
    delta: &[f64],
    info: &[f64],
    level: f64,
) -> Result<(SamplingDistribution, f64)> {
    let k = delta.len();
    if k == 0 || info.len() != k {
        return Err(Error::InvalidArgument(
            "delta and info must be non-empty and of equal length".into(),
        ));
    }
    let max_v = info.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if level > max_v + FEASIBILITY_SLACK {
        return Err(Error::Infeasible { level, max: max_v });
    }
    if info.iter().all(|&v| v == 0.0) {
        return Err(Error::NoInformation);
    }
    let level = level.min(max_v);
    // Relative tolerance: information gains shrink towards zero as the
    // posterior concentrates.
    let tol = FEASIBILITY_SLACK * max_v;

    let mut best: Option<(SamplingDistribution, f64)> = None;
    let mut offer = |dist: SamplingDistribution, obj: f64| {
        if best.as_ref().is_none_or(|(_, b)| obj < *b) {
            best = Some((dist, obj));
        }
    };
    for i in 0..k {
        if info[i] >= level - tol {
            offer(SamplingDistribution::point_mass(k, i), delta[i]);
        }
        for j in i + 1..k {
            let (lo, hi) = if info[i] < info[j] { (i, j) } else { (j, i) };
            if info[lo] < level - tol && info[hi] > level + tol {
                let lambda = (info[hi] - level) / (info[hi] - info[lo]);
                let weight_i = if lo == i { lambda } else { 1.0 - lambda };
                let obj = weight_i * delta[i] + (1.0 - weight_i) * delta[j];
                offer(SamplingDistribution::pair(k, i, j, weight_i), obj);
            }
        }
    }
    // The arm with the largest information is always a feasible vertex.
    Ok(best.expect("argmax of info is feasible"))
}
