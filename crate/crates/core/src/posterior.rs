//! Independent Beta-Bernoulli posteriors and the per-round statistics.
//!
//! Every arm's posterior density is represented on a shared grid of `n`
//! cell midpoints `x_k = (k - 1/2) / n` and treated as piecewise constant on
//! the cells. From the normalised cell masses `w_k` we keep, at every
//! midpoint,
//!
//! * `F(x_k) = Σ_{j<k} w_j + w_k / 2` (the CDF of the piecewise-constant
//!   density, so `F` reaches exactly 1 at the right end), and
//! * `G(x_k) = ∫_0^{x_k} y f(y) dy` for the same density.
//!
//! The optimal-action distribution and the conditional means are then
//! midpoint sums:
//!
//! ```text
//! α(a)      ∝ Σ_k w_a(k) Π_{b≠a} F_b(x_k)
//! M[a][a]   = Σ_k w_a(k) x_k Π_{b≠a} F_b(x_k) / α(a)
//! M[a*][a]  = Σ_k w_{a*}(k) G_a(x_k) Π_{b≠a*,a} F_b(x_k) / α(a*)
//! ```
//!
//! from which `ρ* = Σ α(a) M[a][a]`, `Δ(a) = ρ* - μ(a)` and the information
//! gain `h(a) = Σ_{a*} α(a*) d(M[a*][a] ‖ μ(a))` with `d` the Bernoulli KL
//! divergence. All information quantities are in nats.
//!
//! The cost of [`PosteriorState::compute_statistics`] is `O(K² n)`.

use crate::error::{Error, Result};

/// Default number of grid cells.
pub const DEFAULT_GRID: usize = 1000;

/// Grids smaller than this are accepted but flagged as coarse.
pub const MIN_RECOMMENDED_GRID: usize = 50;

/// Optimal-action probabilities below this are treated as zero when forming
/// conditional means.
pub const ALPHA_FLOOR: f64 = 1e-12;

const KL_CLAMP: f64 = 1e-12;

/// Parameters of a Beta distribution: `a` counts successes, `b` failures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let p = BetaParams { a, b };
        p.validate(0)?;
        Ok(p)
    }

    pub fn uniform() -> Self {
        BetaParams { a: 1.0, b: 1.0 }
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    fn validate(&self, arm: usize) -> Result<()> {
        if self.a > 0.0 && self.b > 0.0 && self.a.is_finite() && self.b.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidPrior {
                arm,
                a: self.a,
                b: self.b,
            })
        }
    }
}

/// Bernoulli KL divergence `d(p ‖ q)` in nats.
///
/// Both arguments are clamped into `[1e-12, 1 - 1e-12]`. The log ratios go
/// through `ln_1p` so that `d` stays accurate when `p ≈ q`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let p = p.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    let q = q.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    let up = p * ((p - q) / q).ln_1p();
    let down = (1.0 - p) * ((q - p) / (1.0 - q)).ln_1p();
    (up + down).max(0.0)
}

/// Shannon entropy in nats, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

#[derive(Debug, Clone)]
struct Grid {
    x: Vec<f64>,
    ln_x: Vec<f64>,
    ln_1mx: Vec<f64>,
}

impl Grid {
    fn new(n: usize) -> Self {
        let x: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
        let ln_x = x.iter().map(|v| v.ln()).collect();
        let ln_1mx = x.iter().map(|v| (-v).ln_1p()).collect();
        Grid { x, ln_x, ln_1mx }
    }

    fn len(&self) -> usize {
        self.x.len()
    }
}

/// Masses below this (relative to a unit total) are flushed to zero so the
/// tails never go subnormal.
const MASS_FLUSH: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
struct ArmCache {
    mass: Vec<f64>,
    cdf: Vec<f64>,
    partial: Vec<f64>,
    /// `mass / cdf`, zero where the CDF is zero.
    mass_ratio: Vec<f64>,
    /// `partial / cdf`, zero where the CDF is zero.
    partial_ratio: Vec<f64>,
    mean: f64,
}

impl ArmCache {
    fn build(p: BetaParams, grid: &Grid) -> Result<Self> {
        let n = grid.len();
        let mass: Vec<f64> = (0..n)
            .map(|k| (p.a - 1.0) * grid.ln_x[k] + (p.b - 1.0) * grid.ln_1mx[k])
            .collect();
        let peak = mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "Beta({}, {}) density is not finite on the grid",
                p.a, p.b
            )));
        }
        ArmCache::from_weights(
            mass.into_iter().map(|m| (m - peak).exp()).collect(),
            grid,
            p,
        )
    }

    /// Multiplies the density by the likelihood of one outcome.
    fn observe(&mut self, y: u8, p: BetaParams, grid: &Grid) -> Result<()> {
        if y == 1 {
            for (w, x) in self.mass.iter_mut().zip(&grid.x) {
                *w *= x;
            }
        } else {
            for (w, x) in self.mass.iter_mut().zip(&grid.x) {
                *w *= 1.0 - x;
            }
        }
        self.refresh(grid, p)
    }

    fn from_weights(mass: Vec<f64>, grid: &Grid, p: BetaParams) -> Result<Self> {
        let n = mass.len();
        let mut cache = ArmCache {
            mass,
            cdf: vec![0.0; n],
            partial: vec![0.0; n],
            mass_ratio: vec![0.0; n],
            partial_ratio: vec![0.0; n],
            mean: 0.0,
        };
        cache.refresh(grid, p)?;
        Ok(cache)
    }

    /// Normalises `mass` and recomputes everything derived from it.
    fn refresh(&mut self, grid: &Grid, p: BetaParams) -> Result<()> {
        let n = grid.len();
        let h = 1.0 / n as f64;
        let total: f64 = self.mass.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "Beta({}, {}) has no mass on the grid",
                p.a, p.b
            )));
        }
        let scale = 1.0 / total;
        let (mut below, mut below_x) = (0.0, 0.0);
        for k in 0..n {
            let mut w = self.mass[k] * scale;
            if w < MASS_FLUSH {
                w = 0.0;
            }
            self.mass[k] = w;
            let x = grid.x[k];
            let f = below + 0.5 * w;
            let g = below_x + 0.5 * w * (x - 0.25 * h);
            let inv = if f > 0.0 { 1.0 / f } else { 0.0 };
            self.cdf[k] = f;
            self.partial[k] = g;
            self.mass_ratio[k] = w * inv;
            self.partial_ratio[k] = g * inv;
            below += w;
            below_x += w * x;
        }
        self.mean = below_x;
        Ok(())
    }
}

/// Posterior over the arm means, one independent Beta per arm.
#[derive(Debug, Clone)]
pub struct PosteriorState {
    params: Vec<BetaParams>,
    grid: Grid,
    caches: Vec<ArmCache>,
    coarse_grid: bool,
}

impl PosteriorState {
    /// Builds a state from one prior per arm. `K >= 2`, `n >= 1`; grids
    /// below [`MIN_RECOMMENDED_GRID`] are accepted but flagged.
    pub fn new(priors: &[BetaParams], grid_size: usize) -> Result<Self> {
        if priors.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 arms, got {}",
                priors.len()
            )));
        }
        if grid_size == 0 {
            return Err(Error::InvalidArgument("grid size must be positive".into()));
        }
        for (arm, p) in priors.iter().enumerate() {
            p.validate(arm)?;
        }
        let grid = Grid::new(grid_size);
        let caches = priors
            .iter()
            .map(|&p| ArmCache::build(p, &grid))
            .collect::<Result<Vec<_>>>()?;
        Ok(PosteriorState {
            params: priors.to_vec(),
            grid,
            caches,
            coarse_grid: grid_size < MIN_RECOMMENDED_GRID,
        })
    }

    /// `K` arms with the same prior.
    pub fn with_common_prior(arms: usize, prior: BetaParams, grid_size: usize) -> Result<Self> {
        PosteriorState::new(&vec![prior; arms], grid_size)
    }

    pub fn arms(&self) -> usize {
        self.params.len()
    }

    pub fn grid_size(&self) -> usize {
        self.grid.len()
    }

    pub fn grid_points(&self) -> &[f64] {
        &self.grid.x
    }

    pub fn params(&self) -> &[BetaParams] {
        &self.params
    }

    pub fn is_coarse(&self) -> bool {
        self.coarse_grid
    }

    /// Normalised cell masses of arm `a` (they sum to 1).
    pub fn cell_mass(&self, a: usize) -> &[f64] {
        &self.caches[a].mass
    }

    /// Density of arm `a` at the grid midpoints.
    pub fn pdf(&self, a: usize) -> Vec<f64> {
        let n = self.grid_size() as f64;
        self.caches[a].mass.iter().map(|w| w * n).collect()
    }

    /// CDF of arm `a` at the grid midpoints.
    pub fn cdf(&self, a: usize) -> &[f64] {
        &self.caches[a].cdf
    }

    /// `∫_0^x y f_a(y) dy` at the grid midpoints.
    pub fn partial_expectation(&self, a: usize) -> &[f64] {
        &self.caches[a].partial
    }

    /// Posterior mean of arm `a` under the grid measure.
    pub fn mean(&self, a: usize) -> f64 {
        self.caches[a].mean
    }

    /// Applies one round of observations `(arm, outcome)`.
    ///
    /// The whole batch is validated before anything changes. Only the
    /// observed arms have their caches rebuilt.
    pub fn update(&mut self, observations: &[(usize, u8)]) -> Result<()> {
        let k = self.arms();
        let mut seen = vec![false; k];
        for &(arm, y) in observations {
            if arm >= k {
                return Err(Error::InvalidArgument(format!(
                    "arm {arm} out of range for {k} arms"
                )));
            }
            if y > 1 {
                return Err(Error::InvalidOutcome { arm, value: y });
            }
            if std::mem::replace(&mut seen[arm], true) {
                return Err(Error::DuplicateObservation(arm));
            }
        }
        for &(arm, y) in observations {
            let p = &mut self.params[arm];
            if y == 1 {
                p.a += 1.0;
            } else {
                p.b += 1.0;
            }
            self.caches[arm].observe(y, *p, &self.grid)?;
        }
        Ok(())
    }

    /// Computes `α`, `μ`, `M`, `ρ*`, `Δ`, `h` and `H(α)` from scratch.
    pub fn compute_statistics(&self) -> Result<BanditStatistics> {
        let k = self.arms();
        let n = self.grid_size();
        let x = &self.grid.x;

        // With P = Π_b F_b, the product over b ≠ a* is P · w_{a*} / F_{a*}
        // and the product over b ∉ {a*, a} times G_a is that times
        // G_a / F_a. Where a CDF is zero the mass and partial expectation
        // are zero too, so the ratios are taken as zero.
        let mut all = vec![1.0; n];
        for c in &self.caches {
            for (p, f) in all.iter_mut().zip(&c.cdf) {
                *p *= f;
            }
        }
        let mut raw_alpha = vec![0.0; k];
        let mut raw_diag = vec![0.0; k];
        let mut raw_cross = vec![0.0; k * k];
        let mut base = vec![0.0; n];
        let ones = vec![1.0; n];
        for star in 0..k {
            for ((b, p), q) in base.iter_mut().zip(&all).zip(&self.caches[star].mass_ratio) {
                *b = p * q;
            }
            raw_alpha[star] = grid_dot(&base, &ones);
            raw_diag[star] = grid_dot(&base, x);
            for a in 0..k {
                if a != star {
                    raw_cross[star * k + a] = grid_dot(&base, &self.caches[a].partial_ratio);
                }
            }
        }

        let total: f64 = raw_alpha.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NumericalFailure(format!(
                "optimal-action mass integrates to {total}"
            )));
        }
        let alpha: Vec<f64> = raw_alpha.iter().map(|v| v / total).collect();
        let mu: Vec<f64> = self.caches.iter().map(|c| c.mean).collect();

        let mut cond = vec![0.0; k * k];
        for star in 0..k {
            let row = &mut cond[star * k..(star + 1) * k];
            if alpha[star] < ALPHA_FLOOR {
                row.copy_from_slice(&mu);
                continue;
            }
            for a in 0..k {
                row[a] = if a == star {
                    raw_diag[star] / raw_alpha[star]
                } else {
                    raw_cross[star * k + a] / raw_alpha[star]
                };
            }
        }

        let rho_star: f64 = (0..k).map(|a| alpha[a] * cond[a * k + a]).sum();
        let delta: Vec<f64> = mu.iter().map(|m| rho_star - m).collect();
        let h: Vec<f64> = (0..k)
            .map(|a| {
                (0..k)
                    .filter(|&star| alpha[star] >= ALPHA_FLOOR)
                    .map(|star| alpha[star] * bernoulli_kl(cond[star * k + a], mu[a]))
                    .sum()
            })
            .collect();
        let stats = BanditStatistics {
            entropy: entropy(&alpha),
            alpha,
            mu,
            cond_means: cond,
            rho_star,
            delta,
            h,
            coarse_grid: self.coarse_grid,
        };
        stats.check_finite()?;
        Ok(stats)
    }
}

/// The per-round quantities a policy acts on.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditStatistics {
    /// Posterior distribution of the optimal arm.
    pub alpha: Vec<f64>,
    /// Posterior means.
    pub mu: Vec<f64>,
    /// Row-major `K × K`: entry `(a*, a)` is `E[θ_a | A* = a*]`.
    pub cond_means: Vec<f64>,
    /// `E[θ_{A*}]`.
    pub rho_star: f64,
    /// Expected instantaneous regret of each arm.
    pub delta: Vec<f64>,
    /// Mutual information between `A*` and each arm's next outcome, in nats.
    pub h: Vec<f64>,
    /// `H(α)` in nats.
    pub entropy: f64,
    /// Set when the grid is below [`MIN_RECOMMENDED_GRID`].
    pub coarse_grid: bool,
}

impl BanditStatistics {
    pub fn arms(&self) -> usize {
        self.alpha.len()
    }

    pub fn cond_mean(&self, star: usize, a: usize) -> f64 {
        self.cond_means[star * self.arms() + a]
    }

    /// `Δᵀα`, the regret of sampling from `α`.
    pub fn expected_regret(&self) -> f64 {
        dot(&self.delta, &self.alpha)
    }

    /// Arm with the largest `α`, lowest index on ties.
    pub fn argmax_alpha(&self) -> usize {
        argmax(&self.alpha)
    }

    fn check_finite(&self) -> Result<()> {
        let all = self
            .alpha
            .iter()
            .chain(&self.mu)
            .chain(&self.cond_means)
            .chain(&self.delta)
            .chain(&self.h)
            .chain([&self.rho_star, &self.entropy]);
        for v in all {
            if !v.is_finite() {
                return Err(Error::NumericalFailure("non-finite statistic".into()));
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dot product over grid-length vectors with four independent accumulators.
fn grid_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Index of the largest entry, lowest index on ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}
