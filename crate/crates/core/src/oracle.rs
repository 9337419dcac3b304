//! Brute-force reference implementations for testing.
//!
//! These are deliberately slow and share no numerical code with the
//! posterior engine or the solvers. Information quantities are computed on
//! a product grid over `θ ∈ [0,1]^K` with the optimal arm decided cell by
//! cell, instead of from marginal CDFs.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::posterior::{BetaParams, PosteriorState};
use crate::solvers::RatioProblem;

/// Largest `K` accepted by [`joint_information_gain`].
pub const JOINT_MAX_ARMS: usize = 4;
/// Largest product-grid resolution accepted by [`joint_information_gain`].
pub const JOINT_MAX_GRID: usize = 80;
/// Largest observed set accepted by [`joint_information_gain`].
pub const JOINT_MAX_SET: usize = 3;
/// Grid used by [`check_superadditivity`].
pub const SUPERADDITIVITY_GRID: usize = 60;
/// Slack in [`check_superadditivity`].
pub const SUPERADDITIVITY_SLACK: f64 = 1e-4;

/// Beta cell masses at the `m` midpoints `(j - ½)/m`, normalised.
fn midpoint_masses(p: BetaParams, m: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..m)
        .map(|j| {
            let x = (j as f64 + 0.5) / m as f64;
            (p.a - 1.0) * x.ln() + (p.b - 1.0) * (1.0 - x).ln()
        })
        .collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Mutual information `I(A*; (Y_a)_{a∈S})` in nats under the posterior
/// encoded by `state`, evaluated on an `m^K` product grid.
///
/// In each cell the optimal arm is the argmax of `θ`, with ties going to
/// the lowest index.
pub fn joint_information_gain(state: &PosteriorState, set: &[usize], m: usize) -> Result<f64> {
    let k = state.arms();
    if k > JOINT_MAX_ARMS {
        return Err(Error::SizeLimit {
            what: "joint information oracle arms",
            limit: JOINT_MAX_ARMS,
            actual: k,
        });
    }
    if m > JOINT_MAX_GRID {
        return Err(Error::SizeLimit {
            what: "joint information oracle grid",
            limit: JOINT_MAX_GRID,
            actual: m,
        });
    }
    if set.len() > JOINT_MAX_SET {
        return Err(Error::SizeLimit {
            what: "joint information oracle observed set",
            limit: JOINT_MAX_SET,
            actual: set.len(),
        });
    }
    if m == 0 {
        return Err(Error::InvalidArgument(
            "oracle grid must be positive".into(),
        ));
    }
    if let Some(&bad) = set.iter().find(|&&a| a >= k) {
        return Err(Error::InvalidArgument(format!("arm {bad} out of range")));
    }
    if set.is_empty() {
        return Ok(0.0);
    }

    let masses: Vec<Vec<f64>> = state
        .params()
        .iter()
        .map(|&p| midpoint_masses(p, m))
        .collect();
    let outcomes = 1usize << set.len();
    // joint[a* * outcomes + y]
    let mut joint = vec![0.0; k * outcomes];
    let mut idx = vec![0usize; k];
    let mut theta = vec![0.0; k];
    'cells: loop {
        let mut mass = 1.0;
        for a in 0..k {
            theta[a] = (idx[a] as f64 + 0.5) / m as f64;
            mass *= masses[a][idx[a]];
        }
        let mut star = 0;
        for a in 1..k {
            if theta[a] > theta[star] {
                star = a;
            }
        }
        for y in 0..outcomes {
            let mut lik = mass;
            for (bit, &b) in set.iter().enumerate() {
                lik *= if y >> bit & 1 == 1 {
                    theta[b]
                } else {
                    1.0 - theta[b]
                };
            }
            joint[star * outcomes + y] += lik;
        }
        // odometer increment
        for i in idx.iter_mut() {
            *i += 1;
            if *i < m {
                continue 'cells;
            }
            *i = 0;
        }
        break;
    }

    let total: f64 = joint.iter().sum();
    let p_star: Vec<f64> = (0..k)
        .map(|a| joint[a * outcomes..(a + 1) * outcomes].iter().sum::<f64>() / total)
        .collect();
    let p_y: Vec<f64> = (0..outcomes)
        .map(|y| (0..k).map(|a| joint[a * outcomes + y]).sum::<f64>() / total)
        .collect();
    let mut mi = 0.0;
    for a in 0..k {
        for y in 0..outcomes {
            let p = joint[a * outcomes + y] / total;
            if p > 0.0 {
                mi += p * (p / (p_star[a] * p_y[y])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Checks `g(N(i)) >= Σ_{a∈N(i)} g({a}) - 1e-4` for the neighbourhood given
/// by `row` (`row[a]` true when arm `a` is observed after playing `i`).
///
/// Both sides come from [`joint_information_gain`] on the same grid, so
/// the slack only absorbs rounding.
pub fn check_superadditivity(state: &PosteriorState, chosen: usize, row: &[bool]) -> Result<bool> {
    if row.len() != state.arms() || chosen >= row.len() || !row[chosen] {
        return Err(Error::InvalidArgument(
            "row must have one entry per arm and include the chosen arm".into(),
        ));
    }
    let neighbourhood: Vec<usize> = (0..row.len()).filter(|&a| row[a]).collect();
    let joint = joint_information_gain(state, &neighbourhood, SUPERADDITIVITY_GRID)?;
    let mut singles = 0.0;
    for &a in &neighbourhood {
        singles += joint_information_gain(state, &[a], SUPERADDITIVITY_GRID)?;
    }
    Ok(joint >= singles - SUPERADDITIVITY_SLACK)
}

/// Minimum of the information ratio over single arms and over every pair
/// mixture on a `q`-grid with `resolution` steps.
pub fn brute_force_p1(p: &RatioProblem, resolution: usize) -> f64 {
    let ratio = |d: f64, v: f64| {
        if d == 0.0 {
            0.0
        } else if v <= 0.0 {
            f64::INFINITY
        } else {
            d * d / v
        }
    };
    let (d, v) = (&p.delta, &p.info);
    let k = d.len();
    let mut best = f64::INFINITY;
    for i in 0..k {
        best = best.min(ratio(d[i], v[i]));
        for j in i + 1..k {
            for s in 0..=resolution {
                let q = s as f64 / resolution as f64;
                best = best.min(ratio(
                    q * d[i] + (1.0 - q) * d[j],
                    q * v[i] + (1.0 - q) * v[j],
                ));
            }
        }
    }
    best
}

/// Minimum of `πᵀΔ` subject to `πᵀv >= level`, over pure arms and the
/// endpoints of each pair's feasible interval.
pub fn brute_force_lp(delta: &[f64], info: &[f64], level: f64) -> Result<f64> {
    let k = delta.len();
    let mut best = f64::INFINITY;
    for i in 0..k {
        if info[i] >= level {
            best = best.min(delta[i]);
        }
        for j in i + 1..k {
            // q v_i + (1 - q) v_j >= level  ⇔  q (v_i - v_j) >= level - v_j
            let slope = info[i] - info[j];
            let rhs = level - info[j];
            let (lo, hi) = if slope > 0.0 {
                ((rhs / slope).max(0.0), 1.0)
            } else if slope < 0.0 {
                (0.0, (rhs / slope).min(1.0))
            } else if rhs <= 0.0 {
                (0.0, 1.0)
            } else {
                continue;
            };
            if lo > hi {
                continue;
            }
            for q in [lo, hi] {
                best = best.min(q * delta[i] + (1.0 - q) * delta[j]);
            }
        }
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Infeasible {
            level,
            max: info.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

/// Frequencies of each arm being the argmax of independent Beta draws, with
/// their binomial standard errors.
pub fn monte_carlo_alpha<R: Rng + ?Sized>(
    priors: &[BetaParams],
    draws: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dists = priors
        .iter()
        .map(|p| Beta::new(p.a, p.b).map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut counts = vec![0usize; priors.len()];
    let mut theta = vec![0.0; priors.len()];
    for _ in 0..draws {
        for (t, d) in theta.iter_mut().zip(&dists) {
            *t = d.sample(rng);
        }
        counts[crate::posterior::argmax(&theta)] += 1;
    }
    let n = draws as f64;
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let se = freq.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok((freq, se))
}
