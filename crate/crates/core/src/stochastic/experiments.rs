//! Monte Carlo experiments on boundary local time.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use super::kernel::heat_kernel_double;
use super::path::{bridge_local_time_increment, reflect_path, richardson_moment};
use super::simulate::{flat_bridge_local_time, mirror, pinned_bridge, sample_double_bridge, MIN_STEPS};
use super::stats::{ks_distance_normal, loglog_slope, Estimate};
use super::RngStream;
use crate::error::{Error, Result};
use crate::gbc::gamma_half;
use crate::geometry::{drift_b, ManifoldModel, ModelKind};
use crate::quadrature::gauss_legendre_on;

/// Largest moment order supported by [`moment_integral`].
pub const MAX_MOMENT: usize = 6;

/// Outer quadrature for the integral over the bridge start `u`.
pub const MOMENT_NODES: usize = 32;
pub const MOMENT_U_MAX: f64 = 4.0;
const MIN_PATHS_PER_NODE: usize = 20;

/// `q! / (2^{q/2+2} Γ(q/2 + 1))`, the value of
/// `(2π)^{-1/2} ∫₀^∞ e^{−2u²} E[l₁^q] du` for the bridge from `u` to `−u`.
pub fn moment_closed_form(q: usize) -> f64 {
    let qf: f64 = (1..=q).map(|k| k as f64).product();
    qf / (2f64.powf(q as f64 / 2.0 + 2.0) * gamma_half(q + 2))
}

/// `E[l₁^q]` for the bridge from `u` to `−u`, by quadrature of its tail
/// `P(l₁ > y) = exp(−(4uy + y²)/2)`.
pub fn bridge_local_time_moment(u: f64, q: usize) -> f64 {
    if q == 0 {
        return 1.0;
    }
    // ∫₀^∞ q y^{q−1} P(l > y) dy on a truncated range
    let (ys, ws) = gauss_legendre_on(200, 0.0, 12.0);
    ys.iter()
        .zip(&ws)
        .map(|(y, w)| w * q as f64 * y.powi(q as i32 - 1) * (-(4.0 * u * y + y * y) / 2.0).exp())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub q: usize,
    /// Richardson occupation estimator.
    pub estimate: f64,
    pub std_error: f64,
    /// Exact per-step bridge local time, an unbiased cross-check.
    pub exact_step_estimate: f64,
    pub exact_step_std_error: f64,
    pub closed_form: f64,
    pub paths: usize,
    pub steps: usize,
}

/// Paths per quadrature node: proportional to the node's weight, at least 20.
fn allocate_paths(weights: &[f64], paths: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| ((paths as f64 * w / total).round() as usize).max(MIN_PATHS_PER_NODE))
        .collect()
}

/// Estimates `(2π)^{-1/2} ∫₀^∞ e^{−2u²} E[l₁^q] du` for every `q` in `qs` from
/// one set of bridge paths.
///
/// The outer integral uses a 32-node Gauss-Legendre rule on `[0, 4]`; each
/// node gets bridges from `u` to `−u` in proportion to its weight. `q = 0`
/// needs no simulation and is reported with zero error.
pub fn moment_integrals(qs: &[usize], paths: usize, steps: usize, seed: u64) -> Result<Vec<MomentEstimate>> {
    if let Some(&q) = qs.iter().find(|&&q| q > MAX_MOMENT) {
        return Err(Error::Invalid(format!("moment order {q} exceeds {MAX_MOMENT}")));
    }
    if steps < MIN_STEPS || steps % 2 == 1 {
        return Err(Error::TooCoarse(steps, MIN_STEPS));
    }
    let (us, ws) = gauss_legendre_on(MOMENT_NODES, 0.0, MOMENT_U_MAX);
    let weights: Vec<f64> = us
        .iter()
        .zip(&ws)
        .map(|(u, w)| w * (-2.0 * u * u).exp() / (2.0 * PI).sqrt())
        .collect();
    let counts = allocate_paths(&weights, paths);
    let h = 1.0 / steps as f64;
    let nq = qs.len();
    let mut results = vec![(0.0, 0.0, 0.0, 0.0); nq];
    let mut offset = 0u64;
    let mut used = 0;
    for ((&u, &w), &count) in us.iter().zip(&weights).zip(&counts) {
        // per path: (Richardson, exact) sample for every q
        let samples: Vec<Vec<(f64, f64)>> = (0..count as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = RngStream::new(seed, offset + j).rng();
                let xs = pinned_bridge(u, -u, 1.0, steps, &mut rng);
                let exact: f64 = xs
                    .windows(2)
                    .map(|p| bridge_local_time_increment(p[0], p[1], h, &mut rng))
                    .sum();
                qs.iter()
                    .map(|&q| (richardson_moment(&xs, h, q as u32), exact.powi(q as i32)))
                    .collect()
            })
            .collect();
        offset += count as u64;
        used += count;
        for (i, r) in results.iter_mut().enumerate() {
            let rich: Vec<f64> = samples.iter().map(|s| s[i].0).collect();
            let ex: Vec<f64> = samples.iter().map(|s| s[i].1).collect();
            let (a, b) = (Estimate::from_samples(&rich), Estimate::from_samples(&ex));
            r.0 += w * a.mean;
            r.1 += (w * a.std_error).powi(2);
            r.2 += w * b.mean;
            r.3 += (w * b.std_error).powi(2);
        }
    }
    Ok(qs
        .iter()
        .zip(results)
        .map(|(&q, (est, var, ex, exvar))| MomentEstimate {
            q,
            estimate: est,
            std_error: var.sqrt(),
            exact_step_estimate: ex,
            exact_step_std_error: exvar.sqrt(),
            closed_form: moment_closed_form(q),
            paths: used,
            steps,
        })
        .collect())
}

/// Single-order version of [`moment_integrals`].
pub fn moment_integral(q: usize, paths: usize, steps: usize, seed: u64) -> Result<MomentEstimate> {
    Ok(moment_integrals(&[q], paths, steps, seed)?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingPoint {
    pub t: f64,
    pub moment: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingResult {
    pub n: u32,
    pub slope: f64,
    pub points: Vec<ScalingPoint>,
}

fn check_paths(paths: usize) -> Result<()> {
    if paths == 0 {
        Err(Error::Invalid("at least one path is required".into()))
    } else {
        Ok(())
    }
}

/// Log-log slopes of `E_{t;x,x*}[l_t^n]` against `t` for each `n` in `ns`,
/// from one set of bridges from `x` to its mirror image `x*` per time.
pub fn local_time_scaling_checks(
    model: &ManifoldModel,
    x: &[f64],
    ns: &[u32],
    t_grid: &[f64],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<ScalingResult>> {
    check_paths(paths)?;
    if t_grid.len() < 2 {
        return Err(Error::Invalid("need at least two times for a slope".into()));
    }
    let target = mirror(x);
    let mut per_t = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let sub = super::derive_seed(seed, i as u64);
        let ls: Vec<f64> = (0..paths as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = RngStream::new(sub, j).rng();
                flat_bridge_local_time(model, x[0], target[0], t, steps, &mut rng).map(|(_, l)| l)
            })
            .collect::<Result<_>>()?;
        per_t.push(ls);
    }
    ns.iter()
        .map(|&n| {
            let points = t_grid
                .iter()
                .zip(&per_t)
                .map(|(&t, ls)| {
                    let powers: Vec<f64> = ls.iter().map(|l| l.powi(n as i32)).collect();
                    let moment = Estimate::from_samples(&powers);
                    if moment.mean > 0.0 {
                        Ok(ScalingPoint { t, moment })
                    } else {
                        Err(Error::InsufficientHits(t))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
            let ms: Vec<f64> = points.iter().map(|p| p.moment.mean).collect();
            Ok(ScalingResult {
                n,
                slope: loglog_slope(&ts, &ms),
                points,
            })
        })
        .collect()
}

/// Single-order version of [`local_time_scaling_checks`].
pub fn local_time_scaling_check(
    model: &ManifoldModel,
    x: &[f64],
    n: u32,
    t_grid: &[f64],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<ScalingResult> {
    Ok(local_time_scaling_checks(model, x, &[n], t_grid, paths, steps, seed)?.remove(0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReflectionRow {
    /// Power of the local time in the test functional `G = l_t^power`.
    pub power: u32,
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z: f64,
}

/// Both sides of the reflection identity
/// `E_{t;x,x}[G(RE); T ≤ t] = (q(t,x,x*)/q(t,x,x)) E_{t;x,x*}[G(E)]`
/// for `G = l_t^k`, `k ∈ powers`, estimated from independent bridge samples.
pub fn reflection_identity(
    model: &ManifoldModel,
    x: &[f64],
    t: f64,
    powers: &[u32],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<ReflectionRow>> {
    check_paths(paths)?;
    let xs = mirror(x);
    let ratio = heat_kernel_double(model, t, x, &xs)? / heat_kernel_double(model, t, x, x)?;
    // per path, G(path) for every power; paths are not kept
    let run = |target: &[f64], tag: u64, reflect: bool| -> Result<Vec<Vec<f64>>> {
        let sub = super::derive_seed(seed, tag);
        (0..paths as u64)
            .into_par_iter()
            .map(|j| {
                let p = sample_double_bridge(model, x, target, t, steps, &mut RngStream::new(sub, j).rng())?;
                let l = match (reflect, p.hits()) {
                    (true, true) => reflect_path(&p).final_local_time(),
                    (true, false) => return Ok(vec![0.0; powers.len()]),
                    (false, _) => p.final_local_time(),
                };
                Ok(powers.iter().map(|&k| l.powi(k as i32)).collect())
            })
            .collect()
    };
    let loops = run(x, 1, true)?;
    let crossing = run(&xs, 2, false)?;
    Ok(powers
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let lhs: Vec<f64> = loops.iter().map(|v| v[i]).collect();
            let rhs: Vec<f64> = crossing.iter().map(|v| v[i]).collect();
            let lhs = Estimate::from_samples(&lhs);
            let rhs = Estimate::from_samples(&rhs).scaled(ratio);
            ReflectionRow {
                power: k,
                z: lhs.z_score(&rhs),
                lhs,
                rhs,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeumannDecomposition {
    /// `q(t,x,x) P_{x,x}(T > t) + 2 q(t,x,x*)`.
    pub reconstructed: Estimate,
    /// `q(t,x,x) + q(t,x,x*)`, the reflecting kernel on the diagonal.
    pub exact: f64,
}

/// Splits the reflecting kernel on the diagonal into its boundary-free and
/// boundary parts, with `P(T > t)` estimated over bridges from `x` to `x`.
pub fn neumann_decomposition(
    model: &ManifoldModel,
    x: &[f64],
    t: f64,
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<NeumannDecomposition> {
    check_paths(paths)?;
    let xs = mirror(x);
    let qxx = heat_kernel_double(model, t, x, x)?;
    let qxs = heat_kernel_double(model, t, x, &xs)?;
    let free: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|j| {
            flat_bridge_local_time(model, x[0], x[0], t, steps, &mut RngStream::new(seed, j).rng())
                .map(|(hit, _)| if hit { 0.0 } else { 1.0 })
        })
        .collect::<Result<_>>()?;
    let survive = Estimate::from_samples(&free);
    let reconstructed = Estimate {
        mean: qxx * survive.mean + 2.0 * qxs,
        std_error: qxx * survive.std_error,
        n: survive.n,
    };
    Ok(NeumannDecomposition {
        reconstructed,
        exact: qxx + qxs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: f64,
    pub ks: f64,
    pub mean: f64,
    pub variance: f64,
    /// `sup_z |√t · ½ b¹(√t z)|` over the grid `z ∈ [−3, 3]`.
    pub drift_sup: f64,
}

/// Scaled normal drift `√t · ½ b¹(√t z)` of `model` at tangential origin.
fn scaled_drift(model: &ManifoldModel, t: f64, z: f64) -> Result<f64> {
    if model.kind() == ModelKind::Halfspace {
        return Ok(0.0);
    }
    let mut x = vec![0.0; model.dim()];
    x[0] = t.sqrt() * z;
    Ok(t.sqrt() * 0.5 * drift_b(model.chart(), &x)?[0])
}

/// Marginal at `s = ½` of the scaled normal component
/// `dN = √t · ½ b¹(√t N) ds + (−u − N)/(1 − s) ds + dW`, `N₀ = u`, compared
/// with the limit bridge marginal `N(0, ¼)` by the Kolmogorov-Smirnov distance.
///
/// Every `t` reuses the same Brownian increments, so the table isolates the
/// effect of the drift.
pub fn scaled_bridge_convergence(
    model: &ManifoldModel,
    t_grid: &[f64],
    u: f64,
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    check_paths(paths)?;
    if !(0.0..=3.0).contains(&u) {
        return Err(Error::Invalid(format!("u must lie in [0, 3], got {u}")));
    }
    if steps < MIN_STEPS || steps % 2 == 1 {
        return Err(Error::TooCoarse(steps, MIN_STEPS));
    }
    let h = 1.0 / steps as f64;
    let half = steps / 2;
    t_grid
        .iter()
        .map(|&t| {
            let mids: Vec<f64> = (0..paths as u64)
                .into_par_iter()
                .map(|j| {
                    let mut rng = RngStream::new(seed, j).rng();
                    let mut n = u;
                    for k in 0..half {
                        let s = k as f64 * h;
                        let dw: f64 = rng.sample::<f64, _>(StandardNormal) * h.sqrt();
                        n += (scaled_drift(model, t, n)? + (-u - n) / (1.0 - s)) * h + dw;
                    }
                    Ok(n)
                })
                .collect::<Result<_>>()?;
            let est = Estimate::from_samples(&mids);
            let variance = mids.iter().map(|x| (x - est.mean).powi(2)).sum::<f64>() / mids.len() as f64;
            let drift_sup = (0..=60)
                .map(|i| scaled_drift(model, t, -3.0 + 0.1 * i as f64).map(f64::abs))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok(ConvergenceRow {
                t,
                ks: ks_distance_normal(&mids, 0.0, 0.5),
                mean: est.mean,
                variance,
                drift_sup,
            })
        })
        .collect()
}
