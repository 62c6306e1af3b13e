use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::gaussian;
use super::path::{bridge_local_time_increment, PathSample};
use crate::error::{Error, Result};
use crate::geometry::{drift_b, orthonormal_frame, ManifoldModel, ModelKind};

/// Fewest time steps accepted by the path samplers.
pub const MIN_STEPS: usize = 100;

fn check_steps(n: usize) -> Result<()> {
    if n < MIN_STEPS {
        Err(Error::TooCoarse(n, MIN_STEPS))
    } else {
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("time must be positive, got {t}")))
    }
}

/// Signed distance of a normal coordinate to the nearest boundary point of the
/// double. On the interval's circle every integer is a boundary point.
fn boundary_offset(model: &ManifoldModel, x1: f64, level_hint: f64) -> f64 {
    if model.kind() == ModelKind::Interval {
        let c = model.scale();
        x1 - c * (level_hint / c).round()
    } else {
        x1
    }
}

/// Local time gained over one step from `a` to `b` (normal coordinates).
fn step_local_time<R: Rng + ?Sized>(model: &ManifoldModel, a: f64, b: f64, h: f64, rng: &mut R) -> f64 {
    if !model.has_boundary() {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let (oa, ob) = (boundary_offset(model, a, mid), boundary_offset(model, b, mid));
    bridge_local_time_increment(oa, ob, h, rng)
}

/// Projection of a doubled-chart point to the manifold.
pub fn project(model: &ManifoldModel, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    match model.kind() {
        ModelKind::Interval => {
            let c = model.scale();
            let r = x[0].rem_euclid(2.0 * c);
            y[0] = if r > c { 2.0 * c - r } else { r };
        }
        ModelKind::Sphere2 => {}
        _ => y[0] = x[0].abs(),
    }
    y
}

/// Mirror image `x*` of a doubled-chart point.
pub fn mirror(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    y[0] = -y[0];
    y
}

fn is_flat_double(model: &ManifoldModel) -> bool {
    matches!(model.kind(), ModelKind::Interval | ModelKind::Halfspace)
}

/// One Euler-Maruyama step of `dX = ½ b dt + F dW` with `FFᵀ = g⁻¹`, on the double.
fn chart_step<R: Rng + ?Sized>(model: &ManifoldModel, x: &[f64], h: f64, pull: Option<&[f64]>, rng: &mut R) -> Result<Vec<f64>> {
    let chart = model.chart();
    let b = drift_b(chart, x)?;
    let f = orthonormal_frame(&chart.doubled_metric(x))?;
    let d = x.len();
    let dw: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) * h.sqrt()).collect();
    let mut y = x.to_vec();
    for i in 0..d {
        y[i] += 0.5 * b[i] * h;
        for (a, w) in dw.iter().enumerate() {
            y[i] += f[(i, a)] * w;
        }
        if let Some(p) = pull {
            y[i] += p[i] * h;
        }
    }
    Ok(y)
}

/// Reflecting Brownian motion (generator `½Δ`) on `model`, simulated on the
/// double from `x0 ∈ M` over `[0, t]` with `n` steps.
///
/// Flat doubles use exact Gaussian increments; curved charts use
/// Euler-Maruyama with the drift `½b` of the doubled metric. Local time comes
/// from the exact bridge law of each step's normal coordinate.
pub fn simulate_rbm<R: Rng + ?Sized>(model: &ManifoldModel, x0: &[f64], t: f64, n: usize, rng: &mut R) -> Result<PathSample> {
    check_steps(n)?;
    check_time(t)?;
    if !model.chart().contains(x0) {
        return Err(Error::ChartDomain(x0.to_vec()));
    }
    let h = t / n as f64;
    let mut times = Vec::with_capacity(n + 1);
    let mut coords = Vec::with_capacity((n + 1) * x0.len());
    let mut dl = Vec::with_capacity(n);
    times.push(0.0);
    coords.extend_from_slice(x0);
    let mut x = x0.to_vec();
    for k in 1..=n {
        let y = if is_flat_double(model) {
            x.iter()
                .map(|xi| xi + rng.sample::<f64, _>(StandardNormal) * h.sqrt())
                .collect()
        } else {
            chart_step(model, &x, h, None, rng)?
        };
        dl.push(step_local_time(model, x[0], y[0], h, rng));
        times.push(k as f64 * h);
        coords.extend_from_slice(&y);
        x = y;
    }
    PathSample::from_increments(times, x0.len(), coords, &dl)
}

/// Brownian bridge from `u` to `−u` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeSpec {
    pub u: f64,
    pub steps: usize,
}

impl BridgeSpec {
    pub fn new(u: f64, steps: usize) -> Result<Self> {
        if !(u >= 0.0 && u.is_finite()) {
            return Err(Error::Invalid(format!("bridge start must be ≥ 0, got {u}")));
        }
        check_steps(steps)?;
        Ok(BridgeSpec { u, steps })
    }
}

/// Grid values of a pinned Brownian bridge from `a` to `b` over `[0, t]`,
/// `a + W_s − (s/t)(W_t − (b − a))`, with the endpoint set exactly.
pub fn pinned_bridge<R: Rng + ?Sized>(a: f64, b: f64, t: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let h = t / n as f64;
    let mut w = Vec::with_capacity(n + 1);
    w.push(0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        acc += rng.sample::<f64, _>(StandardNormal) * h.sqrt();
        w.push(acc);
    }
    let wt = acc;
    let mut xs: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, wk)| {
            let s = k as f64 / n as f64;
            a + wk - s * (wt - (b - a))
        })
        .collect();
    xs[n] = b;
    xs
}

/// The bridge of `spec` with exact per-step local time at 0.
pub fn sample_bridge<R: Rng + ?Sized>(spec: &BridgeSpec, rng: &mut R) -> Result<PathSample> {
    let n = spec.steps;
    let xs = pinned_bridge(spec.u, -spec.u, 1.0, n, rng);
    let h = 1.0 / n as f64;
    let dl: Vec<f64> = xs
        .windows(2)
        .map(|w| bridge_local_time_increment(w[0], w[1], h, rng))
        .collect();
    let times = (0..=n).map(|k| k as f64 * h).collect();
    PathSample::from_increments(times, 1, xs, &dl)
}

/// Brownian bridge on the double from `x` to `y` over `[0, t]`.
///
/// Flat doubles are sampled exactly; on the circle the winding number is
/// drawn from its exact law first. Curved charts use a guided bridge, the
/// chart diffusion plus the pull `(y − X_s)/(t − s)`, which is exact only in
/// the flat limit.
pub fn sample_double_bridge<R: Rng + ?Sized>(
    model: &ManifoldModel,
    x: &[f64],
    y: &[f64],
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<PathSample> {
    check_steps(n)?;
    check_time(t)?;
    let d = model.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len().min(y.len()),
        });
    }
    let h = t / n as f64;
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let coords: Vec<f64> = match model.kind() {
        ModelKind::Halfspace => {
            let axes: Vec<Vec<f64>> = (0..d).map(|i| pinned_bridge(x[i], y[i], t, n, rng)).collect();
            (0..=n).flat_map(|k| axes.iter().map(move |a| a[k])).collect()
        }
        ModelKind::Interval => {
            let target = y[0] + circle_winding(model.scale(), t, x[0], y[0], rng);
            pinned_bridge(x[0], target, t, n, rng)
        }
        _ => {
            let mut pts = Vec::with_capacity((n + 1) * d);
            pts.extend_from_slice(x);
            let mut cur = x.to_vec();
            for k in 0..n {
                let rem = t - k as f64 * h;
                let pull: Vec<f64> = cur.iter().zip(y).map(|(a, b)| (b - a) / rem).collect();
                cur = if k + 1 == n { y.to_vec() } else { chart_step(model, &cur, h, Some(&pull), rng)? };
                pts.extend_from_slice(&cur);
            }
            pts
        }
    };
    let dl: Vec<f64> = (0..n)
        .map(|k| step_local_time(model, coords[k * d], coords[(k + 1) * d], h, rng))
        .collect();
    PathSample::from_increments(times, d, coords, &dl)
}

/// Final local time of a bridge from `x` to `y` over `[0, t]` on a flat
/// double, from its normal coordinate alone; `(hit, l_t)`.
pub fn flat_bridge_local_time<R: Rng + ?Sized>(
    model: &ManifoldModel,
    x: f64,
    y: f64,
    t: f64,
    n: usize,
    rng: &mut R,
) -> Result<(bool, f64)> {
    check_steps(n)?;
    check_time(t)?;
    let target = match model.kind() {
        ModelKind::Interval => y + circle_winding(model.scale(), t, x, y, rng),
        ModelKind::Halfspace => y,
        _ => {
            return Err(Error::Unsupported {
                model: model.name().into(),
                what: "exact bridges on its double",
            })
        }
    };
    let h = t / n as f64;
    let xs = pinned_bridge(x, target, t, n, rng);
    let mut hit = false;
    let mut l = 0.0;
    for w in xs.windows(2) {
        let inc = step_local_time(model, w[0], w[1], h, rng);
        hit |= inc > 0.0;
        l += inc;
    }
    Ok((hit, l))
}

/// Draws the lift `2ck` of the end point on the line covering the circle of
/// circumference `2c`, with probability proportional to `φ_t(y + 2ck − x)`.
fn circle_winding<R: Rng + ?Sized>(c: f64, t: f64, x: f64, y: f64, rng: &mut R) -> f64 {
    let period = 2.0 * c;
    let base = y - period * ((y - x) / period).round();
    let ks: Vec<i64> = (-6..=6).collect();
    let weights: Vec<f64> = ks.iter().map(|&k| gaussian(t, base + period * k as f64 - x)).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, w) in ks.iter().zip(&weights) {
        if u < *w {
            return base - y + period * *k as f64;
        }
        u -= w;
    }
    base - y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{Estimate, RngStream};

    #[test]
    fn too_coarse_is_rejected() {
        let m = ManifoldModel::new(ModelKind::Halfspace);
        let mut rng = RngStream::new(0, 0).rng();
        assert!(matches!(simulate_rbm(&m, &[0.0, 0.0], 1.0, 50, &mut rng), Err(Error::TooCoarse(50, 100))));
        assert!(BridgeSpec::new(0.5, 99).is_err());
    }

    #[test]
    fn bridge_endpoint_is_pinned() {
        let spec = BridgeSpec::new(0.7, 200).unwrap();
        let p = sample_bridge(&spec, &mut RngStream::new(3, 1).rng()).unwrap();
        assert_eq!(p.point(0), &[0.7]);
        assert_eq!(p.point(200), &[-0.7]);
        assert!(p.hits());
    }

    #[test]
    fn double_bridges_end_at_target() {
        let mut rng = RngStream::new(5, 0).rng();
        for (kind, x, y) in [
            (ModelKind::Halfspace, vec![0.1, 0.0], vec![-0.1, 0.0]),
            (ModelKind::Interval, vec![0.1], vec![-0.1]),
            (ModelKind::Sphere2, vec![0.0, 0.0], vec![0.0, 0.0]),
        ] {
            let m = ManifoldModel::new(kind);
            let p = sample_double_bridge(&m, &x, &y, 0.05, 200, &mut rng).unwrap();
            let end = p.point(p.steps());
            let period = if kind == ModelKind::Interval { 2.0 } else { f64::INFINITY };
            let gap = (end[0] - y[0]).abs();
            assert!(gap < 1e-12 || (gap % period).abs() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn projection_and_mirror() {
        let interval = ManifoldModel::new(ModelKind::Interval);
        assert!((project(&interval, &[1.3])[0] - 0.7).abs() < 1e-15);
        assert!((project(&interval, &[-0.2])[0] - 0.2).abs() < 1e-15);
        let disk = ManifoldModel::new(ModelKind::Disk);
        assert_eq!(project(&disk, &[-0.2, 0.4]), vec![0.2, 0.4]);
        assert_eq!(mirror(&[0.2, 0.4]), vec![-0.2, 0.4]);
    }

    #[test]
    fn curved_paths_run_on_the_double() {
        let disk = ManifoldModel::new(ModelKind::Disk);
        let p = simulate_rbm(&disk, &[0.05, 0.0], 0.01, 200, &mut RngStream::new(1, 2).rng()).unwrap();
        p.validate().unwrap();
        assert_eq!(p.points().count(), 201);
    }

    #[test]
    fn bridge_marginal_variance() {
        let spec = BridgeSpec::new(0.0, 100).unwrap();
        let mid: Vec<f64> = (0..20_000)
            .map(|i| sample_bridge(&spec, &mut RngStream::new(11, i).rng()).unwrap().point(50)[0])
            .collect();
        let m = Estimate::from_samples(&mid);
        assert!(m.mean.abs() < 4.0 * m.std_error);
        let var = mid.iter().map(|x| x * x).sum::<f64>() / mid.len() as f64;
        assert!((var / 0.25 - 1.0).abs() < 0.04);
    }
}
