use rand::Rng;

use crate::error::{Error, Result};

/// A discretized trajectory on the doubled manifold.
///
/// Points are stored flat, `dim` coordinates per grid index; coordinate 0 is
/// the signed normal coordinate. For the interval it is a point of the line
/// covering the circle of circumference 2, where every integer is a boundary
/// point. `local_time[k]` is the boundary local time accumulated up to
/// `times[k]`. Step `k` is the interval `(times[k-1], times[k]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub dim: usize,
    pub coords: Vec<f64>,
    pub local_time: Vec<f64>,
    /// First grid index `k` whose step touched the boundary.
    pub first_hit: Option<usize>,
    /// For each `k`, the last index `j ≤ k` whose step touched the boundary.
    pub last_exit: Vec<Option<usize>>,
}

impl PathSample {
    /// Assembles a path from per-step local-time increments (`dl[k-1]` for step `k`).
    pub fn from_increments(times: Vec<f64>, dim: usize, coords: Vec<f64>, dl: &[f64]) -> Result<Self> {
        let n = times.len();
        if dim == 0 || coords.len() != n * dim || dl.len() + 1 != n {
            return Err(Error::DimensionMismatch {
                expected: n * dim,
                found: coords.len(),
            });
        }
        let mut local_time = Vec::with_capacity(n);
        let mut last_exit = Vec::with_capacity(n);
        let mut first_hit = None;
        let mut acc = 0.0;
        let mut last = None;
        local_time.push(0.0);
        last_exit.push(None);
        for (k, &inc) in dl.iter().enumerate() {
            if !(inc >= 0.0) {
                return Err(Error::LocalTimeDecreasing(k + 1));
            }
            if inc > 0.0 {
                acc += inc;
                last = Some(k + 1);
                first_hit.get_or_insert(k + 1);
            }
            local_time.push(acc);
            last_exit.push(last);
        }
        Ok(PathSample {
            times,
            dim,
            coords,
            local_time,
            first_hit,
            last_exit,
        })
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty path")
    }

    pub fn final_local_time(&self) -> f64 {
        *self.local_time.last().expect("non-empty path")
    }

    /// Local time gained in step `k` (`1 ≤ k ≤ steps`).
    pub fn increment(&self, k: usize) -> f64 {
        self.local_time[k] - self.local_time[k - 1]
    }

    pub fn hits(&self) -> bool {
        self.first_hit.is_some()
    }

    /// Checks that local time never decreases.
    pub fn validate(&self) -> Result<()> {
        for k in 1..self.local_time.len() {
            if self.local_time[k] < self.local_time[k - 1] {
                return Err(Error::LocalTimeDecreasing(k));
            }
        }
        Ok(())
    }

    /// The point at grid index `k`.
    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    /// Normal coordinates, one per grid point.
    pub fn normal_component(&self) -> Vec<f64> {
        self.coords.iter().step_by(self.dim).copied().collect()
    }
}

/// Mirrors every position from the first hit on (`x¹ ↦ −x¹`). Local time and
/// hitting bookkeeping are unchanged, so applying the map twice is the identity.
/// On the interval's circle `−y` is the mirror image for both boundary points.
pub fn reflect_path(path: &PathSample) -> PathSample {
    let mut out = path.clone();
    if let Some(k) = path.first_hit {
        for x in out.coords[k * path.dim..].iter_mut().step_by(path.dim) {
            *x = -*x;
        }
    }
    out
}

/// Boundary local time collected by a Brownian bridge from `a` to `b` over a
/// time step `h`, sampled exactly from
/// `P(L > y) = exp(−((|a| + |b| + y)² − (b − a)²) / 2h)`.
///
/// The result is positive exactly when the bridge touches 0. Steps on one
/// side of 0 with `2|a||b|/h > 50` are treated as boundary-free without
/// consuming randomness.
pub fn bridge_local_time_increment<R: Rng + ?Sized>(a: f64, b: f64, h: f64, rng: &mut R) -> f64 {
    if a * b > 0.0 && 2.0 * a * b / h > 50.0 {
        return 0.0;
    }
    let u: f64 = 1.0 - rng.random::<f64>();
    let y = ((b - a).powi(2) - 2.0 * h * u.ln()).sqrt() - a.abs() - b.abs();
    y.max(0.0)
}

/// `(1/2ε) ∫ 1{|x| < ε} ds` with trapezoid weighting on a uniform grid of step `h`.
pub fn occupation_local_time(xs: &[f64], h: f64, eps: f64) -> f64 {
    let inside = |x: f64| if x.abs() < eps { 1.0 } else { 0.0 };
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let interior: f64 = xs[1..n - 1].iter().map(|&x| inside(x)).sum();
    let occ = h * (interior + 0.5 * (inside(xs[0]) + inside(xs[n - 1])));
    occ / (2.0 * eps)
}

/// Width factor of the occupation window, `ε = EPS_FACTOR · √h`.
pub const EPS_FACTOR: f64 = 0.5;

/// Richardson-combined `q`-th moment contribution of one path on a uniform grid
/// of step `h`: occupation estimates at steps `h` and `2h` (every other
/// point), each with `ε = ½√step`, combined as `(√2 m_h − m_{2h})/(√2 − 1)`.
///
/// The bias of the occupation estimator is of order `√step`, so the
/// combination cancels it at the level of moments.
pub fn richardson_moment(xs: &[f64], h: f64, q: u32) -> f64 {
    assert!(xs.len() % 2 == 1, "Richardson needs an even number of steps");
    let fine = occupation_local_time(xs, h, EPS_FACTOR * h.sqrt());
    let coarse_pts: Vec<f64> = xs.iter().step_by(2).copied().collect();
    let coarse = occupation_local_time(&coarse_pts, 2.0 * h, EPS_FACTOR * (2.0 * h).sqrt());
    let r = std::f64::consts::SQRT_2;
    (r * fine.powi(q as i32) - coarse.powi(q as i32)) / (r - 1.0)
}

/// The Richardson local-time estimate of a one-dimensional path on a uniform grid.
pub fn local_time_bridge(path: &PathSample) -> f64 {
    let h = path.times[1] - path.times[0];
    richardson_moment(&path.normal_component(), h, 1)
}

/// Local time from the number of downcrossings of 0, `L ≈ D √(2πh)`.
pub fn downcrossing_local_time(xs: &[f64], h: f64) -> f64 {
    let down = xs.windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
    down as f64 * (2.0 * std::f64::consts::PI * h).sqrt()
}

/// Discrete Skorokhod reflection at 0 of the walk `x0 + Σ increments`: returns
/// the running local time `max(0, −min_k(x0 + W_k))`.
pub fn skorokhod_local_time(x0: f64, increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut w = x0;
    let mut l = 0.0f64;
    out.push(0.0);
    for dw in increments {
        w += dw;
        l = l.max(-w);
        out.push(l);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::RngStream;

    fn path(xs: &[f64], dl: &[f64]) -> PathSample {
        let times = (0..xs.len()).map(|k| k as f64 * 0.01).collect();
        let coords = xs.iter().flat_map(|&x| [x, 0.3]).collect();
        PathSample::from_increments(times, 2, coords, dl).unwrap()
    }

    #[test]
    fn bookkeeping() {
        let p = path(&[0.3, 0.1, -0.05, 0.2, 0.4], &[0.0, 0.02, 0.0, 0.0]);
        assert_eq!(p.first_hit, Some(2));
        assert_eq!(p.last_exit, vec![None, None, Some(2), Some(2), Some(2)]);
        assert_eq!(p.final_local_time(), 0.02);
        assert!(matches!(
            PathSample::from_increments(vec![0.0, 1.0], 1, vec![0.0, 0.0], &[-1.0]),
            Err(Error::LocalTimeDecreasing(1))
        ));
    }

    #[test]
    fn reflection_is_an_involution() {
        let p = path(&[0.3, 0.1, -0.05, 0.2, 0.4], &[0.0, 0.02, 0.0, 0.0]);
        let r = reflect_path(&p);
        assert_eq!(r.point(4), &[-0.4, 0.3]);
        assert_eq!(r.point(1), &[0.1, 0.3]);
        assert_eq!(r.first_hit, p.first_hit);
        assert_eq!(reflect_path(&r), p);
        let free = path(&[0.3, 0.4], &[0.0]);
        assert_eq!(reflect_path(&free), free);
    }

    #[test]
    fn increment_is_zero_far_from_the_boundary() {
        let mut rng = RngStream::new(1, 0).rng();
        assert_eq!(bridge_local_time_increment(1.0, 1.0, 0.001, &mut rng), 0.0);
        assert!(bridge_local_time_increment(0.01, -0.01, 0.001, &mut rng) > 0.0);
    }

    #[test]
    fn positive_path_has_no_occupation() {
        let xs = vec![1.0; 101];
        assert_eq!(occupation_local_time(&xs, 0.01, 0.05), 0.0);
        assert_eq!(richardson_moment(&xs, 0.01, 1), 0.0);
        assert_eq!(downcrossing_local_time(&xs, 0.01), 0.0);
    }

    #[test]
    fn skorokhod_is_running_minimum() {
        let l = skorokhod_local_time(0.1, &[-0.3, 0.1, -0.05, 0.5]);
        assert_eq!(l.len(), 5);
        assert!((l[1] - 0.2).abs() < 1e-15);
        assert!((l[3] - 0.2).abs() < 1e-15);
        assert!((l[4] - 0.2).abs() < 1e-15);
    }
}
