//! The multiplicative functional `M_t` on `Λ*ℝ^d` carried by reflecting
//! Brownian motion, and Monte Carlo estimates of the heat supertrace built on it.
//!
//! Before the first boundary visit `dM = ½ M Ω dt`. From then on `M = Y + Z`
//! with a tangential part `dZ = M (−H dl + ½ Ω dt) Q` and a normal part that
//! restarts from `Z` at each boundary contact and is carried by `e(t_*, t) P`
//! in between.

use std::borrow::Cow;
use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{apply_curvature, extend_derivation, GradedOperator};
use crate::gbc::boundary_coefficient;
use crate::geometry::{parallel_transport, ManifoldModel, ModelKind};
use crate::quadrature::gauss_legendre_on;
use crate::stochastic::{
    derive_seed, flat_bridge_local_time, heat_kernel_double, loglog_slope, mirror, project, sample_double_bridge,
    Estimate, PathSample, RngStream, MOMENT_NODES, MOMENT_U_MAX,
};

/// Normal and tangential projections on `Λ*ℝ^d`, normal direction at index 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    /// Forms containing `dν`.
    pub p: GradedOperator,
    /// `I − P`.
    pub q: GradedOperator,
}

impl ProjectionPair {
    pub fn new(d: usize) -> Self {
        ProjectionPair {
            p: GradedOperator::normal_projection(d),
            q: GradedOperator::tangential_projection(d),
        }
    }
}

/// Pathwise state of the functional.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplicativeState {
    pub m: GradedOperator,
    /// Tangential part.
    pub z: GradedOperator,
    /// Normal part.
    pub y: GradedOperator,
    /// `Z_{t_*} e(t_*, t)`, the factor `Y` is read from after a boundary visit.
    pub w: GradedOperator,
    /// Grid index of the last boundary contact.
    pub last_exit: Option<usize>,
    pub hit: bool,
}

impl MultiplicativeState {
    pub fn initial(proj: &ProjectionPair) -> Self {
        let d = proj.p.dim();
        MultiplicativeState {
            m: GradedOperator::identity(d),
            z: proj.q.clone(),
            y: proj.p.clone(),
            w: GradedOperator::identity(d),
            last_exit: None,
            hit: false,
        }
    }

    /// `max |M − (Y + Z)|`.
    pub fn split_defect(&self) -> f64 {
        (&self.m - &(&self.y + &self.z)).max_abs()
    }
}

/// A field of graded operators over doubled-chart points.
pub type OperatorField<'a> = &'a (dyn Fn(&[f64]) -> Result<GradedOperator> + Sync);

/// `I + s·A`.
fn shifted_identity(a: &GradedOperator, s: f64) -> GradedOperator {
    let mut out = GradedOperator::identity(a.dim());
    out.add_scaled(a, s);
    out
}

/// Runs the functional along `path`, calling `observe(k, state)` after every
/// grid index `k` (including `k = 0`).
///
/// `omega` is evaluated at the left end of each step. `h` receives the
/// boundary point `(0, x̄)` under the step's left end and is only evaluated on
/// steps that collect local time.
pub fn evolve_m_with(
    path: &PathSample,
    omega: OperatorField,
    h: OperatorField,
    observe: impl FnMut(usize, &MultiplicativeState),
) -> Result<MultiplicativeState> {
    evolve_core(path, |x| omega(x).map(Cow::Owned), |x| h(x).map(Cow::Owned), observe)
}

fn evolve_core<'a>(
    path: &PathSample,
    omega: impl Fn(&[f64]) -> Result<Cow<'a, GradedOperator>>,
    h: impl Fn(&[f64]) -> Result<Cow<'a, GradedOperator>>,
    mut observe: impl FnMut(usize, &MultiplicativeState),
) -> Result<MultiplicativeState> {
    path.validate()?;
    let proj = ProjectionPair::new(path.dim);
    let mut s = MultiplicativeState::initial(&proj);
    observe(0, &s);
    for k in 1..=path.steps() {
        let dt = path.times[k] - path.times[k - 1];
        let dl = path.increment(k);
        let x = path.point(k - 1);
        let om = omega(x)?;
        if dl == 0.0 && path.first_hit != Some(k) && om.max_abs() == 0.0 {
            // Z carries a trailing Q, so Y = WP stays 0 and nothing moves
            observe(k, &s);
            continue;
        }
        let half_omega = om.scale(0.5 * dt);
        if !s.hit && path.first_hit != Some(k) {
            s.m = &s.m * &shifted_identity(&half_omega, 1.0);
            s.y = &s.m * &proj.p;
            s.z = &s.m * &proj.q;
        } else {
            if !s.hit {
                // Y jumps to 0 at the hitting time, Z is continuous.
                s.hit = true;
                s.m = s.z.clone();
                s.y = GradedOperator::zeros(path.dim);
            }
            if dl > 0.0 {
                let mut xb = x.to_vec();
                xb[0] = 0.0;
                let mut dchi = h(&xb)?.scale(-dl);
                dchi.add_scaled(&half_omega, 1.0);
                s.z = &s.z + &(&(&s.m * &dchi) * &proj.q);
                s.w = s.z.clone();
                s.y = GradedOperator::zeros(path.dim);
                s.m = s.z.clone();
                s.last_exit = Some(k);
            } else {
                s.z = &s.z + &(&(&s.m * &half_omega) * &proj.q);
                s.w = &s.w * &shifted_identity(&half_omega, 1.0);
                s.y = &s.w * &proj.p;
                s.m = &s.y + &s.z;
            }
        }
        observe(k, &s);
    }
    Ok(s)
}

/// Final state of the functional along `path`.
pub fn evolve_m(path: &PathSample, omega: OperatorField, h: OperatorField) -> Result<MultiplicativeState> {
    evolve_m_with(path, omega, h, |_, _| {})
}

/// Curvature operator `Ω` and second fundamental form `H` (as derivations on
/// `Λ*ℝ^d`) of a registered model. Every registered model is homogeneous
/// along its boundary and has constant curvature, so both are computed once.
#[derive(Debug, Clone)]
pub struct ModelFields {
    pub omega: GradedOperator,
    pub h: GradedOperator,
}

impl ModelFields {
    pub fn new(model: &ManifoldModel) -> Result<Self> {
        let d = model.dim();
        let x = vec![0.0; d];
        let omega = apply_curvature(&model.curvature_at(&x)?.action()?);
        let h = if model.has_boundary() {
            extend_derivation(&model.second_fundamental_form_at(&x[1..])?.ambient()?)
        } else {
            GradedOperator::zeros(d)
        };
        Ok(ModelFields { omega, h })
    }

    pub fn evolve(&self, path: &PathSample) -> Result<MultiplicativeState> {
        evolve_core(path, |_| Ok(Cow::Borrowed(&self.omega)), |_| Ok(Cow::Borrowed(&self.h)), |_, _| {})
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionTerm {
    /// Number of `Ω dt` integrations.
    pub p: usize,
    /// Number of `H dl` integrations.
    pub q: usize,
    #[serde(skip)]
    pub value: GradedOperator,
}

impl ExpansionTerm {
    /// Half-integer order `p + q/2`.
    pub fn order(&self) -> f64 {
        self.p as f64 + 0.5 * self.q as f64
    }

    pub fn supertrace(&self) -> f64 {
        self.value.supertrace()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Frozen-coefficient expansion terms
/// `m_{p,q} = (−1)^q 2^{−p} (t^p l^q / p! q!) Ω₀^p H₀^q Q` for all `2p + q ≤ max_weight`,
/// ordered by `(p + q/2, p)`. Terms carrying `P` are dropped.
pub fn expansion_terms(
    t: f64,
    l: f64,
    omega0: &GradedOperator,
    h0: &GradedOperator,
    max_weight: usize,
) -> Result<Vec<ExpansionTerm>> {
    let d = omega0.dim();
    if h0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h0.dim(),
        });
    }
    let q_proj = GradedOperator::tangential_projection(d);
    let mut out = Vec::new();
    for weight in 0..=max_weight {
        for p in (0..=weight / 2).rev() {
            let q = weight - 2 * p;
            let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
            let c = sign * 0.5f64.powi(p as i32) * t.powi(p as i32) * l.powi(q as i32) / (factorial(p) * factorial(q));
            let value = (&(&omega0.pow(p) * &h0.pow(q)) * &q_proj).scale(c);
            out.push(ExpansionTerm { p, q, value });
        }
    }
    out.sort_by(|a, b| (a.order(), a.p).partial_cmp(&(b.order(), b.p)).expect("finite orders"));
    Ok(out)
}

/// Monte Carlo estimate of the two parts of the heat supertrace at `x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupertraceEstimate {
    pub t: f64,
    pub x: Vec<f64>,
    /// `q(t,x,x) E_{t;x,x}[str(M_t u_t⁻¹); T > t]`.
    pub interior: Estimate,
    /// `2 q(t,x,x*) E_{t;x,x*}[str(M_t u_t⁻¹)]`.
    pub boundary: Estimate,
}

impl SupertraceEstimate {
    pub fn total(&self) -> f64 {
        self.interior.mean + self.boundary.mean
    }
}

/// `u_t⁻¹` acting on forms, from parallel transport along the path projected
/// to `M`. Flat charts transport trivially.
fn transport_on_forms(model: &ManifoldModel, path: &PathSample) -> Result<Option<GradedOperator>> {
    if matches!(model.kind(), ModelKind::Interval | ModelKind::Halfspace) {
        return Ok(None);
    }
    let pts: Vec<Vec<f64>> = path.points().map(|x| project(model, x)).collect();
    let u_inv = parallel_transport(model.chart(), &pts)?;
    Ok(Some(GradedOperator::exterior_power(&u_inv)))
}

/// `str(M_t u_t⁻¹)` along one path.
pub fn path_supertrace(model: &ManifoldModel, fields: &ModelFields, path: &PathSample) -> Result<f64> {
    let m = fields.evolve(path)?.m;
    Ok(match transport_on_forms(model, path)? {
        Some(u) => (&m * &u).supertrace(),
        None => m.supertrace(),
    })
}

fn check_paths(paths: usize) -> Result<()> {
    if paths == 0 {
        Err(Error::Invalid("at least one path is required".into()))
    } else {
        Ok(())
    }
}

/// Estimates the interior and boundary parts of `str p(t, x, x)` from bridges
/// on the double: loops at `x` that avoid the boundary, and bridges from `x`
/// to its mirror image. Requires a closed-form kernel on the double.
pub fn mc_supertrace(
    model: &ManifoldModel,
    t: f64,
    x: &[f64],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<SupertraceEstimate> {
    check_paths(paths)?;
    let fields = ModelFields::new(model)?;
    let qxx = heat_kernel_double(model, t, x, x)?;
    let loops: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(derive_seed(seed, 1), j).rng();
            let path = sample_double_bridge(model, x, x, t, steps, &mut rng)?;
            if path.hits() {
                Ok(0.0)
            } else {
                path_supertrace(model, &fields, &path)
            }
        })
        .collect::<Result<_>>()?;
    let interior = Estimate::from_samples(&loops).scaled(qxx);
    let boundary = if model.has_boundary() {
        let xs = mirror(x);
        let qxs = heat_kernel_double(model, t, x, &xs)?;
        let crossing: Vec<f64> = (0..paths as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = RngStream::new(derive_seed(seed, 2), j).rng();
                let path = sample_double_bridge(model, x, &xs, t, steps, &mut rng)?;
                path_supertrace(model, &fields, &path)
            })
            .collect::<Result<_>>()?;
        Estimate::from_samples(&crossing).scaled(2.0 * qxs)
    } else {
        Estimate {
            mean: 0.0,
            std_error: 0.0,
            n: 0,
        }
    };
    Ok(SupertraceEstimate {
        t,
        x: x.to_vec(),
        interior,
        boundary,
    })
}

/// `∫₀^c 2 q(t, x, x*) dx` on the interval, by quadrature of the image sum.
/// It equals 1 for every `t`.
pub fn interval_boundary_integral(model: &ManifoldModel, t: f64) -> Result<f64> {
    if model.kind() != ModelKind::Interval {
        return Err(Error::Unsupported {
            model: model.name().into(),
            what: "the interval image-sum integral",
        });
    }
    let (xs, ws) = gauss_legendre_on(400, 0.0, model.scale());
    xs.iter()
        .zip(&ws)
        .map(|(x, w)| Ok(w * 2.0 * heat_kernel_double(model, t, &[*x], &[-*x])?))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McKeanSingerIntegral {
    pub t: f64,
    /// `∫ interior part dx`.
    pub interior: Estimate,
    /// `∫ boundary part dx`.
    pub boundary: Estimate,
    /// Image-sum quadrature of the boundary part.
    pub boundary_closed_form: f64,
    /// Whether `str(M u⁻¹) = 1` held exactly on every hitting path.
    pub pathwise_unit: bool,
}

/// `∫_M str p(t, x, x) dx` on the interval, with the start point drawn
/// uniformly for each path.
pub fn mc_mckean_singer(model: &ManifoldModel, t: f64, paths: usize, steps: usize, seed: u64) -> Result<McKeanSingerIntegral> {
    check_paths(paths)?;
    let boundary_closed_form = interval_boundary_integral(model, t)?;
    let c = model.scale();
    let fields = ModelFields::new(model)?;
    // per path: (interior sample, boundary sample, hitting paths had str = 1)
    let rows: Vec<(f64, f64, bool)> = (0..paths as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = RngStream::new(seed, j).rng();
            let x = vec![c * rng.random::<f64>()];
            let xs = mirror(&x);
            let lp = sample_double_bridge(model, &x, &x, t, steps, &mut rng)?;
            let cp = sample_double_bridge(model, &x, &xs, t, steps, &mut rng)?;
            let (sl, sc) = (path_supertrace(model, &fields, &lp)?, path_supertrace(model, &fields, &cp)?);
            let unit = (!lp.hits() || sl == 1.0) && (!cp.hits() || sc == 1.0);
            let interior = if lp.hits() { 0.0 } else { sl * heat_kernel_double(model, t, &x, &x)? };
            let boundary = 2.0 * sc * heat_kernel_double(model, t, &x, &xs)?;
            Ok((c * interior, c * boundary, unit))
        })
        .collect::<Result<_>>()?;
    let interior: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let boundary: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(McKeanSingerIntegral {
        t,
        interior: Estimate::from_samples(&interior),
        boundary: Estimate::from_samples(&boundary),
        boundary_closed_form,
        pathwise_unit: rows.iter().all(|r| r.2),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitPoint {
    pub t: f64,
    pub estimate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLimit {
    pub p: usize,
    pub q: usize,
    pub points: Vec<LimitPoint>,
    /// The limit as `t → 0`: the boundary density coefficient times
    /// `str(Ω^p H^q Q)` on the line `2p + q = d − 1`, zero above it.
    pub closed_form: f64,
}

/// `2 / ((2π)^{d/2} t^{(d−1)/2}) ∫₀^∞ e^{−2u²} E[str m_{p,q}(t)] du` at the
/// boundary point `x̄`, for each `t` in `t_grid`. The expectation is over
/// bridges on the double from `(√t u, x̄)` to its mirror image; the outer
/// integral uses the same rule as the local-time moments.
pub fn boundary_limit_coefficient(
    model: &ManifoldModel,
    xbar: &[f64],
    p: usize,
    q: usize,
    t_grid: &[f64],
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<BoundaryLimit> {
    check_paths(paths)?;
    let d = model.dim();
    if !model.has_boundary() {
        return Err(Error::Unsupported {
            model: model.name().into(),
            what: "a boundary expansion",
        });
    }
    if 2 * p + q + 1 < d {
        return Err(Error::OffLine { p, q, line: d - 1 });
    }
    let fields = ModelFields::new(model)?;
    let weight = 2 * p + q;
    let term = expansion_terms(1.0, 1.0, &fields.omega, &fields.h, weight)?
        .into_iter()
        .find(|m| m.p == p && m.q == q)
        .expect("term in range");
    // str m_{p,q}(t) = str_unit · t^p · l^q
    let str_unit = term.supertrace();
    let closed_form = if weight + 1 == d {
        let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
        let bare = sign * str_unit * 2f64.powi(p as i32) * factorial(p) * factorial(q);
        boundary_coefficient(d, p, q)? * bare
    } else {
        0.0
    };
    let (us, ws) = gauss_legendre_on(MOMENT_NODES, 0.0, MOMENT_U_MAX);
    let per_node = (paths / MOMENT_NODES).max(1);
    let mut points = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let prefactor = 2.0 / ((2.0 * PI).powf(d as f64 / 2.0) * t.powf((d - 1) as f64 / 2.0));
        let sub = derive_seed(seed, i as u64);
        let mut mean = 0.0;
        let mut var = 0.0;
        let mut n = 0;
        for (node, (&u, &w)) in us.iter().zip(&ws).enumerate() {
            let mut x = vec![t.sqrt() * u];
            x.extend_from_slice(xbar);
            if !model.chart().contains(&x) {
                continue;
            }
            let xs = mirror(&x);
            let samples: Vec<f64> = (0..per_node as u64)
                .into_par_iter()
                .map(|j| {
                    let mut rng = RngStream::new(sub, (node * per_node) as u64 + j).rng();
                    let l = if matches!(model.kind(), ModelKind::Interval | ModelKind::Halfspace) {
                        flat_bridge_local_time(model, x[0], xs[0], t, steps, &mut rng)?.1
                    } else {
                        sample_double_bridge(model, &x, &xs, t, steps, &mut rng)?.final_local_time()
                    };
                    Ok(str_unit * t.powi(p as i32) * l.powi(q as i32))
                })
                .collect::<Result<_>>()?;
            let e = Estimate::from_samples(&samples);
            let c = prefactor * w * (-2.0 * u * u).exp();
            mean += c * e.mean;
            var += (c * e.std_error).powi(2);
            n += e.n;
        }
        points.push(LimitPoint {
            t,
            estimate: Estimate {
                mean,
                std_error: var.sqrt(),
                n,
            },
        });
    }
    Ok(BoundaryLimit {
        p,
        q,
        points,
        closed_form,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportMoments {
    pub model: String,
    /// Power `N` in `E‖u_t⁻¹ − I‖^N`.
    pub power: u32,
    pub points: Vec<LimitPoint>,
    pub slope: f64,
}

/// `E‖u_t⁻¹ − I‖^N` (Frobenius norm) over bridge loops at `x` for each `t`,
/// with its log-log slope in `t`. `u_t` is parallel transport along the loop
/// projected to `M`.
pub fn parallel_correction_moments(
    model: &ManifoldModel,
    x: &[f64],
    t_grid: &[f64],
    power: u32,
    paths: usize,
    steps: usize,
    seed: u64,
) -> Result<TransportMoments> {
    check_paths(paths)?;
    let d = model.dim();
    let mut points = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        let sub = derive_seed(seed, i as u64);
        let samples: Vec<f64> = (0..paths as u64)
            .into_par_iter()
            .map(|j| {
                let mut rng = RngStream::new(sub, j).rng();
                let path = sample_double_bridge(model, x, x, t, steps, &mut rng)?;
                let pts: Vec<Vec<f64>> = path.points().map(|y| project(model, y)).collect();
                let u = parallel_transport(model.chart(), &pts)?;
                let dev = (u.matrix() - nalgebra::DMatrix::<f64>::identity(d, d)).norm();
                Ok(dev.powi(power as i32))
            })
            .collect::<Result<_>>()?;
        points.push(LimitPoint {
            t,
            estimate: Estimate::from_samples(&samples),
        });
    }
    let ts: Vec<f64> = points.iter().map(|p| p.t).collect();
    let ms: Vec<f64> = points.iter().map(|p| p.estimate.mean).collect();
    Ok(TransportMoments {
        model: model.name().into(),
        power,
        slope: loglog_slope(&ts, &ms),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::Endomorphism;
    use crate::stochastic::{sample_bridge, simulate_rbm, BridgeSpec};
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;

    fn zero_field(d: usize) -> impl Fn(&[f64]) -> Result<GradedOperator> + Sync {
        move |_: &[f64]| Ok(GradedOperator::zeros(d))
    }

    fn line_path(xs: &[f64], dl: &[f64]) -> PathSample {
        let times = (0..xs.len()).map(|k| k as f64 * 0.01).collect();
        PathSample::from_increments(times, 1, xs.to_vec(), dl).unwrap()
    }

    #[test]
    fn free_path_keeps_identity() {
        let p = line_path(&[0.5, 0.6, 0.4], &[0.0, 0.0]);
        let z = zero_field(1);
        let s = evolve_m(&p, &z, &z).unwrap();
        assert_eq!(s.m, GradedOperator::identity(1));
        assert_eq!(s.m.supertrace(), 0.0);
    }

    #[test]
    fn hitting_path_ends_at_q() {
        let p = line_path(&[0.1, -0.05, 0.2, 0.3], &[0.0, 0.01, 0.0]);
        let z = zero_field(1);
        let s = evolve_m(&p, &z, &z).unwrap();
        assert_eq!(s.m, GradedOperator::tangential_projection(1));
        assert_eq!(s.m.supertrace(), 1.0);
    }

    #[test]
    fn y_vanishes_at_hit_and_z_is_continuous() {
        let p = line_path(&[0.1, 0.05, -0.05, 0.2], &[0.0, 0.01, 0.0]);
        let om = |_: &[f64]| Ok(GradedOperator::identity(1).scale(0.3));
        let z = zero_field(1);
        let mut states = Vec::new();
        evolve_m_with(&p, &om, &z, |_, s| states.push(s.clone())).unwrap();
        let before = &states[1];
        let at = &states[2];
        assert_eq!(at.y, GradedOperator::zeros(1));
        // no H and the Q-part of ½Ω on Λ⁰: Z moves only by ½Ω Δt
        let expected = &before.z + &(&(&before.z * &GradedOperator::identity(1).scale(0.15 * 0.01)) * &GradedOperator::tangential_projection(1));
        assert!((&at.z - &expected).max_abs() < 1e-15);
    }

    #[test]
    fn non_monotone_local_time_is_rejected() {
        let mut p = line_path(&[0.1, -0.05, 0.2], &[0.01, 0.0]);
        p.local_time[2] = 0.0;
        let z = zero_field(1);
        assert!(matches!(evolve_m(&p, &z, &z), Err(Error::LocalTimeDecreasing(2))));
    }

    #[test]
    fn tangential_entry_decays_exponentially() {
        let model = ManifoldModel::new(ModelKind::Halfspace);
        let hval = 0.7;
        let h = extend_derivation(&Endomorphism::diagonal(&[0.0, hval]).unwrap());
        let hf = move |_: &[f64]| Ok(h.clone());
        let z = zero_field(2);
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..20 {
            let p = simulate_rbm(&model, &[0.05, 0.0], 0.5, 2000, &mut rng).unwrap();
            if !p.hits() {
                continue;
            }
            let s = evolve_m(&p, &z, &hf).unwrap();
            // Λ¹ basis {e0, e1}: the tangential entry is index 1
            let got = s.z.block(1)[(1, 1)];
            let exact = (-hval * p.final_local_time()).exp();
            assert!((got - exact).abs() < 5e-3, "{got} vs {exact}");
        }
    }

    #[test]
    fn split_holds_along_paths() {
        let model = ManifoldModel::new(ModelKind::Halfspace);
        let mut rng = RngStream::new(5, 0).rng();
        let om_m = DMatrix::from_row_slice(2, 2, &[0.1, 0.4, -0.3, 0.2]);
        let omega = extend_derivation(&Endomorphism::new(om_m).unwrap());
        let h = extend_derivation(&Endomorphism::diagonal(&[0.0, 1.3]).unwrap());
        let (of, hf) = (move |_: &[f64]| Ok(omega.clone()), move |_: &[f64]| Ok(h.clone()));
        for _ in 0..10 {
            let p = simulate_rbm(&model, &[0.1, 0.0], 0.3, 500, &mut rng).unwrap();
            let mut worst = 0.0f64;
            evolve_m_with(&p, &of, &hf, |k, s| worst = worst.max(s.split_defect() / (k.max(1) as f64))).unwrap();
            assert!(worst < 1e-12);
        }
    }

    #[test]
    fn free_segments_multiply() {
        let p = line_path(&[0.5, 0.6, 0.55, 0.7, 0.65], &[0.0; 4]);
        let of = |x: &[f64]| Ok(extend_derivation(&Endomorphism::from_row_slice(1, &[x[0]]).unwrap()));
        let z = zero_field(1);
        let whole = evolve_m(&p, &of, &z).unwrap().m;
        let head = evolve_m(&line_path(&p.coords[..3], &[0.0; 2]), &of, &z).unwrap().m;
        let tail = evolve_m(&line_path(&p.coords[2..], &[0.0; 2]), &of, &z).unwrap().m;
        assert!((&whole - &(&head * &tail)).max_abs() < 1e-14);
    }

    #[test]
    fn leading_term_is_q() {
        let omega = GradedOperator::identity(2);
        let h = GradedOperator::identity(2);
        let terms = expansion_terms(0.3, 0.2, &omega, &h, 3).unwrap();
        assert_eq!((terms[0].p, terms[0].q), (0, 0));
        assert_eq!(terms[0].value, GradedOperator::tangential_projection(2));
        assert_eq!(terms.len(), 6);
    }

    #[test]
    fn expansion_matches_product_expansion() {
        // oracle: expand ∏(I + ½Ω Δt − H Δl) by degree, for commuting frozen
        // coefficients and local time spread evenly over the steps
        let omega = extend_derivation(&Endomorphism::diagonal(&[0.3, -0.8, 0.5]).unwrap());
        let h = extend_derivation(&Endomorphism::diagonal(&[0.0, 1.1, 0.4]).unwrap());
        let (t, l, n) = (0.7, 0.4, 20000);
        let (dt, dl) = (t / n as f64, l / n as f64);
        let maxw = 4;
        let mut c = vec![vec![GradedOperator::zeros(3); maxw + 1]; maxw + 1];
        c[0][0] = GradedOperator::identity(3);
        let half = omega.scale(0.5 * dt);
        let neg_h = h.scale(-dl);
        for _ in 0..n {
            for p in (0..=maxw / 2).rev() {
                for q in (0..=maxw - 2 * p).rev() {
                    let mut next = c[p][q].clone();
                    if p > 0 {
                        next.add_scaled(&(&c[p - 1][q] * &half), 1.0);
                    }
                    if q > 0 {
                        next.add_scaled(&(&c[p][q - 1] * &neg_h), 1.0);
                    }
                    c[p][q] = next;
                }
            }
        }
        let qp = GradedOperator::tangential_projection(3);
        for term in expansion_terms(t, l, &omega, &h, maxw).unwrap() {
            let dp = &c[term.p][term.q] * &qp;
            assert!((&dp - &term.value).max_abs() < 1e-3, "({}, {})", term.p, term.q);
        }
    }

    #[test]
    fn short_terms_have_no_supertrace() {
        for d in 2..=5 {
            let mut rng = RngStream::new(d as u64, 0).rng();
            let mut rand_mat = || DMatrix::from_fn(d, d, |_, _| rng.random::<f64>() - 0.5);
            let omega = &extend_derivation(&Endomorphism::new(rand_mat()).unwrap())
                * &extend_derivation(&Endomorphism::new(rand_mat()).unwrap());
            let hm = rand_mat();
            let h = extend_derivation(&Endomorphism::new(&hm + hm.transpose()).unwrap());
            for term in expansion_terms(0.5, 0.3, &omega, &h, d - 2).unwrap() {
                assert!(term.supertrace().abs() < 1e-9, "d={d} ({}, {})", term.p, term.q);
            }
        }
    }

    #[test]
    fn disk_terms_cancel_in_situ() {
        let fields = ModelFields::new(&ManifoldModel::new(ModelKind::Disk)).unwrap();
        let terms = expansion_terms(0.1, 0.2, &fields.omega, &fields.h, 0).unwrap();
        assert_eq!(terms[0].supertrace(), 0.0);
    }

    #[test]
    fn limit_oracle_agrees_with_boundary_coefficient() {
        // independent route: prefactor, simplex volume and the closed-form
        // local-time moment, with str(Ω^p H^q Q) = 1
        let moment = crate::stochastic::moment_closed_form;
        for d in 1..=6 {
            for (p, q) in crate::gbc::boundary_terms(d) {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                let via_moment = 2.0 * (2.0 * PI).powf(-((d - 1) as f64) / 2.0) * sign * 0.5f64.powi(p as i32)
                    * moment(q)
                    / (factorial(p) * factorial(q));
                assert_abs_diff_eq!(via_moment, boundary_coefficient(d, p, q).unwrap(), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn interval_image_sum_is_one() {
        let m = ManifoldModel::new(ModelKind::Interval);
        for t in [0.01, 0.05, 0.3] {
            assert_abs_diff_eq!(interval_boundary_integral(&m, t).unwrap(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn interval_interior_part_vanishes() {
        let m = ManifoldModel::new(ModelKind::Interval);
        let s = mc_supertrace(&m, 0.05, &[0.1], 500, 200, 1).unwrap();
        assert_eq!(s.interior.mean, 0.0);
        let exact = 2.0 * heat_kernel_double(&m, 0.05, &[0.1], &[-0.1]).unwrap();
        assert_abs_diff_eq!(s.boundary.mean, exact, epsilon = 1e-12);
    }

    #[test]
    fn flat_transport_moments_vanish() {
        let m = ManifoldModel::new(ModelKind::Halfspace);
        let r = parallel_correction_moments(&m, &[0.2, 0.0], &[0.1, 0.05], 1, 50, 200, 1).unwrap();
        assert!(r.points.iter().all(|p| p.estimate.mean == 0.0));
    }

    #[test]
    fn bridge_spec_paths_feed_the_functional() {
        let spec = BridgeSpec::new(0.3, 200).unwrap();
        let p = sample_bridge(&spec, &mut RngStream::new(9, 0).rng()).unwrap();
        let z = zero_field(1);
        assert_eq!(evolve_m(&p, &z, &z).unwrap().m.supertrace(), 1.0);
    }
}
