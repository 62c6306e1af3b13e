use std::f64::consts::PI;

use rbm_gbc::exterior::patodi_suite;
use rbm_gbc::feynman_kac::{boundary_limit_coefficient, mc_mckean_singer, mc_supertrace, parallel_correction_moments};
use rbm_gbc::gbc::integrate_euler_characteristic;
use rbm_gbc::geometry::{ManifoldModel, ModelKind};
use rbm_gbc::stochastic::{local_time_scaling_checks, moment_integrals, reflection_identity, scaled_bridge_convergence};
use serde_json::json;

use crate::config::{Experiment, ExperimentConfig, ALL_MODELS};
use crate::output::{point_cell, Table};
use crate::{Check, CliError, Outcome};

/// Interval Euler characteristic: boundary points only, so exact up to rounding.
pub const GBC_EXACT: f64 = 1e-12;
pub const GBC_SURFACE: f64 = 1e-6;
pub const GBC_BALL: f64 = 1e-4;
pub const MOMENT_REL: f64 = 0.02;
pub const MOMENT_REL_HIGH: f64 = 0.03;
pub const PATODI_TOL: f64 = 1e-9;
pub const Z_MAX: f64 = 3.0;
pub const MCKEAN_CLOSED_TOL: f64 = 1e-6;
pub const MCKEAN_MC_REL: f64 = 0.05;
/// Interior supertrace on the sphere against the Euler density, at finite t.
pub const SPHERE_DENSITY_REL: f64 = 0.1;
pub const KS_FINAL: f64 = 0.02;
pub const TRANSPORT_REL: f64 = 0.15;
pub const LIMIT_REL: f64 = 0.1;

pub fn run_experiment(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    match c.experiment {
        Experiment::VerifyGbc => verify_gbc(c),
        Experiment::Moments => moments(c),
        Experiment::MckeanSinger => mckean_singer(c),
        Experiment::Patodi => patodi(c),
        Experiment::Scaling => scaling(c),
        Experiment::Bridge => bridge(c),
        Experiment::Reflection => reflection(c),
        Experiment::Transport => transport(c),
        Experiment::Limit => limit(c),
    }
}

fn need<T>(xs: &[T], what: &str) -> Result<(), CliError> {
    if xs.is_empty() {
        Err(CliError::Config(format!("{what} must not be empty")))
    } else {
        Ok(())
    }
}

fn start_point(c: &ExperimentConfig, dim: usize) -> Result<Vec<f64>, CliError> {
    if c.x.len() != dim {
        return Err(CliError::Config(format!(
            "start point {:?} has {} coordinates, model `{}` needs {dim}",
            c.x,
            c.x.len(),
            c.model
        )));
    }
    Ok(c.x.clone())
}

fn gbc_tolerance(kind: ModelKind) -> f64 {
    match kind {
        ModelKind::Interval => GBC_EXACT,
        ModelKind::Ball3 => GBC_BALL,
        _ => GBC_SURFACE,
    }
}

fn verify_gbc(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let models = if c.model == ALL_MODELS {
        ManifoldModel::registry()
            .into_iter()
            .filter(|m| m.euler_characteristic().is_some())
            .collect()
    } else {
        vec![c.model()?]
    };
    let mut table = Table::new(
        "verify_gbc",
        &["model", "dim", "interior", "boundary", "total", "expected", "abs_error", "tolerance"],
    );
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    for m in models {
        let r = integrate_euler_characteristic(&m)?;
        let expected = r.expected.ok_or_else(|| CliError::Config(format!("model `{}` has no known χ", m.name())))?;
        let err = r.abs_error.unwrap_or(f64::INFINITY);
        let tol = gbc_tolerance(m.kind());
        table.push(vec![
            m.name().into(),
            m.dim().into(),
            r.interior.into(),
            r.boundary.into(),
            r.total.into(),
            expected.into(),
            err.into(),
            tol.into(),
        ]);
        checks.push(Check::new(
            format!("euler characteristic of {}", m.name()),
            err <= tol,
            format!("total {:.6} vs {expected} (error {err:.1e}, tolerance {tol:.0e})", r.total),
        ));
        reports.push(r);
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(reports),
        checks,
    })
}

fn moments(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.q, "q")?;
    let rows = moment_integrals(&c.q, c.paths, c.steps, c.seed)?;
    let mut table = Table::new(
        "moments",
        &[
            "experiment",
            "q",
            "estimate",
            "std_error",
            "exact_step_estimate",
            "exact_step_std_error",
            "closed_form",
            "paths",
            "steps",
            "seed",
        ],
    );
    let mut checks = Vec::new();
    for r in &rows {
        table.push(vec![
            "moments".into(),
            r.q.into(),
            r.estimate.into(),
            r.std_error.into(),
            r.exact_step_estimate.into(),
            r.exact_step_std_error.into(),
            r.closed_form.into(),
            r.paths.into(),
            r.steps.into(),
            c.seed.into(),
        ]);
        let rel = (r.estimate / r.closed_form - 1.0).abs();
        let tol = match r.q {
            0 => GBC_EXACT,
            1 | 2 => MOMENT_REL,
            _ => MOMENT_REL_HIGH,
        };
        checks.push(Check::new(
            format!("local-time moment integral q = {}", r.q),
            rel <= tol,
            format!(
                "{:.6} ± {:.6} vs {:.6} (relative error {rel:.2e}, tolerance {tol:.0e})",
                r.estimate, r.std_error, r.closed_form
            ),
        ));
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(rows),
        checks,
    })
}

fn scaling_tolerance(n: u32) -> f64 {
    if n <= 2 {
        0.05
    } else {
        0.1
    }
}

fn scaling(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.n, "n")?;
    let m = c.model()?;
    let x = start_point(c, m.dim())?;
    let results = local_time_scaling_checks(&m, &x, &c.n, &c.t_grid, c.paths, c.steps, c.seed)?;
    let mut points = Table::new(
        "scaling_moments",
        &["experiment", "model", "n", "t", "estimate", "std_error", "paths", "steps", "seed"],
    );
    let mut slopes = Table::new(
        "scaling_slopes",
        &["experiment", "model", "n", "slope", "target", "tolerance", "paths", "steps", "seed"],
    );
    let mut checks = Vec::new();
    for r in &results {
        for p in &r.points {
            points.push(vec![
                "scaling".into(),
                c.model.clone().into(),
                r.n.into(),
                p.t.into(),
                p.moment.mean.into(),
                p.moment.std_error.into(),
                c.paths.into(),
                c.steps.into(),
                c.seed.into(),
            ]);
        }
        let target = r.n as f64 / 2.0;
        let tol = scaling_tolerance(r.n);
        slopes.push(vec![
            "scaling".into(),
            c.model.clone().into(),
            r.n.into(),
            r.slope.into(),
            target.into(),
            tol.into(),
            c.paths.into(),
            c.steps.into(),
            c.seed.into(),
        ]);
        checks.push(Check::new(
            format!("local-time moment scaling n = {}", r.n),
            (r.slope - target).abs() <= tol,
            format!("log-log slope {:.6} vs {target} ± {tol}", r.slope),
        ));
    }
    Ok(Outcome {
        tables: vec![points, slopes],
        report: json!(results),
        checks,
    })
}

fn reflection(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.n, "n")?;
    need(&c.t_grid, "t")?;
    let m = c.model()?;
    let x = start_point(c, m.dim())?;
    let mut table = Table::new(
        "reflection",
        &[
            "experiment", "model", "t", "x", "power", "lhs", "lhs_std_error", "rhs", "rhs_std_error", "z", "paths",
            "steps", "seed",
        ],
    );
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &t in &c.t_grid {
        let rows = reflection_identity(&m, &x, t, &c.n, c.paths, c.steps, c.seed)?;
        for r in &rows {
            table.push(vec![
                "reflection".into(),
                c.model.clone().into(),
                t.into(),
                point_cell(&x),
                r.power.into(),
                r.lhs.mean.into(),
                r.lhs.std_error.into(),
                r.rhs.mean.into(),
                r.rhs.std_error.into(),
                r.z.into(),
                c.paths.into(),
                c.steps.into(),
                c.seed.into(),
            ]);
            checks.push(Check::new(
                format!("reflection identity for l^{} at t = {t}", r.power),
                r.z < Z_MAX,
                format!(
                    "{:.6} ± {:.6} vs {:.6} ± {:.6} (z = {:.3})",
                    r.lhs.mean, r.lhs.std_error, r.rhs.mean, r.rhs.std_error, r.z
                ),
            ));
        }
        report.push(json!({ "t": t, "rows": rows }));
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(report),
        checks,
    })
}

const MCKEAN_HEADER: &[&str] = &[
    "experiment", "model", "t", "part", "estimate", "std_error", "closed_form", "paths", "steps", "seed",
];

fn mckean_singer(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.t_grid, "t")?;
    let m = c.model()?;
    match m.kind() {
        ModelKind::Interval => mckean_interval(c, &m),
        ModelKind::Sphere2 => mckean_sphere(c, &m),
        _ => Err(CliError::Config(format!(
            "mckean-singer supports the interval and sphere2 models, not `{}`",
            c.model
        ))),
    }
}

fn mckean_interval(c: &ExperimentConfig, m: &ManifoldModel) -> Result<Outcome, CliError> {
    let mut table = Table::new("mckean_singer", MCKEAN_HEADER);
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &t in &c.t_grid {
        let r = mc_mckean_singer(m, t, c.paths, c.steps, c.seed)?;
        let total = r.interior.mean + r.boundary.mean;
        let se = r.interior.std_error.hypot(r.boundary.std_error);
        let expected = m.euler_characteristic().unwrap_or(1) as f64;
        for (part, e, closed) in [
            ("interior", r.interior.mean, 0.0),
            ("boundary", r.boundary.mean, r.boundary_closed_form),
            ("total", total, expected),
        ] {
            let err = match part {
                "interior" => r.interior.std_error,
                "boundary" => r.boundary.std_error,
                _ => se,
            };
            table.push(vec![
                "mckean-singer".into(),
                c.model.clone().into(),
                t.into(),
                part.into(),
                e.into(),
                err.into(),
                closed.into(),
                c.paths.into(),
                c.steps.into(),
                c.seed.into(),
            ]);
        }
        checks.push(Check::new(
            format!("unit supertrace on hitting paths at t = {t}"),
            r.pathwise_unit,
            format!("pathwise str(M u⁻¹) = 1: {}", r.pathwise_unit),
        ));
        checks.push(Check::new(
            format!("interior part vanishes at t = {t}"),
            r.interior.mean == 0.0,
            format!("interior {:e}", r.interior.mean),
        ));
        let closed_err = (r.boundary_closed_form - 1.0).abs();
        checks.push(Check::new(
            format!("image-sum boundary integral at t = {t}"),
            closed_err <= MCKEAN_CLOSED_TOL,
            format!("{:.10} (error {closed_err:.1e})", r.boundary_closed_form),
        ));
        let rel = (r.boundary.mean - 1.0).abs();
        checks.push(Check::new(
            format!("Monte Carlo boundary integral at t = {t}"),
            rel <= MCKEAN_MC_REL,
            format!("{:.6} ± {:.6} vs 1 (tolerance {MCKEAN_MC_REL})", r.boundary.mean, r.boundary.std_error),
        ));
        report.push(r);
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(report),
        checks,
    })
}

/// Boundaryless control: the diagonal supertrace at a point tends to the
/// Euler density `1/(2π)`.
fn mckean_sphere(c: &ExperimentConfig, m: &ManifoldModel) -> Result<Outcome, CliError> {
    let x = if c.x.is_empty() { vec![0.0; m.dim()] } else { start_point(c, m.dim())? };
    let target = 1.0 / (2.0 * PI);
    let mut table = Table::new("mckean_singer", MCKEAN_HEADER);
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &t in &c.t_grid {
        let s = mc_supertrace(m, t, &x, c.paths, c.steps, c.seed)?;
        table.push(vec![
            "mckean-singer".into(),
            c.model.clone().into(),
            t.into(),
            "interior".into(),
            s.interior.mean.into(),
            s.interior.std_error.into(),
            target.into(),
            c.paths.into(),
            c.steps.into(),
            c.seed.into(),
        ]);
        let rel = (s.interior.mean / target - 1.0).abs();
        checks.push(Check::new(
            format!("diagonal supertrace near the Euler density at t = {t}"),
            rel <= SPHERE_DENSITY_REL,
            format!("{:.6} ± {:.6} vs {target:.6}", s.interior.mean, s.interior.std_error),
        ));
        report.push(s);
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(report),
        checks,
    })
}

fn patodi(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    let r = patodi_suite(c.paths, c.seed)?;
    let mut table = Table::new(
        "patodi",
        &[
            "experiment",
            "tuples",
            "short_tuples",
            "full_tuples",
            "max_short",
            "max_full_error",
            "max_permutation_spread",
            "tolerance",
            "seed",
        ],
    );
    table.push(vec![
        "patodi".into(),
        r.tuples.into(),
        r.short_tuples.into(),
        r.full_tuples.into(),
        r.max_short.into(),
        r.max_full_error.into(),
        r.max_permutation_spread.into(),
        PATODI_TOL.into(),
        c.seed.into(),
    ]);
    let checks = vec![
        Check::new(
            "short products are supertraceless",
            r.max_short <= PATODI_TOL,
            format!("max |str| / scale = {:.1e}", r.max_short),
        ),
        Check::new(
            "full products match the determinant coefficient",
            r.max_full_error <= PATODI_TOL,
            format!("max error / scale = {:.1e}", r.max_full_error),
        ),
        Check::new(
            "supertrace is invariant under reordering",
            r.max_permutation_spread <= PATODI_TOL,
            format!("max spread / scale = {:.1e}", r.max_permutation_spread),
        ),
    ];
    Ok(Outcome {
        tables: vec![table],
        report: json!(r),
        checks,
    })
}

fn bridge(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.t_grid, "t")?;
    let m = c.model()?;
    let u = match c.x.as_slice() {
        [u] => *u,
        _ => return Err(CliError::Config(format!("bridge needs a single start u, got {:?}", c.x))),
    };
    let rows = scaled_bridge_convergence(&m, &c.t_grid, u, c.paths, c.steps, c.seed)?;
    let mut table = Table::new(
        "bridge",
        &[
            "experiment", "model", "t", "u", "ks", "mean", "variance", "drift_sup", "paths", "steps", "seed",
        ],
    );
    for r in &rows {
        table.push(vec![
            "bridge".into(),
            c.model.clone().into(),
            r.t.into(),
            u.into(),
            r.ks.into(),
            r.mean.into(),
            r.variance.into(),
            r.drift_sup.into(),
            c.paths.into(),
            c.steps.into(),
            c.seed.into(),
        ]);
    }
    let ks: Vec<f64> = rows.iter().map(|r| r.ks).collect();
    let last = *ks.last().expect("non-empty grid");
    let checks = vec![
        Check::new(
            "KS distance decreases along the time grid",
            ks.windows(2).all(|w| w[1] < w[0]),
            format!("{ks:.6?}"),
        ),
        Check::new(
            "KS distance at the smallest time",
            last < KS_FINAL,
            format!("{last:.6} (tolerance {KS_FINAL})"),
        ),
    ];
    Ok(Outcome {
        tables: vec![table],
        report: json!(rows),
        checks,
    })
}

fn transport(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.n, "n")?;
    let m = c.model()?;
    let x = start_point(c, m.dim())?;
    let mut table = Table::new(
        "transport",
        &["experiment", "model", "x", "power", "t", "estimate", "std_error", "paths", "steps", "seed"],
    );
    let mut slopes = Table::new(
        "transport_slopes",
        &["experiment", "model", "power", "slope", "target", "tolerance", "paths", "steps", "seed"],
    );
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &power in &c.n {
        let r = parallel_correction_moments(&m, &x, &c.t_grid, power, c.paths, c.steps, c.seed)?;
        for p in &r.points {
            table.push(vec![
                "transport".into(),
                c.model.clone().into(),
                point_cell(&x),
                power.into(),
                p.t.into(),
                p.estimate.mean.into(),
                p.estimate.std_error.into(),
                c.paths.into(),
                c.steps.into(),
                c.seed.into(),
            ]);
        }
        let target = power as f64;
        let tol = TRANSPORT_REL * target;
        slopes.push(vec![
            "transport".into(),
            c.model.clone().into(),
            power.into(),
            r.slope.into(),
            target.into(),
            tol.into(),
            c.paths.into(),
            c.steps.into(),
            c.seed.into(),
        ]);
        checks.push(Check::new(
            format!("parallel-transport correction scaling N = {power}"),
            (r.slope - target).abs() <= tol,
            format!("log-log slope {:.6} vs {target} ± {tol}", r.slope),
        ));
        report.push(r);
    }
    Ok(Outcome {
        tables: vec![table, slopes],
        report: json!(report),
        checks,
    })
}

fn limit(c: &ExperimentConfig) -> Result<Outcome, CliError> {
    need(&c.q, "q")?;
    need(&c.t_grid, "t")?;
    let m = c.model()?;
    let xbar = start_point(c, m.dim() - 1)?;
    let mut table = Table::new(
        "limit",
        &[
            "experiment", "model", "t", "xbar", "p", "q", "estimate", "std_error", "closed_form", "paths", "steps",
            "seed",
        ],
    );
    let mut checks = Vec::new();
    let mut report = Vec::new();
    for &q in &c.q {
        let b = boundary_limit_coefficient(&m, &xbar, c.p, q, &c.t_grid, c.paths, c.steps, c.seed)?;
        for pt in &b.points {
            table.push(vec![
                "limit".into(),
                c.model.clone().into(),
                pt.t.into(),
                point_cell(&xbar),
                c.p.into(),
                q.into(),
                pt.estimate.mean.into(),
                pt.estimate.std_error.into(),
                b.closed_form.into(),
                pt.estimate.n.into(),
                c.steps.into(),
                c.seed.into(),
            ]);
        }
        let first = b.points.first().expect("non-empty grid").estimate.mean;
        let last = b.points.last().expect("non-empty grid").estimate.mean;
        if 2 * c.p + q + 1 == m.dim() {
            let rel = (last / b.closed_form - 1.0).abs();
            checks.push(Check::new(
                format!("boundary term ({}, {q}) tends to its closed form", c.p),
                rel <= LIMIT_REL,
                format!("{last:.6} vs {:.6} at the smallest t", b.closed_form),
            ));
        } else {
            checks.push(Check::new(
                format!("boundary term ({}, {q}) above the line decays", c.p),
                last.abs() < first.abs(),
                format!("{first:.6} → {last:.6}"),
            ));
        }
        report.push(b);
    }
    Ok(Outcome {
        tables: vec![table],
        report: json!(report),
        checks,
    })
}
