//! Interior and boundary integrands of the Gauss-Bonnet-Chern formula, and
//! their quadrature over the model manifolds.
//!
//! Both integrands are computed two ways. The interior density is the
//! Pfaffian of the curvature 2-form and, independently, a supertrace of a
//! power of the curvature operator on forms. The boundary density is a
//! supertrace over the ambient fibre cut down by the tangential projection
//! `Q`, and independently a supertrace over the boundary fibre alone.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exterior::{
    apply_curvature, extend_derivation, pfaffian_expand, Endomorphism, Form, GradedOperator,
};
use crate::geometry::{CurvatureTensor, ManifoldModel, SecondFundamentalForm, SIGMA_GAUSS};
use crate::quadrature::gauss_legendre_on;

/// Nodes per axis for interior quadrature, and the coarser rule it is checked against.
pub const QUADRATURE_NODES: usize = 64;
const QUADRATURE_CHECK_NODES: usize = 32;
const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Agreement required between the two evaluations of each integrand.
pub const ROUTE_TOLERANCE: f64 = 1e-8;

/// `Γ(n/2)` for a positive integer `n`, exact up to rounding of `√π`.
pub fn gamma_half(n: usize) -> f64 {
    assert!(n > 0, "Γ has a pole at 0");
    if n.is_multiple_of(2) {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        // Γ(m + ½) = (2m)! √π / (4^m m!)
        let m = (n - 1) / 2;
        let mut v = PI.sqrt();
        for k in 0..m {
            v *= k as f64 + 0.5;
        }
        v
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Euler density from the Pfaffian of the curvature 2-form
/// `Ω_ij = ½ Σ_kl R_ijkl e^k ∧ e^l`, normalized by `(2π)^{d/2}`.
pub fn euler_density_pfaffian(r: &CurvatureTensor) -> f64 {
    let d = r.dim();
    if d % 2 == 1 {
        return 0.0;
    }
    let entry = |i: usize, j: usize| {
        let mut f = Form::zero(d);
        for k in 0..d {
            for l in k + 1..d {
                // ½(R_ijkl e^k∧e^l + R_ijlk e^l∧e^k) = R_ijkl e^k∧e^l
                let c = r.get(i, j, k, l);
                if c != 0.0 {
                    f = crate::exterior::PfaffianRing::add(&f, &Form::monomial(d, &[k, l], c));
                }
            }
        }
        f
    };
    let pf = pfaffian_expand(d, &entry);
    pf.top_coefficient() / (2.0 * PI).powi(d as i32 / 2)
}

/// Euler density as `str(Ω^{d/2}) / ((4π)^{d/2} (d/2)!)`, with `Ω` the
/// curvature operator on forms.
pub fn euler_density_supertrace(r: &CurvatureTensor) -> Result<f64> {
    let d = r.dim();
    if d % 2 == 1 {
        return Ok(0.0);
    }
    let omega = apply_curvature(&r.action()?);
    let m = d / 2;
    Ok(omega.pow(m).supertrace() / ((4.0 * PI).powi(m as i32) * factorial(m)))
}

/// The Euler density `e_M` at an interior point. Odd dimensions give exactly 0.
pub fn euler_form_density(model: &ManifoldModel, x: &[f64]) -> Result<f64> {
    if model.dim() % 2 == 1 {
        return Ok(0.0);
    }
    let r = model.curvature_at(x)?;
    let pf = euler_density_pfaffian(&r);
    let st = euler_density_supertrace(&r)?;
    if (pf - st).abs() > ROUTE_TOLERANCE {
        return Err(Error::ConventionMismatch {
            ambient: pf,
            intrinsic: st,
        });
    }
    Ok(pf)
}

/// `(−1)^q / (2 (4π)^{(d−1)/2} p! Γ(q/2 + 1))`, the weight of `str(Ω^p H^q Q)` in
/// the boundary density. Requires `2p + q = d − 1`.
pub fn boundary_coefficient(d: usize, p: usize, q: usize) -> Result<f64> {
    if d == 0 || 2 * p + q != d - 1 {
        return Err(Error::OffLine {
            p,
            q,
            line: d.saturating_sub(1),
        });
    }
    let sign = if q.is_multiple_of(2) { 1.0 } else { -1.0 };
    let four_pi = (4.0 * PI).sqrt().powi((d - 1) as i32);
    Ok(sign / (2.0 * four_pi * factorial(p) * gamma_half(q + 2)))
}

/// Pairs `(p, q)` with `2p + q = d − 1`.
pub fn boundary_terms(d: usize) -> Vec<(usize, usize)> {
    (0..=(d - 1) / 2).map(|p| (p, d - 1 - 2 * p)).collect()
}

/// `Σ_{2p+q=d−1} c(d,p,q) str(Ω^p H^q Q)` on the ambient fibre `Λ*ℝ^d`, with
/// the normal direction at index 0.
pub fn boundary_integrand_ambient(r: &CurvatureTensor, h: &SecondFundamentalForm) -> Result<f64> {
    let d = r.dim();
    if h.dim() + 1 != d {
        return Err(Error::DimensionMismatch {
            expected: d - 1,
            found: h.dim(),
        });
    }
    let omega = apply_curvature(&r.action()?);
    let hx = extend_derivation(&h.ambient()?);
    let q_proj = GradedOperator::tangential_projection(d);
    let mut total = 0.0;
    for (p, q) in boundary_terms(d) {
        let term = &(&omega.pow(p) * &hx.pow(q)) * &q_proj;
        total += boundary_coefficient(d, p, q)? * term.supertrace();
    }
    Ok(total)
}

/// The same density evaluated on the boundary fibre `Λ*ℝ^{d−1}` only. The
/// curvature entering here is the tangential part of the ambient curvature,
/// recovered from the intrinsic boundary curvature `r_bar` through the Gauss
/// equation.
pub fn boundary_integrand_intrinsic(r_bar: &CurvatureTensor, h: &SecondFundamentalForm) -> Result<f64> {
    let db = h.dim();
    if r_bar.dim() != db {
        return Err(Error::DimensionMismatch {
            expected: db,
            found: r_bar.dim(),
        });
    }
    let d = db + 1;
    if db == 0 {
        return boundary_coefficient(d, 0, 0);
    }
    let hm = h.matrix();
    let mut tangential = r_bar.clone();
    for i in 0..db {
        for j in 0..db {
            for k in 0..db {
                for l in 0..db {
                    let v = r_bar.get(i, j, k, l)
                        - SIGMA_GAUSS * (hm[(i, k)] * hm[(j, l)] - hm[(i, l)] * hm[(j, k)]);
                    tangential.set(i, j, k, l, v);
                }
            }
        }
    }
    let omega = apply_curvature(&tangential.action()?);
    let hx = extend_derivation(&Endomorphism::new(hm.clone())?);
    let mut total = 0.0;
    for (p, q) in boundary_terms(d) {
        let term = &omega.pow(p) * &hx.pow(q);
        total += boundary_coefficient(d, p, q)? * term.supertrace();
    }
    Ok(total)
}

/// Boundary density at `(0, x̄)`: both evaluations, checked against each other.
pub fn boundary_integrand(model: &ManifoldModel, xbar: &[f64]) -> Result<f64> {
    let h = model.second_fundamental_form_at(xbar)?;
    let mut x = vec![0.0];
    x.extend_from_slice(xbar);
    let r = model.curvature_at(&x)?;
    let db = model.dim() - 1;
    let r_bar = if db >= 2 {
        CurvatureTensor::constant(db, model.boundary_intrinsic_curvature())
    } else {
        CurvatureTensor::zero(db)
    };
    let ambient = boundary_integrand_ambient(&r, &h)?;
    let intrinsic = boundary_integrand_intrinsic(&r_bar, &h)?;
    if (ambient - intrinsic).abs() > ROUTE_TOLERANCE {
        return Err(Error::ConventionMismatch { ambient, intrinsic });
    }
    Ok(intrinsic)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerCharacteristicReport {
    pub model: String,
    pub interior: f64,
    pub boundary: f64,
    pub total: f64,
    pub expected: Option<i64>,
    pub abs_error: Option<f64>,
}

fn interior_integral(model: &ManifoldModel, nodes: usize) -> Result<f64> {
    let Some(bounds) = model.interior_box() else {
        return Err(Error::Unsupported {
            model: model.name().into(),
            what: "integration over a non-compact interior",
        });
    };
    let rules: Vec<_> = bounds
        .iter()
        .map(|&(a, b)| gauss_legendre_on(nodes, a, b))
        .collect();
    let d = bounds.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    loop {
        let x: Vec<f64> = (0..d).map(|a| rules[a].0[idx[a]]).collect();
        let w: f64 = (0..d).map(|a| rules[a].1[idx[a]]).product();
        total += w * model.chart().volume_density(&x) * euler_form_density(model, &x)?;
        let mut a = 0;
        loop {
            idx[a] += 1;
            if idx[a] < nodes {
                break;
            }
            idx[a] = 0;
            a += 1;
            if a == d {
                return Ok(total);
            }
        }
    }
}

/// Interior plus boundary integrals over a registered model.
///
/// The interior uses product Gauss-Legendre quadrature in chart coordinates,
/// checked against a coarser rule; odd dimensions contribute exactly 0. The
/// boundary density is constant on every model and is multiplied by the
/// closed-form boundary measure.
pub fn integrate_euler_characteristic(model: &ManifoldModel) -> Result<EulerCharacteristicReport> {
    let interior = if model.dim() % 2 == 1 {
        0.0
    } else {
        let fine = interior_integral(model, QUADRATURE_NODES)?;
        let coarse = interior_integral(model, QUADRATURE_CHECK_NODES)?;
        if (fine - coarse).abs() > QUADRATURE_TOLERANCE {
            return Err(Error::Quadrature((fine - coarse).abs()));
        }
        fine
    };
    let boundary = if model.has_boundary() {
        let measure = model.boundary_measure().ok_or(Error::Unsupported {
            model: model.name().into(),
            what: "a finite boundary measure",
        })?;
        measure * boundary_integrand(model, &model.boundary_origin())?
    } else {
        0.0
    };
    let total = interior + boundary;
    let expected = model.euler_characteristic();
    Ok(EulerCharacteristicReport {
        model: model.name().to_string(),
        interior,
        boundary,
        total,
        expected,
        abs_error: expected.map(|e| (total - e as f64).abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelKind;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    #[test]
    fn gamma_at_half_integers() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(6), 2.0);
        assert_abs_diff_eq!(gamma_half(1), PI.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_half(3), PI.sqrt() / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gamma_half(5), 0.75 * PI.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn coefficient_examples() {
        assert_eq!(boundary_coefficient(1, 0, 0).unwrap(), 0.5);
        assert_abs_diff_eq!(boundary_coefficient(2, 0, 1).unwrap(), -1.0 / (2.0 * PI), epsilon = 1e-15);
        let c10 = boundary_coefficient(3, 1, 0).unwrap();
        let c02 = boundary_coefficient(3, 0, 2).unwrap();
        assert_abs_diff_eq!(c10, 1.0 / (8.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(c10 / c02, 1.0, epsilon = 1e-14);
        assert!(matches!(boundary_coefficient(3, 1, 1), Err(Error::OffLine { .. })));
    }

    #[test]
    fn euler_density_examples() {
        let interval = ManifoldModel::new(ModelKind::Interval);
        assert_eq!(euler_form_density(&interval, &[0.5]).unwrap(), 0.0);
        let disk = ManifoldModel::new(ModelKind::Disk);
        assert_eq!(euler_form_density(&disk, &[0.5, 1.0]).unwrap(), 0.0);
        let s2 = ManifoldModel::new(ModelKind::Sphere2);
        assert_abs_diff_eq!(euler_form_density(&s2, &[0.1, 0.0]).unwrap(), 1.0 / (2.0 * PI), epsilon = 1e-15);
    }

    #[test]
    fn four_sphere_density() {
        // χ(S⁴) = 2 over volume 8π²/3
        let r = CurvatureTensor::constant(4, 1.0);
        let expected = 3.0 / (4.0 * PI * PI);
        assert_abs_diff_eq!(euler_density_pfaffian(&r), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(euler_density_supertrace(&r).unwrap(), expected, epsilon = 1e-14);
    }

    #[test]
    fn boundary_examples() {
        let at = |k| boundary_integrand(&ManifoldModel::new(k), &ManifoldModel::new(k).boundary_origin()).unwrap();
        assert_eq!(at(ModelKind::Interval), 0.5);
        assert_abs_diff_eq!(at(ModelKind::Disk), 1.0 / (2.0 * PI), epsilon = 1e-9);
        assert_abs_diff_eq!(at(ModelKind::Hemisphere), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(at(ModelKind::Ball3), 1.0 / (4.0 * PI), epsilon = 1e-9);
    }

    #[test]
    fn euler_characteristics_of_compact_models() {
        for m in ManifoldModel::registry() {
            if m.euler_characteristic().is_none() {
                assert!(integrate_euler_characteristic(&m).is_err());
                continue;
            }
            let rep = integrate_euler_characteristic(&m).unwrap();
            assert!(rep.abs_error.unwrap() < 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn doubled_interval_is_a_circle() {
        // the double is closed and odd-dimensional, so it integrates to 0 = 2χ(M) − χ(∂M)
        let rep = integrate_euler_characteristic(&ManifoldModel::new(ModelKind::Interval)).unwrap();
        let circle = 2.0 * rep.interior;
        assert_eq!(circle, 0.0);
        assert_eq!(circle, 2.0 * rep.total - 2.0);
    }

    fn symmetric(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
        prop::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
            let m = DMatrix::from_row_slice(d, d, &v);
            (&m + m.transpose()) * 0.5
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn euler_routes_agree_in_dimension_four(a in symmetric(4), b in symmetric(4)) {
            let r = CurvatureTensor::kulkarni_nomizu(&a, &b);
            let pf = euler_density_pfaffian(&r);
            let st = euler_density_supertrace(&r).unwrap();
            prop_assert!((pf - st).abs() < 1e-12);
        }

        #[test]
        fn boundary_routes_agree(d in 2usize..=5, seed in prop::collection::vec(-1.0f64..1.0, 3 * 25)) {
            // Kulkarni-Nomizu products span the algebraic curvature tensors
            let sym = |off: usize, n: usize| {
                let m = DMatrix::from_fn(n, n, |i, j| seed[off + i * 5 + j]);
                (&m + m.transpose()) * 0.5
            };
            let r = CurvatureTensor::kulkarni_nomizu(&sym(0, d), &sym(25, d));
            let sff = SecondFundamentalForm::new(sym(50, d - 1)).unwrap();
            let bar = crate::geometry::gauss_codazzi_restrict(&r, &sff).unwrap();
            let amb = boundary_integrand_ambient(&r, &sff).unwrap();
            let intr = boundary_integrand_intrinsic(&bar, &sff).unwrap();
            prop_assert!((amb - intr).abs() < 1e-12);
        }

        #[test]
        fn scaling_leaves_chi_invariant(c in 0.3f64..3.0) {
            for kind in [ModelKind::Disk, ModelKind::Hemisphere, ModelKind::Ball3, ModelKind::Sphere2, ModelKind::Interval] {
                let m = ManifoldModel::new(kind).with_scale(c).unwrap();
                let rep = integrate_euler_characteristic(&m).unwrap();
                prop_assert!(rep.abs_error.unwrap() < 1e-6);
            }
        }
    }
}
