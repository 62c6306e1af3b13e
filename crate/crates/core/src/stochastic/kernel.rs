use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, ModelKind};
use crate::quadrature::legendre;

const TRUNCATION: f64 = 1e-16;

/// One-dimensional Gaussian kernel `(2πt)^{-1/2} e^{−z²/2t}`.
pub fn gaussian(t: f64, z: f64) -> f64 {
    (-z * z / (2.0 * t)).exp() / (2.0 * PI * t).sqrt()
}

/// Kernel of `½Δ` on the circle of circumference 2, by the image sum.
pub fn circle_kernel(t: f64, x: f64, y: f64) -> f64 {
    let z = (y - x).rem_euclid(2.0);
    let z = if z > 1.0 { z - 2.0 } else { z };
    let mut total = gaussian(t, z);
    for k in 1.. {
        let a = gaussian(t, z + 2.0 * k as f64);
        let b = gaussian(t, z - 2.0 * k as f64);
        total += a + b;
        if a + b < TRUNCATION * total {
            break;
        }
    }
    total
}

/// Kernel of `½Δ` on the round sphere of radius `c`, by its spectral expansion
/// in Legendre polynomials of the angle `γ` between the points.
pub fn sphere_kernel(t: f64, c: f64, cos_gamma: f64) -> f64 {
    let s = t / (2.0 * c * c);
    let mut total = 0.0;
    for l in 0.. {
        let lf = l as f64;
        let weight = (2.0 * lf + 1.0) * (-lf * (lf + 1.0) * s).exp();
        total += weight * legendre(l, cos_gamma.clamp(-1.0, 1.0));
        if l > 2 && weight < TRUNCATION * total.abs().max(1.0) {
            break;
        }
    }
    total / (4.0 * PI * c * c)
}

/// Cosine of the angle between two sphere-chart points (latitude, longitude arc lengths).
pub fn sphere_cos_angle(c: f64, x: &[f64], y: &[f64]) -> f64 {
    let (p1, p2) = (x[0] / c, y[0] / c);
    let dl = (y[1] - x[1]) / c;
    p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos()
}

/// Heat kernel `q(t, x, y)` of `½Δ` on the double of `model`, points given in
/// doubled chart coordinates (signed `x¹`).
///
/// Supported: the half-space (double is the plane), the interval (double is
/// the circle of circumference 2) and the hemisphere and sphere (double, resp.
/// the space itself, is the round sphere).
pub fn heat_kernel_double(model: &ManifoldModel, t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Invalid(format!("time must be positive, got {t}")));
    }
    let d = model.dim();
    if x.len() != d || y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len().min(y.len()),
        });
    }
    let c = model.scale();
    match model.kind() {
        ModelKind::Halfspace => {
            let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
            Ok((-r2 / (2.0 * t)).exp() / (2.0 * PI * t))
        }
        // the circle of circumference 2c, rescaled to circumference 2
        ModelKind::Interval => Ok(circle_kernel(t / (c * c), x[0] / c, y[0] / c) / c),
        ModelKind::Hemisphere | ModelKind::Sphere2 => Ok(sphere_kernel(t, c, sphere_cos_angle(c, x, y))),
        _ => Err(Error::Unsupported {
            model: model.name().into(),
            what: "a closed-form kernel on the double",
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn half_space_mirror_value() {
        let m = ManifoldModel::new(ModelKind::Halfspace);
        let (t, x1) = (0.3, 0.2);
        let q = heat_kernel_double(&m, t, &[x1, 0.5], &[-x1, 0.5]).unwrap();
        assert_abs_diff_eq!(q, (-2.0 * x1 * x1 / t).exp() / (2.0 * PI * t), epsilon = 1e-15);
    }

    #[test]
    fn circle_diagonal_small_time() {
        let m = ManifoldModel::new(ModelKind::Interval);
        let q = heat_kernel_double(&m, 0.01, &[0.3], &[0.3]).unwrap();
        assert_abs_diff_eq!(q, 1.0 / (2.0 * PI * 0.01f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn circle_kernel_has_unit_mass() {
        let (x, w) = crate::quadrature::gauss_legendre_on(64, 0.0, 2.0);
        let mass: f64 = x.iter().zip(&w).map(|(y, w)| w * circle_kernel(0.4, 0.3, *y)).sum();
        assert_abs_diff_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sphere_kernel_matches_short_time_asymptotics() {
        // q(t,x,x) = (2πt)^{-1}(1 + Kt/6 + O(t²)) for ½Δ
        let t = 0.01;
        let q = sphere_kernel(t, 1.0, 1.0);
        let lead = 1.0 / (2.0 * PI * t) * (1.0 + t / 6.0);
        assert!((q / lead - 1.0).abs() < 1e-4);
    }

    #[test]
    fn unsupported_models() {
        let disk = ManifoldModel::new(ModelKind::Disk);
        assert!(matches!(
            heat_kernel_double(&disk, 0.1, &[0.1, 0.0], &[0.1, 0.0]),
            Err(Error::Unsupported { .. })
        ));
    }

    proptest! {
        #[test]
        fn kernels_are_symmetric(t in 0.01f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, e in -1.0f64..1.0) {
            for m in [ModelKind::Interval, ModelKind::Halfspace, ModelKind::Sphere2] {
                let m = ManifoldModel::new(m);
                let (x, y) = if m.dim() == 1 { (vec![a], vec![b]) } else { (vec![a, c], vec![b, e]) };
                let q1 = heat_kernel_double(&m, t, &x, &y).unwrap();
                let q2 = heat_kernel_double(&m, t, &y, &x).unwrap();
                prop_assert!((q1 - q2).abs() <= 1e-14 * q1.abs().max(1.0));
            }
        }
    }
}
