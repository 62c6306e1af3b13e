use nalgebra::DMatrix;

use super::{christoffel, orthonormal_frame, SemiGeodesicChart};
use crate::error::{Error, Result};
use crate::exterior::Endomorphism;

/// Parallel transport along the polyline through `path`, by Heun's method on
/// `dVⁱ + Γⁱ_jk dx^j V^k = 0`.
///
/// The frame at `path[0]` is transported to the end and expressed in the
/// orthonormal frame there. The result is the inverse of that map, `u⁻¹`,
/// taking frame coordinates at the end point back to the start.
pub fn parallel_transport(chart: &SemiGeodesicChart, path: &[Vec<f64>]) -> Result<Endomorphism> {
    let d = chart.dim();
    let Some(first) = path.first() else {
        return Err(Error::Invalid("empty path".into()));
    };
    for x in path {
        if x.len() != d || !chart.contains(x) {
            return Err(Error::ChartDomain(x.clone()));
        }
    }
    let mut v = orthonormal_frame(&chart.raw_metric(first))?;
    let rhs = |gamma: &[DMatrix<f64>], dx: &[f64], v: &DMatrix<f64>| {
        DMatrix::from_fn(d, d, |i, col| {
            let mut s = 0.0;
            for (j, dxj) in dx.iter().enumerate() {
                for k in 0..d {
                    s += gamma[i][(j, k)] * dxj * v[(k, col)];
                }
            }
            -s
        })
    };
    let mut gamma = christoffel(chart, first);
    for pair in path.windows(2) {
        let dx: Vec<f64> = pair[1].iter().zip(&pair[0]).map(|(b, a)| b - a).collect();
        let k1 = rhs(&gamma, &dx, &v);
        let pred = &v + &k1;
        let next_gamma = christoffel(chart, &pair[1]);
        let k2 = rhs(&next_gamma, &dx, &pred);
        v += (k1 + k2) * 0.5;
        gamma = next_gamma;
    }
    let last = path.last().expect("non-empty");
    let frame = orthonormal_frame(&chart.raw_metric(last))?;
    let u = frame
        .try_inverse()
        .ok_or_else(|| Error::Invalid("singular frame".into()))?
        * v;
    let inv = u
        .try_inverse()
        .ok_or_else(|| Error::Invalid("transport degenerated".into()))?;
    Endomorphism::new(inv)
}

/// Rotation angle of a 2×2 transport matrix, in `(-π, π]`.
pub fn holonomy_angle(u: &Endomorphism) -> f64 {
    let m = u.matrix();
    m[(1, 0)].atan2(m[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ManifoldModel, ModelKind};
    use std::f64::consts::PI;

    #[test]
    fn flat_transport_is_identity() {
        let half = ManifoldModel::new(ModelKind::Halfspace);
        let path: Vec<Vec<f64>> = (0..50).map(|k| vec![0.1 + 0.01 * k as f64, (k as f64).sin()]).collect();
        let u = parallel_transport(half.chart(), &path).unwrap();
        assert_eq!(u.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn latitude_loop_holonomy() {
        let s2 = ManifoldModel::new(ModelKind::Sphere2);
        let n = 10_000;
        for theta in [0.5f64, 1.0, 1.3] {
            let lat = PI / 2.0 - theta;
            let path: Vec<Vec<f64>> = (0..=n)
                .map(|k| vec![lat, 2.0 * PI * k as f64 / n as f64])
                .collect();
            let u = parallel_transport(s2.chart(), &path).unwrap();
            let expected = 2.0 * PI * (1.0 - theta.cos());
            let got = holonomy_angle(&u);
            let circ = |a: f64| {
                let r = a.rem_euclid(2.0 * PI);
                r.min(2.0 * PI - r)
            };
            let diff = circ(got - expected).min(circ(got + expected));
            assert!(diff < 1e-3, "theta {theta}: {got} vs {expected}");
        }
    }

    #[test]
    fn leaving_the_chart_is_an_error() {
        let disk = ManifoldModel::new(ModelKind::Disk);
        let path = vec![vec![0.1, 0.0], vec![-0.1, 0.0]];
        assert!(matches!(parallel_transport(disk.chart(), &path), Err(Error::ChartDomain(_))));
    }
}
