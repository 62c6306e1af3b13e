use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rbm_gbc::geometry::*;
use rbm_gbc::Error;

fn model(k: ModelKind) -> ManifoldModel {
    ManifoldModel::new(k)
}

#[test]
fn registry_has_known_euler_characteristics() {
    let expected = [
        ("interval", Some(1)),
        ("halfspace", None),
        ("disk", Some(1)),
        ("hemisphere", Some(1)),
        ("ball3", Some(1)),
        ("sphere2", Some(2)),
    ];
    for (name, chi) in expected {
        assert_eq!(ManifoldModel::by_name(name).unwrap().euler_characteristic(), chi, "{name}");
    }
    match ManifoldModel::by_name("torus") {
        Err(Error::UnknownModel { known, .. }) => assert!(known.contains("sphere2") && known.contains("ball3")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn flat_half_space_metric_is_identity() {
    let m = model(ModelKind::Halfspace);
    assert_eq!(metric_at(m.chart(), &[0.7, -3.0]).unwrap(), DMatrix::identity(2, 2));
}

#[test]
fn disk_metric_at_boundary() {
    let m = model(ModelKind::Disk);
    let g = metric_at(m.chart(), &[0.0, 0.4]).unwrap();
    assert_eq!(g, DMatrix::identity(2, 2));
    // ∂₁g₂₂ = −2(1 − x¹) = −2 at the boundary, so H = −½∂₁g₂₂ = 1
    let h = 1e-6;
    let d = (metric_at(m.chart(), &[h, 0.4]).unwrap()[(1, 1)] - 1.0) / h;
    assert!((d + 2.0).abs() < 1e-5);
    assert!(metric_at(m.chart(), &[-0.1, 0.0]).is_err());
}

#[test]
fn second_fundamental_form_examples() {
    let hemi = model(ModelKind::Hemisphere).second_fundamental_form_at(&[0.3]).unwrap();
    assert!(hemi.matrix().amax() < 1e-9);
    let disk = model(ModelKind::Disk).second_fundamental_form_at(&[0.3]).unwrap();
    assert!((disk.matrix()[(0, 0)] - 1.0).abs() < 1e-8);
    let ball = model(ModelKind::Ball3).second_fundamental_form_at(&[0.0, 0.0]).unwrap();
    assert!((ball.matrix() - DMatrix::identity(2, 2)).amax() < 1e-8);
    assert!(model(ModelKind::Sphere2).second_fundamental_form_at(&[0.0]).is_err());
}

#[test]
fn drift_examples() {
    let flat = model(ModelKind::Halfspace);
    assert_eq!(drift_b(flat.chart(), &[0.3, 0.2]).unwrap().amax(), 0.0);
    let disk = model(ModelKind::Disk);
    for x1 in [0.0, 0.2, 0.5, -0.3] {
        let b = drift_b(disk.chart(), &[x1, 0.1]).unwrap();
        let expected = -x1.signum() / (1.0 - f64::abs(x1));
        if x1 != 0.0 {
            assert!((b[0] - expected).abs() < 1e-8, "{x1}: {}", b[0]);
        }
    }
}

#[test]
fn curvature_examples() {
    let iv = model(ModelKind::Interval).curvature_at(&[0.5]).unwrap();
    assert_eq!(iv.components(), &[0.0]);
    let s2 = model(ModelKind::Sphere2).curvature_at(&[0.2, 0.1]).unwrap();
    assert_eq!(s2.get(0, 1, 0, 1), 1.0);
    let ball = model(ModelKind::Ball3).curvature_at(&[0.2, 0.1, 0.3]).unwrap();
    assert!(ball.components().iter().all(|v| *v == 0.0));
}

#[test]
fn finite_difference_curvature_agrees_with_closed_form() {
    for (k, x) in [
        (ModelKind::Hemisphere, vec![0.4, 0.3]),
        (ModelKind::Sphere2, vec![-0.3, 1.0]),
        (ModelKind::Disk, vec![0.3, 0.2]),
        (ModelKind::Ball3, vec![0.3, 0.2, 0.1]),
    ] {
        let m = model(k);
        let fd = curvature_fd(m.chart(), &x).unwrap();
        let exact = m.curvature_at(&x).unwrap();
        assert!(fd.max_abs_diff(&exact) < 1e-6, "{}", m.name());
        assert!(fd.symmetry_defect() < 1e-8, "{}", m.name());
    }
}

#[test]
fn gauss_codazzi_examples() {
    let r = CurvatureTensor::constant(3, 0.0);
    let ball_h = SecondFundamentalForm::new(DMatrix::identity(2, 2)).unwrap();
    let rbar = gauss_codazzi_restrict(&r, &ball_h).unwrap();
    assert!(rbar.max_abs_diff(&CurvatureTensor::constant(2, 1.0)) < 1e-15);
    let zero_h = SecondFundamentalForm::new(DMatrix::zeros(2, 2)).unwrap();
    let s3 = CurvatureTensor::constant(3, 0.7);
    assert!(gauss_codazzi_restrict(&s3, &zero_h).unwrap().max_abs_diff(&s3.tangential()) < 1e-15);
    let disk_h = SecondFundamentalForm::new(DMatrix::identity(1, 1)).unwrap();
    let rbar = gauss_codazzi_restrict(&CurvatureTensor::zero(2), &disk_h).unwrap();
    assert_eq!(rbar.components(), &[0.0]);
}

#[test]
fn flat_transport_is_identity() {
    let m = model(ModelKind::Halfspace);
    let path: Vec<Vec<f64>> = (0..100).map(|k| vec![1.5 + (k as f64 * 0.3).sin(), k as f64 * 0.01]).collect();
    assert_eq!(parallel_transport(m.chart(), &path).unwrap().matrix(), &DMatrix::identity(2, 2));
}

#[test]
fn latitude_loop_holonomy() {
    let m = model(ModelKind::Sphere2);
    let n = 10_000;
    let theta: f64 = 0.8;
    let path: Vec<Vec<f64>> = (0..=n).map(|k| vec![PI / 2.0 - theta, 2.0 * PI * k as f64 / n as f64]).collect();
    let got = holonomy_angle(&parallel_transport(m.chart(), &path).unwrap()).abs();
    let expected = 2.0 * PI * (1.0 - theta.cos());
    let wrapped = expected.rem_euclid(2.0 * PI);
    let target = if wrapped > PI { 2.0 * PI - wrapped } else { wrapped };
    assert!((got - target).abs() < 1e-3, "{got} vs {target}");
}

#[test]
fn transport_stays_orthogonal() {
    let m = model(ModelKind::Hemisphere);
    for n in [100, 1000] {
        let path: Vec<Vec<f64>> = (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                vec![0.3 + 0.2 * (6.0 * s).sin(), 2.0 * s]
            })
            .collect();
        let u = parallel_transport(m.chart(), &path).unwrap();
        let defect = (u.matrix().transpose() * u.matrix() - DMatrix::identity(2, 2)).amax();
        assert!(defect < 10.0 / n as f64, "{n}: {defect}");
    }
}

#[test]
fn scaling_the_metric() {
    let m = model(ModelKind::Sphere2).with_scale(2.0).unwrap();
    assert!((m.sectional_curvature() - 0.25).abs() < 1e-15);
    assert!(model(ModelKind::Disk).with_scale(-1.0).is_err());
}

proptest! {
    #[test]
    fn semi_geodesic_structure(x1 in 0.0f64..0.9, x2 in -1.0f64..1.0, x3 in -1.0f64..1.0) {
        for k in ModelKind::ALL {
            let m = model(k);
            let x: Vec<f64> = [x1, x2, x3][..m.dim()].to_vec();
            if let Ok(g) = metric_at(m.chart(), &x) {
                prop_assert_eq!(g[(0, 0)], 1.0);
                for j in 1..m.dim() {
                    prop_assert_eq!(g[(0, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn doubled_drift_is_odd(x1 in 0.01f64..0.8, x2 in -1.0f64..1.0) {
        for k in [ModelKind::Disk, ModelKind::Hemisphere] {
            let m = model(k);
            let b = drift_b(m.chart(), &[x1, x2]).unwrap();
            let bs = drift_b(m.chart(), &[-x1, x2]).unwrap();
            prop_assert!((b[0] + bs[0]).abs() < 1e-8);
            prop_assert!((b[1] - bs[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn metric_expansion_at_boundary(x1 in 1e-3f64..0.05, x2 in -0.5f64..0.5) {
        for k in [ModelKind::Disk, ModelKind::Hemisphere, ModelKind::Ball3] {
            let m = model(k);
            let mut x = vec![x1, x2, 0.0];
            x.truncate(m.dim());
            let g = metric_at(m.chart(), &x).unwrap();
            let mut xb = x.clone();
            xb[0] = 0.0;
            let g0 = metric_at(m.chart(), &xb).unwrap();
            let h = m.second_fundamental_form_at(&xb[1..]).unwrap();
            for i in 1..m.dim() {
                for j in 1..m.dim() {
                    let lin = g0[(i, j)] + 2.0 * SIGMA_H * h.matrix()[(i - 1, j - 1)] * g0[(i, i)] * x1;
                    prop_assert!((g[(i, j)] - lin).abs() / (x1 * x1) < 5.0);
                }
            }
        }
    }
}
