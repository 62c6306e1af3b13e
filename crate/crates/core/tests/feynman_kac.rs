use std::f64::consts::PI;

use rbm_gbc::exterior::GradedOperator;
use rbm_gbc::feynman_kac::*;
use rbm_gbc::geometry::{ManifoldModel, ModelKind};
use rbm_gbc::stochastic::*;

fn model(k: ModelKind) -> ManifoldModel {
    ManifoldModel::new(k)
}

#[test]
fn projection_pair_is_complementary() {
    for d in 1..=4 {
        let pq = ProjectionPair::new(d);
        assert_eq!(&pq.p * &pq.p, pq.p);
        assert_eq!(&pq.q * &pq.q, pq.q);
        assert_eq!(&pq.p * &pq.q, GradedOperator::zeros(d));
        assert_eq!(&pq.q * &pq.p, GradedOperator::zeros(d));
    }
}

#[test]
fn interval_paths_have_unit_supertrace_after_hitting() {
    let m = model(ModelKind::Interval);
    let fields = ModelFields::new(&m).unwrap();
    let (mut hit, mut free) = (0, 0);
    for j in 0..2000 {
        let p = simulate_rbm(&m, &[0.2], 0.05, 200, &mut RngStream::new(3, j).rng()).unwrap();
        let s = path_supertrace(&m, &fields, &p).unwrap();
        if p.hits() {
            hit += 1;
            assert_eq!(s, 1.0);
        } else {
            free += 1;
            assert_eq!(s, 0.0);
        }
    }
    assert!(hit > 100 && free > 100);
}

#[test]
fn mckean_singer_on_the_interval() {
    let m = model(ModelKind::Interval);
    let r = mc_mckean_singer(&m, 0.05, 20_000, 1000, 11).unwrap();
    assert!(r.pathwise_unit);
    assert_eq!(r.interior.mean, 0.0);
    assert_eq!(r.interior.std_error, 0.0);
    assert!((r.boundary_closed_form - 1.0).abs() < 1e-6);
    assert!((r.boundary.mean - 1.0).abs() < 0.05, "{:?}", r.boundary);
}

#[test]
fn half_space_supertrace_parts() {
    let m = model(ModelKind::Halfspace);
    let x = [0.1, 0.0];
    let s = mc_supertrace(&m, 0.05, &x, 2000, 200, 1).unwrap();
    assert_eq!(s.interior.mean, 0.0);
    // flat: str(M) on bridges to x* is str(Q − l H Q) with H = 0
    let q = heat_kernel_double(&m, 0.05, &x, &[-0.1, 0.0]).unwrap();
    assert!((s.boundary.mean - 2.0 * q * GradedOperator::tangential_projection(2).supertrace()).abs() < 1e-12);
}

#[test]
fn sphere_interior_supertrace_approaches_euler_density() {
    let m = model(ModelKind::Sphere2);
    let s = mc_supertrace(&m, 0.02, &[0.0, 0.0], 2000, 400, 3).unwrap();
    let target = 1.0 / (2.0 * PI);
    assert!((s.interior.mean / target - 1.0).abs() < 0.1, "{:?}", s.interior);
    assert_eq!(s.boundary.mean, 0.0);
}

#[test]
fn interval_limit_coefficient() {
    let m = model(ModelKind::Interval);
    let b = boundary_limit_coefficient(&m, &[], 0, 0, &[0.05, 0.01], 3200, 200, 2).unwrap();
    assert_eq!(b.closed_form, 0.5);
    for p in &b.points {
        assert!((p.estimate.mean - 0.5).abs() < 1e-9, "{p:?}");
    }
}

#[test]
fn disk_limit_coefficient() {
    let m = model(ModelKind::Disk);
    let b = boundary_limit_coefficient(&m, &[0.0], 0, 1, &[0.01], 6400, 200, 2).unwrap();
    assert!((b.closed_form - 1.0 / (2.0 * PI)).abs() < 1e-8);
    let est = &b.points[0].estimate;
    assert!((est.mean / b.closed_form - 1.0).abs() < 0.1, "{est:?}");
}

#[test]
fn terms_above_the_line_vanish() {
    let m = model(ModelKind::Disk);
    // d = 2: (0, 2) sits above 2p + q = 1 and scales like √t
    let b = boundary_limit_coefficient(&m, &[0.0], 0, 2, &[0.04, 0.01], 3200, 200, 4).unwrap();
    assert_eq!(b.closed_form, 0.0);
    let (a, c) = (b.points[0].estimate.mean.abs(), b.points[1].estimate.mean.abs());
    assert!(c < a && (a / c - 2.0).abs() < 0.25, "{a} {c}");
    assert!(boundary_limit_coefficient(&model(ModelKind::Disk), &[0.0], 0, 0, &[0.01], 100, 200, 1).is_err());
}

#[test]
fn transport_correction_scales_linearly_on_the_sphere() {
    let m = model(ModelKind::Sphere2);
    let r1 = parallel_correction_moments(&m, &[0.0, 0.0], &[0.1, 0.05, 0.025], 1, 2000, 200, 8).unwrap();
    assert!((r1.slope - 1.0).abs() < 0.15, "{r1:?}");
    let r2 = parallel_correction_moments(&m, &[0.0, 0.0], &[0.1, 0.05, 0.025], 2, 2000, 200, 8).unwrap();
    assert!((r2.slope - 2.0).abs() < 0.3, "{r2:?}");
}

#[test]
fn flat_transport_correction_vanishes() {
    let m = model(ModelKind::Halfspace);
    let r = parallel_correction_moments(&m, &[0.1, 0.0], &[0.1, 0.05], 1, 200, 200, 8).unwrap();
    assert!(r.points.iter().all(|p| p.estimate.mean == 0.0));
}
