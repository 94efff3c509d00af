mod common;

use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;
use uopc::cone_model::*;
use uopc::rng::seeded;

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

#[test]
fn planar_samples_stay_in_cone() {
    let cone = &benchmark_cones_2d()[0];
    let e1 = unit([cone.ray(0)[0], cone.ray(0)[1]]);
    let e2 = unit([cone.ray(1)[0], cone.ray(1)[1]]);
    let det = e1[0] * e2[1] - e2[0] * e1[1];
    let data = sample_cone_2d(cone, 10_000, &mut seeded(3)).unwrap();
    for i in 0..data.len() {
        let p = data.point(i);
        let a = (p[0] * e2[1] - e2[0] * p[1]) / det;
        let b = (e1[0] * p[1] - p[0] * e1[1]) / det;
        assert!(a >= -1e-12 && b >= -1e-12, "point {i}: ({a}, {b})");
        let rx = a * e1[0] + b * e2[0] - p[0];
        let ry = a * e1[1] + b * e2[1] - p[1];
        assert!(rx.hypot(ry) < 1e-10);
    }
}

#[test]
fn spatial_samples_have_nonnegative_expansion() {
    let cone = &benchmark_cones_3d()[0];
    let rays = cone.extreme_rays().clone();
    let data = sample_cone_3d(cone, 5000, &mut seeded(5)).unwrap();
    for i in 0..data.len() {
        let b = Array1::from(data.point(i).to_vec());
        let x = common::lawson_hanson(&rays, &b);
        assert!(common::residual_norm(&rays, &x, &b) < 1e-8, "point {i}");
    }
}

#[test]
fn normalized_columns_are_unit() {
    let data = sample_uopc(&benchmark_cones_3d(), &[300, 300], &mut seeded(9)).unwrap();
    for col in data.normalized().columns() {
        assert!((col.dot(&col).sqrt() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn same_seed_same_data() {
    let a = sample_uopc(&benchmark_cones_2d(), &[50, 70], &mut seeded(4)).unwrap();
    let b = sample_uopc(&benchmark_cones_2d(), &[50, 70], &mut seeded(4)).unwrap();
    assert_eq!(a.points(), b.points());
    assert_eq!(a.labels(), b.labels());
}

#[test]
fn cross_cone_affinity_matches_pairwise_scan() {
    let data = sample_uopc(&benchmark_cones_2d(), &[100, 100], &mut seeded(42)).unwrap();
    let (a, b) = (data.members(1), data.members(2));
    // chord length from the angle between the unit vectors
    let mut oracle = f64::INFINITY;
    for p in &a {
        for q in &b {
            let cos = (p[0] * q[0] + p[1] * q[1]).clamp(-1.0, 1.0);
            oracle = oracle.min(2.0 * (0.5 * cos.acos()).sin());
        }
    }
    let got = empirical_affinity(&a, &b).unwrap();
    assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    assert_eq!(got, empirical_affinity(&b, &a).unwrap());
}

#[test]
fn density_matches_sorted_distance_matrix() {
    let cone = &benchmark_cones_2d()[0];
    let data = sample_cone_2d(cone, 200, &mut seeded(7)).unwrap();
    let pts = data.members(1);
    let n = pts.len();
    let mut dist = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            dist[[i, j]] = ((pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2)).sqrt();
        }
    }
    let j = 5;
    let mut oracle = f64::INFINITY;
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).filter(|&k| k != i).map(|k| dist[[i, k]]).collect();
        row.sort_by(f64::total_cmp);
        let r = row[j - 1];
        oracle = oracle.min(j as f64 / (std::f64::consts::PI * r * r));
    }
    let got = empirical_density(&pts, j).unwrap();
    assert!(((got - oracle) / oracle).abs() < 1e-12, "{got} vs {oracle}");
}

#[test]
fn ball_volume_agrees_with_monte_carlo() {
    let mut rng = seeded(2024);
    let samples = 200_000;
    for n in 1..=3 {
        for x in [0.5f64, 1.0, 2.0] {
            let cube = (2.0 * x).powi(n as i32);
            let hits = (0..samples)
                .filter(|_| (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * x).map(|v| v * v).sum::<f64>() <= x * x)
                .count();
            let p = hits as f64 / samples as f64;
            let estimate = p * cube;
            let se = cube * (p * (1.0 - p) / samples as f64).sqrt();
            let exact = ball_volume(n, x);
            assert!((estimate - exact).abs() <= 3.0 * se.max(1e-12), "n={n} x={x}: {estimate} vs {exact} (se {se})");
        }
    }
}

#[test]
fn certificate_boundary_is_inclusive() {
    let v = ball_volume(3, 0.4);
    let rho = 7.0 / v;
    let cert = check_certificate(0.4, rho, 7, 3).unwrap();
    assert!(cert.holds);
    assert!(cert.k_max >= 7);
}

fn cloud() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 2..40)
        .prop_filter("nonzero points", |pts| pts.iter().all(|p| p.iter().any(|v| v.abs() > 1e-3)))
}

fn normalize(pts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    pts.iter()
        .map(|p| {
            let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            p.iter().map(|v| v / n).collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn affinity_symmetric_and_shrinks(a in cloud(), b in cloud(), extra in cloud()) {
        let (a, b, extra) = (normalize(&a), normalize(&b), normalize(&extra));
        let va: Vec<&[f64]> = a.iter().map(Vec::as_slice).collect();
        let vb: Vec<&[f64]> = b.iter().map(Vec::as_slice).collect();
        let base = empirical_affinity(&va, &vb).unwrap();
        prop_assert_eq!(base, empirical_affinity(&vb, &va).unwrap());
        prop_assert!((0.0..=2.0).contains(&base));
        let mut grown = va.clone();
        grown.extend(extra.iter().map(Vec::as_slice));
        prop_assert!(empirical_affinity(&grown, &vb).unwrap() <= base);
    }

    #[test]
    fn density_ignores_point_order(pts in cloud(), seed in any::<u64>(), j in 1usize..5) {
        prop_assume!(j < pts.len());
        let pts = normalize(&pts);
        let view: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let mut order: Vec<usize> = (0..view.len()).collect();
        let mut rng = seeded(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let shuffled: Vec<&[f64]> = order.iter().map(|&i| view[i]).collect();
        let a = empirical_density(&view, j);
        let b = empirical_density(&shuffled, j);
        match (a, b) {
            (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
            (Err(_), Err(_)) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn cone_text_round_trip(rays in prop::collection::vec(prop::collection::vec(0.1f64..5.0, 3), 1..6)) {
        let cone = ConeSpec::from_rays(&rays).unwrap();
        let parsed: ConeSpec = cone.to_string().parse().unwrap();
        prop_assert_eq!(parsed, cone);
    }
}
