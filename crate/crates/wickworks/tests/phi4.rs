use proptest::prelude::*;
use wickworks::feynman::{named, valuate, Diagram, Vertex};
use wickworks::phi4::{
    asymptotic_check, counterterms_d3, d_star_e, d_star_m, fit_line, linked_cluster,
    mass_type_classes, mc_partition_ratio, partition_ratio_series, report_json, thresholds,
    two_point_series, wick_map_hermite_identity, SERIES_SCHEMA,
};
use wickworks::rational::{ri, rq};
use wickworks::torusfield::green_truncated;

#[test]
fn low_orders_of_the_ratio_series() {
    let s = partition_ratio_series(1.0, 8, 3).unwrap();
    assert_eq!(s.value(0), 1.0);
    assert_eq!(s.value(1), 0.0);
    let fgiv = valuate(&named::fgiv(), 1.0, 8).unwrap();
    assert!((s.value(2) - 12.0 * fgiv).abs() < 1e-12 * s.value(2));
    let fgvi = valuate(&named::fgvi(), 1.0, 8).unwrap();
    assert!((s.value(3) + 288.0 * fgvi).abs() < 1e-12 * s.value(3).abs());
}

#[test]
fn linked_cluster_in_two_dimensions() {
    let r = linked_cluster(2.0, 4, 4).unwrap();
    assert!(r.routes_agree && r.exp_roundtrip);
    for n in 0..=4 {
        let a = r.connected.value(n);
        let b = r.via_log.value(n);
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "order {n}");
    }
}

#[test]
fn two_point_function() {
    let x = [0.1];
    let y = [0.35];
    let s = two_point_series(1, 6, 2, &x, &y).unwrap();
    assert!((s.value(0) - green_truncated(&[-0.25], 1, 6).unwrap()).abs() < 1e-14);
    assert_eq!(s.value(1), 0.0);
    let chain = Diagram::new(
        vec![
            Vertex::internal(4),
            Vertex::internal(4),
            Vertex::external("x"),
            Vertex::external("y"),
        ],
        vec![(0, 1), (0, 1), (0, 1), (0, 2), (1, 3)],
    )
    .unwrap();
    assert_eq!(s.coefficient(2).unwrap().diagrams.coeff(&chain), ri(96));
    assert!(two_point_series(1, 6, 3, &x, &y).is_err());
}

#[test]
fn wick_map_generates_scaled_hermite() {
    assert!(wick_map_hermite_identity(6).unwrap());
}

#[test]
fn mass_type_class_counts() {
    let classes = mass_type_classes(4).unwrap();
    let per_v: Vec<usize> = (2..=4)
        .map(|v| classes.iter().filter(|c| c.vertices == v).count())
        .collect();
    assert_eq!(per_v, vec![1, 2, 6]);
    let two = classes.iter().find(|c| c.vertices == 2).unwrap();
    assert_eq!(two.degree_text(), "6 − 2d");
}

#[test]
fn threshold_table() {
    let t = thresholds(3.5).unwrap();
    assert_eq!((t.n_star_e, t.n_star_m), (7, 4));
    assert_eq!(d_star_m(3), rq(10, 3));
    assert_eq!(d_star_e(1), ri(2));
    assert!(thresholds(4.0).is_err());
    assert!(thresholds(2.0).is_err());
}

#[test]
fn counterterm_factors() {
    let c = counterterms_d3(0.1, 4).unwrap();
    assert!((c.beta2 - 48.0 * c.pi_bubble).abs() < 1e-12 * c.beta2);
    assert!((c.gamma2 - 12.0 * c.pi_fgiv).abs() < 1e-12 * c.gamma2);
    assert!((c.gamma3 + 288.0 * c.pi_fgvi).abs() < 1e-12 * c.gamma3.abs());
    assert!((c.beta - c.beta2 * 0.01).abs() < 1e-15);
}

#[test]
fn report_has_schema_and_blocks() {
    let r = report_json(3.0, 4, 2, None).unwrap();
    assert_eq!(r["schema"], SERIES_SCHEMA);
    assert!(r.get("counterterms").is_some());
    assert!(r.get("thresholds").is_some());
    let r1 = report_json(1.0, 4, 3, None).unwrap();
    assert!(r1.get("counterterms").is_none());
    assert_eq!(r1["linked_cluster_routes_agree"], true);
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| mc_partition_ratio(1, 4, 0.05, 10_000, 42).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    assert!(mc_partition_ratio(1, 4, 0.05, 0, 42).is_err());
    assert!(mc_partition_ratio(3, 4, 0.05, 10, 42).is_err());
}

#[test]
fn small_asymptotic_check() {
    let r = asymptotic_check(4, &[0.03, 0.06], 20_000, 7, 1.0).unwrap();
    assert!(r.passed(), "{r:?}");
}

proptest! {
    #[test]
    fn fit_line_recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let x: Vec<f64> = (0..6).map(|i| i as f64 * 0.7).collect();
        let y: Vec<f64> = x.iter().map(|t| a * t + b).collect();
        let (s, i) = fit_line(&x, &y);
        prop_assert!((s - a).abs() < 1e-9 && (i - b).abs() < 1e-9);
    }

    #[test]
    fn thresholds_increase_towards_four(n in 1usize..40) {
        prop_assert!(d_star_m(n) < d_star_m(n + 1) && d_star_m(n + 1) < ri(4));
        prop_assert!(d_star_e(n) < d_star_e(n + 1));
        prop_assert!(n == 1 || d_star_e(n) < d_star_m(n));
    }
}
