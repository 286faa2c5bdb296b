use covconn::commgraph::{build_graph, build_graph_naive, build_graph_with_range, check_spacing, is_connected, mst_bottleneck};
use covconn::coverage::{check_coverage, is_point_covered, uncovered_witness_in_disk};
use covconn::deployment::Deployment;
use covconn::geometry::{
    circle_circle_intersection, covered_arc_by_equal_disk, disk_segment_covered_interval, Point, Rectangle,
};
use covconn::intervals::{AngularIntervalSet, Interval, IntervalUnion};
use proptest::prelude::*;

fn point_in(a: f64, b: f64) -> impl Strategy<Value = Point> {
    (0.0..=a, 0.0..=b).prop_map(|(x, y)| Point::new(x, y))
}

fn deployment(max: usize, side: f64) -> impl Strategy<Value = Deployment> {
    prop::collection::vec(point_in(side, side), 1..max).prop_filter_map("duplicate sensors", move |pts| {
        Deployment::new(pts, 1.0, 2.0, Rectangle::new(side, side).unwrap(), None).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn triangle_inequality(p in point_in(50.0, 50.0), q in point_in(50.0, 50.0), r in point_in(50.0, 50.0)) {
        prop_assert!(p.dist(&r) <= p.dist(&q) + q.dist(&r) + 1e-12);
        prop_assert_eq!(p.dist(&q), q.dist(&p));
    }

    #[test]
    fn intersection_points_lie_on_both_circles(
        c1 in point_in(10.0, 10.0),
        angle in 0.0..std::f64::consts::TAU,
        d in 0.01..1.99f64,
        r in 0.5..3.0f64,
    ) {
        let d = d * r;
        let c2 = Point::new(c1.x + d * angle.cos(), c1.y + d * angle.sin());
        let pts = circle_circle_intersection(c1, c2, r, 1e-9 * r).points();
        prop_assert_eq!(pts.len(), 2);
        for p in pts {
            prop_assert!((p.dist(&c1) - r).abs() <= 1e-9 * r);
            prop_assert!((p.dist(&c2) - r).abs() <= 1e-9 * r);
        }
    }

    #[test]
    fn covered_arc_matches_sampling(
        angle in 0.0..std::f64::consts::TAU,
        d in 0.05..1.95f64,
        probe in 0.0..1.0f64,
    ) {
        let c = Point::new(0.0, 0.0);
        let other = Point::new(d * angle.cos(), d * angle.sin());
        let (start, span) = covered_arc_by_equal_disk(c, other, 1.0).unwrap();
        prop_assert!((span / 2.0 - (d / 2.0).acos()).abs() < 1e-12);
        let theta = probe * std::f64::consts::TAU;
        let p = Point::at_angle(c, 1.0, theta);
        let inside = p.dist(&other) < 1.0;
        let rel = (theta - start).rem_euclid(std::f64::consts::TAU);
        let on_arc = rel > 0.0 && rel < span;
        let edge = (p.dist(&other) - 1.0).abs() < 1e-9;
        prop_assert!(edge || inside == on_arc, "theta {theta}, start {start}, span {span}");
    }

    #[test]
    fn segment_interval_matches_sampling(
        c in point_in(4.0, 4.0),
        p0 in point_in(4.0, 4.0),
        p1 in point_in(4.0, 4.0),
        r in 0.2..2.5f64,
    ) {
        prop_assume!(p0.dist(&p1) > 1e-6);
        let piece = disk_segment_covered_interval(c, r, p0, p1);
        for k in 0..=200 {
            let t = k as f64 / 200.0;
            let q = Point::new(p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y));
            let dq = q.dist(&c);
            if (dq - r).abs() < 1e-9 {
                continue;
            }
            let claimed = piece.is_some_and(|iv| iv.contains(t));
            prop_assert_eq!(claimed, dq < r, "t = {}", t);
        }
    }

    #[test]
    fn interval_union_algebra(
        raw in prop::collection::vec((0.0..10.0f64, 0.0..3.0f64, any::<bool>(), any::<bool>()), 0..8),
        raw2 in prop::collection::vec((0.0..10.0f64, 0.0..3.0f64, any::<bool>(), any::<bool>()), 0..8),
        probe in 0.0..13.0f64,
    ) {
        let mk = |v: &Vec<(f64, f64, bool, bool)>| IntervalUnion::from_intervals(
            v.iter().map(|&(lo, len, a, b)| Interval::new(lo, lo + len, a, b)),
        );
        let a = mk(&raw);
        let b = mk(&raw2);
        let inter = a.intersection(&b);
        let diff = a.difference(&b);
        prop_assert_eq!(inter.contains(probe), a.contains(probe) && b.contains(probe));
        prop_assert_eq!(diff.contains(probe), a.contains(probe) && !b.contains(probe));
        prop_assert!(inter.is_subset_of(&a) && inter.is_subset_of(&b));
        prop_assert!((inter.measure() + diff.measure() - a.measure()).abs() < 1e-9);
        let sum: f64 = raw.iter().map(|r| r.1).sum();
        prop_assert!(a.measure() <= sum + 1e-9);
    }

    #[test]
    fn angular_sets_wrap_consistently(
        start in -10.0..10.0f64,
        span in 0.0..7.0f64,
        probe in 0.0..std::f64::consts::TAU,
    ) {
        let arc = AngularIntervalSet::arc(start, span, true, true);
        let rel = (probe - start).rem_euclid(std::f64::consts::TAU);
        let near_end = rel < 1e-9 || (rel - span).abs() < 1e-9 || (std::f64::consts::TAU - rel) < 1e-9;
        if !near_end {
            prop_assert_eq!(arc.contains(probe), span >= std::f64::consts::TAU || rel <= span);
        }
        let rest = AngularIntervalSet::full().difference(&arc);
        prop_assert!(arc.union(&rest).is_full());
        prop_assert!(arc.intersection(&rest).is_empty());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grid_graph_matches_naive(d in deployment(60, 8.0), r_c in 0.3..4.0f64) {
        prop_assert_eq!(build_graph_with_range(d.sensors(), r_c), build_graph_naive(d.sensors(), r_c));
    }

    #[test]
    fn connectivity_is_monotone_in_range(d in deployment(40, 8.0), r1 in 0.3..4.0f64, r2 in 0.3..4.0f64) {
        let (lo, hi) = if r1 < r2 { (r1, r2) } else { (r2, r1) };
        if is_connected(&build_graph_with_range(d.sensors(), lo)) {
            prop_assert!(is_connected(&build_graph_with_range(d.sensors(), hi)));
        }
        if d.len() >= 2 {
            let b = mst_bottleneck(d.sensors()).unwrap();
            prop_assert_eq!(is_connected(&build_graph_with_range(d.sensors(), hi)), b < hi);
        }
    }

    #[test]
    fn covered_verdict_survives_sampling(d in deployment(50, 4.0), probes in prop::collection::vec(point_in(4.0, 4.0), 64)) {
        let report = check_coverage(&d);
        if report.covered {
            for p in probes {
                prop_assert!(is_point_covered(p, &d), "{p:?}");
            }
        } else {
            let w = report.witness.unwrap();
            prop_assert!(d.region().contains(w));
            prop_assert!(report.marginal || !is_point_covered(w, &d));
        }
    }

    #[test]
    fn adding_a_sensor_keeps_coverage(d in deployment(50, 4.0), extra in point_in(4.0, 4.0)) {
        prop_assume!(check_coverage(&d).covered);
        if let Ok(more) = d.with_sensor(extra) {
            prop_assert!(check_coverage(&more).covered);
        }
    }

    #[test]
    fn removal_only_uncovers_the_removed_disk(d in deployment(50, 4.0), pick in any::<prop::sample::Index>()) {
        prop_assume!(check_coverage(&d).covered);
        let id = pick.index(d.len());
        let removed = d.sensors()[id];
        let after = d.without_sensor(id).unwrap();
        let report = check_coverage(&after);
        if let Some(w) = report.witness {
            prop_assert!(w.dist(&removed) <= d.r_s() + 1e-9);
        }
        if let Some(w) = uncovered_witness_in_disk(&after, removed) {
            prop_assert!(w.dist(&removed) <= d.r_s() + 1e-9);
            prop_assert!(!is_point_covered(w, &after));
        }
    }

    #[test]
    fn spacing_report_matches_brute_force(d in deployment(60, 6.0)) {
        let report = check_spacing(&d);
        let s = d.sensors();
        let mut expected = 0;
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                if s[i].dist(&s[j]) < d.r_s() - d.tau() {
                    expected += 1;
                }
            }
        }
        prop_assert_eq!(report.violating_pairs.len(), expected);
        prop_assert_eq!(report.ok, expected == 0);
        prop_assert_eq!(build_graph(&d).node_count(), d.len());
    }
}
