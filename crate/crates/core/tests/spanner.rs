use proptest::prelude::*;
use rand::Rng;
use thetatrack::rng::{stream_rng, INSTANCE_STREAM};
use thetatrack::spanner::all_pairs;
use thetatrack::{ConeSystem, Point, ThetaGraph, VertexId};

fn random_points(n: usize, seed: u64) -> Vec<Point> {
    let mut rng = stream_rng(seed, INSTANCE_STREAM);
    let side = (n as f64).sqrt();
    (0..n)
        .map(|_| Point::new(rng.random::<f64>() * side, rng.random::<f64>() * side))
        .collect()
}

fn graph(n: usize, k: usize, seed: u64) -> ThetaGraph {
    ThetaGraph::build(random_points(n, seed), ConeSystem::new(k).unwrap()).unwrap()
}

/// Independent recheck: for every vertex and cone, scan all points with an
/// explicit angle test and compare the chosen neighbor's projection.
#[test]
fn out_edges_attain_min_projection() {
    let g = graph(50, 8, 11);
    let k = 8;
    let theta = std::f64::consts::TAU / k as f64;
    let pts = g.points();
    for v in 0..pts.len() {
        for cone in 0..k {
            let lo = cone as f64 * theta;
            let hi = lo + theta;
            let bis = Point::new(((lo + hi) / 2.0).cos(), ((lo + hi) / 2.0).sin());
            let members: Vec<(usize, f64)> = (0..pts.len())
                .filter(|&w| w != v)
                .filter_map(|w| {
                    let d = pts[w] - pts[v];
                    let mut a = d.y.atan2(d.x);
                    if a < 0.0 {
                        a += std::f64::consts::TAU;
                    }
                    (a >= lo && a < hi).then_some((w, d.x * bis.x + d.y * bis.y))
                })
                .collect();
            match g.out_edge(VertexId(v), cone) {
                None => assert!(members.is_empty(), "v={v} cone={cone}"),
                Some(w) => {
                    let min = members.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
                    let chosen = members
                        .iter()
                        .find(|m| m.0 == w.0)
                        .expect("neighbor in cone");
                    assert!((chosen.1 - min).abs() < 1e-12, "v={v} cone={cone}");
                }
            }
        }
    }
}

#[test]
fn edges_are_exactly_the_out_edges() {
    let g = graph(120, 9, 2);
    let mut from_out = std::collections::BTreeSet::new();
    for v in 0..g.len() {
        let row = g.out_edges(VertexId(v));
        assert!(row.iter().flatten().count() <= 9);
        for w in row.iter().flatten() {
            from_out.insert((v.min(w.0), v.max(w.0)));
        }
    }
    let listed: std::collections::BTreeSet<_> = g.edges().iter().map(|e| (e.u.0, e.v.0)).collect();
    assert_eq!(from_out, listed);
    for e in g.edges() {
        assert!((e.length - g.point(e.u).dist(g.point(e.v))).abs() < 1e-15);
    }
}

#[test]
fn construction_is_deterministic() {
    assert_eq!(graph(150, 8, 5), graph(150, 8, 5));
}

#[test]
fn routes_respect_bound_and_dijkstra() {
    let g = graph(200, 8, 7);
    let t = g.cones().spanning_ratio().unwrap();
    let mut rng = stream_rng(99, 3);
    for _ in 0..100 {
        let a = VertexId(rng.random_range(0..200));
        let b = VertexId(rng.random_range(0..200));
        let path = g.route(a, b).unwrap();
        assert_eq!(path.first(), Some(&a));
        assert_eq!(path.last(), Some(&b));
        assert!(path.len() <= g.len());
        // each hop is an out-edge in the cone containing the target
        for w in path.windows(2) {
            let cone = g.cones().cone_of(g.point(w[0]), g.point(b)).unwrap();
            assert_eq!(g.out_edge(w[0], cone), Some(w[1]));
            assert!(g.point(w[1]).dist(g.point(b)) < g.point(w[0]).dist(g.point(b)));
        }
        let len = g.path_length(&path);
        let euclid = g.point(a).dist(g.point(b));
        let sp = g.shortest_paths(a)[b.0];
        assert!(len <= t * euclid + 1e-9);
        assert!(len >= sp - 1e-9);
    }
}

#[test]
fn certified_ratio_under_bound() {
    let g = graph(200, 8, 13);
    let max = g.certify_spanning_ratio(&all_pairs(200)).unwrap();
    assert!(max >= 1.0);
    assert!(max <= g.cones().spanning_ratio().unwrap() + 1e-9);
}

#[test]
fn certify_rejects_out_of_range() {
    let g = graph(10, 8, 1);
    assert!(g
        .certify_spanning_ratio(&[(VertexId(0), VertexId(10))])
        .is_err());
    assert!(g
        .certify_spanning_ratio(&[(VertexId(3), VertexId(3))])
        .is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn certified_ratio_never_exceeds_t(seed in any::<u64>(), k in 7usize..14, n in 20usize..90) {
        let g = graph(n, k, seed);
        let max = g.certify_spanning_ratio(&all_pairs(n)).unwrap();
        prop_assert!(max <= g.cones().spanning_ratio().unwrap() + 1e-9);
    }

    #[test]
    fn routing_terminates_within_bound(seed in any::<u64>(), k in 7usize..14) {
        let g = graph(60, k, seed);
        let t = g.cones().spanning_ratio().unwrap();
        for a in 0..60 {
            let b = (a * 17 + 5) % 60;
            let path = g.route(VertexId(a), VertexId(b)).unwrap();
            prop_assert!(g.path_length(&path) <= t * g.point(VertexId(a)).dist(g.point(VertexId(b))) + 1e-9);
        }
    }
}
