//! Graph operations checked against exhaustive constructions.

use std::collections::{BTreeMap, BTreeSet};

use beaconmesh::mesh::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_nodes(rng: &mut impl Rng, n: usize) -> Vec<TowerNode> {
    (0..n)
        .map(|i| {
            let p = GeoPoint::new(rng.gen_range(14.5..16.0), rng.gen_range(73.5..74.5)).unwrap();
            TowerNode::new(i as TowerId * 3 + 1, format!("t{i}"), p)
        })
        .collect()
}

fn brute_force_knn(
    nodes: &[TowerNode],
    k: usize,
    max_range_km: f64,
) -> BTreeMap<(TowerId, TowerId), f64> {
    let mut edges = BTreeMap::new();
    for a in nodes {
        let mut all: Vec<(f64, TowerId)> = nodes
            .iter()
            .filter(|b| b.id != a.id)
            .map(|b| (haversine_km(a.position, b.position).unwrap(), b.id))
            .collect();
        all.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));
        for &(d, id) in all.iter().take(k) {
            if d <= max_range_km {
                edges.insert((a.id.min(id), a.id.max(id)), d);
            }
        }
    }
    edges
}

fn exhaustive_nearest(query: GeoPoint, nodes: &[TowerNode]) -> TowerId {
    let mut best: Option<(f64, TowerId)> = None;
    for n in nodes {
        let d = haversine_km(query, n.position).unwrap();
        best = match best {
            Some((bd, bid)) if bd < d || (bd == d && bid < n.id) => Some((bd, bid)),
            _ => Some((d, n.id)),
        };
    }
    best.unwrap().1
}

fn permutations(items: &mut Vec<usize>, k: usize, out: &mut dyn FnMut(&[usize])) {
    if k == items.len() {
        out(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, out);
        items.swap(k, i);
    }
}

fn optimal_cycle_km(nodes: &[TowerNode]) -> f64 {
    let d = |i: usize, j: usize| haversine_km(nodes[i].position, nodes[j].position).unwrap();
    let mut rest: Vec<usize> = (1..nodes.len()).collect();
    let mut best = f64::INFINITY;
    permutations(&mut rest, 0, &mut |perm| {
        let mut len = d(0, perm[0]) + d(perm[perm.len() - 1], 0);
        for w in perm.windows(2) {
            len += d(w[0], w[1]);
        }
        best = best.min(len);
    });
    best
}

#[test]
fn knn_matches_brute_force_on_200_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE);
    let nodes = random_nodes(&mut rng, 200);
    for k in [1, 2, 3, 5] {
        for range in [5.0, 12.5, f64::INFINITY] {
            let graph = knn_connect(&nodes, k, range).unwrap();
            let got: BTreeMap<_, _> = graph
                .edges
                .iter()
                .map(|e| ((e.a, e.b), e.distance_km))
                .collect();
            let want = brute_force_knn(&nodes, k, range);
            assert_eq!(
                got.keys().collect::<Vec<_>>(),
                want.keys().collect::<Vec<_>>(),
                "k={k} range={range}"
            );
            for e in &graph.edges {
                assert!(e.a < e.b);
                assert!(e.distance_km <= range);
            }
        }
    }
}

#[test]
fn nearest_neighbor_matches_exhaustive_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let nodes = random_nodes(&mut rng, 100);
    for _ in 0..1000 {
        let q = GeoPoint::new(rng.gen_range(14.0..16.5), rng.gen_range(73.0..75.0)).unwrap();
        assert_eq!(
            nearest_neighbor(q, &nodes).unwrap().id,
            exhaustive_nearest(q, &nodes)
        );
    }
}

#[test]
fn greedy_tour_never_beats_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let nodes = random_nodes(&mut rng, n);
        let start = nodes[rng.gen_range(0..n)].id;
        let tour = nn_tsp_tour(&nodes, start).unwrap();
        let visited: BTreeSet<_> = tour.order.iter().copied().collect();
        assert_eq!(tour.order.len(), n);
        assert_eq!(visited.len(), n);
        assert_eq!(tour.order[0], start);
        assert!(tour.total_km >= optimal_cycle_km(&nodes) - 1e-9);
    }
}

#[test]
fn unit_square_greedy_tour_is_optimal() {
    let s = 0.01;
    let nodes = vec![
        TowerNode::new(0, "c0", GeoPoint::new(0.0, 0.0).unwrap()),
        TowerNode::new(1, "c1", GeoPoint::new(0.0, s).unwrap()),
        TowerNode::new(2, "c2", GeoPoint::new(s, s).unwrap()),
        TowerNode::new(3, "c3", GeoPoint::new(s, 0.0).unwrap()),
    ];
    let tour = nn_tsp_tour(&nodes, 0).unwrap();
    assert!((tour.total_km - optimal_cycle_km(&nodes)).abs() < 1e-9);
}

fn geo() -> impl Strategy<Value = GeoPoint> {
    (-90.0..=90.0f64, -180.0..180.0f64).prop_map(|(a, b)| GeoPoint::new(a, b).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn haversine_is_a_metric(a in geo(), b in geo(), c in geo()) {
        let ab = haversine_km(a, b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, haversine_km(b, a).unwrap());
        prop_assert_eq!(haversine_km(a, a).unwrap(), 0.0);
        if a != b {
            prop_assert!(ab > 0.0);
        }
        let ac = haversine_km(a, c).unwrap();
        let cb = haversine_km(c, b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn components_partition_the_nodes(seed in any::<u64>(), n in 2..40usize, k in 1..4usize, range in 1.0..60.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = random_nodes(&mut rng, n);
        let graph = knn_connect(&nodes, k, range).unwrap();
        let comps = connected_components(&graph);
        let mut all = BTreeSet::new();
        for c in &comps {
            for id in c {
                prop_assert!(all.insert(*id), "id {} in two components", id);
            }
        }
        prop_assert_eq!(all, nodes.iter().map(|n| n.id).collect::<BTreeSet<_>>());
        for w in comps.windows(2) {
            prop_assert!(w[0].first() < w[1].first());
        }
        for e in &graph.edges {
            prop_assert!(comps.iter().any(|c| c.contains(&e.a) && c.contains(&e.b)));
        }
    }
}
