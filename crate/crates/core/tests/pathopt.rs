mod common;

use std::collections::{BTreeSet, HashSet};

use hexcube::dataset::{generate_dataset, DatasetConfig};
use hexcube::mesh::Vec3;
use hexcube::pathopt::{
    boundary_edge_count, edge_weight, format_paths, optimize_boundaries, parse_paths, paths_from_segmentation, EdgeGraph, PathSet,
    PathWeights,
};
use hexcube::polycube::template;
use hexcube::segmentation::{face_adjacency, label_components, segment, CentroidSource, SegmentConfig, TruthSource};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(seed: u64, n: usize) -> (EdgeGraph, PathWeights) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos: Vec<Vec3> = (0..n)
        .map(|_| Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    let mut edges = Vec::new();
    let mut sharp = HashSet::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(0.5) {
                edges.push((a, b));
                if rng.random_bool(0.3) {
                    sharp.insert((a, b));
                }
            }
        }
    }
    let w = PathWeights {
        lambda0_sharp: rng.random_range(1.0..5.0),
        lambda0: rng.random_range(0.5..2.0),
        lambda1: rng.random_range(0.0..1.0),
        lambda2: rng.random_range(0.0..1.0),
    };
    (EdgeGraph::new(pos, &edges, &sharp), w)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn dijkstra_matches_exhaustive_search(seed in 0u64..100_000, n in 2usize..9) {
        let (g, w) = random_graph(seed, n);
        let (want, steps) = common::exhaustive_path(&g, 0, n - 1, &w);
        prop_assert!(steps.iter().all(|&s| s >= 0.0));
        match (g.shortest_path(0, n - 1, &w, None), want) {
            (Ok(p), Some((c, _))) => {
                let cost = g.path_cost(&p, &w).unwrap();
                prop_assert!((cost - c).abs() <= 1e-9 * (1.0 + c), "{cost} vs {c}");
                prop_assert_eq!(p.iter().collect::<HashSet<_>>().len(), p.len());
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{got:?} vs {want:?}"),
        }
    }

    #[test]
    fn blocked_vertices_are_avoided(seed in 0u64..100_000, n in 3usize..10, block in 1usize..8) {
        let (g, w) = random_graph(seed, n);
        let mut allowed = vec![true; n];
        allowed[block % (n - 2) + 1] = false;
        if let Ok(p) = g.shortest_path(0, n - 1, &w, Some(&allowed)) {
            prop_assert!(p.iter().all(|&v| allowed[v]));
        }
    }

    #[test]
    fn straight_steps_cost_length_over_lambda0(len in 0.01f64..10.0, l0 in 0.1f64..5.0, l1 in 0.0f64..2.0, l2 in 0.0f64..2.0) {
        let d = Vec3::new(0.3, -0.4, 1.2).normalized() * len;
        let c = edge_weight(len, d, Some(d), d * 3.0, l0, l1, l2);
        prop_assert!((c - len / l0).abs() <= 1e-12 * (1.0 + c));
        let back = edge_weight(len, d, Some(-d), -d, l0, l1, l2);
        prop_assert!((back - (len / l0 + (l1 + l2) * std::f64::consts::PI)).abs() <= 1e-9);
    }
}

#[test]
fn weights_are_validated() {
    assert!(PathWeights::default().validate().is_ok());
    let bad = [
        PathWeights { lambda0: 0.0, ..Default::default() },
        PathWeights { lambda0_sharp: -1.0, ..Default::default() },
        PathWeights { lambda1: -0.1, ..Default::default() },
        PathWeights { lambda2: f64::NAN, ..Default::default() },
    ];
    assert!(bad.iter().all(|w| w.validate().is_err()));
}

#[test]
fn path_text_round_trips() {
    let p = PathSet {
        corner_map: vec![4, 9, 0],
        paths: vec![vec![4, 5, 9], vec![9, 0]],
    };
    assert_eq!(parse_paths(&format_paths(&p)).unwrap(), p);
    assert!(parse_paths("corners 1\n0 3\npaths 1\n0 3\n").is_err());
}

#[test]
fn cube_boundaries_follow_twelve_corner_paths() {
    let pc = template(1).unwrap();
    let s = &generate_dataset(&[1], 1, 1, &DatasetConfig::default()).unwrap()[0];
    let locs = TruthSource::new(s.regions.clone()).locations(&s.mesh, &pc).unwrap();
    let seg = segment(&s.mesh, &pc, &locs, &SegmentConfig::default()).unwrap().segmentation;
    let b = optimize_boundaries(&s.mesh, &seg, &pc, &PathWeights::default()).unwrap();
    let paths = &b.paths;
    assert_eq!(paths.paths.len(), 12);
    assert_eq!(paths.corner_map.iter().collect::<BTreeSet<_>>().len(), 8);
    paths.check_disjoint().unwrap();
    for (e, p) in pc.edges.iter().zip(&paths.paths) {
        let (a, z) = e.ends;
        assert_eq!((p[0], *p.last().unwrap()), (paths.corner_map[a], paths.corner_map[z]));
    }
    // patch boundaries run exactly along the paths
    let labels = b.segmentation.face_labels();
    let path_edges: usize = paths.paths.iter().map(|p| p.len() - 1).sum();
    assert_eq!(boundary_edge_count(&b.mesh, &labels), path_edges);
    assert_eq!(label_components(&face_adjacency(&b.mesh), &labels).len(), 6);
    let again = paths_from_segmentation(&b.mesh, &b.segmentation, &pc).unwrap();
    assert_eq!(again.corner_map, paths.corner_map);
    assert_eq!(again.path_edges(), paths.path_edges());
}
