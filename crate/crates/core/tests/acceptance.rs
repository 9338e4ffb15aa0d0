//! End-to-end acceptance checks, one test per criterion.

mod common;

use std::time::{Duration, Instant};

use hexcube::dataset::{all_types, generate_dataset, DatasetConfig};
use hexcube::gcn::{
    batch_loss_and_grad, gcn_layer_forward, train_classifier, ClassifierObjective, GcnModel, GraphInput, ModelKind,
    NormalizedAdjacency, TrainConfig,
};
use hexcube::hexgen::assemble_with_paths;
use hexcube::mesh::io::format_vtk;
use hexcube::mesh::{det3, HexMesh, Vec3};
use hexcube::pathopt::{optimize_boundaries, EdgeGraph, PathWeights};
use hexcube::pipeline::{run_on_mesh, PipelineConfig};
use hexcube::polycube::{template, NUM_TYPES};
use hexcube::quality::{
    energy_gradient, energy_with_scale, mean_edge_length, pillow, scaled_jacobian, vertex_energy_gradient, QualityReport,
};
use hexcube::segmentation::{agreement, kmeans, segment, CentroidSource, SegmentConfig, TruthSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: usize, name: &str, pass: bool, detail: String) {
    println!("acceptance {n:>2} {}: {name} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance {n} failed: {name} ({detail})");
}

#[test]
fn acceptance_01_gcn_layer_matches_dense_oracle() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=50);
        let density = rng.random_range(0.0..0.3);
        let a = common::random_adjacency(&mut rng, n, density);
        let d = rng.random_range(1..=12);
        let h = rng.random_range(1..=16);
        let f = common::random_matrix(&mut rng, n, d);
        let w = common::random_matrix(&mut rng, d, h);
        let adj = NormalizedAdjacency::from_dense(&a).unwrap();
        let got = gcn_layer_forward(f.view(), &adj, w.view()).unwrap();
        let want = common::dense_gcn_layer(&a, &f, &w);
        for (x, y) in got.iter().zip(&want) {
            worst = worst.max((x - y).abs());
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    report(1, "GCN layer oracle", worst <= 1e-10 && secs < 10.0, format!("max abs error {worst:.2e}, {secs:.2} s"));
}

#[test]
fn acceptance_02_loss_gradient_matches_finite_differences() {
    let data = generate_dataset(&[1], 5, 7, &DatasetConfig::default()).unwrap();
    let inputs: Vec<GraphInput> = data.iter().map(|s| GraphInput::new(ModelKind::Classifier, &s.graph)).collect();
    let labels = [0, 3, 5, 7, 10];
    let obj = ClassifierObjective { labels: &labels };
    let idx: Vec<usize> = (0..5).collect();
    let lambda = 1e-3;
    let mut model = GcnModel::glorot(ModelKind::Classifier, 5);
    let (_, grads) = batch_loss_and_grad(&model, &inputs, &idx, &obj, lambda).unwrap();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for t in 0..grads.len() {
        // the four largest partials of every tensor, each well above round-off
        let mut order: Vec<usize> = (0..grads[t].len()).collect();
        let flat: Vec<f64> = grads[t].iter().copied().collect();
        order.sort_by(|&a, &b| flat[b].abs().total_cmp(&flat[a].abs()));
        for &i in order.iter().take(4) {
            let g = flat[i];
            let orig = model.tensors[t].as_slice().unwrap()[i];
            model.tensors[t].as_slice_mut().unwrap()[i] = orig + h;
            let lp = batch_loss_and_grad(&model, &inputs, &idx, &obj, lambda).unwrap().0;
            model.tensors[t].as_slice_mut().unwrap()[i] = orig - h;
            let lm = batch_loss_and_grad(&model, &inputs, &idx, &obj, lambda).unwrap().0;
            model.tensors[t].as_slice_mut().unwrap()[i] = orig;
            let fd = (lp - lm) / (2.0 * h);
            worst = worst.max((fd - g).abs() / g.abs().max(fd.abs()));
            checked += 1;
        }
    }
    let zero = GcnModel::zeros(ModelKind::Classifier);
    let uniform = batch_loss_and_grad(&zero, &inputs, &idx, &obj, 0.0).unwrap().0;
    let dev = (uniform - (NUM_TYPES as f64).ln()).abs();
    report(
        2,
        "loss gradient check",
        worst <= 1e-4 && dev <= 1e-9,
        format!("{checked} partials, max relative error {worst:.2e}, uniform loss - ln 11 = {dev:.1e}"),
    );
}

#[test]
fn acceptance_03_classifier_reaches_ninety_percent() {
    let t0 = Instant::now();
    let data = generate_dataset(&all_types(), 50, 1, &DatasetConfig::default()).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        target_accuracy: Some(0.9),
        ..TrainConfig::default()
    };
    let (_, trace) = train_classifier(&data, &cfg).unwrap();
    let last = trace.last().unwrap();
    let secs = t0.elapsed().as_secs_f64();
    report(
        3,
        "desk-scale classifier",
        last.val_metric >= 0.9 && trace.epochs.len() <= 60 && secs < 600.0,
        format!("val accuracy {:.3} after {} epochs, {secs:.0} s", last.val_metric, trace.epochs.len()),
    );
}

#[test]
fn acceptance_04_kmeans_matches_brute_force_lloyd() {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    let mut increases = 0;
    for inst in 0..50 {
        let n = rng.random_range(2..=30);
        let k = rng.random_range(1..=n.min(6));
        let points: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        // every fifth instance starts all seeds at one point to force empty clusters
        let seeds: Vec<Vec3> = if inst % 5 == 0 {
            vec![points[0]; k]
        } else {
            (0..k).map(|_| points[rng.random_range(0..n)]).collect()
        };
        let tol = [0.0, 1e-3, 0.03][inst % 3];
        let got = kmeans(&points, &seeds, tol, 100).unwrap();
        let want = common::brute_lloyd(&points, &seeds, tol, 100);
        let same = got.assignment == want.assignment
            && got.trace.len() == want.trace.len()
            && got.centroids.iter().zip(&want.centroids).all(|(a, b)| a.dist(*b) <= 1e-12);
        mismatches += usize::from(!same);
        increases += got.trace.windows(2).filter(|w| w[1] > w[0] * (1.0 + 1e-12)).count();
    }
    report(
        4,
        "k-means oracle",
        mismatches == 0 && increases == 0,
        format!("{mismatches} mismatching instances, {increases} loss increases"),
    );
}

#[test]
fn acceptance_05_dijkstra_matches_exhaustive_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut mismatches = 0;
    let mut negative = 0;
    let mut reachable = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=10);
        let pos: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
            .collect();
        let mut edges = Vec::new();
        let mut sharp = std::collections::HashSet::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.random_bool(0.45) {
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
        let g = EdgeGraph::new(pos, &edges, &sharp);
        let (src, dst) = (0, n - 1);
        let (want, steps) = common::exhaustive_path(&g, src, dst, &w);
        negative += steps.iter().filter(|&&s| s < 0.0).count();
        match (g.shortest_path(src, dst, &w, None), want) {
            (Ok(p), Some((c, _))) => {
                reachable += 1;
                let simple = p.iter().collect::<std::collections::HashSet<_>>().len() == p.len();
                let cost = g.path_cost(&p, &w).unwrap();
                if !(simple && p[0] == src && *p.last().unwrap() == dst && (cost - c).abs() <= 1e-9 * (1.0 + c)) {
                    mismatches += 1;
                }
            }
            (Err(_), None) => {}
            _ => mismatches += 1,
        }
    }
    report(
        5,
        "Dijkstra oracle",
        mismatches == 0 && negative == 0,
        format!("{mismatches} mismatches over 100 graphs ({reachable} connected), {negative} negative weights"),
    );
}

#[test]
fn acceptance_06_coplanar_faces_split_by_centroids() {
    let pc = template(4).unwrap();
    let coplanar = pc.coplanar_label_groups();
    let data = generate_dataset(&[4], 1, 1, &DatasetConfig::default()).unwrap();
    let s = &data[0];
    let locs = TruthSource::new(s.regions.clone()).locations(&s.mesh, &pc).unwrap();
    let r = segment(&s.mesh, &pc, &locs, &SegmentConfig::default()).unwrap();
    let labels = r.segmentation.face_labels();
    let n = pc.num_boundary_faces();
    // in normal space the coplanar faces fall in one cluster
    let dominant = |f: usize| {
        let mut count = vec![0usize; r.normal_cluster_count()];
        for t in (0..s.mesh.num_faces()).filter(|&t| s.regions[t] == f) {
            count[r.normal_assignment[t]] += 1;
        }
        (0..count.len()).max_by_key(|&c| (count[c], std::cmp::Reverse(c))).unwrap()
    };
    let merged = coplanar.iter().all(|g| g.iter().all(|&f| dominant(f) == dominant(g[0])));
    let sizes = r.segmentation.patch_sizes();
    let all_present = sizes.len() == n && sizes.iter().all(|&c| c > 0);
    // triangles of a coplanar group inside its shared normal cluster are
    // told apart by centroid refinement
    let mut inside = 0;
    let mut right = 0;
    for g in &coplanar {
        let c = dominant(g[0]);
        for t in 0..labels.len() {
            if g.contains(&s.regions[t]) && r.normal_assignment[t] == c {
                inside += 1;
                right += usize::from(labels[t] == s.regions[t]);
            }
        }
    }
    let split_rate = right as f64 / inside.max(1) as f64;
    let split = split_rate >= 0.95;
    let agree = agreement(&r.segmentation, &s.regions);
    report(
        6,
        "coplanar split",
        !coplanar.is_empty() && merged && r.normal_cluster_count() < n && all_present && split,
        format!(
            "{} normal clusters, {} patches of {n}, coplanar groups {:?}, {right}/{inside} split correctly, agreement {agree:.3}",
            r.normal_cluster_count(),
            sizes.iter().filter(|&&c| c > 0).count(),
            coplanar
        ),
    );
}

#[test]
fn acceptance_07_cube_hex_counts_and_pillowing() {
    let pc = template(1).unwrap();
    let data = generate_dataset(&[1], 1, 1, &DatasetConfig::default()).unwrap();
    let mut s = data[0].clone();
    for _ in 0..2 {
        let (m, parent) = s.mesh.refine_uniform();
        s.regions = parent.iter().map(|&p| s.regions[p]).collect();
        s.mesh = m;
    }
    let locs = TruthSource::new(s.regions.clone()).locations(&s.mesh, &pc).unwrap();
    let seg = segment(&s.mesh, &pc, &locs, &SegmentConfig::default()).unwrap().segmentation;
    let b = optimize_boundaries(&s.mesh, &seg, &pc, &PathWeights::default()).unwrap();
    let hex = assemble_with_paths(&b.mesh, &b.segmentation, &pc, &b.paths, 3).unwrap();
    let p = pillow(&hex).unwrap();
    let max_faces = p.boundary_face_counts().into_iter().max().unwrap_or(0);
    report(
        7,
        "hex counts",
        hex.num_elements() == 512 && hex.num_vertices() == 729 && p.num_elements() == 512 + 384 && max_faces <= 1,
        format!(
            "{} elements / {} vertices, pillowed {} elements, max boundary faces per element {max_faces}",
            hex.num_elements(),
            hex.num_vertices(),
            p.num_elements()
        ),
    );
}

#[test]
fn acceptance_08_scaled_jacobian_fixtures() {
    let cube = |a: Vec3, b: Vec3, c: Vec3| [Vec3::ZERO, a, a + b, b, c, a + c, a + b + c, b + c];
    let (ex, ey, ez) = (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0));
    let unit = scaled_jacobian(&cube(ex, ey, ez));
    let unit_ok = unit.scaled.iter().all(|&s| s == 1.0);
    let mirrored = cube(ex, ey, ez).map(|p| Vec3::new(-p.x, p.y, p.z));
    let inv = scaled_jacobian(&mirrored);
    let inv_ok = inv.scaled.iter().all(|&s| s == -1.0);
    // sheared so the angle between the first two edges is 60°
    let a = ex;
    let b = Vec3::new(0.5, 3f64.sqrt() / 2.0, 0.0);
    let c = Vec3::new(0.2, -0.1, 1.3);
    let want = det3(a.normalized(), b.normalized(), c.normalized());
    let sheared = scaled_jacobian(&cube(a, b, c));
    let err = sheared.scaled.iter().map(|s| (s - want).abs()).fold(0.0, f64::max);
    report(
        8,
        "scaled Jacobian",
        unit_ok && inv_ok && err <= 1e-12 && want < 1.0,
        format!("unit {:?}, inverted min {}, sheared closed form {want:.6} max error {err:.1e}", unit.min_scaled(), inv.min_scaled()),
    );
}

#[test]
fn acceptance_09_energy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let rest = HexMesh::uniform_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), 8);
    let mesh = common::jittered_box(8, 0.15, &mut rng);
    let targets: Vec<Option<Vec3>> = rest.vertices.iter().zip(&rest.tags).map(|(&p, t)| t.is_boundary().then_some(p)).collect();
    let l = mean_edge_length(&mesh);
    let grad = energy_gradient(&mesh, &targets, l);
    let star = mesh.vertex_elements();
    let h = 1e-6 * mesh.bbox_diagonal();
    let mut worst: f64 = 0.0;
    let mut local_gap: f64 = 0.0;
    for _ in 0..20 {
        let v = rng.random_range(0..mesh.num_vertices());
        let mut fd = Vec3::ZERO;
        for a in 0..3 {
            let mut p = mesh.clone();
            p.vertices[v][a] += h;
            let mut m = mesh.clone();
            m.vertices[v][a] -= h;
            fd[a] = (energy_with_scale(&p, &targets, l).total() - energy_with_scale(&m, &targets, l).total()) / (2.0 * h);
        }
        worst = worst.max((fd - grad[v]).norm() / grad[v].norm().max(fd.norm()));
        let local = vertex_energy_gradient(&mesh, &star[v], v, targets[v], l);
        local_gap = local_gap.max(local.dist(grad[v]));
    }
    let q = QualityReport::of(&mesh);
    report(
        9,
        "energy gradient",
        worst <= 1e-4 && local_gap <= 1e-12,
        format!("512 elements (min SJ {:.3}), 20 vertices, max relative error {worst:.2e}", q.min),
    );
}

fn oracle_run(type_id: usize) -> (f64, Duration, usize) {
    let data = generate_dataset(&[type_id], 1, 1, &DatasetConfig::default()).unwrap();
    let cfg = PipelineConfig {
        oracle: true,
        type_id: Some(type_id),
        level: 3,
        ..PipelineConfig::default()
    };
    let t0 = Instant::now();
    let out = run_on_mesh(&data[0].mesh, Some(&data[0].regions), &cfg).unwrap();
    (out.stats.worst_scaled_jacobian, t0.elapsed(), out.stats.output_elements)
}

#[test]
fn acceptance_10_pipeline_quality_bar() {
    let (sj1, t1, n1) = oracle_run(1);
    let (sj2, t2, n2) = oracle_run(2);
    let limit = Duration::from_secs(600);
    report(
        10,
        "end-to-end quality bar",
        sj1 > 0.1 && sj2 > 0.1 && t1 < limit && t2 < limit,
        format!(
            "type 1: min SJ {sj1:.4}, {n1} elements, {:.1} s; type 2: min SJ {sj2:.4}, {n2} elements, {:.1} s",
            t1.as_secs_f64(),
            t2.as_secs_f64()
        ),
    );
}

#[test]
fn acceptance_11_runs_are_byte_identical() {
    let data = generate_dataset(&[1], 1, 1, &DatasetConfig::default()).unwrap();
    let cfg = PipelineConfig {
        oracle: true,
        type_id: Some(1),
        ..PipelineConfig::default()
    };
    let vtk = || {
        let out = run_on_mesh(&data[0].mesh, Some(&data[0].regions), &cfg).unwrap();
        format_vtk(&out.hex, Some(&out.scaled_jacobian)).unwrap()
    };
    let (a, b) = (vtk(), vtk());
    let samples = generate_dataset(&[1, 2, 3], 4, 3, &DatasetConfig::default()).unwrap();
    let tc = TrainConfig {
        epochs: 2,
        batch_size: 4,
        ..TrainConfig::default()
    };
    let trace = || train_classifier(&samples, &tc).unwrap().1.to_text();
    let (ta, tb) = (trace(), trace());
    report(
        11,
        "determinism",
        a == b && ta == tb,
        format!("VTK {} bytes identical: {}, training trace identical: {}", a.len(), a == b, ta == tb),
    );
}
