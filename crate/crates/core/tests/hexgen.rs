use std::collections::BTreeSet;

use hexcube::dataset::{generate_dataset, DatasetConfig};
use hexcube::hexgen::{assemble_with_paths, decompose_face, laplacian_weights, OctreeGrid, MAX_LEVEL};
use hexcube::mesh::{VertexClass, DEFAULT_SHARP_ANGLE};
use hexcube::pathopt::{optimize_boundaries, BoundaryResult, PathWeights};
use hexcube::pipeline::{prepare_mesh, segment_input, PipelineConfig};
use hexcube::polycube::{all_templates, template, PolycubeStructure};
use hexcube::quality::QualityReport;

fn boundaries(type_id: usize) -> (PolycubeStructure, BoundaryResult) {
    let s = &generate_dataset(&[type_id], 1, 1, &DatasetConfig::default()).unwrap()[0];
    let cfg = PipelineConfig {
        oracle: true,
        type_id: Some(type_id),
        ..PipelineConfig::default()
    };
    let pc = template(type_id).unwrap();
    let (_, mesh) = prepare_mesh(&s.mesh, DEFAULT_SHARP_ANGLE).unwrap();
    let (fine, seg) = segment_input(&mesh, Some(&s.regions), &pc, &cfg).unwrap();
    let b = optimize_boundaries(&fine, &seg, &pc, &PathWeights::default()).unwrap();
    (pc, b)
}

#[test]
fn octree_levels_are_bounded() {
    assert!(OctreeGrid::new(0).is_err());
    assert!(OctreeGrid::new(MAX_LEVEL + 1).is_err());
    let g = OctreeGrid::new(3).unwrap();
    assert_eq!(g.resolution(), 8);
    assert_eq!(g.samples_per_cube(), 729);
    let c = g.coordinates();
    assert_eq!((c.len(), c[0], c[8]), (9, 0.0, 1.0));
}

#[test]
fn every_template_face_splits_into_rectangles() {
    for pc in all_templates().unwrap() {
        for f in 0..pc.num_boundary_faces() {
            let layout = decompose_face(&pc, f).unwrap();
            let cells: BTreeSet<(i32, i32)> = pc.boundary_faces[f].facets.iter().map(|&i| pc.facets[i].st()).collect();
            let mut covered = BTreeSet::new();
            for &(s0, t0, s1, t1) in &layout.rects {
                for s in s0..s1 {
                    for t in t0..t1 {
                        assert!(covered.insert((s, t)), "type {} face {f}: rectangles overlap", pc.type_id);
                    }
                }
            }
            assert_eq!(covered, cells, "type {} face {f}", pc.type_id);
        }
    }
}

#[test]
fn cube_lattice_counts_per_level() {
    let (pc, b) = boundaries(1);
    for level in 1..=3u32 {
        let n = 1usize << level;
        let hex = assemble_with_paths(&b.mesh, &b.segmentation, &pc, &b.paths, level).unwrap();
        hex.validate().unwrap();
        assert_eq!(hex.num_elements(), n * n * n);
        assert_eq!(hex.num_vertices(), (n + 1).pow(3));
        assert_eq!(hex.boundary_quads().len(), 6 * n * n);
        assert_eq!(hex.tags.iter().filter(|&&t| t == VertexClass::Corner).count(), 8);
        // the corner lattice points land on the path corners
        for &v in &b.paths.corner_map {
            let p = b.mesh.vertices()[v];
            assert!(hex.vertices.iter().any(|q| q.dist(p) < 1e-9));
        }
    }
}

#[test]
fn two_cube_block_shares_its_internal_facet() {
    let (pc, b) = boundaries(2);
    let cubes = pc.cubes.len();
    assert!(cubes >= 2);
    let hex = assemble_with_paths(&b.mesh, &b.segmentation, &pc, &b.paths, 2).unwrap();
    assert_eq!(hex.num_elements(), cubes * 64);
    // vertices on shared facets are merged, so fewer than the cubes on their own
    assert!(hex.num_vertices() < cubes * 125);
    let q = QualityReport::of(&hex);
    assert!(q.min > -1.0 && q.mean > 0.5, "mean scaled Jacobian {}", q.mean);
}

#[test]
fn laplacian_registry_lists_both_weightings() {
    let reg = laplacian_weights();
    assert_eq!(reg.names().collect::<Vec<_>>(), ["cotangent", "uniform"]);
    let tri = [[0, 1, 2]];
    let pos = [
        hexcube::mesh::Vec3::ZERO,
        hexcube::mesh::Vec3::new(1.0, 0.0, 0.0),
        hexcube::mesh::Vec3::new(0.0, 1.0, 0.0),
    ];
    let cot = reg.create("cotangent", &()).unwrap().edge_weights(&pos, &tri);
    // the right angle at vertex 0 makes the hypotenuse weight vanish up to the clamp
    assert!(cot[&(1, 2)] <= 1e-6 + 1e-15);
    assert!((cot[&(0, 1)] - 0.5).abs() < 1e-12);
    let uni = reg.create("uniform", &()).unwrap().edge_weights(&pos, &tri);
    assert!(uni.values().all(|&w| w == 1.0));
}
