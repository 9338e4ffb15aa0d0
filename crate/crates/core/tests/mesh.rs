use hexcube::mesh::io::{format_obj, format_vtk, parse_obj, parse_vtk};
use hexcube::mesh::shapes::{grid_box, icosphere, tetrahedron, unit_cube};
use hexcube::mesh::{
    build_face_graph, detect_sharp_edges, load_hex_mesh, load_tri_mesh, save_hex_mesh, save_tri_mesh, BoxNormalization, HexMesh, Vec3,
    VertexClass, DEFAULT_SHARP_ANGLE,
};
use hexcube::Error;
use proptest::prelude::*;

#[test]
fn obj_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.obj");
    let m = icosphere(0.7, 2);
    save_tri_mesh(&m, &path).unwrap();
    let back = load_tri_mesh(&path).unwrap();
    assert_eq!(back.faces(), m.faces());
    assert_eq!(back.vertices(), m.vertices());
}

#[test]
fn obj_reader_rejects_polygons_and_garbage() {
    let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nf 1 2 3 4\nf 1 5 2\n";
    assert!(matches!(parse_obj(quad), Err(Error::NonTriangleFace { face: 0, arity: 4 })));
    assert!(parse_obj("v 0 0\nf 1 2 3\n").is_err());
    assert!(parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").is_err());
    assert!(matches!(load_tri_mesh(std::path::Path::new("/nonexistent/x.obj")), Err(Error::Io { .. })));
}

#[test]
fn vtk_round_trip_keeps_tags_and_quality() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("box.vtk");
    let m = HexMesh::uniform_box(Vec3::ZERO, Vec3::new(2.0, 1.0, 1.0), 2);
    save_hex_mesh(&m, &path).unwrap();
    let (back, sj) = load_hex_mesh(&path).unwrap();
    assert_eq!(back, m);
    assert!(sj.is_none());
    let values: Vec<f64> = (0..m.num_elements()).map(|e| e as f64 / 10.0).collect();
    let text = format_vtk(&m, Some(&values)).unwrap();
    let (again, sj) = parse_vtk(&text).unwrap();
    assert_eq!(again, m);
    assert_eq!(sj.unwrap(), values);
    assert!(format_vtk(&m, Some(&values[1..])).is_err());
}

#[test]
fn uniform_box_counts_and_tags() {
    for n in 1..=4 {
        let m = HexMesh::uniform_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n);
        assert_eq!(m.num_elements(), n * n * n);
        assert_eq!(m.num_vertices(), (n + 1).pow(3));
        assert_eq!(m.boundary_quads().len(), 6 * n * n);
        let corners = m.tags.iter().filter(|&&t| t == VertexClass::Corner).count();
        let interior = m.tags.iter().filter(|&&t| t == VertexClass::Interior).count();
        assert_eq!(corners, 8);
        assert_eq!(interior, (n - 1).pow(3));
    }
}

#[test]
fn sharp_edges_of_a_gridded_box() {
    for n in 1..=3 {
        let b = grid_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n);
        assert_eq!(detect_sharp_edges(&b, DEFAULT_SHARP_ANGLE).len(), 12 * n);
    }
    assert!(detect_sharp_edges(&icosphere(1.0, 3), DEFAULT_SHARP_ANGLE).is_empty());
}

#[test]
fn closed_shapes_have_their_genus() {
    for m in [unit_cube(), tetrahedron(), icosphere(1.0, 2)] {
        assert_eq!(m.genus(), 0);
        assert!(m.signed_volume() > 0.0);
    }
}

#[test]
fn uniform_refinement_quadruples_faces() {
    let m = icosphere(1.0, 1);
    let (r, parent) = m.refine_uniform();
    assert_eq!(r.num_faces(), 4 * m.num_faces());
    assert_eq!(r.euler_characteristic(), m.euler_characteristic());
    assert_eq!(parent.len(), r.num_faces());
    assert!(parent.iter().all(|&p| p < m.num_faces()));
    assert!((r.surface_area() - m.surface_area()).abs() < 1e-12);
}

#[test]
fn face_graph_is_the_dual() {
    let m = icosphere(1.0, 2);
    let g = build_face_graph(&m);
    assert_eq!(g.num_nodes(), m.num_faces());
    assert!(g.neighbors.iter().all(|nb| nb.len() == 3));
    for (i, nb) in g.neighbors.iter().enumerate() {
        for &j in nb {
            assert!(g.neighbors[j].contains(&i));
        }
    }
}

proptest! {
    #[test]
    fn normalization_inverts(
        lo in prop::array::uniform3(-5.0f64..5.0),
        ext in prop::array::uniform3(0.1f64..4.0),
        p in prop::array::uniform3(-10.0f64..10.0),
    ) {
        let lo = Vec3::from(lo);
        let hi = lo + Vec3::from(ext);
        let n = BoxNormalization::from_bbox(lo, hi).unwrap();
        let p = Vec3::from(p);
        prop_assert!(n.invert(n.apply(p)).dist(p) < 1e-9);
        let (a, b) = (n.apply(lo), n.apply(hi));
        for k in 0..3 {
            prop_assert!(a[k] >= -0.5 - 1e-12 && b[k] <= 0.5 + 1e-12);
            prop_assert!((a[k] + b[k]).abs() < 1e-12);
        }
        let longest = (0..3).map(|k| b[k] - a[k]).fold(0.0, f64::max);
        prop_assert!((longest - 1.0).abs() < 1e-12);
    }

    #[test]
    fn obj_text_round_trips(levels in 0usize..3, r in 0.1f64..10.0) {
        let m = icosphere(r, levels);
        let back = parse_obj(&format_obj(&m)).unwrap();
        prop_assert_eq!(back.faces(), m.faces());
        for (a, b) in back.vertices().iter().zip(m.vertices()) {
            prop_assert!(a.dist(*b) <= 1e-15 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn vertex_relabeling_keeps_the_graph(seed in 0usize..1000) {
        let g = build_face_graph(&icosphere(1.0, 1));
        let n = g.num_nodes();
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + seed) % n).collect();
        prop_assume!((0..n).map(|i| perm[i]).collect::<std::collections::BTreeSet<_>>().len() == n);
        let p = g.permuted(&perm);
        let edges = |g: &hexcube::mesh::FaceGraph| g.neighbors.iter().map(Vec::len).sum::<usize>();
        prop_assert_eq!(edges(&p), edges(&g));
    }
}
