use hexcube::dataset::{
    all_types, assemble_surface, format_regions, generate_dataset, label_histogram, load_dataset, parse_regions, template_surface, write_dataset,
    DatasetConfig,
};
use hexcube::polycube::{template, PolycubeStructure};
use proptest::prelude::*;

proptest! {
    #[test]
    fn regions_text_round_trips(r in prop::collection::vec(0usize..40, 0..200)) {
        prop_assert_eq!(parse_regions(&format_regions(&r)).unwrap(), r);
    }

    #[test]
    fn stacked_cubes_form_a_closed_surface(heights in prop::collection::vec(1i32..4, 1..4)) {
        // a staircase of columns along x, always face-connected through the bottom row
        let mut cubes = Vec::new();
        for (i, &h) in heights.iter().enumerate() {
            for k in 0..h {
                cubes.push([i as i32, 0, k]);
            }
        }
        let pc = PolycubeStructure::from_cubes(&cubes).unwrap();
        prop_assert_eq!(pc.genus(), 0);
        prop_assert!(assemble_surface(&pc).is_closed());
    }
}

#[test]
fn every_template_surface_keeps_its_topology() {
    for t in all_types() {
        let pc = template(t).unwrap();
        let (mesh, regions) = template_surface(t, 1).unwrap();
        assert_eq!(mesh.genus(), pc.genus, "type {t}");
        assert_eq!(regions.len(), mesh.num_faces());
        let used: std::collections::BTreeSet<usize> = regions.iter().copied().collect();
        assert_eq!(used.len(), pc.num_boundary_faces(), "type {t}");
    }
}

#[test]
fn samples_follow_their_seeds() {
    let cfg = DatasetConfig::default();
    let a = generate_dataset(&[3, 5], 2, 10, &cfg).unwrap();
    let b = generate_dataset(&[3, 5], 2, 10, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(label_histogram(&a).into_iter().collect::<Vec<_>>(), [(3, 2), (5, 2)]);
    assert_ne!(a[0].mesh.vertices(), a[1].mesh.vertices());
    let c = generate_dataset(&[3], 1, 11, &cfg).unwrap();
    assert_eq!(c[0].mesh.vertices(), a[1].mesh.vertices());
}

#[test]
fn dataset_directory_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_dataset(&[1, 2], 1, 4, &DatasetConfig::default()).unwrap();
    write_dataset(dir.path(), &data).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back.len(), 2);
    for (x, y) in back.iter().zip(&data) {
        assert_eq!((x.label, x.seed), (y.label, y.seed));
        assert_eq!(x.regions, y.regions);
        assert_eq!(x.mesh.faces(), y.mesh.faces());
    }
    assert!(load_dataset(&dir.path().join("missing")).is_err());
}
