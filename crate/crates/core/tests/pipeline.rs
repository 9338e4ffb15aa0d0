use hexcube::dataset::{format_regions, generate_dataset, DatasetConfig};
use hexcube::mesh::io::parse_vtk;
use hexcube::mesh::save_tri_mesh;
use hexcube::pipeline::{run_pipeline, PipelineConfig};
use hexcube::Error;

#[test]
fn oracle_run_writes_mesh_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let s = &generate_dataset(&[1], 1, 2, &DatasetConfig::default()).unwrap()[0];
    let input = dir.path().join("in.obj");
    let regions = dir.path().join("in.regions");
    save_tri_mesh(&s.mesh, &input).unwrap();
    std::fs::write(&regions, format_regions(&s.regions)).unwrap();
    let text = format!(
        "input = {}\nregions = {}\noutput = {}\nreport = {}\noracle = true\ntype = 1\nlevel = 2\n",
        input.display(),
        regions.display(),
        dir.path().join("out.vtk").display(),
        dir.path().join("out.txt").display(),
    );
    let cfg = PipelineConfig::parse(&text).unwrap();
    let out = run_pipeline(&cfg).unwrap();
    assert_eq!(out.type_id, 1);
    assert_eq!(out.stats.output_elements, 64 + 6 * 16);
    assert!(out.stats.worst_scaled_jacobian > 0.1);
    let (hex, sj) = parse_vtk(&std::fs::read_to_string(dir.path().join("out.vtk")).unwrap()).unwrap();
    assert_eq!(hex.num_elements(), out.stats.output_elements);
    assert_eq!(sj.unwrap(), out.scaled_jacobian);
    // the mesh comes back in the input frame
    let (lo, hi) = hex.bbox();
    let (tlo, thi) = s.mesh.bbox();
    assert!(lo.dist(tlo) < 0.05 * tlo.dist(thi) && hi.dist(thi) < 0.05 * tlo.dist(thi));
    let report = std::fs::read_to_string(dir.path().join("out.txt")).unwrap();
    assert!(report.starts_with("type 1\n"));
    assert!(report.contains("worst SJ"));
}

#[test]
fn missing_classifier_is_reported_by_stage() {
    let dir = tempfile::tempdir().unwrap();
    let s = &generate_dataset(&[1], 1, 2, &DatasetConfig::default()).unwrap()[0];
    let input = dir.path().join("in.obj");
    save_tri_mesh(&s.mesh, &input).unwrap();
    let cfg = PipelineConfig {
        input: Some(input),
        classifier: Some(dir.path().join("absent.model")),
        ..PipelineConfig::default()
    };
    match run_pipeline(&cfg) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "classify");
            assert!(source.to_string().contains("absent.model"), "{source}");
        }
        other => panic!("expected a classify error, got {:?}", other.map(|o| o.stats)),
    }
}

#[test]
fn config_errors_surface_before_any_work() {
    let bad = [
        "level = 0\noracle = true\ntype = 1\n",
        "oracle = true\n",
        "oracle = true\ntype = 12\n",
        "oracle = maybe\n",
        "colour = blue\n",
        "no equals sign\n",
    ];
    for text in bad {
        let cfg = PipelineConfig::parse(text).and_then(|c| c.validate());
        assert!(cfg.is_err(), "{text:?} accepted");
    }
    let cfg = PipelineConfig {
        oracle: true,
        type_id: Some(1),
        ..PipelineConfig::default()
    };
    assert!(matches!(run_pipeline(&cfg), Err(Error::Config(_))));
}
