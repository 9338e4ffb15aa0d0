use std::sync::Arc;

use crate::dataset::region_centroids;
use crate::gcn::GcnModel;
use crate::mesh::{build_face_graph, BoxNormalization, TriMesh, Vec3};
use crate::polycube::PolycubeStructure;
use crate::registry::Registry;
use crate::{Error, Result};

/// Supplies an expected position for every template face of a mesh in the
/// normalized frame.
pub trait CentroidSource {
    fn name(&self) -> &'static str;
    fn locations(&self, mesh: &TriMesh, pc: &PolycubeStructure) -> Result<Vec<Vec3>>;
}

/// Face centroids of the template lattice mapped into the unit box.
pub struct TemplateSource;

impl CentroidSource for TemplateSource {
    fn name(&self) -> &'static str {
        "template"
    }

    fn locations(&self, _mesh: &TriMesh, pc: &PolycubeStructure) -> Result<Vec<Vec3>> {
        let (lo, hi) = pc.lattice_bbox();
        let t = BoxNormalization::from_bbox(lo, hi)?;
        Ok((0..pc.num_boundary_faces()).map(|f| t.apply(pc.face_centroid(f))).collect())
    }
}

/// Centroids of known per-triangle face labels, as produced by the generator.
pub struct TruthSource {
    regions: Option<Vec<usize>>,
}

impl TruthSource {
    pub fn new(regions: Vec<usize>) -> Self {
        TruthSource { regions: Some(regions) }
    }
}

impl CentroidSource for TruthSource {
    fn name(&self) -> &'static str {
        "truth"
    }

    fn locations(&self, mesh: &TriMesh, pc: &PolycubeStructure) -> Result<Vec<Vec3>> {
        let regions = self
            .regions
            .as_ref()
            .ok_or_else(|| Error::Config("ground-truth centroids need region labels".into()))?;
        if regions.len() != mesh.num_faces() {
            return Err(Error::ShapeMismatch(format!(
                "{} region labels for {} triangles",
                regions.len(),
                mesh.num_faces()
            )));
        }
        Ok(region_centroids(mesh, regions, pc.num_boundary_faces()))
    }
}

/// Predictions of a trained centroid regressor.
pub struct GcnSource {
    model: Option<Arc<GcnModel>>,
}

impl GcnSource {
    pub fn new(model: Arc<GcnModel>) -> Self {
        GcnSource { model: Some(model) }
    }
}

impl CentroidSource for GcnSource {
    fn name(&self) -> &'static str {
        "gcn"
    }

    fn locations(&self, mesh: &TriMesh, pc: &PolycubeStructure) -> Result<Vec<Vec3>> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| Error::Config("gcn centroid source needs a centroid model".into()))?;
        model.forward_centroid(&build_face_graph(mesh), pc.num_boundary_faces())
    }
}

#[derive(Clone, Default)]
pub struct SourceArgs {
    pub regions: Option<Vec<usize>>,
    pub model: Option<Arc<GcnModel>>,
}

pub fn centroid_sources() -> Registry<dyn CentroidSource, SourceArgs> {
    let mut r: Registry<dyn CentroidSource, SourceArgs> = Registry::new("centroid source");
    r.register("template", |_| Box::new(TemplateSource));
    r.register("truth", |a: &SourceArgs| Box::new(TruthSource { regions: a.regions.clone() }));
    r.register("gcn", |a: &SourceArgs| Box::new(GcnSource { model: a.model.clone() }));
    r
}
