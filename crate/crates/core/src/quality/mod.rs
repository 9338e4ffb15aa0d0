//! Hex mesh quality: scaled Jacobian, pillowing, boundary classification,
//! smart smoothing and energy-based optimization.

mod energy;
mod jacobian;
mod optimize;
mod pillow;
mod smooth;
mod surface;

pub use energy::{
    element_energy, element_energy_gradient, energy, energy_gradient, energy_with_scale, mean_edge_length, vertex_energy_gradient,
    EnergyState,
};
pub use jacobian::{
    edge_vectors, jacobian_gradient, min_scaled_jacobian, scaled_jacobian, scaled_jacobian_gradient, ElementJacobian, CENTER, EVAL_POINTS,
};
pub use optimize::{
    optimize, OptimizeConfig, OptimizeReport, DEFAULT_ALPHA, DEFAULT_MAX_ITERS, DEFAULT_SJ_THRESHOLD, REFRESH_INTERVAL, SNAP_TOLERANCE,
};
pub use pillow::{pillow, pillow_with_offset, PILLOW_OFFSET};
pub use smooth::{local_min_sj, smart_smooth, SmoothingContext};
pub use surface::{
    class_tags, classify_boundary_vertices, closest_on_segment, closest_on_triangle, closest_surface_point, Candidates, FeatureCurves,
    SurfaceClass, SurfaceProjector,
};

use crate::mesh::HexMesh;

/// Per-element minimum scaled Jacobian and mesh statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    pub per_element: Vec<f64>,
    pub min: f64,
    pub mean: f64,
    pub negative: usize,
}

impl QualityReport {
    pub fn of(mesh: &HexMesh) -> Self {
        let per_element: Vec<f64> = (0..mesh.num_elements()).map(|e| min_scaled_jacobian(&mesh.element_corners(e))).collect();
        let min = per_element.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = per_element.iter().sum::<f64>() / per_element.len().max(1) as f64;
        let negative = per_element.iter().filter(|&&s| s < 0.0).count();
        QualityReport {
            per_element,
            min,
            mean,
            negative,
        }
    }

    /// Index of the element with the smallest value.
    pub fn worst_element(&self) -> usize {
        let mut w = 0;
        for (e, &s) in self.per_element.iter().enumerate() {
            if s < self.per_element[w] {
                w = e;
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{shapes, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cube_fixture(n: usize) -> (HexMesh, crate::mesh::TriMesh) {
        let tri = shapes::grid_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n);
        let sharp = crate::mesh::detect_sharp_edges(&tri, crate::mesh::DEFAULT_SHARP_ANGLE);
        (HexMesh::uniform_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n), tri.with_sharp_edges(sharp))
    }

    #[test]
    fn optimal_mesh_returns_immediately() {
        let (hex, tri) = cube_fixture(4);
        let f = FeatureCurves::from_sharp_edges(&tri);
        let classes = classify_boundary_vertices(&hex, &tri, &f);
        let cfg = OptimizeConfig {
            sj_threshold: 0.9,
            ..Default::default()
        };
        let (out, rep) = optimize(&hex, &tri, &f, &classes, &cfg).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(out.vertices, hex.vertices);
        assert!(rep.snapped);
        assert_eq!(rep.quality.min, 1.0);
    }

    #[test]
    fn jittered_mesh_recovers() {
        let (mut hex, tri) = cube_fixture(4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 0.25;
        for (v, t) in hex.vertices.iter_mut().zip(&hex.tags) {
            if !t.is_boundary() {
                *v += Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (0.3 * h);
            }
        }
        let f = FeatureCurves::from_sharp_edges(&tri);
        let classes = classify_boundary_vertices(&hex, &tri, &f);
        let cfg = OptimizeConfig {
            sj_threshold: 0.5,
            max_iters: 20_000,
            ..Default::default()
        };
        let (_, rep) = optimize(&hex, &tri, &f, &classes, &cfg).unwrap();
        assert!(rep.initial.min < 0.5, "fixture too easy: {}", rep.initial.min);
        assert!(rep.quality.min >= 0.5, "min SJ {} after {} iterations", rep.quality.min, rep.iterations);
        assert!(rep.quality.min >= rep.initial.min);
    }
}
