use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::mesh::{TriMesh, Vec3};
use crate::{Error, Result};

pub const MAX_DEFORM_ATTEMPTS: usize = 100;

/// Regular lattice of control points around a mesh, with piecewise trilinear
/// weights of every mesh vertex inside its enclosing cage cell.
#[derive(Clone, Debug, PartialEq)]
pub struct DeformationCage {
    pub resolution: usize,
    pub lo: Vec3,
    pub hi: Vec3,
    pub control_points: Vec<Vec3>,
    /// Per mesh vertex: the 8 control-point indices of its cell and weights.
    pub influence: Vec<[(usize, f64); 8]>,
}

impl DeformationCage {
    /// `margin` is the fraction of each bounding-box extent added on both sides.
    pub fn new(mesh: &TriMesh, resolution: usize, margin: f64) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::Config(format!("cage resolution must be at least 2, got {resolution}")));
        }
        let (mut lo, mut hi) = mesh.bbox();
        let pad = (hi - lo) * margin + Vec3::new(1e-9, 1e-9, 1e-9);
        lo -= pad;
        hi += pad;
        let r = resolution;
        let cells = (r - 1) as f64;
        let mut control_points = Vec::with_capacity(r * r * r);
        for k in 0..r {
            for j in 0..r {
                for i in 0..r {
                    let t = Vec3::new(i as f64, j as f64, k as f64) / cells;
                    control_points.push(Vec3::new(
                        lo.x + (hi.x - lo.x) * t.x,
                        lo.y + (hi.y - lo.y) * t.y,
                        lo.z + (hi.z - lo.z) * t.z,
                    ));
                }
            }
        }
        let idx = |i: usize, j: usize, k: usize| (k * r + j) * r + i;
        let influence = mesh
            .vertices()
            .iter()
            .map(|&p| {
                let mut cell = [0usize; 3];
                let mut frac = [0.0f64; 3];
                for a in 0..3 {
                    let u = (p[a] - lo[a]) / (hi[a] - lo[a]) * cells;
                    let c = (u.floor().max(0.0) as usize).min(r - 2);
                    cell[a] = c;
                    frac[a] = (u - c as f64).clamp(0.0, 1.0);
                }
                let mut w = [(0usize, 0.0f64); 8];
                for (m, slot) in w.iter_mut().enumerate() {
                    let (di, dj, dk) = (m & 1, (m >> 1) & 1, (m >> 2) & 1);
                    let f = |d: usize, t: f64| if d == 1 { t } else { 1.0 - t };
                    *slot = (
                        idx(cell[0] + di, cell[1] + dj, cell[2] + dk),
                        f(di, frac[0]) * f(dj, frac[1]) * f(dk, frac[2]),
                    );
                }
                w
            })
            .collect();
        Ok(DeformationCage {
            resolution,
            lo,
            hi,
            control_points,
            influence,
        })
    }

    /// Moves every mesh vertex by the trilinear blend of control displacements.
    pub fn apply(&self, vertices: &[Vec3], displacements: &[Vec3]) -> Vec<Vec3> {
        vertices
            .iter()
            .zip(&self.influence)
            .map(|(&p, w)| {
                let mut d = Vec3::ZERO;
                for &(c, wt) in w {
                    d += displacements[c] * wt;
                }
                p + d
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeformConfig {
    pub cage_resolution: usize,
    /// Displacement standard deviation as a fraction of the bbox diagonal.
    pub sigma: f64,
    /// Fraction of control points that are displaced.
    pub fraction: f64,
    pub margin: f64,
}

impl Default for DeformConfig {
    fn default() -> Self {
        DeformConfig {
            cage_resolution: 4,
            sigma: 0.08,
            fraction: 0.3,
            margin: 0.1,
        }
    }
}

/// Random free-form deformation. Draws are rejected while any face would
/// collapse or flip its normal.
pub fn random_deform(mesh: &TriMesh, cfg: &DeformConfig, seed: u64) -> Result<TriMesh> {
    let cage = DeformationCage::new(mesh, cfg.cage_resolution, cfg.margin)?;
    let n = cage.control_points.len();
    let count = ((cfg.fraction * n as f64).round() as usize).min(n);
    let std = cfg.sigma * mesh.bbox_diagonal();
    if count == 0 || std == 0.0 {
        return Ok(mesh.clone());
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let old_normals: Vec<Vec3> = (0..mesh.num_faces()).map(|f| mesh.face_area_normal(f)).collect();
    for _ in 0..MAX_DEFORM_ATTEMPTS {
        let mut disp = vec![Vec3::ZERO; n];
        for c in sample(&mut rng, n, count).into_vec() {
            disp[c] = Vec3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
        }
        let moved = cage.apply(mesh.vertices(), &disp);
        let Ok(out) = mesh.with_vertices(moved) else {
            continue;
        };
        let flipped = (0..out.num_faces()).any(|f| out.face_area_normal(f).dot(old_normals[f]) <= 0.0);
        if !flipped {
            return Ok(out);
        }
    }
    Err(Error::DeformationFailed {
        attempts: MAX_DEFORM_ATTEMPTS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes::grid_box;

    fn sample_mesh() -> TriMesh {
        grid_box(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(0.5, 0.5, 0.5), 3)
    }

    #[test]
    fn weights_are_a_partition_of_unity() {
        let m = sample_mesh();
        let cage = DeformationCage::new(&m, 4, 0.1).unwrap();
        for w in &cage.influence {
            let s: f64 = w.iter().map(|x| x.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|x| x.1 >= 0.0));
        }
        let (lo, hi) = m.bbox();
        assert!(cage.lo.x < lo.x && cage.hi.z > hi.z);
    }

    #[test]
    fn zero_sigma_is_identity() {
        let m = sample_mesh();
        let cfg = DeformConfig {
            sigma: 0.0,
            ..DeformConfig::default()
        };
        assert_eq!(random_deform(&m, &cfg, 3).unwrap(), m);
    }

    #[test]
    fn seeded_deformation_is_reproducible() {
        let m = sample_mesh();
        let cfg = DeformConfig::default();
        let a = random_deform(&m, &cfg, 11).unwrap();
        let b = random_deform(&m, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, m);
        assert_eq!(a.faces(), m.faces());
    }

    #[test]
    fn rejects_flat_cage() {
        assert!(DeformationCage::new(&sample_mesh(), 1, 0.1).is_err());
    }
}
