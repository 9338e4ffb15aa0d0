//! Energy combining surface fitting, the Jacobian of inverted elements and the
//! scaled Jacobian of valid ones, with its analytic gradient.

use super::jacobian::{jacobian_gradient, scaled_jacobian, scaled_jacobian_gradient};
use crate::mesh::{HexMesh, Vec3, HEX_EDGES};

/// Terms and counters of the energy at one configuration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyState {
    /// Σ‖x_i − x_i^s‖² over surface vertices.
    pub fitting: f64,
    /// −(1/l̄) Σ min J over elements with a negative Jacobian.
    pub jacobian_term: f64,
    /// −l̄² Σ min SJ over the remaining elements.
    pub scaled_term: f64,
    /// Length scale l̄.
    pub mean_edge: f64,
    pub surface_vertices: usize,
    pub negative_elements: usize,
    pub positive_elements: usize,
    pub vertices: usize,
}

impl EnergyState {
    pub fn total(&self) -> f64 {
        self.fitting + self.jacobian_term + self.scaled_term
    }
}

/// Mesh-mean length of the edges entering the corner evaluations, which is
/// the mean of every element's 12 edges.
pub fn mean_edge_length(mesh: &HexMesh) -> f64 {
    let mut sum = 0.0;
    for e in &mesh.elements {
        for [a, b] in HEX_EDGES {
            sum += mesh.vertices[e[a]].dist(mesh.vertices[e[b]]);
        }
    }
    sum / (12 * mesh.elements.len()) as f64
}

/// Energy of one element and whether it counts as inverted.
pub fn element_energy(x: &[Vec3; 8], mean_edge: f64) -> (f64, bool) {
    let q = scaled_jacobian(x);
    let j = q.min_jacobian();
    if j < 0.0 {
        (-j / mean_edge, true)
    } else {
        (-mean_edge * mean_edge * q.min_scaled(), false)
    }
}

/// Gradient of [`element_energy`] with respect to the 8 corners; the min picks
/// the first location attaining it.
pub fn element_energy_gradient(x: &[Vec3; 8], mean_edge: f64) -> [Vec3; 8] {
    let q = scaled_jacobian(x);
    if q.min_jacobian() < 0.0 {
        jacobian_gradient(x, q.argmin_jacobian()).map(|g| g * (-1.0 / mean_edge))
    } else {
        scaled_jacobian_gradient(x, q.argmin_scaled()).map(|g| g * (-mean_edge * mean_edge))
    }
}

/// Energy with surface targets (`None` for interior vertices) and a fixed
/// length scale.
pub fn energy_with_scale(mesh: &HexMesh, targets: &[Option<Vec3>], mean_edge: f64) -> EnergyState {
    let mut s = EnergyState {
        fitting: 0.0,
        jacobian_term: 0.0,
        scaled_term: 0.0,
        mean_edge,
        surface_vertices: 0,
        negative_elements: 0,
        positive_elements: 0,
        vertices: mesh.num_vertices(),
    };
    for (v, t) in targets.iter().enumerate() {
        if let Some(t) = t {
            s.fitting += (mesh.vertices[v] - *t).norm_sq();
            s.surface_vertices += 1;
        }
    }
    for e in 0..mesh.num_elements() {
        let (en, negative) = element_energy(&mesh.element_corners(e), mean_edge);
        if negative {
            s.jacobian_term += en;
            s.negative_elements += 1;
        } else {
            s.scaled_term += en;
            s.positive_elements += 1;
        }
    }
    s
}

/// Energy with l̄ taken from the mesh itself.
pub fn energy(mesh: &HexMesh, targets: &[Option<Vec3>]) -> EnergyState {
    energy_with_scale(mesh, targets, mean_edge_length(mesh))
}

/// Gradient of [`energy_with_scale`] at every vertex, l̄ and targets held fixed.
pub fn energy_gradient(mesh: &HexMesh, targets: &[Option<Vec3>], mean_edge: f64) -> Vec<Vec3> {
    let mut g: Vec<Vec3> = targets
        .iter()
        .enumerate()
        .map(|(v, t)| t.map_or(Vec3::ZERO, |t| (mesh.vertices[v] - t) * 2.0))
        .collect();
    for (e, el) in mesh.elements.iter().enumerate() {
        let ge = element_energy_gradient(&mesh.element_corners(e), mean_edge);
        for k in 0..8 {
            g[el[k]] += ge[k];
        }
    }
    g
}

/// Gradient at one vertex from its fitting term and its element star.
pub fn vertex_energy_gradient(mesh: &HexMesh, star: &[usize], v: usize, target: Option<Vec3>, mean_edge: f64) -> Vec3 {
    let mut g = target.map_or(Vec3::ZERO, |t| (mesh.vertices[v] - t) * 2.0);
    for &e in star {
        let el = &mesh.elements[e];
        let ge = element_energy_gradient(&mesh.element_corners(e), mean_edge);
        for k in 0..8 {
            if el[k] == v {
                g += ge[k];
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> HexMesh {
        HexMesh::uniform_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n)
    }

    fn surface_targets(m: &HexMesh) -> Vec<Option<Vec3>> {
        m.vertices
            .iter()
            .zip(&m.tags)
            .map(|(&p, t)| t.is_boundary().then_some(p))
            .collect()
    }

    #[test]
    fn perfect_grid_energy() {
        let m = grid(3);
        let s = energy(&m, &surface_targets(&m));
        let l = 1.0 / 3.0;
        assert!((s.mean_edge - l).abs() < 1e-14);
        assert_eq!(s.fitting, 0.0);
        assert_eq!(s.negative_elements, 0);
        assert!((s.total() + l * l * 27.0).abs() < 1e-12);
        assert_eq!(s.surface_vertices, 64 - 8);
        assert_eq!(s.vertices, 64);
    }

    #[test]
    fn displacement_adds_its_square() {
        let m = grid(2);
        let t = surface_targets(&m);
        let before = energy_with_scale(&m, &t, 0.5);
        let mut moved = m.clone();
        let v = (0..m.num_vertices()).find(|&v| m.tags[v].is_boundary()).unwrap();
        moved.vertices[v].z += 1e-3;
        let after = energy_with_scale(&moved, &t, 0.5);
        assert!((after.fitting - before.fitting - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn inversion_raises_energy() {
        let m = grid(2);
        let t = surface_targets(&m);
        let good = energy_with_scale(&m, &t, 0.5);
        let mut bad = m.clone();
        // the center vertex pushed through a corner element
        bad.vertices[13] = Vec3::new(-0.1, -0.1, -0.1);
        let inv = energy_with_scale(&bad, &t, 0.5);
        assert!(inv.negative_elements > 0);
        assert!(inv.jacobian_term > 0.0);
        assert!(inv.total() > good.total());
    }
}
