//! Jacobian and scaled Jacobian of trilinear hexahedra at the 8 corners and
//! the body center, plus their gradients with respect to the corner positions.

use crate::mesh::{det3, Vec3, HEX_CORNER_NEIGHBORS, HEX_FACES};

/// Evaluation locations per element: 8 corners, then the body center.
pub const EVAL_POINTS: usize = 9;
pub const CENTER: usize = 8;

/// Edges shorter than this count as collapsed.
pub const MIN_EDGE_LENGTH: f64 = 1e-14;

/// Jacobian values of one element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementJacobian {
    pub jacobian: [f64; EVAL_POINTS],
    pub scaled: [f64; EVAL_POINTS],
    /// A collapsed edge forced some scaled value to −1.
    pub degenerate: bool,
}

impl ElementJacobian {
    pub fn min_scaled(&self) -> f64 {
        self.scaled.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_jacobian(&self) -> f64 {
        self.jacobian.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmin_scaled(&self) -> usize {
        argmin(&self.scaled)
    }

    pub fn argmin_jacobian(&self) -> usize {
        argmin(&self.jacobian)
    }
}

fn argmin(v: &[f64; EVAL_POINTS]) -> usize {
    let mut best = 0;
    for i in 1..EVAL_POINTS {
        if v[i] < v[best] {
            best = i;
        }
    }
    best
}

fn face_center(x: &[Vec3; 8], f: usize) -> Vec3 {
    HEX_FACES[f].iter().map(|&i| x[i]).sum::<Vec3>() / 4.0
}

/// The three edge vectors at `loc`. At the center they join the centers of
/// the opposite face pairs (-x, +x), (-y, +y), (-z, +z).
pub fn edge_vectors(x: &[Vec3; 8], loc: usize) -> [Vec3; 3] {
    if loc == CENTER {
        std::array::from_fn(|k| face_center(x, 2 * k + 1) - face_center(x, 2 * k))
    } else {
        let n = HEX_CORNER_NEIGHBORS[loc];
        std::array::from_fn(|k| x[n[k]] - x[loc])
    }
}

/// Accumulates `∂f/∂e_k = g[k]` at `loc` into per-corner gradients.
pub fn scatter_edge_gradient(loc: usize, g: [Vec3; 3], out: &mut [Vec3; 8]) {
    if loc == CENTER {
        for (k, gk) in g.iter().enumerate() {
            for &i in &HEX_FACES[2 * k + 1] {
                out[i] += *gk / 4.0;
            }
            for &i in &HEX_FACES[2 * k] {
                out[i] -= *gk / 4.0;
            }
        }
    } else {
        for (k, &n) in HEX_CORNER_NEIGHBORS[loc].iter().enumerate() {
            out[n] += g[k];
            out[loc] -= g[k];
        }
    }
}

/// Jacobian and scaled Jacobian at all 9 locations.
pub fn scaled_jacobian(x: &[Vec3; 8]) -> ElementJacobian {
    let mut jacobian = [0.0; EVAL_POINTS];
    let mut scaled = [0.0; EVAL_POINTS];
    let mut degenerate = false;
    for loc in 0..EVAL_POINTS {
        let e = edge_vectors(x, loc);
        jacobian[loc] = det3(e[0], e[1], e[2]);
        let n = [e[0].norm(), e[1].norm(), e[2].norm()];
        if n.iter().any(|&l| l <= MIN_EDGE_LENGTH || !l.is_finite()) {
            scaled[loc] = -1.0;
            degenerate = true;
        } else {
            scaled[loc] = det3(e[0] / n[0], e[1] / n[1], e[2] / n[2]).clamp(-1.0, 1.0);
        }
    }
    ElementJacobian {
        jacobian,
        scaled,
        degenerate,
    }
}

/// Minimum scaled Jacobian of an element.
pub fn min_scaled_jacobian(x: &[Vec3; 8]) -> f64 {
    scaled_jacobian(x).min_scaled()
}

/// Gradient of `det[e0, e1, e2]` at `loc` with respect to the 8 corners.
pub fn jacobian_gradient(x: &[Vec3; 8], loc: usize) -> [Vec3; 8] {
    let e = edge_vectors(x, loc);
    let g = [e[1].cross(e[2]), e[2].cross(e[0]), e[0].cross(e[1])];
    let mut out = [Vec3::ZERO; 8];
    scatter_edge_gradient(loc, g, &mut out);
    out
}

/// Gradient of the scaled Jacobian at `loc`; zero where an edge collapsed.
pub fn scaled_jacobian_gradient(x: &[Vec3; 8], loc: usize) -> [Vec3; 8] {
    let e = edge_vectors(x, loc);
    let n = [e[0].norm(), e[1].norm(), e[2].norm()];
    let mut out = [Vec3::ZERO; 8];
    if n.iter().any(|&l| l <= MIN_EDGE_LENGTH) {
        return out;
    }
    let u = [e[0] / n[0], e[1] / n[1], e[2] / n[2]];
    let c = [u[1].cross(u[2]), u[2].cross(u[0]), u[0].cross(u[1])];
    // d(u_k)/d(e_k) = (I − u_k u_kᵀ) / |e_k|
    let g = std::array::from_fn(|k| (c[k] - u[k] * u[k].dot(c[k])) / n[k]);
    scatter_edge_gradient(loc, g, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_cube() -> [Vec3; 8] {
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        ]
    }

    #[test]
    fn unit_cube_is_perfect() {
        let q = scaled_jacobian(&unit_cube());
        assert!(q.scaled.iter().all(|&s| (s - 1.0).abs() < 1e-15));
        assert!(q.jacobian.iter().all(|&j| (j - 1.0).abs() < 1e-15));
        assert!(!q.degenerate);
    }

    #[test]
    fn mirrored_cube_is_inverted() {
        let x = unit_cube().map(|p| Vec3::new(-p.x, p.y, p.z));
        assert!(scaled_jacobian(&x).scaled.iter().all(|&s| (s + 1.0).abs() < 1e-15));
    }

    #[test]
    fn collapsed_edge_scores_worst() {
        let mut x = unit_cube();
        x[1] = x[0];
        let q = scaled_jacobian(&x);
        assert!(q.degenerate);
        assert_eq!(q.min_scaled(), -1.0);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut x = unit_cube();
        let jitter = [0.07, -0.03, 0.11, 0.02, -0.09, 0.05, 0.04, -0.06];
        for (i, p) in x.iter_mut().enumerate() {
            *p += Vec3::new(jitter[i], jitter[(i + 3) % 8], -jitter[(i + 5) % 8]);
        }
        let h = 1e-6;
        for loc in 0..EVAL_POINTS {
            let gj = jacobian_gradient(&x, loc);
            let gs = scaled_jacobian_gradient(&x, loc);
            for v in 0..8 {
                for a in 0..3 {
                    let mut p = x;
                    let mut m = x;
                    p[v][a] += h;
                    m[v][a] -= h;
                    let fj = (scaled_jacobian(&p).jacobian[loc] - scaled_jacobian(&m).jacobian[loc]) / (2.0 * h);
                    let fs = (scaled_jacobian(&p).scaled[loc] - scaled_jacobian(&m).scaled[loc]) / (2.0 * h);
                    assert!((fj - gj[v][a]).abs() < 1e-7, "J loc {loc} v {v} a {a}");
                    assert!((fs - gs[v][a]).abs() < 1e-7, "SJ loc {loc} v {v} a {a}");
                }
            }
        }
    }
}
