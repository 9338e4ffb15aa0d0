use std::collections::HashMap;

use super::Vec3;
use crate::{Error, Result};

/// Outward-oriented local quad faces of a hexahedron in VTK corner ordering.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 4, 7, 3],
    [1, 2, 6, 5],
    [0, 1, 5, 4],
    [3, 7, 6, 2],
    [0, 3, 2, 1],
    [4, 5, 6, 7],
];

/// The three edge-neighbours of each corner, ordered so the unit cube has a
/// positive determinant at every corner.
pub const HEX_CORNER_NEIGHBORS: [[usize; 3]; 8] = [
    [1, 3, 4],
    [2, 0, 5],
    [3, 1, 6],
    [0, 2, 7],
    [7, 5, 0],
    [4, 6, 1],
    [5, 7, 2],
    [6, 4, 3],
];

pub const HEX_EDGES: [[usize; 2]; 12] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 0],
    [4, 5],
    [5, 6],
    [6, 7],
    [7, 4],
    [0, 4],
    [1, 5],
    [2, 6],
    [3, 7],
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexClass {
    Corner,
    Edge,
    Face,
    Interior,
}

impl VertexClass {
    pub fn code(self) -> u8 {
        match self {
            VertexClass::Corner => 0,
            VertexClass::Edge => 1,
            VertexClass::Face => 2,
            VertexClass::Interior => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            0 => VertexClass::Corner,
            1 => VertexClass::Edge,
            2 => VertexClass::Face,
            3 => VertexClass::Interior,
            _ => return None,
        })
    }

    pub fn is_boundary(self) -> bool {
        self != VertexClass::Interior
    }
}

/// A boundary quad: outward-oriented vertex loop plus the owning element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryQuad {
    pub vertices: [usize; 4],
    pub element: usize,
    pub local_face: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HexMesh {
    pub vertices: Vec<Vec3>,
    pub elements: Vec<[usize; 8]>,
    pub tags: Vec<VertexClass>,
}

fn quad_key(q: [usize; 4]) -> [usize; 4] {
    let mut k = q;
    k.sort_unstable();
    k
}

impl HexMesh {
    pub fn new(vertices: Vec<Vec3>, elements: Vec<[usize; 8]>, tags: Vec<VertexClass>) -> Result<Self> {
        let mesh = HexMesh {
            vertices,
            elements,
            tags,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Mesh with tags derived from topology: boundary vertices become `Face`.
    pub fn untagged(vertices: Vec<Vec3>, elements: Vec<[usize; 8]>) -> Result<Self> {
        let mut mesh = HexMesh {
            tags: vec![VertexClass::Interior; vertices.len()],
            vertices,
            elements,
        };
        mesh.validate()?;
        for q in mesh.boundary_quads() {
            for v in q.vertices {
                mesh.tags[v] = VertexClass::Face;
            }
        }
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        if self.elements.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if self.tags.len() != self.vertices.len() {
            return Err(Error::InvalidHexMesh(format!(
                "{} tags for {} vertices",
                self.tags.len(),
                self.vertices.len()
            )));
        }
        for (i, e) in self.elements.iter().enumerate() {
            if e.iter().any(|&v| v >= self.vertices.len()) {
                return Err(Error::InvalidHexMesh(format!("element {i} index out of range")));
            }
            let mut s = *e;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidHexMesh(format!("element {i} repeats a vertex")));
            }
        }
        for (k, c) in self.face_multiplicity() {
            if c > 2 {
                return Err(Error::InvalidHexMesh(format!("quad {k:?} shared by {c} elements")));
            }
        }
        Ok(())
    }

    fn face_multiplicity(&self) -> HashMap<[usize; 4], usize> {
        let mut m = HashMap::new();
        for e in &self.elements {
            for f in HEX_FACES {
                let q = [e[f[0]], e[f[1]], e[f[2]], e[f[3]]];
                *m.entry(quad_key(q)).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_corners(&self, e: usize) -> [Vec3; 8] {
        let el = &self.elements[e];
        std::array::from_fn(|i| self.vertices[el[i]])
    }

    /// Quads that belong to exactly one element, in element order.
    pub fn boundary_quads(&self) -> Vec<BoundaryQuad> {
        let mult = self.face_multiplicity();
        let mut out = Vec::new();
        for (ei, e) in self.elements.iter().enumerate() {
            for (lf, f) in HEX_FACES.iter().enumerate() {
                let q = [e[f[0]], e[f[1]], e[f[2]], e[f[3]]];
                if mult[&quad_key(q)] == 1 {
                    out.push(BoundaryQuad {
                        vertices: q,
                        element: ei,
                        local_face: lf,
                    });
                }
            }
        }
        out
    }

    /// Number of boundary faces owned by each element.
    pub fn boundary_face_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.elements.len()];
        for q in self.boundary_quads() {
            counts[q.element] += 1;
        }
        counts
    }

    pub fn vertex_elements(&self) -> Vec<Vec<usize>> {
        let mut ve = vec![Vec::new(); self.vertices.len()];
        for (i, e) in self.elements.iter().enumerate() {
            for &v in e {
                ve[v].push(i);
            }
        }
        ve
    }

    pub fn bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for &v in &self.vertices {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    pub fn bbox_diagonal(&self) -> f64 {
        let (lo, hi) = self.bbox();
        (hi - lo).norm()
    }

    /// Uniform `n³` grid of elements filling `[lo, hi]`.
    pub fn uniform_box(lo: Vec3, hi: Vec3, n: usize) -> HexMesh {
        let np = n + 1;
        let idx = |i: usize, j: usize, k: usize| (k * np + j) * np + i;
        let mut vertices = Vec::with_capacity(np * np * np);
        let mut tags = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    let t = Vec3::new(i as f64, j as f64, k as f64) / n as f64;
                    vertices.push(Vec3::new(
                        lo.x + (hi.x - lo.x) * t.x,
                        lo.y + (hi.y - lo.y) * t.y,
                        lo.z + (hi.z - lo.z) * t.z,
                    ));
                    let on = [i, j, k].iter().filter(|&&c| c == 0 || c == n).count();
                    tags.push(match on {
                        0 => VertexClass::Interior,
                        1 => VertexClass::Face,
                        2 => VertexClass::Edge,
                        _ => VertexClass::Corner,
                    });
                }
            }
        }
        let mut elements = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    elements.push([
                        idx(i, j, k),
                        idx(i + 1, j, k),
                        idx(i + 1, j + 1, k),
                        idx(i, j + 1, k),
                        idx(i, j, k + 1),
                        idx(i + 1, j, k + 1),
                        idx(i + 1, j + 1, k + 1),
                        idx(i, j + 1, k + 1),
                    ]);
                }
            }
        }
        HexMesh {
            vertices,
            elements,
            tags,
        }
    }
}
