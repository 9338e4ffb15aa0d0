use std::collections::{BTreeSet, HashMap};

use super::Vec3;
use crate::{Error, Result};

/// Undirected edge key with the smaller vertex index first.
pub fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Watertight, manifold, consistently oriented triangle surface.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    sharp_edges: BTreeSet<(usize, usize)>,
}

impl TriMesh {
    /// Builds a mesh and checks every invariant: indices in range, no repeated
    /// vertex within a face, no degenerate face, every edge shared by exactly two
    /// faces with opposite orientation.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = TriMesh {
            vertices,
            faces,
            sharp_edges: BTreeSet::new(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Self {
        TriMesh {
            vertices,
            faces,
            sharp_edges: BTreeSet::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.faces.is_empty() || self.vertices.is_empty() {
            return Err(Error::EmptyMesh);
        }
        if let Some(v) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidFace {
                face: usize::MAX,
                msg: format!("vertex {v} has non-finite coordinates"),
            });
        }
        let nv = self.vertices.len();
        for (i, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidFace {
                    face: i,
                    msg: "vertex index out of range".into(),
                });
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidFace {
                    face: i,
                    msg: "repeated vertex".into(),
                });
            }
        }
        let diag = self.bbox_diagonal();
        let min_area = 1e-12 * diag * diag;
        for i in 0..self.faces.len() {
            let area = self.face_area(i);
            if !(area > min_area) {
                return Err(Error::DegenerateFace { face: i, area });
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &self.faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut undirected: HashMap<(usize, usize), usize> = HashMap::new();
        for (&(a, b), &c) in &directed {
            *undirected.entry(edge_key(a, b)).or_insert(0) += c;
        }
        let mut keys: Vec<_> = undirected.iter().collect();
        keys.sort();
        for (&e, &count) in keys {
            if count != 2 {
                return Err(Error::NonManifoldEdge { edge: e, count });
            }
            let fwd = directed.get(&e).copied().unwrap_or(0);
            if fwd != 1 {
                return Err(Error::InconsistentOrientation { edge: e });
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn sharp_edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.sharp_edges
    }

    pub fn with_sharp_edges(mut self, edges: BTreeSet<(usize, usize)>) -> Self {
        self.sharp_edges = edges;
        self
    }

    /// Same connectivity, new positions. Positions must keep the mesh valid.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        if vertices.len() != self.vertices.len() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} vertices, got {}",
                self.vertices.len(),
                vertices.len()
            )));
        }
        let mesh = TriMesh {
            vertices,
            faces: self.faces.clone(),
            sharp_edges: self.sharp_edges.clone(),
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn corners(&self, face: usize) -> [Vec3; 3] {
        let f = self.faces[face];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    /// Area-weighted (unnormalized) normal, twice the triangle area in length.
    pub fn face_area_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.corners(face);
        (b - a).cross(c - a)
    }

    pub fn face_normal(&self, face: usize) -> Vec3 {
        self.face_area_normal(face).normalized()
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_area_normal(face).norm()
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.corners(face);
        (a + b + c) / 3.0
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

    pub fn surface_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn signed_volume(&self) -> f64 {
        (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.corners(f);
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// Flips every face when the enclosed signed volume is negative.
    pub fn oriented_outward(mut self) -> Self {
        if self.signed_volume() < 0.0 {
            for f in &mut self.faces {
                f.swap(1, 2);
            }
        }
        self
    }

    pub fn num_edges(&self) -> usize {
        self.faces.len() * 3 / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.num_edges() as i64 + self.faces.len() as i64
    }

    pub fn genus(&self) -> i64 {
        (2 - self.euler_characteristic()) / 2
    }

    pub fn topology(&self) -> Topology {
        Topology::build(self)
    }

    pub fn mean_edge_length(&self) -> f64 {
        let topo = self.topology();
        let total: f64 = topo
            .edges
            .iter()
            .map(|&(a, b)| self.vertices[a].dist(self.vertices[b]))
            .sum();
        total / topo.edges.len().max(1) as f64
    }

    /// Splits every triangle 1→4 at edge midpoints. Returns the mesh and, for
    /// each new face, its parent face index.
    pub fn refine_uniform(&self) -> (TriMesh, Vec<usize>) {
        let all: Vec<usize> = (0..self.faces.len()).collect();
        self.refine_faces(&all)
    }

    /// Red-green refinement: faces in `selected` are split 1→4, the closure
    /// splits neighbours so the result stays conforming. Returns the refined
    /// mesh and the parent face of every output face.
    pub fn refine_faces(&self, selected: &[usize]) -> (TriMesh, Vec<usize>) {
        let topo = self.topology();
        let mut red = vec![false; self.faces.len()];
        for &f in selected {
            red[f] = true;
        }
        let mut split_edge = vec![false; topo.edges.len()];
        loop {
            for (f, &r) in red.iter().enumerate() {
                if r {
                    for &e in &topo.face_edges[f] {
                        split_edge[e] = true;
                    }
                }
            }
            let mut changed = false;
            for f in 0..self.faces.len() {
                if !red[f] && topo.face_edges[f].iter().filter(|&&e| split_edge[e]).count() >= 2 {
                    red[f] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut vertices = self.vertices.clone();
        let mut midpoint = vec![usize::MAX; topo.edges.len()];
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            if split_edge[e] {
                midpoint[e] = vertices.len();
                vertices.push((self.vertices[a] + self.vertices[b]) * 0.5);
            }
        }
        let mid = |a: usize, b: usize| -> usize {
            let e = topo.edge_index[&edge_key(a, b)];
            midpoint[e]
        };
        let mut faces = Vec::with_capacity(self.faces.len() * 2);
        let mut parent = Vec::with_capacity(self.faces.len() * 2);
        for (fi, f) in self.faces.iter().enumerate() {
            let [a, b, c] = *f;
            if red[fi] {
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                for t in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]] {
                    faces.push(t);
                    parent.push(fi);
                }
                continue;
            }
            let rot = [[a, b, c], [b, c, a], [c, a, b]]
                .into_iter()
                .find(|t| split_edge[topo.edge_index[&edge_key(t[0], t[1])]]);
            match rot {
                Some([p, q, r]) => {
                    let m = mid(p, q);
                    faces.push([p, m, r]);
                    faces.push([m, q, r]);
                    parent.push(fi);
                    parent.push(fi);
                }
                None => {
                    faces.push(*f);
                    parent.push(fi);
                }
            }
        }
        let sharp = self
            .sharp_edges
            .iter()
            .flat_map(|&(a, b)| match topo.edge_index.get(&(a, b)) {
                Some(&e) if split_edge[e] => {
                    let m = midpoint[e];
                    vec![edge_key(a, m), edge_key(m, b)]
                }
                Some(_) => vec![(a, b)],
                None => Vec::new(),
            })
            .collect();
        let mesh = TriMesh::from_parts_unchecked(vertices, faces).with_sharp_edges(sharp);
        (mesh, parent)
    }
}

/// Edge/face/vertex incidence tables of a closed manifold mesh.
#[derive(Clone, Debug)]
pub struct Topology {
    pub edges: Vec<(usize, usize)>,
    pub edge_faces: Vec<[usize; 2]>,
    pub face_edges: Vec<[usize; 3]>,
    pub edge_index: HashMap<(usize, usize), usize>,
    pub vertex_faces: Vec<Vec<usize>>,
    pub vertex_neighbors: Vec<Vec<usize>>,
}

impl Topology {
    fn build(mesh: &TriMesh) -> Self {
        let nv = mesh.vertices.len();
        let mut edges = Vec::new();
        let mut edge_faces: Vec<[usize; 2]> = Vec::new();
        let mut edge_index = HashMap::new();
        let mut face_edges = Vec::with_capacity(mesh.faces.len());
        let mut vertex_faces = vec![Vec::new(); nv];
        let mut vertex_neighbors = vec![Vec::new(); nv];
        for (fi, f) in mesh.faces.iter().enumerate() {
            let mut fe = [0; 3];
            for k in 0..3 {
                let key = edge_key(f[k], f[(k + 1) % 3]);
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_faces.push([usize::MAX; 2]);
                    edges.len() - 1
                });
                if edge_faces[e][0] == usize::MAX {
                    edge_faces[e][0] = fi;
                } else {
                    edge_faces[e][1] = fi;
                }
                fe[k] = e;
                vertex_faces[f[k]].push(fi);
            }
            face_edges.push(fe);
        }
        for &(a, b) in &edges {
            vertex_neighbors[a].push(b);
            vertex_neighbors[b].push(a);
        }
        for n in &mut vertex_neighbors {
            n.sort_unstable();
        }
        Topology {
            edges,
            edge_faces,
            face_edges,
            edge_index,
            vertex_faces,
            vertex_neighbors,
        }
    }

    pub fn edge(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&edge_key(a, b)).copied()
    }

    /// Face across edge `e` from face `f`.
    pub fn opposite_face(&self, e: usize, f: usize) -> usize {
        let [a, b] = self.edge_faces[e];
        if a == f {
            b
        } else {
            a
        }
    }
}

/// Translate + uniform scale mapping a bounding box into `[-0.5, 0.5]` along its
/// longest axis, centred at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxNormalization {
    pub center: Vec3,
    pub scale: f64,
}

impl BoxNormalization {
    pub fn from_bbox(lo: Vec3, hi: Vec3) -> Result<Self> {
        let ext = hi - lo;
        let longest = ext.x.max(ext.y).max(ext.z);
        if !(longest > 0.0) || !longest.is_finite() {
            return Err(Error::DegenerateBox);
        }
        Ok(BoxNormalization {
            center: (lo + hi) * 0.5,
            scale: 1.0 / longest,
        })
    }

    pub fn of(mesh: &TriMesh) -> Result<Self> {
        let (lo, hi) = mesh.bbox();
        Self::from_bbox(lo, hi)
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }

    pub fn invert(&self, p: Vec3) -> Vec3 {
        p / self.scale + self.center
    }
}

pub fn normalize_to_unit_box(mesh: &TriMesh) -> Result<TriMesh> {
    let t = BoxNormalization::of(mesh)?;
    let vertices = mesh.vertices.iter().map(|&p| t.apply(p)).collect();
    Ok(TriMesh {
        vertices,
        faces: mesh.faces.clone(),
        sharp_edges: mesh.sharp_edges.clone(),
    })
}

/// Edges whose two incident face normals differ by more than `angle_threshold_deg`.
pub fn detect_sharp_edges(mesh: &TriMesh, angle_threshold_deg: f64) -> BTreeSet<(usize, usize)> {
    let topo = mesh.topology();
    let thr = angle_threshold_deg.to_radians();
    topo.edges
        .iter()
        .zip(&topo.edge_faces)
        .filter(|(_, &[f, g])| {
            let a = super::angle_between(mesh.face_area_normal(f), mesh.face_area_normal(g));
            a > thr
        })
        .map(|(&e, _)| e)
        .collect()
}
