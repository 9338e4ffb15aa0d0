use super::TriMesh;

pub const NODE_FEATURES: usize = 12;

/// Dual graph of a triangle mesh: one node per face, an edge between faces that
/// share a mesh edge.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceGraph {
    /// Sorted neighbour lists; symmetric, no self entries.
    pub neighbors: Vec<Vec<usize>>,
    /// Three vertex positions followed by the unit face normal.
    pub node_features: Vec<[f64; NODE_FEATURES]>,
    pub centroid_features: Vec<[f64; 3]>,
}

impl FaceGraph {
    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn adjacency_dense(&self) -> Vec<Vec<bool>> {
        let n = self.num_nodes();
        let mut a = vec![vec![false; n]; n];
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                a[i][j] = true;
            }
        }
        a
    }

    /// Relabels nodes so node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> FaceGraph {
        let mut inv = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        FaceGraph {
            neighbors: perm
                .iter()
                .map(|&old| {
                    let mut nb: Vec<usize> = self.neighbors[old].iter().map(|&j| inv[j]).collect();
                    nb.sort_unstable();
                    nb
                })
                .collect(),
            node_features: perm.iter().map(|&o| self.node_features[o]).collect(),
            centroid_features: perm.iter().map(|&o| self.centroid_features[o]).collect(),
        }
    }
}

pub fn build_face_graph(mesh: &TriMesh) -> FaceGraph {
    let topo = mesh.topology();
    let mut neighbors = vec![Vec::with_capacity(3); mesh.num_faces()];
    for &[f, g] in &topo.edge_faces {
        neighbors[f].push(g);
        neighbors[g].push(f);
    }
    for nb in &mut neighbors {
        nb.sort_unstable();
        nb.dedup();
    }
    let mut node_features = Vec::with_capacity(mesh.num_faces());
    let mut centroid_features = Vec::with_capacity(mesh.num_faces());
    for f in 0..mesh.num_faces() {
        let c = mesh.corners(f);
        let n = mesh.face_normal(f);
        let mut feat = [0.0; NODE_FEATURES];
        for (k, p) in c.iter().enumerate() {
            feat[3 * k..3 * k + 3].copy_from_slice(&p.to_array());
        }
        feat[9..12].copy_from_slice(&n.to_array());
        node_features.push(feat);
        centroid_features.push(mesh.face_centroid(f).to_array());
    }
    FaceGraph {
        neighbors,
        node_features,
        centroid_features,
    }
}
