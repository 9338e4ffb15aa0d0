use std::collections::{BTreeMap, HashMap};

use crate::mesh::{edge_key, Vec3};
use crate::polycube::{lattice_vec, LatticePoint, PolycubeStructure};
use crate::{Error, Result};

/// Closed quad surface; each quad remembers the polycube boundary face it came
/// from.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadMesh {
    pub vertices: Vec<Vec3>,
    pub quads: Vec<[usize; 4]>,
    pub face_ids: Vec<usize>,
}

impl QuadMesh {
    pub fn num_quads(&self) -> usize {
        self.quads.len()
    }

    /// Number of quads sharing each undirected edge.
    pub fn edge_multiplicity(&self) -> BTreeMap<(usize, usize), usize> {
        let mut m = BTreeMap::new();
        for q in &self.quads {
            for k in 0..4 {
                *m.entry(edge_key(q[k], q[(k + 1) % 4])).or_insert(0) += 1;
            }
        }
        m
    }

    pub fn is_closed(&self) -> bool {
        self.edge_multiplicity().values().all(|&c| c == 2)
    }
}

/// One outward-oriented quad per boundary facet of the cube union.
pub fn assemble_surface(pc: &PolycubeStructure) -> QuadMesh {
    let mut index: BTreeMap<LatticePoint, usize> = BTreeMap::new();
    for f in &pc.facets {
        for p in f.corners() {
            let n = index.len();
            index.entry(p).or_insert(n);
        }
    }
    let mut vertices = vec![Vec3::ZERO; index.len()];
    for (&p, &i) in &index {
        vertices[i] = lattice_vec(p);
    }
    let quads = pc.facets.iter().map(|f| f.corners().map(|p| index[&p])).collect();
    QuadMesh {
        vertices,
        quads,
        face_ids: pc.facet_face.clone(),
    }
}

/// Catmull–Clark subdivision of a closed quad mesh. Child quads of quad `q`
/// are `4q..4q+4` and inherit its face id.
pub fn catmull_clark(mesh: &QuadMesh, levels: usize) -> Result<QuadMesh> {
    let mut cur = mesh.clone();
    for _ in 0..levels {
        cur = subdivide_once(&cur)?;
    }
    Ok(cur)
}

fn subdivide_once(mesh: &QuadMesh) -> Result<QuadMesh> {
    let nv = mesh.vertices.len();
    let face_points: Vec<Vec3> = mesh
        .quads
        .iter()
        .map(|q| q.iter().map(|&v| mesh.vertices[v]).sum::<Vec3>() / 4.0)
        .collect();

    let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_faces: Vec<Vec<usize>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (qi, q) in mesh.quads.iter().enumerate() {
        for k in 0..4 {
            let e = edge_key(q[k], q[(k + 1) % 4]);
            let id = *edge_index.entry(e).or_insert_with(|| {
                edges.push(e);
                edge_faces.push(Vec::new());
                edges.len() - 1
            });
            edge_faces[id].push(qi);
        }
    }
    if let Some(i) = edge_faces.iter().position(|f| f.len() != 2) {
        return Err(Error::NonManifoldEdge {
            edge: edges[i],
            count: edge_faces[i].len(),
        });
    }
    let edge_points: Vec<Vec3> = edges
        .iter()
        .zip(&edge_faces)
        .map(|(&(a, b), fs)| (mesh.vertices[a] + mesh.vertices[b] + face_points[fs[0]] + face_points[fs[1]]) / 4.0)
        .collect();

    let mut q_sum = vec![Vec3::ZERO; nv];
    let mut face_count = vec![0usize; nv];
    for (qi, q) in mesh.quads.iter().enumerate() {
        for &v in q {
            q_sum[v] += face_points[qi];
            face_count[v] += 1;
        }
    }
    let mut r_sum = vec![Vec3::ZERO; nv];
    let mut valence = vec![0usize; nv];
    for &(a, b) in &edges {
        let mid = (mesh.vertices[a] + mesh.vertices[b]) / 2.0;
        r_sum[a] += mid;
        r_sum[b] += mid;
        valence[a] += 1;
        valence[b] += 1;
    }
    let mut vertices = Vec::with_capacity(nv + edges.len() + mesh.quads.len());
    for v in 0..nv {
        let n = valence[v] as f64;
        if valence[v] == 0 {
            vertices.push(mesh.vertices[v]);
            continue;
        }
        let q = q_sum[v] / face_count[v] as f64;
        let r = r_sum[v] / n;
        vertices.push((q + r * 2.0 + mesh.vertices[v] * (n - 3.0)) / n);
    }
    vertices.extend(edge_points);
    vertices.extend(face_points);

    let e_off = nv;
    let f_off = nv + edges.len();
    let mut quads = Vec::with_capacity(mesh.quads.len() * 4);
    let mut face_ids = Vec::with_capacity(mesh.quads.len() * 4);
    for (qi, q) in mesh.quads.iter().enumerate() {
        let ep = |a: usize, b: usize| e_off + edge_index[&edge_key(a, b)];
        for i in 0..4 {
            let prev = q[(i + 3) % 4];
            let next = q[(i + 1) % 4];
            quads.push([q[i], ep(q[i], next), f_off + qi, ep(prev, q[i])]);
            face_ids.push(mesh.face_ids[qi]);
        }
    }
    Ok(QuadMesh {
        vertices,
        quads,
        face_ids,
    })
}

/// Splits every quad along its shorter diagonal; on a tie the diagonal through
/// the quad's lowest vertex index wins. Triangles `2q, 2q+1` come from quad `q`.
pub fn triangulate(mesh: &QuadMesh) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<usize>) {
    let mut faces = Vec::with_capacity(mesh.quads.len() * 2);
    let mut ids = Vec::with_capacity(mesh.quads.len() * 2);
    for (qi, q) in mesh.quads.iter().enumerate() {
        let p = |k: usize| mesh.vertices[q[k]];
        let d02 = p(0).dist(p(2));
        let d13 = p(1).dist(p(3));
        let tol = 1e-12 * d02.max(d13);
        let use02 = if (d02 - d13).abs() <= tol {
            let lowest = (0..4).min_by_key(|&k| q[k]).expect("four corners");
            lowest % 2 == 0
        } else {
            d02 < d13
        };
        if use02 {
            faces.push([q[0], q[1], q[2]]);
            faces.push([q[0], q[2], q[3]]);
        } else {
            faces.push([q[0], q[1], q[3]]);
            faces.push([q[1], q[2], q[3]]);
        }
        ids.push(mesh.face_ids[qi]);
        ids.push(mesh.face_ids[qi]);
    }
    (mesh.vertices.clone(), faces, ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycube::template;

    #[test]
    fn cube_assembly_and_subdivision_counts() {
        let pc = template(1).unwrap();
        let q = assemble_surface(&pc);
        assert_eq!(q.num_quads(), 6);
        assert_eq!(q.vertices.len(), 8);
        assert!(q.is_closed());
        assert_eq!(catmull_clark(&q, 0).unwrap(), q);
        let one = catmull_clark(&q, 1).unwrap();
        assert_eq!(one.num_quads(), 24);
        let two = catmull_clark(&q, 2).unwrap();
        assert_eq!(two.num_quads(), 96);
        assert!(two.is_closed());
        let (_, tris, ids) = triangulate(&two);
        assert_eq!(tris.len(), 192);
        assert_eq!(ids.len(), 192);
    }

    #[test]
    fn ring_has_32_quads() {
        let q = assemble_surface(&template(2).unwrap());
        assert_eq!(q.num_quads(), 32);
        assert!(q.is_closed());
    }

    #[test]
    fn cube_vertex_rule_matches_closed_form() {
        // corner (0,0,0) of the unit cube has valence 3, so it moves to (Q + 2R) / 3
        let q = assemble_surface(&template(1).unwrap());
        let one = catmull_clark(&q, 1).unwrap();
        let q_avg = Vec3::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
        let r_avg = Vec3::new(1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0);
        let expect = (q_avg + r_avg * 2.0) / 3.0;
        let v0 = q.vertices.iter().position(|v| *v == Vec3::ZERO).unwrap();
        assert!(one.vertices[v0].dist(expect) < 1e-15);
        assert!((one.vertices[v0].x - 2.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn planar_quad_splits_into_equal_triangles() {
        let q = QuadMesh {
            vertices: vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            quads: vec![[1, 2, 3, 0]],
            face_ids: vec![0],
        };
        let (v, t, _) = triangulate(&q);
        // tie: diagonal through vertex 0, which sits at position 3
        assert_eq!(t, vec![[1, 2, 0], [2, 3, 0]]);
        let area = |f: [usize; 3]| (v[f[1]] - v[f[0]]).cross(v[f[2]] - v[f[0]]).norm() / 2.0;
        assert_eq!(area(t[0]), 0.5);
        assert_eq!(area(t[1]), 0.5);
    }
}
