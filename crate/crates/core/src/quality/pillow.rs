//! One layer of boundary hexes so that no element keeps two boundary faces.

use std::collections::BTreeMap;

use crate::mesh::{HexMesh, Vec3, VertexClass};
use crate::{Error, Result};

/// Inward offset of the shrunk boundary, as a fraction of the local edge length.
pub const PILLOW_OFFSET: f64 = 0.25;

/// Shrinks the boundary inward along the vertex normals and fills the gap with
/// one hex per boundary quad. The new boundary vertices sit at the old boundary
/// positions and inherit the old tags; the moved ones become interior.
pub fn pillow(mesh: &HexMesh) -> Result<HexMesh> {
    pillow_with_offset(mesh, PILLOW_OFFSET)
}

pub fn pillow_with_offset(mesh: &HexMesh, offset: f64) -> Result<HexMesh> {
    if !(offset > 0.0 && offset < 1.0) {
        return Err(Error::Config(format!("pillow offset must lie in (0, 1), got {offset}")));
    }
    mesh.validate()?;
    let quads = mesh.boundary_quads();
    // BTreeMap keeps the duplicated vertices in index order
    let mut normal: BTreeMap<usize, Vec3> = BTreeMap::new();
    let mut length: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for q in &quads {
        let p = q.vertices.map(|v| mesh.vertices[v]);
        let n = (p[2] - p[0]).cross(p[3] - p[1]) / 2.0;
        for k in 0..4 {
            *normal.entry(q.vertices[k]).or_insert(Vec3::ZERO) += n;
            for j in [(k + 1) % 4, (k + 3) % 4] {
                let l = length.entry(q.vertices[k]).or_insert((0.0, 0));
                l.0 += p[k].dist(p[j]);
                l.1 += 1;
            }
        }
    }
    let mut vertices = mesh.vertices.clone();
    let mut tags = mesh.tags.clone();
    let mut dup = BTreeMap::new();
    for (&v, &n) in &normal {
        let n = n
            .try_normalize()
            .ok_or_else(|| Error::InvalidHexMesh(format!("boundary vertex {v} has no normal")))?;
        let (sum, count) = length[&v];
        dup.insert(v, vertices.len());
        vertices.push(mesh.vertices[v]);
        tags.push(mesh.tags[v]);
        vertices[v] = mesh.vertices[v] - n * (offset * sum / count as f64);
        tags[v] = VertexClass::Interior;
    }
    let mut elements = mesh.elements.clone();
    for q in &quads {
        let [a, b, c, d] = q.vertices;
        // the outward loop is counter-clockwise seen from outside, which makes
        // it the bottom face of a hex whose top lies outward
        elements.push([a, b, c, d, dup[&a], dup[&b], dup[&c], dup[&d]]);
    }
    let out = HexMesh::new(vertices, elements, tags)?;
    if let Some(e) = out.boundary_face_counts().iter().position(|&c| c > 1) {
        return Err(Error::InvalidHexMesh(format!("pillowed element {e} keeps several boundary faces")));
    }
    Ok(out)
}
