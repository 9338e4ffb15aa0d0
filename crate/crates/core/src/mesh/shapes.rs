//! Closed reference surfaces used as fixtures and test inputs.

use std::collections::HashMap;

use super::{TriMesh, Vec3};

/// Axis-aligned box split into 12 triangles (8 vertices).
pub fn box_mesh(lo: Vec3, hi: Vec3) -> TriMesh {
    grid_box(lo, hi, 1)
}

pub fn unit_cube() -> TriMesh {
    box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0))
}

pub fn tetrahedron() -> TriMesh {
    let v = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
    ];
    let f = vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]];
    TriMesh::new(v, f).expect("tetrahedron is valid")
}

/// Box surface with `n × n` quads per side, each split into two triangles.
pub fn grid_box(lo: Vec3, hi: Vec3, n: usize) -> TriMesh {
    let n = n.max(1);
    let mut index: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut vid = |p: [usize; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry((p[0], p[1], p[2])).or_insert_with(|| {
            let t = Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64) / n as f64;
            vertices.push(Vec3::new(
                lo.x + (hi.x - lo.x) * t.x,
                lo.y + (hi.y - lo.y) * t.y,
                lo.z + (hi.z - lo.z) * t.z,
            ));
            vertices.len() - 1
        })
    };
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, n] {
            for i in 0..n {
                for j in 0..n {
                    let corner = |a: usize, b: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = a;
                        p[v] = b;
                        p
                    };
                    let q = [corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1)];
                    let q: Vec<usize> = q.iter().map(|&p| vid(p, &mut vertices)).collect();
                    // u × v = +axis, so the loop is outward on the high side.
                    let (a, b, c, d) = if side == n {
                        (q[0], q[1], q[2], q[3])
                    } else {
                        (q[0], q[3], q[2], q[1])
                    };
                    faces.push([a, b, c]);
                    faces.push([a, c, d]);
                }
            }
        }
    }
    TriMesh::new(vertices, faces).expect("grid box is valid")
}

/// Icosphere of radius `r` after `levels` rounds of 1→4 subdivision.
pub fn icosphere(r: f64, levels: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized() * r)
    .collect();
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let mut mesh = TriMesh::new(v.clone(), f).expect("icosahedron is valid");
    for _ in 0..levels {
        mesh = mesh.refine_uniform().0;
        v = mesh.vertices().iter().map(|p| p.normalized() * r).collect();
        mesh = mesh.with_vertices(v.clone()).expect("sphere stays valid");
    }
    mesh
}
