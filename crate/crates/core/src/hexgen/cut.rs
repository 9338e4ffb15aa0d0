//! Splitting non-rectangular polycube faces into lattice rectangles, and the
//! matching cuts on the surface patches.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use crate::mesh::{edge_key, TriMesh};
use crate::pathopt::{EdgeGraph, PathSet, PathWeights};
use crate::polycube::{LatticePoint, PolycubeStructure};
use crate::{Error, Result};

/// Lattice rectangle `(s0, t0, s1, t1)` in a face's plane coordinates.
pub type Rect = (i32, i32, i32, i32);

/// A straight cut at height `t` from `s0` to `s1` (`s0 < s1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CutLine {
    pub t: i32,
    pub s0: i32,
    pub s1: i32,
}

/// Rectangles and cuts of one face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceLayout {
    pub rects: Vec<Rect>,
    pub cuts: Vec<CutLine>,
}

/// Horizontal decomposition: a cut runs along `s` from every reflex lattice
/// vertex until it meets the boundary, which leaves only rectangles.
pub fn decompose_face(pc: &PolycubeStructure, face: usize) -> Result<FaceLayout> {
    let cells: BTreeSet<(i32, i32)> = pc.boundary_faces[face].facets.iter().map(|&i| pc.facets[i].st()).collect();
    let has = |s: i32, t: i32| cells.contains(&(s, t));
    // a unit segment from (s, t) to (s + 1, t) is interior when cells lie on both sides
    let interior = |s: i32, t: i32| has(s, t) && has(s, t - 1);
    let mut cut_segments: BTreeSet<(i32, i32)> = BTreeSet::new();
    let points: BTreeSet<(i32, i32)> = cells.iter().flat_map(|&(s, t)| [(s, t), (s + 1, t), (s, t + 1), (s + 1, t + 1)]).collect();
    for &(s, t) in &points {
        let quad = [has(s - 1, t - 1), has(s, t - 1), has(s - 1, t), has(s, t)];
        if quad.iter().filter(|&&q| q).count() != 3 {
            continue;
        }
        // missing cell on the left sends the ray right, and vice versa
        let dir = if !quad[0] || !quad[2] { 1 } else { -1 };
        let mut x = s;
        loop {
            let seg = if dir > 0 { x } else { x - 1 };
            if !interior(seg, t) {
                break;
            }
            cut_segments.insert((seg, t));
            x += dir;
        }
    }
    let mut cuts = Vec::new();
    let mut seen = BTreeSet::new();
    for &(s, t) in &cut_segments {
        if seen.contains(&(s, t)) {
            continue;
        }
        let mut s1 = s;
        while cut_segments.contains(&(s1, t)) {
            seen.insert((s1, t));
            s1 += 1;
        }
        cuts.push(CutLine { t, s0: s, s1 });
    }
    // cells joined across uncut segments form the rectangles
    let mut comp: BTreeMap<(i32, i32), usize> = BTreeMap::new();
    let mut rects = Vec::new();
    for &start in &cells {
        if comp.contains_key(&start) {
            continue;
        }
        let id = rects.len();
        let mut members = vec![start];
        comp.insert(start, id);
        let mut q = VecDeque::from([start]);
        while let Some((s, t)) = q.pop_front() {
            let mut next = vec![(s - 1, t), (s + 1, t)];
            if !cut_segments.contains(&(s, t)) {
                next.push((s, t - 1));
            }
            if !cut_segments.contains(&(s, t + 1)) {
                next.push((s, t + 1));
            }
            for c in next {
                if has(c.0, c.1) && !comp.contains_key(&c) {
                    comp.insert(c, id);
                    members.push(c);
                    q.push_back(c);
                }
            }
        }
        let s0 = members.iter().map(|c| c.0).min().expect("non-empty");
        let s1 = members.iter().map(|c| c.0).max().expect("non-empty") + 1;
        let t0 = members.iter().map(|c| c.1).min().expect("non-empty");
        let t1 = members.iter().map(|c| c.1).max().expect("non-empty") + 1;
        if ((s1 - s0) * (t1 - t0)) as usize != members.len() {
            return Err(Error::InvalidLattice(format!("face {face} does not split into rectangles")));
        }
        rects.push((s0, t0, s1, t1));
    }
    Ok(FaceLayout { rects, cuts })
}

/// 3D lattice point of face plane coordinates `(s, t)`.
pub fn face_point(pc: &PolycubeStructure, face: usize, s: i32, t: i32) -> LatticePoint {
    let f = &pc.boundary_faces[face];
    let (sa, ta) = f.label.plane_axes();
    let mut p = [0; 3];
    p[f.label.axis()] = f.plane;
    p[sa] = s;
    p[ta] = t;
    p
}

/// Mesh vertex at a lattice point on the face boundary: a corner vertex, or a
/// vertex on the path of the polycube edge through the point, inserted by
/// splitting a path edge when none sits at the exact arc-length fraction.
fn boundary_vertex(mesh: &mut TriMesh, labels: &mut Vec<usize>, paths: &mut PathSet, pc: &PolycubeStructure, face: usize, p: LatticePoint) -> Result<usize> {
    if let Some(i) = pc.nodes.iter().position(|&q| q == p) {
        return Ok(paths.corner_map[i]);
    }
    let (e, m) = pc
        .edges
        .iter()
        .enumerate()
        .filter(|(_, e)| e.faces.0 == face || e.faces.1 == face)
        .find_map(|(i, e)| e.points.iter().position(|&q| q == p).map(|m| (i, m)))
        .ok_or_else(|| Error::InvalidLattice(format!("cut end {p:?} is not on the boundary of face {face}")))?;
    let tau = m as f64 / (pc.edges[e].points.len() - 1) as f64;
    let path = &paths.paths[e];
    let fr = super::arc_fractions(mesh, path);
    if let Some(i) = fr.iter().position(|&f| (f - tau).abs() < 1e-12) {
        return Ok(path[i]);
    }
    let i = fr.partition_point(|&f| f < tau);
    let (a, b) = (path[i - 1], path[i]);
    let w = (tau - fr[i - 1]) / (fr[i] - fr[i - 1]);
    let v = split_edge(mesh, labels, a, b, w)?;
    paths.paths[e].insert(i, v);
    Ok(v)
}

/// Inserts a vertex on edge `(a, b)` at fraction `w` from `a`, splitting both
/// incident triangles. Labels and sharp flags carry over to the children.
pub fn split_edge(mesh: &mut TriMesh, labels: &mut Vec<usize>, a: usize, b: usize, w: f64) -> Result<usize> {
    let mut vertices = mesh.vertices().to_vec();
    let m = vertices.len();
    vertices.push(vertices[a].lerp(vertices[b], w));
    let mut faces = Vec::with_capacity(mesh.num_faces() + 2);
    let mut new_labels = Vec::with_capacity(labels.len() + 2);
    for (f, tri) in mesh.faces().iter().enumerate() {
        let k = (0..3).find(|&k| edge_key(tri[k], tri[(k + 1) % 3]) == edge_key(a, b));
        match k {
            Some(k) => {
                let (x, y, z) = (tri[k], tri[(k + 1) % 3], tri[(k + 2) % 3]);
                faces.push([x, m, z]);
                faces.push([m, y, z]);
                new_labels.extend([labels[f], labels[f]]);
            }
            None => {
                faces.push(*tri);
                new_labels.push(labels[f]);
            }
        }
    }
    let mut sharp = mesh.sharp_edges().clone();
    if sharp.remove(&edge_key(a, b)) {
        sharp.insert(edge_key(a, m));
        sharp.insert(edge_key(m, b));
    }
    *mesh = TriMesh::new(vertices, faces)?.with_sharp_edges(sharp);
    *labels = new_labels;
    Ok(m)
}

/// A routed cut: its layout line and the mesh vertices from `s0` to `s1`.
#[derive(Clone, Debug, PartialEq)]
pub struct RoutedCut {
    pub face: usize,
    pub line: CutLine,
    pub vertices: Vec<usize>,
}

/// Routes every cut of every face through the interior of its patch. The mesh,
/// labels and paths change only by edge splits on paths.
pub fn route_cuts(
    mesh: &mut TriMesh,
    labels: &mut Vec<usize>,
    paths: &mut PathSet,
    pc: &PolycubeStructure,
    layouts: &[FaceLayout],
) -> Result<Vec<RoutedCut>> {
    let mut ends = Vec::new();
    for (face, layout) in layouts.iter().enumerate() {
        for &line in &layout.cuts {
            let a = boundary_vertex(mesh, labels, paths, pc, face, face_point(pc, face, line.s0, line.t))?;
            let b = boundary_vertex(mesh, labels, paths, pc, face, face_point(pc, face, line.s1, line.t))?;
            ends.push((face, line, a, b));
        }
    }
    if ends.is_empty() {
        return Ok(Vec::new());
    }
    let on_path: HashSet<usize> = paths.paths.iter().flatten().copied().collect();
    let topo = mesh.topology();
    let mut graph = EdgeGraph::from_mesh(mesh);
    let weights = PathWeights::default();
    let mut out = Vec::new();
    for (face, line, a, b) in ends {
        let allowed: Vec<bool> = (0..mesh.num_vertices())
            .map(|v| v == a || v == b || (!on_path.contains(&v) && topo.vertex_faces[v].iter().all(|&f| labels[f] == face)))
            .collect();
        let vertices = graph.shortest_path(a, b, &weights, Some(&allowed))?;
        graph.blocked_vertices.extend(vertices.iter().copied());
        out.push(RoutedCut { face, line, vertices });
    }
    Ok(out)
}

