//! Rerouting patch boundaries along weighted shortest paths between the mesh
//! vertices that stand in for template corners.

mod graph;

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

pub use graph::{edge_weight, EdgeGraph, GraphEdge, PathWeights};

use crate::dataset::region_centroids;
use crate::mesh::io::{read_to_string, write_string};
use crate::mesh::{edge_key, TriMesh};
use crate::polycube::PolycubeStructure;
use crate::segmentation::{face_adjacency, Segmentation};
use crate::{Error, Result};

/// One vertex path per polycube edge plus the corner vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathSet {
    /// Mesh vertex of every polycube corner (indexed like `pc.nodes`).
    pub corner_map: Vec<usize>,
    /// Vertex path of every polycube edge (indexed like `pc.edges`), running
    /// from the edge's first corner to its second.
    pub paths: Vec<Vec<usize>>,
}

impl PathSet {
    /// Undirected mesh edges of every path.
    pub fn path_edges(&self) -> Vec<BTreeSet<(usize, usize)>> {
        self.paths
            .iter()
            .map(|p| p.windows(2).map(|s| edge_key(s[0], s[1])).collect())
            .collect()
    }

    pub fn all_edges(&self) -> HashSet<(usize, usize)> {
        self.path_edges().into_iter().flatten().collect()
    }

    /// Simple paths that meet only at corners and share no edge.
    pub fn check_disjoint(&self) -> Result<()> {
        let corners: HashSet<usize> = self.corner_map.iter().copied().collect();
        let mut seen_v: HashSet<usize> = HashSet::new();
        let mut seen_e: HashSet<(usize, usize)> = HashSet::new();
        for (i, p) in self.paths.iter().enumerate() {
            let uniq: HashSet<usize> = p.iter().copied().collect();
            if uniq.len() != p.len() {
                return Err(Error::FloodFillLeakage(format!("path {i} is not simple")));
            }
            for &v in &p[1..p.len() - 1] {
                if corners.contains(&v) || !seen_v.insert(v) {
                    return Err(Error::FloodFillLeakage(format!("path {i} crosses another path at vertex {v}")));
                }
            }
            for s in p.windows(2) {
                if !seen_e.insert(edge_key(s[0], s[1])) {
                    return Err(Error::FloodFillLeakage(format!("path {i} reuses an edge")));
                }
            }
        }
        Ok(())
    }
}

pub fn format_paths(paths: &PathSet) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "corners {}", paths.corner_map.len());
    for (i, v) in paths.corner_map.iter().enumerate() {
        let _ = writeln!(s, "{i} {v}");
    }
    let _ = writeln!(s, "paths {}", paths.paths.len());
    for (i, p) in paths.paths.iter().enumerate() {
        let vs: Vec<String> = p.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{i} {}", vs.join(" "));
    }
    s
}

pub fn parse_paths(text: &str) -> Result<PathSet> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut section = |name: &str| -> Result<Vec<Vec<usize>>> {
        let (n, head) = lines.next().ok_or_else(|| Error::parse(0, format!("missing '{name}' section")))?;
        let count: usize = head
            .strip_prefix(name)
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::parse(n + 1, format!("expected '{name} <count>'")))?;
        let mut rows = Vec::with_capacity(count);
        for i in 0..count {
            let (n, line) = lines.next().ok_or_else(|| Error::parse(0, format!("{name} section truncated")))?;
            let vals: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::parse(n + 1, format!("bad index '{t}'"))))
                .collect::<Result<_>>()?;
            if vals.first() != Some(&i) || vals.len() < 2 {
                return Err(Error::parse(n + 1, format!("expected entry {i}")));
            }
            rows.push(vals[1..].to_vec());
        }
        Ok(rows)
    };
    let corners = section("corners")?;
    let paths = section("paths")?;
    if corners.iter().any(|c| c.len() != 1) || paths.iter().any(|p| p.len() < 2) {
        return Err(Error::parse(0, "malformed corner or path entry"));
    }
    Ok(PathSet {
        corner_map: corners.into_iter().map(|c| c[0]).collect(),
        paths,
    })
}

pub fn save_paths(paths: &PathSet, path: &Path) -> Result<()> {
    write_string(path, &format_paths(paths))
}

pub fn load_paths(path: &Path) -> Result<PathSet> {
    parse_paths(&read_to_string(path)?)
}

/// For every polycube corner, the mesh vertex touching all of the corner's
/// faces; among several, the one with the most incident sharp edges, then the
/// one closest in total to those patches' centroids.
/// When the patches never meet at one vertex, the vertex nearest to all of
/// them along mesh edges stands in. Corners get distinct vertices: each takes
/// its best candidate not already claimed. A patch missing entirely is an error.
pub fn identify_corners(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure) -> Result<Vec<usize>> {
    let labels = seg.face_labels();
    let centroids = region_centroids(mesh, &labels, pc.num_boundary_faces());
    let topo = mesh.topology();
    let vertex_labels: Vec<BTreeSet<usize>> = topo
        .vertex_faces
        .iter()
        .map(|fs| fs.iter().map(|&f| labels[f]).collect())
        .collect();
    let mut sharp_degree = vec![0usize; mesh.num_vertices()];
    for &(a, b) in mesh.sharp_edges() {
        sharp_degree[a] += 1;
        sharp_degree[b] += 1;
    }
    // ranked exact candidates of every corner
    let ranked: Vec<Vec<usize>> = pc
        .node_faces
        .iter()
        .map(|faces| {
            let mut c: Vec<(std::cmp::Reverse<usize>, f64, usize)> = Vec::new();
            for (v, ls) in vertex_labels.iter().enumerate() {
                if faces.iter().all(|f| ls.contains(f)) {
                    let p = mesh.vertices()[v];
                    let d: f64 = faces.iter().map(|&f| p.dist(centroids[f])).sum();
                    c.push((std::cmp::Reverse(sharp_degree[v]), d, v));
                }
            }
            c.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
            c.into_iter().map(|(_, _, v)| v).collect()
        })
        .collect();
    // corners with exact candidates claim vertices first, so that a fallback
    // never takes a vertex some corner genuinely sits on
    let mut out = vec![usize::MAX; pc.nodes.len()];
    let mut used = HashSet::new();
    for (ci, cands) in ranked.iter().enumerate() {
        if let Some(&v) = cands.iter().find(|v| !used.contains(*v)) {
            out[ci] = v;
            used.insert(v);
        }
    }
    for (ci, faces) in pc.node_faces.iter().enumerate() {
        if out[ci] != usize::MAX {
            continue;
        }
        let v = nearest_meeting_vertex(mesh, &topo.vertex_neighbors, &vertex_labels, faces, &used).ok_or(Error::CornerNotFound { corner: ci })?;
        out[ci] = v;
        used.insert(v);
    }
    Ok(out)
}

/// Vertex with the smallest summed edge-path distance to every patch in
/// `faces`, for corners whose patches never meet at a single vertex.
fn nearest_meeting_vertex(
    mesh: &TriMesh,
    neighbors: &[Vec<usize>],
    vertex_labels: &[BTreeSet<usize>],
    faces: &[usize],
    used: &HashSet<usize>,
) -> Option<usize> {
    let nv = mesh.num_vertices();
    let pos = mesh.vertices();
    let mut total = vec![0.0; nv];
    for &f in faces {
        let mut dist = vec![f64::INFINITY; nv];
        let mut heap = std::collections::BinaryHeap::new();
        for v in 0..nv {
            if vertex_labels[v].contains(&f) {
                dist[v] = 0.0;
                heap.push((std::cmp::Reverse(OrdF64(0.0)), v));
            }
        }
        if heap.is_empty() {
            return None;
        }
        while let Some((std::cmp::Reverse(OrdF64(d)), v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &u in &neighbors[v] {
                let nd = d + pos[v].dist(pos[u]);
                if nd < dist[u] {
                    dist[u] = nd;
                    heap.push((std::cmp::Reverse(OrdF64(nd)), u));
                }
            }
        }
        for (t, d) in total.iter_mut().zip(&dist) {
            *t += d;
        }
    }
    (0..nv)
        .filter(|&v| !used.contains(&v) && faces.iter().any(|f| vertex_labels[v].contains(f)))
        .min_by(|&a, &b| total[a].total_cmp(&total[b]).then(a.cmp(&b)))
}

#[derive(Clone, Copy)]
struct OrdF64(f64);

impl PartialEq for OrdF64 {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Result of boundary optimization; the mesh may have been refined locally.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryResult {
    pub mesh: TriMesh,
    pub segmentation: Segmentation,
    pub paths: PathSet,
    pub refined: bool,
}

/// Processing order of polycube edges: sorted by their corner pair.
pub fn edge_order(pc: &PolycubeStructure) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pc.edges.len()).collect();
    order.sort_by_key(|&e| {
        let (a, b) = pc.edges[e].ends;
        (a.min(b), a.max(b), e)
    });
    order
}

pub fn route_paths(mesh: &TriMesh, labels: &[usize], pc: &PolycubeStructure, corners: &[usize], w: &PathWeights) -> Result<Vec<Vec<usize>>> {
    let mut graph = EdgeGraph::from_mesh(mesh);
    let topo = mesh.topology();
    graph.blocked_vertices = corners.iter().copied().collect();
    let mut paths = vec![Vec::new(); pc.edges.len()];
    for e in edge_order(pc) {
        let edge = &pc.edges[e];
        let (fa, fb) = edge.faces;
        let corridor: Vec<bool> = topo
            .vertex_faces
            .iter()
            .map(|fs| fs.iter().any(|&f| labels[f] == fa || labels[f] == fb))
            .collect();
        let (src, dst) = (corners[edge.ends.0], corners[edge.ends.1]);
        let band = boundary_band(&topo, labels, fa, fb, &corridor, [src, dst]);
        graph.blocked_vertices.remove(&src);
        let path = match graph.shortest_path(src, dst, w, Some(&band)) {
            Ok(p) => p,
            Err(_) => match graph.shortest_path(src, dst, w, Some(&corridor)) {
                Ok(p) => p,
                Err(_) => {
                    log::debug!("edge {e}: no path inside its corridor, searching the whole mesh");
                    graph.shortest_path(src, dst, w, None)?
                }
            },
        };
        graph.blocked_vertices.insert(src);
        graph.mark_used(&path);
        graph.blocked_vertices.extend(path[1..path.len() - 1].iter().copied());
        paths[e] = path;
    }
    Ok(paths)
}

/// Vertex rings around the current boundary of two patches kept as the
/// preferred search region of their path.
pub const BAND_RINGS: usize = 3;

/// Corridor vertices within [`BAND_RINGS`] rings of a vertex touching both
/// patches `fa` and `fb`, plus the two end corners.
fn boundary_band(topo: &crate::mesh::Topology, labels: &[usize], fa: usize, fb: usize, corridor: &[bool], ends: [usize; 2]) -> Vec<bool> {
    let n = corridor.len();
    let mut band = vec![false; n];
    let mut frontier: Vec<usize> = (0..n)
        .filter(|&v| {
            let fs = &topo.vertex_faces[v];
            fs.iter().any(|&f| labels[f] == fa) && fs.iter().any(|&f| labels[f] == fb)
        })
        .chain(ends)
        .collect();
    for &v in &frontier {
        band[v] = true;
    }
    for _ in 0..BAND_RINGS {
        let mut next = Vec::new();
        for &v in &frontier {
            for &u in &topo.vertex_neighbors[v] {
                if corridor[u] && !band[u] {
                    band[u] = true;
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    band
}

/// Rebuilds patch labels by flood fill from one deep triangle of each old
/// patch, never crossing a path edge.
fn relabel(mesh: &TriMesh, labels: &[usize], pc: &PolycubeStructure, paths: &PathSet) -> Result<Vec<usize>> {
    let k = pc.num_boundary_faces();
    let adj = face_adjacency(mesh);
    let cut = paths.all_edges();
    let faces = mesh.faces();
    let shared = |f: usize, g: usize| -> (usize, usize) {
        let a = faces[f];
        let b = faces[g];
        let common: Vec<usize> = a.iter().copied().filter(|v| b.contains(v)).collect();
        edge_key(common[0], common[1])
    };
    // depth inside the old patch, measured from its boundary
    let mut depth = vec![usize::MAX; faces.len()];
    let mut q = VecDeque::new();
    for f in 0..faces.len() {
        if adj[f].iter().any(|&g| labels[g] != labels[f]) {
            depth[f] = 0;
            q.push_back(f);
        }
    }
    while let Some(f) = q.pop_front() {
        for &g in &adj[f] {
            if labels[g] == labels[f] && depth[g] == usize::MAX {
                depth[g] = depth[f] + 1;
                q.push_back(g);
            }
        }
    }
    let mut out = vec![usize::MAX; faces.len()];
    for face in 0..k {
        let seed = (0..faces.len())
            .filter(|&f| labels[f] == face)
            .max_by_key(|&f| (depth[f], std::cmp::Reverse(f)))
            .ok_or_else(|| Error::SegmentationMismatch(format!("patch {face} is empty")))?;
        if out[seed] != usize::MAX {
            return Err(Error::FloodFillLeakage(format!(
                "seed of face {face} already belongs to face {}",
                out[seed]
            )));
        }
        out[seed] = face;
        let mut q = VecDeque::from([seed]);
        while let Some(f) = q.pop_front() {
            for &g in &adj[f] {
                if cut.contains(&shared(f, g)) {
                    continue;
                }
                if out[g] == usize::MAX {
                    out[g] = face;
                    q.push_back(g);
                } else if out[g] != face {
                    return Err(Error::FloodFillLeakage(format!("faces {face} and {} are not separated", out[g])));
                }
            }
        }
    }
    if out.contains(&usize::MAX) {
        return Err(Error::FloodFillLeakage("a region enclosed by paths has no patch".into()));
    }
    // every path must separate exactly the two faces of its polycube edge
    let topo = mesh.topology();
    for (e, p) in paths.paths.iter().enumerate() {
        let want = pc.edges[e].faces;
        for s in p.windows(2) {
            let id = topo.edge(s[0], s[1]).expect("path edges are mesh edges");
            let mut got: Vec<usize> = topo.edge_faces[id].iter().map(|&f| out[f]).collect();
            got.sort_unstable();
            if got != [want.0.min(want.1), want.0.max(want.1)] {
                return Err(Error::FloodFillLeakage(format!("path {e} separates faces {got:?}, expected {want:?}")));
            }
        }
    }
    Ok(out)
}

/// Replaces zigzag patch boundaries by shortest paths between corners and
/// rebuilds the patches from the paths. When a path cannot be routed the mesh
/// is refined around the stuck corridor once and the whole step retried.
pub fn optimize_boundaries(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure, w: &PathWeights) -> Result<BoundaryResult> {
    w.validate()?;
    seg.validate(mesh.num_faces(), pc.num_boundary_faces())?;
    match optimize_once(mesh, seg, pc, w) {
        Ok((segmentation, paths)) => Ok(BoundaryResult {
            mesh: mesh.clone(),
            segmentation,
            paths,
            refined: false,
        }),
        Err(Error::NoPath { src, dst }) => {
            log::warn!("no path between {src} and {dst}; refining around the corridor and retrying");
            let topo = mesh.topology();
            let labels = seg.face_labels();
            // faces within two rings of the two corner vertices and their patches' shared boundary
            let mut near: BTreeSet<usize> = BTreeSet::new();
            let mut ring: BTreeSet<usize> = [src, dst].into_iter().collect();
            for _ in 0..2 {
                let faces: Vec<usize> = ring.iter().flat_map(|&v| topo.vertex_faces[v].iter().copied()).collect();
                near.extend(faces.iter().copied());
                ring = faces.iter().flat_map(|&f| mesh.faces()[f]).collect();
            }
            let adj = face_adjacency(mesh);
            for f in 0..mesh.num_faces() {
                if adj[f].iter().any(|&g| labels[g] != labels[f]) {
                    near.insert(f);
                }
            }
            let selected: Vec<usize> = near.into_iter().collect();
            let (fine, parent) = mesh.refine_faces(&selected);
            let fine_seg = Segmentation {
                k: seg.k,
                labels: parent.iter().map(|&p| seg.labels[p]).collect(),
                patch_to_face: seg.patch_to_face.clone(),
            };
            let (segmentation, paths) = optimize_once(&fine, &fine_seg, pc, w)?;
            Ok(BoundaryResult {
                mesh: fine,
                segmentation,
                paths,
                refined: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn optimize_once(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure, w: &PathWeights) -> Result<(Segmentation, PathSet)> {
    let labels = seg.face_labels();
    let corner_map = identify_corners(mesh, seg, pc)?;
    let paths = route_paths(mesh, &labels, pc, &corner_map, w)?;
    let set = PathSet { corner_map, paths };
    set.check_disjoint()?;
    let new_labels = relabel(mesh, &labels, pc, &set)?;
    Ok((Segmentation::from_face_labels(new_labels, pc.num_boundary_faces()), set))
}

/// Number of mesh edges whose two triangles carry different labels.
pub fn boundary_edge_count(mesh: &TriMesh, labels: &[usize]) -> usize {
    let topo = mesh.topology();
    topo.edge_faces.iter().filter(|&&[f, g]| labels[f] != labels[g]).count()
}

/// Recovers the corner map and the boundary paths of a segmentation whose
/// patch boundaries already run between corners, such as the output of
/// [`optimize_boundaries`].
pub fn paths_from_segmentation(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure) -> Result<PathSet> {
    seg.validate(mesh.num_faces(), pc.num_boundary_faces())?;
    let labels = seg.face_labels();
    let corner_map = identify_corners(mesh, seg, pc)?;
    let corners: HashSet<usize> = corner_map.iter().copied().collect();
    let topo = mesh.topology();
    let mut paths = Vec::with_capacity(pc.edges.len());
    for (e, edge) in pc.edges.iter().enumerate() {
        let (fa, fb) = edge.faces;
        let mut next: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
        for (&(a, b), &[f, g]) in topo.edges.iter().zip(&topo.edge_faces) {
            let pair = (labels[f].min(labels[g]), labels[f].max(labels[g]));
            if pair == (fa.min(fb), fa.max(fb)) {
                next.entry(a).or_default().push(b);
                next.entry(b).or_default().push(a);
            }
        }
        let (src, dst) = (corner_map[edge.ends.0], corner_map[edge.ends.1]);
        let mismatch = || Error::SegmentationMismatch(format!("boundary between patches {fa} and {fb} does not join corners {src} and {dst} (edge {e})"));
        // walk each branch leaving the source until it reaches a corner
        let mut found = None;
        for &first in next.get(&src).map_or(&[][..], |v| v.as_slice()) {
            let mut path = vec![src, first];
            let mut seen: HashSet<usize> = path.iter().copied().collect();
            while !corners.contains(path.last().unwrap()) {
                let cur = *path.last().unwrap();
                let step = next[&cur].iter().copied().find(|v| !seen.contains(v) || (*v == dst && path.len() > 2));
                match step {
                    Some(v) => {
                        seen.insert(v);
                        path.push(v);
                    }
                    None => break,
                }
            }
            if *path.last().unwrap() == dst {
                found = Some(path);
                break;
            }
        }
        paths.push(found.ok_or_else(mismatch)?);
    }
    let set = PathSet { corner_map, paths };
    set.check_disjoint()?;
    let covered = set.all_edges();
    let boundary = topo
        .edges
        .iter()
        .zip(&topo.edge_faces)
        .filter(|(_, &[f, g])| labels[f] != labels[g])
        .count();
    if covered.len() != boundary {
        return Err(Error::SegmentationMismatch(format!(
            "{boundary} patch boundary edges but the corner paths cover {}",
            covered.len()
        )));
    }
    Ok(set)
}
