//! All-hex mesh construction from a segmented surface and its polycube.
//!
//! Every patch is parameterized once onto its polycube face, expressed in the
//! face's lattice `(s, t)` coordinates, so a face made of several unit facets
//! needs no further cutting. Each cube of the template is then split into a
//! `2^level` grid. Samples on the boundary come from the patch maps (or from
//! the corner paths on polycube edges and corners), and the rest is filled by
//! interpolation: interior lattice edges linearly, interior facets by Coons
//! patches and cube interiors by transfinite trilinear blending. Samples are
//! keyed by integer lattice coordinates scaled by `2^level`, so neighbouring
//! cubes weld exactly.

pub mod cut;
mod param;

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

pub use param::{
    arc_fractions, arc_length_uv, harmonic_uv, laplacian_weights, map_patch_boundary, parameterize_patch, sample_surface_point, BoundarySegment,
    CotangentWeights, LaplacianWeights, Patch, PatchParam, UniformWeights, MAX_RESIDUAL, MIN_COT_WEIGHT, UV_SNAP_TOL,
};

pub use cut::{decompose_face, split_edge, CutLine, FaceLayout, Rect, RoutedCut};

use crate::mesh::{edge_key, HexMesh, TriMesh, Vec3, VertexClass};
use crate::pathopt::{paths_from_segmentation, PathSet};
use crate::polycube::{LatticePoint, PolycubeStructure};
use crate::segmentation::Segmentation;
use crate::{Error, Result};

pub const MAX_LEVEL: u32 = 7;

/// Uniform subdivision of every unit cube into `2^level` cells per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OctreeGrid {
    pub level: u32,
}

impl OctreeGrid {
    pub fn new(level: u32) -> Result<Self> {
        if !(1..=MAX_LEVEL).contains(&level) {
            return Err(Error::Config(format!("octree level {level} outside 1..={MAX_LEVEL}")));
        }
        Ok(OctreeGrid { level })
    }

    /// Cells per cube edge.
    pub fn resolution(&self) -> usize {
        1 << self.level
    }

    pub fn samples_per_cube(&self) -> usize {
        (self.resolution() + 1).pow(3)
    }

    /// Parametric coordinates `i / 2^level` of the samples along one axis.
    pub fn coordinates(&self) -> Vec<f64> {
        let n = self.resolution();
        (0..=n).map(|i| i as f64 / n as f64).collect()
    }
}

type Key = [i64; 3];

fn scaled(p: LatticePoint, n: i64) -> Key {
    [p[0] as i64 * n, p[1] as i64 * n, p[2] as i64 * n]
}

/// Where a boundary sample comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Site {
    Node(usize),
    Edge { edge: usize, t: f64 },
    Face { face: usize, uv: [f64; 2] },
}

/// Euler characteristic of a polycube face's facet complex.
fn face_euler_characteristic(pc: &PolycubeStructure, face: usize) -> i64 {
    let mut points = std::collections::BTreeSet::new();
    let mut edges = std::collections::BTreeSet::new();
    let facets = &pc.boundary_faces[face].facets;
    for &fi in facets {
        let c = pc.facets[fi].corners();
        for i in 0..4 {
            points.insert(c[i]);
            let (a, b) = (c[i], c[(i + 1) % 4]);
            edges.insert(if a < b { (a, b) } else { (b, a) });
        }
    }
    points.len() as i64 - edges.len() as i64 + facets.len() as i64
}

/// Boundary parameter positions of one patch in its face's lattice `(s, t)`
/// coordinates: every path along the face is spread over its polycube edge by
/// arc length.
pub fn face_boundary_uv(mesh: &TriMesh, pc: &PolycubeStructure, paths: &PathSet, face: usize) -> BTreeMap<usize, [f64; 2]> {
    let (sa, ta) = pc.boundary_faces[face].label.plane_axes();
    let mut out = BTreeMap::new();
    for (e, edge) in pc.edges.iter().enumerate() {
        if edge.faces.0 != face && edge.faces.1 != face {
            continue;
        }
        let (p0, p1) = (edge.points[0], *edge.points.last().expect("non-empty chain"));
        let seg = BoundarySegment {
            vertices: paths.paths[e].clone(),
            from: [p0[sa] as f64, p0[ta] as f64],
            to: [p1[sa] as f64, p1[ta] as f64],
        };
        out.extend(arc_length_uv(mesh, &seg));
    }
    out
}

/// The map of one patch onto its polycube face, one piece per rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceParam {
    pub face: usize,
    pub pieces: Vec<(Rect, PatchParam)>,
}

impl FaceParam {
    /// Surface point at face coordinates `uv`, taken from the first
    /// rectangle containing it.
    pub fn sample(&self, uv: [f64; 2]) -> Result<Vec3> {
        let tol = 1e-12;
        let inside = |r: &Rect| {
            uv[0] >= r.0 as f64 - tol && uv[0] <= r.2 as f64 + tol && uv[1] >= r.1 as f64 - tol && uv[1] <= r.3 as f64 + tol
        };
        match self.pieces.iter().find(|(r, _)| inside(r)) {
            Some((_, p)) => p.sample(uv),
            None => Err(Error::UvOutside {
                patch: self.face,
                u: uv[0],
                v: uv[1],
            }),
        }
    }
}

/// Patch maps together with the surface they were computed on: cutting
/// non-rectangular faces may split mesh edges on the corner paths, so the
/// mesh, labels and paths here can carry a few more vertices than the input.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceMap {
    pub mesh: TriMesh,
    pub labels: Vec<usize>,
    pub paths: PathSet,
    pub cuts: Vec<RoutedCut>,
    pub faces: Vec<FaceParam>,
}

/// Harmonic maps of all patches onto their polycube faces.
pub fn parameterize_surface(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure, paths: &PathSet) -> Result<SurfaceMap> {
    let k = pc.num_boundary_faces();
    seg.validate(mesh.num_faces(), k)?;
    let mut labels = seg.face_labels();
    for face in 0..k {
        let faces: Vec<usize> = (0..labels.len()).filter(|&f| labels[f] == face).collect();
        let (got, want) = (Patch::new(mesh, &faces).euler_characteristic(), face_euler_characteristic(pc, face));
        if got != want {
            return Err(Error::NotDisk {
                patch: face,
                msg: format!("euler characteristic {got}, the polycube face has {want}"),
            });
        }
    }
    let layouts = (0..k).map(|f| decompose_face(pc, f)).collect::<Result<Vec<_>>>()?;
    let mut mesh = mesh.clone();
    let mut paths = paths.clone();
    let cuts = cut::route_cuts(&mut mesh, &mut labels, &mut paths, pc, &layouts)?;
    let mut boundaries: Vec<BTreeMap<usize, [f64; 2]>> = (0..k).map(|face| face_boundary_uv(&mesh, pc, &paths, face)).collect();
    for c in &cuts {
        let seg = BoundarySegment {
            vertices: c.vertices.clone(),
            from: [c.line.s0 as f64, c.line.t as f64],
            to: [c.line.s1 as f64, c.line.t as f64],
        };
        boundaries[c.face].extend(arc_length_uv(&mesh, &seg));
    }
    // an interior edge joining two fixed vertices can leave a triangle flat in
    // the parameter plane; splitting it adds a free vertex
    let boundary_edges: HashSet<(usize, usize)> = paths
        .paths
        .iter()
        .chain(cuts.iter().map(|c| &c.vertices))
        .flat_map(|p| p.windows(2).map(|w| edge_key(w[0], w[1])))
        .collect();
    let chords: Vec<(usize, usize)> = {
        let topo = mesh.topology();
        topo.edges
            .iter()
            .zip(&topo.edge_faces)
            .filter(|(e, &[f, g])| {
                let b = &boundaries[labels[f]];
                labels[f] == labels[g] && !boundary_edges.contains(e) && b.contains_key(&e.0) && b.contains_key(&e.1)
            })
            .map(|(&e, _)| e)
            .collect()
    };
    for (a, b) in chords {
        cut::split_edge(&mut mesh, &mut labels, a, b, 0.5)?;
    }
    let cut_edges: HashSet<(usize, usize)> = cuts.iter().flat_map(|c| c.vertices.windows(2).map(|w| edge_key(w[0], w[1]))).collect();
    let adj = crate::segmentation::face_adjacency(&mesh);
    let mut out = Vec::with_capacity(k);
    for (face, layout) in layouts.iter().enumerate() {
        let boundary = &boundaries[face];
        let faces: Vec<usize> = (0..labels.len()).filter(|&f| labels[f] == face).collect();
        if layout.rects.len() == 1 {
            let p = parameterize_patch(&mesh, &faces, boundary, face)?;
            out.push(FaceParam {
                face,
                pieces: vec![(layout.rects[0], p)],
            });
            continue;
        }
        let pieces = split_pieces(&mesh, &adj, &labels, face, &faces, &cut_edges);
        let mut assigned: Vec<Option<PatchParam>> = vec![None; layout.rects.len()];
        for piece in pieces {
            let fixed: Vec<[f64; 2]> = piece
                .iter()
                .flat_map(|&f| mesh.faces()[f])
                .filter_map(|v| boundary.get(&v).copied())
                .collect();
            let avg = [
                fixed.iter().map(|p| p[0]).sum::<f64>() / fixed.len().max(1) as f64,
                fixed.iter().map(|p| p[1]).sum::<f64>() / fixed.len().max(1) as f64,
            ];
            let slot = layout
                .rects
                .iter()
                .position(|r| avg[0] > r.0 as f64 && avg[0] < r.2 as f64 && avg[1] > r.1 as f64 && avg[1] < r.3 as f64)
                .filter(|&i| assigned[i].is_none())
                .ok_or_else(|| Error::FloodFillLeakage(format!("a piece of patch {face} matches no rectangle")))?;
            assigned[slot] = Some(parameterize_patch(&mesh, &piece, boundary, face)?);
        }
        let pieces = layout
            .rects
            .iter()
            .zip(assigned)
            .map(|(r, p)| p.map(|p| (*r, p)).ok_or_else(|| Error::FloodFillLeakage(format!("rectangle {r:?} of patch {face} has no piece"))))
            .collect::<Result<Vec<_>>>()?;
        out.push(FaceParam { face, pieces });
    }
    Ok(SurfaceMap {
        mesh,
        labels,
        paths,
        cuts,
        faces: out,
    })
}

/// Connected pieces of one patch separated by cut edges.
fn split_pieces(mesh: &TriMesh, adj: &[Vec<usize>], labels: &[usize], face: usize, faces: &[usize], cut_edges: &HashSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let shared = |f: usize, g: usize| {
        let a = mesh.faces()[f];
        let b = mesh.faces()[g];
        let c: Vec<usize> = a.iter().copied().filter(|v| b.contains(v)).collect();
        edge_key(c[0], c[1])
    };
    let mut seen = vec![false; mesh.num_faces()];
    let mut pieces = Vec::new();
    for &start in faces {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut piece = vec![start];
        let mut q = VecDeque::from([start]);
        while let Some(f) = q.pop_front() {
            for &g in &adj[f] {
                if labels[g] == face && !seen[g] && !cut_edges.contains(&shared(f, g)) {
                    seen[g] = true;
                    piece.push(g);
                    q.push_back(g);
                }
            }
        }
        piece.sort_unstable();
        pieces.push(piece);
    }
    pieces
}

fn surface_sites(pc: &PolycubeStructure, n: i64) -> HashMap<Key, Site> {
    let mut sites = HashMap::new();
    for (i, &p) in pc.nodes.iter().enumerate() {
        sites.insert(scaled(p, n), Site::Node(i));
    }
    for (e, edge) in pc.edges.iter().enumerate() {
        let segs = edge.points.len() as i64 - 1;
        for (m, w) in edge.points.windows(2).enumerate() {
            let base = scaled(w[0], n);
            let dir = [(w[1][0] - w[0][0]) as i64, (w[1][1] - w[0][1]) as i64, (w[1][2] - w[0][2]) as i64];
            for r in 0..=n {
                let key = [base[0] + dir[0] * r, base[1] + dir[1] * r, base[2] + dir[2] * r];
                let t = (m as i64 * n + r) as f64 / (segs * n) as f64;
                sites.entry(key).or_insert(Site::Edge { edge: e, t });
            }
        }
    }
    for (fi, facet) in pc.facets.iter().enumerate() {
        let face = pc.facet_face[fi];
        let (sa, ta) = facet.label.plane_axes();
        let base = scaled(facet.corners()[0], n);
        for j in 0..=n {
            for i in 0..=n {
                let mut key = base;
                key[sa] += i;
                key[ta] += j;
                let uv = [key[sa] as f64 / n as f64, key[ta] as f64 / n as f64];
                sites.entry(key).or_insert(Site::Face { face, uv });
            }
        }
    }
    sites
}

/// Point at arc-length fraction `t` along a vertex path.
fn along_path(mesh: &TriMesh, path: &[usize], fractions: &[f64], t: f64) -> Vec3 {
    let p = mesh.vertices();
    let i = fractions.partition_point(|&f| f <= t).clamp(1, path.len() - 1);
    let (f0, f1) = (fractions[i - 1], fractions[i]);
    let w = if f1 > f0 { ((t - f0) / (f1 - f0)).clamp(0.0, 1.0) } else { 0.0 };
    p[path[i - 1]].lerp(p[path[i]], w)
}

/// Coons patch on an `(n+1)²` grid whose border is filled.
fn coons(grid: &mut [Vec3], n: usize) {
    let at = |i: usize, j: usize| j * (n + 1) + i;
    let g = grid.to_vec();
    for j in 1..n {
        for i in 1..n {
            let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
            let ruled = g[at(0, j)] * (1.0 - u) + g[at(n, j)] * u + g[at(i, 0)] * (1.0 - v) + g[at(i, n)] * v;
            let bilinear = g[at(0, 0)] * ((1.0 - u) * (1.0 - v)) + g[at(n, 0)] * (u * (1.0 - v)) + g[at(0, n)] * ((1.0 - u) * v) + g[at(n, n)] * (u * v);
            grid[at(i, j)] = ruled - bilinear;
        }
    }
}

/// Transfinite trilinear interpolation of the interior of an `(n+1)³` block
/// whose six faces are filled.
fn transfinite(block: &mut [Vec3], n: usize) {
    let m = n + 1;
    let at = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
    let g = block.to_vec();
    for k in 1..n {
        for j in 1..n {
            for i in 1..n {
                let (u, v, w) = (i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64);
                let (iu, iv, iw) = (1.0 - u, 1.0 - v, 1.0 - w);
                let faces = g[at(0, j, k)] * iu + g[at(n, j, k)] * u + g[at(i, 0, k)] * iv + g[at(i, n, k)] * v + g[at(i, j, 0)] * iw + g[at(i, j, n)] * w;
                let edges = g[at(0, 0, k)] * (iu * iv)
                    + g[at(n, 0, k)] * (u * iv)
                    + g[at(0, n, k)] * (iu * v)
                    + g[at(n, n, k)] * (u * v)
                    + g[at(0, j, 0)] * (iu * iw)
                    + g[at(n, j, 0)] * (u * iw)
                    + g[at(0, j, n)] * (iu * w)
                    + g[at(n, j, n)] * (u * w)
                    + g[at(i, 0, 0)] * (iv * iw)
                    + g[at(i, n, 0)] * (v * iw)
                    + g[at(i, 0, n)] * (iv * w)
                    + g[at(i, n, n)] * (v * w);
                let corners = g[at(0, 0, 0)] * (iu * iv * iw)
                    + g[at(n, 0, 0)] * (u * iv * iw)
                    + g[at(0, n, 0)] * (iu * v * iw)
                    + g[at(n, n, 0)] * (u * v * iw)
                    + g[at(0, 0, n)] * (iu * iv * w)
                    + g[at(n, 0, n)] * (u * iv * w)
                    + g[at(0, n, n)] * (iu * v * w)
                    + g[at(n, n, n)] * (u * v * w);
                block[at(i, j, k)] = faces - edges + corners;
            }
        }
    }
}

/// Lattice point inside the solid: the average over the three axes of the
/// linear interpolation between the nearest boundary lattice points.
fn interior_lattice_point(pos: &HashMap<Key, Vec3>, p: Key, n: i64, limit: i64) -> Option<Vec3> {
    let mut acc = Vec3::ZERO;
    let mut count = 0.0;
    for a in 0..3 {
        let mut ends = [None, None];
        for (s, dir) in [-1i64, 1].into_iter().enumerate() {
            for step in 1..=limit {
                let mut q = p;
                q[a] += dir * step * n;
                if let Some(&x) = pos.get(&q) {
                    ends[s] = Some((x, step as f64));
                    break;
                }
            }
        }
        if let [Some((lo, dl)), Some((hi, dh))] = ends {
            acc += lo.lerp(hi, dl / (dl + dh));
            count += 1.0;
        }
    }
    (count > 0.0).then(|| acc / count)
}

/// Builds the hex mesh from the patch maps.
pub fn build_hex_mesh(surface: &SurfaceMap, pc: &PolycubeStructure, grid: OctreeGrid) -> Result<HexMesh> {
    let (mesh, paths, params) = (&surface.mesh, &surface.paths, &surface.faces);
    let n = grid.resolution();
    let ni = n as i64;
    let sites = surface_sites(pc, ni);
    let fractions: Vec<Vec<f64>> = paths.paths.iter().map(|p| arc_fractions(mesh, p)).collect();
    let mut pos: HashMap<Key, Vec3> = HashMap::with_capacity(sites.len() * 2);
    let mut ordered: Vec<(&Key, &Site)> = sites.iter().collect();
    ordered.sort_by(|a, b| a.0.cmp(b.0));
    for (&key, &site) in ordered {
        let x = match site {
            Site::Node(i) => mesh.vertices()[paths.corner_map[i]],
            Site::Edge { edge, t } => along_path(mesh, &paths.paths[edge], &fractions[edge], t),
            Site::Face { face, uv } => params[face].sample(uv)?,
        };
        pos.insert(key, x);
    }
    let limit = {
        let (lo, hi) = pc.lattice_bbox();
        (0..3).map(|a| (hi[a] - lo[a]).round() as i64).max().unwrap_or(1) + 1
    };
    let m = n + 1;
    let corner_key = |c: &[i32; 3], i: usize, j: usize, k: usize| {
        let b = scaled(*c, ni);
        [b[0] + i as i64, b[1] + j as i64, b[2] + k as i64]
    };
    // interior lattice points
    for c in &pc.cubes {
        for k in [0, n] {
            for j in [0, n] {
                for i in [0, n] {
                    let key = corner_key(c, i, j, k);
                    if !pos.contains_key(&key) {
                        let x = interior_lattice_point(&pos, key, ni, limit)
                            .ok_or_else(|| Error::Weld(format!("lattice point {key:?} has no boundary support")))?;
                        pos.insert(key, x);
                    }
                }
            }
        }
    }
    // interior lattice edges, linearly
    for c in &pc.cubes {
        for a in 0..3 {
            let (b1, b2) = ((a + 1) % 3, (a + 2) % 3);
            for (o1, o2) in [(0, 0), (n, 0), (0, n), (n, n)] {
                let key_at = |r: usize| {
                    let mut idx = [0usize; 3];
                    idx[a] = r;
                    idx[b1] = o1;
                    idx[b2] = o2;
                    corner_key(c, idx[0], idx[1], idx[2])
                };
                let (p0, p1) = (pos[&key_at(0)], pos[&key_at(n)]);
                for r in 1..n {
                    pos.entry(key_at(r)).or_insert_with(|| p0.lerp(p1, r as f64 / n as f64));
                }
            }
        }
    }
    // interior facets by Coons patches
    for c in &pc.cubes {
        for a in 0..3 {
            let (b1, b2) = ((a + 1) % 3, (a + 2) % 3);
            for side in [0, n] {
                let key_at = |i: usize, j: usize| {
                    let mut idx = [0usize; 3];
                    idx[a] = side;
                    idx[b1] = i;
                    idx[b2] = j;
                    corner_key(c, idx[0], idx[1], idx[2])
                };
                if (1..n).all(|j| (1..n).all(|i| pos.contains_key(&key_at(i, j)))) {
                    continue;
                }
                let mut g = vec![Vec3::ZERO; m * m];
                for j in 0..=n {
                    for i in 0..=n {
                        if i == 0 || j == 0 || i == n || j == n {
                            g[j * m + i] = pos[&key_at(i, j)];
                        }
                    }
                }
                coons(&mut g, n);
                for j in 1..n {
                    for i in 1..n {
                        pos.entry(key_at(i, j)).or_insert(g[j * m + i]);
                    }
                }
            }
        }
    }
    // cube interiors, then elements
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut tags = Vec::new();
    let mut elements = Vec::with_capacity(pc.cubes.len() * n * n * n);
    for c in &pc.cubes {
        let mut block = vec![Vec3::ZERO; m * m * m];
        for k in 0..=n {
            for j in 0..=n {
                for i in 0..=n {
                    if [i, j, k].iter().any(|&x| x == 0 || x == n) {
                        let key = corner_key(c, i, j, k);
                        block[(k * m + j) * m + i] = *pos.get(&key).ok_or_else(|| Error::Weld(format!("missing sample {key:?}")))?;
                    }
                }
            }
        }
        transfinite(&mut block, n);
        let mut id = |i: usize, j: usize, k: usize| -> usize {
            let key = corner_key(c, i, j, k);
            *index.entry(key).or_insert_with(|| {
                let x = block[(k * m + j) * m + i];
                vertices.push(x);
                tags.push(match sites.get(&key) {
                    Some(Site::Node(_)) => VertexClass::Corner,
                    Some(Site::Edge { .. }) => VertexClass::Edge,
                    Some(Site::Face { .. }) => VertexClass::Face,
                    None => VertexClass::Interior,
                });
                vertices.len() - 1
            })
        };
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    elements.push([
                        id(i, j, k),
                        id(i + 1, j, k),
                        id(i + 1, j + 1, k),
                        id(i, j + 1, k),
                        id(i, j, k + 1),
                        id(i + 1, j, k + 1),
                        id(i + 1, j + 1, k + 1),
                        id(i, j + 1, k + 1),
                    ]);
                }
            }
        }
    }
    HexMesh::new(vertices, elements, tags)
}

/// Parameterizes the patches along the given corner paths and builds the mesh.
pub fn assemble_with_paths(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure, paths: &PathSet, level: u32) -> Result<HexMesh> {
    let grid = OctreeGrid::new(level)?;
    let surface = parameterize_surface(mesh, seg, pc, paths)?;
    build_hex_mesh(&surface, pc, grid)
}

/// As [`assemble_with_paths`], recovering the corner paths from a segmentation
/// whose patch boundaries already run between corners.
pub fn assemble_hex_mesh(mesh: &TriMesh, seg: &Segmentation, pc: &PolycubeStructure, level: u32) -> Result<HexMesh> {
    let paths = paths_from_segmentation(mesh, seg, pc)?;
    assemble_with_paths(mesh, seg, pc, &paths, level)
}
