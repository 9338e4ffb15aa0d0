//! Classification of hex boundary vertices against the input surface, and the
//! closest-point queries that pin them to it.

use std::collections::{BTreeMap, BTreeSet};

use crate::mesh::{edge_key, HexMesh, TriMesh, Vec3, VertexClass};
use crate::pathopt::PathSet;

/// Half-width of the triangle search box in units of the local triangle edge.
pub const SEARCH_BOX_HALF_WIDTH: f64 = 5.0;
/// How often an empty search box is doubled before falling back to all triangles.
pub const SEARCH_EXPANSIONS: usize = 4;
/// A boundary vertex is an edge point when it lies this close to a feature
/// curve, relative to its local hex edge length.
pub const EDGE_CLASS_TOL: f64 = 0.1;
/// A corner claims its nearest hex vertex only within this fraction of the
/// local hex edge length.
pub const CORNER_CLASS_TOL: f64 = 0.5;

/// Feature corners and curves of a triangle mesh, as vertex indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureCurves {
    pub corners: Vec<usize>,
    pub curves: Vec<Vec<usize>>,
}

impl FeatureCurves {
    /// Corners and boundary paths found by path optimization.
    pub fn from_paths(paths: &PathSet) -> Self {
        FeatureCurves {
            corners: paths.corner_map.clone(),
            curves: paths.paths.clone(),
        }
    }

    /// Only the paths running entirely along sharp edges, and the corners
    /// where two or more of those end. On smooth stretches a
    /// patch boundary carries no geometry, so its vertices stay face points.
    pub fn sharp_paths(paths: &PathSet, tri: &TriMesh) -> Self {
        let sharp = tri.sharp_edges();
        let kept: Vec<&Vec<usize>> = paths
            .paths
            .iter()
            .filter(|p| {
                let n = p.windows(2).filter(|w| sharp.contains(&edge_key(w[0], w[1]))).count();
                p.len() > 1 && n == p.len() - 1
            })
            .collect();
        let corners = paths
            .corner_map
            .iter()
            .copied()
            .filter(|&c| kept.iter().filter(|p| p[0] == c || p[p.len() - 1] == c).count() >= 2)
            .collect();
        FeatureCurves {
            corners,
            curves: kept.into_iter().cloned().collect(),
        }
    }

    /// Sharp-edge chains split at vertices whose sharp degree is not 2; those
    /// vertices become corners. Closed loops without such a vertex start at
    /// their smallest index.
    pub fn from_sharp_edges(tri: &TriMesh) -> Self {
        let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &(a, b) in tri.sharp_edges() {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let corners: Vec<usize> = adj.iter().filter(|(_, n)| n.len() != 2).map(|(&v, _)| v).collect();
        let is_corner: BTreeSet<usize> = corners.iter().copied().collect();
        let mut used: BTreeSet<(usize, usize)> = BTreeSet::new();
        let mut curves = Vec::new();
        let starts: Vec<usize> = corners.iter().copied().chain(adj.keys().copied()).collect();
        for s in starts {
            for &n in &adj[&s] {
                if used.contains(&edge_key(s, n)) {
                    continue;
                }
                let mut curve = vec![s];
                let (mut prev, mut cur) = (s, n);
                used.insert(edge_key(s, n));
                loop {
                    curve.push(cur);
                    if is_corner.contains(&cur) || cur == s {
                        break;
                    }
                    let next = adj[&cur].iter().copied().find(|&w| w != prev && !used.contains(&edge_key(cur, w)));
                    match next {
                        Some(w) => {
                            used.insert(edge_key(cur, w));
                            prev = cur;
                            cur = w;
                        }
                        None => break,
                    }
                }
                curves.push(curve);
            }
        }
        FeatureCurves { corners, curves }
    }
}

/// Surface class of a boundary vertex: pinned to a feature corner, sliding on
/// a feature curve, or free on the surface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum SurfaceClass {
    Corner(usize),
    Edge(usize),
    Face,
}

impl SurfaceClass {
    pub fn vertex_class(self) -> VertexClass {
        match self {
            SurfaceClass::Corner(_) => VertexClass::Corner,
            SurfaceClass::Edge(_) => VertexClass::Edge,
            SurfaceClass::Face => VertexClass::Face,
        }
    }
}

/// Closest point to `p` on segment `ab`.
pub fn closest_on_segment(p: Vec3, a: Vec3, b: Vec3) -> Vec3 {
    let d = b - a;
    let l = d.norm_sq();
    if l == 0.0 {
        return a;
    }
    a + d * ((p - a).dot(d) / l).clamp(0.0, 1.0)
}

/// Closest point to `p` on triangle `abc` by Voronoi-region tests.
pub fn closest_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && d4 - d3 >= 0.0 && d5 - d6 >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

fn polyline_distance(tri: &TriMesh, curve: &[usize], p: Vec3) -> f64 {
    let v = tri.vertices();
    curve
        .windows(2)
        .map(|w| p.dist(closest_on_segment(p, v[w[0]], v[w[1]])))
        .fold(f64::INFINITY, f64::min)
}

/// Mean length of the boundary-quad edges at each boundary vertex.
pub fn boundary_edge_lengths(hex: &HexMesh) -> BTreeMap<usize, f64> {
    let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for q in hex.boundary_quads() {
        for k in 0..4 {
            let (a, b) = (q.vertices[k], q.vertices[(k + 1) % 4]);
            let l = hex.vertices[a].dist(hex.vertices[b]);
            for v in [a, b] {
                let e = acc.entry(v).or_insert((0.0, 0));
                e.0 += l;
                e.1 += 1;
            }
        }
    }
    acc.into_iter().map(|(v, (s, n))| (v, s / n as f64)).collect()
}

/// Classes of all hex vertices; `None` marks interior vertices. Each feature
/// corner claims its nearest boundary vertex, vertices on a feature curve are
/// edge points and the rest are face points.
pub fn classify_boundary_vertices(hex: &HexMesh, tri: &TriMesh, features: &FeatureCurves) -> Vec<Option<SurfaceClass>> {
    let local = boundary_edge_lengths(hex);
    let mut classes: Vec<Option<SurfaceClass>> = vec![None; hex.num_vertices()];
    for (&v, &h) in &local {
        let p = hex.vertices[v];
        let best = features
            .curves
            .iter()
            .enumerate()
            .map(|(c, curve)| (polyline_distance(tri, curve, p), c))
            .min_by(|a, b| a.0.total_cmp(&b.0));
        classes[v] = Some(match best {
            Some((d, c)) if d <= EDGE_CLASS_TOL * h => SurfaceClass::Edge(c),
            _ => SurfaceClass::Face,
        });
    }
    let mut claimed: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for (ci, &c) in features.corners.iter().enumerate() {
        let q = tri.vertices()[c];
        let nearest = local
            .iter()
            .map(|(&v, &h)| (hex.vertices[v].dist(q), v, h))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((d, v, h)) = nearest {
            if d <= CORNER_CLASS_TOL * h && claimed.get(&v).is_none_or(|&(d0, _)| d < d0) {
                claimed.insert(v, (d, ci));
            }
        }
    }
    for (v, (_, ci)) in claimed {
        classes[v] = Some(SurfaceClass::Corner(ci));
    }
    classes
}

/// Vertex tags implied by a classification.
pub fn class_tags(classes: &[Option<SurfaceClass>]) -> Vec<VertexClass> {
    classes
        .iter()
        .map(|c| c.map_or(VertexClass::Interior, SurfaceClass::vertex_class))
        .collect()
}

/// Candidate primitives of one boundary vertex: triangle indices for face
/// points, segment indices of the curve for edge points.
#[derive(Clone, Debug, PartialEq)]
pub enum Candidates {
    Point(Vec3),
    Segments(Vec<(Vec3, Vec3)>),
    Triangles(Vec<usize>),
}

/// Triangle buckets over a uniform grid, for box searches.
pub struct SurfaceProjector<'a> {
    tri: &'a TriMesh,
    features: &'a FeatureCurves,
    lo: Vec3,
    cell: f64,
    dims: [usize; 3],
    buckets: Vec<Vec<usize>>,
    bucket_edge: Vec<f64>,
    mean_edge: f64,
}

impl<'a> SurfaceProjector<'a> {
    pub fn new(tri: &'a TriMesh, features: &'a FeatureCurves) -> Self {
        let mean_edge = tri.mean_edge_length().max(1e-12);
        let (lo, hi) = tri.bbox();
        let cell = 2.0 * mean_edge;
        let dims: [usize; 3] = std::array::from_fn(|a| (((hi[a] - lo[a]) / cell).floor() as usize + 1).min(256));
        let cell = (0..3).map(|a| (hi[a] - lo[a]) / dims[a] as f64).fold(cell, f64::max);
        let mut p = SurfaceProjector {
            tri,
            features,
            lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1] * dims[2]],
            bucket_edge: Vec::new(),
            mean_edge,
        };
        let mut edge_sum = vec![(0.0, 0usize); p.buckets.len()];
        for f in 0..tri.num_faces() {
            let [a, b, c] = tri.corners(f);
            let (l, h) = (a.min(b).min(c), a.max(b).max(c));
            let el = (a.dist(b) + b.dist(c) + c.dist(a)) / 3.0;
            let (i0, i1) = (p.cell_of(l), p.cell_of(h));
            for k in i0[2]..=i1[2] {
                for j in i0[1]..=i1[1] {
                    for i in i0[0]..=i1[0] {
                        let id = p.index([i, j, k]);
                        p.buckets[id].push(f);
                        edge_sum[id].0 += el;
                        edge_sum[id].1 += 1;
                    }
                }
            }
        }
        p.bucket_edge = edge_sum
            .into_iter()
            .map(|(s, n)| if n == 0 { mean_edge } else { s / n as f64 })
            .collect();
        p
    }

    fn cell_of(&self, x: Vec3) -> [usize; 3] {
        std::array::from_fn(|a| {
            let c = ((x[a] - self.lo[a]) / self.cell).floor();
            c.clamp(0.0, (self.dims[a] - 1) as f64) as usize
        })
    }

    fn index(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Mean triangle edge length around `x`.
    pub fn local_edge_length(&self, x: Vec3) -> f64 {
        self.bucket_edge[self.index(self.cell_of(x))]
    }

    /// Triangles whose buckets meet the search box around `x`; the box doubles
    /// while empty, then every triangle qualifies.
    pub fn triangles_near(&self, x: Vec3) -> Vec<usize> {
        let mut half = SEARCH_BOX_HALF_WIDTH * self.local_edge_length(x);
        for _ in 0..=SEARCH_EXPANSIONS {
            let d = Vec3::new(half, half, half);
            let (i0, i1) = (self.cell_of(x - d), self.cell_of(x + d));
            let mut set = BTreeSet::new();
            for k in i0[2]..=i1[2] {
                for j in i0[1]..=i1[1] {
                    for i in i0[0]..=i1[0] {
                        set.extend(self.buckets[self.index([i, j, k])].iter().copied());
                    }
                }
            }
            if !set.is_empty() {
                return set.into_iter().collect();
            }
            half *= 2.0;
        }
        (0..self.tri.num_faces()).collect()
    }

    pub fn candidates(&self, x: Vec3, class: SurfaceClass) -> Candidates {
        let v = self.tri.vertices();
        match class {
            SurfaceClass::Corner(c) => Candidates::Point(v[self.features.corners[c]]),
            SurfaceClass::Edge(c) => Candidates::Segments(self.features.curves[c].windows(2).map(|w| (v[w[0]], v[w[1]])).collect()),
            SurfaceClass::Face => Candidates::Triangles(self.triangles_near(x)),
        }
    }

    /// Closest point among cached candidates, with the index of the winning
    /// triangle for face points.
    pub fn project(&self, x: Vec3, cands: &Candidates) -> (Vec3, Option<usize>) {
        match cands {
            Candidates::Point(p) => (*p, None),
            Candidates::Segments(segs) => {
                let mut best = (f64::INFINITY, x);
                for &(a, b) in segs {
                    let q = closest_on_segment(x, a, b);
                    let d = x.dist(q);
                    if d < best.0 {
                        best = (d, q);
                    }
                }
                (best.1, None)
            }
            Candidates::Triangles(tris) => {
                let mut best = (f64::INFINITY, x, None);
                for &f in tris {
                    let [a, b, c] = self.tri.corners(f);
                    let q = closest_on_triangle(x, a, b, c);
                    let d = x.dist(q);
                    if d < best.0 {
                        best = (d, q, Some(f));
                    }
                }
                (best.1, best.2)
            }
        }
    }

    /// Closest surface point of `x` for its class, searched afresh.
    pub fn closest_point(&self, x: Vec3, class: SurfaceClass) -> Vec3 {
        self.project(x, &self.candidates(x, class)).0
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge
    }
}

/// Closest point of `x` on `tri` for the given class.
pub fn closest_surface_point(x: Vec3, tri: &TriMesh, features: &FeatureCurves, class: SurfaceClass) -> Vec3 {
    SurfaceProjector::new(tri, features).closest_point(x, class)
}
