//! Harmonic parameterization of one surface patch onto a planar domain.

use std::collections::{BTreeMap, HashMap};

use crate::mesh::{edge_key, TriMesh, Vec3};
use crate::registry::Registry;
use crate::{Error, Result};

/// Cotangent weights below this value are raised to it.
pub const MIN_COT_WEIGHT: f64 = 1e-6;
/// Bound on the per-vertex Laplace residual accepted from the solver.
pub const MAX_RESIDUAL: f64 = 1e-10;
/// Parameter points this close to the domain snap onto it.
pub const UV_SNAP_TOL: f64 = 1e-9;

/// Symmetric edge weights of a discrete Laplacian on a triangle patch.
pub trait LaplacianWeights: Send + Sync {
    fn name(&self) -> &'static str;
    /// Weight per undirected local edge `(a, b)`, `a < b`.
    fn edge_weights(&self, positions: &[Vec3], triangles: &[[usize; 3]]) -> HashMap<(usize, usize), f64>;
}

/// `(cot α + cot β) / 2` over the two opposite angles, clamped from below.
pub struct CotangentWeights;

impl LaplacianWeights for CotangentWeights {
    fn name(&self) -> &'static str {
        "cotangent"
    }

    fn edge_weights(&self, positions: &[Vec3], triangles: &[[usize; 3]]) -> HashMap<(usize, usize), f64> {
        let mut w: HashMap<(usize, usize), f64> = HashMap::new();
        for t in triangles {
            for c in 0..3 {
                let (o, a, b) = (t[c], t[(c + 1) % 3], t[(c + 2) % 3]);
                let (u, v) = (positions[a] - positions[o], positions[b] - positions[o]);
                let cross = u.cross(v).norm();
                let cot = if cross > 0.0 { u.dot(v) / cross } else { 0.0 };
                *w.entry(edge_key(a, b)).or_insert(0.0) += 0.5 * cot;
            }
        }
        for v in w.values_mut() {
            *v = v.max(MIN_COT_WEIGHT);
        }
        w
    }
}

/// Graph Laplacian: every edge weighs one.
pub struct UniformWeights;

impl LaplacianWeights for UniformWeights {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn edge_weights(&self, _positions: &[Vec3], triangles: &[[usize; 3]]) -> HashMap<(usize, usize), f64> {
        triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (edge_key(a, b), 1.0))
            .collect()
    }
}

pub fn laplacian_weights() -> Registry<dyn LaplacianWeights, ()> {
    let mut r: Registry<dyn LaplacianWeights, ()> = Registry::new("laplacian weights");
    r.register("cotangent", |_| Box::new(CotangentWeights));
    r.register("uniform", |_| Box::new(UniformWeights));
    r
}

/// The triangles of one patch with local vertex numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    /// Global vertex id of every local vertex, ascending.
    pub vertices: Vec<usize>,
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl Patch {
    pub fn new(mesh: &TriMesh, faces: &[usize]) -> Self {
        let mut vertices: Vec<usize> = faces.iter().flat_map(|&f| mesh.faces()[f]).collect();
        vertices.sort_unstable();
        vertices.dedup();
        let local: HashMap<usize, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let triangles = faces.iter().map(|&f| mesh.faces()[f].map(|v| local[&v])).collect();
        let positions = vertices.iter().map(|&v| mesh.vertices()[v]).collect();
        Patch {
            vertices,
            positions,
            triangles,
        }
    }

    pub fn local_index(&self, global: usize) -> Option<usize> {
        self.vertices.binary_search(&global).ok()
    }

    fn edge_use(&self) -> BTreeMap<(usize, usize), usize> {
        let mut uses = BTreeMap::new();
        for t in &self.triangles {
            for c in 0..3 {
                *uses.entry(edge_key(t[c], t[(c + 1) % 3])).or_insert(0) += 1;
            }
        }
        uses
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_use().len() as i64 + self.triangles.len() as i64
    }

    /// Closed boundary loops (global ids) oriented with the patch on the left,
    /// each starting at its smallest vertex id.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let uses = self.edge_use();
        let mut next: BTreeMap<usize, usize> = BTreeMap::new();
        for t in &self.triangles {
            for c in 0..3 {
                let (a, b) = (t[c], t[(c + 1) % 3]);
                if uses[&edge_key(a, b)] == 1 {
                    next.insert(a, b);
                }
            }
        }
        let mut loops = Vec::new();
        while let Some((&start, _)) = next.iter().next() {
            let mut ring = vec![start];
            let mut cur = next.remove(&start).expect("present");
            while cur != start {
                ring.push(cur);
                match next.remove(&cur) {
                    Some(n) => cur = n,
                    None => break,
                }
            }
            loops.push(ring.iter().map(|&l| self.vertices[l]).collect());
        }
        loops
    }
}

/// A run of boundary vertices mapped linearly by arc length from `from` to `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundarySegment {
    pub vertices: Vec<usize>,
    pub from: [f64; 2],
    pub to: [f64; 2],
}

/// Positions along `vertices` mapped by chord-length fraction onto `from..to`.
pub fn arc_length_uv(mesh: &TriMesh, seg: &BoundarySegment) -> Vec<(usize, [f64; 2])> {
    let fractions = arc_fractions(mesh, &seg.vertices);
    seg.vertices
        .iter()
        .zip(fractions)
        .map(|(&v, t)| (v, [seg.from[0] + t * (seg.to[0] - seg.from[0]), seg.from[1] + t * (seg.to[1] - seg.from[1])]))
        .collect()
}

/// Cumulative chord length of a vertex chain, normalized to end at one.
pub fn arc_fractions(mesh: &TriMesh, vertices: &[usize]) -> Vec<f64> {
    let p = mesh.vertices();
    let mut acc = vec![0.0; vertices.len()];
    for i in 1..vertices.len() {
        acc[i] = acc[i - 1] + p[vertices[i - 1]].dist(p[vertices[i]]);
    }
    let total = acc.last().copied().unwrap_or(0.0);
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    if let Some(last) = acc.last_mut() {
        *last = 1.0;
    }
    acc
}

/// Maps the boundary of a disk patch onto the unit square: the four corners,
/// in the order met along the boundary starting from `corners[0]`, go to
/// (0,0), (1,0), (1,1), (0,1), and each segment between them is spread over
/// its square edge by arc length.
pub fn map_patch_boundary(mesh: &TriMesh, faces: &[usize], corners: &[usize]) -> Result<BTreeMap<usize, [f64; 2]>> {
    let patch = Patch::new(mesh, faces);
    let loops = patch.boundary_loops();
    if patch.euler_characteristic() != 1 || loops.len() != 1 {
        return Err(Error::NotDisk {
            patch: 0,
            msg: format!("euler characteristic {}, {} boundary loops", patch.euler_characteristic(), loops.len()),
        });
    }
    let ring = &loops[0];
    let on_ring: Vec<usize> = ring.iter().enumerate().filter(|(_, v)| corners.contains(v)).map(|(i, _)| i).collect();
    if corners.len() != 4 || on_ring.len() != 4 {
        return Err(Error::BoundarySegments { found: on_ring.len().min(corners.len()) });
    }
    let start = ring.iter().position(|&v| v == corners[0]).expect("corner on ring");
    let rotated: Vec<usize> = ring[start..].iter().chain(&ring[..start]).copied().collect();
    let cut: Vec<usize> = rotated
        .iter()
        .enumerate()
        .filter(|(_, v)| corners.contains(v))
        .map(|(i, _)| i)
        .collect();
    let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut out = BTreeMap::new();
    for s in 0..4 {
        let a = cut[s];
        let b = if s == 3 { rotated.len() } else { cut[s + 1] };
        let mut vertices: Vec<usize> = rotated[a..b].to_vec();
        vertices.push(rotated[b % rotated.len()]);
        let seg = BoundarySegment {
            vertices,
            from: square[s],
            to: square[(s + 1) % 4],
        };
        out.extend(arc_length_uv(mesh, &seg));
    }
    Ok(out)
}

/// Bucket grid over the parameter triangles for point location.
#[derive(Clone, Debug, PartialEq)]
struct UvLocator {
    lo: [f64; 2],
    cell: f64,
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
}

impl UvLocator {
    fn new(uv: &[[f64; 2]], triangles: &[[usize; 3]]) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in uv {
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let extent = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-12);
        let side = ((triangles.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let cell = extent / side as f64;
        let dims = [
            ((hi[0] - lo[0]) / cell).floor() as usize + 1,
            ((hi[1] - lo[1]) / cell).floor() as usize + 1,
        ];
        let mut loc = UvLocator {
            lo,
            cell,
            dims,
            buckets: vec![Vec::new(); dims[0] * dims[1]],
        };
        for (i, t) in triangles.iter().enumerate() {
            let (mut a, mut b) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for &v in t {
                for k in 0..2 {
                    a[k] = a[k].min(uv[v][k]);
                    b[k] = b[k].max(uv[v][k]);
                }
            }
            let (c0, c1) = (loc.cell_of(a), loc.cell_of(b));
            for y in c0[1]..=c1[1] {
                for x in c0[0]..=c1[0] {
                    loc.buckets[y * dims[0] + x].push(i);
                }
            }
        }
        loc
    }

    fn cell_of(&self, p: [f64; 2]) -> [usize; 2] {
        let f = |k: usize| (((p[k] - self.lo[k]) / self.cell).floor().max(0.0) as usize).min(self.dims[k] - 1);
        [f(0), f(1)]
    }

    fn candidates(&self, p: [f64; 2]) -> &[usize] {
        let c = self.cell_of(p);
        &self.buckets[c[1] * self.dims[0] + c[0]]
    }
}

/// Parameter coordinates of every vertex of one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchParam {
    pub patch: usize,
    pub mesh: Patch,
    pub uv: Vec<[f64; 2]>,
    pub fixed: Vec<bool>,
    /// Name of the Laplacian weights that produced the map.
    pub weights: &'static str,
    /// Largest per-vertex Laplace residual.
    pub residual: f64,
    locator: UvLocator,
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn barycentric(p: [f64; 2], a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> [f64; 3] {
    let area = signed_area(a, b, c);
    let l0 = signed_area(p, b, c) / area;
    let l1 = signed_area(a, p, c) / area;
    [l0, l1, 1.0 - l0 - l1]
}

fn closest_on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> ([f64; 2], f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (q, ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
}

/// Preconditioned conjugate gradients on a symmetric positive definite matrix
/// given by rows of `(column, value)` entries.
fn solve_spd(rows: &[Vec<(usize, f64)>], b: &[f64], x: &mut [f64]) -> bool {
    let n = b.len();
    let mul = |v: &[f64], out: &mut [f64]| {
        for (i, r) in rows.iter().enumerate() {
            out[i] = r.iter().map(|&(j, a)| a * v[j]).sum();
        }
    };
    let diag: Vec<f64> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().find(|e| e.0 == i).map_or(1.0, |e| e.1))
        .collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    let mut ax = vec![0.0; n];
    mul(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for _ in 0..(20 * n + 100) {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= 1e-14 * bnorm || rnorm == 0.0 {
            return true;
        }
        mul(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return false;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    false
}

/// Solves for interior parameter coordinates with the boundary held at
/// `boundary_uv` (keyed by global vertex id). Every patch boundary vertex must
/// be fixed; a triangle with non-positive parameter area is a fold-over.
pub fn harmonic_uv(
    mesh: &TriMesh,
    faces: &[usize],
    boundary_uv: &BTreeMap<usize, [f64; 2]>,
    weights: &dyn LaplacianWeights,
    patch_id: usize,
) -> Result<PatchParam> {
    let patch = Patch::new(mesh, faces);
    let n = patch.vertices.len();
    let mut uv = vec![[0.0; 2]; n];
    let mut fixed = vec![false; n];
    for (&g, &p) in boundary_uv {
        if let Some(l) = patch.local_index(g) {
            uv[l] = p;
            fixed[l] = true;
        }
    }
    for ring in patch.boundary_loops() {
        if let Some(&v) = ring.iter().find(|&&v| !boundary_uv.contains_key(&v)) {
            return Err(Error::NotDisk {
                patch: patch_id,
                msg: format!("boundary vertex {v} has no parameter position"),
            });
        }
    }
    let w = weights.edge_weights(&patch.positions, &patch.triangles);
    let mut nbr: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut edges: Vec<(&(usize, usize), &f64)> = w.iter().collect();
    edges.sort_by(|a, b| a.0.cmp(b.0));
    for (&(a, b), &wt) in edges {
        nbr[a].push((b, wt));
        nbr[b].push((a, wt));
    }
    let unknown: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    let slot: HashMap<usize, usize> = unknown.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut rows = Vec::with_capacity(unknown.len());
    let mut rhs = [vec![0.0; unknown.len()], vec![0.0; unknown.len()]];
    for (k, &i) in unknown.iter().enumerate() {
        let mut row = vec![(k, nbr[i].iter().map(|e| e.1).sum::<f64>())];
        for &(j, wt) in &nbr[i] {
            match slot.get(&j) {
                Some(&kj) => row.push((kj, -wt)),
                None => {
                    rhs[0][k] += wt * uv[j][0];
                    rhs[1][k] += wt * uv[j][1];
                }
            }
        }
        rows.push(row);
    }
    for c in 0..2 {
        let mut x: Vec<f64> = unknown.iter().map(|&i| uv[i][c]).collect();
        if !unknown.is_empty() && !solve_spd(&rows, &rhs[c], &mut x) {
            return Err(Error::Singular { patch: patch_id });
        }
        for (k, &i) in unknown.iter().enumerate() {
            uv[i][c] = x[k];
        }
    }
    let mut residual: f64 = 0.0;
    for &i in &unknown {
        let total: f64 = nbr[i].iter().map(|e| e.1).sum();
        for c in 0..2 {
            let avg = nbr[i].iter().map(|&(j, wt)| wt * uv[j][c]).sum::<f64>() / total;
            residual = residual.max((uv[i][c] - avg).abs());
        }
    }
    if !(residual < MAX_RESIDUAL) {
        return Err(Error::Singular { patch: patch_id });
    }
    if patch.triangles.iter().any(|t| !(signed_area(uv[t[0]], uv[t[1]], uv[t[2]]) > 0.0)) {
        return Err(Error::FoldOver { patch: patch_id });
    }
    let locator = UvLocator::new(&uv, &patch.triangles);
    Ok(PatchParam {
        patch: patch_id,
        mesh: patch,
        uv,
        fixed,
        weights: weights.name(),
        residual,
        locator,
    })
}

/// Cotangent parameterization, retried with uniform weights on fold-over.
pub fn parameterize_patch(mesh: &TriMesh, faces: &[usize], boundary_uv: &BTreeMap<usize, [f64; 2]>, patch_id: usize) -> Result<PatchParam> {
    let reg = laplacian_weights();
    match harmonic_uv(mesh, faces, boundary_uv, reg.create("cotangent", &())?.as_ref(), patch_id) {
        Err(Error::FoldOver { .. }) => {
            log::warn!("patch {patch_id}: cotangent map folds over, using uniform weights");
            harmonic_uv(mesh, faces, boundary_uv, reg.create("uniform", &())?.as_ref(), patch_id)
        }
        r => r,
    }
}

impl PatchParam {
    /// The surface point with parameter coordinates `uv`, by barycentric
    /// interpolation inside the parameter triangle containing it.
    pub fn sample(&self, uv: [f64; 2]) -> Result<Vec3> {
        let tris = &self.mesh.triangles;
        let mut best: Option<(f64, usize, [f64; 3])> = None;
        for &t in self.locator.candidates(uv) {
            let [a, b, c] = tris[t];
            let l = barycentric(uv, self.uv[a], self.uv[b], self.uv[c]);
            let m = l[0].min(l[1]).min(l[2]);
            if best.is_none_or(|(bm, _, _)| m > bm) {
                best = Some((m, t, l));
            }
        }
        let (t, l) = match best {
            Some((m, t, l)) if m >= -1e-12 => (t, l),
            _ => self.snap(uv)?,
        };
        let [a, b, c] = tris[t];
        let p = &self.mesh.positions;
        Ok(p[a] * l[0] + p[b] * l[1] + p[c] * l[2])
    }

    /// Nearest parameter triangle within [`UV_SNAP_TOL`], with clamped weights.
    fn snap(&self, uv: [f64; 2]) -> Result<(usize, [f64; 3])> {
        let mut best: Option<(f64, usize, [f64; 2])> = None;
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            for e in 0..3 {
                let (q, d) = closest_on_segment(uv, self.uv[tri[e]], self.uv[tri[(e + 1) % 3]]);
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, t, q));
                }
            }
        }
        match best {
            Some((d, t, q)) if d <= UV_SNAP_TOL => {
                let [a, b, c] = self.mesh.triangles[t];
                let l = barycentric(q, self.uv[a], self.uv[b], self.uv[c]).map(|v| v.max(0.0));
                let s: f64 = l.iter().sum();
                Ok((t, l.map(|v| v / s)))
            }
            _ => Err(Error::UvOutside {
                patch: self.patch,
                u: uv[0],
                v: uv[1],
            }),
        }
    }

    pub fn uv_of(&self, global: usize) -> Option<[f64; 2]> {
        self.mesh.local_index(global).map(|l| self.uv[l])
    }
}

/// Inverse-map evaluation of a parameterized patch.
pub fn sample_surface_point(param: &PatchParam, uv: [f64; 2]) -> Result<Vec3> {
    param.sample(uv)
}
