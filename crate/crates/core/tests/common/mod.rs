//! Independent reference implementations and fixtures shared by the
//! integration tests.
#![allow(dead_code)]

use hexcube::mesh::{HexMesh, Vec3};
use hexcube::pathopt::{EdgeGraph, PathWeights};
use ndarray::Array2;
use rand::Rng;

/// `ReLU(D̃^-1/2 (A + I) D̃^-1/2 F W)` with dense matrices and plain loops.
pub fn dense_gcn_layer(adj: &[Vec<bool>], f: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let n = adj.len();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if adj[i][j] || i == j {
                a[i][j] = 1.0;
            }
        }
    }
    let deg: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let (d, h) = (f.ncols(), w.ncols());
    let mut out = Array2::zeros((n, h));
    for i in 0..n {
        for k in 0..h {
            let mut s = 0.0;
            for j in 0..n {
                if a[i][j] == 0.0 {
                    continue;
                }
                let norm = a[i][j] / (deg[i].sqrt() * deg[j].sqrt());
                let mut fw = 0.0;
                for c in 0..d {
                    fw += f[[j, c]] * w[[c, k]];
                }
                s += norm * fw;
            }
            out[[i, k]] = s.max(0.0);
        }
    }
    out
}

pub fn random_adjacency(rng: &mut impl Rng, n: usize, p: f64) -> Vec<Vec<bool>> {
    let mut a = vec![vec![false; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                a[i][j] = true;
                a[j][i] = true;
            }
        }
    }
    a
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub struct Lloyd {
    pub assignment: Vec<usize>,
    pub centroids: Vec<Vec3>,
    pub trace: Vec<f64>,
}

fn sq(a: Vec3, b: Vec3) -> f64 {
    let d = a - b;
    d.x * d.x + d.y * d.y + d.z * d.z
}

/// Textbook Lloyd iterations: full distance table per point, the first
/// minimum wins; an empty cluster takes the point farthest from its centroid
/// among clusters of two or more (first such point on ties).
pub fn brute_lloyd(points: &[Vec3], seeds: &[Vec3], tol: f64, max_iters: usize) -> Lloyd {
    let k = seeds.len();
    let mut c = seeds.to_vec();
    let mut assign = vec![0; points.len()];
    let mut trace: Vec<f64> = Vec::new();
    for _ in 0..max_iters.max(1) {
        for (i, p) in points.iter().enumerate() {
            let d: Vec<f64> = c.iter().map(|&cj| sq(*p, cj)).collect();
            let mut best = 0;
            for j in 1..k {
                if d[j] < d[best] {
                    best = j;
                }
            }
            assign[i] = best;
        }
        for j in 0..k {
            let count = |a: &[usize], j: usize| a.iter().filter(|&&x| x == j).count();
            if count(&assign, j) > 0 {
                continue;
            }
            let mut far: Option<(usize, f64)> = None;
            for (i, p) in points.iter().enumerate() {
                if count(&assign, assign[i]) < 2 {
                    continue;
                }
                let d = sq(*p, c[assign[i]]);
                if far.is_none_or(|(_, fd)| d > fd) {
                    far = Some((i, d));
                }
            }
            let (i, _) = far.expect("a cluster with two members exists");
            assign[i] = j;
            c[j] = points[i];
        }
        for j in 0..k {
            let mut s = Vec3::ZERO;
            let mut m = 0;
            for (p, &a) in points.iter().zip(&assign) {
                if a == j {
                    s += *p;
                    m += 1;
                }
            }
            c[j] = s / m as f64;
        }
        let loss: f64 = points.iter().zip(&assign).map(|(p, &a)| sq(*p, c[a])).sum();
        let done = loss == 0.0 || trace.last().is_some_and(|&p| p - loss <= tol * p);
        trace.push(loss);
        if done {
            break;
        }
    }
    Lloyd {
        assignment: assign,
        centroids: c,
        trace,
    }
}

fn angle(a: Vec3, b: Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Weight of one step `a → b` toward `dst` after moving along `prev`.
pub fn reference_step(pos: &[Vec3], sharp: bool, a: usize, b: usize, prev: Option<Vec3>, dst: usize, w: &PathWeights) -> f64 {
    let d = pos[b] - pos[a];
    let l0 = if sharp { w.lambda0_sharp } else { w.lambda0 };
    let turn = prev.map_or(0.0, |p| angle(d, p));
    d.norm() / l0 + w.lambda1 * turn + w.lambda2 * angle(d, pos[dst] - pos[a])
}

/// Cheapest simple path by exhaustive depth-first enumeration, and every step
/// weight met on the way.
pub fn exhaustive_path(g: &EdgeGraph, src: usize, dst: usize, w: &PathWeights) -> (Option<(f64, Vec<usize>)>, Vec<f64>) {
    struct Search<'a> {
        g: &'a EdgeGraph,
        dst: usize,
        w: &'a PathWeights,
        stack: Vec<usize>,
        on: Vec<bool>,
        best: Option<(f64, Vec<usize>)>,
        steps: Vec<f64>,
    }
    impl Search<'_> {
        fn run(&mut self, cost: f64, prev: Option<Vec3>) {
            let v = *self.stack.last().unwrap();
            if v == self.dst {
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.stack.clone()));
                }
                return;
            }
            for &(u, e) in &self.g.adjacency[v] {
                if self.on[u] {
                    continue;
                }
                let pos = &self.g.positions;
                let step = reference_step(pos, self.g.edges[e].sharp, v, u, prev, self.dst, self.w);
                self.steps.push(step);
                self.stack.push(u);
                self.on[u] = true;
                self.run(cost + step, Some(pos[u] - pos[v]));
                self.on[u] = false;
                self.stack.pop();
            }
        }
    }
    let mut s = Search {
        g,
        dst,
        w,
        stack: vec![src],
        on: vec![false; g.positions.len()],
        best: None,
        steps: Vec::new(),
    };
    s.on[src] = true;
    s.run(0.0, None);
    (s.best, s.steps)
}

/// Uniform `n³` box on the unit cube with every vertex moved by up to
/// `amount × h` per coordinate.
pub fn jittered_box(n: usize, amount: f64, rng: &mut impl Rng) -> HexMesh {
    let mut m = HexMesh::uniform_box(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0), n);
    let h = 1.0 / n as f64;
    for v in m.vertices.iter_mut() {
        *v += Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (amount * h);
    }
    m
}
