use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::mesh::{angle_between, edge_key, TriMesh, Vec3};
use crate::{Error, Result};

/// Coefficients of the path edge weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathWeights {
    /// Length divisor on sharp-feature edges.
    pub lambda0_sharp: f64,
    /// Length divisor elsewhere.
    pub lambda0: f64,
    /// Turning penalty per radian.
    pub lambda1: f64,
    /// Goal-deviation penalty per radian.
    pub lambda2: f64,
}

impl Default for PathWeights {
    fn default() -> Self {
        PathWeights {
            lambda0_sharp: 4.0,
            lambda0: 1.0,
            lambda1: 0.5,
            lambda2: 0.5,
        }
    }
}

impl PathWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.0 && self.lambda0_sharp > 0.0) {
            return Err(Error::Config("lambda0 must be positive".into()));
        }
        if !(self.lambda1 >= 0.0 && self.lambda2 >= 0.0) {
            return Err(Error::Config("lambda1 and lambda2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// `len / λ0 + λ1 θ + λ2 φ` with θ the turn from `prev_dir` (zero when absent)
/// and φ the deviation from `goal_dir`, both in radians.
pub fn edge_weight(len: f64, dir: Vec3, prev_dir: Option<Vec3>, goal_dir: Vec3, lambda0: f64, lambda1: f64, lambda2: f64) -> f64 {
    let theta = prev_dir.map_or(0.0, |p| angle_between(dir, p));
    let phi = if goal_dir.norm_sq() > 0.0 { angle_between(dir, goal_dir) } else { 0.0 };
    len / lambda0 + lambda1 * theta + lambda2 * phi
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub sharp: bool,
}

/// Vertex-edge graph of a mesh 1-skeleton with an exclusion mask.
#[derive(Clone, Debug)]
pub struct EdgeGraph {
    pub positions: Vec<Vec3>,
    pub edges: Vec<GraphEdge>,
    /// `(neighbor, edge id)` per vertex, ascending by neighbor.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    pub used_edges: HashSet<usize>,
    pub blocked_vertices: HashSet<usize>,
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost.total_cmp(&self.cost).then_with(|| o.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl EdgeGraph {
    pub fn new(positions: Vec<Vec3>, edge_list: &[(usize, usize)], sharp: &HashSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); positions.len()];
        let mut edges = Vec::with_capacity(edge_list.len());
        for (id, &(a, b)) in edge_list.iter().enumerate() {
            edges.push(GraphEdge {
                a,
                b,
                length: positions[a].dist(positions[b]),
                sharp: sharp.contains(&edge_key(a, b)),
            });
            adjacency[a].push((b, id));
            adjacency[b].push((a, id));
        }
        for nb in &mut adjacency {
            nb.sort_unstable();
        }
        EdgeGraph {
            positions,
            edges,
            adjacency,
            used_edges: HashSet::new(),
            blocked_vertices: HashSet::new(),
        }
    }

    pub fn from_mesh(mesh: &TriMesh) -> Self {
        let topo = mesh.topology();
        let sharp: HashSet<(usize, usize)> = mesh.sharp_edges().iter().copied().collect();
        Self::new(mesh.vertices().to_vec(), &topo.edges, &sharp)
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a].iter().find(|&&(n, _)| n == b).map(|&(_, e)| e)
    }

    fn lambda0(&self, e: usize, w: &PathWeights) -> f64 {
        if self.edges[e].sharp {
            w.lambda0_sharp
        } else {
            w.lambda0
        }
    }

    /// Weight of stepping `from → to` along edge `e` given the previous direction.
    pub fn step_weight(&self, from: usize, to: usize, e: usize, prev_dir: Option<Vec3>, dst: usize, w: &PathWeights) -> f64 {
        let d = self.positions[to] - self.positions[from];
        let goal = self.positions[dst] - self.positions[from];
        edge_weight(self.edges[e].length, d.normalized(), prev_dir, goal, self.lambda0(e, w), w.lambda1, w.lambda2)
    }

    /// Total weight of a vertex path.
    pub fn path_cost(&self, path: &[usize], w: &PathWeights) -> Option<f64> {
        let dst = *path.last()?;
        let mut cost = 0.0;
        let mut prev = None;
        for s in path.windows(2) {
            let e = self.edge_between(s[0], s[1])?;
            cost += self.step_weight(s[0], s[1], e, prev, dst, w);
            prev = Some((self.positions[s[1]] - self.positions[s[0]]).normalized());
        }
        Some(cost)
    }

    /// Dijkstra over directed-edge states, so the turning term is exact. Used
    /// edges and blocked vertices are skipped; `allowed`, when given, further
    /// restricts the vertices a path may visit.
    pub fn shortest_path(&self, src: usize, dst: usize, w: &PathWeights, allowed: Option<&[bool]>) -> Result<Vec<usize>> {
        let n = self.positions.len();
        if src >= n || dst >= n || src == dst {
            return Err(Error::NoPath { src, dst });
        }
        let ok = |v: usize| {
            v == dst || (!self.blocked_vertices.contains(&v) && allowed.is_none_or(|a| a[v]))
        };
        // state 2e (+1) = edge e traversed a→b (b→a)
        let ns = 2 * self.edges.len();
        let mut dist = vec![f64::INFINITY; ns];
        let mut back = vec![usize::MAX; ns];
        let mut heap = BinaryHeap::new();
        let head = |s: usize| {
            let e = &self.edges[s / 2];
            if s.is_multiple_of(2) {
                (e.a, e.b)
            } else {
                (e.b, e.a)
            }
        };
        for &(v, e) in &self.adjacency[src] {
            if self.used_edges.contains(&e) || !ok(v) {
                continue;
            }
            let s = 2 * e + usize::from(self.edges[e].a != src);
            let c = self.step_weight(src, v, e, None, dst, w);
            if c < dist[s] {
                dist[s] = c;
                heap.push(State { cost: c, node: s });
            }
        }
        while let Some(State { cost, node }) = heap.pop() {
            if cost > dist[node] {
                continue;
            }
            let (u, v) = head(node);
            if v == dst {
                let mut path = vec![dst];
                let mut s = node;
                while s != usize::MAX {
                    path.push(head(s).0);
                    s = back[s];
                }
                path.reverse();
                return Ok(path);
            }
            let dir = (self.positions[v] - self.positions[u]).normalized();
            for &(x, e) in &self.adjacency[v] {
                if x == u || x == src || self.used_edges.contains(&e) || !ok(x) {
                    continue;
                }
                let s = 2 * e + usize::from(self.edges[e].a != v);
                let c = cost + self.step_weight(v, x, e, Some(dir), dst, w);
                if c < dist[s] {
                    dist[s] = c;
                    back[s] = node;
                    heap.push(State { cost: c, node: s });
                }
            }
        }
        Err(Error::NoPath { src, dst })
    }

    pub fn mark_used(&mut self, path: &[usize]) {
        for s in path.windows(2) {
            if let Some(e) = self.edge_between(s[0], s[1]) {
                self.used_edges.insert(e);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn weight_examples() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(edge_weight(0.3, x, Some(x), x, 1.0, 0.5, 0.5), 0.3);
        assert_eq!(edge_weight(0.3, x, Some(x), x, 4.0, 0.5, 0.5), 0.075);
        let w = edge_weight(1.0, x, Some(-x), x, 1.0, 0.5, 0.0);
        assert!((w - (1.0 + 0.5 * PI)).abs() < 1e-12);
    }

    #[test]
    fn line_graph_path() {
        let pos = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let mut g = EdgeGraph::new(pos, &[(0, 1), (1, 2)], &HashSet::new());
        let p = g.shortest_path(0, 2, &PathWeights::default(), None).unwrap();
        assert_eq!(p, vec![0, 1, 2]);
        g.mark_used(&p);
        assert!(matches!(g.shortest_path(0, 2, &PathWeights::default(), None), Err(Error::NoPath { .. })));
    }
}
