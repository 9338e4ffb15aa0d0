//! Smart Laplacian smoothing: class-specific relocation targets, small steps,
//! and a move only when the local scaled Jacobian improves.

use std::collections::BTreeSet;

use super::jacobian::{scaled_jacobian, CENTER};
use super::surface::{SurfaceClass, SurfaceProjector};
use crate::mesh::{HexMesh, Vec3, HEX_EDGES};

/// Fraction of the way to the relocation target covered by one step.
pub const SMOOTHING_STEP: f64 = 0.25;
/// Steps tried per vertex and pass.
pub const SMOOTHING_TRIES: usize = 4;

/// Adjacency reused across smoothing passes.
pub struct SmoothingContext {
    pub star: Vec<Vec<usize>>,
    pub neighbors: Vec<Vec<usize>>,
    pub quads: Vec<Vec<[usize; 4]>>,
}

impl SmoothingContext {
    pub fn new(mesh: &HexMesh) -> Self {
        let mut nb: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); mesh.num_vertices()];
        for e in &mesh.elements {
            for [a, b] in HEX_EDGES {
                nb[e[a]].insert(e[b]);
                nb[e[b]].insert(e[a]);
            }
        }
        let mut quads = vec![Vec::new(); mesh.num_vertices()];
        for q in mesh.boundary_quads() {
            for &v in &q.vertices {
                quads[v].push(q.vertices);
            }
        }
        SmoothingContext {
            star: mesh.vertex_elements(),
            neighbors: nb.into_iter().map(|s| s.into_iter().collect()).collect(),
            quads,
        }
    }
}

/// Minimum scaled Jacobian over the elements around a vertex.
pub fn local_min_sj(mesh: &HexMesh, star: &[usize]) -> f64 {
    star.iter()
        .map(|&e| scaled_jacobian(&mesh.element_corners(e)).min_scaled())
        .fold(f64::INFINITY, f64::min)
}

fn relocation_target(mesh: &HexMesh, ctx: &SmoothingContext, classes: &[Option<SurfaceClass>], v: usize) -> Option<Vec3> {
    match classes[v] {
        Some(SurfaceClass::Corner(_)) => None,
        Some(SurfaceClass::Edge(c)) => {
            let on_curve: Vec<usize> = ctx.neighbors[v]
                .iter()
                .copied()
                .filter(|&n| matches!(classes[n], Some(SurfaceClass::Edge(d)) if d == c) || matches!(classes[n], Some(SurfaceClass::Corner(_))))
                .collect();
            (on_curve.len() == 2).then(|| (mesh.vertices[on_curve[0]] + mesh.vertices[on_curve[1]]) / 2.0)
        }
        Some(SurfaceClass::Face) => {
            let mut sum = Vec3::ZERO;
            let mut area = 0.0;
            for q in &ctx.quads[v] {
                let p = q.map(|i| mesh.vertices[i]);
                let a = ((p[2] - p[0]).cross(p[3] - p[1])).norm() / 2.0;
                sum += (p[0] + p[1] + p[2] + p[3]) / 4.0 * a;
                area += a;
            }
            (area > 0.0).then(|| sum / area)
        }
        None => {
            let mut sum = Vec3::ZERO;
            let mut vol = 0.0;
            for &e in &ctx.star[v] {
                let x = mesh.element_corners(e);
                let w = scaled_jacobian(&x).jacobian[CENTER].abs();
                sum += x.iter().copied().sum::<Vec3>() / 8.0 * w;
                vol += w;
            }
            (vol > 0.0).then(|| sum / vol)
        }
    }
}

/// One smoothing pass over all vertices: feature curves, then surface, then
/// the interior. Boundary moves are projected back onto the surface. Returns
/// the number of accepted steps.
pub fn smart_smooth(mesh: &mut HexMesh, ctx: &SmoothingContext, classes: &[Option<SurfaceClass>], projector: &SurfaceProjector) -> usize {
    let rank = |c: Option<SurfaceClass>| match c {
        Some(SurfaceClass::Edge(_)) => 0,
        Some(SurfaceClass::Face) => 1,
        None => 2,
        Some(SurfaceClass::Corner(_)) => 3,
    };
    let mut order: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| rank(classes[v]) < 3).collect();
    order.sort_by_key(|&v| (rank(classes[v]), v));
    let mut accepted = 0;
    for v in order {
        let Some(target) = relocation_target(mesh, ctx, classes, v) else {
            continue;
        };
        let mut current = local_min_sj(mesh, &ctx.star[v]);
        for _ in 0..SMOOTHING_TRIES {
            let old = mesh.vertices[v];
            let mut p = old.lerp(target, SMOOTHING_STEP);
            if let Some(c) = classes[v] {
                p = projector.closest_point(p, c);
            }
            mesh.vertices[v] = p;
            let q = local_min_sj(mesh, &ctx.star[v]);
            if q > current {
                current = q;
                accepted += 1;
            } else {
                mesh.vertices[v] = old;
                break;
            }
        }
    }
    accepted
}
