//! Worst-element gradient descent on the energy, interleaved with smart
//! smoothing, until the minimum scaled Jacobian clears a threshold.

use std::collections::BTreeSet;

use super::energy::{energy_with_scale, mean_edge_length, vertex_energy_gradient, EnergyState};
use super::jacobian::min_scaled_jacobian;
use super::smooth::{smart_smooth, SmoothingContext};
use super::surface::{Candidates, FeatureCurves, SurfaceClass, SurfaceProjector};
use super::QualityReport;
use crate::mesh::{HexMesh, TriMesh, Vec3};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 1e-4;
pub const DEFAULT_SJ_THRESHOLD: f64 = 0.1;
pub const DEFAULT_MAX_ITERS: usize = 200_000;
/// Iterations between candidate refreshes, l̄ updates and smoothing passes.
pub const REFRESH_INTERVAL: usize = 1000;
/// Boundary vertices snap to their targets once all lie this close, relative
/// to the largest bounding-box edge.
pub const SNAP_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizeConfig {
    pub alpha: f64,
    pub sj_threshold: f64,
    pub max_iters: usize,
    pub refresh_interval: usize,
    pub smoothing: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            alpha: DEFAULT_ALPHA,
            sj_threshold: DEFAULT_SJ_THRESHOLD,
            max_iters: DEFAULT_MAX_ITERS,
            refresh_interval: REFRESH_INTERVAL,
            smoothing: true,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(-1.0..=1.0).contains(&self.sj_threshold) {
            return Err(Error::Config(format!("sj_threshold must lie in [-1, 1], got {}", self.sj_threshold)));
        }
        if self.refresh_interval == 0 {
            return Err(Error::Config("refresh_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeReport {
    pub initial: QualityReport,
    pub quality: QualityReport,
    pub iterations: usize,
    pub smoothing_moves: usize,
    pub energy: EnergyState,
    /// Largest distance of a boundary vertex to its surface target at the end.
    pub max_surface_distance: f64,
    pub snapped: bool,
    pub reached_threshold: bool,
}

struct SurfaceCache {
    candidates: Vec<Option<Candidates>>,
    targets: Vec<Option<Vec3>>,
}

impl SurfaceCache {
    fn refresh(mesh: &HexMesh, classes: &[Option<SurfaceClass>], projector: &SurfaceProjector) -> Self {
        let candidates: Vec<Option<Candidates>> = classes
            .iter()
            .enumerate()
            .map(|(v, c)| c.map(|c| projector.candidates(mesh.vertices[v], c)))
            .collect();
        let targets = candidates
            .iter()
            .enumerate()
            .map(|(v, c)| c.as_ref().map(|c| projector.project(mesh.vertices[v], c).0))
            .collect();
        SurfaceCache { candidates, targets }
    }
}

/// Improves `mesh` in place of a copy. Interior vertices follow −α∇E; boundary
/// vertices follow it and are projected back onto their surface class through
/// the cached candidates; corner vertices stay pinned. The best configuration
/// seen at any refresh or at the end is returned.
pub fn optimize(
    mesh: &HexMesh,
    tri: &TriMesh,
    features: &FeatureCurves,
    classes: &[Option<SurfaceClass>],
    cfg: &OptimizeConfig,
) -> Result<(HexMesh, OptimizeReport)> {
    cfg.validate()?;
    if classes.len() != mesh.num_vertices() {
        return Err(Error::ShapeMismatch(format!("{} classes for {} vertices", classes.len(), mesh.num_vertices())));
    }
    let projector = SurfaceProjector::new(tri, features);
    let ctx = SmoothingContext::new(mesh);
    let mut m = mesh.clone();
    m.tags = super::surface::class_tags(classes);
    let initial = QualityReport::of(&m);
    let mut sj = initial.per_element.clone();
    let mut cache = SurfaceCache::refresh(&m, classes, &projector);
    let mut mean_edge = mean_edge_length(&m);
    let mut best = (initial.min, m.vertices.clone());
    let mut iter = 0;
    let mut smoothing_moves = 0;
    let worst = |sj: &[f64]| {
        let mut w = 0;
        for (e, &s) in sj.iter().enumerate() {
            if s < sj[w] {
                w = e;
            }
        }
        w
    };
    loop {
        let w = worst(&sj);
        if sj[w] >= cfg.sj_threshold || iter >= cfg.max_iters {
            break;
        }
        if iter % cfg.refresh_interval == 0 {
            if iter > 0 {
                cache = SurfaceCache::refresh(&m, classes, &projector);
                mean_edge = mean_edge_length(&m);
            }
            if cfg.smoothing {
                smoothing_moves += smart_smooth(&mut m, &ctx, classes, &projector);
                cache = SurfaceCache::refresh(&m, classes, &projector);
                sj = (0..m.num_elements()).map(|e| min_scaled_jacobian(&m.element_corners(e))).collect();
            }
            let cur = sj.iter().copied().fold(f64::INFINITY, f64::min);
            if cur > best.0 {
                best = (cur, m.vertices.clone());
            }
            if cur >= cfg.sj_threshold {
                break;
            }
        }
        let w = worst(&sj);
        let corners = m.elements[w];
        let grads: Vec<Vec3> = corners
            .iter()
            .map(|&v| vertex_energy_gradient(&m, &ctx.star[v], v, cache.targets[v], mean_edge))
            .collect();
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteEnergy { iteration: iter });
        }
        for (&v, g) in corners.iter().zip(&grads) {
            match classes[v] {
                Some(SurfaceClass::Corner(_)) => {}
                None => m.vertices[v] -= *g * cfg.alpha,
                Some(_) => {
                    let p = m.vertices[v] - *g * cfg.alpha;
                    let c = cache.candidates[v].as_ref().expect("boundary vertices have candidates");
                    let q = projector.project(p, c).0;
                    m.vertices[v] = q;
                    cache.targets[v] = Some(q);
                }
            }
        }
        let touched: BTreeSet<usize> = corners.iter().flat_map(|&v| ctx.star[v].iter().copied()).collect();
        for e in touched {
            sj[e] = min_scaled_jacobian(&m.element_corners(e));
        }
        iter += 1;
    }
    let cur = sj.iter().copied().fold(f64::INFINITY, f64::min);
    if best.0 > cur {
        m.vertices = best.1;
    }
    // final fitting check against fresh projections
    let mut max_d: f64 = 0.0;
    let mut fresh = vec![None; m.num_vertices()];
    for (v, c) in classes.iter().enumerate() {
        if let Some(c) = c {
            let t = projector.closest_point(m.vertices[v], *c);
            max_d = max_d.max(m.vertices[v].dist(t));
            fresh[v] = Some(t);
        }
    }
    let (lo, hi) = tri.bbox();
    let scale = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    let snapped = max_d <= SNAP_TOLERANCE * scale;
    if snapped {
        for (v, t) in fresh.iter().enumerate() {
            if let Some(t) = t {
                m.vertices[v] = *t;
            }
        }
    }
    let quality = QualityReport::of(&m);
    let energy = energy_with_scale(&m, &fresh, mean_edge_length(&m));
    let report = OptimizeReport {
        reached_threshold: quality.min >= cfg.sj_threshold,
        initial,
        quality,
        iterations: iter,
        smoothing_moves,
        energy,
        max_surface_distance: max_d,
        snapped,
    };
    Ok((m, report))
}
