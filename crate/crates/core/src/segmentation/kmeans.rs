use crate::mesh::Vec3;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 0.03;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterState {
    pub centroids: Vec<Vec3>,
    pub assignment: Vec<usize>,
    pub loss: f64,
    /// Loss after every iteration.
    pub trace: Vec<f64>,
}

impl ClusterState {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.centroids.len()];
        for &a in &self.assignment {
            c[a] += 1;
        }
        c
    }
}

/// Nearest centroid, ties to the lowest index.
pub fn nearest(p: Vec3, centroids: &[Vec3]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = (p - *c).norm_sq();
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

pub fn clustering_loss(points: &[Vec3], centroids: &[Vec3], assignment: &[usize]) -> f64 {
    points.iter().zip(assignment).map(|(p, &a)| (*p - centroids[a]).norm_sq()).sum()
}

/// Lloyd iterations. Each iteration assigns points to their nearest centroid,
/// gives every empty cluster the point farthest from its own centroid (taken
/// only from clusters with more than one member), then moves centroids to
/// their cluster means. Stops when the relative loss decrease falls below
/// `tol`, the loss reaches zero, or after `max_iters` iterations.
pub fn kmeans(points: &[Vec3], seeds: &[Vec3], tol: f64, max_iters: usize) -> Result<ClusterState> {
    if points.is_empty() || seeds.is_empty() {
        return Err(Error::Config("k-means needs at least one point and one seed".into()));
    }
    if seeds.len() > points.len() {
        return Err(Error::Config(format!("{} seeds for {} points", seeds.len(), points.len())));
    }
    let k = seeds.len();
    let mut centroids = seeds.to_vec();
    let mut assignment = vec![0usize; points.len()];
    let mut trace = Vec::new();
    let mut prev: Option<f64> = None;
    for _ in 0..max_iters.max(1) {
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest(*p, &centroids);
        }
        let mut counts = vec![0usize; k];
        for &a in &assignment {
            counts[a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                continue;
            }
            let mut far = None;
            let mut far_d = -1.0;
            for (i, p) in points.iter().enumerate() {
                let a = assignment[i];
                if counts[a] < 2 {
                    continue;
                }
                let d = (*p - centroids[a]).norm_sq();
                if d > far_d {
                    far_d = d;
                    far = Some(i);
                }
            }
            let i = far.expect("more points than clusters leaves a cluster with two members");
            counts[assignment[i]] -= 1;
            assignment[i] = j;
            counts[j] = 1;
            centroids[j] = points[i];
        }
        let mut sums = vec![Vec3::ZERO; k];
        for (p, &a) in points.iter().zip(&assignment) {
            sums[a] += *p;
        }
        for j in 0..k {
            centroids[j] = sums[j] / counts[j] as f64;
        }
        let loss = clustering_loss(points, &centroids, &assignment);
        trace.push(loss);
        let done = loss == 0.0 || prev.is_some_and(|p| p - loss <= tol * p);
        prev = Some(loss);
        if done {
            break;
        }
    }
    let loss = *trace.last().expect("at least one iteration");
    Ok(ClusterState {
        centroids,
        assignment,
        loss,
        trace,
    })
}
