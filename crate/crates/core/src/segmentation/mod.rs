//! Triangle-to-face segmentation: K-means over face normals seeded by the
//! template's axis labels, refined in centroid space wherever several
//! template faces share a label.

mod kmeans;
mod sources;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::path::Path;

pub use kmeans::{clustering_loss, kmeans, nearest, ClusterState, DEFAULT_MAX_ITERS, DEFAULT_TOL};
pub use sources::{centroid_sources, CentroidSource, GcnSource, SourceArgs, TemplateSource, TruthSource};

use crate::mesh::io::{read_to_string, write_string};
use crate::mesh::{edge_key, TriMesh, Vec3};
use crate::polycube::{AxisLabel, PolycubeStructure};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segmentation {
    pub k: usize,
    /// Patch id per triangle.
    pub labels: Vec<usize>,
    /// Polycube boundary face of every patch.
    pub patch_to_face: Vec<usize>,
}

impl Segmentation {
    /// Patches taken directly as template faces.
    pub fn from_face_labels(labels: Vec<usize>, k: usize) -> Self {
        Segmentation {
            k,
            labels,
            patch_to_face: (0..k).collect(),
        }
    }

    /// Template face of every triangle.
    pub fn face_labels(&self) -> Vec<usize> {
        self.labels.iter().map(|&p| self.patch_to_face[p]).collect()
    }

    pub fn patch_sizes(&self) -> Vec<usize> {
        let mut c = vec![0; self.k];
        for &l in &self.labels {
            c[l] += 1;
        }
        c
    }

    pub fn validate(&self, num_faces: usize, num_patches: usize) -> Result<()> {
        if self.labels.len() != num_faces {
            return Err(Error::SegmentationMismatch(format!(
                "{} labels for {num_faces} triangles",
                self.labels.len()
            )));
        }
        if self.k != num_patches || self.patch_to_face.len() != self.k {
            return Err(Error::SegmentationMismatch(format!(
                "{} patches for {num_patches} polycube faces",
                self.k
            )));
        }
        let image: BTreeSet<usize> = self.patch_to_face.iter().copied().collect();
        if image.len() != self.k || image.iter().any(|&f| f >= num_patches) {
            return Err(Error::SegmentationMismatch("patch to face map is not a bijection".into()));
        }
        if let Some(p) = self.patch_sizes().iter().position(|&c| c == 0) {
            return Err(Error::SegmentationMismatch(format!("patch {p} is empty")));
        }
        if self.labels.iter().any(|&l| l >= self.k) {
            return Err(Error::SegmentationMismatch("label out of range".into()));
        }
        Ok(())
    }
}

pub fn format_segmentation(seg: &Segmentation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "k {}", seg.k);
    let map: Vec<String> = seg.patch_to_face.iter().map(|f| f.to_string()).collect();
    let _ = writeln!(s, "patch_to_face {}", map.join(" "));
    for l in &seg.labels {
        let _ = writeln!(s, "{l}");
    }
    s
}

pub fn parse_segmentation(text: &str) -> Result<Segmentation> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| Error::parse(1, "missing 'k' header"))?;
    let k: usize = head
        .strip_prefix("k ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::parse(1, "expected 'k <count>'"))?;
    let (_, map) = lines.next().ok_or_else(|| Error::parse(2, "missing patch_to_face"))?;
    let patch_to_face: Vec<usize> = map
        .strip_prefix("patch_to_face")
        .ok_or_else(|| Error::parse(2, "expected 'patch_to_face ...'"))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(2, format!("bad face id '{t}'"))))
        .collect::<Result<_>>()?;
    if patch_to_face.len() != k {
        return Err(Error::parse(2, format!("patch_to_face has {} entries, k is {k}", patch_to_face.len())));
    }
    let mut labels = Vec::new();
    for (i, line) in lines {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let l: usize = t.parse().map_err(|_| Error::parse(i + 1, format!("bad patch id '{t}'")))?;
        if l >= k {
            return Err(Error::parse(i + 1, format!("patch id {l} out of range")));
        }
        labels.push(l);
    }
    Ok(Segmentation {
        k,
        labels,
        patch_to_face,
    })
}

pub fn save_segmentation(seg: &Segmentation, path: &Path) -> Result<()> {
    write_string(path, &format_segmentation(seg))
}

pub fn load_segmentation(path: &Path) -> Result<Segmentation> {
    parse_segmentation(&read_to_string(path)?)
}

/// One seed per boundary face: its axis-label unit vector.
pub fn seed_normals(pc: &PolycubeStructure) -> Vec<Vec3> {
    pc.boundary_faces.iter().map(|f| f.label.normal()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentConfig {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// Everything the segmentation computed, including the intermediate
/// normal-space clustering.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentReport {
    pub segmentation: Segmentation,
    /// Axis label of every normal-space cluster.
    pub normal_labels: Vec<AxisLabel>,
    /// Normal-space cluster of every triangle.
    pub normal_assignment: Vec<usize>,
    pub normal_state: ClusterState,
    /// Centroid-space states of the refined label groups.
    pub refinements: Vec<(AxisLabel, ClusterState)>,
}

impl SegmentReport {
    /// Number of distinct clusters before centroid refinement.
    pub fn normal_cluster_count(&self) -> usize {
        self.normal_labels.len()
    }
}

/// Segments `mesh` into one patch per boundary face of `pc`. `locations`
/// gives an expected position for every template face, used to split
/// same-label faces in centroid space.
pub fn segment(mesh: &TriMesh, pc: &PolycubeStructure, locations: &[Vec3], cfg: &SegmentConfig) -> Result<SegmentReport> {
    let n = pc.num_boundary_faces();
    if locations.len() != n {
        return Err(Error::SegmentationMismatch(format!("{} face locations for {n} faces", locations.len())));
    }
    let normals: Vec<Vec3> = (0..mesh.num_faces()).map(|f| mesh.face_normal(f)).collect();
    // normal-space clustering with one seed per distinct label; faces sharing
    // a label would otherwise start from identical seeds
    let labels: Vec<AxisLabel> = pc.boundary_faces.iter().map(|f| f.label).collect::<BTreeSet<_>>().into_iter().collect();
    let seeds: Vec<Vec3> = labels.iter().map(|l| l.normal()).collect();
    let normal_state = kmeans(&normals, &seeds, cfg.tol, cfg.max_iters)?;

    let mut face_labels = vec![usize::MAX; mesh.num_faces()];
    let mut refinements = Vec::new();
    for (ci, &label) in labels.iter().enumerate() {
        let faces: Vec<usize> = pc.boundary_faces.iter().filter(|f| f.label == label).map(|f| f.id).collect();
        let members: Vec<usize> = (0..mesh.num_faces()).filter(|&t| normal_state.assignment[t] == ci).collect();
        if members.len() < faces.len() {
            return Err(Error::SegmentationMismatch(format!(
                "label {} has {} triangles for {} faces",
                label.name(),
                members.len(),
                faces.len()
            )));
        }
        if faces.len() == 1 {
            for &t in &members {
                face_labels[t] = faces[0];
            }
            continue;
        }
        let pts: Vec<Vec3> = members.iter().map(|&t| mesh.face_centroid(t)).collect();
        let seeds: Vec<Vec3> = faces.iter().map(|&f| locations[f]).collect();
        let state = kmeans(&pts, &seeds, cfg.tol, cfg.max_iters)?;
        for (&t, &a) in members.iter().zip(&state.assignment) {
            face_labels[t] = faces[a];
        }
        refinements.push((label, state));
    }
    let face_labels = clean_fragments(mesh, face_labels, n);
    let segmentation = Segmentation::from_face_labels(face_labels, n);
    segmentation.validate(mesh.num_faces(), n)?;
    Ok(SegmentReport {
        segmentation,
        normal_labels: labels,
        normal_assignment: normal_state.assignment.clone(),
        normal_state,
        refinements,
    })
}

/// Triangle adjacency across mesh edges.
pub fn face_adjacency(mesh: &TriMesh) -> Vec<Vec<usize>> {
    let topo = mesh.topology();
    let mut adj = vec![Vec::with_capacity(3); mesh.num_faces()];
    for &[f, g] in &topo.edge_faces {
        adj[f].push(g);
        adj[g].push(f);
    }
    adj
}

/// Connected components of each label.
pub fn label_components(adj: &[Vec<usize>], labels: &[usize]) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; labels.len()];
    let mut out = Vec::new();
    for s in 0..labels.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut members = vec![s];
        comp[s] = id;
        let mut q = VecDeque::from([s]);
        while let Some(f) = q.pop_front() {
            for &g in &adj[f] {
                if comp[g] == usize::MAX && labels[g] == labels[s] {
                    comp[g] = id;
                    members.push(g);
                    q.push_back(g);
                }
            }
        }
        out.push(members);
    }
    out
}

/// Keeps the largest connected piece of each patch and hands every smaller
/// piece to the neighbouring patch it shares the most edges with.
pub fn clean_fragments(mesh: &TriMesh, mut labels: Vec<usize>, k: usize) -> Vec<usize> {
    let adj = face_adjacency(mesh);
    for _ in 0..32 {
        let comps = label_components(&adj, &labels);
        let mut largest: BTreeMap<usize, usize> = BTreeMap::new();
        for (ci, c) in comps.iter().enumerate() {
            let l = labels[c[0]];
            let e = largest.entry(l).or_insert(ci);
            if comps[*e].len() < c.len() {
                *e = ci;
            }
        }
        let mut changed = false;
        for (ci, c) in comps.iter().enumerate() {
            let l = labels[c[0]];
            if largest[&l] == ci {
                continue;
            }
            let mut votes = vec![0usize; k];
            for &f in c {
                for &g in &adj[f] {
                    if labels[g] != l {
                        votes[labels[g]] += 1;
                    }
                }
            }
            let best = (0..k).max_by_key(|&j| (votes[j], std::cmp::Reverse(j))).expect("k > 0");
            if votes[best] == 0 {
                continue;
            }
            for &f in c {
                labels[f] = best;
            }
            changed = true;
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Euler characteristic `V - E + F` of the triangles labelled `patch`.
pub fn patch_euler_characteristic(mesh: &TriMesh, labels: &[usize], patch: usize) -> i64 {
    let mut verts = BTreeSet::new();
    let mut edges = BTreeSet::new();
    let mut faces = 0i64;
    for (t, f) in mesh.faces().iter().enumerate() {
        if labels[t] != patch {
            continue;
        }
        faces += 1;
        for k in 0..3 {
            verts.insert(f[k]);
            edges.insert(edge_key(f[k], f[(k + 1) % 3]));
        }
    }
    verts.len() as i64 - edges.len() as i64 + faces
}

/// Fraction of triangles whose template face matches `truth`.
pub fn agreement(seg: &Segmentation, truth: &[usize]) -> f64 {
    let faces = seg.face_labels();
    let hits = faces.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{template_surface, DatasetConfig, generate_dataset};
    use crate::mesh::shapes::icosphere;
    use crate::polycube::template;

    #[test]
    fn seeds_for_cube_and_ring() {
        let s = seed_normals(&template(1).unwrap());
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|v| (v.norm() - 1.0).abs() < 1e-15));
        assert_eq!(seed_normals(&template(2).unwrap()).len(), 10);
    }

    #[test]
    fn deformed_cube_gives_six_disks() {
        let data = generate_dataset(&[1], 1, 11, &DatasetConfig::default()).unwrap();
        let pc = template(1).unwrap();
        let locs = TruthSource::new(data[0].regions.clone()).locations(&data[0].mesh, &pc).unwrap();
        let r = segment(&data[0].mesh, &pc, &locs, &SegmentConfig::default()).unwrap();
        let seg = &r.segmentation;
        for p in 0..6 {
            assert_eq!(patch_euler_characteristic(&data[0].mesh, &seg.labels, p), 1);
        }
        assert!(agreement(seg, &data[0].regions) > 0.9);
    }

    #[test]
    fn sphere_splits_into_six_patches() {
        let mesh = icosphere(0.5, 3);
        let pc = template(1).unwrap();
        let locs = TemplateSource.locations(&mesh, &pc).unwrap();
        let r = segment(&mesh, &pc, &locs, &SegmentConfig::default()).unwrap();
        assert_eq!(r.segmentation.patch_sizes().len(), 6);
        assert!(r.segmentation.patch_sizes().iter().all(|&c| c > 0));
    }

    #[test]
    fn ring_walls_are_separated_in_centroid_space() {
        let (mesh, truth) = template_surface(2, 2).unwrap();
        let pc = template(2).unwrap();
        let locs = TemplateSource.locations(&mesh, &pc).unwrap();
        let r = segment(&mesh, &pc, &locs, &SegmentConfig::default()).unwrap();
        assert_eq!(r.normal_cluster_count(), 6);
        assert_eq!(r.segmentation.k, 10);
        assert!(agreement(&r.segmentation, &truth) > 0.9);
    }

    #[test]
    fn seg_file_round_trip() {
        let seg = Segmentation {
            k: 3,
            labels: vec![0, 2, 1, 1],
            patch_to_face: vec![2, 0, 1],
        };
        assert_eq!(parse_segmentation(&format_segmentation(&seg)).unwrap(), seg);
        assert!(parse_segmentation("k 2\npatch_to_face 0 1\n5\n").is_err());
    }
}
