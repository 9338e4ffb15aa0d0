//! Procedural training data: polycube template surfaces, rounded by
//! subdivision, triangulated, normalized and randomly deformed.

mod deform;
mod surface;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub use deform::{random_deform, DeformConfig, DeformationCage, MAX_DEFORM_ATTEMPTS};
pub use surface::{assemble_surface, catmull_clark, triangulate, QuadMesh};

use crate::mesh::io::{read_to_string, write_string};
use crate::mesh::{build_face_graph, load_tri_mesh, normalize_to_unit_box, save_tri_mesh, FaceGraph, TriMesh, Vec3};
use crate::polycube::{template, NUM_TYPES};
use crate::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DatasetConfig {
    pub subdivision_levels: usize,
    pub deform: DeformConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            subdivision_levels: 2,
            deform: DeformConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub label: usize,
    pub seed: u64,
    pub mesh: TriMesh,
    /// Template boundary face of every triangle.
    pub regions: Vec<usize>,
    pub graph: FaceGraph,
}

impl TrainingSample {
    pub fn num_regions(&self) -> usize {
        self.regions.iter().max().map_or(0, |m| m + 1)
    }

    pub fn region_centroids(&self) -> Vec<Vec3> {
        region_centroids(&self.mesh, &self.regions, self.num_regions())
    }
}

/// Area-weighted centroid of every region.
pub fn region_centroids(mesh: &TriMesh, regions: &[usize], k: usize) -> Vec<Vec3> {
    let mut sum = vec![Vec3::ZERO; k];
    let mut area = vec![0.0; k];
    for (f, &r) in regions.iter().enumerate() {
        let a = mesh.face_area(f);
        sum[r] += mesh.face_centroid(f) * a;
        area[r] += a;
    }
    sum.iter().zip(&area).map(|(&s, &a)| if a > 0.0 { s / a } else { Vec3::ZERO }).collect()
}

/// Undeformed template surface in the unit box, with its per-triangle face ids.
pub fn template_surface(type_id: usize, levels: usize) -> Result<(TriMesh, Vec<usize>)> {
    let pc = template(type_id)?;
    let quads = catmull_clark(&assemble_surface(&pc), levels)?;
    let (vertices, faces, ids) = triangulate(&quads);
    let mesh = normalize_to_unit_box(&TriMesh::new(vertices, faces)?)?;
    Ok((mesh, ids))
}

/// Deforms a template surface with `seed` and re-normalizes it so training
/// meshes live in the same frame as normalized inputs at inference.
pub fn make_sample(base: &TriMesh, regions: &[usize], label: usize, seed: u64, cfg: &DatasetConfig) -> Result<TrainingSample> {
    let deformed = random_deform(base, &cfg.deform, seed)?;
    let mesh = normalize_to_unit_box(&deformed)?;
    let graph = build_face_graph(&mesh);
    Ok(TrainingSample {
        label,
        seed,
        mesh,
        regions: regions.to_vec(),
        graph,
    })
}

/// `per_type` samples of every listed type; sample `i` overall uses seed
/// `base_seed + i`.
pub fn generate_dataset(types: &[usize], per_type: usize, base_seed: u64, cfg: &DatasetConfig) -> Result<Vec<TrainingSample>> {
    let mut out = Vec::with_capacity(types.len() * per_type);
    let mut index = 0u64;
    for &t in types {
        let (base, regions) = template_surface(t, cfg.subdivision_levels)?;
        for _ in 0..per_type {
            out.push(make_sample(&base, &regions, t, base_seed + index, cfg)?);
            index += 1;
        }
    }
    Ok(out)
}

pub fn all_types() -> Vec<usize> {
    (1..=NUM_TYPES).collect()
}

pub fn sample_file_name(index: usize) -> String {
    format!("sample_{index:05}.obj")
}

pub fn format_regions(regions: &[usize]) -> String {
    let mut s = String::with_capacity(regions.len() * 3);
    for r in regions {
        let _ = writeln!(s, "{r}");
    }
    s
}

pub fn parse_regions(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| l.trim().parse().map_err(|_| Error::parse(i + 1, format!("bad region id '{l}'"))))
        .collect()
}

/// Writes one OBJ and one `.regions` sidecar per sample plus the manifest.
pub fn write_dataset(dir: &Path, samples: &[TrainingSample]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = String::new();
    for (i, s) in samples.iter().enumerate() {
        let name = sample_file_name(i);
        save_tri_mesh(&s.mesh, &dir.join(&name))?;
        write_string(&dir.join(&name).with_extension("regions"), &format_regions(&s.regions))?;
        let _ = writeln!(manifest, "{name} {} {}", s.label, s.seed);
    }
    write_string(&dir.join(MANIFEST), &manifest)
}

pub fn load_dataset(dir: &Path) -> Result<Vec<TrainingSample>> {
    let text = read_to_string(&dir.join(MANIFEST))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.is_empty() {
            continue;
        }
        if tok.len() != 3 {
            return Err(Error::parse(n + 1, "manifest line must be 'filename type_id seed'"));
        }
        let label: usize = tok[1].parse().map_err(|_| Error::parse(n + 1, "bad type id"))?;
        let seed: u64 = tok[2].parse().map_err(|_| Error::parse(n + 1, "bad seed"))?;
        let path = dir.join(tok[0]);
        let mesh = load_tri_mesh(&path)?;
        let rpath = path.with_extension("regions");
        let regions = if rpath.exists() {
            let r = parse_regions(&read_to_string(&rpath)?)?;
            if r.len() != mesh.num_faces() {
                return Err(Error::ShapeMismatch(format!(
                    "{}: {} region ids for {} faces",
                    rpath.display(),
                    r.len(),
                    mesh.num_faces()
                )));
            }
            r
        } else {
            Vec::new()
        };
        let graph = build_face_graph(&mesh);
        out.push(TrainingSample {
            label,
            seed,
            mesh,
            regions,
            graph,
        });
    }
    Ok(out)
}

/// Counts samples per label.
pub fn label_histogram(samples: &[TrainingSample]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for s in samples {
        *h.entry(s.label).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_type_list_gives_empty_dataset() {
        assert!(generate_dataset(&[], 5, 1, &DatasetConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn samples_keep_template_genus() {
        let data = generate_dataset(&[1, 2], 2, 5, &DatasetConfig::default()).unwrap();
        assert_eq!(data.len(), 4);
        assert_eq!(data[0].mesh.genus(), 0);
        assert_eq!(data[2].mesh.genus(), 1);
        assert_eq!(data[3].seed, 8);
        assert_eq!(data[2].num_regions(), 10);
        assert_eq!(data[0].mesh.num_faces(), 192);
    }

    #[test]
    fn deformed_cube_stays_near_its_box() {
        let (base, _) = template_surface(1, 2).unwrap();
        let cfg = DeformConfig {
            sigma: 0.1,
            ..DeformConfig::default()
        };
        let m = random_deform(&base, &cfg, 42).unwrap();
        assert_eq!(m.genus(), 0);
        let (lo0, hi0) = base.bbox();
        let (lo1, hi1) = m.bbox();
        for a in 0..3 {
            let r = (hi1[a] - lo1[a]) / (hi0[a] - lo0[a]);
            assert!((0.7..=1.3).contains(&r), "axis {a} ratio {r}");
        }
    }

    #[test]
    fn dataset_round_trips_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let data = generate_dataset(&[3], 2, 9, &DatasetConfig::default()).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back, data);
    }
}
