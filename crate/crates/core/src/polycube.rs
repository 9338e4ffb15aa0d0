//! The eleven polycube templates and their face structure.
//!
//! A template is a face-connected set of unit cubes on the integer lattice.
//! Its boundary is split into unit facets; maximal edge-connected sets of
//! coplanar facets with the same outward axis form the boundary faces. Lattice
//! points where three or more faces meet are the corners, and the chains of
//! lattice edges along which two faces meet are the polycube edges.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::mesh::Vec3;
use crate::{Error, Result};

pub const NUM_TYPES: usize = 11;

const TEMPLATE_TABLE: &str = include_str!("templates.txt");

pub type Cell = [i32; 3];
pub type LatticePoint = [i32; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisLabel {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl AxisLabel {
    pub const ALL: [AxisLabel; 6] = [
        AxisLabel::PosX,
        AxisLabel::NegX,
        AxisLabel::PosY,
        AxisLabel::NegY,
        AxisLabel::PosZ,
        AxisLabel::NegZ,
    ];

    pub fn new(axis: usize, positive: bool) -> Self {
        AxisLabel::ALL[axis * 2 + usize::from(!positive)]
    }

    pub fn axis(self) -> usize {
        self as usize / 2
    }

    pub fn is_positive(self) -> bool {
        (self as usize).is_multiple_of(2)
    }

    pub fn normal(self) -> Vec3 {
        Vec3::axis(self.axis(), self.is_positive())
    }

    /// In-plane axes `(s, t)` with `s × t` equal to the outward normal.
    pub fn plane_axes(self) -> (usize, usize) {
        let a = self.axis();
        let (u, v) = ((a + 1) % 3, (a + 2) % 3);
        if self.is_positive() {
            (u, v)
        } else {
            (v, u)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AxisLabel::PosX => "+X",
            AxisLabel::NegX => "-X",
            AxisLabel::PosY => "+Y",
            AxisLabel::NegY => "-Y",
            AxisLabel::PosZ => "+Z",
            AxisLabel::NegZ => "-Z",
        }
    }
}

/// A unit square on the boundary of the cube union.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Facet {
    pub cell: Cell,
    pub label: AxisLabel,
}

impl Facet {
    /// Lattice coordinate of the facet plane along its axis.
    pub fn plane(&self) -> i32 {
        self.cell[self.label.axis()] + i32::from(self.label.is_positive())
    }

    /// Lower corner of the facet in its `(s, t)` plane axes.
    pub fn st(&self) -> (i32, i32) {
        let (s, t) = self.label.plane_axes();
        (self.cell[s], self.cell[t])
    }

    /// Corners in counter-clockwise order seen from outside.
    pub fn corners(&self) -> [LatticePoint; 4] {
        let (s, t) = self.label.plane_axes();
        let a = self.label.axis();
        let mut base = self.cell;
        base[a] = self.plane();
        let offset = |ds: i32, dt: i32| {
            let mut p = base;
            p[s] += ds;
            p[t] += dt;
            p
        };
        [offset(0, 0), offset(1, 0), offset(1, 1), offset(0, 1)]
    }

    pub fn center(&self) -> Vec3 {
        let c = self.corners();
        c.iter().map(|p| lattice_vec(*p)).sum::<Vec3>() / 4.0
    }
}

pub fn lattice_vec(p: LatticePoint) -> Vec3 {
    Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)
}

/// A maximal connected set of coplanar boundary facets sharing an axis label.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFace {
    pub id: usize,
    pub label: AxisLabel,
    pub plane: i32,
    /// Indices into [`PolycubeStructure::facets`].
    pub facets: Vec<usize>,
    /// Bounding lattice rectangle in `(s, t)`: `(s_min, t_min, s_max, t_max)`.
    pub rect: (i32, i32, i32, i32),
}

/// A unit facet shared by two cubes of the union.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InternalFace {
    pub id: usize,
    /// Cube indices; `cubes.0` lies on the negative side along `axis`.
    pub cubes: (usize, usize),
    pub axis: usize,
}

/// The six patches of the unit parametric cube assigned to one polycube cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UnitCubeDomain {
    pub cube_id: usize,
    pub patches: [AxisLabel; 6],
}

/// A chain of unit lattice edges along which two boundary faces meet.
#[derive(Clone, Debug, PartialEq)]
pub struct PolycubeEdge {
    pub id: usize,
    /// Node indices (into `nodes`) at the two ends, `ends.0 < ends.1` unless the
    /// chain is reversed to keep the lattice walk.
    pub ends: (usize, usize),
    pub faces: (usize, usize),
    /// Lattice points from the first node to the second.
    pub points: Vec<LatticePoint>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolycubeStructure {
    pub type_id: usize,
    pub name: String,
    pub genus: i64,
    pub cubes: Vec<Cell>,
    pub facets: Vec<Facet>,
    pub facet_face: Vec<usize>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub internal_faces: Vec<InternalFace>,
    /// Lattice points where at least three boundary faces meet.
    pub nodes: Vec<LatticePoint>,
    /// Faces incident to each node, sorted.
    pub node_faces: Vec<Vec<usize>>,
    pub edges: Vec<PolycubeEdge>,
}

struct TemplateSpec {
    type_id: usize,
    genus: i64,
    name: String,
    cubes: Vec<Cell>,
}

fn parse_table(text: &str) -> Result<Vec<TemplateSpec>> {
    let mut out: Vec<TemplateSpec> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok[0] == "type" {
            if tok.len() < 5 || tok[2] != "genus" {
                return Err(Error::parse(n + 1, "template header must be 'type <id> genus <g> <name>'"));
            }
            let type_id = tok[1].parse().map_err(|_| Error::parse(n + 1, "bad type id"))?;
            let genus = tok[3].parse().map_err(|_| Error::parse(n + 1, "bad genus"))?;
            out.push(TemplateSpec {
                type_id,
                genus,
                name: tok[4].to_string(),
                cubes: Vec::new(),
            });
        } else {
            let spec = out
                .last_mut()
                .ok_or_else(|| Error::parse(n + 1, "cube before any type header"))?;
            if tok.len() != 3 {
                return Err(Error::parse(n + 1, "cube line needs 'i j k'"));
            }
            let mut c = [0i32; 3];
            for (slot, t) in c.iter_mut().zip(&tok) {
                *slot = t.parse().map_err(|_| Error::parse(n + 1, "bad lattice coordinate"))?;
            }
            spec.cubes.push(c);
        }
    }
    Ok(out)
}

/// The shipped template table in plain text.
pub fn template_table() -> &'static str {
    TEMPLATE_TABLE
}

pub fn template(type_id: usize) -> Result<PolycubeStructure> {
    if !(1..=NUM_TYPES).contains(&type_id) {
        return Err(Error::InvalidTemplate(type_id));
    }
    let spec = parse_table(TEMPLATE_TABLE)?
        .into_iter()
        .find(|s| s.type_id == type_id)
        .ok_or(Error::InvalidTemplate(type_id))?;
    let mut pc = PolycubeStructure::from_cubes(&spec.cubes)?;
    pc.type_id = type_id;
    pc.name = spec.name;
    if pc.genus != spec.genus {
        return Err(Error::InvalidLattice(format!(
            "type {type_id}: table genus {} but facet complex has genus {}",
            spec.genus, pc.genus
        )));
    }
    Ok(pc)
}

pub fn all_templates() -> Result<Vec<PolycubeStructure>> {
    (1..=NUM_TYPES).map(template).collect()
}

fn step(c: Cell, axis: usize, d: i32) -> Cell {
    let mut n = c;
    n[axis] += d;
    n
}

fn lattice_edge_key(a: LatticePoint, b: LatticePoint) -> (LatticePoint, LatticePoint) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl PolycubeStructure {
    /// Builds the face structure of an arbitrary cube set. Rejects unions that
    /// are not face-connected, have a non-manifold boundary, or contain a
    /// lattice point enclosed on all sides.
    pub fn from_cubes(cubes: &[Cell]) -> Result<Self> {
        if cubes.is_empty() {
            return Err(Error::InvalidLattice("no cubes".into()));
        }
        let mut sorted = cubes.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != cubes.len() {
            return Err(Error::InvalidLattice("duplicate cube".into()));
        }
        let cubes: Vec<Cell> = cubes.to_vec();
        let index: BTreeMap<Cell, usize> = cubes.iter().enumerate().map(|(i, &c)| (c, i)).collect();

        // face connectivity of the union
        let mut seen = vec![false; cubes.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for axis in 0..3 {
                for d in [-1, 1] {
                    if let Some(&j) = index.get(&step(cubes[i], axis, d)) {
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidLattice("cube union is not face-connected".into()));
        }

        let mut facets = Vec::new();
        let mut internal_faces = Vec::new();
        for (i, &c) in cubes.iter().enumerate() {
            for label in AxisLabel::ALL {
                let d = if label.is_positive() { 1 } else { -1 };
                match index.get(&step(c, label.axis(), d)) {
                    None => facets.push(Facet { cell: c, label }),
                    Some(&j) if label.is_positive() => internal_faces.push(InternalFace {
                        id: internal_faces.len(),
                        cubes: (i, j),
                        axis: label.axis(),
                    }),
                    Some(_) => {}
                }
            }
        }

        // enclosed lattice points: all eight incident cells occupied
        let mut points: BTreeSet<LatticePoint> = BTreeSet::new();
        for f in &facets {
            points.extend(f.corners());
        }
        for c in &cubes {
            for dx in 0..2 {
                for dy in 0..2 {
                    for dz in 0..2 {
                        let p = [c[0] + dx, c[1] + dy, c[2] + dz];
                        if points.contains(&p) {
                            continue;
                        }
                        let enclosed = (0..8).all(|m| {
                            let cell = [p[0] - 1 + (m & 1), p[1] - 1 + ((m >> 1) & 1), p[2] - 1 + ((m >> 2) & 1)];
                            index.contains_key(&cell)
                        });
                        if enclosed {
                            return Err(Error::InvalidLattice(format!("lattice point {p:?} is enclosed")));
                        }
                    }
                }
            }
        }

        // group facets into faces
        let facet_index: BTreeMap<(AxisLabel, i32, i32, i32), usize> = facets
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let (s, t) = f.st();
                ((f.label, f.plane(), s, t), i)
            })
            .collect();
        let mut facet_face = vec![usize::MAX; facets.len()];
        let mut boundary_faces: Vec<BoundaryFace> = Vec::new();
        for (&(label, plane, _, _), &start) in &facet_index {
            if facet_face[start] != usize::MAX {
                continue;
            }
            let id = boundary_faces.len();
            let mut members = Vec::new();
            let mut stack = vec![start];
            facet_face[start] = id;
            while let Some(fi) = stack.pop() {
                members.push(fi);
                let (s, t) = facets[fi].st();
                for (ds, dt) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    if let Some(&nj) = facet_index.get(&(label, plane, s + ds, t + dt)) {
                        if facet_face[nj] == usize::MAX {
                            facet_face[nj] = id;
                            stack.push(nj);
                        }
                    }
                }
            }
            members.sort_unstable();
            let (mut s0, mut t0, mut s1, mut t1) = (i32::MAX, i32::MAX, i32::MIN, i32::MIN);
            for &m in &members {
                let (s, t) = facets[m].st();
                s0 = s0.min(s);
                t0 = t0.min(t);
                s1 = s1.max(s + 1);
                t1 = t1.max(t + 1);
            }
            boundary_faces.push(BoundaryFace {
                id,
                label,
                plane,
                facets: members,
                rect: (s0, t0, s1, t1),
            });
        }

        // boundary complex: every lattice edge must border exactly two facets
        let mut edge_facets: BTreeMap<(LatticePoint, LatticePoint), Vec<usize>> = BTreeMap::new();
        for (fi, f) in facets.iter().enumerate() {
            let c = f.corners();
            for k in 0..4 {
                edge_facets.entry(lattice_edge_key(c[k], c[(k + 1) % 4])).or_default().push(fi);
            }
        }
        if let Some((e, fs)) = edge_facets.iter().find(|(_, fs)| fs.len() != 2) {
            return Err(Error::InvalidLattice(format!(
                "lattice edge {e:?} borders {} boundary facets",
                fs.len()
            )));
        }
        let mut point_faces: BTreeMap<LatticePoint, BTreeSet<usize>> = BTreeMap::new();
        let mut point_facets: BTreeMap<LatticePoint, usize> = BTreeMap::new();
        for (fi, f) in facets.iter().enumerate() {
            for p in f.corners() {
                point_faces.entry(p).or_default().insert(facet_face[fi]);
                *point_facets.entry(p).or_insert(0) += 1;
            }
        }
        // vertex manifoldness: the facet fan around each point is one cycle
        for (&p, &count) in &point_facets {
            let fan: Vec<usize> = (0..facets.len()).filter(|&fi| facets[fi].corners().contains(&p)).collect();
            let fan_set: HashSet<usize> = fan.iter().copied().collect();
            let mut visited = HashSet::new();
            let mut stack = vec![fan[0]];
            visited.insert(fan[0]);
            while let Some(fi) = stack.pop() {
                let c = facets[fi].corners();
                let k = c.iter().position(|&q| q == p).expect("corner present");
                for q in [c[(k + 1) % 4], c[(k + 3) % 4]] {
                    for &g in &edge_facets[&lattice_edge_key(p, q)] {
                        if fan_set.contains(&g) && visited.insert(g) {
                            stack.push(g);
                        }
                    }
                }
            }
            if visited.len() != count {
                return Err(Error::InvalidLattice(format!("non-manifold lattice point {p:?}")));
            }
        }
        let v = point_facets.len() as i64;
        let e = edge_facets.len() as i64;
        let f = facets.len() as i64;
        let genus = (2 - (v - e + f)) / 2;

        let nodes: Vec<LatticePoint> = point_faces
            .iter()
            .filter(|(_, fs)| fs.len() >= 3)
            .map(|(&p, _)| p)
            .collect();
        let node_faces: Vec<Vec<usize>> = nodes.iter().map(|p| point_faces[p].iter().copied().collect()).collect();
        let node_index: BTreeMap<LatticePoint, usize> = nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();

        // feature lattice edges and their chains
        let mut feature: BTreeMap<(LatticePoint, LatticePoint), (usize, usize)> = BTreeMap::new();
        for (&key, fs) in &edge_facets {
            let (a, b) = (facet_face[fs[0]], facet_face[fs[1]]);
            if a != b {
                feature.insert(key, (a.min(b), a.max(b)));
            }
        }
        let mut adjacency: BTreeMap<LatticePoint, Vec<LatticePoint>> = BTreeMap::new();
        for &(a, b) in feature.keys() {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
        let mut used: HashSet<(LatticePoint, LatticePoint)> = HashSet::new();
        let mut edges = Vec::new();
        for (ni, &start) in nodes.iter().enumerate() {
            for &next in adjacency.get(&start).map(Vec::as_slice).unwrap_or(&[]) {
                if used.contains(&lattice_edge_key(start, next)) {
                    continue;
                }
                let faces = feature[&lattice_edge_key(start, next)];
                let mut pts = vec![start, next];
                used.insert(lattice_edge_key(start, next));
                let mut cur = next;
                let mut prev = start;
                while !node_index.contains_key(&cur) {
                    let nb = &adjacency[&cur];
                    if nb.len() != 2 {
                        return Err(Error::InvalidLattice(format!("feature branch at {cur:?}")));
                    }
                    let nxt = if nb[0] == prev { nb[1] } else { nb[0] };
                    if feature[&lattice_edge_key(cur, nxt)] != faces {
                        return Err(Error::InvalidLattice(format!("face pair changes at {cur:?}")));
                    }
                    used.insert(lattice_edge_key(cur, nxt));
                    pts.push(nxt);
                    prev = cur;
                    cur = nxt;
                }
                let ne = node_index[&cur];
                edges.push(PolycubeEdge {
                    id: edges.len(),
                    ends: (ni, ne),
                    faces,
                    points: pts,
                });
            }
        }
        if used.len() != feature.len() {
            return Err(Error::InvalidLattice("feature loop without corners".into()));
        }

        Ok(PolycubeStructure {
            type_id: 0,
            name: String::new(),
            genus,
            cubes,
            facets,
            facet_face,
            boundary_faces,
            internal_faces,
            nodes,
            node_faces,
            edges,
        })
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.boundary_faces.len()
    }

    pub fn cube_domains(&self) -> Vec<UnitCubeDomain> {
        (0..self.cubes.len())
            .map(|cube_id| UnitCubeDomain {
                cube_id,
                patches: AxisLabel::ALL,
            })
            .collect()
    }

    /// Centroid of a boundary face in lattice coordinates.
    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let f = &self.boundary_faces[face];
        f.facets.iter().map(|&i| self.facets[i].center()).sum::<Vec3>() / f.facets.len() as f64
    }

    pub fn lattice_bbox(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for c in &self.cubes {
            lo = lo.min(lattice_vec(*c));
            hi = hi.max(lattice_vec(*c) + Vec3::new(1.0, 1.0, 1.0));
        }
        (lo, hi)
    }

    /// Faces sharing a label and a lattice plane without being one face.
    pub fn coplanar_label_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<(AxisLabel, i32), Vec<usize>> = BTreeMap::new();
        for f in &self.boundary_faces {
            groups.entry((f.label, f.plane)).or_default().push(f.id);
        }
        groups.into_values().filter(|g| g.len() > 1).collect()
    }

    /// Faces sharing a label, in any plane. Normal-space clustering cannot
    /// tell the members of one of these groups apart.
    pub fn same_label_groups(&self) -> Vec<Vec<usize>> {
        let mut groups: BTreeMap<AxisLabel, Vec<usize>> = BTreeMap::new();
        for f in &self.boundary_faces {
            groups.entry(f.label).or_default().push(f.id);
        }
        groups.into_values().filter(|g| g.len() > 1).collect()
    }

    /// Lattice points incident to at least three faces with pairwise distinct
    /// labels.
    pub fn corner_points(&self) -> Vec<LatticePoint> {
        self.nodes
            .iter()
            .zip(&self.node_faces)
            .filter(|(_, fs)| {
                let labels: BTreeSet<AxisLabel> = fs.iter().map(|&f| self.boundary_faces[f].label).collect();
                labels.len() >= 3
            })
            .map(|(&p, _)| p)
            .collect()
    }

    pub fn boundary_facet_count(&self) -> usize {
        self.facets.len()
    }

    /// Genus from the Euler characteristic of the boundary facet complex.
    pub fn genus(&self) -> i64 {
        self.genus
    }

    /// Lattice text form: one cube per line.
    pub fn to_lattice_text(&self) -> String {
        self.cubes.iter().map(|c| format!("{} {} {}\n", c[0], c[1], c[2])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cube_template() {
        let pc = template(1).unwrap();
        assert_eq!(pc.cubes.len(), 1);
        assert_eq!(pc.num_boundary_faces(), 6);
        assert!(pc.internal_faces.is_empty());
        assert_eq!(pc.genus(), 0);
        assert_eq!(pc.corner_points().len(), 8);
        assert_eq!(pc.edges.len(), 12);
        assert!(pc.coplanar_label_groups().is_empty());
    }

    #[test]
    fn ring_template() {
        let pc = template(2).unwrap();
        assert_eq!(pc.cubes.len(), 8);
        assert_eq!(pc.genus(), 1);
        assert_eq!(pc.boundary_facet_count(), 32);
        assert_eq!(pc.num_boundary_faces(), 10);
        assert_eq!(pc.corner_points().len(), 16);
        // the annular top and bottom are single faces, so nothing is split
        assert!(pc.coplanar_label_groups().is_empty());
        assert_eq!(pc.same_label_groups().len(), 4);
    }

    #[test]
    fn out_of_range_types() {
        assert!(matches!(template(0), Err(Error::InvalidTemplate(0))));
        assert!(matches!(template(12), Err(Error::InvalidTemplate(12))));
    }

    #[test]
    fn arch_has_coplanar_feet() {
        let pc = template(4).unwrap();
        let groups = pc.coplanar_label_groups();
        assert_eq!(groups.len(), 1);
        let g = &groups[0];
        assert_eq!(g.len(), 2);
        for &f in g {
            assert_eq!(pc.boundary_faces[f].label, AxisLabel::NegZ);
            assert_eq!(pc.boundary_faces[f].plane, 0);
        }
    }

    #[test]
    fn ell_groups_by_facet_enumeration() {
        // two cubes side by side with a third stacked on one: the two +Z faces
        // sit at different heights, the two +X faces in different planes
        let pc = PolycubeStructure::from_cubes(&[[0, 0, 0], [1, 0, 0], [0, 0, 1]]).unwrap();
        assert!(pc.coplanar_label_groups().is_empty());
        // a U of three cubes on the floor leaves two coplanar +Y fingers
        let u = PolycubeStructure::from_cubes(&[[0, 0, 0], [1, 0, 0], [2, 0, 0], [0, 1, 0], [2, 1, 0]]).unwrap();
        let groups = u.coplanar_label_groups();
        assert_eq!(groups.len(), 1);
        assert!(groups[0].iter().all(|&f| u.boundary_faces[f].label == AxisLabel::PosY));
    }

    #[test]
    fn rejects_edge_only_contact() {
        assert!(PolycubeStructure::from_cubes(&[[0, 0, 0], [1, 1, 0]]).is_err());
    }

    #[test]
    fn every_template_is_consistent() {
        for pc in all_templates().unwrap() {
            let n = pc.cubes.len();
            assert_eq!(pc.boundary_facet_count(), 6 * n - 2 * pc.internal_faces.len(), "type {}", pc.type_id);
            let area: usize = pc.boundary_faces.iter().map(|f| f.facets.len()).sum();
            assert_eq!(area, pc.boundary_facet_count());
            assert!(pc.num_boundary_faces() >= 6);
            // each facet belongs to exactly one face
            let mut owner = vec![0; pc.facets.len()];
            for f in &pc.boundary_faces {
                for &i in &f.facets {
                    owner[i] += 1;
                }
            }
            assert!(owner.iter().all(|&c| c == 1));
            // skeleton nodes are exactly the corners
            assert_eq!(pc.nodes, pc.corner_points(), "type {}", pc.type_id);
            for g in pc.coplanar_label_groups() {
                let l = pc.boundary_faces[g[0]].label;
                assert!(g.iter().all(|&f| pc.boundary_faces[f].label == l));
            }
        }
    }
}
