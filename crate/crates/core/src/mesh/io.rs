//! OBJ triangle input and legacy-ASCII VTK hexahedral output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{HexMesh, TriMesh, Vec3, VertexClass};
use crate::{Error, Result};

pub const VTK_HEXAHEDRON: u8 = 12;

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parses OBJ `v`/`f` records. Other records are ignored with one warning per
/// record kind. Face entries may use `v/vt/vn` and negative indices.
pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut ignored = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        let Some(tag) = it.next() else { continue };
        match tag {
            "v" => {
                let c: Vec<f64> = it
                    .take(3)
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::parse(lineno + 1, format!("bad vertex: {e}")))?;
                if c.len() != 3 {
                    return Err(Error::parse(lineno + 1, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            "f" => {
                let idx: Vec<usize> = it
                    .map(|tok| resolve_index(tok, vertices.len(), lineno + 1))
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        face: faces.len(),
                        arity: idx.len(),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            other => {
                if ignored.insert(other.to_string()) {
                    log::warn!("ignoring OBJ record '{other}' (first seen at line {})", lineno + 1);
                }
            }
        }
    }
    Ok(TriMesh::new(vertices, faces)?.oriented_outward())
}

fn resolve_index(tok: &str, nv: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head
        .parse()
        .map_err(|_| Error::parse(line, format!("bad face index '{tok}'")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        nv as i64 + i
    } else {
        -1
    };
    if resolved < 0 {
        return Err(Error::parse(line, format!("face index '{tok}' out of range")));
    }
    Ok(resolved as usize)
}

pub fn load_tri_mesh(path: &Path) -> Result<TriMesh> {
    parse_obj(&read_to_string(path)?)
}

pub fn format_obj(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.num_vertices() * 40 + mesh.num_faces() * 20);
    for v in mesh.vertices() {
        let _ = writeln!(s, "v {:e} {:e} {:e}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn save_tri_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    write_string(path, &format_obj(mesh))
}

/// Legacy ASCII VTK unstructured grid. Coordinates are written in shortest
/// round-trip form. Per-vertex tags go in POINT_DATA `boundary_tag`; optional
/// per-cell values go in CELL_DATA `scaled_jacobian`.
pub fn format_vtk(mesh: &HexMesh, scaled_jacobian: Option<&[f64]>) -> Result<String> {
    if mesh.elements.is_empty() || mesh.vertices.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let np = mesh.vertices.len();
    let nc = mesh.elements.len();
    let mut s = String::with_capacity(np * 60 + nc * 60);
    s.push_str("# vtk DataFile Version 3.0\nhexcube all-hex mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {np} double");
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    let _ = writeln!(s, "CELLS {nc} {}", nc * 9);
    for e in &mesh.elements {
        s.push('8');
        for v in e {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(s, "{VTK_HEXAHEDRON}");
    }
    if let Some(sj) = scaled_jacobian {
        if sj.len() != nc {
            return Err(Error::ShapeMismatch(format!("{} cell values for {nc} cells", sj.len())));
        }
        let _ = writeln!(s, "CELL_DATA {nc}\nSCALARS scaled_jacobian double 1\nLOOKUP_TABLE default");
        for v in sj {
            let _ = writeln!(s, "{v:e}");
        }
    }
    let _ = writeln!(s, "POINT_DATA {np}\nSCALARS boundary_tag int 1\nLOOKUP_TABLE default");
    for t in &mesh.tags {
        let _ = writeln!(s, "{}", t.code());
    }
    Ok(s)
}

pub fn save_hex_mesh(mesh: &HexMesh, path: &Path) -> Result<()> {
    save_hex_mesh_with_quality(mesh, None, path)
}

pub fn save_hex_mesh_with_quality(mesh: &HexMesh, sj: Option<&[f64]>, path: &Path) -> Result<()> {
    write_string(path, &format_vtk(mesh, sj)?)
}

struct Tokens<'a> {
    it: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim_start().starts_with('#'))
                .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t))),
        );
        Tokens { it: it.peekable() }
    }

    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.it.next().ok_or_else(|| Error::parse(0, "unexpected end of file"))
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let (l, t) = self.next()?;
        if t.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(Error::parse(l, format!("expected '{word}', found '{t}'")))
        }
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T> {
        let (l, t) = self.next()?;
        t.parse().map_err(|_| Error::parse(l, format!("cannot parse '{t}'")))
    }
}

/// Reads a file written by [`format_vtk`]. Returns the mesh and the cell
/// `scaled_jacobian` values when present. Missing `boundary_tag` data is
/// recomputed from topology.
pub fn parse_vtk(text: &str) -> Result<(HexMesh, Option<Vec<f64>>)> {
    // The first three lines are version, title and format.
    let mut lines = text.splitn(4, '\n');
    let version = lines.next().unwrap_or("");
    if !version.starts_with("# vtk DataFile") {
        return Err(Error::parse(1, "missing VTK header"));
    }
    let _title = lines.next();
    let fmt = lines.next().unwrap_or("").trim();
    if !fmt.eq_ignore_ascii_case("ASCII") {
        return Err(Error::parse(3, "only ASCII VTK is supported"));
    }
    let body = lines.next().unwrap_or("");
    let mut tk = Tokens::new(body);
    tk.expect("DATASET")?;
    tk.expect("UNSTRUCTURED_GRID")?;
    tk.expect("POINTS")?;
    let np: usize = tk.parse()?;
    let _ty = tk.next()?;
    let mut vertices = Vec::with_capacity(np);
    for _ in 0..np {
        vertices.push(Vec3::new(tk.parse()?, tk.parse()?, tk.parse()?));
    }
    tk.expect("CELLS")?;
    let nc: usize = tk.parse()?;
    let _size: usize = tk.parse()?;
    let mut elements = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (l, n) = tk.next()?;
        if n != "8" {
            return Err(Error::parse(l, format!("expected 8-node cell, found {n}")));
        }
        let mut e = [0usize; 8];
        for slot in &mut e {
            *slot = tk.parse()?;
        }
        elements.push(e);
    }
    tk.expect("CELL_TYPES")?;
    let nt: usize = tk.parse()?;
    for _ in 0..nt {
        let (l, t) = tk.next()?;
        if t != "12" {
            return Err(Error::parse(l, format!("unsupported cell type {t}")));
        }
    }
    let mut sj = None;
    let mut tags = None;
    while let Ok((l, section)) = tk.next() {
        match section {
            "CELL_DATA" | "POINT_DATA" => {
                let _n: usize = tk.parse()?;
            }
            "SCALARS" => {
                let (_, name) = tk.next()?;
                let _ty = tk.next()?;
                let (_, maybe_comp) = tk.next()?;
                if maybe_comp != "LOOKUP_TABLE" {
                    tk.expect("LOOKUP_TABLE")?;
                }
                let _table = tk.next()?;
                match name {
                    "scaled_jacobian" => {
                        let mut v = Vec::with_capacity(nc);
                        for _ in 0..nc {
                            v.push(tk.parse::<f64>()?);
                        }
                        sj = Some(v);
                    }
                    "boundary_tag" => {
                        let mut v = Vec::with_capacity(np);
                        for _ in 0..np {
                            let c: u8 = tk.parse()?;
                            v.push(VertexClass::from_code(c).ok_or_else(|| Error::parse(l, "bad tag"))?);
                        }
                        tags = Some(v);
                    }
                    other => return Err(Error::parse(l, format!("unknown scalar field '{other}'"))),
                }
            }
            other => return Err(Error::parse(l, format!("unexpected section '{other}'"))),
        }
    }
    let mesh = match tags {
        Some(t) => HexMesh::new(vertices, elements, t)?,
        None => HexMesh::untagged(vertices, elements)?,
    };
    Ok((mesh, sj))
}

pub fn load_hex_mesh(path: &Path) -> Result<(HexMesh, Option<Vec<f64>>)> {
    parse_vtk(&read_to_string(path)?)
}
