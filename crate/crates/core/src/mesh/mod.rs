//! Triangle and hexahedral meshes, derived attributes and file I/O.

mod graph;
mod hex;
pub mod io;
pub mod shapes;
mod tri;
mod vec3;

pub use graph::{build_face_graph, FaceGraph, NODE_FEATURES};
pub use hex::{BoundaryQuad, HexMesh, VertexClass, HEX_CORNER_NEIGHBORS, HEX_EDGES, HEX_FACES};
pub use io::{load_hex_mesh, load_tri_mesh, save_hex_mesh, save_tri_mesh};
pub use tri::{detect_sharp_edges, edge_key, normalize_to_unit_box, BoxNormalization, Topology, TriMesh};
pub use vec3::{angle_between, det3, Vec3};

/// Default dihedral deviation (degrees) above which an edge counts as sharp.
pub const DEFAULT_SHARP_ANGLE: f64 = 30.0;
