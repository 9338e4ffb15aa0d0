use std::path::PathBuf;

/// Errors raised anywhere in the meshing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse failure at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("non-triangle face at face {face} ({arity} vertices)")]
    NonTriangleFace { face: usize, arity: usize },
    #[error("non-manifold edge ({}, {}) shared by {count} faces", .edge.0, .edge.1)]
    NonManifoldEdge { edge: (usize, usize), count: usize },
    #[error("inconsistent face orientation across edge ({}, {})", .edge.0, .edge.1)]
    InconsistentOrientation { edge: (usize, usize) },
    #[error("invalid face {face}: {msg}")]
    InvalidFace { face: usize, msg: String },
    #[error("degenerate face {face} (area {area:e})")]
    DegenerateFace { face: usize, area: f64 },
    #[error("empty mesh")]
    EmptyMesh,
    #[error("zero-extent bounding box")]
    DegenerateBox,
    #[error("invalid hex mesh: {0}")]
    InvalidHexMesh(String),
    #[error("polycube type {0} out of range 1..=11")]
    InvalidTemplate(usize),
    #[error("invalid polycube lattice: {0}")]
    InvalidLattice(String),
    #[error("deformation failed after {attempts} attempts")]
    DeformationFailed { attempts: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("training diverged at epoch {epoch} (loss {loss})")]
    Divergence { epoch: usize, loss: f64 },
    #[error("corrupt model file: {0}")]
    CorruptModel(String),
    #[error("model kind mismatch: expected {expected}, found {found}")]
    ModelKindMismatch { expected: String, found: String },
    #[error("unknown {kind} strategy '{name}'")]
    UnknownStrategy { kind: &'static str, name: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("segmentation mismatch: {0}")]
    SegmentationMismatch(String),
    #[error("corner not found for polycube corner {corner}")]
    CornerNotFound { corner: usize },
    #[error("no path between vertices {src} and {dst}")]
    NoPath { src: usize, dst: usize },
    #[error("flood fill leakage: {0}")]
    FloodFillLeakage(String),
    #[error("patch {patch} is not a disk: {msg}")]
    NotDisk { patch: usize, msg: String },
    #[error("singular linear system in patch {patch}")]
    Singular { patch: usize },
    #[error("fold-over in parameterization of patch {patch}")]
    FoldOver { patch: usize },
    #[error("patch boundary has {found} corner-delimited segments, expected 4")]
    BoundarySegments { found: usize },
    #[error("parameter point ({u}, {v}) lies outside patch {patch}")]
    UvOutside { patch: usize, u: f64, v: f64 },
    #[error("weld failure: {0}")]
    Weld(String),
    #[error("non-finite energy at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
