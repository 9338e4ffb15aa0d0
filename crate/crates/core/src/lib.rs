//! Polycube-guided all-hexahedral meshing.
//!
//! A surface triangle mesh is classified against a fixed table of polycube
//! templates by a graph convolutional network, segmented into patches that
//! match the template's faces, parameterized patch by patch, filled with an
//! octree-subdivided hex grid and finally improved until its worst scaled
//! Jacobian clears a threshold.

pub mod dataset;
mod error;
pub mod gcn;
pub mod hexgen;
pub mod mesh;
pub mod pathopt;
pub mod pipeline;
pub mod polycube;
pub mod quality;
pub mod registry;
pub mod segmentation;

pub use error::{Error, Result};
