//! Bratteli diagrams, their AF-type full groups, invariant measures and
//! character probes.

pub mod character;
pub mod cli;
pub mod clopen;
pub mod construct;
pub mod diagram;
pub mod error;
pub mod group;
pub mod linalg;
pub mod measure;
pub mod representation;
pub mod scalar;

pub use clopen::{ClopenSet, FinitePath, LevelSet};
pub use diagram::{BratteliDiagram, DiagramFile, IncidenceMatrix};
pub use error::{Error, Result};
pub use group::GroupElement;
pub use measure::{InvariantMeasure, Mode};
pub use scalar::Value;
