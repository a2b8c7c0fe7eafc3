//! Symbolic music analysis and pattern-preserving pitch reassignment.
//!
//! - [`demo`]: small built-in pieces
//! - [`score`]: notes, pieces, MIDI and text I/O
//! - [`spiral`]: the spiral-array pitch model, spelling and key finding
//! - [`tension`]: per-segment tonal tension profiles
//! - [`patterns`]: translational pattern discovery and compressed covers
//! - [`optimizer`]: local search toward a target tension profile

pub mod demo;
pub mod error;
pub mod optimizer;
pub mod patterns;
pub mod score;
pub mod spiral;
pub mod tension;

pub use error::{Error, Result};
pub use optimizer::{vns, Assignment, MorphOptions, MorphProblem, VnsResult};
pub use patterns::{Cover, PatternAlgo, PointSet, Tec};
pub use score::{NoteEvent, Piece};
pub use spiral::SpiralArray;
pub use tension::TensionProfile;
