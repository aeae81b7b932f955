//! Numerical machinery for first-order Sobolev extension on planar polygonal
//! domains with slits.
//!
//! The crate builds conformal disk and exterior maps for polygons-with-slits,
//! decomposes the complement of a domain into hyperbolic triangles, assembles
//! a linear extension operator from Whitney averages and auxiliary triangle
//! functions, and provides decision procedures (quasiconvexity, curve
//! conditions) plus conformal-capacity estimates that certify the operator's
//! behaviour at a chosen resolution.
//!
//! Everything is resolution-limited: verdicts and constants are reported *at*
//! a grid spacing `h`, never claimed exact. See the guide in `book/` for the
//! concepts and the CLI (`sobext`) for batch runs.

pub mod capacity;
pub mod cli;
pub mod conditions;
pub mod conformal;
pub mod extension;
pub mod fields;
pub mod geometry;
pub mod render;
pub mod report;
pub mod triangulation;
pub mod verify;

mod guide;

use thiserror::Error;

/// Crate-wide error type. Variants map onto CLI exit codes:
/// input errors exit 4, resolution/convergence errors exit 3, everything
/// else (invariant violations) exits 2.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("resolution too coarse: {0}")]
    Resolution(String),
    #[error("solver did not converge: {0}")]
    Convergence(String),
    #[error("points not connected in region: {0}")]
    Disconnected(String),
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("class ambiguity: {0}")]
    ClassAmbiguity(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidDomain(_) | Error::Parse(_) | Error::Io(_) => 4,
            Error::Resolution(_) | Error::Convergence(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
