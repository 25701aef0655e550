//! Eigenpairs of the graph p-Laplacian and the combinatorics around them:
//! nodal domains, multiway Cheeger constants and the exact 1-Laplacian on
//! small graphs.
//!
//! Vertices are 0-based in the API and 1-based in files and reports.

pub mod cheeger;
pub mod eigen;
pub mod error;
pub mod graph;
pub mod nodal;
pub mod onelap;
pub mod operator;
pub mod report;

pub use error::{Error, ParseErrorKind, Result, SolverError};
pub use graph::{parse_graph, path_graph, Edge, Graph, MuMode, VertexSubset};
pub use operator::EigenPair;
