//! Macroscopic circulation of stationary probability flow on planar graphs.
//!
//! The pipeline runs from a transition matrix (or a raw net-flux field) to a
//! 3-partition of the vertices whose cyclic inter-part flux is as large as the
//! curl potential on the dual graph allows:
//!
//! 1. [`flowfield`]: stationary distribution, probability current, net flux.
//! 2. [`embedding`]: planar embedding, faces, dual graph, triangulation.
//! 3. [`potential`]: face potential ψ and its extrema.
//! 4. [`extract`]: three disjoint dual paths between the extrema, cut into parts.
//! 5. [`partition`]: circulation of a given partition and a brute-force search.
//!
//! [`cli`] wires these together around a JSON problem file.

pub mod cli;
pub mod embedding;
pub mod extract;
pub mod flowfield;
pub mod partition;
pub mod potential;
pub mod tolerance;

use thiserror::Error;

/// Any error raised along the pipeline, tagged with its originating module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Flow(#[from] flowfield::FlowError),
    #[error(transparent)]
    Partition(#[from] partition::PartitionError),
    #[error(transparent)]
    Embedding(#[from] embedding::EmbeddingError),
    #[error(transparent)]
    Potential(#[from] potential::PotentialError),
    #[error(transparent)]
    Extract(#[from] extract::ExtractError),
    #[error(transparent)]
    Cli(#[from] cli::CliError),
}

impl Error {
    pub fn module(&self) -> &'static str {
        match self {
            Error::Flow(_) => "flowfield",
            Error::Partition(_) => "partition",
            Error::Embedding(_) => "embedding",
            Error::Potential(_) => "potential",
            Error::Extract(_) => "extract",
            Error::Cli(_) => "cli",
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Flow(e) => e.kind(),
            Error::Partition(e) => e.kind(),
            Error::Embedding(e) => e.kind(),
            Error::Potential(e) => e.kind(),
            Error::Extract(e) => e.kind(),
            Error::Cli(e) => e.kind(),
        }
    }
}
