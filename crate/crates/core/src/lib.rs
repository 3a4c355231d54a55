//! Product-potential networks of automata.
//!
//! Finite reaction groups act on automaton states; a connected symmetric graph
//! of relations carries one group element per directed edge. The crate checks
//! and generates potential markings, builds the induced Markov chain, enumerates
//! ideals of the control-matrix semigroup and handles smooth involution-matrix
//! fields together with their discretization onto embedded graphs.

pub mod algebra;
pub mod dynamics;
pub mod io;
pub mod network;
pub mod potential;
pub mod semigroup;
pub mod smooth;

pub use algebra::{AlgebraError, GroupElement, InvolutionMatrix, Permutation, ReactionGroup, StateSet};
pub use dynamics::{DynamicsError, MarkovModel, StateSpace};
pub use io::IoError;
pub use network::{Marking, NetworkError, Path, RelationGraph};
pub use potential::{is_potential, PotentialError, PotentialVerdict};
pub use semigroup::{ControlWord, ReactionMatrix, SemigroupError};
pub use smooth::{InvolutionField, SmoothError};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Smooth(#[from] SmoothError),
    #[error(transparent)]
    Io(#[from] IoError),
}
