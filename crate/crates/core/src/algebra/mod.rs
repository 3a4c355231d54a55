//! Reaction groups and the 2×2 involution manifold.

mod group;
mod matrix;

pub use group::{GroupElement, Permutation, ReactionGroup, StateSet, MAX_GROUP_ORDER};
pub use matrix::{
    commutant_element, involution_from_seed, max_abs, row_major, seed_from_involution,
    spectral_projectors, swap_matrix, ComplexMatrix2, InvolutionMatrix, Matrix2,
    SpectralProjectors, TAU_ALG,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("state set is empty")]
    EmptyStateSet,
    #[error("duplicate state label `{0}`")]
    DuplicateState(String),
    #[error("image array {images:?} is not a bijection")]
    NotABijection { images: Vec<usize> },
    #[error("element `{name}` permutes {found} states, expected {expected}")]
    DegreeMismatch { name: String, expected: usize, found: usize },
    #[error("duplicate group element `{0}`")]
    DuplicateElement(String),
    #[error("unknown group element `{0}`")]
    UnknownElement(String),
    #[error("identity element `{0}` does not act trivially")]
    IdentityNotTrivial(String),
    #[error("product `{left}` ∘ `{right}` is not in the group")]
    NotClosed { left: String, right: String },
    #[error("inverse of `{0}` is not in the group")]
    MissingInverse(String),
    #[error("element `{0}` does not square to the identity")]
    NotInvolutive(String),
    #[error("group of order {order} exceeds enumeration bound {bound}")]
    GroupTooLarge { order: usize, bound: usize },
    #[error("elements belong to different groups")]
    ForeignElement,
    #[error("seed matrix is singular (det = {det:e})")]
    SingularSeed { det: f64 },
    #[error("seed vector is proportional to an eigenvector")]
    EigenvectorSeed,
    #[error("matrix is not an involution (residual {residual:e})")]
    NotInvolution { residual: f64 },
}
