//! Sum-product networks (SPNs) over binary variables and their compression
//! into non-negative tensor trains (tSPNs).
//!
//! The pipeline has four stages:
//!
//! 1. [`learn`] builds an SPN from a binary dataset by recursive instance
//!    clustering and variable-independence splitting.
//! 2. [`spn`] evaluates it exactly: joint and marginal probabilities, the
//!    partition function, MPE and induced-tree enumeration.
//! 3. [`convert`] fits a non-negative tensor train to the SPN's
//!    probabilities with alternating non-negative least squares ([`nnls`]),
//!    shrinking ranks whenever a slice drops to zero.
//! 4. [`eval`] compares the two models (total variation, probability
//!    profiles, parameter counts).

pub mod assignment;
pub mod convert;
pub mod error;
pub mod eval;
pub mod learn;
pub mod model;
pub mod nnls;
pub mod spn;
pub mod tt;

pub use assignment::{Assignment, Evidence, State};
pub use error::{Error, Result};
pub use model::Model;
pub use spn::{SpnGraph, SpnNode};
pub use tt::TensorTrain;


// The guide's snippets run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/spn.md")]
    mod spn {}
    #[doc = include_str!("../../../book/src/tensor-trains.md")]
    mod tensor_trains {}
    #[doc = include_str!("../../../book/src/nnls.md")]
    mod nnls {}
    #[doc = include_str!("../../../book/src/conversion.md")]
    mod conversion {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
