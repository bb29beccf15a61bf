//! Scoring and learning Bayesian-network structures from complete data.
//!
//! Discrete networks are scored with the BDe marginal likelihood under a
//! Dirichlet joint prior; linear-Gaussian networks with the BGe marginal
//! likelihood under a normal-Wishart prior. Both scores decompose over
//! families and give equal values to independence-equivalent DAGs.

pub mod consistency;
pub mod dag;
pub mod discrete;
pub mod elicitation;
pub mod error;
pub mod gaussian;
pub mod linalg;
pub mod search;
pub mod transforms;

pub use dag::{covered_reversal_sequence, independence_equivalent, Arc, Dag};
pub use discrete::{DirichletJointPrior, DiscreteDataset};
pub use error::{Error, Result};
pub use gaussian::{GaussianDataset, NormalWishartPrior};
pub use search::{SearchConfig, StructurePrior};
pub use transforms::{DiscreteScheme, DEFAULT_MAX_STATES};
