//! Fixed-confidence best-arm identification for linear bandits under
//! stage-wise safety constraints.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: small dense symmetric matrices, rank-1 inverse maintenance,
//!   Jacobi eigenvalues.
//! - [`instance`]: problem instances, the perturbed hard instance and the
//!   noisy environment.
//! - [`estimation`]: regularized least squares for the reward and safety
//!   channels plus confidence radii.
//! - [`safety`]: pessimistic/optimistic safety coefficients and forced
//!   exploration.
//! - [`allocation`]: L1-minimal reproduction weights (dense simplex),
//!   Frank–Wolfe allocations and the two pull criteria.
//! - [`bai`]: direction selection, stopping rule and the complete
//!   LinGapE / Safe-LinGapE procedures.
//! - [`theory`]: closed-form sample-complexity and forced-exploration bounds.

pub mod allocation;
pub mod bai;
pub mod error;
pub mod estimation;
pub mod instance;
pub mod linalg;
pub mod lp;
pub mod safety;
pub mod theory;

pub use error::{Error, Result};
