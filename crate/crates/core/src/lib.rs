//! Certified computation of best simultaneous Diophantine approximations,
//! the rank of the subspace that eventually contains them, and small-scale
//! versions of the Liouville-type constructions that make that rank drop.

pub mod approx;
pub mod cli;
pub mod construct;
pub mod error;
pub mod exactnum;
pub mod exponents;
pub mod lattice;
mod scan;

pub use approx::{best_sequence, psi, ApproxSequence, BestApproxRecord, GoodStatus, MatrixTheta};
pub use error::{Error, Result};
pub use exactnum::{CertifiedValue, CmpOutcome, IntVec, Rat};
