//! Dominating simplices, piecewise affine policies and an affine baseline for
//! two-stage adjustable robust covering linear programs.

pub mod domination;
pub mod error;
pub mod experiments;
pub mod instance;
pub mod policies;
pub mod uncertainty;

pub use error::{Error, Result};
pub use instance::Instance;
pub use uncertainty::{Family, Hull, SupportResult, UncertaintySet};
