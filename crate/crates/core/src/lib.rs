//! Diophantine recurrence for intersective polynomials.

pub mod cli;
pub mod exp_sums;
pub mod hp;
pub mod lattice;
pub mod padic;
pub mod poly;
pub mod recurrence;
mod serde_big;

pub use hp::{HpReal, dist_to_nearest_int};
pub use lattice::Lattice;
pub use padic::{AuxiliaryData, IntersectivityVerdict, RootSystem, certify_intersective};
pub use poly::IntPoly;
