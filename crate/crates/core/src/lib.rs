//! Robust integral functionals, robust divergences and Fenchel duality on
//! finite probability spaces.

pub mod asymptotics;
pub mod cli;
pub mod convex1d;
pub mod duality;
pub mod error;
pub mod ext;
pub mod functional;
pub mod penalty;
pub mod random;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod space;

pub use convex1d::{Extension, Piece, PiecewiseConvexFn};
pub use error::{Error, Result};
pub use ext::ExtReal;
pub use penalty::{Penalty, PenaltyOracle};
pub use space::{Density, FiniteSpace, RandomVariable};
