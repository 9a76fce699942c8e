//! Numerical building blocks shared by the functional and duality layers.

pub mod cone;
pub mod ellipsoid;
pub mod lp;
pub mod mirror;
pub mod scalar;
