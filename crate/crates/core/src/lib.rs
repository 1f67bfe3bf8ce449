pub mod biorthogonal;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod geometry;
pub mod linalg;
pub mod phases;
pub mod quadrature;
pub mod run;
pub mod scenario;

pub use error::{Error, Result};
