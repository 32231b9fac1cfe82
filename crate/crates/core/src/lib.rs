pub mod cli;
pub mod config;
pub mod domains;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod geometry;
pub mod lattice;
pub mod measures;
pub mod quadrature;
pub mod report;
pub mod sampling;
pub mod toeplitz;

pub use domains::{Domain, Point, C64};
pub use error::{Error, Result};
pub use measures::Measure;
