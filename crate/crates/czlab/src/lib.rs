//! czlab: a dense-grid numerical laboratory for singular integral operators
//! on the real line.
//!
//! The crate realizes accretive approximation-to-identity families, their
//! Littlewood-Paley differences and reproducing companions, bilinear
//! paraproducts with prescribed testing values, a generic trilinear-form
//! audit harness, and the bilinear Riesz transforms attached to Lipschitz
//! curves, together with the measurement machinery (decay slopes, residual
//! norms, boundedness ratios) used by the experiment suites.

pub mod accretive;
pub mod config;
pub mod error;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod linalg;
pub mod paraproduct;
pub mod probes;
pub mod report;
pub mod riesz;
pub mod spaces;
pub mod suites;
pub mod tb;

pub use error::{CzError, Result};
pub use grid::{C64, DenseOperator, Grid, GridFunction};
