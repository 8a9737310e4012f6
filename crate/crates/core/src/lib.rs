//! Exact formal computations for logarithmic Frobenius manifolds: truncated
//! power series, flat connections and their unfoldings, quantum cohomology
//! and WDVV reconstruction, and limiting mixed Hodge structures.

pub mod fixtures;
pub mod frobenius;
pub mod hodge;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod quantum;
pub mod scalar;
pub mod report;
pub mod series;
pub mod unfolding;

pub use linalg::{Matrix, Subspace};
pub use matrix::{LaurentMatrix, MatrixSeries};
pub use scalar::{int, rat, Coeff, GaussianRational, Rational};
pub use series::{SeriesError, TruncatedSeries, VarClass, VariableSet};
