//! Numerical lab for weakly maxitive risk measures and large deviations on
//! finite grids.

pub mod catalog;
pub mod concentration;
pub mod conjugate;
pub mod cvxint;
pub mod entropy;
pub mod error;
pub mod extgrid;
pub mod numeric;
pub mod verify;

pub use error::{Error, Result};
pub use extgrid::{ExtendedValue, GridFunction, GridSpace, PointSet, Regularity};
