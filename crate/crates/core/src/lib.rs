//! Mild-solution solver for the generalized Burgers equation
//! `u_t - u_xx + h(x) u u_x = 0` with `h(x) = (1 + x^2)^(-alpha)`, a
//! finite-difference cross-check, and executable checks of the solution's
//! qualitative properties.

pub mod coeff;
pub mod error;
pub mod fd_oracle;
pub mod field;
pub mod initial_data;
pub mod invariants;
pub mod io;
pub mod kernel;
pub mod mild_solver;
pub mod parallel;
pub mod quadrature;

pub use coeff::Coefficient;
pub use error::{Error, Result};
pub use field::{Field, Grid};
pub use initial_data::{DataSpec, InitialData};
pub use quadrature::QuadratureSpec;
