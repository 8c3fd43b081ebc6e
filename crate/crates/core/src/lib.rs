//! Rothe (backward Euler) solver for parabolic hemivariational inequalities,
//! specialised to the 1D heat equation on (0, 1) with a Dirichlet end at
//! `x = 0` and a multivalued, possibly nonmonotone, boundary law
//! `-u_x(1, t) ∈ ∂j(u(1, t))` at `x = 1`.
//!
//! * [`nonsmooth`]: piecewise-quadratic potentials and their exact Clarke
//!   subdifferential graphs.
//! * [`fem1d`]: P1 mass/stiffness assembly, tridiagonal solves, discrete
//!   `H`, `V` and `V*` norms.
//! * [`rothe`]: complete per-step solution enumeration, solution trees and
//!   time interpolants.
//! * [`analysis`]: interpolant norms, the discrete `BV²` seminorm, a priori
//!   bound checks, the condition checker and convergence studies.
//! * [`cli`]: configuration and the command-line experiments.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fem1d;
pub mod nonsmooth;
pub mod rothe;

pub use error::{Error, Result};
