//! Symbolic calculus for variational Poisson--Nijenhuis structures on
//! evolution PDEs: graded differential polynomials over jet and odd
//! covering variables, matrix operators in the total derivative, the
//! Schouten / Frölicher--Nijenhuis / compatibility brackets, shadow
//! calculus on the tangent and cotangent coverings, verification
//! predicates, and discovery of structures by undetermined coefficients.

pub mod ansatz;
pub mod brackets;
pub mod coverings;
pub mod equation;
pub mod error;
pub mod expr;
pub mod operator;
pub mod poly;
pub mod sample;
pub mod verify;

pub use equation::{total_x, total_x_power, CoveringMode, EquationContext};
pub use error::{CoreError, Result};
pub use operator::DiffOp;
pub use poly::{DPoly, Generator, Monomial, Rat, Role, VecFun};
pub use verify::Verdict;
