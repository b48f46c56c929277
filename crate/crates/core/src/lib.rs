//! Sum Hessian quotient operators F = S_k(η)/S_l(η), where S_k = σ_k + ασ_{k−1}
//! and η is the spectrum of (Δu)I − D²u.
//!
//! The crate covers the symmetric-function calculus, cone membership tests,
//! derivative formulas at the eigenvalue and matrix level, a finite-difference
//! Dirichlet solver, and probes that evaluate interior and Pogorelov-type test
//! functions on computed solutions.

mod dd;
pub mod cones;
pub mod eigen;
pub mod error;
pub mod matrix;
pub mod probes;
pub mod quotient;
pub mod solver;
pub mod symfunc;
pub mod verify;

pub use cones::{eta_from_lambda, in_gamma, in_gamma_prime, in_gamma_tilde, sample_cone, ConeId, ConeSample, EtaTuple};
pub use error::{Error, Result};
pub use matrix::SymmetricField;
pub use quotient::{f_grad, f_hess, f_value, Margin, QuotientGradient};
pub use solver::{solve, DomainSpec, GridSolution, Rhs, Shape, SolveOptions, SolveOutput};
pub use symfunc::{sigma, s_sum, EigenTuple, OperatorSpec};
