//! Backstepping kernels as truncated double power series.
//!
//! A kernel problem (coupled PDEs on the triangle `0 <= xi <= x <= L` plus
//! data on straight lines) is turned into a sparse linear system for the
//! coefficients `K_ij` of `Σ K_ij (x - x0)^(i-j) (xi - xi0)^j`, which is then
//! solved directly.
//!
//! ```
//! use kernelseries::{examples, assembler::{solve_problem, SolveOptions}};
//! use kernelseries::expr::CoeffExpr;
//!
//! let p = examples::example1(CoeffExpr::constant(3.0), 1.0, 3.0, 1.0);
//! let r = solve_problem(&p, &SolveOptions::with_order(3).grid(0)).unwrap();
//! assert!((r.kernel(0).coeff(1, 1) + 3.0).abs() < 1e-12);
//! ```

pub mod assembler;
pub mod error;
pub mod examples;
pub mod export;
pub mod expr;
pub mod linsys;
pub mod problem;
pub mod quad;
pub mod sparse;
pub mod taylor;
pub mod triseries;

pub use error::{Error, Result};
