//! Finite difference operators on the torus, their block-matrix
//! representation, and the digit permutation that carries `N`-dimensional
//! systems with `M` components onto scalar operators on the circle.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to one of them.
//!
//! ```
//! use finop::{pde_to_ode, FiniteOperatorF64, GridSpec, Rational};
//!
//! # fn main() -> Result<(), finop::Error> {
//! let g = GridSpec::new(2, 1, 2)?;
//! let d1 = FiniteOperatorF64::derivative(g, 1, Rational::new(1, 2))?;
//! let lap = d1.adjoint().compose(&d1)?;
//! let result = pde_to_ode(&lap, 2)?;
//! assert!(result.spectral_report.passed());
//! # Ok(())
//! # }
//! ```

pub mod digit_unitary;
pub mod dsl;
pub mod error;
pub mod grid;
pub mod isomorphism;
pub mod json;
pub mod linalg;
pub mod matrix_rep;
pub mod operator;
pub mod refinement;
pub mod sample;
pub mod scalar;
pub mod uhf;
pub mod verify;

pub use digit_unitary::{bphi, cell_map, cell_rank, digits, CellOrder, CellPermutation, DigitExpansion, Lexicographic, Serpentine};
pub use dsl::{lower, parse, parse_expr, print, OperatorExpr, ParseError, Program};
pub use error::{Error, Result};
pub use grid::{lcm, CellIndex, GridSpec, MatrixValue, Rational, StepFunction};
pub use isomorphism::{agreement_tol, evolve_compare, is_invertible, ode_to_pde, pde_to_ode, verify_spectrum, ConjugationResult, SpectralReport};
pub use linalg::ComplexMatrix;
pub use matrix_rep::{from_matrix, to_matrix, RepMatrix, Spectrum};
pub use operator::{build_pde, FiniteOperator, GridVector, PdeFactor};
pub use refinement::{common_refine, embed, factorial, Ladder};
pub use scalar::Real;
pub use uhf::{classify, factorial_sn, is_car, Exponent, SupernaturalNumber};

pub type StepFunctionF64 = StepFunction<f64>;
pub type StepFunctionF32 = StepFunction<f32>;
pub type MatrixValueF64 = MatrixValue<f64>;
pub type FiniteOperatorF64 = FiniteOperator<f64>;
pub type FiniteOperatorF32 = FiniteOperator<f32>;
pub type GridVectorF64 = GridVector<f64>;
pub type GridVectorF32 = GridVector<f32>;
pub type RepMatrixF64 = RepMatrix<f64>;
pub type RepMatrixF32 = RepMatrix<f32>;
pub type SpectrumF64 = Spectrum<f64>;
pub type ComplexMatrixF64 = ComplexMatrix<f64>;
pub type ComplexMatrixF32 = ComplexMatrix<f32>;
pub type ConjugationResultF64 = ConjugationResult<f64>;
