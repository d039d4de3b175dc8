//! The isomorphism between the finite algebra on a grid and the full matrix
//! algebra `C^{K x K}`, `K = M p^N`.
//!
//! Block `(r, j)` of the representing matrix (rows and columns grouped by cell,
//! `M` components inside each cell) is the coefficient `A_{j-r}` evaluated on
//! cell `r`. Both directions are pure re-indexing, so the round trips are exact.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, StepFunction};
use crate::linalg::ComplexMatrix;
use crate::operator::{FiniteOperator, GridVector};
use crate::scalar::Real;

/// Matrix of an operator together with the grid that fixes its block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct RepMatrix<T> {
    grid: GridSpec,
    matrix: ComplexMatrix<T>,
}

impl<T: Real> RepMatrix<T> {
    pub fn new(grid: GridSpec, matrix: ComplexMatrix<T>) -> Result<Self> {
        let k = grid.basis_dim();
        if matrix.rows() != k || matrix.cols() != k {
            return Err(Error::DimensionMismatch { expected: k, actual: matrix.rows().max(matrix.cols()) });
        }
        Ok(Self { grid, matrix })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `exp(t B)`.
    pub fn exp(&self, t: T) -> Result<Self> {
        let scaled = self.matrix.scale(Complex::new(t, T::zero()));
        Ok(Self { grid: self.grid, matrix: scaled.exp()? })
    }

    pub fn apply(&self, u: &GridVector<T>) -> Result<GridVector<T>> {
        self.grid.ensure_same(u.grid())?;
        GridVector::new(self.grid, self.matrix.mul_vec(u.values())?)
    }

    /// Spectrum of the matrix; eigensolver failure is an error.
    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        Ok(Spectrum::new(self.matrix.eigenvalues()?))
    }

    /// CSV with `re,im` interleaved per column.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in 0..self.dim() {
            let row: Vec<String> = self.matrix.row(r).iter().map(|z| format!("{},{}", z.re, z.im)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// `B_A`: block `(r, j)` is `A_{j-r}` on cell `r`.
pub fn to_matrix<T: Real>(op: &FiniteOperator<T>) -> RepMatrix<T> {
    let grid = *op.grid();
    let m = grid.size();
    let k = grid.basis_dim();
    let mut matrix = ComplexMatrix::zeros(k, k);
    for (&shift, coeff) in op.flat_terms() {
        for cell in 0..grid.cell_count() {
            let col_cell = grid.add_flat(cell, shift);
            let block = coeff.block(cell);
            for a in 0..m {
                for b in 0..m {
                    matrix[(cell * m + a, col_cell * m + b)] = block[a * m + b];
                }
            }
        }
    }
    RepMatrix { grid, matrix }
}

/// Recovers the unique operator on `grid` whose matrix is `matrix`.
pub fn from_matrix<T: Real>(grid: GridSpec, matrix: &ComplexMatrix<T>) -> Result<FiniteOperator<T>> {
    let k = grid.basis_dim();
    if matrix.rows() != k || matrix.cols() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: matrix.rows().max(matrix.cols()) });
    }
    let m = grid.size();
    let mm = m * m;
    let cells = grid.cell_count();
    let mut raw: BTreeMap<usize, Vec<Complex<T>>> = BTreeMap::new();
    for row_cell in 0..cells {
        for col_cell in 0..cells {
            let shift = grid.sub_flat(col_cell, row_cell);
            let mut any = false;
            for a in 0..m {
                for b in 0..m {
                    if !matrix[(row_cell * m + a, col_cell * m + b)].is_zero() {
                        any = true;
                    }
                }
            }
            if !any {
                continue;
            }
            let data = raw.entry(shift).or_insert_with(|| vec![Complex::zero(); cells * mm]);
            for a in 0..m {
                for b in 0..m {
                    data[row_cell * mm + a * m + b] = matrix[(row_cell * m + a, col_cell * m + b)];
                }
            }
        }
    }
    let terms = raw.into_iter().map(|(s, d)| (s, StepFunction::from_raw(grid, d))).collect();
    Ok(FiniteOperator::from_flat_terms(grid, terms))
}

impl<T: Real> FiniteOperator<T> {
    pub fn to_matrix(&self) -> RepMatrix<T> {
        to_matrix(self)
    }
}

/// Eigenvalue multiset, kept in canonical order: ascending real part, with
/// values whose real parts agree to within a small tolerance grouped and
/// ordered by imaginary part (so conjugate pairs do not swap under round-off).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    eigenvalues: Vec<Complex<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn new(mut eigenvalues: Vec<Complex<T>>) -> Self {
        canonical_sort(&mut eigenvalues);
        Self { eigenvalues }
    }

    pub fn eigenvalues(&self) -> &[Complex<T>] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest pairwise distance after canonical ordering; `None` when the
    /// multiplicities cannot match.
    pub fn max_deviation(&self, other: &Self) -> Option<T> {
        if self.len() != other.len() {
            return None;
        }
        Some(self.eigenvalues.iter().zip(&other.eigenvalues).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max))
    }

    /// Each eigenvalue repeated `times` times.
    pub fn repeated(&self, times: usize) -> Self {
        Self::new(self.eigenvalues.iter().flat_map(|z| std::iter::repeat_n(*z, times)).collect())
    }
}

impl<T: Real> fmt::Display for Spectrum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, z) in self.eigenvalues.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        write!(f, "}}")
    }
}

fn canonical_sort<T: Real>(values: &mut [Complex<T>]) {
    let key = |a: &Complex<T>, b: &Complex<T>| a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal);
    values.sort_by(key);
    let scale = values.iter().map(|z| z.norm()).fold(T::one(), T::max);
    let tol = T::of(1e-6) * scale;
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && values[end].re - values[end - 1].re <= tol {
            end += 1;
        }
        values[start..end]
            .sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal));
        start = end;
    }
}
