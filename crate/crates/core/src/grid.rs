//! Uniform grids on the torus `T^N` and matrix-valued step functions on them.
//!
//! Geometry is exact: cell sides are `1/p` and points are rationals. Cells are
//! enumerated lexicographically with axis 1 the most significant digit; every
//! block matrix and permutation in the crate uses this one order.

use std::fmt;

use num_complex::Complex;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::scalar::{is_exact_zero, Real};

/// Exact rational number in lowest terms with a positive denominator.
pub type Rational = num_rational::Rational64;

/// Dimension `N`, matrix size `M` and cells per axis `p` (cell side `h = 1/p`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "N")]
    dim: usize,
    #[serde(rename = "M")]
    size: usize,
    p: usize,
}

impl GridSpec {
    pub fn new(dim: usize, size: usize, p: usize) -> Result<Self> {
        if dim == 0 || size == 0 || p == 0 {
            return Err(Error::InvalidGrid(format!("N, M and p must be positive (got N={dim}, M={size}, p={p})")));
        }
        let cells = p
            .checked_pow(dim as u32)
            .and_then(|c| c.checked_mul(size))
            .and_then(|k| k.checked_mul(size));
        if cells.is_none() {
            return Err(Error::InvalidGrid(format!("grid N={dim}, M={size}, p={p} is too large to index")));
        }
        Ok(Self { dim, size, p })
    }

    /// Torus dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix size `M`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Cells per axis.
    pub fn p(&self) -> usize {
        self.p
    }

    /// Cell side `1/p`.
    pub fn step(&self) -> Rational {
        Rational::new(1, self.p as i64)
    }

    pub fn cell_count(&self) -> usize {
        self.p.pow(self.dim as u32)
    }

    /// `K = M p^N`, the size of the representing matrix.
    pub fn basis_dim(&self) -> usize {
        self.size * self.cell_count()
    }

    /// Same `N` and `M`, different `p`.
    pub fn with_p(&self, p: usize) -> Result<Self> {
        Self::new(self.dim, self.size, p)
    }

    pub fn same_frame(&self, other: &Self) -> bool {
        self.dim == other.dim && self.size == other.size
    }

    pub(crate) fn ensure_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch { left: *self, right: *other });
        }
        Ok(())
    }

    pub fn cell(&self, coords: &[usize]) -> Result<CellIndex> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: coords.len() });
        }
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.p) {
            return Err(Error::OutOfRange(format!("cell coordinate {bad} not in 0..{}", self.p)));
        }
        Ok(CellIndex(coords.to_vec()))
    }

    /// Reduces arbitrary integer shifts componentwise mod `p`.
    pub fn shift(&self, coords: &[i64]) -> Result<CellIndex> {
        if coords.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: coords.len() });
        }
        let p = self.p as i64;
        Ok(CellIndex(coords.iter().map(|c| c.rem_euclid(p) as usize).collect()))
    }

    pub fn flatten(&self, cell: &CellIndex) -> usize {
        debug_assert_eq!(cell.0.len(), self.dim);
        cell.0.iter().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn unflatten(&self, mut flat: usize) -> CellIndex {
        let mut coords = vec![0; self.dim];
        for slot in coords.iter_mut().rev() {
            *slot = flat % self.p;
            flat /= self.p;
        }
        CellIndex(coords)
    }

    pub fn cells(&self) -> impl Iterator<Item = CellIndex> + '_ {
        (0..self.cell_count()).map(move |i| self.unflatten(i))
    }

    /// Digitwise `(a + b) mod p` on flat indices.
    pub(crate) fn add_flat(&self, a: usize, b: usize) -> usize {
        self.combine_flat(a, b, |x, y| (x + y) % self.p)
    }

    /// Digitwise `(a - b) mod p` on flat indices.
    pub(crate) fn sub_flat(&self, a: usize, b: usize) -> usize {
        self.combine_flat(a, b, |x, y| (x + self.p - y) % self.p)
    }

    pub(crate) fn neg_flat(&self, a: usize) -> usize {
        self.sub_flat(0, a)
    }

    fn combine_flat(&self, mut a: usize, mut b: usize, f: impl Fn(usize, usize) -> usize) -> usize {
        let mut out = 0;
        let mut weight = 1;
        for _ in 0..self.dim {
            out += f(a % self.p, b % self.p) * weight;
            a /= self.p;
            b /= self.p;
            weight *= self.p;
        }
        out
    }

    /// Cell containing the point `x` (coordinates taken mod 1).
    pub fn locate(&self, x: &[Rational]) -> Result<CellIndex> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, actual: x.len() });
        }
        let p = Rational::from_integer(self.p as i64);
        Ok(CellIndex(
            x.iter()
                .map(|xi| {
                    let frac = xi - xi.floor();
                    (frac * p).floor().to_integer() as usize
                })
                .collect(),
        ))
    }

    /// Midpoint of a cell.
    pub fn center(&self, cell: &CellIndex) -> Vec<Rational> {
        let p = self.p as i64;
        cell.0.iter().map(|&c| Rational::new(2 * c as i64 + 1, 2 * p)).collect()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(N={}, M={}, p={})", self.dim, self.size, self.p)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

/// Position in `Z_p^N`, used both for cells and for shifts.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(Vec<usize>);

impl CellIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Square complex `M x M` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixValue<T> {
    size: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> MatrixValue<T> {
    pub fn new(size: usize, entries: Vec<Complex<T>>) -> Result<Self> {
        if entries.len() != size * size {
            return Err(Error::DimensionMismatch { expected: size * size, actual: entries.len() });
        }
        Ok(Self { size, entries })
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let size = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != size) {
            return Err(Error::DimensionMismatch { expected: size, actual: bad.len() });
        }
        Ok(Self { size, entries: rows.concat() })
    }

    pub fn zeros(size: usize) -> Self {
        Self { size, entries: vec![Complex::zero(); size * size] }
    }

    pub fn identity(size: usize) -> Self {
        Self::scalar(size, Complex::one())
    }

    pub fn scalar(size: usize, value: Complex<T>) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m.entries[i * size + i] = value;
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row * self.size + col]
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> T {
        block_norm(&self.entries, self.size)
    }
}

fn block_norm<T: Real>(entries: &[Complex<T>], m: usize) -> T {
    if m == 1 {
        return entries[0].norm();
    }
    ComplexMatrix::from_row_major(m, m, entries.to_vec())
        .map(|a| a.operator_norm())
        .unwrap_or_else(|_| T::nan())
}

pub(crate) fn block_mul_add<T: Real>(out: &mut [Complex<T>], a: &[Complex<T>], b: &[Complex<T>], m: usize) {
    for i in 0..m {
        for k in 0..m {
            let aik = a[i * m + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..m {
                out[i * m + j] = out[i * m + j] + aik * b[k * m + j];
            }
        }
    }
}

pub(crate) fn block_adjoint_into<T: Real>(out: &mut [Complex<T>], a: &[Complex<T>], m: usize) {
    for i in 0..m {
        for j in 0..m {
            out[j * m + i] = a[i * m + j].conj();
        }
    }
}

/// Matrix-valued function on `T^N` constant on each cell of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction<T> {
    grid: GridSpec,
    /// `p^N` row-major `M x M` blocks in flat cell order.
    data: Vec<Complex<T>>,
}

impl<T: Real> StepFunction<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        let m = grid.size();
        Self { grid, data: vec![Complex::zero(); grid.cell_count() * m * m] }
    }

    pub fn constant(grid: GridSpec, value: &MatrixValue<T>) -> Result<Self> {
        if value.size != grid.size() {
            return Err(Error::DimensionMismatch { expected: grid.size(), actual: value.size });
        }
        Ok(Self { grid, data: value.entries.repeat(grid.cell_count()) })
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::scalar(grid, Complex::one())
    }

    pub fn scalar(grid: GridSpec, value: Complex<T>) -> Self {
        Self { grid, data: MatrixValue::scalar(grid.size(), value).entries.repeat(grid.cell_count()) }
    }

    /// One value per cell, cells in flat order.
    pub fn from_values(grid: GridSpec, values: Vec<MatrixValue<T>>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::DimensionMismatch { expected: grid.cell_count(), actual: values.len() });
        }
        let mut data = Vec::with_capacity(grid.basis_dim() * grid.size());
        for v in values {
            if v.size != grid.size() {
                return Err(Error::DimensionMismatch { expected: grid.size(), actual: v.size });
            }
            data.extend(v.entries);
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&CellIndex) -> MatrixValue<T>) -> Result<Self> {
        let values = grid.cells().map(|c| f(&c)).collect();
        Self::from_values(grid, values)
    }

    pub(crate) fn from_raw(grid: GridSpec, data: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(data.len(), grid.cell_count() * grid.size() * grid.size());
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn value(&self, cell: &CellIndex) -> MatrixValue<T> {
        MatrixValue { size: self.grid.size(), entries: self.block(self.grid.flatten(cell)).to_vec() }
    }

    /// Value at a point of the torus.
    pub fn sample(&self, x: &[Rational]) -> Result<MatrixValue<T>> {
        Ok(self.value(&self.grid.locate(x)?))
    }

    pub(crate) fn block(&self, flat: usize) -> &[Complex<T>] {
        let mm = self.grid.size() * self.grid.size();
        &self.data[flat * mm..(flat + 1) * mm]
    }

    pub(crate) fn raw(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn values(&self) -> Vec<MatrixValue<T>> {
        (0..self.grid.cell_count())
            .map(|i| MatrixValue { size: self.grid.size(), entries: self.block(i).to_vec() })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(is_exact_zero)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Self { grid: self.grid, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() })
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        Self { grid: self.grid, data: self.data.iter().map(|z| alpha * z).collect() }
    }

    /// Cellwise product `f(x) g(x)`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let m = self.grid.size();
        let mm = m * m;
        let mut data = vec![Complex::zero(); self.data.len()];
        for (cell, out) in data.chunks_mut(mm).enumerate() {
            block_mul_add(out, self.block(cell), other.block(cell), m);
        }
        Ok(Self { grid: self.grid, data })
    }

    /// Cellwise conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let m = self.grid.size();
        let mut data = vec![Complex::zero(); self.data.len()];
        for (cell, out) in data.chunks_mut(m * m).enumerate() {
            block_adjoint_into(out, self.block(cell), m);
        }
        Self { grid: self.grid, data }
    }

    /// The same function on the finer grid with `q` cells per axis.
    pub fn refine(&self, q: usize) -> Result<Self> {
        let p = self.grid.p();
        if q == 0 || !q.is_multiple_of(p) {
            return Err(Error::NotDivisible { p, q });
        }
        let fine = self.grid.with_p(q)?;
        let ratio = q / p;
        let mm = fine.size() * fine.size();
        let mut data = Vec::with_capacity(fine.cell_count() * mm);
        for child in fine.cells() {
            let parent = CellIndex(child.0.iter().map(|c| c / ratio).collect());
            data.extend_from_slice(self.block(self.grid.flatten(&parent)));
        }
        Ok(Self { grid: fine, data })
    }

    /// Max over cells of the largest singular value.
    pub fn supnorm(&self) -> T {
        let m = self.grid.size();
        (0..self.grid.cell_count()).map(|i| block_norm(self.block(i), m)).fold(T::zero(), T::max)
    }
}
