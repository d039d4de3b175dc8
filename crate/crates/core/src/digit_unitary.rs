//! Mixed-radix expansion of `[0, 1)` and the cell permutation that carries
//! intervals of `[0, 1)` onto (component, cube cell) pairs of `{1..M} x T^N`.
//!
//! A point `x` expands as `x = x_1/M + x_2/(M 2!^N) + x_3/(M 3!^N) + ...` with
//! `x_1 < M` and `x_i < i^N`. Truncating after `n` digits gives the grid of
//! `K = M (n!)^N` intervals; digit `x_i` picks a sub-cube of side `1/i!` through
//! a bijection `{0..i^N-1} -> {0..i-1}^N`, so each interval lands on exactly one
//! cell of the `n!`-grid.

use num_bigint::BigUint;
use num_complex::Complex;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::grid::{CellIndex, GridSpec, Rational};
use crate::linalg::ComplexMatrix;
use crate::operator::GridVector;
use crate::refinement::factorial;
use crate::scalar::Real;

pub const DEFAULT_MAX_K: usize = 2000;

/// Digits `(x_1; x_2, ..., x_n)` of a rational together with the exact
/// residual left after truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitExpansion {
    pub x1: u64,
    /// `x_2, ..., x_n`.
    pub digits: Vec<u64>,
    pub depth: usize,
    /// `x - partial_n`, always in `[0, 1/(M (n!)^N))`.
    pub residual: Rational,
}

impl DigitExpansion {
    /// Digit `x_i` for `1 <= i <= depth`.
    pub fn digit(&self, i: usize) -> Option<u64> {
        match i {
            0 => None,
            1 => Some(self.x1),
            _ => self.digits.get(i - 2).copied(),
        }
    }
}

/// Expansion of `x` to `depth` digits. Uses exact integer arithmetic: with
/// `D_i = M (i!)^N`, `k_i = floor(x D_i)` and `x_i = k_i - i^N k_{i-1}`, which
/// is the residual recurrence written in closed form.
pub fn digits(x: Rational, dim: usize, size: usize, depth: usize) -> Result<DigitExpansion> {
    if x < Rational::zero() || x >= Rational::from_integer(1) {
        return Err(Error::OutOfRange(format!("x = {x} is not in [0, 1)")));
    }
    if dim == 0 || size == 0 || depth == 0 {
        return Err(Error::OutOfRange("N, M and depth must be positive".into()));
    }
    let numer = BigUint::from(*x.numer() as u64);
    let denom = BigUint::from(*x.denom() as u64);
    let mut radix_total = BigUint::from(size as u64);
    let mut prev = (&numer * &radix_total) / &denom;
    let x1 = prev.to_u64().expect("x_1 < M");
    let mut out = Vec::with_capacity(depth.saturating_sub(1));
    for i in 2..=depth {
        let radix = BigUint::from(i as u64).pow(dim as u32);
        radix_total *= &radix;
        let k = (&numer * &radix_total) / &denom;
        let digit = &k - &prev * &radix;
        out.push(digit.to_u64().expect("digit < i^N"));
        prev = k;
    }
    // residual = x - prev / D_n = (numer * D_n - prev * denom) / (denom * D_n)
    let rnum = &numer * &radix_total - &prev * &denom;
    let rden = &denom * &radix_total;
    let g = rnum.gcd(&rden);
    let residual = match ((&rnum / &g).to_i64(), (&rden / &g).to_i64()) {
        (Some(n), Some(d)) => Rational::new(n, d),
        _ => return Err(Error::OutOfRange(format!("residual at depth {depth} does not fit in 64 bits"))),
    };
    Ok(DigitExpansion { x1, digits: out, depth, residual })
}

/// Enumeration of the sub-cubes `{0..i-1}^N` used for digit `x_i`.
pub trait CellOrder {
    fn unrank(&self, radix: usize, dim: usize, d: usize) -> Vec<usize>;
    fn rank(&self, radix: usize, cell: &[usize]) -> usize;
}

/// Base-`i` digits of `d`, axis 1 most significant.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lexicographic;

impl CellOrder for Lexicographic {
    fn unrank(&self, radix: usize, dim: usize, mut d: usize) -> Vec<usize> {
        let mut out = vec![0; dim];
        for slot in out.iter_mut().rev() {
            *slot = d % radix;
            d /= radix;
        }
        out
    }

    fn rank(&self, radix: usize, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &c| acc * radix + c)
    }
}

/// Boustrophedon order: axis `k` runs backwards whenever the rank of the
/// more significant prefix is odd, so consecutive ranks are adjacent cells.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serpentine;

impl CellOrder for Serpentine {
    fn unrank(&self, radix: usize, dim: usize, d: usize) -> Vec<usize> {
        let mut out = Lexicographic.unrank(radix, dim, d);
        let mut prefix = 0;
        for c in out.iter_mut() {
            let raw = *c;
            if prefix % 2 == 1 {
                *c = radix - 1 - raw;
            }
            prefix = prefix * radix + raw;
        }
        out
    }

    fn rank(&self, radix: usize, cell: &[usize]) -> usize {
        let mut prefix = 0;
        for &c in cell {
            let raw = if prefix % 2 == 1 { radix - 1 - c } else { c };
            prefix = prefix * radix + raw;
        }
        prefix
    }
}

/// Lexicographic `cell_map(i, d)` with range checks.
pub fn cell_map(radix: usize, dim: usize, d: usize) -> Result<Vec<usize>> {
    if radix < 2 || d >= radix.pow(dim as u32) {
        return Err(Error::OutOfRange(format!("digit {d} outside 0..{radix}^{dim}")));
    }
    Ok(Lexicographic.unrank(radix, dim, d))
}

pub fn cell_rank(radix: usize, cell: &[usize]) -> Result<usize> {
    if radix < 2 || cell.iter().any(|&c| c >= radix) {
        return Err(Error::OutOfRange(format!("cell {cell:?} outside {{0..{}}}^N", radix.saturating_sub(1))));
    }
    Ok(Lexicographic.rank(radix, cell))
}

/// Truncated `sum_{i=2}^{n} cell_map(i, x_i) / i!` for `x` in `[0, 1/M)`.
pub fn bphi(x: Rational, dim: usize, size: usize, depth: usize) -> Result<Vec<Rational>> {
    if x >= Rational::new(1, size.max(1) as i64) {
        return Err(Error::OutOfRange(format!("x = {x} is not in [0, 1/{size})")));
    }
    if depth > 20 {
        return Err(Error::OutOfRange(format!("depth {depth} exceeds 20 (n! must fit in 64 bits)")));
    }
    let exp = digits(x, dim, size, depth)?;
    let nfact = factorial(depth).expect("depth <= 20") as i64;
    let mut numer = vec![0i64; dim];
    let mut weight = nfact;
    for (idx, &d) in exp.digits.iter().enumerate() {
        let i = idx + 2;
        weight /= i as i64;
        let cell = cell_map(i, dim, d as usize)?;
        for (acc, c) in numer.iter_mut().zip(cell) {
            *acc += c as i64 * weight;
        }
    }
    Ok(numer.into_iter().map(|n| Rational::new(n, nfact)).collect())
}

/// Level-`n` truncation of the digit unitary, as a bijection between the
/// `K` intervals of `[0, 1)` and the basis `(cell, component)` of the
/// `n!`-grid. Basis indices follow the `cell * M + component` layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellPermutation {
    level: usize,
    dim: usize,
    size: usize,
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl CellPermutation {
    /// Lexicographic cell order, default size cap.
    pub fn new(dim: usize, size: usize, level: usize) -> Result<Self> {
        Self::with_order(dim, size, level, &Lexicographic, DEFAULT_MAX_K)
    }

    pub fn with_order(dim: usize, size: usize, level: usize, order: &dyn CellOrder, max_k: usize) -> Result<Self> {
        if level == 0 {
            return Err(Error::OutOfRange("level must be at least 1".into()));
        }
        let nfact = factorial(level).ok_or(Error::SizeLimit { k: usize::MAX, limit: max_k })?;
        let grid = GridSpec::new(dim, size, nfact).map_err(|_| Error::SizeLimit { k: usize::MAX, limit: max_k })?;
        let k_total = grid.basis_dim();
        if k_total > max_k {
            return Err(Error::SizeLimit { k: k_total, limit: max_k });
        }
        let radices: Vec<usize> = (2..=level).map(|i| i.pow(dim as u32)).collect();
        let mut forward = vec![0; k_total];
        let mut inverse = vec![usize::MAX; k_total];
        let mut digit_buf = vec![0usize; radices.len()];
        for (k, slot) in forward.iter_mut().enumerate() {
            // Peel mixed-radix digits off the integer interval index.
            let mut rest = k;
            for (j, r) in radices.iter().enumerate().rev() {
                digit_buf[j] = rest % r;
                rest /= r;
            }
            let component = rest;
            let mut coords = vec![0usize; dim];
            let mut weight = nfact;
            for (j, &d) in digit_buf.iter().enumerate() {
                let i = j + 2;
                weight /= i;
                for (c, sub) in coords.iter_mut().zip(order.unrank(i, dim, d)) {
                    *c += sub * weight;
                }
            }
            let basis = grid.flatten(&grid.cell(&coords)?) * size + component;
            *slot = basis;
            inverse[basis] = k;
        }
        if inverse.contains(&usize::MAX) {
            return Err(Error::OutOfRange("cell order is not a bijection".into()));
        }
        Ok(Self { level, dim, size, forward, inverse })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// The `N`-dimensional side: `(N, M, n!)`.
    pub fn pde_grid(&self) -> GridSpec {
        GridSpec::new(self.dim, self.size, factorial(self.level).expect("checked at construction"))
            .expect("checked at construction")
    }

    /// The scalar one-dimensional side: `(1, 1, K)`.
    pub fn ode_grid(&self) -> GridSpec {
        GridSpec::new(1, 1, self.len()).expect("K >= 1")
    }

    /// Basis index (`cell * M + component`) that interval `k` maps to.
    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> &[usize] {
        &self.inverse
    }

    /// `(component, cell)` for interval `k`.
    pub fn target(&self, k: usize) -> (usize, CellIndex) {
        let b = self.forward[k];
        (b % self.size, self.pde_grid().unflatten(b / self.size))
    }

    /// Permutation matrix `P` with `P e_k = e_{forward[k]}`.
    pub fn matrix<T: Real>(&self) -> ComplexMatrix<T> {
        let mut p = ComplexMatrix::zeros(self.len(), self.len());
        for (k, &b) in self.forward.iter().enumerate() {
            p[(b, k)] = Complex::new(T::one(), T::zero());
        }
        p
    }

    /// `U u`: a function on `[0, 1)` to a function on `T^N` with `M` components.
    pub fn apply<T: Real>(&self, u: &GridVector<T>) -> Result<GridVector<T>> {
        u.grid().ensure_same(&self.ode_grid())?;
        let mut out = vec![Complex::zero(); self.len()];
        for (k, &b) in self.forward.iter().enumerate() {
            out[b] = u.values()[k];
        }
        GridVector::new(self.pde_grid(), out)
    }

    /// `U^{-1} v`.
    pub fn apply_inverse<T: Real>(&self, v: &GridVector<T>) -> Result<GridVector<T>> {
        v.grid().ensure_same(&self.pde_grid())?;
        let out = self.forward.iter().map(|&b| v.values()[b]).collect();
        GridVector::new(self.ode_grid(), out)
    }

    /// `P^{-1} B P`, computed by re-indexing.
    pub fn conjugate_to_ode<T: Real>(&self, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check_square(b)?;
        Ok(ComplexMatrix::from_fn(self.len(), self.len(), |r, c| b[(self.forward[r], self.forward[c])]))
    }

    /// `P B P^{-1}`, computed by re-indexing.
    pub fn conjugate_to_pde<T: Real>(&self, b: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
        self.check_square(b)?;
        Ok(ComplexMatrix::from_fn(self.len(), self.len(), |r, c| b[(self.inverse[r], self.inverse[c])]))
    }

    fn check_square<T: Real>(&self, b: &ComplexMatrix<T>) -> Result<()> {
        if b.rows() != self.len() || b.cols() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), actual: b.rows().max(b.cols()) });
        }
        Ok(())
    }
}
