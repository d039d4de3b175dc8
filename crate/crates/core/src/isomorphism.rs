//! Conjugating an `N`-dimensional `M x M` operator into a scalar operator on the
//! circle through the level-`n` digit permutation, and checking that spectra
//! and evolutions correspond.

use num_complex::Complex;

use crate::digit_unitary::{CellPermutation, DEFAULT_MAX_K};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::matrix_rep::{from_matrix, to_matrix, Spectrum};
use crate::operator::{FiniteOperator, GridVector};
use crate::refinement::{embed, factorial, Ladder};
use crate::scalar::Real;

/// Relative tolerance for spectral and trajectory agreement.
/// Precisions coarser than this (f32) fall back to `1000 * epsilon`.
pub const AGREEMENT_TOL: f64 = 1e-8;

pub fn agreement_tol<T: Real>() -> T {
    T::of(AGREEMENT_TOL).max(T::epsilon() * T::of(1000.0))
}

#[derive(Debug, Clone)]
pub struct SpectralReport<T> {
    pub pde: Spectrum<T>,
    pub ode: Spectrum<T>,
    /// `None` when the multiplicities differ.
    pub max_deviation: Option<T>,
    pub tolerance: T,
}

impl<T: Real> SpectralReport<T> {
    pub fn passed(&self) -> bool {
        self.max_deviation.is_some_and(|d| d <= self.tolerance)
    }
}

#[derive(Debug, Clone)]
pub struct ConjugationResult<T> {
    /// Scalar operator on the `(1, 1, K)` grid.
    pub ode: FiniteOperator<T>,
    pub level: usize,
    pub permutation: CellPermutation,
    pub spectral_report: SpectralReport<T>,
}

fn check_level(grid: &GridSpec, level: usize) -> Result<usize> {
    let nfact = factorial(level).ok_or_else(|| Error::OutOfRange(format!("{level}! overflows")))?;
    if nfact % grid.p() != 0 {
        let minimal_level = Ladder::Factorial.first_level_containing(grid.p(), 20).unwrap_or(0);
        return Err(Error::LevelTooSmall { p: grid.p(), level, factorial: nfact, minimal_level });
    }
    Ok(nfact)
}

/// Like [`pde_to_ode`] with an explicit cap on `K`.
pub fn pde_to_ode_capped<T: Real>(op: &FiniteOperator<T>, level: usize, max_k: usize) -> Result<ConjugationResult<T>> {
    let grid = *op.grid();
    let nfact = check_level(&grid, level)?;
    let permutation =
        CellPermutation::with_order(grid.dim(), grid.size(), level, &crate::digit_unitary::Lexicographic, max_k)?;
    let embedded = embed(op, nfact)?;
    let b = to_matrix(&embedded);
    let conj = permutation.conjugate_to_ode(b.matrix())?;
    let ode = from_matrix(permutation.ode_grid(), &conj)?;
    let spectral_report = spectral_report(&embedded, &ode)?;
    Ok(ConjugationResult { ode, level, permutation, spectral_report })
}

/// `B = from_matrix(P^{-1} B_A P)` with `A` embedded at `n!` cells per axis.
pub fn pde_to_ode<T: Real>(op: &FiniteOperator<T>, level: usize) -> Result<ConjugationResult<T>> {
    pde_to_ode_capped(op, level, DEFAULT_MAX_K)
}

/// Inverse transport: a scalar operator on `(1, 1, M (n!)^N)` back to `(N, M, n!)`.
pub fn ode_to_pde<T: Real>(ode: &FiniteOperator<T>, dim: usize, size: usize, level: usize) -> Result<FiniteOperator<T>> {
    let permutation = CellPermutation::new(dim, size, level)?;
    if *ode.grid() != permutation.ode_grid() {
        return Err(Error::GridMismatch { left: permutation.ode_grid(), right: *ode.grid() });
    }
    let b = to_matrix(ode);
    let back = permutation.conjugate_to_pde(b.matrix())?;
    from_matrix(permutation.pde_grid(), &back)
}

fn spectral_report<T: Real>(pde: &FiniteOperator<T>, ode: &FiniteOperator<T>) -> Result<SpectralReport<T>> {
    let b = to_matrix(pde);
    let pde_spec = b.spectrum()?;
    let ode_spec = to_matrix(ode).spectrum()?;
    let max_deviation = pde_spec.max_deviation(&ode_spec);
    let tolerance = agreement_tol::<T>() * b.matrix().frobenius_norm();
    Ok(SpectralReport { pde: pde_spec, ode: ode_spec, max_deviation, tolerance })
}

/// Recomputes both spectra for a conjugation of `op`.
pub fn verify_spectrum<T: Real>(op: &FiniteOperator<T>, result: &ConjugationResult<T>) -> Result<SpectralReport<T>> {
    let nfact = check_level(op.grid(), result.level)?;
    spectral_report(&embed(op, nfact)?, &result.ode)
}

#[derive(Debug, Clone)]
pub struct EvolutionPoint<T> {
    pub time: T,
    pub discrepancy: T,
    pub tolerance: T,
}

impl<T: Real> EvolutionPoint<T> {
    pub fn passed(&self) -> bool {
        self.discrepancy <= self.tolerance
    }
}

/// For each `t`: `|| P^{-1} exp(t B_A) u0 - exp(t B_ode) P^{-1} u0 ||`.
pub fn evolve_compare<T: Real>(
    op: &FiniteOperator<T>,
    u0: &GridVector<T>,
    times: &[T],
    level: usize,
) -> Result<Vec<EvolutionPoint<T>>> {
    let result = pde_to_ode(op, level)?;
    let perm = &result.permutation;
    u0.grid().ensure_same(&perm.pde_grid())?;
    let nfact = perm.pde_grid().p();
    let b_pde = to_matrix(&embed(op, nfact)?);
    let b_ode = to_matrix(&result.ode);
    let w0 = perm.apply_inverse(u0)?;
    let tolerance = agreement_tol::<T>() * u0.norm();
    times
        .iter()
        .map(|&t| {
            let lhs = perm.apply_inverse(&b_pde.exp(t)?.apply(u0)?)?;
            let rhs = b_ode.exp(t)?.apply(&w0)?;
            let discrepancy = lhs
                .values()
                .iter()
                .zip(rhs.values())
                .map(|(a, b): (&Complex<T>, &Complex<T>)| (a - b).norm_sqr())
                .sum::<T>()
                .sqrt();
            Ok(EvolutionPoint { time: t, discrepancy, tolerance })
        })
        .collect()
}

/// Smallest singular value relative to the largest; zero for the zero matrix.
pub fn relative_smallest_singular_value<T: Real>(op: &FiniteOperator<T>) -> T {
    let sv = to_matrix(op).matrix().singular_values();
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > T::zero() => lo / hi,
        _ => T::zero(),
    }
}

/// Invertibility at desk scale: relative smallest singular value above `1e-10`.
pub fn is_invertible<T: Real>(op: &FiniteOperator<T>) -> bool {
    relative_smallest_singular_value(op) > T::of(1e-10)
}
