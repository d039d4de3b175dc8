//! Random instances for tests, the `verify` suite and benchmarks.

use num_complex::Complex;
use rand::seq::index::sample;
use rand::Rng;

use crate::grid::{GridSpec, MatrixValue, Rational, StepFunction};
use crate::operator::{FiniteOperator, GridVector};
use crate::scalar::Real;

/// Real and imaginary parts uniform in `[-1, 1)`.
pub fn complex<T: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<T> {
    Complex::new(T::of(rng.gen_range(-1.0..1.0)), T::of(rng.gen_range(-1.0..1.0)))
}

pub fn matrix_value<T: Real, R: Rng + ?Sized>(rng: &mut R, size: usize) -> MatrixValue<T> {
    MatrixValue::new(size, (0..size * size).map(|_| complex(rng)).collect()).expect("size * size entries")
}

pub fn step_function<T: Real, R: Rng + ?Sized>(rng: &mut R, grid: GridSpec) -> StepFunction<T> {
    StepFunction::from_fn(grid, |_| matrix_value(rng, grid.size())).expect("one value per cell")
}

/// Operator with `terms` distinct random shifts (capped at `p^N`) and dense
/// random coefficients.
pub fn operator<T: Real, R: Rng + ?Sized>(rng: &mut R, grid: GridSpec, terms: usize) -> FiniteOperator<T> {
    let cells = grid.cell_count();
    let picked = sample(rng, cells, terms.min(cells)).into_vec();
    let terms: Vec<(Vec<i64>, StepFunction<T>)> = picked
        .into_iter()
        .map(|flat| {
            let shift = grid.unflatten(flat).coords().iter().map(|&c| c as i64).collect();
            (shift, step_function(rng, grid))
        })
        .collect();
    FiniteOperator::from_terms(grid, terms).expect("coefficients share the grid")
}

pub fn vector<T: Real, R: Rng + ?Sized>(rng: &mut R, grid: GridSpec) -> GridVector<T> {
    GridVector::new(grid, (0..grid.basis_dim()).map(|_| complex(rng)).collect()).expect("basis_dim entries")
}

/// Rational in `[0, 1)` with denominator at most `max_den`.
pub fn rational<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> Rational {
    let den = rng.gen_range(1..=max_den.max(1));
    Rational::new(rng.gen_range(0..den), den)
}
