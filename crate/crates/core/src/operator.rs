//! Finite difference operators in shift-coefficient form
//! `(A u)(x) = sum_j A_j(x) u(x + h j)` with step-function coefficients.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::grid::{block_adjoint_into, block_mul_add, lcm, CellIndex, GridSpec, Rational, StepFunction};
use crate::scalar::Real;

/// Element of the finite algebra on one grid. Shifts are flat indices into
/// `Z_p^N`; coefficients that are exactly zero are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteOperator<T> {
    grid: GridSpec,
    terms: BTreeMap<usize, StepFunction<T>>,
}

impl<T: Real> FiniteOperator<T> {
    pub fn zero(grid: GridSpec) -> Self {
        Self { grid, terms: BTreeMap::new() }
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self::multiplication(StepFunction::identity(grid))
    }

    /// Builds an operator from `(shift, coefficient)` pairs. Shifts are reduced
    /// mod `p`; repeated shifts are summed.
    pub fn from_terms(grid: GridSpec, terms: impl IntoIterator<Item = (Vec<i64>, StepFunction<T>)>) -> Result<Self> {
        let mut out = Self::zero(grid);
        for (shift, coeff) in terms {
            grid.ensure_same(coeff.grid())?;
            let key = grid.flatten(&grid.shift(&shift)?);
            out.accumulate(key, coeff)?;
        }
        out.prune();
        Ok(out)
    }

    pub(crate) fn from_flat_terms(grid: GridSpec, terms: BTreeMap<usize, StepFunction<T>>) -> Self {
        let mut out = Self { grid, terms };
        out.prune();
        out
    }

    /// Finite derivative `(u(x + h e_axis) - u(x)) / h`; `axis` is 1-based.
    pub fn derivative(grid: GridSpec, axis: usize, step: Rational) -> Result<Self> {
        if axis == 0 || axis > grid.dim() {
            return Err(Error::InvalidAxis { axis, dim: grid.dim() });
        }
        if step.is_zero() {
            return Err(Error::ZeroStep);
        }
        let p = grid.p() as i64;
        let denom = *step.denom();
        if p % denom != 0 {
            return Err(Error::StepNotRepresentable { step, p: grid.p(), required: lcm(grid.p(), denom as usize) });
        }
        let cells = step.numer() * (p / denom);
        let mut shift = vec![0i64; grid.dim()];
        shift[axis - 1] = cells;
        let inv = T::of(*step.denom() as f64) / T::of(*step.numer() as f64);
        let forward = StepFunction::scalar(grid, Complex::new(inv, T::zero()));
        let backward = StepFunction::scalar(grid, Complex::new(-inv, T::zero()));
        Self::from_terms(grid, [(shift, forward), (vec![0; grid.dim()], backward)])
    }

    /// Multiplication by a step function.
    pub fn multiplication(coeff: StepFunction<T>) -> Self {
        let grid = *coeff.grid();
        let mut terms = BTreeMap::new();
        terms.insert(0, coeff);
        Self::from_flat_terms(grid, terms)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (CellIndex, &StepFunction<T>)> + '_ {
        self.terms.iter().map(|(k, v)| (self.grid.unflatten(*k), v))
    }

    pub(crate) fn flat_terms(&self) -> &BTreeMap<usize, StepFunction<T>> {
        &self.terms
    }

    pub fn coefficient(&self, shift: &CellIndex) -> Option<&StepFunction<T>> {
        self.terms.get(&self.grid.flatten(shift))
    }

    fn accumulate(&mut self, key: usize, coeff: StepFunction<T>) -> Result<()> {
        match self.terms.get_mut(&key) {
            Some(existing) => *existing = existing.add(&coeff)?,
            None => {
                self.terms.insert(key, coeff);
            }
        }
        Ok(())
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.accumulate(*k, c.clone())?;
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-Complex::<T>::one()))
    }

    pub fn scale(&self, alpha: Complex<T>) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (*k, c.scale(alpha))).collect();
        Self::from_flat_terms(self.grid, terms)
    }

    /// Composition `self ∘ other`:
    /// `(A B)_k(x) = sum_j A_j(x) B_{k-j}(x + h j)`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let grid = self.grid;
        let m = grid.size();
        let mm = m * m;
        let cells = grid.cell_count();
        let mut acc: BTreeMap<usize, Vec<Complex<T>>> = BTreeMap::new();
        for (&j, a) in &self.terms {
            for (&l, b) in &other.terms {
                let k = grid.add_flat(j, l);
                let out = acc.entry(k).or_insert_with(|| vec![Complex::zero(); cells * mm]);
                for cell in 0..cells {
                    let shifted = grid.add_flat(cell, j);
                    block_mul_add(&mut out[cell * mm..(cell + 1) * mm], a.block(cell), b.block(shifted), m);
                }
            }
        }
        let terms = acc.into_iter().map(|(k, data)| (k, StepFunction::from_raw(grid, data))).collect();
        Ok(Self::from_flat_terms(grid, terms))
    }

    /// Adjoint in `L^2`: `(A*)_k(x) = A_{-k}(x + h k)^*`.
    pub fn adjoint(&self) -> Self {
        let grid = self.grid;
        let m = grid.size();
        let mm = m * m;
        let cells = grid.cell_count();
        let terms = self
            .terms
            .iter()
            .map(|(&j, a)| {
                let k = grid.neg_flat(j);
                let mut data = vec![Complex::zero(); cells * mm];
                for cell in 0..cells {
                    block_adjoint_into(&mut data[cell * mm..(cell + 1) * mm], a.block(grid.add_flat(cell, k)), m);
                }
                (k, StepFunction::from_raw(grid, data))
            })
            .collect();
        Self::from_flat_terms(grid, terms)
    }

    /// Action on a discretized function.
    pub fn apply(&self, u: &GridVector<T>) -> Result<GridVector<T>> {
        self.grid.ensure_same(&u.grid)?;
        let grid = self.grid;
        let m = grid.size();
        let mut out = vec![Complex::zero(); grid.basis_dim()];
        for (&j, a) in &self.terms {
            for cell in 0..grid.cell_count() {
                let src = grid.add_flat(cell, j) * m;
                let block = a.block(cell);
                for r in 0..m {
                    let mut s = Complex::zero();
                    for c in 0..m {
                        s = s + block[r * m + c] * u.values[src + c];
                    }
                    out[cell * m + r] = out[cell * m + r] + s;
                }
            }
        }
        Ok(GridVector { grid, values: out })
    }
}

/// One factor `M D` of a product term: multiplication by `coeff` followed by
/// the finite derivative along `axis` with step `step`.
#[derive(Debug, Clone)]
pub struct PdeFactor<T> {
    pub coeff: StepFunction<T>,
    pub axis: usize,
    pub step: Rational,
}

/// `sum_n (prod_j M_jn D_jn) + M_00`, assembled on the coarsest grid that
/// carries every coefficient and step.
pub fn build_pde<T: Real>(terms: &[Vec<PdeFactor<T>>], zeroth: &StepFunction<T>) -> Result<FiniteOperator<T>> {
    let frame = *zeroth.grid();
    let mut p = frame.p();
    for f in terms.iter().flatten() {
        if !f.coeff.grid().same_frame(&frame) {
            return Err(Error::GridMismatch { left: frame, right: *f.coeff.grid() });
        }
        if f.step.is_zero() {
            return Err(Error::ZeroStep);
        }
        p = lcm(lcm(p, f.coeff.grid().p()), *f.step.denom() as usize);
    }
    let grid = frame.with_p(p)?;
    let mut total = FiniteOperator::multiplication(zeroth.refine(p)?);
    for product in terms {
        let mut acc = FiniteOperator::identity(grid);
        for f in product {
            let m = FiniteOperator::multiplication(f.coeff.refine(p)?);
            let d = FiniteOperator::derivative(grid, f.axis, f.step)?;
            acc = acc.compose(&m)?.compose(&d)?;
        }
        total = total.add(&acc)?;
    }
    Ok(total)
}

/// Step function `u` in `L^2(T^N -> C^M)` in the normalized indicator basis:
/// entry `cell * M + m` is the coefficient of the unit-norm indicator of
/// `cell` in component `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridVector<T> {
    grid: GridSpec,
    values: Vec<Complex<T>>,
}

impl<T: Real> GridVector<T> {
    pub fn new(grid: GridSpec, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.basis_dim() {
            return Err(Error::DimensionMismatch { expected: grid.basis_dim(), actual: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self { grid, values: vec![Complex::zero(); grid.basis_dim()] }
    }

    /// Every basis coefficient equal to `value`.
    pub fn constant(grid: GridSpec, value: Complex<T>) -> Self {
        Self { grid, values: vec![value; grid.basis_dim()] }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn norm(&self) -> T {
        self.values.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Same `L^2` function on the grid with `q` cells per axis. Coefficients
    /// pick up the factor `(p/q)^(N/2)` so the norm is unchanged.
    pub fn refine(&self, q: usize) -> Result<Self> {
        let p = self.grid.p();
        if q == 0 || !q.is_multiple_of(p) {
            return Err(Error::NotDivisible { p, q });
        }
        let fine = self.grid.with_p(q)?;
        let ratio = q / p;
        let m = fine.size();
        let factor = T::of((p as f64 / q as f64).powf(fine.dim() as f64 / 2.0));
        let mut values = Vec::with_capacity(fine.basis_dim());
        for child in fine.cells() {
            let parent = self.grid.cell(&child.coords().iter().map(|c| c / ratio).collect::<Vec<_>>())?;
            let base = self.grid.flatten(&parent) * m;
            values.extend(self.values[base..base + m].iter().map(|z| z * factor));
        }
        Ok(Self { grid: fine, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MatrixValue;

    type C = Complex<f64>;
    type Op = FiniteOperator<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn g(n: usize, m: usize, p: usize) -> GridSpec {
        GridSpec::new(n, m, p).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn scalar_terms(op: &Op) -> Vec<(Vec<usize>, Vec<C>)> {
        op.terms().map(|(s, f)| (s.coords().to_vec(), f.raw().to_vec())).collect()
    }

    #[test]
    fn derivative_on_two_cells() {
        let d = Op::derivative(g(1, 1, 2), 1, r(1, 2)).unwrap();
        assert_eq!(scalar_terms(&d), vec![(vec![0], vec![c(-2.0, 0.0); 2]), (vec![1], vec![c(2.0, 0.0); 2])]);
    }

    #[test]
    fn negative_step_folds_mod_p() {
        let d = Op::derivative(g(2, 1, 3), 2, r(-1, 3)).unwrap();
        assert_eq!(
            scalar_terms(&d),
            vec![(vec![0, 0], vec![c(3.0, 0.0); 9]), (vec![0, 2], vec![c(-3.0, 0.0); 9])]
        );
    }

    #[test]
    fn unrepresentable_step_carries_refinement_hint() {
        let err = Op::derivative(g(1, 1, 2), 1, r(1, 4)).unwrap_err();
        assert_eq!(err, Error::StepNotRepresentable { step: r(1, 4), p: 2, required: 4 });
        assert!(matches!(Op::derivative(g(1, 1, 2), 2, r(1, 2)), Err(Error::InvalidAxis { .. })));
        assert!(matches!(Op::derivative(g(1, 1, 2), 1, r(0, 1)), Err(Error::ZeroStep)));
    }

    #[test]
    fn whole_period_step_is_zero_operator() {
        assert!(Op::derivative(g(1, 1, 2), 1, r(1, 1)).unwrap().is_zero());
    }

    #[test]
    fn multiplication_examples() {
        let grid = g(1, 1, 2);
        assert_eq!(Op::multiplication(StepFunction::identity(grid)), Op::identity(grid));
        let chi = StepFunction::from_values(grid, vec![MatrixValue::identity(1), MatrixValue::zeros(1)]).unwrap();
        let op = Op::multiplication(chi.clone());
        assert_eq!(scalar_terms(&op), vec![(vec![0], vec![c(1.0, 0.0), c(0.0, 0.0)])]);
        let two = StepFunction::scalar(grid, c(2.0, 1.0));
        let prod = Op::multiplication(chi.clone()).compose(&Op::multiplication(two.clone())).unwrap();
        assert_eq!(prod, Op::multiplication(chi.mul(&two).unwrap()));
    }

    #[test]
    fn add_and_scale_basics() {
        let grid = g(1, 1, 2);
        let d = Op::derivative(grid, 1, r(1, 2)).unwrap();
        assert_eq!(d.add(&Op::zero(grid)).unwrap(), d);
        assert!(d.add(&d.scale(c(-1.0, 0.0))).unwrap().is_zero());
        assert!(matches!(d.add(&Op::zero(g(1, 1, 3))), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn second_difference_wraps_on_two_cells() {
        let grid = g(1, 1, 2);
        let d = Op::derivative(grid, 1, r(1, 2)).unwrap();
        assert_eq!(d.compose(&Op::identity(grid)).unwrap(), d);
        let dd = d.compose(&d).unwrap();
        assert_eq!(scalar_terms(&dd), vec![(vec![0], vec![c(8.0, 0.0); 2]), (vec![1], vec![c(-8.0, 0.0); 2])]);
    }

    #[test]
    fn adjoint_examples() {
        let grid = g(1, 2, 3);
        let s = StepFunction::from_fn(grid, |cell| {
            let k = cell.coords()[0] as f64;
            MatrixValue::new(2, vec![c(k, 1.0), c(2.0, -k), c(0.5, 0.0), c(-1.0, k)]).unwrap()
        })
        .unwrap();
        assert_eq!(Op::multiplication(s.clone()).adjoint(), Op::multiplication(s.adjoint()));
        let d = Op::derivative(g(1, 1, 2), 1, r(1, 2)).unwrap();
        assert_eq!(d.adjoint(), d);
        let mixed = Op::multiplication(s).compose(&Op::derivative(grid, 1, r(1, 3)).unwrap()).unwrap();
        assert_eq!(mixed.adjoint().adjoint(), mixed);
    }

    #[test]
    fn adjoint_of_forward_difference_is_backward() {
        // (D_h)* = -D_{-h} on the torus.
        let grid = g(1, 1, 5);
        let fwd = Op::derivative(grid, 1, r(1, 5)).unwrap();
        let bwd = Op::derivative(grid, 1, r(-1, 5)).unwrap();
        assert_eq!(fwd.adjoint(), bwd.scale(c(-1.0, 0.0)));
    }

    #[test]
    fn apply_examples() {
        let grid = g(1, 1, 2);
        let u = GridVector::new(grid, vec![c(1.0, 2.0), c(-3.0, 0.5)]).unwrap();
        assert_eq!(Op::identity(grid).apply(&u).unwrap(), u);
        let d = Op::derivative(grid, 1, r(1, 2)).unwrap();
        assert_eq!(d.apply(&GridVector::constant(grid, c(0.7, -0.2))).unwrap(), GridVector::zeros(grid));
        let du = d.apply(&u).unwrap();
        assert_eq!(du.values(), &[c(-8.0, -3.0), c(8.0, 3.0)]);
    }

    #[test]
    fn build_pde_examples() {
        let unit = g(1, 1, 1);
        let ident = StepFunction::identity(unit);
        let zero = StepFunction::zeros(unit);
        let single = build_pde(&[vec![PdeFactor { coeff: ident.clone(), axis: 1, step: r(1, 2) }]], &zero).unwrap();
        assert_eq!(single, Op::derivative(g(1, 1, 2), 1, r(1, 2)).unwrap());

        let s = StepFunction::scalar(g(1, 1, 3), c(1.5, 0.0));
        assert_eq!(build_pde(&[], &s).unwrap(), Op::multiplication(s.clone()));

        let mixed = build_pde(
            &[vec![
                PdeFactor { coeff: ident.clone(), axis: 1, step: r(1, 2) },
                PdeFactor { coeff: ident, axis: 1, step: r(1, 3) },
            ]],
            &zero,
        )
        .unwrap();
        assert_eq!(mixed.grid().p(), 6);
        let six = g(1, 1, 6);
        let want = Op::derivative(six, 1, r(1, 2)).unwrap().compose(&Op::derivative(six, 1, r(1, 3)).unwrap()).unwrap();
        assert_eq!(mixed, want);
    }

    #[test]
    fn grid_vector_refine_is_isometric() {
        let grid = g(2, 1, 2);
        let u = GridVector::new(grid, vec![c(1.0, 0.0), c(0.0, 2.0), c(-1.0, 1.0), c(3.0, 0.0)]).unwrap();
        let fine = u.refine(6).unwrap();
        assert!((fine.norm() - u.norm()).abs() < 1e-14);
        assert!(matches!(u.refine(3), Err(Error::NotDivisible { .. })));
    }
}
