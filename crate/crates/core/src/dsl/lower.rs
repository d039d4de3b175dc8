use std::collections::BTreeMap;

use num_complex::Complex;

use super::ast::{CoeffDef, CoeffValue, OperatorExpr};
use crate::error::{Error, Result};
use crate::grid::{lcm, GridSpec, MatrixValue, StepFunction};
use crate::operator::FiniteOperator;
use crate::scalar::Real;

fn referenced<'a>(expr: &OperatorExpr, env: &'a BTreeMap<String, CoeffDef>) -> Result<Vec<&'a CoeffDef>> {
    expr.coefficient_names()
        .into_iter()
        .map(|name| env.get(name).ok_or_else(|| Error::Lower(format!("unknown coefficient `{name}`"))))
        .collect()
}

/// Smallest `p` on which every step and every referenced box endpoint is a
/// multiple of `1/p`.
pub fn minimal_p(expr: &OperatorExpr, env: &BTreeMap<String, CoeffDef>) -> Result<usize> {
    let mut p = 1usize;
    expr.visit(&mut |e| {
        if let OperatorExpr::Deriv { step, .. } = e {
            p = lcm(p, step.denom().unsigned_abs() as usize);
        }
    });
    for def in referenced(expr, env)? {
        for b in &def.boxes {
            for iv in &b.intervals {
                p = lcm(p, iv.lo.denom().unsigned_abs() as usize);
                p = lcm(p, iv.hi.denom().unsigned_abs() as usize);
            }
        }
    }
    Ok(p)
}

/// Validates axes and coefficient shapes against `(N, M)` and returns the grid
/// the expression lowers to.
pub fn minimal_grid(expr: &OperatorExpr, env: &BTreeMap<String, CoeffDef>, dim: usize, size: usize) -> Result<GridSpec> {
    let mut bad_axis = None;
    expr.visit(&mut |e| {
        if let OperatorExpr::Deriv { axis, .. } = e {
            if *axis == 0 || *axis > dim {
                bad_axis.get_or_insert(*axis);
            }
        }
    });
    if let Some(axis) = bad_axis {
        return Err(Error::InvalidAxis { axis, dim });
    }
    for def in referenced(expr, env)? {
        if let Some(d) = def.dim() {
            if d != dim {
                return Err(Error::Lower(format!("coefficient `{}` has {d}-dimensional boxes but N = {dim}", def.name)));
            }
        }
        for b in &def.boxes {
            if let Some(m) = b.value.size() {
                if m != size {
                    return Err(Error::Lower(format!("coefficient `{}` has {m}x{m} values but M = {size}", def.name)));
                }
            }
        }
    }
    GridSpec::new(dim, size, minimal_p(expr, env)?)
}

fn matrix_value<T: Real>(value: &CoeffValue, size: usize) -> MatrixValue<T> {
    let conv = |c: &num_complex::Complex64| Complex::new(T::of(c.re), T::of(c.im));
    match value {
        CoeffValue::Scalar(c) => MatrixValue::scalar(size, conv(c)),
        CoeffValue::Matrix(rows) => MatrixValue::new(size, rows.iter().flatten().map(conv).collect())
            .expect("shape checked by minimal_grid"),
    }
}

/// Samples a coefficient at every cell center. Exact when box endpoints lie
/// on the grid.
pub fn rasterize<T: Real>(def: &CoeffDef, grid: GridSpec) -> Result<StepFunction<T>> {
    if def.dim().is_some_and(|d| d != grid.dim()) {
        return Err(Error::Lower(format!("coefficient `{}` does not match N = {}", def.name, grid.dim())));
    }
    if def.boxes.iter().any(|b| b.value.size().is_some_and(|m| m != grid.size())) {
        return Err(Error::Lower(format!("coefficient `{}` does not match M = {}", def.name, grid.size())));
    }
    let values: Vec<MatrixValue<T>> = def.boxes.iter().map(|b| matrix_value(&b.value, grid.size())).collect();
    StepFunction::from_fn(grid, |cell| {
        let x = grid.center(cell);
        let mut out = MatrixValue::zeros(grid.size());
        for (b, v) in def.boxes.iter().zip(&values) {
            if b.contains(&x) {
                out = if def.sum {
                    let entries = out.entries().iter().zip(v.entries()).map(|(a, b)| a + b).collect();
                    MatrixValue::new(grid.size(), entries).expect("same size")
                } else {
                    v.clone()
                };
            }
        }
        out
    })
}

/// Evaluates the expression on its minimal grid for `(N, M)`.
pub fn lower<T: Real>(
    expr: &OperatorExpr,
    env: &BTreeMap<String, CoeffDef>,
    dim: usize,
    size: usize,
) -> Result<FiniteOperator<T>> {
    let grid = minimal_grid(expr, env, dim, size)?;
    let mut cache = BTreeMap::new();
    eval(expr, env, grid, &mut cache)
}

fn eval<T: Real>(
    expr: &OperatorExpr,
    env: &BTreeMap<String, CoeffDef>,
    grid: GridSpec,
    cache: &mut BTreeMap<String, FiniteOperator<T>>,
) -> Result<FiniteOperator<T>> {
    Ok(match expr {
        OperatorExpr::Identity => FiniteOperator::identity(grid),
        OperatorExpr::Deriv { axis, step } => FiniteOperator::derivative(grid, *axis, *step)?,
        OperatorExpr::Mult(name) => match cache.get(name) {
            Some(op) => op.clone(),
            None => {
                let def = env.get(name).ok_or_else(|| Error::Lower(format!("unknown coefficient `{name}`")))?;
                let op = FiniteOperator::multiplication(rasterize(def, grid)?);
                cache.insert(name.clone(), op.clone());
                op
            }
        },
        OperatorExpr::Scale(c, e) => eval(e, env, grid, cache)?.scale(Complex::new(T::of(c.re), T::of(c.im))),
        OperatorExpr::Adjoint(e) => eval(e, env, grid, cache)?.adjoint(),
        OperatorExpr::Sum(items) => {
            let mut acc = FiniteOperator::zero(grid);
            for e in items {
                acc = acc.add(&eval(e, env, grid, cache)?)?;
            }
            acc
        }
        OperatorExpr::Product(items) => {
            let mut acc = FiniteOperator::identity(grid);
            for e in items {
                acc = acc.compose(&eval(e, env, grid, cache)?)?;
            }
            acc
        }
    })
}
