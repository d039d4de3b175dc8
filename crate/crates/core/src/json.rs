//! JSON encodings. Complex numbers are `[re, im]` pairs; step functions list
//! one row-major `M x M` block per cell in flat cell order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, StepFunction};
use crate::linalg::ComplexMatrix;
use crate::matrix_rep::{RepMatrix, Spectrum};
use crate::operator::FiniteOperator;
use crate::scalar::{cplx, Real};

pub type ComplexJson = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunctionJson {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "M")]
    pub size: usize,
    pub p: usize,
    pub values: Vec<Vec<ComplexJson>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub shift: Vec<usize>,
    pub coeff: StepFunctionJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub grid: GridSpec,
    pub terms: Vec<TermJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepMatrixJson {
    pub grid: GridSpec,
    pub dim: usize,
    pub matrix: Vec<Vec<ComplexJson>>,
}

fn pair<T: Real>(z: &num_complex::Complex<T>) -> ComplexJson {
    [z.re.as_f64(), z.im.as_f64()]
}

pub fn step_function_to_json<T: Real>(f: &StepFunction<T>) -> StepFunctionJson {
    let g = f.grid();
    let mm = g.size() * g.size();
    StepFunctionJson {
        dim: g.dim(),
        size: g.size(),
        p: g.p(),
        values: f.raw().chunks(mm).map(|block| block.iter().map(pair).collect()).collect(),
    }
}

pub fn step_function_from_json<T: Real>(j: &StepFunctionJson) -> Result<StepFunction<T>> {
    let grid = GridSpec::new(j.dim, j.size, j.p)?;
    if j.values.len() != grid.cell_count() {
        return Err(Error::Malformed(format!("expected {} cell values, got {}", grid.cell_count(), j.values.len())));
    }
    let mm = grid.size() * grid.size();
    let mut data = Vec::with_capacity(grid.cell_count() * mm);
    for block in &j.values {
        if block.len() != mm {
            return Err(Error::Malformed(format!("expected {mm} entries per cell, got {}", block.len())));
        }
        data.extend(block.iter().map(|[re, im]| cplx::<T>(*re, *im)));
    }
    Ok(StepFunction::from_raw(grid, data))
}

pub fn operator_to_json<T: Real>(op: &FiniteOperator<T>) -> OperatorJson {
    OperatorJson {
        grid: *op.grid(),
        terms: op
            .terms()
            .map(|(shift, coeff)| TermJson { shift: shift.coords().to_vec(), coeff: step_function_to_json(coeff) })
            .collect(),
    }
}

pub fn operator_from_json<T: Real>(j: &OperatorJson) -> Result<FiniteOperator<T>> {
    let grid = GridSpec::new(j.grid.dim(), j.grid.size(), j.grid.p())?;
    let mut terms = Vec::with_capacity(j.terms.len());
    for t in &j.terms {
        if t.shift.len() != grid.dim() || t.shift.iter().any(|&s| s >= grid.p()) {
            return Err(Error::Malformed(format!("shift {:?} is not a cell of {grid}", t.shift)));
        }
        let coeff = step_function_from_json(&t.coeff)?;
        let shift = t.shift.iter().map(|&s| s as i64).collect();
        terms.push((shift, coeff));
    }
    FiniteOperator::from_terms(grid, terms)
}

pub fn matrix_to_json<T: Real>(m: &ComplexMatrix<T>) -> Vec<Vec<ComplexJson>> {
    (0..m.rows()).map(|r| m.row(r).iter().map(pair).collect()).collect()
}

pub fn matrix_from_json<T: Real>(rows: &[Vec<ComplexJson>]) -> Result<ComplexMatrix<T>> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Malformed("ragged matrix".into()));
    }
    let data = rows.iter().flatten().map(|[re, im]| cplx::<T>(*re, *im)).collect();
    ComplexMatrix::from_row_major(n, cols, data)
}

pub fn rep_matrix_to_json<T: Real>(b: &RepMatrix<T>) -> RepMatrixJson {
    RepMatrixJson { grid: *b.grid(), dim: b.dim(), matrix: matrix_to_json(b.matrix()) }
}

pub fn spectrum_to_json<T: Real>(s: &Spectrum<T>) -> Vec<ComplexJson> {
    s.eigenvalues().iter().map(pair).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Rational;
    use crate::matrix_rep::to_matrix;

    #[test]
    fn operator_round_trip() {
        let g = GridSpec::new(2, 1, 2).unwrap();
        let d = FiniteOperator::<f64>::derivative(g, 2, Rational::new(-1, 2)).unwrap();
        let j = operator_to_json(&d);
        let text = serde_json::to_string(&j).unwrap();
        assert!(text.starts_with(r#"{"grid":{"N":2,"M":1,"p":2},"terms":[{"shift":[0,0]"#), "{text}");
        let back: OperatorJson = serde_json::from_str(&text).unwrap();
        assert_eq!(operator_from_json::<f64>(&back).unwrap(), d);
    }

    #[test]
    fn step_function_layout() {
        let g = GridSpec::new(1, 2, 2).unwrap();
        let f = StepFunction::<f64>::identity(g);
        let j = step_function_to_json(&f);
        assert_eq!(j.values[1], vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
        assert_eq!(step_function_from_json::<f64>(&j).unwrap(), f);
        let mut bad = j.clone();
        bad.values.pop();
        assert!(step_function_from_json::<f64>(&bad).is_err());
    }

    #[test]
    fn malformed_operator_rejected() {
        let g = GridSpec::new(1, 1, 2).unwrap();
        let mut j = operator_to_json(&FiniteOperator::<f64>::identity(g));
        j.terms[0].shift = vec![5];
        assert!(operator_from_json::<f64>(&j).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let g = GridSpec::new(1, 1, 3).unwrap();
        let b = to_matrix(&FiniteOperator::<f64>::derivative(g, 1, Rational::new(1, 3)).unwrap());
        let rows = matrix_to_json(b.matrix());
        assert_eq!(rows[0][1], [3.0, 0.0]);
        assert_eq!(&matrix_from_json::<f64>(&rows).unwrap(), b.matrix());
        assert_eq!(rep_matrix_to_json(&b).dim, 3);
    }
}
