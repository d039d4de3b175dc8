use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::grid::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorExpr {
    Sum(Vec<OperatorExpr>),
    Product(Vec<OperatorExpr>),
    Scale(Complex64, Box<OperatorExpr>),
    /// Finite derivative along a 1-based axis.
    Deriv { axis: usize, step: Rational },
    /// Multiplication by a named coefficient.
    Mult(String),
    Identity,
    Adjoint(Box<OperatorExpr>),
}

impl OperatorExpr {
    pub fn deriv(axis: usize, step: Rational) -> Self {
        Self::Deriv { axis, step }
    }

    pub fn mult(name: &str) -> Self {
        Self::Mult(name.to_string())
    }

    pub fn scale(c: Complex64, e: Self) -> Self {
        Self::Scale(c, Box::new(e))
    }

    pub fn adjoint(e: Self) -> Self {
        Self::Adjoint(Box::new(e))
    }

    /// Coefficient names referenced anywhere in the expression.
    pub fn coefficient_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Self::Mult(name) = e {
                if !out.contains(&name.as_str()) {
                    out.push(name.as_str());
                }
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Self)) {
        f(self);
        match self {
            Self::Sum(items) | Self::Product(items) => items.iter().for_each(|e| e.visit(f)),
            Self::Scale(_, e) | Self::Adjoint(e) => e.visit(f),
            Self::Deriv { .. } | Self::Mult(_) | Self::Identity => {}
        }
    }

    fn is_composite(&self) -> bool {
        matches!(self, Self::Sum(_) | Self::Product(_) | Self::Scale(..))
    }

    fn fmt_nested(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_composite() {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

pub(crate) fn fmt_complex(c: Complex64) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("({}{}{}i)", c.re, sign, c.im.abs())
}

/// Canonical form: composites nested inside other nodes are parenthesized,
/// scalars always print as `(a+bi)`.
impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Sum(items) | Self::Product(items) => {
                let sep = if matches!(self, Self::Sum(_)) { " + " } else { " * " };
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    e.fmt_nested(f)?;
                }
                Ok(())
            }
            Self::Scale(c, e) => {
                write!(f, "{} * ", fmt_complex(*c))?;
                e.fmt_nested(f)
            }
            Self::Deriv { axis, step } => write!(f, "D({axis},{step})"),
            Self::Mult(name) => write!(f, "M({name})"),
            Self::Identity => f.write_str("I"),
            Self::Adjoint(e) => write!(f, "adj({e})"),
        }
    }
}

pub fn print(expr: &OperatorExpr) -> String {
    expr.to_string()
}

/// Half-open interval `[lo, hi)` inside `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rational,
    pub hi: Rational,
}

impl Interval {
    pub fn contains(&self, x: Rational) -> bool {
        self.lo <= x && x < self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CoeffValue {
    /// `c` times the `M x M` identity.
    Scalar(Complex64),
    Matrix(Vec<Vec<Complex64>>),
}

impl CoeffValue {
    /// `Some(M)` for an explicit matrix.
    pub fn size(&self) -> Option<usize> {
        match self {
            Self::Scalar(_) => None,
            Self::Matrix(rows) => Some(rows.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub intervals: Vec<Interval>,
    pub value: CoeffValue,
}

impl BoxRegion {
    pub fn contains(&self, x: &[Rational]) -> bool {
        self.intervals.len() == x.len() && self.intervals.iter().zip(x).all(|(iv, &xi)| iv.contains(xi))
    }
}

/// Grid-free coefficient: boxes with values; later boxes overwrite earlier
/// ones unless `sum` is set, in which case overlapping values add.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffDef {
    pub name: String,
    pub sum: bool,
    pub boxes: Vec<BoxRegion>,
}

impl CoeffDef {
    pub fn dim(&self) -> Option<usize> {
        self.boxes.first().map(|b| b.intervals.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    /// `N` from a `grid` header.
    pub dim: Option<usize>,
    /// `M` from a `grid` header.
    pub size: Option<usize>,
    pub env: BTreeMap<String, CoeffDef>,
    pub expr: OperatorExpr,
}
