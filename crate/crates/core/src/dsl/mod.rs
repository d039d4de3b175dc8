//! A small language for finite differential operators and their step-function
//! coefficients. See the README for the grammar.

mod ast;
mod lexer;
mod lower;
mod parser;

pub use ast::{print, BoxRegion, CoeffDef, CoeffValue, Interval, OperatorExpr, Program};
pub use lower::{lower, minimal_grid, minimal_p, rasterize};
pub use parser::{parse, parse_expr};

use thiserror::Error;

/// Lexical or syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}
