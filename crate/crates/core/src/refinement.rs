//! Embeddings of the finite algebra on a coarse grid into the algebra on a
//! finer one, and the ladders of grids they form.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::lcm;
use crate::operator::FiniteOperator;
use crate::scalar::Real;

/// Re-expresses `op` on the grid with `q` cells per axis. The operator acts
/// on `L^2` exactly as before: coefficients are refined and a shift of `j`
/// coarse cells becomes a shift of `(q/p) j` fine cells.
pub fn embed<T: Real>(op: &FiniteOperator<T>, q: usize) -> Result<FiniteOperator<T>> {
    let grid = *op.grid();
    let p = grid.p();
    if q == 0 || !q.is_multiple_of(p) {
        return Err(Error::NotDivisible { p, q });
    }
    if q == p {
        return Ok(op.clone());
    }
    let fine = grid.with_p(q)?;
    let ratio = q / p;
    let mut terms = BTreeMap::new();
    for (shift, coeff) in op.terms() {
        let scaled: Vec<usize> = shift.coords().iter().map(|c| c * ratio).collect();
        terms.insert(fine.flatten(&fine.cell(&scaled)?), coeff.refine(q)?);
    }
    Ok(FiniteOperator::from_flat_terms(fine, terms))
}

/// Embeds both operators on the grid with `lcm(p_a, p_b)` cells per axis.
pub fn common_refine<T: Real>(
    a: &FiniteOperator<T>,
    b: &FiniteOperator<T>,
) -> Result<(FiniteOperator<T>, FiniteOperator<T>)> {
    if !a.grid().same_frame(b.grid()) {
        return Err(Error::GridMismatch { left: *a.grid(), right: *b.grid() });
    }
    let q = lcm(a.grid().p(), b.grid().p());
    Ok((embed(a, q)?, embed(b, q)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ladder {
    /// `p_n = n!`
    Factorial,
    /// `p_n = q^n` for a prime `q`.
    PrimePower(u64),
    /// Explicit chain `p_1 | p_2 | ...`, validated on construction.
    Custom(Vec<usize>),
}

impl Ladder {
    pub fn prime_power(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidLadder(format!("{q} is not prime")));
        }
        Ok(Self::PrimePower(q))
    }

    pub fn custom(levels: Vec<usize>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidLadder("custom ladder needs at least one level".into()));
        }
        if levels[0] == 0 {
            return Err(Error::InvalidLadder("levels must be positive".into()));
        }
        for w in levels.windows(2) {
            if w[1] <= w[0] || w[1] % w[0] != 0 {
                return Err(Error::InvalidLadder(format!("{} does not strictly refine {}", w[1], w[0])));
            }
        }
        Ok(Self::Custom(levels))
    }

    /// Cells per axis at level `n` (1-based).
    pub fn level(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::InvalidLadder("levels are numbered from 1".into()));
        }
        let overflow = || Error::InvalidLadder(format!("level {n} overflows"));
        match self {
            Self::Factorial => factorial(n).ok_or_else(overflow),
            Self::PrimePower(q) => {
                let q = usize::try_from(*q).map_err(|_| overflow())?;
                q.checked_pow(n as u32).ok_or_else(overflow)
            }
            Self::Custom(levels) => levels
                .get(n - 1)
                .copied()
                .ok_or_else(|| Error::InvalidLadder(format!("level {n} beyond the {} stored levels", levels.len()))),
        }
    }

    /// Smallest level whose grid is a multiple of `p`, searching up to `max_level`.
    pub fn first_level_containing(&self, p: usize, max_level: usize) -> Option<usize> {
        (1..=max_level).map_while(|n| self.level(n).ok().map(|v| (n, v))).find(|(_, v)| v % p == 0).map(|(n, _)| n)
    }
}

impl fmt::Display for Ladder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Factorial => write!(f, "factorial"),
            Self::PrimePower(q) => write!(f, "{q}^n"),
            Self::Custom(levels) => {
                let parts: Vec<String> = levels.iter().map(|l| l.to_string()).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for Ladder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "factorial" {
            return Ok(Self::Factorial);
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let levels = rest
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| Error::InvalidLadder(format!("bad level {t:?}"))))
                .collect::<Result<Vec<_>>>()?;
            return Self::custom(levels);
        }
        if let Some(base) = s.strip_suffix("^n") {
            let q = base.trim().parse::<u64>().map_err(|_| Error::InvalidLadder(format!("bad base {base:?}")))?;
            return Self::prime_power(q);
        }
        Err(Error::InvalidLadder(format!("expected factorial | q^n | custom:a,b,..., got {s:?}")))
    }
}

pub fn factorial(n: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k))
}

pub(crate) fn is_prime(q: u64) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| !q.is_multiple_of(d))
}
