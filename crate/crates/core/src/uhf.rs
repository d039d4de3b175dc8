//! Supernatural numbers and the classification of the UHF algebras that the
//! finite operator algebras generate.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::refinement::is_prime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(u32),
    Infinite,
}

impl Exponent {
    fn add(self, other: Self) -> Self {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => Self::Finite(a + b),
            _ => Self::Infinite,
        }
    }

    fn times(self, n: u32) -> Self {
        match self {
            Self::Finite(a) => Self::Finite(a * n),
            Self::Infinite => Self::Infinite,
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => a.cmp(b),
            (Self::Finite(_), Self::Infinite) => Ordering::Less,
            (Self::Infinite, Self::Finite(_)) => Ordering::Greater,
            (Self::Infinite, Self::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Finite(k) => write!(f, "{k}"),
            Self::Infinite => write!(f, "inf"),
        }
    }
}

/// A formal product of primes with exponents in `{1, 2, ...} u {inf}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SupernaturalNumber {
    /// Every prime with infinite exponent.
    Universal,
    /// Keys are prime, exponents never zero.
    Explicit(BTreeMap<u64, Exponent>),
}

impl SupernaturalNumber {
    pub fn one() -> Self {
        Self::Explicit(BTreeMap::new())
    }

    /// `q^inf` for a prime `q`.
    pub fn prime_infinite(q: u64) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidSupernatural(format!("{q} is not prime")));
        }
        Ok(Self::Explicit(BTreeMap::from([(q, Exponent::Infinite)])))
    }

    /// Builds from `(prime, exponent)` pairs; zero exponents are dropped.
    pub fn from_factors(factors: impl IntoIterator<Item = (u64, Exponent)>) -> Result<Self> {
        let mut out = Self::one();
        for (q, e) in factors {
            if !is_prime(q) {
                return Err(Error::InvalidSupernatural(format!("{q} is not prime")));
            }
            if e != Exponent::Finite(0) {
                out = out.mul(&Self::Explicit(BTreeMap::from([(q, e)])));
            }
        }
        Ok(out)
    }

    /// Prime factorization of `m` by trial division.
    pub fn of_int(m: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidSupernatural("0 has no factorization".into()));
        }
        let mut map = BTreeMap::new();
        let mut rest = m;
        let mut d = 2u64;
        while d * d <= rest {
            let mut k = 0;
            while rest.is_multiple_of(d) {
                rest /= d;
                k += 1;
            }
            if k > 0 {
                map.insert(d, Exponent::Finite(k));
            }
            d += 1;
        }
        if rest > 1 {
            map.insert(rest, Exponent::Finite(1));
        }
        Ok(Self::Explicit(map))
    }

    pub fn is_universal(&self) -> bool {
        matches!(self, Self::Universal)
    }

    /// Exponent of `q`; `Finite(0)` when absent.
    pub fn exponent(&self, q: u64) -> Exponent {
        match self {
            Self::Universal => Exponent::Infinite,
            Self::Explicit(map) => map.get(&q).copied().unwrap_or(Exponent::Finite(0)),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        match (self, other) {
            (Self::Explicit(a), Self::Explicit(b)) => {
                let mut map = a.clone();
                for (&q, &e) in b {
                    let entry = map.entry(q).or_insert(Exponent::Finite(0));
                    *entry = entry.add(e);
                }
                Self::Explicit(map)
            }
            _ => Self::Universal,
        }
    }

    /// `self^n`; `n = 0` gives `1`.
    pub fn pow(&self, n: u32) -> Self {
        match self {
            _ if n == 0 => Self::one(),
            Self::Universal => Self::Universal,
            Self::Explicit(map) => Self::Explicit(map.iter().map(|(&q, &e)| (q, e.times(n))).collect()),
        }
    }

    pub fn divides(&self, other: &Self) -> bool {
        match (self, other) {
            (_, Self::Universal) => true,
            (Self::Universal, Self::Explicit(_)) => false,
            (Self::Explicit(a), Self::Explicit(_)) => a.iter().all(|(&q, &e)| e <= other.exponent(q)),
        }
    }
}

impl fmt::Display for SupernaturalNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Universal => write!(f, "universal"),
            Self::Explicit(map) if map.is_empty() => write!(f, "1"),
            Self::Explicit(map) => {
                let parts: Vec<String> = map.iter().map(|(q, e)| format!("{q}^{e}")).collect();
                write!(f, "{}", parts.join(" * "))
            }
        }
    }
}

impl FromStr for SupernaturalNumber {
    type Err = Error;

    /// Accepts `universal`, integers, and products like `2^inf * 3^2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("universal") {
            return Ok(Self::Universal);
        }
        let bad = |what: &str| Error::InvalidSupernatural(format!("cannot parse {what:?}"));
        let mut out = Self::one();
        for factor in s.split('*') {
            let factor = factor.trim();
            let part = match factor.split_once('^') {
                None => Self::of_int(factor.parse().map_err(|_| bad(factor))?)?,
                Some((base, exp)) => {
                    let base: u64 = base.trim().parse().map_err(|_| bad(factor))?;
                    let exp = match exp.trim() {
                        "inf" | "∞" => Exponent::Infinite,
                        k => Exponent::Finite(k.parse().map_err(|_| bad(factor))?),
                    };
                    if is_prime(base) {
                        Self::from_factors([(base, exp)])?
                    } else {
                        match exp {
                            Exponent::Finite(k) => Self::of_int(base)?.pow(k),
                            Exponent::Infinite => {
                                let primes = match Self::of_int(base)? {
                                    Self::Explicit(map) => map.into_keys().collect::<Vec<_>>(),
                                    Self::Universal => unreachable!(),
                                };
                                Self::from_factors(primes.into_iter().map(|q| (q, Exponent::Infinite)))?
                            }
                        }
                    }
                }
            };
            out = out.mul(&part);
        }
        Ok(out)
    }
}

/// Supernatural number of `H_{N,M}` built over a base UHF algebra: `M * base^N`.
pub fn classify(dim: u32, size: u64, base: &SupernaturalNumber) -> Result<SupernaturalNumber> {
    if dim == 0 || size == 0 {
        return Err(Error::InvalidSupernatural("N and M must be positive".into()));
    }
    Ok(SupernaturalNumber::of_int(size)?.mul(&base.pow(dim)))
}

/// CAR algebra iff the classified number is `2^inf`, i.e. `base = 2^inf` and `M = 2^m`.
pub fn is_car(_dim: u32, size: u64, base: &SupernaturalNumber) -> bool {
    let two_inf = SupernaturalNumber::Explicit(BTreeMap::from([(2, Exponent::Infinite)]));
    *base == two_inf && size.is_power_of_two()
}

/// Factorization of `n!` via Legendre's formula.
pub fn factorial_sn(n: u64) -> SupernaturalNumber {
    let map = (2..=n)
        .filter(|&q| is_prime(q))
        .map(|q| {
            let mut e = 0u32;
            let mut pk = q;
            while pk <= n {
                e += (n / pk) as u32;
                match pk.checked_mul(q) {
                    Some(next) => pk = next,
                    None => break,
                }
            }
            (q, Exponent::Finite(e))
        })
        .collect();
    SupernaturalNumber::Explicit(map)
}
