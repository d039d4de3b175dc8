//! Seeded invariant suite behind the `verify` command.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::digit_unitary::{digits, CellPermutation};
use crate::dsl::{parse_expr, OperatorExpr};
use crate::error::Result;
use crate::grid::{GridSpec, Rational};
use crate::isomorphism::{is_invertible, ode_to_pde, pde_to_ode};
use crate::matrix_rep::{from_matrix, to_matrix};
use crate::operator::FiniteOperator;
use crate::refinement::embed;
use crate::sample;

type Op = FiniteOperator<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check { name, passed, detail },
        Err(e) => Check { name, passed: false, detail: format!("error: {e}") },
    }
}

fn random_grid(rng: &mut ChaCha8Rng) -> GridSpec {
    let dim = rng.gen_range(1..=2);
    let size = rng.gen_range(1..=2);
    let p = [2, 3, 4, 6][rng.gen_range(0..4)];
    GridSpec::new(dim, size, p).expect("small grid")
}

fn representation_laws(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut exact = true;
    for _ in 0..trials {
        let g = random_grid(rng);
        let a: Op = sample::operator(rng, g, 3);
        let b: Op = sample::operator(rng, g, 3);
        let (ma, mb) = (to_matrix(&a), to_matrix(&b));
        exact &= to_matrix(&a.add(&b)?).matrix() == &(ma.matrix() + mb.matrix());
        exact &= to_matrix(&a.adjoint()).matrix() == &ma.matrix().adjoint();
        let prod = ma.matrix().matmul(mb.matrix())?;
        let dev = (to_matrix(&a.compose(&b)?).matrix() - &prod).max_abs();
        worst = worst.max(dev / (ma.matrix().max_abs() * mb.matrix().max_abs() * g.basis_dim() as f64).max(1.0));
    }
    Ok((exact && worst <= 1e-12, format!("{trials} pairs, sums/adjoints exact: {exact}, product rel. dev {worst:.2e}")))
}

fn bijectivity(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut ok = true;
    for _ in 0..trials {
        let g = random_grid(rng);
        let a: Op = sample::operator(rng, g, g.cell_count());
        let b = to_matrix(&a);
        let back = from_matrix(g, b.matrix())?;
        ok &= back == a && to_matrix(&back).matrix() == b.matrix();
    }
    Ok((ok, format!("{trials} operators round-trip bit-exactly: {ok}")))
}

fn embedding(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut functorial = true;
    for _ in 0..trials {
        let g = GridSpec::new(rng.gen_range(1..=2), 1, 2)?;
        let a: Op = sample::operator(rng, g, 2);
        let b: Op = sample::operator(rng, g, 2);
        let lhs = to_matrix(&embed(&a.compose(&b)?, 4)?);
        let rhs = to_matrix(&embed(&a, 4)?.compose(&embed(&b, 4)?)?);
        worst = worst.max((lhs.matrix() - rhs.matrix()).max_abs());
        functorial &= embed(&embed(&a, 4)?, 8)? == embed(&a, 8)?;
        functorial &= embed(&a.adjoint(), 4)? == embed(&a, 4)?.adjoint();
        functorial &= embed(&Op::identity(g), 4)? == Op::identity(g.with_p(4)?);
    }
    Ok((functorial && worst <= 1e-12, format!("{trials} pairs, unital/*/functorial: {functorial}, product dev {worst:.2e}")))
}

fn digit_machinery(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut ok = true;
    for _ in 0..trials {
        let (dim, size, depth) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=4));
        let x = sample::rational(rng, 1000);
        let e = digits(x, dim, size, depth)?;
        let bound = Rational::new(1, (size * crate::refinement::factorial(depth).unwrap().pow(dim as u32)) as i64);
        ok &= e.residual >= Rational::from_integer(0) && e.residual < bound;
    }
    for dim in 1..=2 {
        for size in 1..=2 {
            for level in 1..=3 {
                let perm = CellPermutation::new(dim, size, level)?;
                let mut seen = vec![false; perm.len()];
                perm.forward().iter().for_each(|&b| seen[b] = true);
                ok &= seen.iter().all(|&s| s);
            }
        }
    }
    Ok((ok, format!("{trials} expansions in range, permutations n <= 3 bijective: {ok}")))
}

fn conjugation(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for i in 0..trials {
        let g = GridSpec::new(2, rng.gen_range(1..=2), 2)?;
        let a: Op = if i % 4 == 3 {
            Op::derivative(g, 1, Rational::new(1, 2))?
        } else {
            sample::operator(rng, g, 2)
        };
        let r = pde_to_ode(&a, 2)?;
        ok &= r.spectral_report.passed();
        if let Some(d) = r.spectral_report.max_deviation {
            worst = worst.max(d);
        }
        let back = ode_to_pde(&r.ode, 2, g.size(), 2)?;
        ok &= (to_matrix(&back).matrix() - to_matrix(&a).matrix()).max_abs() <= 1e-13;
        ok &= is_invertible(&a) == is_invertible(&r.ode);
    }
    Ok((ok, format!("{trials} operators at level 2, max spectral dev {worst:.2e}")))
}

fn dsl_round_trip(rng: &mut ChaCha8Rng, trials: usize) -> Result<(bool, String)> {
    let mut ok = true;
    for _ in 0..trials {
        let e = random_expr(rng, 4);
        ok &= parse_expr(&e.to_string()).map(|back| back == e).unwrap_or(false);
    }
    Ok((ok, format!("{trials} random expressions print/parse round-trip: {ok}")))
}

/// Random AST of the given depth that the printer and parser agree on.
pub fn random_expr<R: Rng + ?Sized>(rng: &mut R, depth: usize) -> OperatorExpr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..3) {
            0 => OperatorExpr::deriv(
                rng.gen_range(1..=3),
                Rational::new(rng.gen_range(1..=6) * if rng.gen_bool(0.5) { 1 } else { -1 }, rng.gen_range(1..=6)),
            ),
            1 => OperatorExpr::mult(["S", "T", "coeff_2"][rng.gen_range(0..3)]),
            _ => OperatorExpr::Identity,
        };
    }
    let children = |rng: &mut R| (0..rng.gen_range(2..=3)).map(|_| random_expr(rng, depth - 1)).collect();
    match rng.gen_range(0..4) {
        0 => OperatorExpr::Sum(children(rng)),
        1 => OperatorExpr::Product(children(rng)),
        2 => {
            let c = Complex64::new(rng.gen_range(-4..=4) as f64 / 4.0, rng.gen_range(-1.0..1.0));
            OperatorExpr::scale(c, random_expr(rng, depth - 1))
        }
        _ => OperatorExpr::adjoint(random_expr(rng, depth - 1)),
    }
}

/// Runs every invariant group with a fixed seed.
pub fn run_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        check("representation laws", representation_laws(&mut rng, 50)),
        check("matrix bijectivity", bijectivity(&mut rng, 30)),
        check("embedding", embedding(&mut rng, 20)),
        check("digit machinery", digit_machinery(&mut rng, 200)),
        check("conjugation transport", conjugation(&mut rng, 12)),
        check("dsl round-trip", dsl_round_trip(&mut rng, 200)),
    ]
}
