//! Acceptance suite: one PASS/FAIL line per criterion. Every check compares the
//! library against an oracle computed independently inside this file.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use finop::dsl::{BoxRegion, CoeffDef, CoeffValue, Interval};
use finop::sample;
use finop::{
    classify, digits, embed, evolve_compare, factorial_sn, from_matrix, is_car, is_invertible, lower, ode_to_pde,
    parse_expr, pde_to_ode, to_matrix, CellPermutation, ComplexMatrix, Exponent, FiniteOperator, GridSpec,
    GridVector, OperatorExpr, Rational, Spectrum, SupernaturalNumber,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Op = FiniteOperator<f64>;
type Mat = ComplexMatrix<f64>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn grid(n: usize, m: usize, p: usize) -> GridSpec {
    GridSpec::new(n, m, p).unwrap()
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Dense matrix of `op` built column by column from `apply` on unit vectors.
fn matrix_by_action(op: &Op) -> Mat {
    let g = *op.grid();
    let k = g.basis_dim();
    let mut out = Mat::zeros(k, k);
    for col in 0..k {
        let mut e = vec![c(0.0); k];
        e[col] = c(1.0);
        let img = op.apply(&GridVector::new(g, e).unwrap()).unwrap();
        for (row, v) in img.values().iter().enumerate() {
            out[(row, col)] = *v;
        }
    }
    out
}

fn random_op(rng: &mut ChaCha8Rng, g: GridSpec) -> Op {
    let terms = rng.gen_range(1..=g.cell_count());
    sample::operator(rng, g, terms)
}

fn max_dev(a: &Mat, b: &Mat) -> f64 {
    (a - b).max_abs()
}

fn kron_identity(b: &Mat, r: usize) -> Mat {
    Mat::from_fn(b.rows() * r, b.cols() * r, |i, j| if i % r == j % r { b[(i / r, j / r)] } else { c(0.0) })
}

// 1. Representation laws ----------------------------------------------------

fn representation_laws(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let (mut exact, mut worst_rel, mut action_dev) = (true, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let g = grid(rng.gen_range(1..=2), rng.gen_range(1..=2), [2, 3, 4, 6][rng.gen_range(0..4)]);
        let terms = rng.gen_range(1..=g.cell_count());
        let a: Op = sample::operator(rng, g, terms);
        let b: Op = sample::operator(rng, g, terms);
        let alpha: Complex64 = sample::complex(rng);
        let (ma, mb) = (to_matrix(&a).into_matrix(), to_matrix(&b).into_matrix());
        exact &= to_matrix(&a.add(&b).unwrap()).matrix() == &(&ma + &mb);
        exact &= to_matrix(&a.scale(alpha)).matrix() == &ma.scale(alpha);
        exact &= to_matrix(&a.adjoint()).matrix() == &ma.adjoint();
        let prod = to_matrix(&a.compose(&b).unwrap()).into_matrix();
        let oracle = ma.matmul(&mb).unwrap();
        let scale = (ma.frobenius_norm() * mb.frobenius_norm()).max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(max_dev(&prod, &oracle) / scale);
        action_dev = action_dev.max(max_dev(&ma, &matrix_by_action(&a)));
    }
    let elapsed = start.elapsed();
    outcome(
        exact && worst_rel <= 1e-12 && action_dev == 0.0 && elapsed < Duration::from_secs(10),
        format!(
            "200 pairs; +, scalar, * exact: {exact}; product rel. dev {worst_rel:.1e}; action oracle dev {action_dev:.1e}",
        ),
    )
}

// 2. Bijectivity ------------------------------------------------------------

fn bijectivity(rng: &mut ChaCha8Rng) -> Outcome {
    let mut grids = Vec::new();
    for n in 1..=3usize {
        for m in 1..=96usize {
            for p in 1..=96usize {
                match p.checked_pow(n as u32).map(|c| c * m) {
                    Some(k) if k <= 96 => grids.push(grid(n, m, p)),
                    _ => break,
                }
            }
        }
    }
    let mut ok = true;
    let check = |g: GridSpec, rng: &mut ChaCha8Rng| {
        let a: Op = random_op(rng, g);
        let k = g.basis_dim();
        let b = Mat::from_fn(k, k, |_, _| if rng.gen_bool(0.7) { sample::complex(rng) } else { c(0.0) });
        let a_back = from_matrix(g, to_matrix(&a).matrix()).unwrap();
        let b_back = to_matrix(&from_matrix(g, &b).unwrap()).into_matrix();
        a_back == a && b_back == b
    };
    for &g in &grids {
        ok &= check(g, rng);
    }
    for _ in 0..100 {
        let g = grids[rng.gen_range(0..grids.len())];
        ok &= check(g, rng);
    }
    outcome(ok, format!("{} grids with K <= 96 plus 100 random instances, bit-exact: {ok}", grids.len()))
}

// 3. Embedding --------------------------------------------------------------

/// Reorders the fine basis as (coarse cell, component, sub-cell) so that an
/// embedded operator becomes `B_p (x) I_r` with `r = (q/p)^N`.
fn coarse_major(fine: GridSpec, p: usize) -> Vec<usize> {
    let ratio = fine.p() / p;
    let coarse = grid(fine.dim(), fine.size(), p);
    let r = ratio.pow(fine.dim() as u32);
    let sub = grid(fine.dim(), 1, ratio);
    let mut order = vec![0; fine.basis_dim()];
    for cell in fine.cells() {
        let cc: Vec<usize> = cell.coords().iter().map(|x| x / ratio).collect();
        let sc: Vec<usize> = cell.coords().iter().map(|x| x % ratio).collect();
        let cflat = coarse.flatten(&coarse.cell(&cc).unwrap());
        let sflat = sub.flatten(&sub.cell(&sc).unwrap());
        for a in 0..fine.size() {
            order[(cflat * fine.size() + a) * r + sflat] = fine.flatten(&cell) * fine.size() + a;
        }
    }
    order
}

fn embedding(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut hom_dev, mut spectra_ok, mut structural, mut functorial, mut cases) = (0.0f64, true, true, true, 0);
    for (p, q) in [(2usize, 4usize), (2, 6), (3, 6)] {
        for n in 1..=3usize {
            for m in 1..=2usize {
                let fine = grid(n, m, q);
                if fine.basis_dim() > 96 {
                    continue;
                }
                cases += 1;
                let g = grid(n, m, p);
                let a: Op = random_op(rng, g);
                let b: Op = random_op(rng, g);
                let (ea, eb) = (embed(&a, q).unwrap(), embed(&b, q).unwrap());
                let (ma, mb) = (to_matrix(&ea).into_matrix(), to_matrix(&eb).into_matrix());
                let prod = to_matrix(&embed(&a.compose(&b).unwrap(), q).unwrap()).into_matrix();
                hom_dev = hom_dev.max(max_dev(&prod, &ma.matmul(&mb).unwrap()));
                hom_dev = hom_dev.max(max_dev(to_matrix(&embed(&a.add(&b).unwrap(), q).unwrap()).matrix(), &(&ma + &mb)));
                hom_dev = hom_dev.max(max_dev(to_matrix(&embed(&a.adjoint(), q).unwrap()).matrix(), &ma.adjoint()));
                functorial &= embed(&Op::identity(g), q).unwrap() == Op::identity(fine);

                // Intertwining with the isometric refinement of vectors.
                let u = sample::vector(rng, g);
                let lhs = ea.apply(&u.refine(q).unwrap()).unwrap();
                let rhs = a.apply(&u).unwrap().refine(q).unwrap();
                hom_dev = hom_dev.max(lhs.values().iter().zip(rhs.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));

                let r = (q / p).pow(n as u32);
                let order = coarse_major(fine, p);
                let permuted = Mat::from_fn(ma.rows(), ma.cols(), |i, j| ma[(order[i], order[j])]);
                structural &= permuted == kron_identity(to_matrix(&a).matrix(), r);

                let coarse_spec = to_matrix(&a).spectrum().unwrap();
                let fine_spec = to_matrix(&ea).spectrum().unwrap();
                let tol = 1e-8 * ma.frobenius_norm();
                spectra_ok &= fine_spec.len() == coarse_spec.len() * r
                    && fine_spec.max_deviation(&coarse_spec.repeated(r)).is_some_and(|d| d <= tol);

                for s in [q * 2, q * 3] {
                    if grid(n, m, s).basis_dim() <= 96 {
                        functorial &= embed(&ea, s).unwrap() == embed(&a, s).unwrap();
                    }
                }
            }
        }
    }
    outcome(
        hom_dev <= 1e-12 && spectra_ok && structural && functorial,
        format!(
            "{cases} grid pairs; hom dev {hom_dev:.1e}; B(x)I similarity exact: {structural}; multiplicities (q/p)^N: {spectra_ok}; functorial/unital: {functorial}"
        ),
    )
}

// 4. Digit machinery --------------------------------------------------------

fn fact(n: usize) -> i64 {
    (1..=n as i64).product()
}

fn digit_machinery(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut residual_ok, mut recon_ok, mut aligned_ok) = (true, true, true);
    for _ in 0..500 {
        let (n, m, depth) = (rng.gen_range(1..=3usize), rng.gen_range(1..=3usize), rng.gen_range(1..=5usize));
        let den = rng.gen_range(1..=100_000i64);
        let x = Rational::new(rng.gen_range(0..den), den);
        let e = digits(x, n, m, depth).unwrap();
        let bound = Rational::new(1, m as i64 * fact(depth).pow(n as u32));
        residual_ok &= e.residual >= Rational::from_integer(0) && e.residual < bound;
        let mut sum = Rational::new(e.x1 as i64, m as i64) + e.residual;
        recon_ok &= (e.x1 as usize) < m;
        for (idx, &d) in e.digits.iter().enumerate() {
            let i = idx + 2;
            recon_ok &= (d as usize) < i.pow(n as u32);
            sum += Rational::new(d as i64, m as i64 * fact(i).pow(n as u32));
        }
        recon_ok &= sum == x;
        let k_total = m as i64 * fact(depth).pow(n as u32);
        let aligned = Rational::new(rng.gen_range(0..k_total), k_total);
        aligned_ok &= digits(aligned, n, m, depth).unwrap().residual == Rational::from_integer(0);
    }

    let (mut bijective, mut consistent, mut via_digits) = (true, true, true);
    for n in 1..=2usize {
        for m in 1..=2usize {
            let perms: Vec<CellPermutation> = (1..=3).map(|l| CellPermutation::new(n, m, l).unwrap()).collect();
            for (li, perm) in perms.iter().enumerate() {
                let level = li + 1;
                let mut seen = vec![false; perm.len()];
                for &b in perm.forward() {
                    seen[b] = true;
                }
                bijective &= seen.iter().all(|&s| s) && perm.forward().iter().enumerate().all(|(k, &b)| perm.inverse()[b] == k);
                // Interval k of [0, 1) starts at k / K; its digits name the cell.
                for k in 0..perm.len() {
                    let e = digits(Rational::new(k as i64, perm.len() as i64), n, m, level).unwrap();
                    let mut coords = vec![0usize; n];
                    let mut weight = fact(level) as usize;
                    for (idx, &d) in e.digits.iter().enumerate() {
                        let i = idx + 2;
                        weight /= i;
                        let mut rest = d as usize;
                        for axis in (0..n).rev() {
                            coords[axis] += (rest % i) * weight;
                            rest /= i;
                        }
                    }
                    let (comp, cell) = perm.target(k);
                    via_digits &= comp == e.x1 as usize && cell.coords() == coords.as_slice();
                }
                // Each level-(n+1) interval refines a level-n interval and its cell.
                if let Some(next) = perms.get(li + 1) {
                    let r = (level + 1).pow(n as u32);
                    for k in 0..next.len() {
                        let (comp_f, cell_f) = next.target(k);
                        let (comp_c, cell_c) = perm.target(k / r);
                        let parent: Vec<usize> = cell_f.coords().iter().map(|x| x / (level + 1)).collect();
                        consistent &= comp_f == comp_c && parent == cell_c.coords();
                    }
                }
            }
        }
    }
    let passed = residual_ok && recon_ok && aligned_ok && bijective && consistent && via_digits;
    outcome(
        passed,
        format!(
            "500 rationals: residual bound {residual_ok}, exact reconstruction {recon_ok}, aligned terminate {aligned_ok}; permutations n<=3: bijective {bijective}, digit-consistent {via_digits}, level-consistent {consistent}"
        ),
    )
}

// 5. Conjugation transport --------------------------------------------------

fn singular_operator(rng: &mut ChaCha8Rng, g: GridSpec) -> Op {
    let h = Rational::new(1, g.p() as i64);
    let d = Op::derivative(g, rng.gen_range(1..=g.dim()), h).unwrap();
    Op::multiplication(sample::step_function(rng, g)).compose(&d).unwrap()
}

fn transport(rng: &mut ChaCha8Rng) -> Outcome {
    let start = Instant::now();
    let (mut spectra_worst, mut spectra_ok, mut round_trip, mut similarity, mut inv_agree) = (0.0f64, true, 0.0f64, 0.0f64, true);
    let (mut singular_seen, mut invertible_seen) = (0, 0);
    let jobs: Vec<(usize, usize)> = (0..120).map(|i| if i < 100 { (2, [1, 2][i % 2]) } else { (3, [1, 2][i % 2]) }).collect();
    for (i, &(level, m)) in jobs.iter().enumerate() {
        let ps: &[usize] = if level == 2 { &[1, 2] } else { &[1, 2, 3, 6] };
        let g = grid(2, m, ps[rng.gen_range(0..ps.len())]);
        let a: Op = if i % 5 == 4 && g.p() > 1 {
            singular_operator(rng, g)
        } else {
            random_op(rng, g)
        };
        let result = pde_to_ode(&a, level).unwrap();
        let nfact = fact(level) as usize;
        let ea = embed(&a, nfact).unwrap();
        let b = to_matrix(&ea).into_matrix();

        let report = &result.spectral_report;
        spectra_ok &= report.passed();
        spectra_worst = spectra_worst.max(report.max_deviation.unwrap_or(f64::INFINITY) / b.frobenius_norm().max(1e-300));
        let trace_dev = (report.pde.eigenvalues().iter().sum::<Complex64>()
            - (0..b.rows()).map(|r| b[(r, r)]).sum::<Complex64>())
        .norm();
        spectra_ok &= trace_dev <= 1e-8 * b.frobenius_norm().max(1.0);

        let p = result.permutation.matrix::<f64>();
        let conj = p.adjoint().matmul(&b).unwrap().matmul(&p).unwrap();
        similarity = similarity.max(max_dev(&conj, to_matrix(&result.ode).matrix()));

        let back = ode_to_pde(&result.ode, 2, m, level).unwrap();
        round_trip = round_trip.max(max_dev(to_matrix(&back).matrix(), &b));

        let (lhs, rhs) = (is_invertible(&ea), is_invertible(&result.ode));
        inv_agree &= lhs == rhs;
        if lhs {
            invertible_seen += 1;
        } else {
            singular_seen += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        spectra_ok && round_trip <= 1e-13 && similarity <= 1e-13 && inv_agree && singular_seen > 0 && elapsed < Duration::from_secs(60),
        format!(
            "100 at n=2 + 20 at n=3; spectra {spectra_ok} (worst rel. dev {spectra_worst:.1e}); round-trip {round_trip:.1e}; P^-1BP dev {similarity:.1e}; invertibility agrees {inv_agree} ({invertible_seen} invertible, {singular_seen} singular)",
        ),
    )
}

// 6. Evolution correspondence -----------------------------------------------

/// Truncated Taylor series with squaring, independent of the library's Pade code.
fn expm_taylor(a: &Mat) -> Mat {
    let norm = a.norm_one();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a.scale(c(0.5f64.powi(s)));
    let mut term = Mat::identity(a.rows());
    let mut sum = term.clone();
    for k in 1..30 {
        term = term.matmul(&scaled).unwrap().scale(c(1.0 / k as f64));
        sum = &sum + &term;
    }
    for _ in 0..s {
        sum = sum.matmul(&sum).unwrap();
    }
    sum
}

fn evolution(rng: &mut ChaCha8Rng) -> Outcome {
    let (mut ok, mut worst, mut exp_dev) = (true, 0.0f64, 0.0f64);
    for i in 0..20 {
        let g = grid(2, 1, [1, 2][i % 2]);
        let a: Op = random_op(rng, g);
        let u0 = sample::vector(rng, grid(2, 1, 2));
        let points = evolve_compare(&a, &u0, &[0.1, 1.0], 2).unwrap();
        for pt in &points {
            ok &= pt.passed();
            worst = worst.max(pt.discrepancy / u0.norm());
        }
        let b = to_matrix(&embed(&a, 2).unwrap());
        let lib = b.exp(1.0).unwrap().into_matrix();
        exp_dev = exp_dev.max(max_dev(&lib, &expm_taylor(b.matrix())) / lib.max_abs().max(1.0));
    }
    // At (N=2, M=1, n=2) the permutation is the identity; these frames are not.
    let mut extra_worst = 0.0f64;
    for i in 0..10 {
        let (m, level, p) = if i % 2 == 0 { (2, 2, 2) } else { (1, 3, [2, 3, 6][i % 3]) };
        let a: Op = random_op(rng, grid(2, m, p));
        let perm = CellPermutation::new(2, m, level).unwrap();
        ok &= perm.forward().iter().enumerate().any(|(k, &b)| k != b);
        let u0 = sample::vector(rng, perm.pde_grid());
        for pt in evolve_compare(&a, &u0, &[0.1, 1.0], level).unwrap() {
            ok &= pt.passed();
            extra_worst = extra_worst.max(pt.discrepancy / u0.norm());
        }
    }
    outcome(
        ok && exp_dev <= 1e-10,
        format!(
            "20 operators at t in {{0.1, 1.0}}: worst rel. discrepancy {worst:.1e} (+10 non-trivial frames: {extra_worst:.1e}); exp vs Taylor oracle {exp_dev:.1e}"
        ),
    )
}

// 7. UHF classification -----------------------------------------------------

fn trial_division(mut n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut d = 2;
    while n > 1 {
        while n.is_multiple_of(d) {
            *out.entry(d).or_insert(0) += 1;
            n /= d;
        }
        d += 1;
    }
    out
}

fn uhf() -> Outcome {
    let u = SupernaturalNumber::Universal;
    let sn = |s: &str| s.parse::<SupernaturalNumber>().unwrap();
    let table: Vec<(u32, u64, SupernaturalNumber, &str, bool)> = vec![
        (1, 1, sn("2^inf"), "2^inf", true),
        (2, 3, sn("2^inf"), "2^inf * 3^1", false),
        (3, 4, sn("2^inf"), "2^inf", true),
        (1, 2, u.clone(), "universal", false),
        (5, 7, u.clone(), "universal", false),
        (1, 1, sn("3^inf"), "3^inf", false),
        (2, 6, sn("3^inf"), "2^1 * 3^inf", false),
        (2, 1, sn("6"), "2^2 * 3^2", false),
        (3, 5, sn("2^2"), "2^6 * 5^1", false),
        (1, 8, sn("2^inf * 5^inf"), "2^inf * 5^inf", false),
        (4, 16, sn("2^inf"), "2^inf", true),
        (2, 12, sn("1"), "2^2 * 3^1", false),
    ];
    let mut ok = true;
    for (n, m, base, want, car) in &table {
        let got = classify(*n, *m, base).unwrap();
        ok &= got.to_string() == *want && is_car(*n, *m, base) == *car;
        ok &= got == SupernaturalNumber::of_int(*m).unwrap().mul(&base.pow(*n));
    }
    ok &= classify(7, 3, &u).unwrap().is_universal();
    let mut legendre = true;
    for n in 1..=12u64 {
        let want: BTreeMap<u64, Exponent> =
            trial_division((1..=n).product()).into_iter().map(|(q, e)| (q, Exponent::Finite(e))).collect();
        legendre &= factorial_sn(n) == SupernaturalNumber::Explicit(want);
    }
    outcome(ok && legendre, format!("{}-case table {ok}; factorial numbers n <= 12 vs trial division {legendre}", table.len()))
}

// 8. DSL ----------------------------------------------------------------------

fn random_scalar(rng: &mut ChaCha8Rng) -> Complex64 {
    let part = |rng: &mut ChaCha8Rng| match rng.gen_range(0..3) {
        0 => rng.gen_range(-5..=5) as f64,
        1 => rng.gen_range(-3.0..3.0),
        _ => f64::from_bits(rng.gen::<u64>() & !(0x7ffu64 << 52) | ((rng.gen_range(1000..1050u64)) << 52)),
    };
    Complex64::new(part(rng), part(rng))
}

fn random_ast(rng: &mut ChaCha8Rng, depth: usize, dim: usize, names: &[&str]) -> OperatorExpr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 | 1 => {
                let num = rng.gen_range(1..=4) * if rng.gen_bool(0.5) { 1 } else { -1 };
                OperatorExpr::deriv(rng.gen_range(1..=dim), Rational::new(num, rng.gen_range(1..=4)))
            }
            2 if !names.is_empty() => OperatorExpr::mult(names[rng.gen_range(0..names.len())]),
            _ => OperatorExpr::Identity,
        };
    }
    let kids = |rng: &mut ChaCha8Rng| (0..rng.gen_range(2..=3)).map(|_| random_ast(rng, depth - 1, dim, names)).collect();
    match rng.gen_range(0..4) {
        0 => OperatorExpr::Sum(kids(rng)),
        1 => OperatorExpr::Product(kids(rng)),
        2 => OperatorExpr::scale(random_scalar(rng), random_ast(rng, depth - 1, dim, names)),
        _ => OperatorExpr::adjoint(random_ast(rng, depth - 1, dim, names)),
    }
}

fn random_env(rng: &mut ChaCha8Rng, dim: usize, size: usize) -> BTreeMap<String, CoeffDef> {
    let mut env = BTreeMap::new();
    for name in ["S", "T"] {
        let boxes = (0..rng.gen_range(1..=3))
            .map(|_| {
                let intervals = (0..dim)
                    .map(|_| {
                        let den = rng.gen_range(1..=3i64);
                        let lo = rng.gen_range(0..den);
                        Interval { lo: Rational::new(lo, den), hi: Rational::new(rng.gen_range(lo + 1..=den), den) }
                    })
                    .collect();
                let value = if size == 1 || rng.gen_bool(0.5) {
                    CoeffValue::Scalar(Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                } else {
                    CoeffValue::Matrix((0..size).map(|_| (0..size).map(|_| sample::complex(rng)).collect()).collect())
                };
                BoxRegion { intervals, value }
            })
            .collect();
        env.insert(name.to_string(), CoeffDef { name: name.to_string(), sum: rng.gen_bool(0.5), boxes });
    }
    env
}

/// Dense matrix of an expression on the `(dim, size, p)` grid, built from
/// first principles: shifts of the index, cell-center rasterization, matmul.
fn dense_oracle(e: &OperatorExpr, env: &BTreeMap<String, CoeffDef>, g: GridSpec) -> Mat {
    let (n, m, p) = (g.dim(), g.size(), g.p());
    let k = g.basis_dim();
    let coords = |flat: usize| -> Vec<usize> { (0..n).rev().map(|ax| (flat / p.pow(ax as u32)) % p).collect() };
    let flat = |cs: &[usize]| cs.iter().fold(0, |acc, &x| acc * p + x);
    match e {
        OperatorExpr::Identity => Mat::identity(k),
        OperatorExpr::Deriv { axis, step } => {
            let h = *step.numer() as f64 / *step.denom() as f64;
            let shift = (*step * Rational::from_integer(p as i64)).to_integer().rem_euclid(p as i64) as usize;
            let mut out = Mat::zeros(k, k);
            for cell in 0..p.pow(n as u32) {
                let mut target = coords(cell);
                target[axis - 1] = (target[axis - 1] + shift) % p;
                let tc = flat(&target);
                for a in 0..m {
                    out[(cell * m + a, tc * m + a)] += c(1.0 / h);
                    out[(cell * m + a, cell * m + a)] -= c(1.0 / h);
                }
            }
            out
        }
        OperatorExpr::Mult(name) => {
            let def = &env[name];
            let mut out = Mat::zeros(k, k);
            for cell in 0..p.pow(n as u32) {
                let center: Vec<Rational> = coords(cell).iter().map(|&x| Rational::new(2 * x as i64 + 1, 2 * p as i64)).collect();
                let mut value = vec![vec![c(0.0); m]; m];
                for b in &def.boxes {
                    if b.intervals.iter().zip(&center).all(|(iv, &x)| iv.lo <= x && x < iv.hi) {
                        let v: Vec<Vec<Complex64>> = match &b.value {
                            CoeffValue::Scalar(s) => (0..m).map(|i| (0..m).map(|j| if i == j { *s } else { c(0.0) }).collect()).collect(),
                            CoeffValue::Matrix(rows) => rows.clone(),
                        };
                        for i in 0..m {
                            for j in 0..m {
                                value[i][j] = if def.sum { value[i][j] + v[i][j] } else { v[i][j] };
                            }
                        }
                    }
                }
                for i in 0..m {
                    for j in 0..m {
                        out[(cell * m + i, cell * m + j)] = value[i][j];
                    }
                }
            }
            out
        }
        OperatorExpr::Scale(s, inner) => dense_oracle(inner, env, g).scale(*s),
        OperatorExpr::Adjoint(inner) => dense_oracle(inner, env, g).adjoint(),
        OperatorExpr::Sum(items) => items.iter().fold(Mat::zeros(k, k), |acc, x| &acc + &dense_oracle(x, env, g)),
        OperatorExpr::Product(items) => {
            items.iter().fold(Mat::identity(k), |acc, x| acc.matmul(&dense_oracle(x, env, g)).unwrap())
        }
    }
}

/// Whether every step and referenced box endpoint lies on the `1/p` lattice.
fn representable(e: &OperatorExpr, env: &BTreeMap<String, CoeffDef>, p: usize) -> bool {
    let on = |r: Rational| (r * Rational::from_integer(p as i64)).is_integer();
    let mut ok = true;
    e.visit(&mut |node| match node {
        OperatorExpr::Deriv { step, .. } => ok &= on(*step),
        OperatorExpr::Mult(name) => {
            ok &= env[name].boxes.iter().flat_map(|b| &b.intervals).all(|iv| on(iv.lo) && on(iv.hi));
        }
        _ => {}
    });
    ok
}

fn dsl(rng: &mut ChaCha8Rng) -> Outcome {
    let mut round_trip = 0;
    for _ in 0..1000 {
        let e = random_ast(rng, 5, 3, &["S", "T", "w_1"]);
        if parse_expr(&e.to_string()).as_ref() == Ok(&e) {
            round_trip += 1;
        }
    }
    let (mut hom_ok, mut worst, mut minimal) = (0, 0.0f64, true);
    for _ in 0..100 {
        let (n, m) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let env = random_env(rng, n, m);
        let e = loop {
            let e = random_ast(rng, 3, n, &["S", "T"]);
            let p = finop::dsl::minimal_p(&e, &env).unwrap();
            if grid(n, m, p).basis_dim() <= 72 {
                break e;
            }
        };
        let op: Op = lower(&e, &env, n, m).unwrap();
        let got = to_matrix(&op).into_matrix();
        let want = dense_oracle(&e, &env, *op.grid());
        let dev = max_dev(&got, &want) / want.max_abs().max(1.0);
        worst = worst.max(dev);
        if dev <= 1e-12 {
            hom_ok += 1;
        }
        let p = op.grid().p();
        minimal &= representable(&e, &env, p) && (1..p).all(|q| !representable(&e, &env, q));
    }
    outcome(
        round_trip == 1000 && hom_ok == 100 && minimal,
        format!("round-trip {round_trip}/1000; lowering vs dense oracle {hom_ok}/100 (worst {worst:.1e}); lcm grid minimal: {minimal}"),
    )
}

// 9. Circulant spectrum -----------------------------------------------------

fn circulant(_rng: &mut ChaCha8Rng) -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for p in 2..=12usize {
        let g = grid(1, 1, p);
        let d = Op::derivative(g, 1, Rational::new(1, p as i64)).unwrap();
        let b = to_matrix(&d);
        // First row of the circulant, diagonalized by the DFT.
        let row: Vec<Complex64> = b.matrix().row(0).to_vec();
        let dft: Vec<Complex64> = (0..p)
            .map(|k| (0..p).map(|j| row[j] * Complex64::from_polar(1.0, 2.0 * PI * (j * k) as f64 / p as f64)).sum())
            .collect();
        let closed: Vec<Complex64> =
            (0..p).map(|k| (Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64) - 1.0) * p as f64).collect();
        let lib = b.spectrum().unwrap();
        let d1 = lib.max_deviation(&Spectrum::new(dft)).unwrap_or(f64::INFINITY);
        let d2 = lib.max_deviation(&Spectrum::new(closed)).unwrap_or(f64::INFINITY);
        worst = worst.max(d1).max(d2);
        ok &= d1 <= 1e-10 && d2 <= 1e-10;
    }
    outcome(ok, format!("p = 2..12, worst deviation from DFT oracle {worst:.1e}"))
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(20241018);
    type Criterion = fn(&mut ChaCha8Rng) -> Outcome;
    let criteria: Vec<(&str, Criterion)> = vec![
        ("1 representation laws", representation_laws),
        ("2 bijectivity", bijectivity),
        ("3 embedding", embedding),
        ("4 digit machinery", digit_machinery),
        ("5 conjugation transport", transport),
        ("6 evolution correspondence", evolution),
        ("7 uhf classification", |_| uhf()),
        ("8 dsl", dsl),
        ("9 circulant spectrum", circulant),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let start = Instant::now();
        let o = run(&mut rng);
        println!(
            "{} {name}: {} [{:.2}s]",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.passed {
            failed.push(name);
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
