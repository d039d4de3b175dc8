use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use finop::isomorphism::pde_to_ode_capped;
use finop::json::{matrix_to_json, operator_to_json, spectrum_to_json};
use finop::{
    classify, digits, embed, evolve_compare, is_car, FiniteOperatorF64, Ladder, Program, Rational, RepMatrixF64,
    SpectrumF64, SupernaturalNumber,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const VERSION: &str = env!("CARGO_PKG_VERSION");

// A closed pipe (`finop ... | head`) is not an error worth a panic.
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! out_raw {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(name = "finop", version, about = "Finite difference operators, their matrices, and the digit unitary")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(clap::Args)]
struct Frame {
    /// Torus dimension N (default: grid header, else 1).
    #[arg(long = "N")]
    dim: Option<usize>,
    /// Components M (default: grid header, else inferred from matrix coefficients, else 1).
    #[arg(long = "M")]
    size: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Lower a .fop file and print its block matrix.
    Repr {
        file: String,
        #[command(flatten)]
        frame: Frame,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Print N, M, p and K instead of the matrix.
        #[arg(long)]
        grid_info: bool,
        /// Refine along a ladder (`factorial`, `q^n`, `custom:a,b,...`); needs --level.
        #[arg(long, requires = "level")]
        ladder: Option<String>,
        #[arg(long)]
        level: Option<usize>,
    },
    /// Conjugate to a scalar operator on the circle at factorial level n.
    Conjugate {
        file: String,
        #[command(flatten)]
        frame: Frame,
        #[arg(long)]
        level: usize,
    },
    /// Eigenvalues of the lowered operator, canonically sorted.
    Spectrum {
        file: String,
        #[command(flatten)]
        frame: Frame,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Compare exp(tB) trajectories on both sides of the conjugation.
    Evolve {
        file: String,
        #[command(flatten)]
        frame: Frame,
        #[arg(long)]
        level: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.1,1.0")]
        times: Vec<f64>,
        /// Seed for the random initial vector.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Supernatural number of H_{N,M} over a base UHF algebra.
    Classify {
        #[arg(long = "N")]
        dim: u32,
        #[arg(long = "M")]
        size: u64,
        /// e.g. `2^inf`, `universal`, `2^inf*3^2`.
        #[arg(long)]
        base: String,
    },
    /// Mixed-radix digits of a rational in [0, 1).
    Digits {
        #[arg(long)]
        x: String,
        #[arg(long = "M")]
        size: usize,
        #[arg(long = "N")]
        dim: usize,
        #[arg(long)]
        depth: usize,
    },
    /// Run the randomized invariant suite.
    Verify {
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

type CmdResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Repr { file, frame, format, grid_info, ladder, level } => {
            cmd_repr(&file, &frame, format, grid_info, ladder.as_deref(), level)
        }
        Command::Conjugate { file, frame, level } => cmd_conjugate(&file, &frame, level),
        Command::Spectrum { file, frame, format } => cmd_spectrum(&file, &frame, format),
        Command::Evolve { file, frame, level, times, seed } => cmd_evolve(&file, &frame, level, &times, seed),
        Command::Classify { dim, size, base } => cmd_classify(dim, size, &base),
        Command::Digits { x, size, dim, depth } => cmd_digits(&x, size, dim, depth),
        Command::Verify { seed } => cmd_verify(seed),
    };
    outcome.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    })
}

fn max_k() -> Result<usize, String> {
    match std::env::var("FINOP_MAX_K") {
        Ok(v) => v.trim().parse().map_err(|_| format!("FINOP_MAX_K must be a positive integer, got {v:?}")),
        Err(_) => Ok(finop::digit_unitary::DEFAULT_MAX_K),
    }
}

fn read_source(path: &str) -> Result<String, String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("reading stdin: {e}"))?;
        return Ok(s);
    }
    std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))
}

fn load(path: &str, frame: &Frame) -> Result<FiniteOperatorF64, String> {
    let src = read_source(path)?;
    let prog: Program = finop::parse(&src).map_err(|e| format!("{path}: {e}"))?;
    let dim = frame.dim.or(prog.dim).unwrap_or(1);
    let inferred = prog
        .expr
        .coefficient_names()
        .iter()
        .filter_map(|n| prog.env.get(*n))
        .flat_map(|d| d.boxes.iter().filter_map(|b| b.value.size()))
        .next();
    let size = frame.size.or(prog.size).or(inferred).unwrap_or(1);
    let op = finop::lower(&prog.expr, &prog.env, dim, size).map_err(|e| format!("{path}: {e}"))?;
    check_k(op.grid().basis_dim())?;
    Ok(op)
}

fn check_k(k: usize) -> Result<(), String> {
    let limit = max_k()?;
    if k > limit {
        return Err(format!("matrix size K = {k} exceeds FINOP_MAX_K = {limit}"));
    }
    Ok(())
}

fn fmt_complex(re: f64, im: f64) -> String {
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{re}{sign}{}i", im.abs())
}

fn print_json(value: &serde_json::Value) {
    out!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn cmd_repr(
    path: &str,
    frame: &Frame,
    format: Format,
    grid_info: bool,
    ladder: Option<&str>,
    level: Option<usize>,
) -> CmdResult {
    let mut op = load(path, frame)?;
    if let Some(level) = level {
        let ladder: Ladder = ladder.unwrap_or("factorial").parse().map_err(|e| format!("{e}"))?;
        let q = ladder.level(level).map_err(|e| format!("{e}"))?;
        let p = op.grid().p();
        if q % p != 0 {
            let hint = match ladder.first_level_containing(p, 20) {
                Some(n) => format!("use --level {n} or higher"),
                None => "no level of this ladder is a multiple of p".to_string(),
            };
            return Err(format!("ladder {ladder} level {level} has {q} cells per axis, not a multiple of p = {p}; {hint}"));
        }
        let refined = op.grid().with_p(q).map_err(|e| format!("{e}"))?;
        check_k(refined.basis_dim())?;
        op = embed(&op, q).map_err(|e| format!("{e}"))?;
    }
    let g = *op.grid();
    if grid_info {
        out!("N={} M={} p={} K={}", g.dim(), g.size(), g.p(), g.basis_dim());
        return Ok(ExitCode::SUCCESS);
    }
    let b = op.to_matrix();
    match format {
        Format::Json => print_json(&json!({
            "version": VERSION,
            "grid": g,
            "K": b.dim(),
            "matrix": matrix_to_json(b.matrix()),
        })),
        Format::Csv => out_raw!("{}", b.to_csv()),
        Format::Table => out_raw!("{}", matrix_table(&b)),
    }
    Ok(ExitCode::SUCCESS)
}

fn matrix_table(b: &RepMatrixF64) -> String {
    let m = b.matrix();
    let cells: Vec<Vec<String>> =
        (0..m.rows()).map(|r| m.row(r).iter().map(|z| fmt_complex(z.re, z.im)).collect()).collect();
    let width = cells.iter().flatten().map(String::len).max().unwrap_or(0);
    let mut out = String::new();
    for row in cells {
        let line: Vec<String> = row.iter().map(|c| format!("{c:>width$}")).collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

fn spectrum_json(s: &SpectrumF64) -> serde_json::Value {
    json!(spectrum_to_json(s))
}

fn cmd_conjugate(path: &str, frame: &Frame, level: usize) -> CmdResult {
    let op = load(path, frame)?;
    let result = pde_to_ode_capped(&op, level, max_k()?).map_err(|e| format!("{e}"))?;
    let report = &result.spectral_report;
    let passed = report.passed();
    print_json(&json!({
        "version": VERSION,
        "level": level,
        "K": result.permutation.len(),
        "pde_grid": result.permutation.pde_grid(),
        "ode": operator_to_json(&result.ode),
        "permutation": result.permutation.forward(),
        "spectral_report": {
            "pde": spectrum_json(&report.pde),
            "ode": spectrum_json(&report.ode),
            "max_deviation": report.max_deviation,
            "tolerance": report.tolerance,
            "status": if passed { "PASS" } else { "FAIL" },
        },
    }));
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_spectrum(path: &str, frame: &Frame, format: Format) -> CmdResult {
    let op = load(path, frame)?;
    let spectrum = op.to_matrix().spectrum().map_err(|e| format!("{e}"))?;
    match format {
        Format::Json => print_json(&json!({ "version": VERSION, "grid": op.grid(), "eigenvalues": spectrum_json(&spectrum) })),
        Format::Csv => {
            out!("re,im");
            for z in spectrum.eigenvalues() {
                out!("{},{}", z.re, z.im);
            }
        }
        Format::Table => {
            for z in spectrum.eigenvalues() {
                out!("{:>24} {:>24}", format!("{:.12e}", z.re), format!("{:.12e}", z.im));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_evolve(path: &str, frame: &Frame, level: usize, times: &[f64], seed: u64) -> CmdResult {
    let op = load(path, frame)?;
    let nfact = finop::factorial(level).ok_or_else(|| format!("{level}! overflows"))?;
    check_k(op.grid().with_p(nfact).map_err(|e| format!("{e}"))?.basis_dim())?;
    let grid = op.grid().with_p(nfact).map_err(|e| format!("{e}"))?;
    let u0 = finop::sample::vector(&mut ChaCha8Rng::seed_from_u64(seed), grid);
    let points = evolve_compare(&op, &u0, times, level).map_err(|e| format!("{e}"))?;
    out!("t,discrepancy,tolerance,status");
    let mut all = true;
    for p in &points {
        let ok = p.passed();
        all &= ok;
        out!("{},{:e},{:e},{}", p.time, p.discrepancy, p.tolerance, if ok { "PASS" } else { "FAIL" });
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_classify(dim: u32, size: u64, base: &str) -> CmdResult {
    let base: SupernaturalNumber = base.parse().map_err(|e| format!("{e}"))?;
    let sn = classify(dim, size, &base).map_err(|e| format!("{e}"))?;
    out!("{sn}, CAR: {}", is_car(dim, size, &base));
    Ok(ExitCode::SUCCESS)
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    let bad = || format!("expected a rational like 3/4, got {s:?}");
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: i64 = n.trim().parse().map_err(|_| bad())?;
    let d: i64 = d.trim().parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

fn cmd_digits(x: &str, size: usize, dim: usize, depth: usize) -> CmdResult {
    let e = digits(parse_rational(x)?, dim, size, depth).map_err(|e| format!("{e}"))?;
    let parts: Vec<String> = (1..=depth).map(|i| format!("x{i}={}", e.digit(i).expect("i <= depth"))).collect();
    out!("{}", parts.join(", "));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(seed: u64) -> CmdResult {
    out!("finop verify {VERSION} seed={seed}");
    let checks = finop::verify::run_suite(seed);
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &checks {
        out!("{}  {:<width$}  {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    out!("{passed}/{} checks passed", checks.len());
    Ok(if passed == checks.len() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}
