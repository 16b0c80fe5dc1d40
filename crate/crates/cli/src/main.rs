//! `sqmul`: dataset generation, kernel verification, cost reports and
//! simulator runs.
//!
//! Exit codes: 0 success, 1 verification failure (including width
//! violations in a simulation), 2 usage or input error.

mod matrix_file;
mod simulate;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Number, Value};
use sqmul::costmodel::{area_estimate, ratio_complex3, ratio_complex4, ratio_real, AreaModel, AreaShape};
use sqmul::hwsim::{Arch, SimConfig, TraceLevel, Variant};
use sqmul::numeric::Domain;
use sqmul::{Cx, Matrix};

use matrix_file::AnyMatrix;
use simulate::{SimOutcome, Tiling};
use verify::Kernel;

#[derive(Parser)]
#[command(name = "sqmul", version, about = "Square-based multiplication kernels and hardware models")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Int,
    Float,
}

impl From<DomainArg> for Domain {
    fn from(d: DomainArg) -> Domain {
        match d {
            DomainArg::Int => Domain::ExactInt,
            DomainArg::Float => Domain::Float,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Real,
    Complex4,
    Complex3,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Final,
    Registers,
    Full,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a seeded random matrix file.
    Gen {
        /// Shape as RxC, e.g. 4x3.
        shape: String,
        #[arg(long, value_enum, default_value = "int")]
        domain: DomainArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Values are drawn from [-range, range].
        #[arg(long, default_value_t = 8)]
        range: u64,
        #[arg(long)]
        complex: bool,
        /// Reject a range that does not fit this signed width.
        #[arg(long)]
        bits: Option<u32>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a square-based kernel against its multiply-accumulate oracle.
    Verify {
        kernel: String,
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        /// Number of random cases (default 100 when no files are given).
        #[arg(long, conflicts_with = "a")]
        random: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "int")]
        domain: DomainArg,
        #[arg(long)]
        json: bool,
    },
    /// Squarings per multiplication of an MxN by NxP product.
    Ratio {
        #[arg(value_enum)]
        family: Family,
        m: u64,
        n: u64,
        p: u64,
    },
    /// Model estimate of datapath area against the MAC baseline.
    Area {
        arch: String,
        variant: String,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        #[arg(long, default_value_t = 1)]
        pes: usize,
        #[arg(long, default_value_t = 1)]
        lanes: usize,
        #[arg(long, default_value_t = 16)]
        depth: usize,
        #[arg(long)]
        mult_coeff: Option<f64>,
        #[arg(long)]
        squarer_factor: Option<f64>,
        #[arg(long)]
        adder_coeff: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run an architecture model on two operand files.
    Simulate {
        arch: String,
        variant: String,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Write the cycle trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Check every value against a width plan for this input width.
        #[arg(long)]
        bits: Option<u32>,
        /// Tensor core output tile, RxC.
        #[arg(long)]
        tile: Option<String>,
        /// Tensor core inner tile width.
        #[arg(long)]
        tile_depth: Option<usize>,
        #[arg(long, value_enum, default_value = "registers")]
        level: LevelArg,
        #[arg(long)]
        json: bool,
    },
}

/// A failure and the exit code it maps to.
struct Failure(u8, String);

fn usage(msg: impl Into<String>) -> Failure {
    Failure(2, msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen {
            shape,
            domain,
            seed,
            range,
            complex,
            bits,
            output,
        } => cmd_gen(&shape, domain.into(), seed, range, complex, bits, output.as_deref()),
        Cmd::Verify {
            kernel,
            a,
            b,
            random,
            seed,
            domain,
            json,
        } => cmd_verify(&kernel, a.zip(b), random, seed, domain.into(), json),
        Cmd::Ratio { family, m, n, p } => cmd_ratio(family, m, n, p),
        Cmd::Area {
            arch,
            variant,
            bits,
            pes,
            lanes,
            depth,
            mult_coeff,
            squarer_factor,
            adder_coeff,
            json,
        } => {
            let d = AreaModel::default();
            let model = AreaModel {
                mult_coeff: mult_coeff.unwrap_or(d.mult_coeff),
                squarer_factor: squarer_factor.unwrap_or(d.squarer_factor),
                adder_coeff: adder_coeff.unwrap_or(d.adder_coeff),
            };
            cmd_area(&arch, &variant, bits, (pes, lanes, depth), &model, json)
        }
        Cmd::Simulate {
            arch,
            variant,
            a,
            b,
            trace,
            bits,
            tile,
            tile_depth,
            level,
            json,
        } => {
            let level = match level {
                LevelArg::Final => TraceLevel::Final,
                LevelArg::Registers => TraceLevel::Registers,
                LevelArg::Full => TraceLevel::Full,
            };
            cmd_simulate(&arch, &variant, &a, &b, trace.as_deref(), bits, tile.as_deref(), tile_depth, level, json)
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            if !msg.is_empty() {
                eprintln!("error: {msg}");
            }
            ExitCode::from(code)
        }
    }
}

fn parse_shape(s: &str) -> Result<(usize, usize), Failure> {
    let bad = || usage(format!("shape '{s}' is not RxC"));
    let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (r, c) = (r.parse::<usize>().map_err(|_| bad())?, c.parse::<usize>().map_err(|_| bad())?);
    if r == 0 || c == 0 {
        return Err(usage(format!("invalid shape {r}x{c}")));
    }
    Ok((r, c))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_matrix(path: &Path) -> Result<AnyMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    AnyMatrix::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_gen(
    shape: &str,
    domain: Domain,
    seed: u64,
    range: u64,
    complex: bool,
    bits: Option<u32>,
    output: Option<&Path>,
) -> Result<(), Failure> {
    let (rows, cols) = parse_shape(shape)?;
    if let Some(n) = bits {
        if !(1..=63).contains(&n) {
            return Err(usage("--bits must be in 1..=63"));
        }
        let max = (1u64 << (n - 1)) - 1;
        if domain == Domain::ExactInt && range > max {
            return Err(usage(format!("range {range} does not fit {n} signed bits (max {max})")));
        }
    }
    let range = i64::try_from(range).map_err(|_| usage("range too large"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let int = |rng: &mut ChaCha8Rng| BigInt::from(rng.gen_range(-range..=range));
    let float = |rng: &mut ChaCha8Rng| {
        if range == 0 {
            0.0
        } else {
            rng.gen_range(-(range as f64)..=range as f64)
        }
    };
    let shape_err = |e: sqmul::Error| usage(e.to_string());
    let m = match (domain, complex) {
        (Domain::ExactInt, false) => AnyMatrix::Int(Matrix::from_fn(rows, cols, |_, _| int(&mut rng)).map_err(shape_err)?),
        (Domain::Float, false) => AnyMatrix::Float(Matrix::from_fn(rows, cols, |_, _| float(&mut rng)).map_err(shape_err)?),
        (Domain::ExactInt, true) => AnyMatrix::CInt(
            Matrix::from_fn(rows, cols, |_, _| {
                let re = int(&mut rng);
                Cx::new(re, int(&mut rng))
            })
            .map_err(shape_err)?,
        ),
        (Domain::Float, true) => AnyMatrix::CFloat(
            Matrix::from_fn(rows, cols, |_, _| {
                let re = float(&mut rng);
                Cx::new(re, float(&mut rng))
            })
            .map_err(shape_err)?,
        ),
    };
    write_out(output, &m.to_json())
}

fn deviation(v: f64) -> Value {
    Number::from_str(&format!("{v:?}")).map(Value::Number).unwrap_or(Value::Null)
}

fn cmd_verify(
    name: &str,
    files: Option<(PathBuf, PathBuf)>,
    random: Option<usize>,
    seed: u64,
    domain: Domain,
    as_json: bool,
) -> Result<(), Failure> {
    let kernel = Kernel::parse(name).ok_or_else(|| {
        let known: Vec<&str> = Kernel::ALL.iter().map(|k| k.name()).collect();
        usage(format!("unknown kernel '{name}'; expected one of {}", known.join(", ")))
    })?;
    if let Some((a, b)) = files {
        let (a, b) = (read_matrix(&a)?, read_matrix(&b)?);
        let r = verify::verify_files(kernel, &a, &b).map_err(usage)?;
        if as_json {
            let v = json!({
                "kernel": kernel.name(),
                "pass": r.ok,
                "max_deviation": deviation(r.max_deviation),
                "result": r.result,
            });
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        } else {
            println!("kernel: {}", kernel.name());
            println!("result: {}", r.result);
            match (a.domain(), r.ok) {
                (Domain::ExactInt, true) => println!("exact"),
                (Domain::ExactInt, false) => println!("DIFF max deviation {}", r.max_deviation),
                (Domain::Float, _) => println!("max deviation {:e}", r.max_deviation),
            }
            println!("{}", if r.ok { "PASS" } else { "FAIL" });
        }
        return if r.ok { Ok(()) } else { Err(Failure(1, String::new())) };
    }
    let count = random.unwrap_or(100);
    if count == 0 {
        return Err(usage("--random needs at least one case"));
    }
    let reports = verify::verify_random(kernel, domain, count, seed);
    let mut failed = 0;
    let mut cases = Vec::with_capacity(count);
    let mut lines = String::new();
    for (i, r) in reports.iter().enumerate() {
        let r = r.as_ref().map_err(|e| usage(format!("case {i}: {e}")))?;
        if !r.ok {
            failed += 1;
        }
        let status = match (domain, r.ok) {
            (Domain::ExactInt, true) => "exact".to_string(),
            (Domain::ExactInt, false) => format!("DIFF max deviation {}", r.max_deviation),
            (Domain::Float, ok) => format!("{} max deviation {:e}", if ok { "ok" } else { "FAIL" }, r.max_deviation),
        };
        lines.push_str(&format!("case {i}: {status}\n"));
        cases.push(json!({ "case": i, "pass": r.ok, "max_deviation": deviation(r.max_deviation) }));
    }
    let passed = count - failed;
    if as_json {
        let v = json!({
            "kernel": kernel.name(),
            "domain": domain.to_string(),
            "seed": seed,
            "cases": cases,
            "passed": passed,
            "failed": failed,
            "pass": failed == 0,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        print!("{lines}");
        let word = if domain == Domain::ExactInt { "exact" } else { "within tolerance" };
        println!("kernel: {} domain: {domain} seed: {seed}", kernel.name());
        println!("{passed}/{count} {word}");
        println!("{}", if failed == 0 { "PASS" } else { "FAIL" });
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure(1, String::new()))
    }
}

fn cmd_ratio(family: Family, m: u64, n: u64, p: u64) -> Result<(), Failure> {
    let r = match family {
        Family::Real => ratio_real(m, n, p),
        Family::Complex4 => ratio_complex4(m, n, p),
        Family::Complex3 => ratio_complex3(m, n, p),
    }
    .map_err(|e| usage(e.to_string()))?;
    let value = *r.numer() as f64 / *r.denom() as f64;
    println!("{value} ({}/{})", r.numer(), r.denom());
    Ok(())
}

fn cmd_area(
    arch: &str,
    variant: &str,
    bits: u32,
    (pes, lanes, depth): (usize, usize, usize),
    model: &AreaModel,
    as_json: bool,
) -> Result<(), Failure> {
    let e = |e: sqmul::Error| usage(e.to_string());
    let arch: Arch = arch.parse().map_err(e)?;
    let variant: Variant = variant.parse().map_err(e)?;
    let shape = AreaShape::new(pes, lanes, depth).map_err(e)?;
    let report = area_estimate(arch, variant, bits, shape, model).map_err(e)?;
    if as_json {
        let mut obj = Map::new();
        for (k, v) in report.rows() {
            let value = Number::from_str(&v).map(Value::Number).unwrap_or(Value::String(v));
            obj.insert(k.to_string(), value);
        }
        println!("{}", serde_json::to_string_pretty(&Value::Object(obj)).expect("json"));
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    arch: &str,
    variant: &str,
    a: &Path,
    b: &Path,
    trace_path: Option<&Path>,
    bits: Option<u32>,
    tile: Option<&str>,
    tile_depth: Option<usize>,
    level: TraceLevel,
    as_json: bool,
) -> Result<(), Failure> {
    let e = |e: sqmul::Error| usage(e.to_string());
    let arch: Arch = arch.parse().map_err(e)?;
    let variant: Variant = variant.parse().map_err(e)?;
    let cfg = SimConfig::new(arch, variant).map_err(e)?.with_trace_level(level);
    let tiling = Tiling {
        tile: tile.map(parse_shape).transpose()?,
        depth: tile_depth,
    };
    let (a, b) = (read_matrix(a)?, read_matrix(b)?);
    let SimOutcome { trace, output, halved } = simulate::simulate(cfg, &a, &b, bits, tiling).map_err(usage)?;
    if let Some(p) = trace_path {
        write_out(Some(p), &trace.to_csv())?;
    }
    let violations: Vec<String> = trace
        .width_violations
        .iter()
        .map(|v| format!("cycle {} {}.{}: {} bits > {}", v.cycle, v.unit, v.signal, v.bits, v.limit))
        .collect();
    if as_json {
        let mut v = json!({
            "arch": arch.name(),
            "variant": variant.name(),
            "cycles": trace.cycles_total,
            "width_violations": violations,
            "final": output,
        });
        if let Some(h) = &halved {
            v["halved"] = Value::String(h.clone());
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        println!("arch: {} variant: {}", arch.name(), variant.name());
        println!("cycles: {}", trace.cycles_total);
        println!("width violations: {}", violations.len());
        for v in &violations {
            println!("  {v}");
        }
        println!("final: {output}");
        if let Some(h) = &halved {
            println!("note: square-based output is doubled; divide by 2 (right shift): {h}");
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure(1, format!("{} width violation(s)", violations.len())))
    }
}
