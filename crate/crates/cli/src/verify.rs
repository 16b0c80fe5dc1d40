//! `sqmul verify`: square-based kernels against their multiply-accumulate
//! oracles.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sqmul::correction::{
    complex3_operand_corrections, complex4_corrections, conv_corrections, transform_corrections,
    ConvKernel, Cpm3Role, Side,
};
use sqmul::kernels_complex as kc;
use sqmul::kernels_real as kr;
use sqmul::numeric::{render_complex, Domain};
use sqmul::{CMatrix, Cx, Element, Matrix, OpLedger};

use crate::matrix_file::AnyMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    MatmulSq,
    TransformSq,
    Conv1dSq,
    Conv2dSq,
    CmatmulSq4,
    CmatmulSq3,
    CtransformSq4,
    CtransformSq3,
    CconvSq4,
    CconvSq3,
}

impl Kernel {
    pub const ALL: [Kernel; 10] = [
        Kernel::MatmulSq,
        Kernel::TransformSq,
        Kernel::Conv1dSq,
        Kernel::Conv2dSq,
        Kernel::CmatmulSq4,
        Kernel::CmatmulSq3,
        Kernel::CtransformSq4,
        Kernel::CtransformSq3,
        Kernel::CconvSq4,
        Kernel::CconvSq3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::MatmulSq => "matmul_sq",
            Kernel::TransformSq => "transform_sq",
            Kernel::Conv1dSq => "conv1d_sq",
            Kernel::Conv2dSq => "conv2d_sq",
            Kernel::CmatmulSq4 => "cmatmul_sq4",
            Kernel::CmatmulSq3 => "cmatmul_sq3",
            Kernel::CtransformSq4 => "ctransform_sq4",
            Kernel::CtransformSq3 => "ctransform_sq3",
            Kernel::CconvSq4 => "cconv_sq4",
            Kernel::CconvSq3 => "cconv_sq3",
        }
    }

    pub fn parse(s: &str) -> Option<Kernel> {
        Kernel::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_complex(self) -> bool {
        !matches!(
            self,
            Kernel::MatmulSq | Kernel::TransformSq | Kernel::Conv1dSq | Kernel::Conv2dSq
        )
    }
}

/// Outcome of one case.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub ok: bool,
    /// Largest absolute difference to the oracle (0 when exact).
    pub max_deviation: f64,
    /// The square-based result, rendered.
    pub result: String,
}

/// Operands of a case, already in the kernel's domain.
enum Case<T> {
    Real(Matrix<T>, Matrix<T>),
    Complex(CMatrix<T>, CMatrix<T>),
}

/// Nested rows, or a bare value for a 1x1 result.
pub fn render_rows<T>(rows: usize, cols: usize, v: &[T], f: impl Fn(&T) -> String) -> String {
    if rows == 1 && cols == 1 {
        return f(&v[0]);
    }
    let body: Vec<String> = (0..rows)
        .map(|r| {
            let row: Vec<String> = v[r * cols..(r + 1) * cols].iter().map(&f).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    format!("[{}]", body.join(","))
}

fn vector_of<T: Clone>(m: &Matrix<T>, what: &str) -> Result<Vec<T>, String> {
    if m.rows() == 1 || m.cols() == 1 {
        Ok(m.data().to_vec())
    } else {
        Err(format!("{what} must be a single row or column, got {}x{}", m.rows(), m.cols()))
    }
}

fn compare<T: Element>(got: &[Cx<T>], want: &[Cx<T>], scale: f64) -> (bool, f64) {
    let mut dev = 0.0f64;
    let mut exact = got.len() == want.len();
    for (g, w) in got.iter().zip(want) {
        exact &= g == w;
        dev = dev
            .max((g.re.to_f64() - w.re.to_f64()).abs())
            .max((g.im.to_f64() - w.im.to_f64()).abs());
    }
    let ok = match T::DOMAIN {
        Domain::ExactInt => exact,
        Domain::Float => got.len() == want.len() && dev <= 1e-9 * scale.max(1.0),
    };
    (ok, if exact { 0.0 } else { dev })
}

fn lift<T: Element>(v: &[T]) -> Vec<Cx<T>> {
    v.iter().map(|x| Cx::new(x.clone(), T::zero())).collect()
}

fn max_abs<'a, T: Element>(v: impl Iterator<Item = &'a T>) -> f64 {
    v.map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

fn cmax_abs<T: Element>(v: &[Cx<T>]) -> f64 {
    v.iter()
        .map(|z| z.re.to_f64().abs().max(z.im.to_f64().abs()))
        .fold(0.0, f64::max)
}

fn run_case<T: Element>(kernel: Kernel, case: &Case<T>) -> Result<CaseReport, String> {
    let e = |e: sqmul::Error| e.to_string();
    let mut l = OpLedger::new();
    // (square-based, oracle, output shape, bound on Σ|a||b|)
    let (got, want, shape, scale): (Vec<Cx<T>>, Vec<Cx<T>>, (usize, usize), f64) = match (kernel, case) {
        (Kernel::MatmulSq, Case::Real(a, b)) => {
            let (g, _) = kr::matmul_sq(a, b, None).map_err(e)?;
            let (w, _) = kr::matmul_mac(a, b).map_err(e)?;
            let s = a.cols() as f64 * max_abs(a.data().iter()) * max_abs(b.data().iter());
            (lift(g.data()), lift(w.data()), g.shape(), s)
        }
        (Kernel::TransformSq, Case::Real(w, x)) => {
            let x = vector_of(x, "transform input")?;
            let s = transform_corrections(w, &mut l);
            let (g, _) = kr::transform_sq(w, &x, &s).map_err(e)?;
            let (o, _) = kr::transform_mac(w, &x).map_err(e)?;
            let sc = x.len() as f64 * max_abs(w.data().iter()) * max_abs(x.iter());
            (lift(&g), lift(&o), (g.len(), 1), sc)
        }
        (Kernel::Conv1dSq, Case::Real(w, x)) => {
            let w = vector_of(w, "kernel")?;
            let x = vector_of(x, "signal")?;
            let s = conv_corrections(ConvKernel::Real1D(&w), &mut l).map_err(e)?;
            let (g, _) = kr::conv1d_sq(&w, &x, &s).map_err(e)?;
            let (o, _) = kr::conv1d_mac(&w, &x).map_err(e)?;
            let sc = w.len() as f64 * max_abs(w.iter()) * max_abs(x.iter());
            (lift(&g), lift(&o), (1, g.len()), sc)
        }
        (Kernel::Conv2dSq, Case::Real(w, x)) => {
            let s = conv_corrections(ConvKernel::Real2D(w), &mut l).map_err(e)?;
            let (g, _) = kr::conv2d_sq(w, x, &s).map_err(e)?;
            let (o, _) = kr::conv2d_mac(w, x).map_err(e)?;
            let sc = w.data().len() as f64 * max_abs(w.data().iter()) * max_abs(x.data().iter());
            (lift(g.data()), lift(o.data()), g.shape(), sc)
        }
        (Kernel::CmatmulSq4 | Kernel::CmatmulSq3, Case::Complex(x, y)) => {
            let (g, _) = if kernel == Kernel::CmatmulSq4 {
                kc::cmatmul_sq4(x, y, None)
            } else {
                kc::cmatmul_sq3(x, y, None)
            }
            .map_err(e)?;
            let (o, _) = kc::cmatmul_mac(x, y).map_err(e)?;
            let sc = 2.0 * x.cols() as f64 * cmax_abs(x.data()) * cmax_abs(y.data());
            (g.data().to_vec(), o.data().to_vec(), g.shape(), sc)
        }
        (Kernel::CtransformSq4 | Kernel::CtransformSq3, Case::Complex(w, x)) => {
            let x = vector_of(x, "transform input")?;
            let g = if kernel == Kernel::CtransformSq4 {
                let s = complex4_corrections(w, Side::Rows, &mut l);
                kc::ctransform_sq4(w, &x, &s)
            } else {
                let s = complex3_operand_corrections(w, Side::Rows, Cpm3Role::Right, &mut l);
                kc::ctransform_sq3(w, &x, &s)
            }
            .map_err(e)?
            .0;
            let (o, _) = kc::ctransform_mac(w, &x).map_err(e)?;
            let sc = 2.0 * x.len() as f64 * cmax_abs(w.data()) * cmax_abs(&x);
            let n = g.len();
            (g, o, (n, 1), sc)
        }
        (Kernel::CconvSq4 | Kernel::CconvSq3, Case::Complex(w, x)) => {
            let w = vector_of(w, "kernel")?;
            let x = vector_of(x, "signal")?;
            let g = if kernel == Kernel::CconvSq4 {
                let s = conv_corrections(ConvKernel::Complex(&w), &mut l).map_err(e)?;
                kc::cconv_sq4(&w, &x, &s)
            } else {
                let s = conv_corrections(ConvKernel::Complex3(&w), &mut l).map_err(e)?;
                kc::cconv_sq3(&w, &x, &s)
            }
            .map_err(e)?
            .0;
            let (o, _) = kc::cconv_mac(&w, &x).map_err(e)?;
            let sc = 2.0 * w.len() as f64 * cmax_abs(&w) * cmax_abs(&x);
            let n = g.len();
            (g, o, (1, n), sc)
        }
        _ => {
            return Err(format!(
                "{} takes {} operands",
                kernel.name(),
                if kernel.is_complex() { "complex" } else { "real" }
            ))
        }
    };
    let (ok, max_deviation) = compare(&got, &want, scale);
    let result = if kernel.is_complex() {
        render_rows(shape.0, shape.1, &got, render_complex)
    } else {
        render_rows(shape.0, shape.1, &got, |z| z.re.render())
    };
    Ok(CaseReport {
        ok,
        max_deviation,
        result,
    })
}

/// Runs one case from two operand files.
pub fn verify_files(kernel: Kernel, a: &AnyMatrix, b: &AnyMatrix) -> Result<CaseReport, String> {
    match (a, b) {
        (AnyMatrix::Int(a), AnyMatrix::Int(b)) => run_case(kernel, &Case::Real(a.clone(), b.clone())),
        (AnyMatrix::Float(a), AnyMatrix::Float(b)) => {
            run_case(kernel, &Case::Real(a.clone(), b.clone()))
        }
        (AnyMatrix::CInt(a), AnyMatrix::CInt(b)) => {
            run_case(kernel, &Case::Complex(a.clone(), b.clone()))
        }
        (AnyMatrix::CFloat(a), AnyMatrix::CFloat(b)) => {
            run_case(kernel, &Case::Complex(a.clone(), b.clone()))
        }
        _ => Err("operand files must share domain and complex flag".into()),
    }
}

trait Draw: Element {
    fn draw(rng: &mut ChaCha8Rng) -> Self;
}

impl Draw for BigInt {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        BigInt::from(rng.gen_range(-(1i64 << 15)..=1 << 15))
    }
}

impl Draw for f64 {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        rng.gen_range(-1.0..=1.0)
    }
}

fn random_case<T: Draw>(kernel: Kernel, rng: &mut ChaCha8Rng) -> Case<T> {
    let mut dim = |max: usize| rng.gen_range(1..=max);
    // (rows a, cols a, rows b, cols b)
    let (ar, ac, br, bc) = match kernel {
        Kernel::MatmulSq | Kernel::CmatmulSq4 | Kernel::CmatmulSq3 => {
            let (m, n, p) = (dim(16), dim(16), dim(16));
            (m, n, n, p)
        }
        Kernel::TransformSq | Kernel::CtransformSq4 | Kernel::CtransformSq3 => {
            let (k, n) = (dim(16), dim(16));
            (k, n, n, 1)
        }
        Kernel::Conv1dSq | Kernel::CconvSq4 | Kernel::CconvSq3 => {
            let len = dim(16);
            (1, dim(len), 1, len)
        }
        Kernel::Conv2dSq => {
            let (h, w) = (dim(16), dim(16));
            (dim(h), dim(w), h, w)
        }
    };
    if kernel.is_complex() {
        let mut cm = |r, c| Matrix::from_fn(r, c, |_, _| Cx::new(T::draw(rng), T::draw(rng))).unwrap();
        let a = cm(ar, ac);
        Case::Complex(a, cm(br, bc))
    } else {
        let mut m = |r, c| Matrix::from_fn(r, c, |_, _| T::draw(rng)).unwrap();
        let a = m(ar, ac);
        Case::Real(a, m(br, bc))
    }
}

fn case_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// `count` seeded random cases, run in parallel, reported in case order.
pub fn verify_random(
    kernel: Kernel,
    domain: Domain,
    count: usize,
    seed: u64,
) -> Vec<Result<CaseReport, String>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, i);
            match domain {
                Domain::ExactInt => run_case(kernel, &random_case::<BigInt>(kernel, &mut rng)),
                Domain::Float => run_case(kernel, &random_case::<f64>(kernel, &mut rng)),
            }
        })
        .collect()
}
