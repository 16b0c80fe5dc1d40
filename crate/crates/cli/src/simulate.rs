//! `sqmul simulate`: runs one architecture model on operand files.

use sqmul::correction::{
    complex3_corrections, complex4_corrections, real_mat_corrections, Cpm3Role, Side,
};
use sqmul::hwsim::{
    cconv_engine_run, conv_engine_run, cpm_accumulator_run, ctransform_engine_run,
    pm_accumulator_run, shift_right, shift_right_complex, systolic_run, tensorcore_matmul,
    transform_engine_run, Arch, SimConfig, SimTrace,
};
use sqmul::numeric::render_complex;
use sqmul::{BitWidthPlan, CMatrix, Cx, Element, Matrix, OpLedger};

use crate::matrix_file::AnyMatrix;
use crate::verify::render_rows;

/// Tensor core tiling; `None` fields default to one tile covering the
/// whole output and the whole inner dimension.
#[derive(Debug, Clone, Copy, Default)]
pub struct Tiling {
    pub tile: Option<(usize, usize)>,
    pub depth: Option<usize>,
}

pub struct SimOutcome {
    pub trace: SimTrace,
    /// Hardware output as produced (doubled for square-based variants).
    pub output: String,
    /// The output after the final right shift, for doubled variants.
    pub halved: Option<String>,
}

type SimResult<T> = Result<T, String>;

fn err(e: sqmul::Error) -> String {
    e.to_string()
}

fn flat<T: Clone>(m: &Matrix<T>) -> Vec<T> {
    m.data().to_vec()
}

fn vector_of<T: Clone>(m: &Matrix<T>, what: &str) -> SimResult<Vec<T>> {
    if m.rows() == 1 || m.cols() == 1 {
        Ok(flat(m))
    } else {
        Err(format!("{what} must be a single row or column, got {}x{}", m.rows(), m.cols()))
    }
}

/// Longest accumulation of `arch` on these operands, for the width plan.
fn reduction_depth(arch: Arch, a: (usize, usize)) -> usize {
    match arch {
        Arch::PmAcc | Arch::ConvEngine => a.0 * a.1,
        Arch::Systolic | Arch::TensorCore | Arch::TransformEngine => a.1,
    }
    .max(1)
}

pub fn simulate(
    mut cfg: SimConfig,
    a: &AnyMatrix,
    b: &AnyMatrix,
    bits: Option<u32>,
    tiling: Tiling,
) -> SimResult<SimOutcome> {
    if let Some(n) = bits {
        if a.domain() != sqmul::numeric::Domain::ExactInt {
            return Err("--bits needs int operands".into());
        }
        let plan = BitWidthPlan::new(n, reduction_depth(cfg.arch, a.shape())).map_err(err)?;
        cfg = cfg.with_bitplan(plan).with_strict_widths(false);
    }
    match (a, b) {
        (AnyMatrix::Int(a), AnyMatrix::Int(b)) => real(cfg, a, b, tiling),
        (AnyMatrix::Float(a), AnyMatrix::Float(b)) => real(cfg, a, b, tiling),
        (AnyMatrix::CInt(a), AnyMatrix::CInt(b)) => complex(cfg, a, b),
        (AnyMatrix::CFloat(a), AnyMatrix::CFloat(b)) => complex(cfg, a, b),
        _ => Err("operand files must share domain and complex flag".into()),
    }
}

fn real<T: Element>(cfg: SimConfig, a: &Matrix<T>, b: &Matrix<T>, tiling: Tiling) -> SimResult<SimOutcome> {
    let doubles = cfg.variant.doubles();
    let (out, shape, trace) = match cfg.arch {
        Arch::PmAcc => {
            let (x, y) = (flat(a), flat(b));
            if x.len() != y.len() {
                return Err(format!("operands hold {} and {} values", x.len(), y.len()));
            }
            let init = if doubles {
                let am = Matrix::new(1, x.len(), x.clone()).map_err(err)?;
                let bm = Matrix::new(y.len(), 1, y.clone()).map_err(err)?;
                let set = real_mat_corrections(&am, &bm, &mut OpLedger::new()).map_err(err)?;
                let (sa, sb) = set.real_mat().map_err(err)?;
                sa[0].clone() + sb[0].clone()
            } else {
                T::zero()
            };
            let (o, t) = pm_accumulator_run(&x, &y, &init, &cfg).map_err(err)?;
            (vec![o], (1, 1), t)
        }
        Arch::Systolic => {
            let cfg = cfg.with_dims(a.cols(), a.rows());
            let (o, t) = systolic_run(a, b, None, &cfg).map_err(err)?;
            let shape = o.shape();
            (o.into_data(), shape, t)
        }
        Arch::TensorCore => {
            let (tm, tn) = tiling.tile.unwrap_or((a.rows(), b.cols()));
            let depth = tiling.depth.unwrap_or(a.cols());
            let cfg = cfg.with_dims(tm, tn);
            let (o, t) = tensorcore_matmul(a, b, depth, &cfg).map_err(err)?;
            let shape = o.shape();
            (o.into_data(), shape, t)
        }
        Arch::TransformEngine => {
            let x = vector_of(b, "transform input")?;
            let (o, t) = transform_engine_run(a, &x, None, &cfg).map_err(err)?;
            let n = o.len();
            (o, (n, 1), t)
        }
        Arch::ConvEngine => {
            let w = vector_of(a, "kernel")?;
            let x = vector_of(b, "signal")?;
            let (o, t) = conv_engine_run(&w, &x, None, &cfg).map_err(err)?;
            let n = o.len();
            (o, (1, n), t)
        }
    };
    let render = |v: &[T]| render_rows(shape.0, shape.1, v, |z| z.render());
    let halved = if doubles {
        Some(render(&shift_right(&out).map_err(err)?))
    } else {
        None
    };
    Ok(SimOutcome {
        output: render(&out),
        halved,
        trace,
    })
}

fn complex<T: Element>(cfg: SimConfig, a: &CMatrix<T>, b: &CMatrix<T>) -> SimResult<SimOutcome> {
    use sqmul::hwsim::Variant;
    let doubles = cfg.variant.doubles();
    let (out, shape, trace) = match cfg.arch {
        Arch::PmAcc => {
            let (x, y) = (flat(a), flat(b));
            if x.len() != y.len() {
                return Err(format!("operands hold {} and {} values", x.len(), y.len()));
            }
            let xm = Matrix::new(1, x.len(), x.clone()).map_err(err)?;
            let ym = Matrix::new(y.len(), 1, y.clone()).map_err(err)?;
            let l = &mut OpLedger::new();
            let init = match cfg.variant {
                Variant::Cpm => {
                    let s = complex4_corrections(&xm, Side::Rows, l).complex4(Side::Rows).map_err(err)?[0]
                        .clone()
                        + complex4_corrections(&ym, Side::Cols, l).complex4(Side::Cols).map_err(err)?[0]
                            .clone();
                    Cx::new(s.clone(), s)
                }
                Variant::Cpm3 => {
                    let r = complex3_corrections(&xm, Side::Rows, l);
                    let c = complex3_corrections(&ym, Side::Cols, l);
                    let (ab, ba) = r.complex3(Side::Rows, Cpm3Role::Left).map_err(err)?;
                    let (cs, sc) = c.complex3(Side::Cols, Cpm3Role::Right).map_err(err)?;
                    Cx::new(ab[0].clone() + cs[0].clone(), ba[0].clone() + sc[0].clone())
                }
                _ => Cx::new(T::zero(), T::zero()),
            };
            let (o, t) = cpm_accumulator_run(&x, &y, &init, &cfg).map_err(err)?;
            (vec![o], (1, 1), t)
        }
        Arch::Systolic | Arch::TensorCore => {
            return Err(format!("{} takes real operands only", cfg.arch));
        }
        Arch::TransformEngine => {
            let x = vector_of(b, "transform input")?;
            let (o, t) = ctransform_engine_run(a, &x, None, &cfg).map_err(err)?;
            let n = o.len();
            (o, (n, 1), t)
        }
        Arch::ConvEngine => {
            let w = vector_of(a, "kernel")?;
            let x = vector_of(b, "signal")?;
            let (o, t) = cconv_engine_run(&w, &x, None, &cfg).map_err(err)?;
            let n = o.len();
            (o, (1, n), t)
        }
    };
    let render = |v: &[Cx<T>]| render_rows(shape.0, shape.1, v, render_complex);
    let halved = if doubles {
        Some(render(&shift_right_complex(&out).map_err(err)?))
    } else {
        None
    };
    Ok(SimOutcome {
        output: render(&out),
        halved,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sqmul::hwsim::Variant;

    fn ints(rows: &[&[i64]]) -> AnyMatrix {
        AnyMatrix::Int(Matrix::from_i64_rows(rows).unwrap())
    }

    #[test]
    fn systolic_example_is_doubled() {
        let cfg = SimConfig::new(Arch::Systolic, Variant::Sq).unwrap();
        let r = simulate(cfg, &ints(&[&[1, 2], &[3, 4]]), &ints(&[&[5, 6], &[7, 8]]), None, Tiling::default())
            .unwrap();
        assert_eq!(r.output, "[[38,44],[86,100]]");
        assert_eq!(r.halved.as_deref(), Some("[[19,22],[43,50]]"));
    }

    #[test]
    fn every_architecture_runs() {
        let a = ints(&[&[1, -2], &[3, 4]]);
        let b = ints(&[&[5, 6], &[-7, 8]]);
        let x = ints(&[&[2, -1, 3, 1]]);
        for arch in Arch::ALL {
            for &v in arch.variants() {
                if v.is_complex() {
                    continue;
                }
                let cfg = SimConfig::new(arch, v).unwrap();
                let rhs = if arch == Arch::ConvEngine { &x } else { &b };
                let lhs = if arch == Arch::ConvEngine { &ints(&[&[1, 2]]) } else { &a };
                let rhs = if arch == Arch::TransformEngine { &ints(&[&[1], &[2]]) } else { rhs };
                assert!(simulate(cfg, lhs, rhs, Some(8), Tiling::default()).is_ok(), "{arch} {v}");
            }
        }
    }

    #[test]
    fn complex_accumulator() {
        let x = AnyMatrix::CInt(CMatrix::from_i64_pairs(&[&[(1, 2)]]).unwrap());
        let y = AnyMatrix::CInt(CMatrix::from_i64_pairs(&[&[(3, 4)]]).unwrap());
        for v in [Variant::Cpm, Variant::Cpm3] {
            let r = simulate(SimConfig::new(Arch::PmAcc, v).unwrap(), &x, &y, None, Tiling::default()).unwrap();
            assert_eq!(r.output, "-10+20i");
            assert_eq!(r.halved.as_deref(), Some("-5+10i"));
        }
    }

    #[test]
    fn mismatched_dims_fail() {
        let cfg = SimConfig::new(Arch::Systolic, Variant::Sq).unwrap();
        assert!(simulate(cfg, &ints(&[&[1, 2]]), &ints(&[&[1, 2]]), None, Tiling::default()).is_err());
    }
}
