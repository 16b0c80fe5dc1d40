//! Real-valued kernels: conventional multiply-accumulate oracles and their
//! square-based counterparts.
//!
//! Square-based kernels return true results. The doubled accumulator each one
//! builds internally goes through [`halve_exact`] before it is returned, so
//! over integers an odd doubled value surfaces as an error instead of a
//! silently truncated result.
//!
//! Convolutions are correlations (no kernel flip) in "valid" mode.

use crate::correction::{real_mat_corrections, CorrectionSet};
use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::{fingerprint_slice, Matrix};
use crate::numeric::{halve_exact, mul, pm, square, Element};

fn check_inner<T: Clone>(a: &Matrix<T>, b: &Matrix<T>) -> Result<()> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

fn check_transform<T: Clone>(w: &Matrix<T>, x: &[T]) -> Result<()> {
    if w.cols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} transform applied to {} samples",
            w.rows(),
            w.cols(),
            x.len()
        )));
    }
    Ok(())
}

pub(crate) fn check_conv1d<U>(w: &[U], x: &[U]) -> Result<usize> {
    if w.is_empty() {
        return Err(Error::InvalidParameter("convolution kernel is empty".into()));
    }
    if w.len() > x.len() {
        return Err(Error::KernelTooLong {
            kernel: w.len().to_string(),
            signal: x.len().to_string(),
        });
    }
    Ok(x.len() - w.len() + 1)
}

fn check_conv2d<T: Clone>(w: &Matrix<T>, x: &Matrix<T>) -> Result<(usize, usize)> {
    if w.rows() > x.rows() || w.cols() > x.cols() {
        return Err(Error::KernelTooLong {
            kernel: format!("{}x{}", w.rows(), w.cols()),
            signal: format!("{}x{}", x.rows(), x.cols()),
        });
    }
    Ok((x.rows() - w.rows() + 1, x.cols() - w.cols() + 1))
}

/// Schoolbook `A·B`.
pub fn matmul_mac<T: Element>(a: &Matrix<T>, b: &Matrix<T>) -> Result<(Matrix<T>, OpLedger)> {
    check_inner(a, b)?;
    let mut ledger = OpLedger::new();
    let c = Matrix::from_fn(a.rows(), b.cols(), |i, j| {
        a.row(i).iter().zip(b.col(j)).fold(T::zero(), |acc, (x, y)| {
            ledger.additions += 1;
            acc + mul(x, y, &mut ledger)
        })
    })?;
    Ok((c, ledger))
}

/// `A·B` with one squaring per product.
///
/// Each output accumulates `Σ_k (a_ik + b_kj)²`, adds the row correction of
/// `A` and the column correction of `B`, and halves. Pass `corrections` to
/// reuse precomputed terms; otherwise they are computed here and their
/// squarings are charged to the returned ledger.
pub fn matmul_sq<T: Element>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    corrections: Option<&CorrectionSet<T>>,
) -> Result<(Matrix<T>, OpLedger)> {
    check_inner(a, b)?;
    let mut ledger = OpLedger::new();
    let fresh;
    let set = match corrections {
        Some(set) => {
            set.check_sources(&[a.fingerprint(), b.fingerprint()])?;
            set
        }
        None => {
            fresh = real_mat_corrections(a, b, &mut ledger)?;
            &fresh
        }
    };
    let (sa, sb) = set.real_mat()?;
    let mut data = Vec::with_capacity(a.rows() * b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = sa[i].clone() + sb[j].clone();
            ledger.additions += 1;
            for (x, y) in a.row(i).iter().zip(b.col(j)) {
                acc = acc + pm(x, y, &mut ledger);
                ledger.additions += 1;
            }
            data.push(halve_exact(&acc, &mut ledger)?);
        }
    }
    Ok((Matrix::new(a.rows(), b.cols(), data)?, ledger))
}

/// `X_k = Σ_i w_ki x_i`.
pub fn transform_mac<T: Element>(w: &Matrix<T>, x: &[T]) -> Result<(Vec<T>, OpLedger)> {
    check_transform(w, x)?;
    let mut ledger = OpLedger::new();
    let out = (0..w.rows())
        .map(|k| {
            w.row(k).iter().zip(x).fold(T::zero(), |acc, (wk, xi)| {
                ledger.additions += 1;
                acc + mul(wk, xi, &mut ledger)
            })
        })
        .collect();
    Ok((out, ledger))
}

/// Square-based linear transform. Registers start at `Sw_k`; each sample
/// `x_i` is squared once and that square is subtracted from all `K` partial
/// products `(w_ki + x_i)²`, so every sample step costs `K + 1` squarings.
pub fn transform_sq<T: Element>(
    w: &Matrix<T>,
    x: &[T],
    sw: &CorrectionSet<T>,
) -> Result<(Vec<T>, OpLedger)> {
    check_transform(w, x)?;
    sw.check_sources(&[w.fingerprint()])?;
    let mut acc = sw.real_transform()?.to_vec();
    let mut ledger = OpLedger::new();
    for (i, xi) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = square(xi, &mut ledger);
        for (k, reg) in acc.iter_mut().enumerate() {
            *reg = reg.clone() + pm(w.get(k, i), xi, &mut ledger) - shared.clone();
            ledger.additions += 2;
        }
        ledger.end_step();
    }
    let out = acc
        .iter()
        .map(|v| halve_exact(v, &mut ledger))
        .collect::<Result<_>>()?;
    Ok((out, ledger))
}

/// `y_k = Σ_i w_i x_{i+k}`, valid mode.
pub fn conv1d_mac<T: Element>(w: &[T], x: &[T]) -> Result<(Vec<T>, OpLedger)> {
    let outputs = check_conv1d(w, x)?;
    let mut ledger = OpLedger::new();
    let y = (0..outputs)
        .map(|k| {
            w.iter().zip(&x[k..]).fold(T::zero(), |acc, (wi, xi)| {
                ledger.additions += 1;
                acc + mul(wi, xi, &mut ledger)
            })
        })
        .collect();
    Ok((y, ledger))
}

/// Square-based 1-D convolution in transposed form: every incoming sample is
/// squared once and partially multiplied with each tap whose output is in
/// range. `Sw` is added once per output at the end.
pub fn conv1d_sq<T: Element>(
    w: &[T],
    x: &[T],
    sw: &CorrectionSet<T>,
) -> Result<(Vec<T>, OpLedger)> {
    let outputs = check_conv1d(w, x)?;
    sw.check_sources(&[fingerprint_slice(w)])?;
    let sw = sw.real_conv1d()?;
    let n = w.len();
    let mut acc = vec![T::zero(); outputs];
    let mut ledger = OpLedger::new();
    for (j, xj) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = square(xj, &mut ledger);
        // Sample j feeds output k through tap i = j - k.
        let first = j.saturating_sub(n - 1);
        let last = j.min(outputs - 1);
        for k in first..=last {
            acc[k] = acc[k].clone() + pm(&w[j - k], xj, &mut ledger) - shared.clone();
            ledger.additions += 2;
        }
        ledger.end_step();
    }
    let y = acc
        .iter()
        .map(|v| {
            ledger.additions += 1;
            halve_exact(&(v.clone() + sw.clone()), &mut ledger)
        })
        .collect::<Result<_>>()?;
    Ok((y, ledger))
}

/// `y_hk = Σ_ij w_ij x_{h+i, k+j}`, valid mode.
pub fn conv2d_mac<T: Element>(w: &Matrix<T>, x: &Matrix<T>) -> Result<(Matrix<T>, OpLedger)> {
    let (out_rows, out_cols) = check_conv2d(w, x)?;
    let mut ledger = OpLedger::new();
    let y = Matrix::from_fn(out_rows, out_cols, |h, k| {
        let mut acc = T::zero();
        for i in 0..w.rows() {
            for j in 0..w.cols() {
                acc = acc + mul(w.get(i, j), x.get(h + i, k + j), &mut ledger);
                ledger.additions += 1;
            }
        }
        acc
    })?;
    Ok((y, ledger))
}

/// Square-based 2-D convolution. Each sample's square is computed once per
/// run and shared by every window covering it.
pub fn conv2d_sq<T: Element>(
    w: &Matrix<T>,
    x: &Matrix<T>,
    sw: &CorrectionSet<T>,
) -> Result<(Matrix<T>, OpLedger)> {
    let (out_rows, out_cols) = check_conv2d(w, x)?;
    sw.check_sources(&[w.fingerprint()])?;
    let sw = sw.real_conv2d()?;
    let mut ledger = OpLedger::new();
    let sample_sq = x.map(|v| square(v, &mut ledger));
    let mut data = Vec::with_capacity(out_rows * out_cols);
    for h in 0..out_rows {
        for k in 0..out_cols {
            let mut acc = sw.clone();
            for i in 0..w.rows() {
                for j in 0..w.cols() {
                    acc = acc + pm(w.get(i, j), x.get(h + i, k + j), &mut ledger)
                        - sample_sq.get(h + i, k + j).clone();
                    ledger.additions += 2;
                }
            }
            data.push(halve_exact(&acc, &mut ledger)?);
        }
    }
    Ok((Matrix::new(out_rows, out_cols, data)?, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correction::{conv_corrections, transform_corrections, ConvKernel};
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type M = Matrix<BigInt>;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, range: i64) -> M {
        M::from_fn(rows, cols, |_, _| BigInt::from(rng.gen_range(-range..=range))).unwrap()
    }

    #[test]
    fn matmul_examples() {
        let a = M::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = M::from_i64_rows(&[&[5, 6], &[7, 8]]).unwrap();
        let want = M::from_i64_rows(&[&[19, 22], &[43, 50]]).unwrap();
        let (c, l) = matmul_mac(&a, &b).unwrap();
        assert_eq!(c, want);
        assert_eq!((l.multiplications, l.squarings), (8, 0));
        let (c, l) = matmul_sq(&a, &b, None).unwrap();
        assert_eq!(c, want);
        assert_eq!((l.multiplications, l.squarings), (0, 8 + 4 + 4));

        let id = M::identity(2).unwrap();
        assert_eq!(matmul_mac(&id, &b).unwrap().0, b);
        assert_eq!(matmul_sq(&id, &b, None).unwrap().0, b);
        let z = M::zeros(2, 2).unwrap();
        assert_eq!(matmul_mac(&a, &z).unwrap().0, z);
        assert_eq!(matmul_sq(&a, &z, None).unwrap().0, z);
    }

    #[test]
    fn matmul_sq_with_cached_corrections() {
        let a = M::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = M::from_i64_rows(&[&[5, 6], &[7, 8]]).unwrap();
        let set = real_mat_corrections(&a, &b, &mut OpLedger::new()).unwrap();
        let (c, l) = matmul_sq(&a, &b, Some(&set)).unwrap();
        assert_eq!(c, M::from_i64_rows(&[&[19, 22], &[43, 50]]).unwrap());
        assert_eq!(l.squarings, 8);

        let other = M::identity(2).unwrap();
        assert!(matches!(
            matmul_sq(&other, &b, Some(&set)),
            Err(Error::StaleCorrections { .. })
        ));
        let wrong = transform_corrections(&a, &mut OpLedger::new());
        assert!(matmul_sq(&a, &b, Some(&wrong)).is_err());
    }

    #[test]
    fn matmul_dimension_mismatch() {
        let a = M::zeros(2, 3).unwrap();
        assert!(matches!(matmul_mac(&a, &a), Err(Error::DimensionMismatch(_))));
        assert!(matches!(matmul_sq(&a, &a, None), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn matmul_random_7x5x9() {
        let mut rng = ChaCha8Rng::seed_from_u64(75);
        let a = random(&mut rng, 7, 5, 1 << 15);
        let b = random(&mut rng, 5, 9, 1 << 15);
        let (sq, l) = matmul_sq(&a, &b, None).unwrap();
        assert_eq!(sq, matmul_mac(&a, &b).unwrap().0);
        assert_eq!(l.squarings, 7 * 5 * 9 + 7 * 5 + 5 * 9);
        assert_eq!(l.halvings, 63);
    }

    #[test]
    fn transform_examples() {
        let w = M::from_i64_rows(&[&[1, 1], &[1, -1]]).unwrap();
        let x = ints(&[3, 5]);
        assert_eq!(transform_mac(&w, &x).unwrap().0, ints(&[8, -2]));
        let sw = transform_corrections(&w, &mut OpLedger::new());
        let (y, l) = transform_sq(&w, &x, &sw).unwrap();
        assert_eq!(y, ints(&[8, -2]));
        assert_eq!(l.squarings, 2 * 3);
        assert_eq!((l.step_squarings_min, l.step_squarings_max), (Some(3), Some(3)));

        let id = M::identity(3).unwrap();
        let x3 = ints(&[4, -7, 9]);
        assert_eq!(transform_mac(&id, &x3).unwrap().0, x3);
        let sid = transform_corrections(&id, &mut OpLedger::new());
        assert_eq!(transform_sq(&id, &x3, &sid).unwrap().0, x3);

        let zeros = ints(&[0, 0]);
        assert_eq!(transform_mac(&w, &zeros).unwrap().0, zeros);
        assert_eq!(transform_sq(&w, &zeros, &sw).unwrap().0, zeros);

        assert!(transform_sq(&w, &ints(&[1, 2, 3]), &sw).is_err());
        assert!(transform_sq(&id, &x3, &sw).is_err());
    }

    #[test]
    fn transform_random_8x8() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = random(&mut rng, 8, 8, 1 << 15);
        let x: Vec<BigInt> = random(&mut rng, 1, 8, 1 << 15).into_data();
        let sw = transform_corrections(&w, &mut OpLedger::new());
        assert_eq!(transform_sq(&w, &x, &sw).unwrap().0, transform_mac(&w, &x).unwrap().0);
    }

    #[test]
    fn conv1d_examples() {
        let w = ints(&[1, 2]);
        let x = ints(&[1, 2, 3]);
        assert_eq!(conv1d_mac(&w, &x).unwrap().0, ints(&[5, 8]));
        let sw = conv_corrections(ConvKernel::Real1D(&w), &mut OpLedger::new()).unwrap();
        let (y, l) = conv1d_sq(&w, &x, &sw).unwrap();
        assert_eq!(y, ints(&[5, 8]));
        assert_eq!(l.squarings, 3 + 4);
        assert!(l.step_squarings_max.unwrap() <= 3);

        let one = ints(&[1]);
        let s1 = conv_corrections(ConvKernel::Real1D(&one), &mut OpLedger::new()).unwrap();
        assert_eq!(conv1d_sq(&one, &ints(&[7]), &s1).unwrap().0, ints(&[7]));
        assert_eq!(conv1d_mac(&one, &x).unwrap().0, x);

        let wz = ints(&[0, 0]);
        assert_eq!(conv1d_mac(&wz, &x).unwrap().0, ints(&[0, 0]));
        assert_eq!(conv1d_sq(&w, &ints(&[0, 0, 0]), &sw).unwrap().0, ints(&[0, 0]));

        assert!(matches!(conv1d_mac(&x, &w), Err(Error::KernelTooLong { .. })));
        assert!(matches!(conv1d_sq(&x, &w, &sw), Err(Error::KernelTooLong { .. })));
    }

    #[test]
    fn conv2d_examples() {
        let w = M::from_i64_rows(&[&[1, 1], &[1, 1]]).unwrap();
        let x = M::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let sw = conv_corrections(ConvKernel::Real2D(&w), &mut OpLedger::new()).unwrap();
        let want = M::from_i64_rows(&[&[10]]).unwrap();
        assert_eq!(conv2d_mac(&w, &x).unwrap().0, want);
        assert_eq!(conv2d_sq(&w, &x, &sw).unwrap().0, want);

        let one = M::from_i64_rows(&[&[1]]).unwrap();
        let s1 = conv_corrections(ConvKernel::Real2D(&one), &mut OpLedger::new()).unwrap();
        assert_eq!(conv2d_sq(&one, &x, &s1).unwrap().0, x);
        assert!(matches!(conv2d_mac(&M::zeros(3, 1).unwrap(), &x), Err(Error::KernelTooLong { .. })));
    }

    #[test]
    fn conv2d_random_shares_sample_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let w = random(&mut rng, 3, 3, 1 << 15);
        let x = random(&mut rng, 8, 8, 1 << 15);
        let sw = conv_corrections(ConvKernel::Real2D(&w), &mut OpLedger::new()).unwrap();
        let (y, l) = conv2d_sq(&w, &x, &sw).unwrap();
        assert_eq!(y, conv2d_mac(&w, &x).unwrap().0);
        // 64 sample squares, 36 windows of 9 partial products.
        assert_eq!(l.squarings, 64 + 36 * 9);
    }

    #[test]
    fn float_domain_agrees_within_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Matrix::from_fn(6, 9, |_, _| rng.gen_range(-1e3..1e3)).unwrap();
        let b = Matrix::from_fn(9, 4, |_, _| rng.gen_range(-1e3..1e3)).unwrap();
        let (sq, _) = matmul_sq(&a, &b, None).unwrap();
        let (mac, _) = matmul_mac(&a, &b).unwrap();
        for i in 0..6 {
            for j in 0..4 {
                let scale: f64 = a.row(i).iter().zip(b.col(j)).map(|(x, y)| (x * y).abs()).sum();
                assert!((sq.get(i, j) - mac.get(i, j)).abs() <= 1e-9 * scale.max(1.0));
            }
        }
    }
}
