//! Tensor core: a `tm x tn` grid of PEs computing `C <- A_t·B_t + C` on one
//! pair of tiles per cycle.
//!
//! In the square-based PE the Init signal loads `Sa_i + Sb_j` instead of
//! clearing the accumulator, with both corrections taken from the full row
//! and column of the large matrices. After the last tile pair the output is
//! twice the full dot product. The MAC PE clears to zero on Init.

use super::datapath::Lane;
use super::trace::{Recorder, SimTrace};
use super::{Arch, SimConfig, Signal, Variant};
use crate::correction::real_mat_corrections;
use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::Matrix;
use crate::numeric::{Element, WidthClass};

/// Runs one output tile. `a_tiles[t]` is `tm x tk`, `b_tiles[t]` is
/// `tk x tn`. `init` holds the `(Sa, Sb)` slices for this tile's rows and
/// columns; required by SQ, ignored by MAC.
///
/// Cycle 0 is Init; cycle `t + 1` consumes tile pair `t`.
pub fn tensorcore_run<T: Element>(
    a_tiles: &[Matrix<T>],
    b_tiles: &[Matrix<T>],
    init: Option<(&[T], &[T])>,
    cfg: &SimConfig,
) -> Result<(Matrix<T>, SimTrace)> {
    cfg.expect(Arch::TensorCore, false)?;
    let (first_a, first_b) = match (a_tiles.first(), b_tiles.first()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::TileShape("no tiles".into())),
    };
    if a_tiles.len() != b_tiles.len() {
        return Err(Error::TileShape(format!(
            "{} A tiles but {} B tiles",
            a_tiles.len(),
            b_tiles.len()
        )));
    }
    let (tm, tk) = first_a.shape();
    let tn = first_b.cols();
    if a_tiles.iter().any(|t| t.shape() != (tm, tk)) || b_tiles.iter().any(|t| t.shape() != (tk, tn))
    {
        return Err(Error::TileShape(format!(
            "tiles must all be {tm}x{tk} and {tk}x{tn}"
        )));
    }
    if let Some(dims) = cfg.array_dims {
        if dims != (tm, tn) {
            return Err(Error::TileShape(format!(
                "{tm}x{tn} output tile on a {}x{} grid",
                dims.0, dims.1
            )));
        }
    }
    let (sa, sb) = match (cfg.variant, init) {
        (Variant::Sq, Some((sa, sb))) => {
            if sa.len() != tm || sb.len() != tn {
                return Err(Error::TileShape(format!(
                    "corrections of length {} and {} for a {tm}x{tn} tile",
                    sa.len(),
                    sb.len()
                )));
            }
            (sa.to_vec(), sb.to_vec())
        }
        (Variant::Sq, None) => {
            return Err(Error::InvalidParameter(
                "square-based tensor core needs full-row and full-column corrections".into(),
            ))
        }
        _ => (vec![T::zero(); tm], vec![T::zero(); tn]),
    };

    let mut rec: Recorder = cfg.recorder();
    let name = |i: usize, j: usize| format!("PE_{i}_{j}");
    let mut acc = Vec::with_capacity(tm * tn);
    for i in 0..tm {
        for j in 0..tn {
            let unit = name(i, j);
            rec.real(&unit, Signal::Sa, &sa[i], WidthClass::Accumulator);
            rec.real(&unit, Signal::Sb, &sb[j], WidthClass::Accumulator);
            let v = sa[i].clone() + sb[j].clone();
            rec.real(&unit, Signal::Init, &v, WidthClass::Accumulator);
            acc.push(v);
        }
    }
    for (t, (at, bt)) in a_tiles.iter().zip(b_tiles).enumerate() {
        rec.cycle = t as u64 + 1;
        for i in 0..tm {
            for j in 0..tn {
                let unit = name(i, j);
                let mut partial = T::zero();
                for (x, y) in at.row(i).iter().zip(bt.col(j)) {
                    rec.real(&unit, Signal::A, x, WidthClass::Input);
                    rec.real(&unit, Signal::B, y, WidthClass::Input);
                    partial = partial + <T as Lane<T>>::pe(cfg.variant, x, y, &mut rec, &unit);
                }
                let v = &mut acc[i * tn + j];
                *v = v.clone() + partial;
                rec.real(&unit, Signal::Acc, v, WidthClass::Accumulator);
            }
        }
    }
    for i in 0..tm {
        for j in 0..tn {
            let unit = name(i, j);
            rec.real(&unit, Signal::O, &acc[i * tn + j], WidthClass::Accumulator);
            rec.keep(&unit, Signal::O, acc[i * tn + j].render());
        }
    }
    let trace = rec.finish(a_tiles.len() as u64 + 1, cfg.strict_widths)?;
    Ok((Matrix::new(tm, tn, acc)?, trace))
}

/// Full `A·B` on a tensor core with output tiles of `cfg.array_dims` and
/// inner tiles `tile_depth` wide. Output tiles run one after another; their
/// traces are concatenated, with units prefixed `T_bi_bj`.
pub fn tensorcore_matmul<T: Element>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    tile_depth: usize,
    cfg: &SimConfig,
) -> Result<(Matrix<T>, SimTrace)> {
    let (tm, tn) = cfg
        .array_dims
        .ok_or_else(|| Error::InvalidParameter("tensor core needs array_dims".into()))?;
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions differ: {m}x{n} times {}x{p}",
            b.rows()
        )));
    }
    if tm == 0 || tn == 0 || tile_depth == 0 || m % tm != 0 || p % tn != 0 || n % tile_depth != 0 {
        return Err(Error::TileShape(format!(
            "{m}x{n}·{n}x{p} does not split into {tm}x{tile_depth} and {tile_depth}x{tn} tiles"
        )));
    }
    let set = real_mat_corrections(a, b, &mut OpLedger::new())?;
    let (sa, sb) = set.real_mat()?;
    let mut out = Matrix::zeros(m, p)?;
    let mut parts = Vec::new();
    for bi in 0..m / tm {
        for bj in 0..p / tn {
            let mut a_tiles = Vec::new();
            let mut b_tiles = Vec::new();
            for t in 0..n / tile_depth {
                a_tiles.push(a.block(bi * tm, t * tile_depth, tm, tile_depth)?);
                b_tiles.push(b.block(t * tile_depth, bj * tn, tile_depth, tn)?);
            }
            let init = (&sa[bi * tm..(bi + 1) * tm], &sb[bj * tn..(bj + 1) * tn]);
            let (c, trace) = tensorcore_run(&a_tiles, &b_tiles, Some(init), cfg)?;
            for i in 0..tm {
                for j in 0..tn {
                    out.set(bi * tm + i, bj * tn + j, c.get(i, j).clone());
                }
            }
            parts.push((format!("T_{bi}_{bj}"), trace));
        }
    }
    Ok((out, SimTrace::sequence(parts)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels_real::matmul_mac;
    use num_bigint::BigInt;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(v: Variant) -> SimConfig {
        SimConfig::new(Arch::TensorCore, v).unwrap()
    }

    fn one(v: i64) -> Matrix<BigInt> {
        Matrix::from_i64_rows(&[&[v]]).unwrap()
    }

    #[test]
    fn scalar_tiles_match_the_accumulator() {
        let a = [one(1), one(2)];
        let b = [one(5), one(7)];
        let sa = [BigInt::from(-5)];
        let sb = [BigInt::from(-74)];
        let (o, trace) = tensorcore_run(&a, &b, Some((&sa, &sb)), &cfg(Variant::Sq)).unwrap();
        assert_eq!(o, one(38));
        assert_eq!(trace.cycles_total, 3);
    }

    #[test]
    fn mac_identity_tiles() {
        let id = Matrix::<BigInt>::identity(2).unwrap();
        let b = Matrix::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let (o, _) = tensorcore_run(&[id], &[b.clone()], None, &cfg(Variant::Mac)).unwrap();
        assert_eq!(o, b);
    }

    #[test]
    fn eight_by_eight_in_four_wide_tiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let a = Matrix::from_fn(8, 8, |_, _| BigInt::from(rng.gen_range(-1000..=1000))).unwrap();
        let b = Matrix::from_fn(8, 8, |_, _| BigInt::from(rng.gen_range(-1000..=1000))).unwrap();
        let want = matmul_mac(&a, &b).unwrap().0;
        let (o, trace) = tensorcore_matmul(&a, &b, 4, &cfg(Variant::Sq).with_dims(8, 8)).unwrap();
        assert_eq!(o, want.doubled());
        assert_eq!(trace.cycles_total, 3);
        let (o, trace) = tensorcore_matmul(&a, &b, 2, &cfg(Variant::Sq).with_dims(4, 2)).unwrap();
        assert_eq!(o, want.doubled());
        assert_eq!(trace.cycles_total, 8 * 5);
        let (o, _) = tensorcore_matmul(&a, &b, 4, &cfg(Variant::Mac).with_dims(4, 4)).unwrap();
        assert_eq!(o, want);
    }

    #[test]
    fn shape_errors() {
        let a = [one(1), one(2)];
        let b = [one(5)];
        assert!(matches!(
            tensorcore_run(&a, &b, None, &cfg(Variant::Mac)),
            Err(Error::TileShape(_))
        ));
        assert!(tensorcore_run(&a, &a, None, &cfg(Variant::Sq)).is_err());
        let m = Matrix::<BigInt>::zeros(6, 6).unwrap();
        assert!(matches!(
            tensorcore_matmul(&m, &m, 4, &cfg(Variant::Sq).with_dims(3, 3)),
            Err(Error::TileShape(_))
        ));
    }
}
