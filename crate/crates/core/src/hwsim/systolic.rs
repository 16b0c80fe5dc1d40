//! Weight-stationary systolic array on partial multiplications.
//!
//! For `C = A·B` with `A` of shape `M x N` and `B` of shape `N x P`, the grid
//! has `N` rows and `M` columns and `PE(k, i)` holds `a_ik` in REGA.
//!
//! Schedule (cycle numbers are this model's, the architecture fixes only the
//! order of events):
//! - cycles `0..M` load: row `k` shifts `a_{M-1-t, k}` in from the left at
//!   cycle `t`, so after `M` cycles every REGA holds its weight.
//! - compute cycle `τ` (absolute cycle `M + τ`): `b_kj` enters row `k` at
//!   `τ = j + k` and moves right one PE per cycle. Partial sums move down;
//!   the top of column `i` is fed `Sa_i`.
//! - `Sb_j` enters the bottom-left adder at `τ = j + N` and moves right with
//!   the emerging results, so column `i` emits `2·c_ij` at cycle
//!   `M + N + i + j`.
//!
//! A run takes `2M + N + P - 1` cycles. The MAC variant runs the same
//! schedule with multipliers and zero corrections.

use super::datapath::Lane;
use super::trace::{Recorder, Signal, SimTrace};
use super::{Arch, SimConfig, Variant};
use crate::correction::{real_mat_corrections, CorrectionSet};
use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::Matrix;
use crate::numeric::{Element, WidthClass};

/// Total cycles of one run of the schedule above.
pub fn systolic_cycles(m: usize, n: usize, p: usize) -> u64 {
    (2 * m + n + p - 1) as u64
}

/// Cycle at which column `i` emits result `(i, j)`.
pub fn systolic_output_cycle(m: usize, n: usize, i: usize, j: usize) -> u64 {
    (m + n + i + j) as u64
}

/// Runs `A·B` on the array. Returns `2·A·B` for SQ and `A·B` for MAC.
///
/// `corrections` are the `(Sa, Sb)` of `A` and `B`; computed here when
/// absent, ignored by MAC.
pub fn systolic_run<T: Element>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    corrections: Option<&CorrectionSet<T>>,
    cfg: &SimConfig,
) -> Result<(Matrix<T>, SimTrace)> {
    cfg.expect(Arch::Systolic, false)?;
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    if b.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions differ: {m}x{n} times {}x{p}",
            b.rows()
        )));
    }
    if let Some(dims) = cfg.array_dims {
        if dims != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} array cannot hold a {m}x{n} weight matrix",
                dims.0, dims.1
            )));
        }
    }

    let (sa, sb) = if cfg.variant == Variant::Sq {
        let set = match corrections {
            Some(set) => {
                set.check_sources(&[a.fingerprint(), b.fingerprint()])?;
                set.clone()
            }
            None => real_mat_corrections(a, b, &mut OpLedger::new())?,
        };
        let (sa, sb) = set.real_mat()?;
        (sa.to_vec(), sb.to_vec())
    } else {
        (vec![T::zero(); m], vec![T::zero(); p])
    };

    let mut rec: Recorder = cfg.recorder();
    let pe_name = |k: usize, i: usize| format!("PE_{k}_{i}");

    // Load phase.
    let mut rega: Vec<Vec<Option<T>>> = vec![vec![None; m]; n];
    for t in 0..m {
        rec.cycle = t as u64;
        for k in 0..n {
            for i in (1..m).rev() {
                rega[k][i] = rega[k][i - 1].clone();
            }
            rega[k][0] = Some(a.get(m - 1 - t, k).clone());
            for i in 0..m {
                let unit = pe_name(k, i);
                if t == 0 {
                    rec.control(&unit, Signal::MuxSel, "load");
                }
                if let Some(w) = &rega[k][i] {
                    rec.real(&unit, Signal::Rega, w, WidthClass::Input);
                }
            }
        }
    }
    let rega: Vec<Vec<T>> = rega
        .into_iter()
        .map(|row| row.into_iter().map(|v| v.expect("load phase fills every PE")).collect())
        .collect();
    debug_assert!((0..n).all(|k| (0..m).all(|i| &rega[k][i] == a.get(i, k))));

    // Compute phase.
    let mut b_pos: Vec<Vec<Option<T>>> = vec![vec![None; m]; n];
    let mut psum: Vec<Vec<Option<T>>> = vec![vec![None; m]; n];
    let mut sb_pos: Vec<Option<T>> = vec![None; m];
    let mut out: Vec<Option<T>> = vec![None; m * p];
    for tau in 0..m + n + p - 1 {
        rec.cycle = (m + tau) as u64;
        let mut new_b = vec![vec![None; m]; n];
        let mut new_psum = vec![vec![None; m]; n];
        for k in 0..n {
            new_b[k][0] = (tau >= k && tau - k < p).then(|| b.get(k, tau - k).clone());
            for i in 1..m {
                new_b[k][i] = b_pos[k][i - 1].clone();
            }
        }
        for k in 0..n {
            for i in 0..m {
                let unit = pe_name(k, i);
                if tau == 0 {
                    rec.control(&unit, Signal::MuxSel, "compute");
                }
                let Some(x) = &new_b[k][i] else { continue };
                let above = if k == 0 {
                    rec.real(&format!("TOP_{i}"), Signal::Sa, &sa[i], WidthClass::Accumulator);
                    sa[i].clone()
                } else {
                    psum[k - 1][i].clone().expect("partial sum arrives with its operand")
                };
                rec.real(&unit, Signal::B, x, WidthClass::Input);
                let q = <T as Lane<T>>::pe(cfg.variant, &rega[k][i], x, &mut rec, &unit);
                let acc = above + q;
                rec.real(&unit, Signal::Acc, &acc, WidthClass::Accumulator);
                new_psum[k][i] = Some(acc);
            }
        }
        let mut new_sb = vec![None; m];
        new_sb[0] = (tau >= n && tau - n < p).then(|| sb[tau - n].clone());
        for i in 1..m {
            new_sb[i] = sb_pos[i - 1].clone();
        }
        for (i, s) in new_sb.iter().enumerate() {
            let Some(s) = s else { continue };
            let unit = format!("BOT_{i}");
            rec.real(&unit, Signal::Sb, s, WidthClass::Accumulator);
            let bottom = psum[n - 1][i].clone().expect("column result meets its Sb");
            let o = bottom + s.clone();
            rec.real(&unit, Signal::O, &o, WidthClass::Accumulator);
            let j = tau - n - i;
            out[i * p + j] = Some(o);
        }
        b_pos = new_b;
        psum = new_psum;
        sb_pos = new_sb;
    }

    let data: Vec<T> = out
        .into_iter()
        .map(|v| v.expect("every result emerges"))
        .collect();
    for i in 0..m {
        for j in 0..p {
            rec.keep(&format!("C_{i}_{j}"), Signal::O, data[i * p + j].render());
        }
    }
    let trace = rec.finish(systolic_cycles(m, n, p), cfg.strict_widths)?;
    Ok((Matrix::new(m, p, data)?, trace))
}
