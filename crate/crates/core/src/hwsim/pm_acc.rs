//! The single partial-multiplication accumulator: one pre-adder, one squarer
//! and an accumulator register that is initialised with the corrections
//! instead of being cleared.

use super::datapath::Lane;
use super::trace::{Recorder, Signal, SimTrace};
use super::{Arch, SimConfig};
use crate::error::{Error, Result};
use crate::numeric::{Cx, Element, WidthClass};

/// Cycle 0 loads `init`; cycle `t + 1` accumulates the partial product of
/// `a[t]` and `b[t]`. With `init = Sa_i + Sb_j` the SQ variant ends at
/// `2·Σ a_t b_t`; the MAC variant accumulates plain products.
pub fn pm_accumulator_run<T: Element>(
    a: &[T],
    b: &[T],
    init: &T,
    cfg: &SimConfig,
) -> Result<(T, SimTrace)> {
    cfg.expect(Arch::PmAcc, false)?;
    run(a, b, init, cfg)
}

/// Complex accumulator on CPM or CPM3 partial products (or schoolbook MAC).
/// `init` carries the complex corrections of the row and column.
pub fn cpm_accumulator_run<T: Element>(
    a: &[Cx<T>],
    b: &[Cx<T>],
    init: &Cx<T>,
    cfg: &SimConfig,
) -> Result<(Cx<T>, SimTrace)> {
    cfg.expect(Arch::PmAcc, true)?;
    run(a, b, init, cfg)
}

fn run<T: Element, V: Lane<T>>(
    a: &[V],
    b: &[V],
    init: &V,
    cfg: &SimConfig,
) -> Result<(V, SimTrace)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "operand sequences of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let unit = "PE";
    let mut rec: Recorder = cfg.recorder();
    init.record(&mut rec, unit, Signal::Init, WidthClass::Accumulator);
    let mut acc = init.clone();
    acc.record(&mut rec, unit, Signal::Acc, WidthClass::Accumulator);
    for (t, (x, y)) in a.iter().zip(b).enumerate() {
        rec.cycle = t as u64 + 1;
        x.record(&mut rec, unit, Signal::A, WidthClass::Input);
        y.record(&mut rec, unit, Signal::B, WidthClass::Input);
        let p = V::pe(cfg.variant, x, y, &mut rec, unit);
        acc = acc.plus(&p);
        acc.record(&mut rec, unit, Signal::Acc, WidthClass::Accumulator);
    }
    acc.record(&mut rec, unit, Signal::O, WidthClass::Accumulator);
    rec.keep(unit, Signal::Acc, acc.render());
    let trace = rec.finish(a.len() as u64 + 1, cfg.strict_widths)?;
    Ok((acc, trace))
}
