//! Convolution engine for `z_k = Σ_i w_i x_{i+k}` over a sample stream.
//!
//! MAC-direct keeps the last `N` samples in a delay line and forms each output
//! from all taps at once. The other variants use the transposed form: every
//! sample is combined with all kernel taps in the same cycle and added into a
//! chain of registers `R[m] <- R[m+1] + contrib(w_{N-1-m}, x)`; `R[0]` is an
//! output from cycle `N - 1` on. Square-based variants broadcast the shared
//! per-sample term into every contribution and add the kernel correction once,
//! at the output.

use super::datapath::Lane;
use super::trace::{Recorder, Signal, SimTrace};
use super::{Arch, SimConfig, Variant};
use crate::correction::{conv_corrections, ConvKernel, CorrectionSet};
use crate::error::Result;
use crate::kernels_real::check_conv1d;
use crate::ledger::OpLedger;
use crate::matrix::fingerprint_slice;
use crate::numeric::{Cx, Element, WidthClass};

/// Real engine: MAC (transposed), MAC-direct or SQ. `sw` is the kernel
/// correction; computed when absent.
pub fn conv_engine_run<T: Element>(
    w: &[T],
    x: &[T],
    sw: Option<&CorrectionSet<T>>,
    cfg: &SimConfig,
) -> Result<(Vec<T>, SimTrace)> {
    cfg.expect(Arch::ConvEngine, false)?;
    check_conv1d(w, x)?;
    let corr = if cfg.variant == Variant::Sq {
        let set = resolve(w, sw, ConvKernel::Real1D(w))?;
        set.real_conv1d()?.clone()
    } else {
        T::zero()
    };
    run(w, x, corr, cfg)
}

/// Complex engine: MAC (transposed), MAC-direct, CPM or CPM3. `sw` is the
/// ComplexConv set for CPM and the Complex3Conv set for CPM3.
pub fn cconv_engine_run<T: Element>(
    w: &[Cx<T>],
    x: &[Cx<T>],
    sw: Option<&CorrectionSet<T>>,
    cfg: &SimConfig,
) -> Result<(Vec<Cx<T>>, SimTrace)> {
    cfg.expect(Arch::ConvEngine, true)?;
    check_conv1d(w, x)?;
    let corr = match cfg.variant {
        Variant::Cpm => {
            let s = resolve(w, sw, ConvKernel::Complex(w))?.complex_conv()?.clone();
            Cx::new(s.clone(), s)
        }
        Variant::Cpm3 => resolve(w, sw, ConvKernel::Complex3(w))?
            .complex3_conv()?
            .clone(),
        _ => Cx::new(T::zero(), T::zero()),
    };
    run(w, x, corr, cfg)
}

fn resolve<T: Element, U: crate::matrix::Fingerprinted>(
    w: &[U],
    given: Option<&CorrectionSet<T>>,
    kernel: ConvKernel<'_, T>,
) -> Result<CorrectionSet<T>> {
    match given {
        Some(set) => {
            set.check_sources(&[fingerprint_slice(w)])?;
            Ok(set.clone())
        }
        None => conv_corrections(kernel, &mut OpLedger::new()),
    }
}

fn run<T: Element, V: Lane<T>>(
    w: &[V],
    x: &[V],
    corr: V,
    cfg: &SimConfig,
) -> Result<(Vec<V>, SimTrace)> {
    let n = w.len();
    let mut rec: Recorder = cfg.recorder();
    let mut out = Vec::with_capacity(x.len() + 1 - n);
    if cfg.variant == Variant::MacDirect {
        let mut taps: Vec<V> = vec![V::zero(); n];
        for (t, xt) in x.iter().enumerate() {
            rec.cycle = t as u64;
            xt.record(&mut rec, "IN", Signal::X, WidthClass::Input);
            taps.rotate_right(1);
            taps[0] = xt.clone();
            for (m, d) in taps.iter().enumerate() {
                d.record(&mut rec, &format!("TAP_{m}"), Signal::B, WidthClass::Input);
            }
            if t + 1 >= n {
                let mut y = V::zero();
                for (i, wi) in w.iter().enumerate() {
                    let unit = format!("MUL_{i}");
                    y = y.plus(&V::pe(Variant::Mac, wi, &taps[n - 1 - i], &mut rec, &unit));
                }
                y.record(&mut rec, "OUT", Signal::O, WidthClass::Accumulator);
                out.push(y);
            }
        }
    } else {
        let mut regs: Vec<V> = vec![V::zero(); n];
        for (t, xt) in x.iter().enumerate() {
            rec.cycle = t as u64;
            xt.record(&mut rec, "IN", Signal::X, WidthClass::Input);
            let shared = V::shared(cfg.variant, xt, &mut rec, "IN");
            let mut next = Vec::with_capacity(n);
            for m in 0..n {
                let unit = format!("R_{m}");
                let mut p = V::pe(cfg.variant, xt, &w[n - 1 - m], &mut rec, &unit);
                if let Some(s) = &shared {
                    p = p.plus(s);
                }
                let carried = if m + 1 < n { regs[m + 1].plus(&p) } else { p };
                carried.record(&mut rec, &unit, Signal::Acc, WidthClass::Accumulator);
                next.push(carried);
            }
            regs = next;
            if t + 1 >= n {
                corr.record(&mut rec, "OUT", Signal::Sa, WidthClass::Accumulator);
                let y = regs[0].plus(&corr);
                y.record(&mut rec, "OUT", Signal::O, WidthClass::Accumulator);
                out.push(y);
            }
        }
    }
    for (k, y) in out.iter().enumerate() {
        rec.keep(&format!("Y_{k}"), Signal::O, y.render());
    }
    let trace = rec.finish(x.len() as u64, cfg.strict_widths)?;
    Ok((out, trace))
}
