//! Transform engine: one register per output, all updated every cycle from
//! the sample entering that cycle.
//!
//! Registers are reset to the row corrections (`Sw_k`, `S_k(1+j)`, or the
//! 3-square pair), the shared per-sample term is computed once per cycle and
//! broadcast to every register, and after `N` cycles the registers hold the
//! doubled transform.

use super::datapath::Lane;
use super::trace::{Recorder, Signal, SimTrace};
use super::{Arch, SimConfig, Variant};
use crate::correction::{
    complex3_operand_corrections, complex4_corrections, transform_corrections, CorrectionSet,
    Cpm3Role, Side,
};
use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::{CMatrix, Matrix};
use crate::numeric::{Cx, Element, WidthClass};

/// Real engine, MAC or SQ. `s` holds `Sw_k` of `w`; computed when absent.
pub fn transform_engine_run<T: Element>(
    w: &Matrix<T>,
    x: &[T],
    s: Option<&CorrectionSet<T>>,
    cfg: &SimConfig,
) -> Result<(Vec<T>, SimTrace)> {
    cfg.expect(Arch::TransformEngine, false)?;
    let init = match cfg.variant {
        Variant::Sq => {
            let set = match s {
                Some(set) => {
                    set.check_sources(&[w.fingerprint()])?;
                    set.clone()
                }
                None => transform_corrections(w, &mut OpLedger::new()),
            };
            set.real_transform()?.to_vec()
        }
        _ => vec![T::zero(); w.rows()],
    };
    run(w, x, init, cfg)
}

/// Complex engine, MAC, CPM or CPM3. `s` is the Complex4 row set of `w`
/// for CPM and the Complex3 row set in the right-operand role for CPM3;
/// computed when absent.
pub fn ctransform_engine_run<T: Element>(
    w: &CMatrix<T>,
    x: &[Cx<T>],
    s: Option<&CorrectionSet<T>>,
    cfg: &SimConfig,
) -> Result<(Vec<Cx<T>>, SimTrace)> {
    cfg.expect(Arch::TransformEngine, true)?;
    let set = match (cfg.variant, s) {
        (Variant::Mac, _) => None,
        (_, Some(set)) => {
            set.check_sources(&[w.fingerprint()])?;
            Some(set.clone())
        }
        (Variant::Cpm, None) => Some(complex4_corrections(w, Side::Rows, &mut OpLedger::new())),
        (_, None) => Some(complex3_operand_corrections(
            w,
            Side::Rows,
            Cpm3Role::Right,
            &mut OpLedger::new(),
        )),
    };
    let init = match (cfg.variant, &set) {
        (Variant::Cpm, Some(set)) => set
            .complex4(Side::Rows)?
            .iter()
            .map(|v| Cx::new(v.clone(), v.clone()))
            .collect(),
        (Variant::Cpm3, Some(set)) => {
            let (re, im) = set.complex3(Side::Rows, Cpm3Role::Right)?;
            re.iter()
                .zip(im)
                .map(|(r, i)| Cx::new(r.clone(), i.clone()))
                .collect()
        }
        _ => vec![Cx::new(T::zero(), T::zero()); w.rows()],
    };
    run(w, x, init, cfg)
}

fn run<T: Element, V: Lane<T>>(
    w: &Matrix<V>,
    x: &[V],
    init: Vec<V>,
    cfg: &SimConfig,
) -> Result<(Vec<V>, SimTrace)> {
    if w.cols() != x.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} transform applied to {} samples",
            w.rows(),
            w.cols(),
            x.len()
        )));
    }
    let mut rec: Recorder = cfg.recorder();
    let name = |k: usize| format!("X_{k}");
    let mut regs = init;
    for (k, r) in regs.iter().enumerate() {
        r.record(&mut rec, &name(k), Signal::Init, WidthClass::Accumulator);
    }
    for (i, xi) in x.iter().enumerate() {
        rec.cycle = i as u64;
        xi.record(&mut rec, "IN", Signal::X, WidthClass::Input);
        let shared = V::shared(cfg.variant, xi, &mut rec, "IN");
        for (k, reg) in regs.iter_mut().enumerate() {
            let unit = name(k);
            let coeff = w.get(k, i);
            coeff.record(&mut rec, &unit, Signal::A, WidthClass::Input);
            let mut p = V::pe(cfg.variant, xi, coeff, &mut rec, &unit);
            if let Some(s) = &shared {
                p = p.plus(s);
            }
            *reg = reg.plus(&p);
            reg.record(&mut rec, &unit, Signal::Acc, WidthClass::Accumulator);
        }
    }
    for (k, r) in regs.iter().enumerate() {
        r.record(&mut rec, &name(k), Signal::O, WidthClass::Accumulator);
        rec.keep(&name(k), Signal::Acc, r.render());
    }
    let trace = rec.finish(x.len() as u64, cfg.strict_widths)?;
    Ok((regs, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn cfg(v: Variant) -> SimConfig {
        SimConfig::new(Arch::TransformEngine, v).unwrap()
    }

    #[test]
    fn hadamard_pair() {
        let w = Matrix::<BigInt>::from_i64_rows(&[&[1, 1], &[1, -1]]).unwrap();
        let x = big(&[3, 5]);
        let (mac, t) = transform_engine_run(&w, &x, None, &cfg(Variant::Mac)).unwrap();
        assert_eq!(mac, big(&[8, -2]));
        assert_eq!(t.cycles_total, 2);
        let s = transform_corrections(&w, &mut OpLedger::new());
        assert_eq!(s.real_transform().unwrap(), big(&[-2, -2]).as_slice());
        let (sq, t) = transform_engine_run(&w, &x, Some(&s), &cfg(Variant::Sq)).unwrap();
        assert_eq!(sq, big(&[16, -4]));
        assert_eq!(t.cycles_total, 2);
        // The shared square is computed once per cycle.
        let full = cfg(Variant::Sq).with_trace_level(crate::hwsim::TraceLevel::Full);
        let (_, t) = transform_engine_run(&w, &x, Some(&s), &full).unwrap();
        assert_eq!(t.events.iter().filter(|e| e.signal == Signal::Xsq).count(), 2);
    }

    #[test]
    fn complex_identity_doubles() {
        let w = CMatrix::<BigInt>::cidentity(1).unwrap();
        let x = [Cx::new(BigInt::from(1), BigInt::from(2))];
        let two = Cx::new(BigInt::from(2), BigInt::from(4));
        let (o, _) = ctransform_engine_run(&w, &x, None, &cfg(Variant::Cpm3)).unwrap();
        assert_eq!(o, vec![two.clone()]);
        let (o, _) = ctransform_engine_run(&w, &x, None, &cfg(Variant::Cpm)).unwrap();
        assert_eq!(o, vec![two]);
        let (o, _) = ctransform_engine_run(&w, &x, None, &cfg(Variant::Mac)).unwrap();
        assert_eq!(o, x.to_vec());
        assert!(ctransform_engine_run(&w, &x, None, &cfg(Variant::Sq)).is_err());
    }

    #[test]
    fn stale_or_wrong_corrections() {
        let w = Matrix::<BigInt>::from_i64_rows(&[&[1, 1], &[1, -1]]).unwrap();
        let other = Matrix::<BigInt>::from_i64_rows(&[&[1, 2], &[1, -1]]).unwrap();
        let s = transform_corrections(&other, &mut OpLedger::new());
        assert!(matches!(
            transform_engine_run(&w, &big(&[1, 2]), Some(&s), &cfg(Variant::Sq)),
            Err(Error::StaleCorrections { .. })
        ));
        assert!(transform_engine_run(&w, &big(&[1]), None, &cfg(Variant::Sq)).is_err());
    }
}
