//! The arithmetic inside one processing element, shared by all simulators.

use super::trace::{Recorder, Signal};
use super::Variant;
use crate::correction::left3_terms;
use crate::ledger::OpLedger;
use crate::numeric::{render_complex, Cx, Element, WidthClass};

/// A register lane: a real value or a complex (re, im) pair.
pub(crate) trait Lane<T: Element>: Clone {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn render(&self) -> String;
    fn record(&self, rec: &mut Recorder, unit: &str, signal: Signal, class: WidthClass);

    /// One partial product of `left` and `right`, as the PE's squarers (or
    /// multipliers) produce it. Pre-adder and squarer nets are recorded.
    fn pe(variant: Variant, left: &Self, right: &Self, rec: &mut Recorder, unit: &str) -> Self;

    /// The per-sample term shared by all PEs of an engine, already signed so
    /// that it is added. `None` when the variant has none.
    fn shared(variant: Variant, sample: &Self, rec: &mut Recorder, unit: &str) -> Option<Self>;
}

fn sq<T: Element>(s: T, rec: &mut Recorder, unit: &str, sum: WidthClass, square: WidthClass) -> T {
    rec.real(unit, Signal::Sum, &s, sum);
    let q = s.clone() * s;
    rec.real(unit, Signal::Sq, &q, square);
    q
}

fn product<T: Element>(a: &T, b: &T, rec: &mut Recorder, unit: &str) -> T {
    let p = a.clone() * b.clone();
    rec.real(unit, Signal::Sq, &p, WidthClass::Square);
    p
}

impl<T: Element> Lane<T> for T {
    fn zero() -> Self {
        T::zero()
    }

    fn plus(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }

    fn render(&self) -> String {
        Element::render(self)
    }

    fn record(&self, rec: &mut Recorder, unit: &str, signal: Signal, class: WidthClass) {
        rec.real(unit, signal, self, class);
    }


    fn pe(variant: Variant, left: &T, right: &T, rec: &mut Recorder, unit: &str) -> T {
        match variant {
            Variant::Sq => sq(
                left.clone() + right.clone(),
                rec,
                unit,
                WidthClass::Sum,
                WidthClass::Square,
            ),
            _ => product(left, right, rec, unit),
        }
    }

    fn shared(variant: Variant, x: &T, rec: &mut Recorder, unit: &str) -> Option<T> {
        (variant == Variant::Sq).then(|| {
            let v = -(x.clone() * x.clone());
            rec.real(unit, Signal::Xsq, &v, WidthClass::Square);
            v
        })
    }
}

impl<T: Element> Lane<T> for Cx<T> {
    fn zero() -> Self {
        Cx::new(T::zero(), T::zero())
    }

    fn plus(&self, other: &Self) -> Self {
        Cx::new(
            self.re.clone() + other.re.clone(),
            self.im.clone() + other.im.clone(),
        )
    }

    fn render(&self) -> String {
        render_complex(self)
    }

    fn record(&self, rec: &mut Recorder, unit: &str, signal: Signal, class: WidthClass) {
        rec.cx(unit, signal, self, class);
    }


    fn pe(variant: Variant, x: &Cx<T>, y: &Cx<T>, rec: &mut Recorder, unit: &str) -> Cx<T> {
        let (a, b, c, s) = (&x.re, &x.im, &y.re, &y.im);
        let (sum, square) = (WidthClass::Sum, WidthClass::Square);
        match variant {
            Variant::Cpm => {
                let re = sq(a.clone() + c.clone(), rec, unit, sum, square)
                    + sq(b.clone() - s.clone(), rec, unit, sum, square);
                let im = sq(b.clone() + c.clone(), rec, unit, sum, square)
                    + sq(a.clone() + s.clone(), rec, unit, sum, square);
                Cx::new(re, im)
            }
            Variant::Cpm3 => {
                let (sum, square) = (WidthClass::Sum3, WidthClass::Square3);
                let t1 = sq(c.clone() + a.clone() + b.clone(), rec, unit, sum, square);
                let t2 = sq(b.clone() + c.clone() + s.clone(), rec, unit, sum, square);
                let t3 = sq(a.clone() + s.clone() - c.clone(), rec, unit, sum, square);
                Cx::new(t1.clone() - t2, t1 + t3)
            }
            _ => Cx::new(
                product(a, c, rec, unit) - product(b, s, rec, unit),
                product(b, c, rec, unit) + product(a, s, rec, unit),
            ),
        }
    }

    fn shared(variant: Variant, x: &Cx<T>, rec: &mut Recorder, unit: &str) -> Option<Cx<T>> {
        let v = match variant {
            Variant::Cpm => {
                let m = -(x.re.clone() * x.re.clone() + x.im.clone() * x.im.clone());
                Cx::new(m.clone(), m)
            }
            Variant::Cpm3 => {
                let (re, im) = left3_terms(x, &mut OpLedger::new());
                Cx::new(re, im)
            }
            _ => return None,
        };
        rec.cx(unit, Signal::Xsq, &v, WidthClass::Square);
        Some(v)
    }
}
