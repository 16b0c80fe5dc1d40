//! Scalar domains and the square-based primitives every kernel is built from.
//!
//! Two domains exist. [`BigInt`] is the exact one: every identity used by the
//! kernels holds bit-exactly over the integers, so it is the ground truth for
//! verification. `f64` is there for coefficients that are not integers, such
//! as DFT twiddles.
//!
//! The typed primitives ([`square`], [`pm`], [`cpm`], [`cpm3`],
//! [`halve_exact`]) charge their work to an [`OpLedger`]. [`Scalar`] and
//! [`CScalar`] are the domain-tagged dynamic counterparts used at I/O
//! boundaries, where the domain is only known at runtime.

use std::fmt;
use std::hash::Hasher;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::ledger::OpLedger;

/// Complex value over one scalar domain.
pub type Cx<T> = Complex<T>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Domain {
    ExactInt,
    Float,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::ExactInt => f.write_str("int"),
            Domain::Float => f.write_str("float"),
        }
    }
}

/// A ring element the kernels can run on.
pub trait Element:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const DOMAIN: Domain;

    /// `v / 2` if it is exactly representable, `None` otherwise.
    fn half(&self) -> Option<Self>;

    /// Width of the smallest two's-complement register holding the value.
    /// `None` for domains without a fixed-point meaning.
    fn signed_bits(&self) -> Option<u64>;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    fn abs_value(&self) -> Self;

    fn hash_into<H: Hasher>(&self, state: &mut H);

    /// Canonical text form: plain decimal for integers, shortest round-trip
    /// for floats.
    fn render(&self) -> String;
}

impl Element for BigInt {
    const DOMAIN: Domain = Domain::ExactInt;

    fn half(&self) -> Option<Self> {
        if self.bit(0) {
            None
        } else {
            Some(self >> 1usize)
        }
    }

    fn signed_bits(&self) -> Option<u64> {
        let magnitude_bits = if self.is_negative() {
            (-self - 1u32).bits()
        } else {
            self.bits()
        };
        Some(magnitude_bits + 1)
    }

    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn hash_into<H: Hasher>(&self, state: &mut H) {
        let (sign, digits) = self.to_u64_digits();
        state.write_u8(sign as u8);
        state.write_usize(digits.len());
        for d in digits {
            state.write_u64(d);
        }
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Element for f64 {
    const DOMAIN: Domain = Domain::Float;

    fn half(&self) -> Option<Self> {
        Some(self * 0.5)
    }

    fn signed_bits(&self) -> Option<u64> {
        None
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn abs_value(&self) -> Self {
        self.abs()
    }

    fn hash_into<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.to_bits());
    }

    fn render(&self) -> String {
        format!("{self:?}")
    }
}

/// Renders a complex value as `re+im i`, e.g. `3-4i`.
pub fn render_complex<T: Element>(z: &Cx<T>) -> String {
    let im = z.im.render();
    match im.strip_prefix('-') {
        Some(mag) => format!("{}-{}i", z.re.render(), mag),
        None => format!("{}+{}i", z.re.render(), im),
    }
}

/// `x²`. The only nonlinear operation the square-based kernels use.
pub fn square<T: Element>(x: &T, ledger: &mut OpLedger) -> T {
    ledger.squarings += 1;
    x.clone() * x.clone()
}

/// Partial multiplication `(a + b)²`; `pm(a, b) - a² - b² = 2ab`.
pub fn pm<T: Element>(a: &T, b: &T, ledger: &mut OpLedger) -> T {
    ledger.additions += 1;
    square(&(a.clone() + b.clone()), ledger)
}

/// Conventional product, charged as one multiplication.
pub fn mul<T: Element>(a: &T, b: &T, ledger: &mut OpLedger) -> T {
    ledger.multiplications += 1;
    a.clone() * b.clone()
}

/// Complex partial multiplication with four squares.
///
/// For `x = a + jb` and `y = c + js` returns
/// `((a+c)² + (b-s)², (b+c)² + (a+s)²)`. Adding `-(a²+b²) - (c²+s²)` to
/// either part and halving gives the real and imaginary part of `x·y`.
pub fn cpm<T: Element>(x: &Cx<T>, y: &Cx<T>, ledger: &mut OpLedger) -> (T, T) {
    let (a, b, c, s) = (&x.re, &x.im, &y.re, &y.im);
    ledger.additions += 6;
    let re = square(&(a.clone() + c.clone()), ledger) + square(&(b.clone() - s.clone()), ledger);
    let im = square(&(b.clone() + c.clone()), ledger) + square(&(a.clone() + s.clone()), ledger);
    (re, im)
}

/// The three squares of the 3-square complex partial multiplication.
///
/// For `x = a + jb` and `y = c + js`:
/// `t1 = (c+a+b)²`, `t2 = (b+c+s)²`, `t3 = (a+s-c)²`. The real part uses
/// `t1 - t2`, the imaginary part `t1 + t3`; `t1` is shared.
pub fn cpm3<T: Element>(x: &Cx<T>, y: &Cx<T>, ledger: &mut OpLedger) -> (T, T, T) {
    let (a, b, c, s) = (&x.re, &x.im, &y.re, &y.im);
    ledger.additions += 6;
    let t1 = square(&(c.clone() + a.clone() + b.clone()), ledger);
    let t2 = square(&(b.clone() + c.clone() + s.clone()), ledger);
    let t3 = square(&(a.clone() + s.clone() - c.clone()), ledger);
    (t1, t2, t3)
}

/// Combines the three CPM3 squares into the (real, imaginary) partial pair.
pub fn cpm3_parts<T: Element>(t: (T, T, T), ledger: &mut OpLedger) -> (T, T) {
    let (t1, t2, t3) = t;
    ledger.additions += 2;
    (t1.clone() - t2, t1 + t3)
}

/// Exact halving of a doubled result: the final right shift of every
/// square-based datapath.
pub fn halve_exact<T: Element>(v: &T, ledger: &mut OpLedger) -> Result<T> {
    ledger.halvings += 1;
    v.half().ok_or_else(|| Error::OddDoubledResult(v.render()))
}

/// A value in one of the two scalar domains, tagged at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum Scalar {
    Int(BigInt),
    Float(f64),
}

impl Scalar {
    pub fn int(v: i64) -> Self {
        Scalar::Int(BigInt::from(v))
    }

    pub fn domain(&self) -> Domain {
        match self {
            Scalar::Int(_) => Domain::ExactInt,
            Scalar::Float(_) => Domain::Float,
        }
    }

    pub fn square(&self) -> Scalar {
        let mut ledger = OpLedger::default();
        match self {
            Scalar::Int(v) => Scalar::Int(square(v, &mut ledger)),
            Scalar::Float(v) => Scalar::Float(square(v, &mut ledger)),
        }
    }

    pub fn pm(&self, other: &Scalar) -> Result<Scalar> {
        let mut ledger = OpLedger::default();
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Ok(Scalar::Int(pm(a, b, &mut ledger))),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(pm(a, b, &mut ledger))),
            _ => Err(Error::MixedDomain(self.domain(), other.domain())),
        }
    }

    pub fn halve_exact(&self) -> Result<Scalar> {
        let mut ledger = OpLedger::default();
        match self {
            Scalar::Int(v) => halve_exact(v, &mut ledger).map(Scalar::Int),
            Scalar::Float(v) => halve_exact(v, &mut ledger).map(Scalar::Float),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Ok(Scalar::Int(a + b)),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a + b)),
            _ => Err(Error::MixedDomain(self.domain(), other.domain())),
        }
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar> {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Ok(Scalar::Int(a - b)),
            (Scalar::Float(a), Scalar::Float(b)) => Ok(Scalar::Float(a - b)),
            _ => Err(Error::MixedDomain(self.domain(), other.domain())),
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => f.write_str(&v.render()),
            Scalar::Float(v) => f.write_str(&v.render()),
        }
    }
}

/// Complex scalar whose parts share one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct CScalar {
    re: Scalar,
    im: Scalar,
}

impl CScalar {
    pub fn new(re: Scalar, im: Scalar) -> Result<Self> {
        if re.domain() != im.domain() {
            return Err(Error::MixedDomain(re.domain(), im.domain()));
        }
        Ok(CScalar { re, im })
    }

    pub fn int(re: i64, im: i64) -> Self {
        CScalar {
            re: Scalar::int(re),
            im: Scalar::int(im),
        }
    }

    pub fn re(&self) -> &Scalar {
        &self.re
    }

    pub fn im(&self) -> &Scalar {
        &self.im
    }

    pub fn domain(&self) -> Domain {
        self.re.domain()
    }

    fn as_int(&self) -> Option<Cx<BigInt>> {
        match (&self.re, &self.im) {
            (Scalar::Int(re), Scalar::Int(im)) => Some(Cx::new(re.clone(), im.clone())),
            _ => None,
        }
    }

    fn as_float(&self) -> Option<Cx<f64>> {
        match (&self.re, &self.im) {
            (Scalar::Float(re), Scalar::Float(im)) => Some(Cx::new(*re, *im)),
            _ => None,
        }
    }

    pub fn cpm(&self, other: &CScalar) -> Result<(Scalar, Scalar)> {
        let mut ledger = OpLedger::default();
        if let (Some(x), Some(y)) = (self.as_int(), other.as_int()) {
            let (re, im) = cpm(&x, &y, &mut ledger);
            return Ok((Scalar::Int(re), Scalar::Int(im)));
        }
        if let (Some(x), Some(y)) = (self.as_float(), other.as_float()) {
            let (re, im) = cpm(&x, &y, &mut ledger);
            return Ok((Scalar::Float(re), Scalar::Float(im)));
        }
        Err(Error::MixedDomain(self.domain(), other.domain()))
    }

    pub fn cpm3(&self, other: &CScalar) -> Result<(Scalar, Scalar, Scalar)> {
        let mut ledger = OpLedger::default();
        if let (Some(x), Some(y)) = (self.as_int(), other.as_int()) {
            let (t1, t2, t3) = cpm3(&x, &y, &mut ledger);
            return Ok((Scalar::Int(t1), Scalar::Int(t2), Scalar::Int(t3)));
        }
        if let (Some(x), Some(y)) = (self.as_float(), other.as_float()) {
            let (t1, t2, t3) = cpm3(&x, &y, &mut ledger);
            return Ok((Scalar::Float(t1), Scalar::Float(t2), Scalar::Float(t3)));
        }
        Err(Error::MixedDomain(self.domain(), other.domain()))
    }
}

/// Register widths for a fixed-point square-based datapath.
///
/// `input_bits` is the signed width of kernel operands and `reduction_depth`
/// the longest accumulation the datapath performs. The accumulator carries two
/// guard bits on top of the growth of `reduction_depth` squares so that
/// correction terms (themselves sums of squares) fit alongside.
///
/// The 3-square complex datapath adds three operands before squaring, so it
/// gets its own one-bit-wider sum and square widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitWidthPlan {
    pub input_bits: u32,
    pub sum_bits: u32,
    pub square_bits: u32,
    pub sum3_bits: u32,
    pub square3_bits: u32,
    pub accumulator_bits: u32,
    pub reduction_depth: usize,
}

impl BitWidthPlan {
    pub fn new(input_bits: u32, reduction_depth: usize) -> Result<Self> {
        if input_bits == 0 {
            return Err(Error::InvalidParameter("input_bits must be positive".into()));
        }
        if reduction_depth == 0 {
            return Err(Error::ZeroDimension);
        }
        let sum_bits = input_bits + 1;
        let square_bits = 2 * sum_bits;
        let sum3_bits = input_bits + 2;
        let square3_bits = 2 * sum3_bits;
        let accumulator_bits = square_bits + ceil_log2(reduction_depth) + 2;
        Ok(BitWidthPlan {
            input_bits,
            sum_bits,
            square_bits,
            sum3_bits,
            square3_bits,
            accumulator_bits,
            reduction_depth,
        })
    }

    pub fn width(&self, class: WidthClass) -> u32 {
        match class {
            WidthClass::Input => self.input_bits,
            WidthClass::Sum => self.sum_bits,
            WidthClass::Square => self.square_bits,
            WidthClass::Sum3 => self.sum3_bits,
            WidthClass::Square3 => self.square3_bits,
            WidthClass::Accumulator => self.accumulator_bits,
        }
    }

    /// Largest magnitude an input operand may take: `2^(n-1) - 1`.
    pub fn max_input(&self) -> i64 {
        (1i64 << (self.input_bits - 1)) - 1
    }
}

/// Which planned width a datapath net is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WidthClass {
    Input,
    Sum,
    Square,
    Sum3,
    Square3,
    Accumulator,
}

pub(crate) fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn square_examples() {
        assert_eq!(Scalar::int(0).square(), Scalar::int(0));
        assert_eq!(Scalar::int(-3).square(), Scalar::int(9));
        assert_eq!(Scalar::int(12345).square(), Scalar::int(12345 * 12345));
        assert_eq!(Scalar::int(12345).square(), Scalar::int(152_399_025));
    }

    #[test]
    fn pm_examples() {
        let mut l = OpLedger::default();
        let v = pm(&big(3), &big(5), &mut l);
        assert_eq!(v, big(64));
        assert_eq!(v - big(9) - big(25), big(30));

        let v = pm(&big(0), &big(7), &mut l);
        assert_eq!(v.clone(), big(49));
        assert_eq!(v - big(0) - big(49), big(0));

        let v = pm(&big(-2), &big(7), &mut l);
        assert_eq!(v.clone(), big(25));
        assert_eq!(v - big(4) - big(49), big(-28));
        assert_eq!(l.squarings, 3);
    }

    #[test]
    fn pm_rejects_mixed_domain() {
        let err = Scalar::int(1).pm(&Scalar::Float(1.0)).unwrap_err();
        assert_eq!(err, Error::MixedDomain(Domain::ExactInt, Domain::Float));
    }

    #[test]
    fn cpm_examples() {
        let (re, im) = CScalar::int(1, 2).cpm(&CScalar::int(3, 4)).unwrap();
        assert_eq!((re.clone(), im.clone()), (Scalar::int(20), Scalar::int(50)));
        // Sx = -5, Sy = -25
        assert_eq!(re.checked_sub(&Scalar::int(30)).unwrap().halve_exact().unwrap(), Scalar::int(-5));
        assert_eq!(im.checked_sub(&Scalar::int(30)).unwrap().halve_exact().unwrap(), Scalar::int(10));

        let (re, im) = CScalar::int(0, 0).cpm(&CScalar::int(6, -2)).unwrap();
        assert_eq!((re, im), (Scalar::int(40), Scalar::int(40)));

        let (re, im) = CScalar::int(1, 0).cpm(&CScalar::int(1, 0)).unwrap();
        assert_eq!((re, im), (Scalar::int(4), Scalar::int(2)));
    }

    #[test]
    fn cpm3_examples() {
        let (t1, t2, t3) = CScalar::int(1, 2).cpm3(&CScalar::int(3, 4)).unwrap();
        assert_eq!((t1, t2, t3), (Scalar::int(36), Scalar::int(81), Scalar::int(4)));

        let (t1, t2, t3) = CScalar::int(1, 0).cpm3(&CScalar::int(0, 1)).unwrap();
        assert_eq!((t1, t2, t3), (Scalar::int(1), Scalar::int(1), Scalar::int(4)));
    }

    #[test]
    fn cscalar_rejects_mixed_parts() {
        assert!(CScalar::new(Scalar::int(1), Scalar::Float(0.0)).is_err());
        let x = CScalar::int(1, 1);
        let y = CScalar::new(Scalar::Float(1.0), Scalar::Float(0.0)).unwrap();
        assert!(x.cpm(&y).is_err());
        assert!(x.cpm3(&y).is_err());
    }

    #[test]
    fn halve_examples() {
        assert_eq!(Scalar::int(38).halve_exact().unwrap(), Scalar::int(19));
        assert_eq!(Scalar::int(0).halve_exact().unwrap(), Scalar::int(0));
        assert_eq!(Scalar::int(-38).halve_exact().unwrap(), Scalar::int(-19));
        assert!(matches!(
            Scalar::int(7).halve_exact(),
            Err(Error::OddDoubledResult(_))
        ));
        assert_eq!(Scalar::Float(7.0).halve_exact().unwrap(), Scalar::Float(3.5));
    }

    #[test]
    fn primitive_square_counts() {
        let mut l = OpLedger::default();
        let x = Cx::new(big(1), big(2));
        let y = Cx::new(big(3), big(4));
        cpm(&x, &y, &mut l);
        assert_eq!(l.squarings, 4);
        let mut l = OpLedger::default();
        cpm3(&x, &y, &mut l);
        assert_eq!(l.squarings, 3);
        assert_eq!(l.multiplications, 0);
    }

    #[test]
    fn signed_bits_of_bigint() {
        for (v, bits) in [(0, 1), (-1, 1), (1, 2), (127, 8), (-128, 8), (128, 9), (-129, 9)] {
            assert_eq!(big(v).signed_bits(), Some(bits), "value {v}");
        }
    }

    #[test]
    fn bit_plan_shape() {
        let plan = BitWidthPlan::new(8, 16).unwrap();
        assert_eq!(plan.sum_bits, 9);
        assert_eq!(plan.square_bits, 18);
        assert_eq!(plan.accumulator_bits, 18 + 4 + 2);
        assert_eq!(plan.max_input(), 127);
        assert_eq!(BitWidthPlan::new(8, 17).unwrap().accumulator_bits, 25);
        assert_eq!(BitWidthPlan::new(8, 1).unwrap().accumulator_bits, 20);
        assert!(BitWidthPlan::new(0, 4).is_err());
    }

    #[test]
    fn complex_rendering() {
        assert_eq!(render_complex(&Cx::new(big(3), big(-4))), "3-4i");
        assert_eq!(render_complex(&Cx::new(big(-5), big(10))), "-5+10i");
        assert_eq!(render_complex(&Cx::new(1.5f64, 0.0)), "1.5+0.0i");
    }

    fn schoolbook(x: (i64, i64), y: (i64, i64)) -> (BigInt, BigInt) {
        let (a, b, c, s) = (big(x.0), big(x.1), big(y.0), big(y.1));
        (&a * &c - &b * &s, &b * &c + &a * &s)
    }

    proptest! {
        #[test]
        fn pm_recovers_twice_the_product(a in any::<i64>(), b in any::<i64>()) {
            let mut l = OpLedger::default();
            let (a, b) = (big(a), big(b));
            let doubled = pm(&a, &b, &mut l) - &a * &a - &b * &b;
            prop_assert!(!doubled.bit(0));
            prop_assert_eq!(doubled, BigInt::from(2) * &a * &b);
        }

        #[test]
        fn square_is_even_function(x in any::<i64>()) {
            let mut l = OpLedger::default();
            prop_assert_eq!(square(&big(x), &mut l), square(&-big(x), &mut l));
        }

        #[test]
        fn cpm_recovers_complex_product(
            x in (any::<i32>(), any::<i32>()),
            y in (any::<i32>(), any::<i32>()),
        ) {
            let x = (x.0 as i64, x.1 as i64);
            let y = (y.0 as i64, y.1 as i64);
            let mut l = OpLedger::default();
            let (re, im) = cpm(&Cx::new(big(x.0), big(x.1)), &Cx::new(big(y.0), big(y.1)), &mut l);
            let sx = -(big(x.0) * big(x.0) + big(x.1) * big(x.1));
            let sy = -(big(y.0) * big(y.0) + big(y.1) * big(y.1));
            let re = halve_exact(&(re + &sx + &sy), &mut l).unwrap();
            let im = halve_exact(&(im + &sx + &sy), &mut l).unwrap();
            prop_assert_eq!((re, im), schoolbook(x, y));
        }

        #[test]
        fn cpm3_recovers_complex_product(
            x in (any::<i32>(), any::<i32>()),
            y in (any::<i32>(), any::<i32>()),
        ) {
            let (a, b, c, s) = (big(x.0 as i64), big(x.1 as i64), big(y.0 as i64), big(y.1 as i64));
            let mut l = OpLedger::default();
            let (t1, t2, t3) = cpm3(&Cx::new(a.clone(), b.clone()), &Cx::new(c.clone(), s.clone()), &mut l);
            let sq = |v: &BigInt| v * v;
            let sab = -sq(&(&a + &b)) + sq(&b);
            let sba = -sq(&(&a + &b)) - sq(&a);
            let scs = -sq(&c) + sq(&(&c + &s));
            let ssc = -sq(&c) - sq(&(&s - &c));
            let re = halve_exact(&(&t1 - t2 + sab + scs), &mut l).unwrap();
            let im = halve_exact(&(t1 + t3 + sba + ssc), &mut l).unwrap();
            prop_assert_eq!((re, im), schoolbook((x.0 as i64, x.1 as i64), (y.0 as i64, y.1 as i64)));
        }
    }
}
