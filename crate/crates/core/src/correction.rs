//! Correction terms ("S-terms"): negated sums of squares, or signed mixes of
//! squares, that depend on one operand only.
//!
//! Every square-based kernel accumulates partial multiplications and then
//! adds the corrections of both operands before halving. Because a
//! correction depends on a single row, column, kernel or sample, it is
//! computed once and reused by every output that touches that operand.
//! Each [`CorrectionSet`] records the fingerprints of the operands it was
//! computed from so a kernel can refuse stale values.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::{fingerprint_slice, CMatrix, Fingerprint, Matrix};
use crate::numeric::{square, Cx, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CorrectionKind {
    RealMat,
    RealTransform,
    RealConv1D,
    RealConv2D,
    Complex4,
    Complex3,
    ComplexConv,
    Complex3Conv,
}

impl fmt::Display for CorrectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Whether per-row or per-column terms are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Rows,
    Cols,
}

/// Position of the summarized operand in the 3-square product
/// `(a + jb)(c + js)`: `Left` is `a + jb`, `Right` is `c + js`.
///
/// Matrix multiplication uses `Left` for rows of the first matrix and
/// `Right` for columns of the second. The 3-square transform and convolution
/// feed the sample as `Left` and the coefficients as `Right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cpm3Role {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorrectionTerms<T> {
    /// `Sa_i = -Σ_k a_ik²`, `Sb_j = -Σ_k b_kj²`.
    RealMat { sa: Vec<T>, sb: Vec<T> },
    /// `Sw_k = -Σ_i w_ki²` per coefficient row.
    RealTransform { sw: Vec<T> },
    RealConv1D { sw: T },
    RealConv2D { sw: T },
    /// `-Σ (re² + im²)` per row or column.
    Complex4 { side: Side, s: Vec<T> },
    /// Real-part and imaginary-part corrections of the 3-square product.
    Complex3 {
        side: Side,
        role: Cpm3Role,
        re: Vec<T>,
        im: Vec<T>,
    },
    /// `-Σ (c_i² + s_i²)`; applied to both parts of the output.
    ComplexConv { sw: T },
    Complex3Conv { sw: Cx<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSet<T> {
    sources: Vec<Fingerprint>,
    terms: CorrectionTerms<T>,
}

impl<T: Element> CorrectionSet<T> {
    pub fn new(sources: Vec<Fingerprint>, terms: CorrectionTerms<T>) -> Self {
        CorrectionSet { sources, terms }
    }

    pub fn kind(&self) -> CorrectionKind {
        match &self.terms {
            CorrectionTerms::RealMat { .. } => CorrectionKind::RealMat,
            CorrectionTerms::RealTransform { .. } => CorrectionKind::RealTransform,
            CorrectionTerms::RealConv1D { .. } => CorrectionKind::RealConv1D,
            CorrectionTerms::RealConv2D { .. } => CorrectionKind::RealConv2D,
            CorrectionTerms::Complex4 { .. } => CorrectionKind::Complex4,
            CorrectionTerms::Complex3 { .. } => CorrectionKind::Complex3,
            CorrectionTerms::ComplexConv { .. } => CorrectionKind::ComplexConv,
            CorrectionTerms::Complex3Conv { .. } => CorrectionKind::Complex3Conv,
        }
    }

    pub fn terms(&self) -> &CorrectionTerms<T> {
        &self.terms
    }

    pub fn sources(&self) -> &[Fingerprint] {
        &self.sources
    }

    /// Fails with `StaleCorrections` unless this set was computed from
    /// operands with exactly these fingerprints.
    pub fn check_sources(&self, expected: &[Fingerprint]) -> Result<()> {
        if self.sources.len() != expected.len() {
            return Err(Error::StaleCorrections {
                expected: expected.first().copied().unwrap_or_default(),
                found: self.sources.first().copied().unwrap_or_default(),
            });
        }
        for (&found, &want) in self.sources.iter().zip(expected) {
            if found != want {
                return Err(Error::StaleCorrections {
                    expected: want,
                    found,
                });
            }
        }
        Ok(())
    }

    fn wrong_kind(&self, expected: &str) -> Error {
        Error::WrongCorrectionKind {
            expected: expected.to_string(),
            found: self.describe(),
        }
    }

    fn describe(&self) -> String {
        match &self.terms {
            CorrectionTerms::Complex4 { side, .. } => format!("Complex4/{side:?}"),
            CorrectionTerms::Complex3 { side, role, .. } => format!("Complex3/{side:?}/{role:?}"),
            _ => self.kind().to_string(),
        }
    }

    pub fn real_mat(&self) -> Result<(&[T], &[T])> {
        match &self.terms {
            CorrectionTerms::RealMat { sa, sb } => Ok((sa, sb)),
            _ => Err(self.wrong_kind("RealMat")),
        }
    }

    pub fn real_transform(&self) -> Result<&[T]> {
        match &self.terms {
            CorrectionTerms::RealTransform { sw } => Ok(sw),
            _ => Err(self.wrong_kind("RealTransform")),
        }
    }

    pub fn real_conv1d(&self) -> Result<&T> {
        match &self.terms {
            CorrectionTerms::RealConv1D { sw } => Ok(sw),
            _ => Err(self.wrong_kind("RealConv1D")),
        }
    }

    pub fn real_conv2d(&self) -> Result<&T> {
        match &self.terms {
            CorrectionTerms::RealConv2D { sw } => Ok(sw),
            _ => Err(self.wrong_kind("RealConv2D")),
        }
    }

    pub fn complex4(&self, want: Side) -> Result<&[T]> {
        match &self.terms {
            CorrectionTerms::Complex4 { side, s } if *side == want => Ok(s),
            _ => Err(self.wrong_kind(&format!("Complex4/{want:?}"))),
        }
    }

    pub fn complex3(&self, want_side: Side, want_role: Cpm3Role) -> Result<(&[T], &[T])> {
        match &self.terms {
            CorrectionTerms::Complex3 { side, role, re, im }
                if *side == want_side && *role == want_role =>
            {
                Ok((re, im))
            }
            _ => Err(self.wrong_kind(&format!("Complex3/{want_side:?}/{want_role:?}"))),
        }
    }

    pub fn complex_conv(&self) -> Result<&T> {
        match &self.terms {
            CorrectionTerms::ComplexConv { sw } => Ok(sw),
            _ => Err(self.wrong_kind("ComplexConv")),
        }
    }

    pub fn complex3_conv(&self) -> Result<&Cx<T>> {
        match &self.terms {
            CorrectionTerms::Complex3Conv { sw } => Ok(sw),
            _ => Err(self.wrong_kind("Complex3Conv")),
        }
    }
}

fn neg_sum_of_squares<'a, T: Element>(
    values: impl Iterator<Item = &'a T>,
    ledger: &mut OpLedger,
) -> T {
    values.fold(T::zero(), |acc, v| {
        ledger.additions += 1;
        acc - square(v, ledger)
    })
}

/// Row corrections of `A` and column corrections of `B` for `A·B`.
pub fn real_mat_corrections<T: Element>(
    a: &Matrix<T>,
    b: &Matrix<T>,
    ledger: &mut OpLedger,
) -> Result<CorrectionSet<T>> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, B is {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let sa = (0..a.rows())
        .map(|i| neg_sum_of_squares(a.row(i).iter(), ledger))
        .collect();
    let sb = (0..b.cols())
        .map(|j| neg_sum_of_squares(b.col(j), ledger))
        .collect();
    Ok(CorrectionSet::new(
        vec![a.fingerprint(), b.fingerprint()],
        CorrectionTerms::RealMat { sa, sb },
    ))
}

/// Per-row corrections `Sw_k` of a real transform matrix.
pub fn transform_corrections<T: Element>(w: &Matrix<T>, ledger: &mut OpLedger) -> CorrectionSet<T> {
    let sw = (0..w.rows())
        .map(|k| neg_sum_of_squares(w.row(k).iter(), ledger))
        .collect();
    CorrectionSet::new(vec![w.fingerprint()], CorrectionTerms::RealTransform { sw })
}

/// A convolution kernel together with the datapath it will run on.
#[derive(Debug, Clone, Copy)]
pub enum ConvKernel<'a, T> {
    Real1D(&'a [T]),
    Real2D(&'a Matrix<T>),
    /// Complex taps for the 4-square datapath.
    Complex(&'a [Cx<T>]),
    /// Complex taps for the 3-square datapath.
    Complex3(&'a [Cx<T>]),
}

pub fn conv_corrections<T: Element>(
    kernel: ConvKernel<'_, T>,
    ledger: &mut OpLedger,
) -> Result<CorrectionSet<T>> {
    let empty = || Error::InvalidParameter("convolution kernel is empty".into());
    match kernel {
        ConvKernel::Real1D(w) => {
            if w.is_empty() {
                return Err(empty());
            }
            let sw = neg_sum_of_squares(w.iter(), ledger);
            Ok(CorrectionSet::new(
                vec![fingerprint_slice(w)],
                CorrectionTerms::RealConv1D { sw },
            ))
        }
        ConvKernel::Real2D(w) => {
            let sw = neg_sum_of_squares(w.data().iter(), ledger);
            Ok(CorrectionSet::new(
                vec![w.fingerprint()],
                CorrectionTerms::RealConv2D { sw },
            ))
        }
        ConvKernel::Complex(w) => {
            if w.is_empty() {
                return Err(empty());
            }
            let sw = w
                .iter()
                .fold(T::zero(), |acc, z| acc - modulus_sq(z, ledger));
            Ok(CorrectionSet::new(
                vec![fingerprint_slice(w)],
                CorrectionTerms::ComplexConv { sw },
            ))
        }
        ConvKernel::Complex3(w) => {
            if w.is_empty() {
                return Err(empty());
            }
            let mut re = T::zero();
            let mut im = T::zero();
            for z in w {
                let (r, i) = right3_terms(z, ledger);
                re = re + r;
                im = im + i;
            }
            Ok(CorrectionSet::new(
                vec![fingerprint_slice(w)],
                CorrectionTerms::Complex3Conv { sw: Cx::new(re, im) },
            ))
        }
    }
}

fn modulus_sq<T: Element>(z: &Cx<T>, ledger: &mut OpLedger) -> T {
    ledger.additions += 2;
    square(&z.re, ledger) + square(&z.im, ledger)
}

/// `(-(a+b)² + b², -(a+b)² - a²)` for an element `a + jb` in the left slot
/// of the 3-square product. Three squarings.
pub(crate) fn left3_terms<T: Element>(z: &Cx<T>, ledger: &mut OpLedger) -> (T, T) {
    ledger.additions += 3;
    let ab = square(&(z.re.clone() + z.im.clone()), ledger);
    let re = square(&z.im, ledger) - ab.clone();
    let im = -ab - square(&z.re, ledger);
    (re, im)
}

/// `(-c² + (c+s)², -c² - (s-c)²)` for an element `c + js` in the right slot
/// of the 3-square product. Three squarings.
pub(crate) fn right3_terms<T: Element>(z: &Cx<T>, ledger: &mut OpLedger) -> (T, T) {
    ledger.additions += 4;
    let c2 = square(&z.re, ledger);
    let re = square(&(z.re.clone() + z.im.clone()), ledger) - c2.clone();
    let im = -c2 - square(&(z.im.clone() - z.re.clone()), ledger);
    (re, im)
}

fn lines<T: Clone>(x: &CMatrix<T>, side: Side) -> Vec<Vec<Cx<T>>> {
    match side {
        Side::Rows => (0..x.rows()).map(|r| x.row(r).to_vec()).collect(),
        Side::Cols => (0..x.cols()).map(|c| x.col(c).cloned().collect()).collect(),
    }
}

/// `-Σ (re² + im²)` along each row or column of `x`.
pub fn complex4_corrections<T: Element>(
    x: &CMatrix<T>,
    side: Side,
    ledger: &mut OpLedger,
) -> CorrectionSet<T> {
    let s = lines(x, side)
        .iter()
        .map(|line| {
            line.iter()
                .fold(T::zero(), |acc, z| acc - modulus_sq(z, ledger))
        })
        .collect();
    CorrectionSet::new(vec![x.fingerprint()], CorrectionTerms::Complex4 { side, s })
}

/// 3-square corrections for a matrix product `X·Y`: rows of `X` give
/// `(Sab_h, Sba_h)`, columns of `Y` give `(Scs_k, Ssc_k)`.
pub fn complex3_corrections<T: Element>(
    x: &CMatrix<T>,
    side: Side,
    ledger: &mut OpLedger,
) -> CorrectionSet<T> {
    let role = match side {
        Side::Rows => Cpm3Role::Left,
        Side::Cols => Cpm3Role::Right,
    };
    complex3_operand_corrections(x, side, role, ledger)
}

/// 3-square corrections with an explicit operand role. Transform
/// coefficients are summarized along rows in the `Right` role.
pub fn complex3_operand_corrections<T: Element>(
    x: &CMatrix<T>,
    side: Side,
    role: Cpm3Role,
    ledger: &mut OpLedger,
) -> CorrectionSet<T> {
    let mut re = Vec::new();
    let mut im = Vec::new();
    for line in lines(x, side) {
        let (mut r_acc, mut i_acc) = (T::zero(), T::zero());
        for z in &line {
            let (r, i) = match role {
                Cpm3Role::Left => left3_terms(z, ledger),
                Cpm3Role::Right => right3_terms(z, ledger),
            };
            r_acc = r_acc + r;
            i_acc = i_acc + i;
        }
        re.push(r_acc);
        im.push(i_acc);
    }
    CorrectionSet::new(
        vec![x.fingerprint()],
        CorrectionTerms::Complex3 { side, role, re, im },
    )
}

/// Shared per-sample term of the real transform and convolution: `x²`,
/// subtracted from every partial product of that sample.
pub fn sample_term_real<T: Element>(x: &T, ledger: &mut OpLedger) -> T {
    square(x, ledger)
}

/// Shared per-sample term of the 4-square datapaths: `(x² + y²)(1 + j)`,
/// subtracted from every partial product of that sample.
pub fn sample_term_cpm<T: Element>(x: &Cx<T>, ledger: &mut OpLedger) -> Cx<T> {
    let m = modulus_sq(x, ledger);
    Cx::new(m.clone(), m)
}

/// Shared per-sample term of the 3-square datapaths:
/// `-(x+y)² + y² + j(-(x+y)² - x²)`, added to every partial product of that
/// sample.
pub fn sample_term_cpm3<T: Element>(x: &Cx<T>, ledger: &mut OpLedger) -> Cx<T> {
    let (re, im) = left3_terms(x, ledger);
    Cx::new(re, im)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub kind: CorrectionKind,
    pub side: Option<Side>,
    pub role: Option<Cpm3Role>,
    pub sources: Vec<Fingerprint>,
}

/// Correction sets keyed by operand content. Reads may proceed concurrently;
/// inserts take the write lock.
#[derive(Debug, Default)]
pub struct CorrectionCache<T> {
    entries: RwLock<HashMap<CacheKey, Arc<CorrectionSet<T>>>>,
}

impl<T: Element> CorrectionCache<T> {
    pub fn new() -> Self {
        CorrectionCache {
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &CacheKey) -> Option<Arc<CorrectionSet<T>>> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    /// Returns the cached set for `key`, computing and storing it first if
    /// needed. Squarings spent on a miss go to `ledger`.
    pub fn get_or_compute(
        &self,
        key: CacheKey,
        ledger: &mut OpLedger,
        compute: impl FnOnce(&mut OpLedger) -> Result<CorrectionSet<T>>,
    ) -> Result<Arc<CorrectionSet<T>>> {
        if let Some(hit) = self.get(&key) {
            return Ok(hit);
        }
        let set = Arc::new(compute(ledger)?);
        let mut entries = self.entries.write().expect("cache lock poisoned");
        Ok(entries.entry(key).or_insert(set).clone())
    }

    pub fn real_mat(
        &self,
        a: &Matrix<T>,
        b: &Matrix<T>,
        ledger: &mut OpLedger,
    ) -> Result<Arc<CorrectionSet<T>>> {
        let key = CacheKey {
            kind: CorrectionKind::RealMat,
            side: None,
            role: None,
            sources: vec![a.fingerprint(), b.fingerprint()],
        };
        self.get_or_compute(key, ledger, |l| real_mat_corrections(a, b, l))
    }

    pub fn transform(&self, w: &Matrix<T>, ledger: &mut OpLedger) -> Result<Arc<CorrectionSet<T>>> {
        let key = CacheKey {
            kind: CorrectionKind::RealTransform,
            side: None,
            role: None,
            sources: vec![w.fingerprint()],
        };
        self.get_or_compute(key, ledger, |l| Ok(transform_corrections(w, l)))
    }

    pub fn complex4(
        &self,
        x: &CMatrix<T>,
        side: Side,
        ledger: &mut OpLedger,
    ) -> Result<Arc<CorrectionSet<T>>> {
        let key = CacheKey {
            kind: CorrectionKind::Complex4,
            side: Some(side),
            role: None,
            sources: vec![x.fingerprint()],
        };
        self.get_or_compute(key, ledger, |l| Ok(complex4_corrections(x, side, l)))
    }

    pub fn complex3(
        &self,
        x: &CMatrix<T>,
        side: Side,
        role: Cpm3Role,
        ledger: &mut OpLedger,
    ) -> Result<Arc<CorrectionSet<T>>> {
        let key = CacheKey {
            kind: CorrectionKind::Complex3,
            side: Some(side),
            role: Some(role),
            sources: vec![x.fingerprint()],
        };
        self.get_or_compute(key, ledger, |l| {
            Ok(complex3_operand_corrections(x, side, role, l))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn cint(re: i64, im: i64) -> Cx<BigInt> {
        Cx::new(BigInt::from(re), BigInt::from(im))
    }

    #[test]
    fn real_mat_examples() {
        let a = Matrix::<BigInt>::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = Matrix::<BigInt>::from_i64_rows(&[&[5, 6], &[7, 8]]).unwrap();
        let mut l = OpLedger::new();
        let set = real_mat_corrections(&a, &b, &mut l).unwrap();
        let (sa, sb) = set.real_mat().unwrap();
        assert_eq!(sa, ints(&[-5, -25]).as_slice());
        assert_eq!(sb, ints(&[-74, -100]).as_slice());
        assert_eq!(l.squarings, 4 + 4);

        let z = Matrix::<BigInt>::zeros(3, 2).unwrap();
        let set = real_mat_corrections(&z, &b, &mut l).unwrap();
        assert_eq!(set.real_mat().unwrap().0, ints(&[0, 0, 0]).as_slice());

        let id = Matrix::<BigInt>::identity(2).unwrap();
        let set = real_mat_corrections(&id, &id, &mut l).unwrap();
        assert_eq!(set.real_mat().unwrap(), (ints(&[-1, -1]).as_slice(), ints(&[-1, -1]).as_slice()));

        assert!(real_mat_corrections(&a, &Matrix::zeros(3, 1).unwrap(), &mut l).is_err());
    }

    #[test]
    fn real_mat_squaring_count() {
        let a = Matrix::<BigInt>::zeros(3, 5).unwrap();
        let b = Matrix::<BigInt>::zeros(5, 7).unwrap();
        let mut l = OpLedger::new();
        real_mat_corrections(&a, &b, &mut l).unwrap();
        assert_eq!(l.squarings, 3 * 5 + 5 * 7);
    }

    #[test]
    fn transform_examples() {
        let mut l = OpLedger::new();
        let w = Matrix::<BigInt>::from_i64_rows(&[&[1, 1], &[1, -1]]).unwrap();
        assert_eq!(transform_corrections(&w, &mut l).real_transform().unwrap(), ints(&[-2, -2]).as_slice());
        let z = Matrix::<BigInt>::zeros(2, 3).unwrap();
        assert_eq!(transform_corrections(&z, &mut l).real_transform().unwrap(), ints(&[0, 0]).as_slice());
        let id = Matrix::<BigInt>::identity(4).unwrap();
        assert_eq!(transform_corrections(&id, &mut l).real_transform().unwrap(), ints(&[-1; 4]).as_slice());
    }

    #[test]
    fn conv_examples() {
        let mut l = OpLedger::new();
        let w = ints(&[1, 2]);
        let set = conv_corrections(ConvKernel::Real1D(&w), &mut l).unwrap();
        assert_eq!(set.real_conv1d().unwrap(), &BigInt::from(-5));

        let w2 = Matrix::<BigInt>::from_i64_rows(&[&[1, 1], &[1, 1]]).unwrap();
        let set = conv_corrections(ConvKernel::Real2D(&w2), &mut l).unwrap();
        assert_eq!(set.real_conv2d().unwrap(), &BigInt::from(-4));

        let wc = [cint(3, 4)];
        let set = conv_corrections(ConvKernel::Complex3(&wc), &mut l).unwrap();
        assert_eq!(set.complex3_conv().unwrap(), &cint(40, -10));

        let set = conv_corrections(ConvKernel::Complex(&wc), &mut l).unwrap();
        assert_eq!(set.complex_conv().unwrap(), &BigInt::from(-25));

        let empty: [BigInt; 0] = [];
        assert!(conv_corrections(ConvKernel::Real1D(&empty), &mut l).is_err());
    }

    #[test]
    fn complex4_examples() {
        let mut l = OpLedger::new();
        let x = CMatrix::from_rows(vec![vec![cint(1, 2), cint(3, 4)]]).unwrap();
        let set = complex4_corrections(&x, Side::Rows, &mut l);
        assert_eq!(set.complex4(Side::Rows).unwrap(), ints(&[-30]).as_slice());
        assert_eq!(l.squarings, 4);
        assert!(set.complex4(Side::Cols).is_err());

        let z = CMatrix::<BigInt>::czeros(1, 3).unwrap();
        assert_eq!(complex4_corrections(&z, Side::Rows, &mut l).complex4(Side::Rows).unwrap(), ints(&[0]).as_slice());

        let unit: Vec<Cx<f64>> = (0..4)
            .map(|k| Cx::from_polar(1.0, 0.7 * k as f64 + 0.1))
            .collect();
        let xf = CMatrix::from_rows(vec![unit]).unwrap();
        let s = complex4_corrections(&xf, Side::Rows, &mut l);
        assert!((s.complex4(Side::Rows).unwrap()[0] + 4.0).abs() < 1e-12);
    }

    #[test]
    fn complex3_examples() {
        let mut l = OpLedger::new();
        let row = CMatrix::from_rows(vec![vec![cint(1, 2)]]).unwrap();
        let set = complex3_corrections(&row, Side::Rows, &mut l);
        let (sab, sba) = set.complex3(Side::Rows, Cpm3Role::Left).unwrap();
        assert_eq!((sab, sba), (ints(&[-5]).as_slice(), ints(&[-10]).as_slice()));

        let col = CMatrix::from_rows(vec![vec![cint(3, 4)]]).unwrap();
        let set = complex3_corrections(&col, Side::Cols, &mut l);
        let (scs, ssc) = set.complex3(Side::Cols, Cpm3Role::Right).unwrap();
        assert_eq!((scs, ssc), (ints(&[40]).as_slice(), ints(&[-10]).as_slice()));

        let z = CMatrix::<BigInt>::czeros(1, 2).unwrap();
        let set = complex3_corrections(&z, Side::Rows, &mut l);
        assert_eq!(set.complex3(Side::Rows, Cpm3Role::Left).unwrap(), (ints(&[0]).as_slice(), ints(&[0]).as_slice()));
    }

    #[test]
    fn complex3_counts_three_squares_per_element() {
        let mut l = OpLedger::new();
        let x = CMatrix::<BigInt>::czeros(3, 4).unwrap();
        complex3_corrections(&x, Side::Rows, &mut l);
        assert_eq!(l.squarings, 3 * 12);
        complex3_corrections(&x, Side::Cols, &mut l);
        assert_eq!(l.squarings, 6 * 12);
    }

    #[test]
    fn sample_terms() {
        let mut l = OpLedger::new();
        assert_eq!(sample_term_real(&BigInt::from(3), &mut l), BigInt::from(9));
        assert_eq!(sample_term_cpm(&cint(1, 2), &mut l), cint(5, 5));
        assert_eq!(sample_term_cpm3(&cint(1, 2), &mut l), cint(-5, -10));
    }

    #[test]
    fn kernels_reject_stale_sets() {
        let a = Matrix::<BigInt>::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = Matrix::<BigInt>::from_i64_rows(&[&[5, 6], &[7, 8]]).unwrap();
        let set = real_mat_corrections(&a, &b, &mut OpLedger::new()).unwrap();
        assert!(set.check_sources(&[a.fingerprint(), b.fingerprint()]).is_ok());
        assert!(matches!(
            set.check_sources(&[b.fingerprint(), a.fingerprint()]),
            Err(Error::StaleCorrections { .. })
        ));
    }

    #[test]
    fn cache_reuses_sets() {
        let cache = CorrectionCache::<BigInt>::new();
        let a = Matrix::<BigInt>::from_i64_rows(&[&[1, 2], &[3, 4]]).unwrap();
        let b = Matrix::<BigInt>::from_i64_rows(&[&[5, 6], &[7, 8]]).unwrap();
        let mut l = OpLedger::new();
        let first = cache.real_mat(&a, &b, &mut l).unwrap();
        let spent = l.squarings;
        let second = cache.real_mat(&a, &b, &mut l).unwrap();
        assert!(Arc::ptr_eq(&first, &second));
        assert_eq!(l.squarings, spent);
        assert_eq!(cache.len(), 1);
        let recomputed = real_mat_corrections(&a, &b, &mut OpLedger::new()).unwrap();
        assert_eq!(*first, recomputed);
    }

    #[test]
    fn cache_is_shareable_across_threads() {
        let cache = Arc::new(CorrectionCache::<BigInt>::new());
        let x = CMatrix::from_rows(vec![vec![cint(1, 2), cint(-3, 4)]]).unwrap();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let cache = Arc::clone(&cache);
                let x = x.clone();
                std::thread::spawn(move || {
                    let mut l = OpLedger::new();
                    cache.complex4(&x, Side::Rows, &mut l).unwrap()
                })
            })
            .collect();
        let sets: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(sets.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(cache.len(), 1);
    }

    proptest! {
        #[test]
        fn negated_square_sums_are_never_positive(
            vals in proptest::collection::vec(-1000i64..1000, 1..20),
            ims in proptest::collection::vec(-1000i64..1000, 1..20),
        ) {
            let mut l = OpLedger::new();
            let zero = BigInt::from(0);
            let set = conv_corrections(ConvKernel::Real1D(&ints(&vals)), &mut l).unwrap();
            prop_assert!(*set.real_conv1d().unwrap() <= zero);
            let cx: Vec<_> = vals.iter().zip(&ims).map(|(&r, &i)| cint(r, i)).collect();
            let set = conv_corrections(ConvKernel::Complex(&cx), &mut l).unwrap();
            prop_assert!(*set.complex_conv().unwrap() <= zero);
            let m = CMatrix::from_rows(vec![cx.clone()]).unwrap();
            for s in complex4_corrections(&m, Side::Cols, &mut l).complex4(Side::Cols).unwrap() {
                prop_assert!(*s <= zero);
            }
        }
    }
}
