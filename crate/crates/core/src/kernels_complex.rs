//! Complex kernels: schoolbook oracles, the 4-square (CPM) kernels and the
//! 3-square (CPM3) kernels for matrix products, transforms and 1-D
//! convolutions.
//!
//! The oracles multiply with four real multiplications. They never use the
//! three-multiplication rearrangement that CPM3 is derived from.

use crate::correction::{
    complex3_corrections, complex4_corrections, sample_term_cpm, sample_term_cpm3, CorrectionSet,
    Cpm3Role, Side,
};
use crate::error::{Error, Result};
use crate::kernels_real::check_conv1d;
use crate::ledger::OpLedger;
use crate::matrix::{fingerprint_slice, CMatrix};
use crate::numeric::{cpm, cpm3, cpm3_parts, halve_exact, mul, Cx, Element};

/// `(a + jb)(c + js)` with four real multiplications.
pub fn cmul_schoolbook<T: Element>(x: &Cx<T>, y: &Cx<T>, ledger: &mut OpLedger) -> Cx<T> {
    ledger.additions += 2;
    Cx::new(
        mul(&x.re, &y.re, ledger) - mul(&x.im, &y.im, ledger),
        mul(&x.im, &y.re, ledger) + mul(&x.re, &y.im, ledger),
    )
}

fn cadd<T: Element>(a: Cx<T>, b: Cx<T>, ledger: &mut OpLedger) -> Cx<T> {
    ledger.additions += 2;
    Cx::new(a.re + b.re, a.im + b.im)
}

fn chalve<T: Element>(v: &Cx<T>, ledger: &mut OpLedger) -> Result<Cx<T>> {
    Ok(Cx::new(halve_exact(&v.re, ledger)?, halve_exact(&v.im, ledger)?))
}

fn czero<T: Element>() -> Cx<T> {
    Cx::new(T::zero(), T::zero())
}

fn check_inner<T: Clone>(x: &CMatrix<T>, y: &CMatrix<T>) -> Result<()> {
    if x.cols() != y.rows() {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions differ: {}x{} times {}x{}",
            x.rows(),
            x.cols(),
            y.rows(),
            y.cols()
        )));
    }
    Ok(())
}

fn check_transform<T: Clone>(w: &CMatrix<T>, x: &[Cx<T>]) -> Result<()> {
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

/// Schoolbook complex `X·Y`.
pub fn cmatmul_mac<T: Element>(x: &CMatrix<T>, y: &CMatrix<T>) -> Result<(CMatrix<T>, OpLedger)> {
    check_inner(x, y)?;
    let mut ledger = OpLedger::new();
    let z = CMatrix::from_fn(x.rows(), y.cols(), |h, k| {
        x.row(h).iter().zip(y.col(k)).fold(czero(), |acc, (a, c)| {
            let p = cmul_schoolbook(a, c, &mut ledger);
            cadd(acc, p, &mut ledger)
        })
    })?;
    Ok((z, ledger))
}

/// Complex `X·Y` with four squarings per complex product.
///
/// `corrections` are the row set of `X` and the column set of `Y`
/// ([`complex4_corrections`]); when absent they are computed here.
pub fn cmatmul_sq4<T: Element>(
    x: &CMatrix<T>,
    y: &CMatrix<T>,
    corrections: Option<(&CorrectionSet<T>, &CorrectionSet<T>)>,
) -> Result<(CMatrix<T>, OpLedger)> {
    check_inner(x, y)?;
    let mut ledger = OpLedger::new();
    let fresh;
    let (rows, cols) = match corrections {
        Some((r, c)) => {
            r.check_sources(&[x.fingerprint()])?;
            c.check_sources(&[y.fingerprint()])?;
            (r, c)
        }
        None => {
            fresh = (
                complex4_corrections(x, Side::Rows, &mut ledger),
                complex4_corrections(y, Side::Cols, &mut ledger),
            );
            (&fresh.0, &fresh.1)
        }
    };
    let sx = rows.complex4(Side::Rows)?;
    let sy = cols.complex4(Side::Cols)?;
    let mut data = Vec::with_capacity(x.rows() * y.cols());
    for h in 0..x.rows() {
        for k in 0..y.cols() {
            let s = sx[h].clone() + sy[k].clone();
            let mut acc = Cx::new(s.clone(), s);
            for (a, c) in x.row(h).iter().zip(y.col(k)) {
                let (re, im) = cpm(a, c, &mut ledger);
                acc = cadd(acc, Cx::new(re, im), &mut ledger);
            }
            data.push(chalve(&acc, &mut ledger)?);
        }
    }
    Ok((CMatrix::new(x.rows(), y.cols(), data)?, ledger))
}

/// Complex `X·Y` with three squarings per complex product.
///
/// `(c+a+b)²` is computed once per `(h, i, k)` and shared by the real and
/// imaginary part. `corrections` are `(Sab_h, Sba_h)` over rows of `X` and
/// `(Scs_k, Ssc_k)` over columns of `Y` ([`complex3_corrections`]).
pub fn cmatmul_sq3<T: Element>(
    x: &CMatrix<T>,
    y: &CMatrix<T>,
    corrections: Option<(&CorrectionSet<T>, &CorrectionSet<T>)>,
) -> Result<(CMatrix<T>, OpLedger)> {
    check_inner(x, y)?;
    let mut ledger = OpLedger::new();
    let fresh;
    let (rows, cols) = match corrections {
        Some((r, c)) => {
            r.check_sources(&[x.fingerprint()])?;
            c.check_sources(&[y.fingerprint()])?;
            (r, c)
        }
        None => {
            fresh = (
                complex3_corrections(x, Side::Rows, &mut ledger),
                complex3_corrections(y, Side::Cols, &mut ledger),
            );
            (&fresh.0, &fresh.1)
        }
    };
    let (sab, sba) = rows.complex3(Side::Rows, Cpm3Role::Left)?;
    let (scs, ssc) = cols.complex3(Side::Cols, Cpm3Role::Right)?;
    let mut data = Vec::with_capacity(x.rows() * y.cols());
    for h in 0..x.rows() {
        for k in 0..y.cols() {
            let mut acc = Cx::new(
                sab[h].clone() + scs[k].clone(),
                sba[h].clone() + ssc[k].clone(),
            );
            for (a, c) in x.row(h).iter().zip(y.col(k)) {
                let t = cpm3(a, c, &mut ledger);
                let (re, im) = cpm3_parts(t, &mut ledger);
                acc = cadd(acc, Cx::new(re, im), &mut ledger);
            }
            data.push(chalve(&acc, &mut ledger)?);
        }
    }
    Ok((CMatrix::new(x.rows(), y.cols(), data)?, ledger))
}

/// Schoolbook complex transform `X_k = Σ_i w_ki x_i`.
pub fn ctransform_mac<T: Element>(w: &CMatrix<T>, x: &[Cx<T>]) -> Result<(Vec<Cx<T>>, OpLedger)> {
    check_transform(w, x)?;
    let mut ledger = OpLedger::new();
    let out = (0..w.rows())
        .map(|k| {
            w.row(k).iter().zip(x).fold(czero(), |acc, (c, s)| {
                let p = cmul_schoolbook(c, s, &mut ledger);
                cadd(acc, p, &mut ledger)
            })
        })
        .collect();
    Ok((out, ledger))
}

/// Complex transform on 4-square CPMs. `s` holds `S_k` over rows of `w`
/// ([`complex4_corrections`] with [`Side::Rows`]); registers start at
/// `S_k(1+j)` and each sample's `(x² + y²)(1+j)` is computed once and
/// subtracted from every partial product.
pub fn ctransform_sq4<T: Element>(
    w: &CMatrix<T>,
    x: &[Cx<T>],
    s: &CorrectionSet<T>,
) -> Result<(Vec<Cx<T>>, OpLedger)> {
    check_transform(w, x)?;
    s.check_sources(&[w.fingerprint()])?;
    let mut acc: Vec<Cx<T>> = s
        .complex4(Side::Rows)?
        .iter()
        .map(|v| Cx::new(v.clone(), v.clone()))
        .collect();
    let mut ledger = OpLedger::new();
    for (i, xi) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = sample_term_cpm(xi, &mut ledger);
        for (k, reg) in acc.iter_mut().enumerate() {
            let (re, im) = cpm(w.get(k, i), xi, &mut ledger);
            ledger.additions += 4;
            *reg = Cx::new(
                reg.re.clone() + re - shared.re.clone(),
                reg.im.clone() + im - shared.im.clone(),
            );
        }
        ledger.end_step();
    }
    let out = acc
        .iter()
        .map(|v| chalve(v, &mut ledger))
        .collect::<Result<_>>()?;
    Ok((out, ledger))
}

/// Complex transform on 3-square CPM3s with the sample as the left operand.
/// `s` holds `(S_x_k, S_y_k)` over rows of `w` in the [`Cpm3Role::Right`]
/// role ([`crate::correction::complex3_operand_corrections`]).
pub fn ctransform_sq3<T: Element>(
    w: &CMatrix<T>,
    x: &[Cx<T>],
    s: &CorrectionSet<T>,
) -> Result<(Vec<Cx<T>>, OpLedger)> {
    check_transform(w, x)?;
    s.check_sources(&[w.fingerprint()])?;
    let (s_re, s_im) = s.complex3(Side::Rows, Cpm3Role::Right)?;
    let mut acc: Vec<Cx<T>> = s_re
        .iter()
        .zip(s_im)
        .map(|(r, i)| Cx::new(r.clone(), i.clone()))
        .collect();
    let mut ledger = OpLedger::new();
    for (i, xi) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = sample_term_cpm3(xi, &mut ledger);
        for (k, reg) in acc.iter_mut().enumerate() {
            let t = cpm3(xi, w.get(k, i), &mut ledger);
            let (re, im) = cpm3_parts(t, &mut ledger);
            ledger.additions += 4;
            *reg = Cx::new(
                reg.re.clone() + re + shared.re.clone(),
                reg.im.clone() + im + shared.im.clone(),
            );
        }
        ledger.end_step();
    }
    let out = acc
        .iter()
        .map(|v| chalve(v, &mut ledger))
        .collect::<Result<_>>()?;
    Ok((out, ledger))
}

/// Schoolbook complex correlation `z_k = Σ_i w_i x_{i+k}`, valid mode.
pub fn cconv_mac<T: Element>(w: &[Cx<T>], x: &[Cx<T>]) -> Result<(Vec<Cx<T>>, OpLedger)> {
    let outputs = check_conv1d(w, x)?;
    let mut ledger = OpLedger::new();
    let z = (0..outputs)
        .map(|k| {
            w.iter().zip(&x[k..]).fold(czero(), |acc, (wi, xi)| {
                let p = cmul_schoolbook(wi, xi, &mut ledger);
                cadd(acc, p, &mut ledger)
            })
        })
        .collect();
    Ok((z, ledger))
}

/// Complex correlation on 4-square CPMs, transposed form. `S_w(1+j)` is
/// added once per output.
pub fn cconv_sq4<T: Element>(
    w: &[Cx<T>],
    x: &[Cx<T>],
    sw: &CorrectionSet<T>,
) -> Result<(Vec<Cx<T>>, OpLedger)> {
    let outputs = check_conv1d(w, x)?;
    sw.check_sources(&[fingerprint_slice(w)])?;
    let sw = sw.complex_conv()?;
    let n = w.len();
    let mut acc = vec![czero::<T>(); outputs];
    let mut ledger = OpLedger::new();
    for (j, xj) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = sample_term_cpm(xj, &mut ledger);
        for k in j.saturating_sub(n - 1)..=j.min(outputs - 1) {
            let (re, im) = cpm(&w[j - k], xj, &mut ledger);
            ledger.additions += 4;
            acc[k] = Cx::new(
                acc[k].re.clone() + re - shared.re.clone(),
                acc[k].im.clone() + im - shared.im.clone(),
            );
        }
        ledger.end_step();
    }
    let z = acc
        .into_iter()
        .map(|v| {
            let v = cadd(v, Cx::new(sw.clone(), sw.clone()), &mut ledger);
            chalve(&v, &mut ledger)
        })
        .collect::<Result<_>>()?;
    Ok((z, ledger))
}

/// Complex correlation on 3-square CPM3s, transposed form. The complex
/// kernel correction `S_w` is added once per output.
pub fn cconv_sq3<T: Element>(
    w: &[Cx<T>],
    x: &[Cx<T>],
    sw: &CorrectionSet<T>,
) -> Result<(Vec<Cx<T>>, OpLedger)> {
    let outputs = check_conv1d(w, x)?;
    sw.check_sources(&[fingerprint_slice(w)])?;
    let sw = sw.complex3_conv()?;
    let n = w.len();
    let mut acc = vec![czero::<T>(); outputs];
    let mut ledger = OpLedger::new();
    for (j, xj) in x.iter().enumerate() {
        ledger.begin_step();
        let shared = sample_term_cpm3(xj, &mut ledger);
        for k in j.saturating_sub(n - 1)..=j.min(outputs - 1) {
            let t = cpm3(xj, &w[j - k], &mut ledger);
            let (re, im) = cpm3_parts(t, &mut ledger);
            ledger.additions += 4;
            acc[k] = Cx::new(
                acc[k].re.clone() + re + shared.re.clone(),
                acc[k].im.clone() + im + shared.im.clone(),
            );
        }
        ledger.end_step();
    }
    let z = acc
        .into_iter()
        .map(|v| {
            let v = cadd(v, sw.clone(), &mut ledger);
            chalve(&v, &mut ledger)
        })
        .collect::<Result<_>>()?;
    Ok((z, ledger))
}
