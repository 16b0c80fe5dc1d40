//! The on-disk matrix format.
//!
//! ```json
//! {
//!   "rows": 1,
//!   "cols": 2,
//!   "domain": "int",
//!   "complex": true,
//!   "data": [[[1, 2], [3, -4]]]
//! }
//! ```
//!
//! `data` is row-major, one JSON array per row; complex entries are
//! `[re, im]`. Integers are plain decimal of any size, floats use the
//! shortest text that round-trips. [`AnyMatrix::to_json`] writes the
//! canonical form, and parsing then writing a canonical file reproduces it
//! byte for byte.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use sqmul::numeric::Domain;
use sqmul::{CMatrix, Cx, Element, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub enum AnyMatrix {
    Int(Matrix<BigInt>),
    Float(Matrix<f64>),
    CInt(CMatrix<BigInt>),
    CFloat(CMatrix<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Wire {
    rows: usize,
    cols: usize,
    domain: String,
    complex: bool,
    data: Vec<Vec<Value>>,
}

fn number<T: Element>(v: &T) -> Value {
    Value::Number(Number::from_str(&v.render()).expect("rendered scalars are JSON numbers"))
}

fn scalar<T: FromStr>(v: &Value, domain: Domain) -> Result<T, String> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        other => return Err(format!("expected a number, found {other}")),
    };
    text.parse::<T>()
        .map_err(|_| format!("'{text}' is not a valid {domain} value"))
}

fn finite(v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value {v}"))
    }
}

impl AnyMatrix {
    pub fn domain(&self) -> Domain {
        match self {
            AnyMatrix::Int(_) | AnyMatrix::CInt(_) => Domain::ExactInt,
            AnyMatrix::Float(_) | AnyMatrix::CFloat(_) => Domain::Float,
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, AnyMatrix::CInt(_) | AnyMatrix::CFloat(_))
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            AnyMatrix::Int(m) => m.shape(),
            AnyMatrix::Float(m) => m.shape(),
            AnyMatrix::CInt(m) => m.shape(),
            AnyMatrix::CFloat(m) => m.shape(),
        }
    }

    pub fn to_json(&self) -> String {
        fn rows<T: Clone>(m: &Matrix<T>, f: impl Fn(&T) -> Value) -> Vec<Vec<Value>> {
            (0..m.rows()).map(|r| m.row(r).iter().map(&f).collect()).collect()
        }
        fn pair<T: Element>(z: &Cx<T>) -> Value {
            Value::Array(vec![number(&z.re), number(&z.im)])
        }
        let data = match self {
            AnyMatrix::Int(m) => rows(m, number),
            AnyMatrix::Float(m) => rows(m, number),
            AnyMatrix::CInt(m) => rows(m, pair),
            AnyMatrix::CFloat(m) => rows(m, pair),
        };
        let (r, c) = self.shape();
        let wire = Wire {
            rows: r,
            cols: c,
            domain: self.domain().to_string(),
            complex: self.is_complex(),
            data,
        };
        let mut s = serde_json::to_string_pretty(&wire).expect("matrix serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let wire: Wire = serde_json::from_str(text).map_err(|e| format!("malformed matrix file: {e}"))?;
        let domain = match wire.domain.as_str() {
            "int" => Domain::ExactInt,
            "float" => Domain::Float,
            other => return Err(format!("unknown domain '{other}'")),
        };
        if wire.rows == 0 || wire.cols == 0 {
            return Err(format!("invalid shape {}x{}", wire.rows, wire.cols));
        }
        if wire.data.len() != wire.rows || wire.data.iter().any(|r| r.len() != wire.cols) {
            return Err(format!(
                "declared shape {}x{} does not match the data",
                wire.rows, wire.cols
            ));
        }
        let flat: Vec<&Value> = wire.data.iter().flatten().collect();
        let parts = |v: &Value| -> Result<(Value, Value), String> {
            match v {
                Value::Array(p) if p.len() == 2 => Ok((p[0].clone(), p[1].clone())),
                other => Err(format!("expected a [re, im] pair, found {other}")),
            }
        };
        let (r, c) = (wire.rows, wire.cols);
        let shape_err = |e: sqmul::Error| e.to_string();
        Ok(match (domain, wire.complex) {
            (Domain::ExactInt, false) => {
                let d = flat.iter().map(|v| scalar::<BigInt>(v, domain)).collect::<Result<_, _>>()?;
                AnyMatrix::Int(Matrix::new(r, c, d).map_err(shape_err)?)
            }
            (Domain::Float, false) => {
                let d = flat
                    .iter()
                    .map(|v| scalar::<f64>(v, domain).and_then(finite))
                    .collect::<Result<_, _>>()?;
                AnyMatrix::Float(Matrix::new(r, c, d).map_err(shape_err)?)
            }
            (Domain::ExactInt, true) => {
                let d = flat
                    .iter()
                    .map(|v| {
                        let (re, im) = parts(v)?;
                        Ok(Cx::new(scalar(&re, domain)?, scalar(&im, domain)?))
                    })
                    .collect::<Result<_, String>>()?;
                AnyMatrix::CInt(Matrix::new(r, c, d).map_err(shape_err)?)
            }
            (Domain::Float, true) => {
                let d = flat
                    .iter()
                    .map(|v| {
                        let (re, im) = parts(v)?;
                        Ok(Cx::new(
                            finite(scalar(&re, domain)?)?,
                            finite(scalar(&im, domain)?)?,
                        ))
                    })
                    .collect::<Result<_, String>>()?;
                AnyMatrix::CFloat(Matrix::new(r, c, d).map_err(shape_err)?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let cases = [
            AnyMatrix::Int(Matrix::from_i64_rows(&[&[1, -2], &[3, 40000000000]]).unwrap()),
            AnyMatrix::Float(Matrix::from_rows(vec![vec![0.1, -2.5e-9, 1e21]]).unwrap()),
            AnyMatrix::CInt(CMatrix::from_i64_pairs(&[&[(1, 2)], &[(3, -4)]]).unwrap()),
            AnyMatrix::CFloat(Matrix::from_rows(vec![vec![Cx::new(0.5, -0.25)]]).unwrap()),
        ];
        for m in cases {
            let text = m.to_json();
            let back = AnyMatrix::parse(&text).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn huge_integers_survive() {
        let text = "{\"rows\":1,\"cols\":1,\"domain\":\"int\",\"complex\":false,\
                    \"data\":[[123456789012345678901234567890]]}";
        let m = AnyMatrix::parse(text).unwrap();
        assert!(m.to_json().contains("123456789012345678901234567890"));
    }

    #[test]
    fn rejects_bad_files() {
        let bad = [
            r#"{"rows":2,"cols":1,"domain":"int","complex":false,"data":[[1]]}"#,
            r#"{"rows":1,"cols":1,"domain":"int","complex":false,"data":[[1.5]]}"#,
            r#"{"rows":1,"cols":1,"domain":"real","complex":false,"data":[[1]]}"#,
            r#"{"rows":1,"cols":1,"domain":"int","complex":true,"data":[[1]]}"#,
            r#"{"rows":0,"cols":1,"domain":"int","complex":false,"data":[]}"#,
            r#"{"rows":1,"cols":1,"domain":"int","complex":false,"data":[["1"]]}"#,
            "not json",
        ];
        for b in bad {
            assert!(AnyMatrix::parse(b).is_err(), "{b}");
        }
    }
}
