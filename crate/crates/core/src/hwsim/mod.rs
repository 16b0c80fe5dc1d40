//! Cycle-level behavioral models of the square-based architectures.
//!
//! Every model is a synchronous register-transfer simulation: one global
//! clock, combinational blocks evaluated functionally inside a cycle. Square
//! based variants return the doubled result, as the hardware does; the final
//! right shift is the separate [`shift_right`] step.
//!
//! When a [`BitWidthPlan`] is configured, every integer value that reaches a
//! register or a datapath net is checked against its planned width.

mod conv;
mod datapath;
mod pm_acc;
mod systolic;
mod tensorcore;
pub mod trace;
mod transform;

use std::fmt;
use std::str::FromStr;

pub use conv::{cconv_engine_run, conv_engine_run};
pub use pm_acc::{cpm_accumulator_run, pm_accumulator_run};
pub use systolic::{systolic_cycles, systolic_output_cycle, systolic_run};
pub use tensorcore::{tensorcore_matmul, tensorcore_run};
pub use trace::{RegisterState, Signal, SimTrace, TraceEvent, TraceLevel, WidthViolation};
pub use transform::{ctransform_engine_run, transform_engine_run};

use crate::error::{Error, Result};
use crate::ledger::OpLedger;
use crate::matrix::Matrix;
use crate::numeric::{halve_exact, BitWidthPlan, Cx, Element};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    PmAcc,
    Systolic,
    TensorCore,
    TransformEngine,
    ConvEngine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Multiply-accumulate. For the convolution engine: transposed form.
    Mac,
    /// Multiply-accumulate convolution in direct (delay line) form.
    MacDirect,
    Sq,
    Cpm,
    Cpm3,
}

impl Arch {
    pub const ALL: [Arch; 5] = [
        Arch::PmAcc,
        Arch::Systolic,
        Arch::TensorCore,
        Arch::TransformEngine,
        Arch::ConvEngine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Arch::PmAcc => "pmacc",
            Arch::Systolic => "systolic",
            Arch::TensorCore => "tensorcore",
            Arch::TransformEngine => "transform",
            Arch::ConvEngine => "conv",
        }
    }

    /// The variants this architecture is defined for. The systolic array and
    /// the tensor core are real-valued only.
    pub fn variants(self) -> &'static [Variant] {
        use Variant::*;
        match self {
            Arch::PmAcc => &[Mac, Sq, Cpm, Cpm3],
            Arch::Systolic | Arch::TensorCore => &[Mac, Sq],
            Arch::TransformEngine => &[Mac, Sq, Cpm, Cpm3],
            Arch::ConvEngine => &[Mac, MacDirect, Sq, Cpm, Cpm3],
        }
    }
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Mac,
        Variant::MacDirect,
        Variant::Sq,
        Variant::Cpm,
        Variant::Cpm3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Mac => "MAC",
            Variant::MacDirect => "MAC-direct",
            Variant::Sq => "SQ",
            Variant::Cpm => "CPM",
            Variant::Cpm3 => "CPM3",
        }
    }

    /// Square-based variants produce twice the true result.
    pub fn doubles(self) -> bool {
        matches!(self, Variant::Sq | Variant::Cpm | Variant::Cpm3)
    }

    pub fn is_complex(self) -> bool {
        matches!(self, Variant::Cpm | Variant::Cpm3)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown architecture '{s}'")))
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown variant '{s}'")))
    }
}

/// Simulator configuration. Construct with [`SimConfig::new`], which rejects
/// variants the architecture does not define.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub arch: Arch,
    pub variant: Variant,
    /// `(rows, cols)` of the PE grid. Systolic: `rows` is the inner
    /// dimension, `cols` the number of rows of `A`. Tensor core: the output
    /// tile shape.
    pub array_dims: Option<(usize, usize)>,
    /// Widths to check against; `None` disables checking.
    pub bitplan: Option<BitWidthPlan>,
    pub trace_level: TraceLevel,
    /// Fail the run on the first width violation instead of only listing it.
    pub strict_widths: bool,
}

impl SimConfig {
    pub fn new(arch: Arch, variant: Variant) -> Result<Self> {
        if !arch.variants().contains(&variant) {
            return Err(Error::IllegalVariant {
                arch: arch.to_string(),
                variant: variant.to_string(),
            });
        }
        Ok(SimConfig {
            arch,
            variant,
            array_dims: None,
            bitplan: None,
            trace_level: TraceLevel::Registers,
            strict_widths: true,
        })
    }

    pub fn with_dims(mut self, rows: usize, cols: usize) -> Self {
        self.array_dims = Some((rows, cols));
        self
    }

    pub fn with_bitplan(mut self, plan: BitWidthPlan) -> Self {
        self.bitplan = Some(plan);
        self
    }

    pub fn with_trace_level(mut self, level: TraceLevel) -> Self {
        self.trace_level = level;
        self
    }

    pub fn with_strict_widths(mut self, strict: bool) -> Self {
        self.strict_widths = strict;
        self
    }

    pub(crate) fn expect(&self, arch: Arch, complex: bool) -> Result<()> {
        let illegal = || Error::IllegalVariant {
            arch: arch.to_string(),
            variant: self.variant.to_string(),
        };
        if self.arch != arch {
            return Err(Error::InvalidParameter(format!(
                "configuration is for {}, not {arch}",
                self.arch
            )));
        }
        if !arch.variants().contains(&self.variant) {
            return Err(illegal());
        }
        // Complex runs take MAC or the complex square variants; real runs
        // take MAC or SQ.
        let ok = match self.variant {
            Variant::Mac | Variant::MacDirect => true,
            Variant::Sq => !complex,
            Variant::Cpm | Variant::Cpm3 => complex,
        };
        if ok {
            Ok(())
        } else {
            Err(illegal())
        }
    }

    pub(crate) fn recorder(&self) -> trace::Recorder {
        trace::Recorder::new(self.trace_level, self.bitplan)
    }
}

/// The final right shift of a square-based datapath: halves every value,
/// failing on an odd one.
pub fn shift_right<T: Element>(values: &[T]) -> Result<Vec<T>> {
    let mut ledger = OpLedger::new();
    values.iter().map(|v| halve_exact(v, &mut ledger)).collect()
}

pub fn shift_right_complex<T: Element>(values: &[Cx<T>]) -> Result<Vec<Cx<T>>> {
    let mut ledger = OpLedger::new();
    values
        .iter()
        .map(|v| {
            Ok(Cx::new(
                halve_exact(&v.re, &mut ledger)?,
                halve_exact(&v.im, &mut ledger)?,
            ))
        })
        .collect()
}

pub fn shift_right_matrix<T: Element>(m: &Matrix<T>) -> Result<Matrix<T>> {
    Matrix::new(m.rows(), m.cols(), shift_right(m.data())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legality() {
        assert!(matches!(
            SimConfig::new(Arch::Systolic, Variant::Cpm3),
            Err(Error::IllegalVariant { .. })
        ));
        assert!(SimConfig::new(Arch::TensorCore, Variant::Cpm).is_err());
        assert!(SimConfig::new(Arch::TransformEngine, Variant::MacDirect).is_err());
        assert!(SimConfig::new(Arch::ConvEngine, Variant::MacDirect).is_ok());
        for arch in Arch::ALL {
            for &v in arch.variants() {
                assert!(SimConfig::new(arch, v).is_ok());
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for a in Arch::ALL {
            assert_eq!(a.name().parse::<Arch>().unwrap(), a);
        }
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("cpm3".parse::<Variant>().unwrap(), Variant::Cpm3);
        assert!("bogus".parse::<Arch>().is_err());
    }

    #[test]
    fn shift_right_halves() {
        use num_bigint::BigInt;
        let v: Vec<BigInt> = [38, -4].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(shift_right(&v).unwrap(), vec![BigInt::from(19), BigInt::from(-2)]);
        assert!(matches!(
            shift_right(&[BigInt::from(3)]),
            Err(Error::OddDoubledResult(_))
        ));
    }
}
