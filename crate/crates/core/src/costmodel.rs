//! Operation-count ratios and a parametric area model.
//!
//! The ratios are exact: squarings per multiplication of the square-based
//! matrix product, counting the correction sums. The area model is a
//! deliberately simple gate-count proxy (multiplier `c·n²`, squarer a fixed
//! fraction of that, ripple adders linear in width). All its outputs are
//! model estimates, not silicon numbers.

use std::fmt::Write as _;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::hwsim::{Arch, Variant};
use crate::numeric::{ceil_log2, BitWidthPlan};

fn mnp(m: u64, n: u64, p: u64) -> Result<u64> {
    if m == 0 || n == 0 || p == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(m * n * p)
}

/// Squarings per multiplication of the real square-based product:
/// `(MNP + MN + NP) / MNP = 1 + 1/P + 1/M`.
pub fn ratio_real(m: u64, n: u64, p: u64) -> Result<Ratio<u64>> {
    let d = mnp(m, n, p)?;
    Ok(Ratio::new(d + m * n + n * p, d))
}

/// Squarings per complex multiplication with four squarings each:
/// `4 + 2/P + 2/M`.
pub fn ratio_complex4(m: u64, n: u64, p: u64) -> Result<Ratio<u64>> {
    let d = mnp(m, n, p)?;
    Ok(Ratio::new(4 * d + 2 * m * n + 2 * n * p, d))
}

/// Squarings per complex multiplication with three squarings each:
/// `3 + 3/P + 3/M`.
pub fn ratio_complex3(m: u64, n: u64, p: u64) -> Result<Ratio<u64>> {
    let d = mnp(m, n, p)?;
    Ok(Ratio::new(3 * d + 3 * m * n + 3 * n * p, d))
}

/// Area units for the building blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaModel {
    /// `c` in `mult_area(n) = c·n²`.
    pub mult_coeff: f64,
    /// Squarer area as a fraction of a multiplier of the same width.
    pub squarer_factor: f64,
    /// Area per bit of an adder.
    pub adder_coeff: f64,
}

impl Default for AreaModel {
    fn default() -> Self {
        AreaModel {
            mult_coeff: 1.0,
            squarer_factor: 0.5,
            adder_coeff: 1.0,
        }
    }
}

impl AreaModel {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        if !finite_pos(self.mult_coeff) || !finite_pos(self.adder_coeff) {
            return Err(Error::InvalidParameter("area coefficients must be > 0".into()));
        }
        if !(self.squarer_factor > 0.0 && self.squarer_factor <= 1.0) {
            return Err(Error::InvalidParameter("squarer_factor must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn mult_area(&self, bits: u32) -> f64 {
        self.mult_coeff * f64::from(bits) * f64::from(bits)
    }

    pub fn squarer_area(&self, bits: u32) -> f64 {
        self.squarer_factor * self.mult_area(bits)
    }

    pub fn adder_area(&self, bits: u32) -> f64 {
        self.adder_coeff * f64::from(bits)
    }
}

/// Area of one datapath, split into the part that forms products and the
/// rest (adder trees, accumulators).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Datapath {
    /// Multipliers (MAC) or squarers plus their pre-adders (square based),
    /// including the adders that combine them into a complex partial product.
    pub product: f64,
    pub rest: f64,
    /// Number of squarers (0 for MAC) and their width.
    pub squarers: u32,
    pub squarer_bits: u32,
}

impl Datapath {
    pub fn total(&self) -> f64 {
        self.product + self.rest
    }
}

/// Output of [`area_estimate`]. Every number is a model estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaReport {
    pub arch: Arch,
    pub variant: Variant,
    pub n_bits: u32,
    pub pe_count: usize,
    /// Per-PE datapath of the MAC baseline (complex MAC for CPM/CPM3).
    pub mac_pe: Datapath,
    /// Per-PE datapath of the requested variant.
    pub pe: Datapath,
    /// Units shared by the whole array: per-sample terms, output correction
    /// adders.
    pub shared: f64,
    pub total_mac: f64,
    pub total: f64,
}

impl AreaReport {
    /// MAC multiplier area per PE.
    pub fn mac_multiplier(&self) -> f64 {
        self.mac_pe.product
    }

    /// Area of the squarers and pre-adders that replace the multiplier.
    pub fn pm_replacement(&self) -> f64 {
        self.pe.product
    }

    /// `total / total_mac`.
    pub fn ratio(&self) -> f64 {
        self.total / self.total_mac
    }

    /// Machine-readable `(key, value)` rows.
    pub fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("label", "model estimate".to_string()),
            ("arch", self.arch.to_string()),
            ("variant", self.variant.to_string()),
            ("n_bits", self.n_bits.to_string()),
            ("pe_count", self.pe_count.to_string()),
            ("mac_multiplier", fmt_area(self.mac_multiplier())),
            ("pm_replacement", fmt_area(self.pm_replacement())),
            ("squarers_per_pe", self.pe.squarers.to_string()),
            ("squarer_bits", self.pe.squarer_bits.to_string()),
            ("pe_mac", fmt_area(self.mac_pe.total())),
            ("pe", fmt_area(self.pe.total())),
            ("shared", fmt_area(self.shared)),
            ("total_mac", fmt_area(self.total_mac)),
            ("total", fmt_area(self.total)),
            ("ratio", fmt_area(self.ratio())),
        ]
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.rows() {
            let _ = writeln!(s, "{k}: {v}");
        }
        s
    }
}

fn fmt_area(v: f64) -> String {
    format!("{v:?}")
}

/// Dimensions an [`area_estimate`] needs, per architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AreaShape {
    /// Number of PEs (registers for the engines, taps for convolution).
    pub pes: usize,
    /// Products each PE forms per cycle (tile depth of a tensor core PE).
    pub lanes: usize,
    /// Longest accumulation, which sizes the accumulators.
    pub depth: usize,
}

impl AreaShape {
    pub fn new(pes: usize, lanes: usize, depth: usize) -> Result<Self> {
        if pes == 0 || lanes == 0 || depth == 0 {
            return Err(Error::ZeroDimension);
        }
        Ok(AreaShape { pes, lanes, depth })
    }
}

/// Area of `arch` running `variant` on `n_bits` operands, against the MAC
/// version of the same architecture.
///
/// Square-based widths follow [`BitWidthPlan`]: squarers of `n+1` bits
/// (`n+2` for CPM3, whose pre-adders sum three operands). Correction terms
/// are assumed precomputed and are not charged.
pub fn area_estimate(
    arch: Arch,
    variant: Variant,
    n_bits: u32,
    shape: AreaShape,
    model: &AreaModel,
) -> Result<AreaReport> {
    model.validate()?;
    if !arch.variants().contains(&variant) {
        return Err(Error::IllegalVariant {
            arch: arch.to_string(),
            variant: variant.to_string(),
        });
    }
    let plan = BitWidthPlan::new(n_bits, shape.depth)?;
    let complex = variant.is_complex();
    let baseline = if complex { Datapath::complex_mac } else { Datapath::real_mac };
    let mac_pe = baseline(model, n_bits, shape);
    let pe = match variant {
        Variant::Mac | Variant::MacDirect => mac_pe,
        Variant::Sq => Datapath::real_sq(model, &plan, shape),
        Variant::Cpm => Datapath::cpm(model, &plan, shape),
        Variant::Cpm3 => Datapath::cpm3(model, &plan, shape),
    };
    let shared = shared_area(arch, variant, model, &plan, shape);
    let pes = shape.pes as f64;
    Ok(AreaReport {
        arch,
        variant,
        n_bits,
        pe_count: shape.pes,
        mac_pe,
        pe,
        shared,
        total_mac: pes * mac_pe.total(),
        total: pes * pe.total() + shared,
    })
}

impl Datapath {
    /// Adder tree over `lanes` values of `bits` bits, then the accumulator.
    fn reduce(model: &AreaModel, lanes: usize, bits: u32, acc_bits: u32) -> f64 {
        (lanes as f64 - 1.0) * model.adder_area(bits + ceil_log2(lanes)) + model.adder_area(acc_bits)
    }

    fn mac_acc_bits(n: u32, depth: usize) -> u32 {
        2 * n + ceil_log2(depth)
    }

    fn real_mac(model: &AreaModel, n: u32, s: AreaShape) -> Self {
        Datapath {
            product: s.lanes as f64 * model.mult_area(n),
            rest: Self::reduce(model, s.lanes, 2 * n, Self::mac_acc_bits(n, s.depth)),
            squarers: 0,
            squarer_bits: 0,
        }
    }

    fn complex_mac(model: &AreaModel, n: u32, s: AreaShape) -> Self {
        let one = 4.0 * model.mult_area(n) + 2.0 * model.adder_area(2 * n + 1);
        Datapath {
            product: s.lanes as f64 * one,
            rest: 2.0 * Self::reduce(model, s.lanes, 2 * n + 1, Self::mac_acc_bits(n, s.depth) + 1),
            squarers: 0,
            squarer_bits: 0,
        }
    }

    fn real_sq(model: &AreaModel, plan: &BitWidthPlan, s: AreaShape) -> Self {
        let one = model.squarer_area(plan.sum_bits) + model.adder_area(plan.sum_bits);
        Datapath {
            product: s.lanes as f64 * one,
            rest: Self::reduce(model, s.lanes, plan.square_bits, plan.accumulator_bits),
            squarers: 1,
            squarer_bits: plan.sum_bits,
        }
    }

    fn cpm(model: &AreaModel, plan: &BitWidthPlan, s: AreaShape) -> Self {
        let one = 4.0 * (model.squarer_area(plan.sum_bits) + model.adder_area(plan.sum_bits))
            + 2.0 * model.adder_area(plan.square_bits + 1);
        Datapath {
            product: s.lanes as f64 * one,
            rest: 2.0 * Self::reduce(model, s.lanes, plan.square_bits + 1, plan.accumulator_bits),
            squarers: 4,
            squarer_bits: plan.sum_bits,
        }
    }

    fn cpm3(model: &AreaModel, plan: &BitWidthPlan, s: AreaShape) -> Self {
        // Three squarers, each behind a two-adder three-operand pre-adder.
        let one = 3.0 * (model.squarer_area(plan.sum3_bits) + 2.0 * model.adder_area(plan.sum3_bits))
            + 2.0 * model.adder_area(plan.square3_bits + 1);
        Datapath {
            product: s.lanes as f64 * one,
            rest: 2.0 * Self::reduce(model, s.lanes, plan.square3_bits + 1, plan.accumulator_bits),
            squarers: 3,
            squarer_bits: plan.sum3_bits,
        }
    }
}

/// Units outside the PEs that only the square-based variants need.
fn shared_area(
    arch: Arch,
    variant: Variant,
    model: &AreaModel,
    plan: &BitWidthPlan,
    s: AreaShape,
) -> f64 {
    let n = plan.input_bits;
    let acc = model.adder_area(plan.accumulator_bits);
    // Per-sample term of the engines.
    let sample = match variant {
        Variant::Sq => model.squarer_area(n),
        Variant::Cpm => 2.0 * model.squarer_area(n) + model.adder_area(plan.square_bits),
        Variant::Cpm3 => {
            model.squarer_area(plan.sum_bits)
                + 2.0 * model.squarer_area(n)
                + model.adder_area(plan.sum_bits)
                + 2.0 * model.adder_area(plan.square_bits)
        }
        Variant::Mac | Variant::MacDirect => return 0.0,
    };
    let parts = if variant.is_complex() { 2.0 } else { 1.0 };
    match arch {
        Arch::PmAcc | Arch::TensorCore => 0.0,
        // One Sb adder per column at the bottom of the array.
        Arch::Systolic => s.pes as f64 / s.depth as f64 * acc,
        Arch::TransformEngine => sample,
        Arch::ConvEngine => sample + parts * acc,
    }
}
