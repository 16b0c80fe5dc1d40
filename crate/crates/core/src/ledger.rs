//! Operation counting for kernel runs.

use num_rational::Ratio;

/// Counters of the arithmetic a kernel run performed.
///
/// Kernels that stream one input sample per step (transforms and
/// convolutions) also bracket each sample with [`begin_step`] /
/// [`end_step`], which records the smallest and largest number of squarings
/// any single step needed.
///
/// [`begin_step`]: OpLedger::begin_step
/// [`end_step`]: OpLedger::end_step
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpLedger {
    pub squarings: u64,
    pub multiplications: u64,
    pub additions: u64,
    pub halvings: u64,
    pub steps: u64,
    pub step_squarings_min: Option<u64>,
    pub step_squarings_max: Option<u64>,
    step_start: Option<u64>,
}

impl OpLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn begin_step(&mut self) {
        debug_assert!(self.step_start.is_none(), "nested step");
        self.step_start = Some(self.squarings);
    }

    pub fn end_step(&mut self) {
        let start = self.step_start.take().expect("end_step without begin_step");
        let used = self.squarings - start;
        self.steps += 1;
        self.step_squarings_min = Some(self.step_squarings_min.map_or(used, |m| m.min(used)));
        self.step_squarings_max = Some(self.step_squarings_max.map_or(used, |m| m.max(used)));
    }

    /// Adds the counters of `other` (a sub-computation) to this ledger.
    pub fn absorb(&mut self, other: &OpLedger) {
        self.squarings += other.squarings;
        self.multiplications += other.multiplications;
        self.additions += other.additions;
        self.halvings += other.halvings;
    }

    /// `self.squarings / per`, exact. `None` when `per` is zero.
    pub fn squarings_per(&self, per: u64) -> Option<Ratio<u64>> {
        (per != 0).then(|| Ratio::new(self.squarings, per))
    }
}
