use std::fmt;

use crate::error::{Error, Result};
use crate::numeric::{render_complex, BitWidthPlan, Cx, Element, WidthClass};

/// How much of a run is written to [`SimTrace::events`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TraceLevel {
    /// Outputs only.
    Final,
    /// Outputs plus architectural registers.
    Registers,
    /// Everything, including combinational nets.
    Full,
}

/// The fixed trace vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Signal {
    /// Stationary operand register.
    Rega,
    /// Accumulator / partial-sum register.
    Acc,
    MuxSel,
    /// Reset value loaded into an accumulator.
    Init,
    /// Output port.
    O,
    /// Stationary or coefficient operand at a PE input.
    A,
    /// Streaming operand at a PE input.
    B,
    /// Pre-adder output.
    Sum,
    /// Squarer (or multiplier) output.
    Sq,
    Sa,
    Sb,
    /// Sample entering an engine.
    X,
    /// Shared per-sample term.
    Xsq,
}

impl Signal {
    pub fn name(self) -> &'static str {
        match self {
            Signal::Rega => "REGA",
            Signal::Acc => "ACC",
            Signal::MuxSel => "MUXSEL",
            Signal::Init => "INIT",
            Signal::O => "O",
            Signal::A => "A",
            Signal::B => "B",
            Signal::Sum => "SUM",
            Signal::Sq => "SQ",
            Signal::Sa => "SA",
            Signal::Sb => "SB",
            Signal::X => "X",
            Signal::Xsq => "XSQ",
        }
    }

    /// Lowest trace level at which the signal is recorded.
    pub fn level(self) -> TraceLevel {
        match self {
            Signal::O => TraceLevel::Final,
            Signal::Rega | Signal::Acc | Signal::MuxSel | Signal::Init => TraceLevel::Registers,
            _ => TraceLevel::Full,
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub cycle: u64,
    pub unit: String,
    pub signal: Signal,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WidthViolation {
    pub cycle: u64,
    pub unit: String,
    pub signal: Signal,
    pub bits: u64,
    pub limit: u32,
}

/// One architectural register at the end of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterState {
    pub unit: String,
    pub signal: Signal,
    pub value: String,
}

/// Result of a simulator run. Immutable once returned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimTrace {
    pub events: Vec<TraceEvent>,
    pub final_state: Vec<RegisterState>,
    pub cycles_total: u64,
    pub width_violations: Vec<WidthViolation>,
}

impl SimTrace {
    /// CSV with header `cycle,unit,signal,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle,unit,signal,value\n");
        for e in &self.events {
            out.push_str(&format!("{},{},{},{}\n", e.cycle, e.unit, e.signal, e.value));
        }
        out
    }

    pub(crate) fn offset(mut self, cycles: u64, prefix: &str) -> Self {
        for e in &mut self.events {
            e.cycle += cycles;
            e.unit = format!("{prefix}/{}", e.unit);
        }
        for v in &mut self.width_violations {
            v.cycle += cycles;
            v.unit = format!("{prefix}/{}", v.unit);
        }
        for r in &mut self.final_state {
            r.unit = format!("{prefix}/{}", r.unit);
        }
        self
    }

    /// Concatenates runs that execute one after another.
    pub(crate) fn sequence(parts: Vec<(String, SimTrace)>) -> SimTrace {
        let mut all = SimTrace {
            events: Vec::new(),
            final_state: Vec::new(),
            cycles_total: 0,
            width_violations: Vec::new(),
        };
        for (prefix, t) in parts {
            let cycles = t.cycles_total;
            let t = t.offset(all.cycles_total, &prefix);
            all.events.extend(t.events);
            all.final_state.extend(t.final_state);
            all.width_violations.extend(t.width_violations);
            all.cycles_total += cycles;
        }
        all
    }
}

/// Collects events and width checks while a simulator steps.
pub(crate) struct Recorder {
    level: TraceLevel,
    plan: Option<BitWidthPlan>,
    pub cycle: u64,
    events: Vec<TraceEvent>,
    violations: Vec<WidthViolation>,
    final_state: Vec<RegisterState>,
}

impl Recorder {
    pub fn new(level: TraceLevel, plan: Option<BitWidthPlan>) -> Self {
        Recorder {
            level,
            plan,
            cycle: 0,
            events: Vec::new(),
            violations: Vec::new(),
            final_state: Vec::new(),
        }
    }

    fn check(&mut self, unit: &str, signal: Signal, bits: Option<u64>, class: WidthClass) {
        if let (Some(plan), Some(bits)) = (self.plan, bits) {
            let limit = plan.width(class);
            if bits > u64::from(limit) {
                self.violations.push(WidthViolation {
                    cycle: self.cycle,
                    unit: unit.to_string(),
                    signal,
                    bits,
                    limit,
                });
            }
        }
    }

    fn emit(&mut self, unit: &str, signal: Signal, value: impl FnOnce() -> String) {
        if signal.level() <= self.level {
            self.events.push(TraceEvent {
                cycle: self.cycle,
                unit: unit.to_string(),
                signal,
                value: value(),
            });
        }
    }

    pub fn real<T: Element>(&mut self, unit: &str, signal: Signal, v: &T, class: WidthClass) {
        self.check(unit, signal, v.signed_bits(), class);
        self.emit(unit, signal, || v.render());
    }

    pub fn cx<T: Element>(&mut self, unit: &str, signal: Signal, v: &Cx<T>, class: WidthClass) {
        self.check(unit, signal, v.re.signed_bits(), class);
        self.check(unit, signal, v.im.signed_bits(), class);
        self.emit(unit, signal, || render_complex(v));
    }

    /// A value-less control event, e.g. a mux select.
    pub fn control(&mut self, unit: &str, signal: Signal, value: &str) {
        self.emit(unit, signal, || value.to_string());
    }

    pub fn keep(&mut self, unit: &str, signal: Signal, value: String) {
        self.final_state.push(RegisterState {
            unit: unit.to_string(),
            signal,
            value,
        });
    }

    pub fn finish(self, cycles_total: u64, strict: bool) -> Result<SimTrace> {
        if strict {
            if let Some(v) = self.violations.first() {
                return Err(Error::WidthViolation {
                    cycle: v.cycle,
                    unit: v.unit.clone(),
                    signal: v.signal.to_string(),
                    bits: v.bits,
                    limit: v.limit,
                });
            }
        }
        Ok(SimTrace {
            events: self.events,
            final_state: self.final_state,
            cycles_total,
            width_violations: self.violations,
        })
    }
}
