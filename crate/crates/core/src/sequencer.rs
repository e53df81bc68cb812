//! Timed gate protocols: inputs on a clock grid, a response step at `t_1`,
//! optional read pulses, and decoding of the resulting spike extrema.

use std::collections::BTreeMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::adder::{decode_full_adder, RangeTable};
use crate::device::{run_protocol, settle, DeviceParams, DeviceState, SpikeRecord, VoltageSegment};
use crate::encoding::{decode_threshold, LogicScheme, ResponseWindow, SchemeKind, Sense, ThresholdRule};
use crate::error::{Error, Result};

/// Number of clock steps a device rests between operations.
pub const ZERO_WAIT_STEPS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockConfig {
    /// Protocol grid spacing, s.
    pub step: f64,
    /// Rest time at baseline after an operation, s.
    pub zero_wait: f64,
    /// Insert a baseline step between consecutive inputs.
    #[serde(default)]
    pub inter_input_return: bool,
}

impl ClockConfig {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            zero_wait: ZERO_WAIT_STEPS * step,
            inter_input_return: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::invalid(format!("clock step must be > 0, got {}", self.step)));
        }
        if !(self.zero_wait.is_finite() && self.zero_wait >= 0.0) {
            return Err(Error::invalid(format!(
                "zero_wait must be >= 0, got {}",
                self.zero_wait
            )));
        }
        Ok(())
    }
}

impl Default for ClockConfig {
    fn default() -> Self {
        Self::with_step(1.0)
    }
}

/// Probe voltage applied `offset` steps after the last input (`t_1` is offset 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadPulse {
    pub offset: usize,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum DecodeRule {
    /// Output `out` from a threshold on the window extremum.
    Threshold(ThresholdRule),
    /// Output `out` is 1 iff the largest-magnitude window spike is positive.
    InvertedSign,
    /// Full-adder range table.
    RangeTable(RangeTable),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub name: String,
    pub scheme: LogicScheme,
    pub arity: usize,
    #[serde(default)]
    pub read_pulses: Vec<ReadPulse>,
    /// Clock steps recorded after the last input, `t_1` included.
    pub response_steps: usize,
    pub response_window: ResponseWindow,
    pub decode: DecodeRule,
    pub params: DeviceParams,
}

impl GateSpec {
    pub fn validate(&self) -> Result<()> {
        self.scheme.validate()?;
        self.params.validate()?;
        if self.arity == 0 {
            return Err(Error::invalid(format!("gate {}: arity must be >= 1", self.name)));
        }
        if self.response_steps == 0 {
            return Err(Error::invalid(format!(
                "gate {}: response_steps must be >= 1",
                self.name
            )));
        }
        let mut prev = 1;
        for pulse in &self.read_pulses {
            if pulse.offset <= prev {
                return Err(Error::invalid(format!(
                    "gate {}: read pulse offsets must start at 2 and leave a return step between pulses",
                    self.name
                )));
            }
            if pulse.offset >= self.response_steps {
                return Err(Error::invalid(format!(
                    "gate {}: read pulse at offset {} has no return step inside {} response steps",
                    self.name, pulse.offset, self.response_steps
                )));
            }
            if !pulse.level.is_finite() {
                return Err(Error::invalid(format!("gate {}: read level must be finite", self.name)));
            }
            prev = pulse.offset + 1;
        }
        match &self.decode {
            DecodeRule::Threshold(rule) => rule.validate(),
            DecodeRule::InvertedSign => Ok(()),
            DecodeRule::RangeTable(table) => table.validate(),
        }
    }
}

/// Outcome of one gate run from the null state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateResult {
    pub gate: String,
    pub inputs: Vec<bool>,
    pub waveform: Vec<SpikeRecord>,
    pub final_state: DeviceState,
    /// Largest positive spike in the window, or 0.
    pub max_pos: f64,
    /// Most negative spike in the window, or 0.
    pub min_neg: f64,
    pub window: Range<usize>,
    pub t1_index: usize,
    pub decoded: BTreeMap<String, u32>,
}

impl GateResult {
    /// Input records plus the `t_1` response.
    pub fn input_phase(&self) -> Range<usize> {
        0..self.t1_index + 1
    }

    /// Spike at `t_1 + k` steps.
    pub fn response_spike(&self, k: usize) -> Option<f64> {
        self.waveform.get(self.t1_index + k).map(|r| r.i_spike)
    }
}

fn check_inputs(gate: &GateSpec, inputs: &[bool]) -> Result<()> {
    if inputs.len() != gate.arity {
        return Err(Error::invalid(format!(
            "gate {} takes {} inputs, got {}",
            gate.name,
            gate.arity,
            inputs.len()
        )));
    }
    Ok(())
}

/// Segments of one gate operation; the second value is the `t_1` record index.
pub fn build_protocol_indexed(
    gate: &GateSpec,
    inputs: &[bool],
    clock: &ClockConfig,
) -> Result<(Vec<VoltageSegment>, usize)> {
    gate.validate()?;
    clock.validate()?;
    check_inputs(gate, inputs)?;
    let baseline = gate.params.v_baseline;
    let mut segments = gate
        .scheme
        .encode_word(inputs, clock.step, clock.inter_input_return, baseline)?;
    let t1_index = segments.len();
    for offset in 1..=gate.response_steps {
        let level = gate
            .read_pulses
            .iter()
            .find(|p| p.offset == offset)
            .map_or(baseline, |p| p.level);
        segments.push(VoltageSegment {
            level,
            duration: clock.step,
        });
    }
    Ok((segments, t1_index))
}

pub fn build_protocol(gate: &GateSpec, inputs: &[bool], clock: &ClockConfig) -> Result<Vec<VoltageSegment>> {
    build_protocol_indexed(gate, inputs, clock).map(|(segments, _)| segments)
}

pub fn run_gate(gate: &GateSpec, inputs: &[bool], clock: &ClockConfig) -> Result<GateResult> {
    let (segments, t1_index) = build_protocol_indexed(gate, inputs, clock)?;
    let (waveform, final_state) = run_protocol(&gate.params, &segments, None)?;
    let window = gate.response_window.resolve(t1_index, waveform.len());
    let spikes = || waveform[window.clone()].iter().map(|r| r.i_spike);
    let max_pos = spikes().fold(0.0, f64::max);
    let min_neg = spikes().fold(0.0, f64::min);

    let mut result = GateResult {
        gate: gate.name.clone(),
        inputs: inputs.to_vec(),
        waveform,
        final_state,
        max_pos,
        min_neg,
        window,
        t1_index,
        decoded: BTreeMap::new(),
    };
    result.decoded = decode(&gate.decode, &result);
    Ok(result)
}

fn decode(rule: &DecodeRule, result: &GateResult) -> BTreeMap<String, u32> {
    let mut out = BTreeMap::new();
    match rule {
        DecodeRule::Threshold(rule) => {
            let extremum = match rule.sense {
                Sense::PositiveExceeds => result.max_pos,
                Sense::NegativeExceeds => result.min_neg,
            };
            out.insert("out".to_string(), decode_threshold(extremum, rule) as u32);
        }
        DecodeRule::InvertedSign => {
            let dominant = result.waveform[result.window.clone()]
                .iter()
                .map(|r| r.i_spike)
                .fold(0.0f64, |acc, i| if i.abs() > acc.abs() { i } else { acc });
            out.insert("out".to_string(), (dominant > 0.0) as u32);
        }
        DecodeRule::RangeTable(table) => {
            let adder = decode_full_adder(result, table);
            out.insert("value".to_string(), adder.value.into());
            out.insert("sum".to_string(), adder.sum_bit.into());
            out.insert("carry".to_string(), adder.carry_bit.into());
            out.insert("has_one".to_string(), adder.has_one as u32);
            out.insert("carry_flag".to_string(), adder.carry_flag as u32);
            out.insert("has_zero".to_string(), adder.has_zero as u32);
            out.insert("consistent".to_string(), adder.consistent as u32);
        }
    }
    out
}

/// Every input combination in lexicographic order (first input most
/// significant).
pub fn all_inputs(arity: usize) -> Vec<Vec<bool>> {
    (0..1usize << arity)
        .map(|n| (0..arity).map(|k| (n >> (arity - 1 - k)) & 1 == 1).collect())
        .collect()
}

pub fn truth_table(gate: &GateSpec, clock: &ClockConfig) -> Result<Vec<GateResult>> {
    if gate.arity > 16 {
        return Err(Error::invalid(format!(
            "truth table of arity {} is too large",
            gate.arity
        )));
    }
    all_inputs(gate.arity)
        .iter()
        .map(|inputs| run_gate(gate, inputs, clock))
        .collect()
}

/// Inclusive-OR readout from the negative part of an AND-style run.
pub fn or_readout(result: &GateResult, rule: &ThresholdRule) -> Result<bool> {
    if rule.sense != Sense::NegativeExceeds {
        return Err(Error::invalid("OR readout needs a negative-exceeds threshold"));
    }
    rule.validate()?;
    Ok(decode_threshold(result.min_neg, rule))
}

/// Device state after the caller's zeroing rest.
pub fn zeroed_after(result: &GateResult, params: &DeviceParams, clock: &ClockConfig) -> Result<DeviceState> {
    settle(&result.final_state, params, clock.zero_wait)
}

pub const GATE_NAMES: [&str; 4] = ["not", "and", "or-readout", "full-adder"];

/// Threshold used by the AND gate and its OR readout, amperes.
pub const AND_THRESHOLD: f64 = 0.55e-6;
/// Full-adder read voltage.
pub const ADDER_READ_LEVEL: f64 = -0.15;

pub fn and_rule() -> ThresholdRule {
    ThresholdRule {
        threshold: AND_THRESHOLD,
        sense: Sense::PositiveExceeds,
        window: ResponseWindow::All,
    }
}

pub fn or_rule() -> ThresholdRule {
    ThresholdRule {
        sense: Sense::NegativeExceeds,
        ..and_rule()
    }
}

/// Built-in gate layouts; `params` supplies the device profile.
pub fn builtin_gate(name: &str, params: DeviceParams) -> Result<GateSpec> {
    let mixed2 = LogicScheme {
        kind: SchemeKind::Mixed2,
        m_high: 0.5,
        m_low: 0.001,
    };
    let gate = match name {
        "not" => GateSpec {
            name: name.into(),
            scheme: LogicScheme {
                kind: SchemeKind::Polarity,
                m_high: 0.5,
                m_low: 0.05,
            },
            arity: 1,
            read_pulses: vec![],
            response_steps: 1,
            response_window: ResponseWindow::ResponseOnly,
            decode: DecodeRule::InvertedSign,
            params,
        },
        "and" | "or-readout" => GateSpec {
            name: name.into(),
            scheme: mixed2,
            arity: 2,
            read_pulses: vec![],
            response_steps: 4,
            response_window: ResponseWindow::All,
            decode: DecodeRule::Threshold(if name == "and" { and_rule() } else { or_rule() }),
            params,
        },
        "full-adder" => GateSpec {
            name: name.into(),
            scheme: mixed2,
            arity: 3,
            read_pulses: vec![ReadPulse {
                offset: 2,
                level: ADDER_READ_LEVEL,
            }],
            response_steps: 4,
            response_window: ResponseWindow::All,
            decode: DecodeRule::RangeTable(RangeTable::default()),
            params,
        },
        other => {
            return Err(Error::config(format!(
                "unknown gate {other:?}; built-in gates are {}",
                GATE_NAMES.join(", ")
            )))
        }
    };
    Ok(gate)
}

/// Profile key used by a built-in gate (the OR readout shares the AND device).
pub fn profile_key(gate_name: &str) -> &str {
    match gate_name {
        "or-readout" => "and",
        other => other,
    }
}
