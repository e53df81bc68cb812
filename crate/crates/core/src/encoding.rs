//! Bit-to-voltage assignations and threshold decoding.

use serde::{Deserialize, Serialize};

use crate::device::VoltageSegment;
use crate::error::{Error, Result};

/// The four ways of assigning logical `1` and `0` to a voltage level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// `1 -> +M`, `0 -> +m`.
    Magnitude,
    /// `1 -> +M`, `0 -> -M`.
    Polarity,
    /// `1 -> +M`, `0 -> -m`.
    Mixed1,
    /// `1 -> -M`, `0 -> +m`.
    Mixed2,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::Magnitude,
        SchemeKind::Polarity,
        SchemeKind::Mixed1,
        SchemeKind::Mixed2,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogicScheme {
    pub kind: SchemeKind,
    /// High magnitude `M`, volts.
    pub m_high: f64,
    /// Low magnitude `m`, volts.
    pub m_low: f64,
}

impl LogicScheme {
    pub fn new(kind: SchemeKind, m_high: f64, m_low: f64) -> Result<Self> {
        let scheme = Self { kind, m_high, m_low };
        scheme.validate()?;
        Ok(scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_low.is_finite() && self.m_high.is_finite() && 0.0 < self.m_low && self.m_low < self.m_high) {
            return Err(Error::invalid(format!(
                "scheme magnitudes must satisfy 0 < m < M, got m={} M={}",
                self.m_low, self.m_high
            )));
        }
        Ok(())
    }

    pub fn encode_bit(&self, bit: bool) -> f64 {
        let (m_high, m_low) = (self.m_high, self.m_low);
        match (self.kind, bit) {
            (SchemeKind::Magnitude, true) => m_high,
            (SchemeKind::Magnitude, false) => m_low,
            (SchemeKind::Polarity, true) => m_high,
            (SchemeKind::Polarity, false) => -m_high,
            (SchemeKind::Mixed1, true) => m_high,
            (SchemeKind::Mixed1, false) => -m_low,
            (SchemeKind::Mixed2, true) => -m_high,
            (SchemeKind::Mixed2, false) => m_low,
        }
    }

    /// One segment per bit; with `inter_input_return` a baseline segment
    /// separates consecutive inputs. Nothing is appended after the last bit.
    pub fn encode_word(
        &self,
        bits: &[bool],
        step: f64,
        inter_input_return: bool,
        v_baseline: f64,
    ) -> Result<Vec<VoltageSegment>> {
        self.validate()?;
        if bits.is_empty() {
            return Err(Error::invalid("cannot encode an empty word"));
        }
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("clock step must be > 0, got {step}")));
        }
        let mut out = Vec::with_capacity(if inter_input_return {
            2 * bits.len() - 1
        } else {
            bits.len()
        });
        for (k, &bit) in bits.iter().enumerate() {
            if inter_input_return && k > 0 {
                out.push(VoltageSegment {
                    level: v_baseline,
                    duration: step,
                });
            }
            out.push(VoltageSegment {
                level: self.encode_bit(bit),
                duration: step,
            });
        }
        Ok(out)
    }
}

/// Which sign of current a threshold looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sense {
    /// `1` iff the extremum is above `+threshold`.
    PositiveExceeds,
    /// `1` iff the extremum is below `-threshold`.
    NegativeExceeds,
}

/// Record range of a gate waveform, anchored on the protocol layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ResponseWindow {
    /// Every record, inputs included.
    All,
    /// From the `t_1` response record to the end.
    FromResponse,
    /// The `t_1` response record alone.
    ResponseOnly,
    /// Explicit half-open record index range.
    Records { start: usize, end: usize },
}

impl ResponseWindow {
    /// Resolves to record indices, given the index of `t_1` and the record count.
    pub fn resolve(&self, t1_index: usize, len: usize) -> std::ops::Range<usize> {
        let r = match *self {
            ResponseWindow::All => 0..len,
            ResponseWindow::FromResponse => t1_index..len,
            ResponseWindow::ResponseOnly => t1_index..t1_index + 1,
            ResponseWindow::Records { start, end } => start..end,
        };
        r.start.min(len)..r.end.min(len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRule {
    /// Amperes, strictly positive.
    pub threshold: f64,
    pub sense: Sense,
    pub window: ResponseWindow,
}

impl ThresholdRule {
    pub fn new(threshold: f64, sense: Sense, window: ResponseWindow) -> Result<Self> {
        let rule = Self {
            threshold,
            sense,
            window,
        };
        rule.validate()?;
        Ok(rule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::invalid(format!("threshold must be > 0, got {}", self.threshold)));
        }
        Ok(())
    }
}

/// Strict comparison: an extremum equal to the threshold decodes to `0`.
pub fn decode_threshold(extremum: f64, rule: &ThresholdRule) -> bool {
    match rule.sense {
        Sense::PositiveExceeds => extremum > rule.threshold,
        Sense::NegativeExceeds => extremum < -rule.threshold,
    }
}
