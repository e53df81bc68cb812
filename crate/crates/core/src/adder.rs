//! Full-adder readout: the seven current ranges, sum/carry extraction and
//! the experimental input-order recovery from the `t_2` read spike.

use std::ops::BitOr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequencer::GateResult;

/// Which records feed the `has_one` and `carry` flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlagScope {
    /// `has_one` and `carry` from the input records and `t_1`;
    /// `has_zero` from the whole response window.
    #[default]
    InputPhase,
    /// Every flag from every record of the response window.
    Window,
}

/// Current boundaries of the full-adder decoder, in amperes.
///
/// Negative ranges are `(lo, hi]`, positive ranges `[lo, hi)`: each shared
/// endpoint belongs to the range of larger magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeTable {
    /// Lower edge of `has_one`; anything at or below is out of range.
    pub neg_floor: f64,
    /// `has_one` / `carry` boundary.
    pub neg_one_carry: f64,
    /// `carry` / `has_zero` boundary.
    pub neg_carry_zero: f64,
    /// Value 0 / value 1 boundary.
    pub pos_one: f64,
    /// Value 1 / value 2 boundary.
    pub pos_two: f64,
    /// Published top of value 2.
    pub pos_two_upper: f64,
    /// Published bottom of value 3.
    pub pos_three_lower: f64,
    /// Cut used for the value 2 / value 3 boundary, inside
    /// `[pos_two_upper, pos_three_lower]`.
    pub val3_boundary: f64,
    #[serde(default)]
    pub flag_scope: FlagScope,
}

impl Default for RangeTable {
    fn default() -> Self {
        Self {
            neg_floor: -20e-9,
            neg_one_carry: -17.5e-9,
            neg_carry_zero: -5e-9,
            pos_one: 5e-9,
            pos_two: 9e-9,
            pos_two_upper: 12.3e-9,
            pos_three_lower: 12.5e-9,
            val3_boundary: 12.4e-9,
            flag_scope: FlagScope::InputPhase,
        }
    }
}

impl RangeTable {
    pub fn validate(&self) -> Result<()> {
        let chain = [
            self.neg_floor,
            self.neg_one_carry,
            self.neg_carry_zero,
            0.0,
            self.pos_one,
            self.pos_two,
            self.pos_two_upper,
            self.pos_three_lower,
        ];
        if chain.iter().any(|x| !x.is_finite()) || chain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!(
                "range table boundaries not strictly ordered: {chain:?}"
            )));
        }
        if !(self.pos_two_upper..=self.pos_three_lower).contains(&self.val3_boundary) {
            return Err(Error::invalid(format!(
                "val3_boundary {} outside [{}, {}]",
                self.val3_boundary, self.pos_two_upper, self.pos_three_lower
            )));
        }
        Ok(())
    }

    /// Target interval for the maximum positive current of a given sum.
    pub fn positive_interval(&self, value: u8) -> (f64, Option<f64>) {
        match value {
            0 => (0.0, Some(self.pos_one)),
            1 => (self.pos_one, Some(self.pos_two)),
            2 => (self.pos_two, Some(self.pos_two_upper)),
            _ => (self.pos_three_lower, None),
        }
    }
}

/// Adder value 0..=3 encoded by the maximum positive current.
pub fn classify_positive(max_pos: f64, table: &RangeTable) -> u8 {
    if max_pos < table.pos_one {
        0
    } else if max_pos < table.pos_two {
        1
    } else if max_pos < table.val3_boundary {
        2
    } else {
        3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NegativeFlags {
    pub has_one: bool,
    pub carry: bool,
    pub has_zero: bool,
    /// A current at or below the `has_one` floor.
    pub out_of_range: bool,
}

impl BitOr for NegativeFlags {
    type Output = Self;

    fn bitor(self, rhs: Self) -> Self {
        Self {
            has_one: self.has_one | rhs.has_one,
            carry: self.carry | rhs.carry,
            has_zero: self.has_zero | rhs.has_zero,
            out_of_range: self.out_of_range | rhs.out_of_range,
        }
    }
}

/// Range membership of a single non-positive current.
pub fn classify_negative(current: f64, table: &RangeTable) -> NegativeFlags {
    let mut f = NegativeFlags::default();
    if current > 0.0 {
        return f;
    }
    if current > table.neg_carry_zero {
        f.has_zero = true;
    } else if current > table.neg_one_carry {
        f.carry = true;
    } else if current > table.neg_floor {
        f.has_one = true;
    } else {
        f.out_of_range = true;
    }
    f
}

/// Flags over the negative records of a gate run.
pub fn negative_flags(result: &GateResult, table: &RangeTable) -> NegativeFlags {
    let input_phase = result.input_phase();
    let mut flags = NegativeFlags::default();
    for idx in result.window.clone() {
        let i = result.waveform[idx].i_spike;
        if i >= 0.0 {
            continue;
        }
        let f = classify_negative(i, table);
        let in_scope = table.flag_scope == FlagScope::Window || input_phase.contains(&idx);
        flags = flags
            | NegativeFlags {
                has_one: f.has_one && in_scope,
                carry: f.carry && in_scope,
                has_zero: f.has_zero,
                out_of_range: f.out_of_range,
            };
    }
    flags
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdderOutput {
    pub value: u8,
    pub sum_bit: u8,
    pub carry_bit: u8,
    pub has_one: bool,
    pub carry_flag: bool,
    pub has_zero: bool,
    /// `carry_flag` agrees with `carry_bit`.
    pub consistent: bool,
    pub out_of_range: bool,
}

pub fn decode_full_adder(result: &GateResult, table: &RangeTable) -> AdderOutput {
    let value = classify_positive(result.max_pos, table);
    let flags = negative_flags(result, table);
    let carry_bit = value / 2;
    AdderOutput {
        value,
        sum_bit: value % 2,
        carry_bit,
        has_one: flags.has_one,
        carry_flag: flags.carry,
        has_zero: flags.has_zero,
        consistent: flags.carry == (carry_bit == 1),
        out_of_range: flags.out_of_range,
    }
}

/// Position of the minority bit among three inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderClass {
    PosA,
    PosB,
    PosC,
    Uniform,
    Undecidable,
}

impl OrderClass {
    /// Ground truth for a triple.
    pub fn of(triple: [bool; 3]) -> Self {
        let ones = triple.iter().filter(|&&b| b).count();
        let minority = match ones {
            0 | 3 => return OrderClass::Uniform,
            1 => true,
            _ => false,
        };
        match triple.iter().position(|&b| b == minority) {
            Some(0) => OrderClass::PosA,
            Some(1) => OrderClass::PosB,
            _ => OrderClass::PosC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderCell {
    /// Inclusive, amperes.
    pub lower: f64,
    /// Exclusive, amperes.
    pub upper: f64,
    pub class: OrderClass,
}

/// Partition of the `t_2` read-spike axis into order classes.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OrderCells {
    pub cells: Vec<OrderCell>,
}

impl OrderCells {
    /// Cuts at midpoints between neighbouring reference spikes; the outer
    /// cells extend half the smallest gap beyond the extreme samples.
    pub fn from_reference(samples: &[([bool; 3], f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("order recovery needs at least two reference runs"));
        }
        let mut sorted: Vec<(f64, OrderClass)> = samples.iter().map(|&(t, x)| (x, OrderClass::of(t))).collect();
        if sorted.iter().any(|(x, _)| !x.is_finite()) {
            return Err(Error::invalid("non-finite reference spike"));
        }
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let min_gap = sorted
            .windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| w[1].0 - w[0].0)
            .fold(f64::INFINITY, f64::min);
        if min_gap <= 0.0 {
            return Err(Error::invalid("reference spikes of different order classes coincide"));
        }
        let margin = if min_gap.is_finite() { min_gap / 2.0 } else { 0.0 };
        let mut cells = Vec::with_capacity(sorted.len());
        for (k, &(x, class)) in sorted.iter().enumerate() {
            let lower = if k == 0 {
                x - margin
            } else {
                0.5 * (sorted[k - 1].0 + x)
            };
            let upper = if k + 1 == sorted.len() {
                x + margin
            } else {
                0.5 * (x + sorted[k + 1].0)
            };
            match cells.last_mut() {
                Some(OrderCell { upper: u, class: c, .. }) if *c == class => *u = upper,
                _ => cells.push(OrderCell { lower, upper, class }),
            }
        }
        Ok(Self { cells })
    }
}

/// Experimental: maps a `t_2` spike to the position of the minority bit.
pub fn decode_input_order(t2_spike: f64, cells: &OrderCells) -> OrderClass {
    cells
        .cells
        .iter()
        .find(|c| c.lower <= t2_spike && t2_spike < c.upper)
        .map_or(OrderClass::Undecidable, |c| c.class)
}

/// Smallest distance between any two reference spikes.
pub fn min_pairwise_separation(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}
