//! Named device profiles per gate, including the shipped calibrated set.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adder::OrderCells;
use crate::device::DeviceParams;
use crate::error::{Error, Result};
use crate::sequencer::{builtin_gate, profile_key, ClockConfig, GateSpec};

/// Profile file compiled into the binary.
pub const SHIPPED_PROFILES: &str = include_str!("../data/profiles.json");

pub const SEED_FAMILY: &str = "seed";
pub const CALIBRATED_FAMILY: &str = "calibrated";

/// Gain factor between the nA-scale seed and the uA-scale AND device.
pub const AND_SEED_GAIN: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub params: DeviceParams,
    #[serde(default)]
    pub inter_input_return: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFamily {
    pub gates: BTreeMap<String, ProfileEntry>,
    /// Order-recovery cells for the full adder, from the reference model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_cells: Option<OrderCells>,
}

impl ProfileFamily {
    pub fn entry(&self, gate_name: &str) -> Result<&ProfileEntry> {
        let key = profile_key(gate_name);
        self.gates
            .get(key)
            .ok_or_else(|| Error::config(format!("profile has no entry for gate {key:?}")))
    }

    /// Built-in gate with this family's device and clock option.
    pub fn gate(&self, gate_name: &str, step: f64) -> Result<(GateSpec, ClockConfig)> {
        let entry = self.entry(gate_name)?;
        let gate = builtin_gate(gate_name, entry.params)?;
        let clock = ClockConfig {
            inter_input_return: entry.inter_input_return,
            ..ClockConfig::with_step(step)
        };
        Ok((gate, clock))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBook {
    pub version: u32,
    pub families: BTreeMap<String, ProfileFamily>,
}

impl ProfileBook {
    pub fn shipped() -> Self {
        serde_json::from_str(SHIPPED_PROFILES).expect("shipped profile file is valid")
    }

    pub fn family(&self, name: &str) -> Result<&ProfileFamily> {
        self.families.get(name).ok_or_else(|| {
            Error::config(format!(
                "unknown profile {name:?}; available: {}",
                self.families.keys().cloned().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

/// Uncalibrated starting profiles.
pub fn seed_family() -> ProfileFamily {
    let seed = DeviceParams::seed();
    let and_seed = DeviceParams {
        g_trans: seed.g_trans * AND_SEED_GAIN,
        r_disch: seed.r_disch * AND_SEED_GAIN,
        lambda_fatigue: seed.lambda_fatigue / AND_SEED_GAIN,
        ..seed
    };
    let entry = |params| ProfileEntry {
        params,
        inter_input_return: false,
    };
    ProfileFamily {
        gates: BTreeMap::from([
            ("and".to_string(), entry(and_seed)),
            ("full-adder".to_string(), entry(seed)),
            ("not".to_string(), entry(seed)),
        ]),
        order_cells: None,
    }
}
