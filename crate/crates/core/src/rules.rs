//! Property suite for the device's four physical rules, plus the sign
//! rule on every built-in gate protocol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::device::{run_protocol, DeviceParams, SpikeRecord, VoltageSegment};
use crate::encoding::{LogicScheme, SchemeKind};
use crate::error::Result;
use crate::profiles::ProfileFamily;
use crate::sequencer::{all_inputs, build_protocol, GATE_NAMES};

/// Levels probed by the bounceback and hold grids, volts.
pub const LEVEL_GRID: [f64; 6] = [-1.0, -0.5, -0.05, 0.05, 0.5, 1.0];
/// Hold times probed by the bounceback grid, seconds.
pub const HOLD_GRID: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_DRAWS: usize = 100;
/// Pulses in the diminishing-returns train.
pub const TRAIN_PULSES: usize = 5;

const MAX_LISTED_FAILURES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleCheck {
    pub name: String,
    pub cases: usize,
    pub failed: usize,
    /// The first few failing cases.
    pub failures: Vec<String>,
}

impl RuleCheck {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failed += 1;
            if self.failures.len() < MAX_LISTED_FAILURES {
                self.failures.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesReport {
    pub rng_seed: u64,
    pub draws: usize,
    pub checks: Vec<RuleCheck>,
}

impl RulesReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(RuleCheck::passed)
    }

    pub fn check(&self, name: &str) -> Option<&RuleCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp()
}

/// Random valid parameters around the seed. Fatigue is kept within the
/// range where holding twice as long cannot double the bounceback.
pub fn random_params(rng: &mut ChaCha8Rng) -> DeviceParams {
    let seed = DeviceParams::seed();
    DeviceParams {
        g_trans: seed.g_trans * log_uniform(rng, 0.5, 2.0),
        r_disch: seed.r_disch * log_uniform(rng, 0.5, 2.0),
        c_store: seed.c_store * log_uniform(rng, 0.5, 2.0),
        tau_c: seed.tau_c * log_uniform(rng, 0.5, 2.0),
        tau_d: log_uniform(rng, 2.0, 10.0),
        lambda_fatigue: log_uniform(rng, 1e6, 1e7),
        ..seed
    }
}

fn spikes(params: &DeviceParams, segments: &[VoltageSegment]) -> Result<Vec<f64>> {
    let (records, _) = run_protocol(params, segments, None)?;
    Ok(records.iter().map(|r| r.i_spike).collect())
}

fn seg(level: f64, duration: f64) -> VoltageSegment {
    VoltageSegment { level, duration }
}

/// Forward and return spikes of `[(v, hold), (baseline, 1 s)]` from null.
pub fn forward_and_return(params: &DeviceParams, v: f64, hold: f64) -> Result<(f64, f64)> {
    let s = spikes(params, &[seg(v, hold), seg(params.v_baseline, 1.0)])?;
    Ok((s[0], s[1]))
}

/// `|return| < |forward|`, with the return of opposite sign.
pub fn check_bounceback(draws: &[DeviceParams]) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("bounceback");
    for (k, p) in draws.iter().enumerate() {
        for v in LEVEL_GRID {
            for h in HOLD_GRID {
                let (fwd, ret) = forward_and_return(p, v, h)?;
                let ok = ret.abs() < fwd.abs() && ret * fwd < 0.0;
                check.record(ok, || format!("draw {k} V={v} h={h}: forward {fwd:e}, return {ret:e}"));
            }
        }
    }
    Ok(check)
}

/// Holding twice as long gives a larger, but not doubled, return spike.
pub fn check_hold_monotonicity(draws: &[DeviceParams]) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("hold-monotonicity");
    for (k, p) in draws.iter().enumerate() {
        for v in LEVEL_GRID {
            for pair in HOLD_GRID.windows(2) {
                let (short, long) = (pair[0], pair[1]);
                let r1 = forward_and_return(p, v, short)?.1.abs();
                let r2 = forward_and_return(p, v, long)?.1.abs();
                check.record(r2 > r1 && r2 < 2.0 * r1, || {
                    format!("draw {k} V={v} h={short}/{long}: returns {r1:e} / {r2:e}")
                });
            }
        }
    }
    Ok(check)
}

/// Forward-spike magnitudes of a repeated `[(v, 1 s), (baseline, 1 s)]` train.
pub fn train_forward_spikes(params: &DeviceParams, v: f64, pulses: usize) -> Result<Vec<f64>> {
    let segments: Vec<_> = (0..pulses)
        .flat_map(|_| [seg(v, 1.0), seg(params.v_baseline, 1.0)])
        .collect();
    let s = spikes(params, &segments)?;
    Ok(s.iter().step_by(2).map(|i| i.abs()).collect())
}

pub fn check_diminishing_returns(params: &DeviceParams) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("diminishing-returns");
    for v in LEVEL_GRID {
        let f = train_forward_spikes(params, v, TRAIN_PULSES)?;
        let ok = f.windows(2).all(|w| w[1] < w[0]);
        check.record(ok, || format!("V={v}: forward magnitudes {f:?}"));
    }
    Ok(check)
}

/// Magnitudes of the first and second `+v -> -v` transitions of
/// `[(+v, 1 s), (-v, 1 s)] x 2`.
pub fn alternation_spikes(params: &DeviceParams, v: f64) -> Result<(f64, f64)> {
    let s = spikes(params, &[seg(v, 1.0), seg(-v, 1.0), seg(v, 1.0), seg(-v, 1.0)])?;
    Ok((s[1].abs(), s[3].abs()))
}

pub fn check_alternation_decay(params: &DeviceParams) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("alternation-decay");
    for v in LEVEL_GRID.into_iter().filter(|&v| v > 0.0) {
        let (first, second) = alternation_spikes(params, v)?;
        check.record(second < first, || {
            format!("V={v}: alternations {first:e} then {second:e}")
        });
    }
    Ok(check)
}

/// `t_1` return spike of `[a, b, baseline]`, one step each.
pub fn ordered_return(params: &DeviceParams, a: f64, b: f64) -> Result<f64> {
    Ok(spikes(params, &[seg(a, 1.0), seg(b, 1.0), seg(params.v_baseline, 1.0)])?[2])
}

/// Swapping two distinct inputs changes the `t_1` response.
pub fn check_directionality(params: &DeviceParams) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("directionality");
    let mut pairs = Vec::new();
    for kind in SchemeKind::ALL {
        let scheme = LogicScheme::new(kind, 0.5, 0.05)?;
        pairs.push((
            format!("{kind:?} bits 1,0"),
            scheme.encode_bit(true),
            scheme.encode_bit(false),
        ));
    }
    for (k, &a) in LEVEL_GRID.iter().enumerate() {
        for &b in &LEVEL_GRID[k + 1..] {
            pairs.push((format!("levels {a},{b}"), a, b));
        }
    }
    for (label, a, b) in pairs {
        let ab = ordered_return(params, a, b)?;
        let ba = ordered_return(params, b, a)?;
        check.record(ab != ba, || format!("{label}: both orders return {ab:e}"));
    }
    Ok(check)
}

/// Whether the charge term is too small to overturn the transition term.
pub fn sign_rule_applies(params: &DeviceParams, record: &SpikeRecord) -> bool {
    let v_prev = record.level - record.delta_v;
    (params.g_trans + params.r_disch * params.c_store) * record.delta_v.abs()
        > params.r_disch * (params.c_store * v_prev - record.q_before).abs()
}

/// The conditional sign rule on every record of every built-in gate run.
pub fn check_sign_rule(families: &[(&str, &ProfileFamily)]) -> Result<RuleCheck> {
    let mut check = RuleCheck::new("sign-rule");
    for (family_name, family) in families {
        for gate_name in GATE_NAMES {
            let (gate, clock) = family.gate(gate_name, 1.0)?;
            for inputs in all_inputs(gate.arity) {
                let segments = build_protocol(&gate, &inputs, &clock)?;
                let (records, _) = run_protocol(&gate.params, &segments, None)?;
                for (idx, r) in records.iter().enumerate() {
                    if !sign_rule_applies(&gate.params, r) {
                        continue;
                    }
                    let ok = r.i_spike.signum() == r.delta_v.signum();
                    check.record(ok, || {
                        format!(
                            "{family_name}/{gate_name} {inputs:?} record {idx}: dV {} i {:e}",
                            r.delta_v, r.i_spike
                        )
                    });
                }
            }
        }
    }
    Ok(check)
}

/// Runs the whole suite; random draws come from `rng_seed`.
pub fn run_rules(rng_seed: u64, draws: usize, families: &[(&str, &ProfileFamily)]) -> Result<RulesReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let sample: Vec<DeviceParams> = (0..draws).map(|_| random_params(&mut rng)).collect();
    let seed = DeviceParams::seed();
    let checks = vec![
        check_bounceback(&sample)?,
        check_hold_monotonicity(&sample)?,
        check_diminishing_returns(&seed)?,
        check_alternation_decay(&seed)?,
        check_directionality(&seed)?,
        check_sign_rule(families)?,
    ];
    Ok(RulesReport {
        rng_seed,
        draws,
        checks,
    })
}
