//! Event-based phenomenological memristor.
//!
//! The device emits one instantaneous current spike each time a new voltage
//! level is applied, then relaxes in closed form while the level is held.
//! Two internal variables carry the short-term memory:
//!
//! * `q`, a signed stored-charge surrogate that charges toward
//!   `c_store * V` with time constant `tau_c` and leaks with `tau_q`;
//! * `d`, a non-negative fatigue that grows with every spike and divides
//!   the gain of later spikes, decaying with `tau_d`.
//!
//! Transition spike:
//!
//! ```text
//! i = [ g_trans * (V - v_prev) + r_disch * (c_store * V - q) ] / (1 + d)
//! d <- d + lambda_fatigue * |i|
//! ```
//!
//! Relaxation at level `V` for `dt`:
//!
//! ```text
//! tau_eff = 1 / (1/tau_c + 1/tau_q)
//! q_eq    = c_store * V * tau_eff / tau_c
//! q(dt)   = q_eq + (q0 - q_eq) * exp(-dt / tau_eff)
//! d(dt)   = d0 * exp(-dt / tau_d)
//! ```
//!
//! No numerical integration is involved anywhere, so waveforms are
//! bit-identical across runs and platforms with the same libm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default tolerance for [`DeviceState::is_null`].
pub const NULL_EPS: f64 = 1e-9;

/// Coefficients of the spike-response model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Transition gain, A/V.
    pub g_trans: f64,
    /// Discharge gain, A per charge-unit.
    pub r_disch: f64,
    /// Storage coefficient, charge-units per volt.
    pub c_store: f64,
    /// Charge retention time, s.
    pub tau_q: f64,
    /// Charging time, s.
    pub tau_c: f64,
    /// Fatigue retention time, s.
    pub tau_d: f64,
    /// Fatigue increment per ampere of spike magnitude.
    pub lambda_fatigue: f64,
    /// Rest voltage, V.
    #[serde(default)]
    pub v_baseline: f64,
}

impl DeviceParams {
    /// Documented starting point: a 0 -> -0.5 V step from the null state
    /// produces a -18 nA spike.
    pub const fn seed() -> Self {
        Self {
            g_trans: 2.4e-8,
            r_disch: 1.2e-8,
            c_store: 1.0,
            tau_q: 3.5,
            tau_c: 1.0,
            tau_d: 5.0,
            lambda_fatigue: 1e7,
            v_baseline: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("g_trans", self.g_trans),
            ("r_disch", self.r_disch),
            ("c_store", self.c_store),
            ("tau_q", self.tau_q),
            ("tau_c", self.tau_c),
            ("tau_d", self.tau_d),
            ("lambda_fatigue", self.lambda_fatigue),
            ("v_baseline", self.v_baseline),
        ];
        for (name, value) in all {
            if !value.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {value}")));
            }
        }
        for (name, value) in [("tau_q", self.tau_q), ("tau_c", self.tau_c), ("tau_d", self.tau_d)] {
            if value <= 0.0 {
                return Err(Error::invalid(format!("{name} must be > 0, got {value}")));
            }
        }
        for (name, value) in [
            ("g_trans", self.g_trans),
            ("r_disch", self.r_disch),
            ("c_store", self.c_store),
            ("lambda_fatigue", self.lambda_fatigue),
        ] {
            if value < 0.0 {
                return Err(Error::invalid(format!("{name} must be >= 0, got {value}")));
            }
        }
        Ok(())
    }

    /// Combined time constant of the charge variable.
    pub fn tau_eff(&self) -> f64 {
        1.0 / (1.0 / self.tau_c + 1.0 / self.tau_q)
    }

    /// Charge the device settles to when held at `level`.
    pub fn q_equilibrium(&self, level: f64) -> f64 {
        self.c_store * level * self.tau_eff() / self.tau_c
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::seed()
    }
}

/// Evolving short-term memory of one device.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceState {
    /// Last applied level, V.
    pub v_prev: f64,
    /// Stored-charge surrogate, charge-units.
    pub q: f64,
    /// Fatigue, dimensionless, never negative.
    pub d: f64,
    /// Simulation clock, s.
    pub t_now: f64,
}

impl DeviceState {
    /// Fully zeroed device resting at the baseline.
    pub fn null(params: &DeviceParams) -> Self {
        Self {
            v_prev: params.v_baseline,
            q: 0.0,
            d: 0.0,
            t_now: 0.0,
        }
    }

    pub fn is_null(&self, params: &DeviceParams, eps: f64) -> bool {
        self.v_prev == params.v_baseline && self.q.abs() <= eps && self.d <= eps
    }

    /// Largest remaining memory component, `max(|q|, d)`.
    pub fn residual_memory(&self) -> f64 {
        self.q.abs().max(self.d)
    }

    fn check_finite(&self) -> Result<()> {
        if [self.v_prev, self.q, self.d, self.t_now].iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::invalid(format!("non-finite device state {self:?}")))
        }
    }
}

/// One protocol step: hold `level` for `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoltageSegment {
    pub level: f64,
    pub duration: f64,
}

impl VoltageSegment {
    pub fn new(level: f64, duration: f64) -> Result<Self> {
        let seg = Self { level, duration };
        seg.validate()?;
        Ok(seg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.level.is_finite() {
            return Err(Error::invalid(format!(
                "segment level must be finite, got {}",
                self.level
            )));
        }
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(Error::invalid(format!(
                "segment duration must be finite and > 0, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}

/// Current spike observed at the start of a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeRecord {
    /// Time of the transition, s.
    pub t: f64,
    /// Level applied by the segment, V.
    pub level: f64,
    pub delta_v: f64,
    /// Spike current, A.
    pub i_spike: f64,
    pub q_before: f64,
    pub d_before: f64,
}

/// Applies `v_new` instantaneously and returns the emitted spike.
pub fn transition_spike(state: &DeviceState, params: &DeviceParams, v_new: f64) -> Result<(f64, DeviceState)> {
    state.check_finite()?;
    if !v_new.is_finite() {
        return Err(Error::invalid(format!("voltage must be finite, got {v_new}")));
    }
    let delta_v = v_new - state.v_prev;
    let drive = params.g_trans * delta_v + params.r_disch * (params.c_store * v_new - state.q);
    let i = drive / (1.0 + state.d);
    let next = DeviceState {
        v_prev: v_new,
        q: state.q,
        d: state.d + params.lambda_fatigue * i.abs(),
        t_now: state.t_now,
    };
    Ok((i, next))
}

/// Holds `level` for `dt` seconds without emitting a spike.
pub fn relax(state: &DeviceState, params: &DeviceParams, level: f64, dt: f64) -> Result<DeviceState> {
    state.check_finite()?;
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::invalid(format!(
            "relaxation time must be finite and >= 0, got {dt}"
        )));
    }
    if !level.is_finite() {
        return Err(Error::invalid(format!("voltage must be finite, got {level}")));
    }
    if dt == 0.0 {
        return Ok(*state);
    }
    let q_eq = params.q_equilibrium(level);
    let q = q_eq + (state.q - q_eq) * (-dt / params.tau_eff()).exp();
    let d = state.d * (-dt / params.tau_d).exp();
    Ok(DeviceState {
        v_prev: state.v_prev,
        q,
        d,
        t_now: state.t_now + dt,
    })
}

/// Transition to `seg.level`, then hold it for `seg.duration`.
pub fn apply_segment(
    state: &DeviceState,
    params: &DeviceParams,
    seg: &VoltageSegment,
) -> Result<(SpikeRecord, DeviceState)> {
    seg.validate()?;
    let (i, after_spike) = transition_spike(state, params, seg.level)?;
    let record = SpikeRecord {
        t: state.t_now,
        level: seg.level,
        delta_v: seg.level - state.v_prev,
        i_spike: i,
        q_before: state.q,
        d_before: state.d,
    };
    let next = relax(&after_spike, params, seg.level, seg.duration)?;
    Ok((record, next))
}

/// Runs a whole protocol; one spike record per segment.
pub fn run_protocol(
    params: &DeviceParams,
    segments: &[VoltageSegment],
    initial: Option<&DeviceState>,
) -> Result<(Vec<SpikeRecord>, DeviceState)> {
    params.validate()?;
    if segments.is_empty() {
        return Err(Error::invalid("protocol has no segments"));
    }
    let mut state = initial.copied().unwrap_or_else(|| DeviceState::null(params));
    let mut waveform = Vec::with_capacity(segments.len());
    for seg in segments {
        let (record, next) = apply_segment(&state, params, seg)?;
        waveform.push(record);
        state = next;
    }
    Ok((waveform, state))
}

/// Rests the device at the baseline for `t_wait` seconds (zeroing).
pub fn settle(state: &DeviceState, params: &DeviceParams, t_wait: f64) -> Result<DeviceState> {
    let mut next = relax(state, params, params.v_baseline, t_wait)?;
    next.v_prev = params.v_baseline;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn seed() -> DeviceParams {
        DeviceParams::seed()
    }

    #[test]
    fn forward_spike_from_null() {
        let p = seed();
        let (i, s) = transition_spike(&DeviceState::null(&p), &p, 0.5).unwrap();
        assert_relative_eq!(i, 1.8e-8, max_relative = 1e-14);
        assert_relative_eq!(s.d, 0.18, max_relative = 1e-12);
        assert_eq!(s.q, 0.0);
        assert_eq!(s.v_prev, 0.5);
        assert_eq!(s.t_now, 0.0);
    }

    #[test]
    fn no_spike_at_equilibrium() {
        let p = seed();
        let s = DeviceState {
            v_prev: -0.3,
            q: p.c_store * -0.3,
            d: 0.4,
            t_now: 2.0,
        };
        let (i, _) = transition_spike(&s, &p, -0.3).unwrap();
        assert_eq!(i, 0.0);
    }

    #[test]
    fn relax_closed_form_values() {
        let p = seed();
        let s = relax(&DeviceState::null(&p), &p, -0.5, 1.0).unwrap();
        assert_relative_eq!(p.tau_eff(), 0.777_777_777_8, max_relative = 1e-9);
        assert_relative_eq!(p.q_equilibrium(-0.5), -0.388_888_888_9, max_relative = 1e-9);
        assert_relative_eq!(s.q, -0.2814, max_relative = 2e-4);
        assert_eq!(s.t_now, 1.0);
        assert_eq!(s.v_prev, 0.0);

        let p2 = DeviceParams { tau_d: 2.0, ..p };
        let s2 = DeviceState {
            d: 1.0,
            ..DeviceState::null(&p2)
        };
        let out = relax(&s2, &p2, 0.7, 2.0).unwrap();
        assert_relative_eq!(out.d, (-1.0f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn relax_zero_dt_is_identity() {
        let p = seed();
        let s = DeviceState {
            v_prev: 0.2,
            q: 0.123,
            d: 0.456,
            t_now: 7.0,
        };
        assert_eq!(relax(&s, &p, -1.0, 0.0).unwrap(), s);
    }

    #[test]
    fn relax_rejects_negative_dt() {
        let p = seed();
        assert!(matches!(
            relax(&DeviceState::null(&p), &p, 0.0, -1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn non_finite_inputs_rejected() {
        let p = seed();
        let null = DeviceState::null(&p);
        assert!(transition_spike(&null, &p, f64::NAN).is_err());
        let bad = DeviceState {
            q: f64::INFINITY,
            ..null
        };
        assert!(transition_spike(&bad, &p, 0.1).is_err());
        assert!(VoltageSegment::new(0.1, 0.0).is_err());
        assert!(VoltageSegment::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn apply_segment_composes() {
        let p = seed();
        let seg = VoltageSegment::new(-0.5, 1.0).unwrap();
        let (rec, s) = apply_segment(&DeviceState::null(&p), &p, &seg).unwrap();
        assert_relative_eq!(rec.i_spike, -1.8e-8, max_relative = 1e-14);
        assert_eq!(rec.t, 0.0);
        assert_eq!(rec.q_before, 0.0);
        assert_eq!(rec.d_before, 0.0);
        assert_eq!(rec.delta_v, -0.5);
        assert_relative_eq!(s.q, -0.2814, max_relative = 2e-4);
        assert_relative_eq!(s.d, 0.18 * (-0.2f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn held_level_at_equilibrium_is_pure_relaxation() {
        let p = seed();
        let s = DeviceState {
            v_prev: 0.25,
            q: p.c_store * 0.25,
            d: 0.0,
            t_now: 0.0,
        };
        let (rec, out) = apply_segment(
            &s,
            &p,
            &VoltageSegment {
                level: 0.25,
                duration: 1.0,
            },
        )
        .unwrap();
        assert_eq!(rec.i_spike, 0.0);
        assert_eq!(out.d, 0.0);
    }

    #[test]
    fn empty_protocol_rejected() {
        assert!(matches!(run_protocol(&seed(), &[], None), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn baseline_only_protocol_gives_zero_spike() {
        let p = seed();
        let (w, fin) = run_protocol(
            &p,
            &[VoltageSegment {
                level: 0.0,
                duration: 1.0,
            }],
            None,
        )
        .unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].i_spike, 0.0);
        assert!(fin.is_null(&p, NULL_EPS));
    }

    #[test]
    fn settle_zeroes_charge() {
        let p = seed();
        let s = DeviceState {
            v_prev: -0.5,
            q: -0.2814,
            d: 0.0,
            t_now: 1.0,
        };
        let out = settle(&s, &p, 40.0).unwrap();
        assert!(out.q.abs() < 1e-20);
        assert_eq!(out.v_prev, 0.0);
        assert!(out.is_null(&p, NULL_EPS));
        assert_eq!(out.t_now, 41.0);
    }

    #[test]
    fn settle_keeps_null_state() {
        let p = seed();
        let null = DeviceState::null(&p);
        for t in [0.0, 0.5, 40.0, 1e4] {
            let out = settle(&null, &p, t).unwrap();
            assert!(out.is_null(&p, NULL_EPS));
            assert_eq!(out.q, 0.0);
            assert_eq!(out.d, 0.0);
        }
    }

    #[test]
    fn is_null_checks_every_component() {
        let p = seed();
        let null = DeviceState::null(&p);
        assert!(null.is_null(&p, NULL_EPS));
        assert!(!DeviceState { v_prev: 0.1, ..null }.is_null(&p, NULL_EPS));
        assert!(!DeviceState { q: 2e-9, ..null }.is_null(&p, NULL_EPS));
        assert!(!DeviceState { d: 2e-9, ..null }.is_null(&p, NULL_EPS));
        assert!(DeviceState {
            q: -1e-9,
            d: 1e-9,
            ..null
        }
        .is_null(&p, NULL_EPS));
    }

    #[test]
    fn params_validation() {
        assert!(seed().validate().is_ok());
        assert!(DeviceParams { tau_c: 0.0, ..seed() }.validate().is_err());
        assert!(DeviceParams { tau_q: -1.0, ..seed() }.validate().is_err());
        assert!(DeviceParams {
            g_trans: -1e-9,
            ..seed()
        }
        .validate()
        .is_err());
        assert!(DeviceParams {
            lambda_fatigue: f64::NAN,
            ..seed()
        }
        .validate()
        .is_err());
        assert!(DeviceParams {
            r_disch: 0.0,
            c_store: 0.0,
            lambda_fatigue: 0.0,
            ..seed()
        }
        .validate()
        .is_ok());
    }
}
