//! Fitting device profiles to target current ranges.
//!
//! The objective is a weighted sum of hinge distances: zero inside each
//! target interval, linear (in a per-constraint current scale) outside.
//! It is minimised by a compass search over the natural logarithms of the
//! free parameters, with seeded restarts once the step has collapsed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adder::{min_pairwise_separation, OrderCells, RangeTable};
use crate::device::{settle, DeviceParams, NULL_EPS};
use crate::error::{Error, Result};
use crate::profiles::{ProfileEntry, ProfileFamily};
use crate::sequencer::{all_inputs, builtin_gate, profile_key, run_gate, ClockConfig, GateResult, AND_THRESHOLD};

/// Smallest loss charged for a violated constraint, so that a point
/// sitting exactly on an open boundary never scores zero.
pub const MIN_VIOLATION: f64 = 1e-9;
/// Initial compass step, in natural-log units.
pub const INITIAL_STEP: f64 = 0.5;
/// Step below which the search restarts.
pub const MIN_STEP: f64 = 1e-4;
/// Half-width of the uniform restart perturbation around the seed, log units.
pub const RESTART_SPREAD: f64 = 1.5;
/// Resolution quoted for `t_2` read-spike separation, amperes.
pub const ORDER_RESOLUTION: f64 = 1e-12;

const NANO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    GTrans,
    RDisch,
    CStore,
    TauQ,
    TauC,
    TauD,
    LambdaFatigue,
}

impl ParamName {
    pub fn get(self, p: &DeviceParams) -> f64 {
        match self {
            ParamName::GTrans => p.g_trans,
            ParamName::RDisch => p.r_disch,
            ParamName::CStore => p.c_store,
            ParamName::TauQ => p.tau_q,
            ParamName::TauC => p.tau_c,
            ParamName::TauD => p.tau_d,
            ParamName::LambdaFatigue => p.lambda_fatigue,
        }
    }

    pub fn set(self, p: &mut DeviceParams, value: f64) {
        let slot = match self {
            ParamName::GTrans => &mut p.g_trans,
            ParamName::RDisch => &mut p.r_disch,
            ParamName::CStore => &mut p.c_store,
            ParamName::TauQ => &mut p.tau_q,
            ParamName::TauC => &mut p.tau_c,
            ParamName::TauD => &mut p.tau_d,
            ParamName::LambdaFatigue => &mut p.lambda_fatigue,
        };
        *slot = value;
    }
}

/// A positive parameter searched in log space between `lower` and `upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub profile: String,
    pub param: ParamName,
    pub lower: f64,
    pub upper: f64,
}

/// Real interval with optional, individually open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    #[serde(default)]
    pub lower_closed: bool,
    #[serde(default)]
    pub upper_closed: bool,
}

impl Interval {
    /// `[lower, upper)`
    pub fn closed_open(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            lower_closed: true,
            upper_closed: false,
        }
    }

    /// `(lower, upper]`
    pub fn open_closed(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            lower_closed: false,
            upper_closed: true,
        }
    }

    pub fn open(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            lower_closed: false,
            upper_closed: false,
        }
    }

    pub fn closed(lower: f64, upper: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
            lower_closed: true,
            upper_closed: true,
        }
    }

    /// `(lower, inf)`
    pub fn above(lower: f64) -> Self {
        Self {
            lower: Some(lower),
            upper: None,
            lower_closed: false,
            upper_closed: false,
        }
    }

    /// `(-inf, upper)`
    pub fn below(upper: f64) -> Self {
        Self {
            lower: None,
            upper: Some(upper),
            lower_closed: false,
            upper_closed: false,
        }
    }

    /// `[lower, upper]` over the values a target may take; must be non-empty.
    pub fn validate(&self) -> Result<()> {
        if let (Some(lo), Some(hi)) = (self.lower, self.upper) {
            let empty = lo > hi || (lo == hi && !(self.lower_closed && self.upper_closed));
            if empty || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("empty or non-finite interval {self:?}")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = match self.lower {
            None => true,
            Some(lo) if self.lower_closed => x >= lo,
            Some(lo) => x > lo,
        };
        let below = match self.upper {
            None => true,
            Some(hi) if self.upper_closed => x <= hi,
            Some(hi) => x < hi,
        };
        x.is_finite() && above && below
    }

    /// Distance from `x` to the interval (0 inside or on an open edge).
    pub fn distance(&self, x: f64) -> f64 {
        let lo = self.lower.map_or(0.0, |lo| (lo - x).max(0.0));
        let hi = self.upper.map_or(0.0, |hi| (x - hi).max(0.0));
        lo + hi
    }

    /// Distance `x` must move to leave the interval (0 outside).
    pub fn exit_distance(&self, x: f64) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        let lo = self.lower.map_or(f64::INFINITY, |lo| x - lo);
        let hi = self.upper.map_or(f64::INFINITY, |hi| hi - x);
        lo.min(hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordScope {
    /// Input records and `t_1`.
    InputPhase,
    /// The gate's whole response window.
    Window,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Presence {
    Required,
    Forbidden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Observable {
    MaxPos,
    MinNeg,
    /// Spike current of one record.
    Record {
        index: usize,
    },
    /// Some (or no) negative record of the scope lies in the target.
    NegativeRecords {
        scope: RecordScope,
        presence: Presence,
    },
    /// A decoded output; the target must be a single value.
    Decoded {
        output: String,
    },
    /// `max(|q|, d)` after resting for the clock's zero wait.
    SettledMemory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub id: String,
    pub gate: String,
    pub inputs: Vec<bool>,
    pub observable: Observable,
    pub target: Interval,
    pub weight: f64,
    /// Current normalisation in amperes (ignored for decoded and memory observables).
    pub scale: f64,
}

impl Constraint {
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if !(self.weight.is_finite() && self.weight >= 0.0) {
            return Err(Error::invalid(format!("{}: weight must be finite and >= 0", self.id)));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::invalid(format!("{}: scale must be > 0", self.id)));
        }
        Ok(())
    }

    /// Unweighted violation and the observed value.
    fn violation(&self, run: &GateResult, params: &DeviceParams, clock: &ClockConfig) -> Result<(f64, f64)> {
        let floor = |v: f64, violated: bool| if violated { v.max(MIN_VIOLATION) } else { 0.0 };
        let hinge = |x: f64| floor(self.target.distance(x) / self.scale, !self.target.contains(x));
        Ok(match &self.observable {
            Observable::MaxPos => (hinge(run.max_pos), run.max_pos),
            Observable::MinNeg => (hinge(run.min_neg), run.min_neg),
            Observable::Record { index } => {
                let x = run
                    .waveform
                    .get(*index)
                    .ok_or_else(|| Error::invalid(format!("{}: record {index} out of range", self.id)))?
                    .i_spike;
                (hinge(x), x)
            }
            Observable::NegativeRecords { scope, presence } => {
                let range = match scope {
                    RecordScope::InputPhase => run.input_phase(),
                    RecordScope::Window => run.window.clone(),
                };
                let negatives = run.waveform[range].iter().map(|r| r.i_spike).filter(|&i| i < 0.0);
                match presence {
                    Presence::Required => {
                        let best = negatives
                            .map(|i| (i, self.target.distance(i)))
                            .min_by(|a, b| a.1.total_cmp(&b.1));
                        match best {
                            Some((i, _)) if self.target.contains(i) => (0.0, i),
                            Some((i, d)) => (floor(d / self.scale, true), i),
                            None => (floor(self.target.distance(0.0) / self.scale, true), 0.0),
                        }
                    }
                    Presence::Forbidden => {
                        let mut total = 0.0;
                        let mut count = 0.0;
                        for i in negatives.filter(|&i| self.target.contains(i)) {
                            total += floor(self.target.exit_distance(i) / self.scale, true);
                            count += 1.0;
                        }
                        (total, count)
                    }
                }
            }
            Observable::Decoded { output } => {
                let value = *run
                    .decoded
                    .get(output)
                    .ok_or_else(|| Error::invalid(format!("{}: gate has no output {output:?}", self.id)))?;
                let v = f64::from(value);
                (if self.target.contains(v) { 0.0 } else { 1.0 }, v)
            }
            Observable::SettledMemory => {
                let rest = settle(&run.final_state, params, clock.zero_wait)?;
                let m = rest.residual_memory();
                let ok = self.target.contains(m);
                let excess = match self.target.upper {
                    Some(hi) if hi > 0.0 && m > 0.0 => (m / hi).log10().max(0.0),
                    _ => self.target.distance(m) / self.scale,
                };
                (floor(excess, !ok), m)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationProblem {
    /// Seed parameters keyed by profile (gate) name.
    pub profiles: BTreeMap<String, DeviceParams>,
    pub free: Vec<FreeParam>,
    /// Options for the discrete protocol choice, tried in order.
    pub inter_input_return: Vec<bool>,
    pub step: f64,
    pub constraints: Vec<Constraint>,
    pub budget: u64,
    pub rng_seed: u64,
}

impl CalibrationProblem {
    pub fn validate(&self) -> Result<()> {
        if self.budget < self.profiles.len().max(1) as u64 {
            return Err(Error::invalid(format!(
                "budget must cover one evaluation per profile ({}), got {}",
                self.profiles.len().max(1),
                self.budget
            )));
        }
        if self.inter_input_return.is_empty() {
            return Err(Error::invalid("at least one inter_input_return option is required"));
        }
        ClockConfig::with_step(self.step).validate()?;
        for p in self.profiles.values() {
            p.validate()?;
        }
        for f in &self.free {
            if !self.profiles.contains_key(&f.profile) {
                return Err(Error::invalid(format!(
                    "free parameter for unknown profile {:?}",
                    f.profile
                )));
            }
            if !(f.lower > 0.0 && f.lower < f.upper && f.upper.is_finite()) {
                return Err(Error::invalid(format!("bad bounds for {:?}.{:?}", f.profile, f.param)));
            }
            let v = f.param.get(&self.profiles[&f.profile]);
            if !(f.lower..=f.upper).contains(&v) {
                return Err(Error::invalid(format!(
                    "seed {:?}.{:?} = {v} outside its bounds",
                    f.profile, f.param
                )));
            }
        }
        for c in &self.constraints {
            c.validate()?;
            let key = profile_key(&c.gate);
            if !self.profiles.contains_key(key) {
                return Err(Error::invalid(format!("{}: no profile {key:?}", c.id)));
            }
            builtin_gate(&c.gate, self.profiles[key])?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub id: String,
    pub observed: f64,
    pub satisfied: bool,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReport {
    pub profile: String,
    pub inter_input_return: bool,
    pub residual: f64,
    pub evaluations: u64,
    pub restarts: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    /// `t_2` read spike per triple, lexicographic order.
    pub t2_spikes: Vec<(String, f64)>,
    pub min_separation: f64,
    pub resolution: f64,
    pub cells: OrderCells,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub profiles: BTreeMap<String, ProfileEntry>,
    pub residual: f64,
    pub infeasible: bool,
    pub evaluations: u64,
    pub blocks: Vec<BlockReport>,
    pub constraints: Vec<ConstraintReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderReport>,
}

impl CalibrationResult {
    /// Calibrated profiles as a family for the profile book.
    pub fn family(&self) -> ProfileFamily {
        ProfileFamily {
            gates: self.profiles.clone(),
            order_cells: self.order.as_ref().map(|o| o.cells.clone()),
        }
    }
}

/// Loss of one profile's constraints.
fn block_loss(
    params: &DeviceParams,
    constraints: &[&Constraint],
    clock: &ClockConfig,
    mut report: Option<&mut Vec<ConstraintReport>>,
) -> f64 {
    if params.validate().is_err() {
        return f64::INFINITY;
    }
    let mut runs: Vec<(&str, &[bool], GateResult)> = Vec::new();
    let mut total = 0.0;
    for c in constraints {
        let cached = runs
            .iter()
            .position(|(g, i, _)| *g == c.gate && *i == c.inputs.as_slice());
        let idx = match cached {
            Some(idx) => idx,
            None => {
                let run = builtin_gate(&c.gate, *params).and_then(|gate| run_gate(&gate, &c.inputs, clock));
                match run {
                    Ok(run) => {
                        runs.push((&c.gate, &c.inputs, run));
                        runs.len() - 1
                    }
                    Err(_) => return f64::INFINITY,
                }
            }
        };
        let (v, observed) = match c.violation(&runs[idx].2, params, clock) {
            Ok(x) => x,
            Err(_) => return f64::INFINITY,
        };
        let contribution = c.weight * v;
        total += contribution;
        if let Some(rep) = report.as_deref_mut() {
            rep.push(ConstraintReport {
                id: c.id.clone(),
                observed,
                satisfied: v == 0.0,
                loss: contribution,
            });
        }
    }
    total
}

/// Total loss of a full parameter assignment (keyed by profile).
pub fn loss(params: &BTreeMap<String, DeviceParams>, problem: &CalibrationProblem, inter_input_return: bool) -> f64 {
    let clock = ClockConfig {
        inter_input_return,
        ..ClockConfig::with_step(problem.step)
    };
    let mut total = 0.0;
    for (key, constraints) in partition(problem) {
        match params.get(&key) {
            Some(p) => total += block_loss(p, &constraints, &clock, None),
            None => return f64::INFINITY,
        }
    }
    total
}

fn partition(problem: &CalibrationProblem) -> BTreeMap<String, Vec<&Constraint>> {
    let mut blocks: BTreeMap<String, Vec<&Constraint>> = BTreeMap::new();
    for c in &problem.constraints {
        blocks.entry(profile_key(&c.gate).to_string()).or_default().push(c);
    }
    blocks
}

struct Search<'a> {
    seed: DeviceParams,
    /// Log coordinates of the seed; untouched coordinates map back exactly.
    origin: Vec<f64>,
    free: Vec<&'a FreeParam>,
    constraints: &'a [&'a Constraint],
    clock: ClockConfig,
    evaluations: u64,
    budget: u64,
}

impl Search<'_> {
    fn params_at(&self, x: &[f64]) -> DeviceParams {
        let mut p = self.seed;
        for ((f, &xi), &oi) in self.free.iter().zip(x).zip(&self.origin) {
            if xi != oi {
                f.param.set(&mut p, xi.exp());
            }
        }
        p
    }

    fn clamp(&self, i: usize, x: f64) -> f64 {
        x.clamp(self.free[i].lower.ln(), self.free[i].upper.ln())
    }

    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evaluations += 1;
        block_loss(&self.params_at(x), self.constraints, &self.clock, None)
    }

    fn exhausted(&self) -> bool {
        self.evaluations >= self.budget
    }

    /// Compass search from `x`; returns the local optimum found.
    fn descend(&mut self, mut x: Vec<f64>, mut f: f64) -> (Vec<f64>, f64) {
        let mut h = INITIAL_STEP;
        while h > MIN_STEP && f > 0.0 && !self.exhausted() {
            let mut improved = false;
            for i in 0..x.len() {
                for sign in [1.0, -1.0] {
                    if self.exhausted() || f == 0.0 {
                        break;
                    }
                    let xi = self.clamp(i, x[i] + sign * h);
                    if xi == x[i] {
                        continue;
                    }
                    let mut y = x.clone();
                    y[i] = xi;
                    let fy = self.eval(&y);
                    if fy < f {
                        x = y;
                        f = fy;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        (x, f)
    }

    fn run(&mut self, rng: &mut ChaCha8Rng) -> (DeviceParams, f64, u64) {
        let x0 = self.origin.clone();
        let f0 = self.eval(&x0);
        let (mut best_x, mut best_f) = (x0.clone(), f0);
        let mut start = (x0.clone(), f0);
        let mut restarts = 0;
        loop {
            let (x, f) = self.descend(start.0, start.1);
            if f < best_f {
                best_x = x;
                best_f = f;
            }
            if best_f == 0.0 || self.exhausted() || self.free.is_empty() {
                break;
            }
            restarts += 1;
            let y: Vec<f64> = (0..x0.len())
                .map(|i| self.clamp(i, x0[i] + rng.gen_range(-RESTART_SPREAD..=RESTART_SPREAD)))
                .collect();
            let fy = self.eval(&y);
            start = (y, fy);
        }
        (self.params_at(&best_x), best_f, restarts)
    }
}

/// Derivative-free fit of every profile block in the problem.
///
/// Blocks (constraints sharing a device profile) are independent terms of
/// the loss and are searched one after another with the remaining budget.
/// For each block every `inter_input_return` option gets its own search;
/// the first option reaching zero wins, otherwise the lowest residual.
pub fn calibrate(problem: &CalibrationProblem) -> Result<CalibrationResult> {
    problem.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(problem.rng_seed);
    let mut evaluations = 0u64;
    let mut profiles = BTreeMap::new();
    let mut blocks = Vec::new();
    let mut reports = Vec::new();
    let partitioned = partition(problem);

    for (block_index, (key, seed)) in problem.profiles.iter().enumerate() {
        // one evaluation stays reserved for every block still to come
        let reserve = (problem.profiles.len() - block_index - 1) as u64;
        let constraints: &[&Constraint] = partitioned.get(key).map_or(&[], |v| v.as_slice());
        let mut best: Option<(DeviceParams, f64, bool, u64, u64)> = None;
        let mut block_evals = 0;
        for &iir in &problem.inter_input_return {
            let clock = ClockConfig {
                inter_input_return: iir,
                ..ClockConfig::with_step(problem.step)
            };
            let free: Vec<&FreeParam> = problem.free.iter().filter(|f| &f.profile == key).collect();
            let origin = free.iter().map(|f| f.param.get(seed).ln()).collect();
            let mut search = Search {
                seed: *seed,
                origin,
                free,
                constraints,
                clock,
                evaluations: 0,
                budget: problem.budget - reserve - evaluations - block_evals,
            };
            let (params, f, restarts) = search.run(&mut rng);
            block_evals += search.evaluations;
            if best.as_ref().is_none_or(|b| f < b.1) {
                best = Some((params, f, iir, search.evaluations, restarts));
            }
            if f == 0.0 || evaluations + block_evals + reserve >= problem.budget {
                break;
            }
        }
        let (params, f, iir, _, restarts) = best.expect("at least one discrete option");
        evaluations += block_evals;
        let clock = ClockConfig {
            inter_input_return: iir,
            ..ClockConfig::with_step(problem.step)
        };
        block_loss(&params, constraints, &clock, Some(&mut reports));
        blocks.push(BlockReport {
            profile: key.clone(),
            inter_input_return: iir,
            residual: f,
            evaluations: block_evals,
            restarts,
        });
        profiles.insert(
            key.clone(),
            ProfileEntry {
                params,
                inter_input_return: iir,
            },
        );
    }

    let residual: f64 = blocks.iter().map(|b| b.residual).sum();
    let order = match profiles.get("full-adder") {
        Some(entry) => Some(order_report(entry, problem.step)?),
        None => None,
    };
    Ok(CalibrationResult {
        profiles,
        residual,
        infeasible: residual > 0.0,
        evaluations,
        blocks,
        constraints: reports,
        order,
    })
}

fn bits_label(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Reference `t_2` spikes of a full-adder profile and the derived order cells.
pub fn order_report(entry: &ProfileEntry, step: f64) -> Result<OrderReport> {
    let gate = builtin_gate("full-adder", entry.params)?;
    let clock = ClockConfig {
        inter_input_return: entry.inter_input_return,
        ..ClockConfig::with_step(step)
    };
    let mut samples = Vec::new();
    let mut t2_spikes = Vec::new();
    for inputs in all_inputs(3) {
        let run = run_gate(&gate, &inputs, &clock)?;
        let t2 = run
            .response_spike(1)
            .ok_or_else(|| Error::invalid("full-adder run has no t_2 record"))?;
        samples.push(([inputs[0], inputs[1], inputs[2]], t2));
        t2_spikes.push((bits_label(&inputs), t2));
    }
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    Ok(OrderReport {
        t2_spikes,
        min_separation: min_pairwise_separation(&values),
        resolution: ORDER_RESOLUTION,
        cells: OrderCells::from_reference(&samples)?,
    })
}

/// Range, flag, AND/OR and NOT-sign targets drawn from the published
/// gate behaviour.
pub fn published_constraints() -> Vec<Constraint> {
    let table = RangeTable::default();
    let mut out = Vec::new();
    for inputs in all_inputs(3) {
        let label = bits_label(&inputs);
        let sum = inputs.iter().filter(|&&b| b).count() as u8;
        let (lo, hi) = table.positive_interval(sum);
        let target = match hi {
            Some(hi) => Interval::closed_open(lo, hi),
            None => Interval::above(lo),
        };
        let base = |id: String, observable, target| Constraint {
            id,
            gate: "full-adder".into(),
            inputs: inputs.clone(),
            observable,
            target,
            weight: 1.0,
            scale: NANO,
        };
        out.push(base(format!("fa-{label}-max-pos"), Observable::MaxPos, target));
        let presence = |required: bool| {
            if required {
                Presence::Required
            } else {
                Presence::Forbidden
            }
        };
        let flags = [
            (
                "has-one",
                Interval::open_closed(table.neg_floor, table.neg_one_carry),
                sum >= 1,
                RecordScope::InputPhase,
            ),
            (
                "carry",
                Interval::open_closed(table.neg_one_carry, table.neg_carry_zero),
                sum >= 2,
                RecordScope::InputPhase,
            ),
            (
                "has-zero",
                Interval::open(table.neg_carry_zero, 0.0),
                sum <= 2,
                RecordScope::Window,
            ),
        ];
        for (name, interval, required, scope) in flags {
            out.push(base(
                format!("fa-{label}-{name}"),
                Observable::NegativeRecords {
                    scope,
                    presence: presence(required),
                },
                interval,
            ));
        }
    }
    for inputs in all_inputs(2) {
        let label = bits_label(&inputs);
        let both = inputs.iter().all(|&b| b);
        let any = inputs.iter().any(|&b| b);
        let and_target = if both {
            Interval::above(AND_THRESHOLD)
        } else {
            Interval::closed(0.0, AND_THRESHOLD)
        };
        let or_target = if any {
            Interval::below(-AND_THRESHOLD)
        } else {
            Interval::closed(-AND_THRESHOLD, 0.0)
        };
        for (id, observable, target) in [
            (format!("and-{label}-max-pos"), Observable::MaxPos, and_target),
            (format!("or-{label}-min-neg"), Observable::MinNeg, or_target),
        ] {
            out.push(Constraint {
                id,
                gate: "and".into(),
                inputs: inputs.clone(),
                observable,
                target,
                weight: 1.0,
                scale: 0.1e-6,
            });
        }
    }
    for (bit, target) in [(true, Interval::below(0.0)), (false, Interval::above(0.0))] {
        out.push(Constraint {
            id: format!("not-{}-t1-sign", bits_label(&[bit])),
            gate: "not".into(),
            inputs: vec![bit],
            observable: Observable::Record { index: 1 },
            target,
            weight: 1.0,
            scale: NANO,
        });
    }
    out
}

/// One zeroing requirement per distinct gate run of `constraints`.
pub fn zeroing_constraints(constraints: &[Constraint]) -> Vec<Constraint> {
    let mut seen: Vec<(String, Vec<bool>)> = Vec::new();
    let mut out = Vec::new();
    for c in constraints {
        let key = (c.gate.clone(), c.inputs.clone());
        if seen.contains(&key) {
            continue;
        }
        out.push(Constraint {
            id: format!("zero-{}-{}", c.gate, bits_label(&c.inputs)),
            gate: c.gate.clone(),
            inputs: c.inputs.clone(),
            observable: Observable::SettledMemory,
            target: Interval::closed(0.0, NULL_EPS),
            weight: 1.0,
            scale: 1.0,
        });
        seen.push(key);
    }
    out
}

/// Search box shared by every profile block.
pub fn default_free_params(profile: &str) -> Vec<FreeParam> {
    let free = |param, lower, upper| FreeParam {
        profile: profile.to_string(),
        param,
        lower,
        upper,
    };
    vec![
        free(ParamName::GTrans, 1e-12, 1e-4),
        free(ParamName::RDisch, 1e-12, 1e-4),
        free(ParamName::CStore, 0.1, 10.0),
        free(ParamName::LambdaFatigue, 1e2, 1e11),
        free(ParamName::TauC, 0.05, 50.0),
        free(ParamName::TauQ, 0.5, 100.0),
        free(ParamName::TauD, 0.05, 50.0),
    ]
}

/// The archived calibration: published targets plus zeroing, from the
/// seed family.
pub fn published_problem(seed: &ProfileFamily, budget: u64, rng_seed: u64) -> CalibrationProblem {
    let mut constraints = published_constraints();
    let zeroing = zeroing_constraints(&constraints);
    constraints.extend(zeroing);
    let profiles: BTreeMap<String, DeviceParams> = seed.gates.iter().map(|(k, e)| (k.clone(), e.params)).collect();
    let free = profiles.keys().flat_map(|k| default_free_params(k)).collect();
    CalibrationProblem {
        profiles,
        free,
        inter_input_return: vec![false, true],
        step: 1.0,
        constraints,
        budget,
        rng_seed,
    }
}
