//! Run configurations, waveform CSV and JSON reports.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adder::{decode_input_order, OrderClass, RangeTable};
use crate::device::{DeviceParams, SpikeRecord, VoltageSegment, NULL_EPS};
use crate::encoding::LogicScheme;
use crate::error::{Error, Result};
use crate::profiles::{ProfileBook, ProfileFamily, CALIBRATED_FAMILY};
use crate::sequencer::{zeroed_after, ClockConfig, DecodeRule, GateResult, GateSpec};

/// Exact header of exported waveforms.
pub const WAVEFORM_HEADER: [&str; 6] = ["t_s", "v_applied_V", "delta_v_V", "i_spike_A", "q", "d"];

/// One exported spike record. `q` and `d` are the memory just before the
/// transition.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveformRow {
    pub t_s: f64,
    pub v_applied_V: f64,
    pub delta_v_V: f64,
    pub i_spike_A: f64,
    pub q: f64,
    pub d: f64,
}

impl From<&SpikeRecord> for WaveformRow {
    fn from(r: &SpikeRecord) -> Self {
        Self {
            t_s: r.t,
            v_applied_V: r.level,
            delta_v_V: r.delta_v,
            i_spike_A: r.i_spike,
            q: r.q_before,
            d: r.d_before,
        }
    }
}

/// Shortest decimal rendering that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_waveform<W: Write>(out: W, records: &[SpikeRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(WAVEFORM_HEADER)?;
    for r in records.iter().map(WaveformRow::from) {
        w.write_record([r.t_s, r.v_applied_V, r.delta_v_V, r.i_spike_A, r.q, r.d].map(num))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn export_waveform(path: &Path, records: &[SpikeRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_waveform(std::io::BufWriter::new(file), records).map_err(|e| match e {
        Error::Csv(c) if c.is_io_error() => Error::io(path, std::io::Error::other(c.to_string())),
        other => other,
    })
}

pub fn read_waveform(path: &Path) -> Result<Vec<WaveformRow>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let header = r.headers()?.clone();
    if header.iter().ne(WAVEFORM_HEADER) {
        return Err(Error::invalid(format!(
            "{}: unexpected waveform header {header:?}",
            path.display()
        )));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub waveform: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
}

/// Everything a run can take from a file; command-line flags win.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Profile family name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<String>,
    /// Alternative profile book (e.g. one written by `calibrate`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile_file: Option<PathBuf>,
    /// Device parameters replacing the profile's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<DeviceParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<LogicScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockConfig>,
    /// Built-in gate name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<String>,
    /// Custom gate layout, used instead of a built-in one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_spec: Option<GateSpec>,
    /// Input bits (0 or 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<Vec<u8>>,
    /// Run every input combination.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub all: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_table: Option<RangeTable>,
    /// Explicit protocol for `simulate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<VoltageSegment>>,
    #[serde(default)]
    pub outputs: OutputPaths,
}

pub fn parse_bits(bits: &[u8]) -> Result<Vec<bool>> {
    bits.iter()
        .map(|&b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::config(format!("input bits must be 0 or 1, got {other}"))),
        })
        .collect()
}

/// A gate ready to run, with the family it came from.
#[derive(Debug, Clone)]
pub struct ResolvedGate {
    pub spec: GateSpec,
    pub clock: ClockConfig,
    pub profile: String,
    pub family: ProfileFamily,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: Self = read_json(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inputs.is_some() && self.all {
            return Err(Error::config("give either inputs or all, not both"));
        }
        if let Some(bits) = &self.inputs {
            parse_bits(bits)?;
        }
        if self.gate.is_some() && self.gate_spec.is_some() {
            return Err(Error::config("give either gate or gate_spec, not both"));
        }
        let checks = [
            self.params.as_ref().map(DeviceParams::validate),
            self.scheme.as_ref().map(LogicScheme::validate),
            self.clock.as_ref().map(ClockConfig::validate),
            self.gate_spec.as_ref().map(GateSpec::validate),
            self.range_table.as_ref().map(RangeTable::validate),
        ];
        for check in checks.into_iter().flatten() {
            check.map_err(|e| Error::config(e.to_string()))?;
        }
        for s in self.segments.iter().flatten() {
            s.validate().map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn profile_book(&self) -> Result<ProfileBook> {
        match &self.profile_file {
            Some(path) => read_json(path),
            None => Ok(ProfileBook::shipped()),
        }
    }

    pub fn profile_name<'a>(&'a self, cli: Option<&'a str>) -> &'a str {
        cli.or(self.profile.as_deref()).unwrap_or(CALIBRATED_FAMILY)
    }

    /// Gate layout, device and clock after applying every override.
    pub fn resolve_gate(&self, cli_name: Option<&str>, cli_profile: Option<&str>) -> Result<ResolvedGate> {
        let profile = self.profile_name(cli_profile).to_string();
        let family = self.profile_book()?.family(&profile)?.clone();
        let (mut spec, mut clock) = match (cli_name.or(self.gate.as_deref()), &self.gate_spec) {
            (Some(name), _) => family.gate(name, ClockConfig::default().step)?,
            (None, Some(spec)) => (spec.clone(), ClockConfig::default()),
            (None, None) => return Err(Error::config("no gate given (use --name or a config gate)")),
        };
        if let Some(params) = self.params {
            spec.params = params;
        }
        if let Some(scheme) = self.scheme {
            spec.scheme = scheme;
        }
        if let Some(c) = self.clock {
            clock = c;
        }
        if let Some(table) = self.range_table {
            match &mut spec.decode {
                DecodeRule::RangeTable(t) => *t = table,
                _ => {
                    return Err(Error::config(format!(
                        "gate {} has no range table to override",
                        spec.name
                    )))
                }
            }
        }
        spec.validate().map_err(|e| Error::config(e.to_string()))?;
        clock.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(ResolvedGate {
            spec,
            clock,
            profile,
            family,
        })
    }
}

/// Summary of one gate run.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub gate: String,
    pub profile: String,
    pub inputs: Vec<u8>,
    pub decoded: BTreeMap<String, u32>,
    pub max_pos_A: f64,
    pub min_neg_A: f64,
    pub t1_index: usize,
    pub window: [usize; 2],
    pub records: usize,
    /// Spike one step after `t_1`, if recorded.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2_spike_A: Option<f64>,
    /// Experimental minority-bit position, when the profile has order cells.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_order: Option<OrderClass>,
    /// `max(|q|, d)` after the zeroing rest.
    pub residual_after_zeroing: f64,
    pub zeroed: bool,
}

impl GateReport {
    pub fn new(result: &GateResult, resolved: &ResolvedGate) -> Result<Self> {
        let rest = zeroed_after(result, &resolved.spec.params, &resolved.clock)?;
        let t2 = result.response_spike(1);
        let order = match (&resolved.family.order_cells, t2, resolved.spec.arity) {
            (Some(cells), Some(t2), 3) if matches!(resolved.spec.decode, DecodeRule::RangeTable(_)) => {
                Some(decode_input_order(t2, cells))
            }
            _ => None,
        };
        Ok(Self {
            gate: result.gate.clone(),
            profile: resolved.profile.clone(),
            inputs: result.inputs.iter().map(|&b| b as u8).collect(),
            decoded: result.decoded.clone(),
            max_pos_A: result.max_pos,
            min_neg_A: result.min_neg,
            t1_index: result.t1_index,
            window: [result.window.start, result.window.end],
            records: result.waveform.len(),
            t2_spike_A: t2,
            input_order: order,
            residual_after_zeroing: rest.residual_memory(),
            zeroed: rest.is_null(&resolved.spec.params, NULL_EPS),
        })
    }
}

fn input_column(k: usize, arity: usize) -> String {
    if arity <= 26 {
        char::from(b'a' + k as u8).to_string()
    } else {
        format!("in{k}")
    }
}

/// Truth table as CSV: input columns, decoded outputs, extrema.
pub fn truth_table_csv(rows: &[GateReport]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    if let Some(first) = rows.first() {
        let arity = first.inputs.len();
        let mut header: Vec<String> = (0..arity).map(|k| input_column(k, arity)).collect();
        header.extend(first.decoded.keys().cloned());
        header.extend(["max_pos_A".to_string(), "min_neg_A".to_string()]);
        w.write_record(&header)?;
        for row in rows {
            let mut fields: Vec<String> = row.inputs.iter().map(u8::to_string).collect();
            fields.extend(row.decoded.values().map(u32::to_string));
            fields.extend([num(row.max_pos_A), num(row.min_neg_A)]);
            w.write_record(&fields)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

/// Expected outputs for `--expect`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    /// The gate's reference logic function.
    Reference,
    /// Primary output per row, in truth-table order.
    Values(Vec<u32>),
}

impl Expectation {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "reference" {
            return Ok(Expectation::Reference);
        }
        text.split(',')
            .map(|v| {
                v.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::config(format!("bad --expect value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Expectation::Values)
    }
}

/// Name of the output `--expect` values are compared against.
pub fn primary_output(spec: &GateSpec) -> &'static str {
    match spec.decode {
        DecodeRule::RangeTable(_) => "value",
        _ => "out",
    }
}

/// Reference logic of a built-in gate: expected outputs by name.
pub fn reference_outputs(gate: &str, inputs: &[bool]) -> Result<BTreeMap<&'static str, u32>> {
    let ones = inputs.iter().filter(|&&b| b).count() as u32;
    let n = inputs.len() as u32;
    let map = match gate {
        "not" => BTreeMap::from([("out", u32::from(!inputs[0]))]),
        "and" => BTreeMap::from([("out", u32::from(ones == n))]),
        "or-readout" => BTreeMap::from([("out", u32::from(ones > 0))]),
        "full-adder" => BTreeMap::from([
            ("value", ones),
            ("sum", ones % 2),
            ("carry", ones / 2),
            ("has_one", u32::from(ones >= 1)),
            ("carry_flag", u32::from(ones >= 2)),
            ("has_zero", u32::from(ones < n)),
        ]),
        other => return Err(Error::config(format!("no reference logic for gate {other:?}"))),
    };
    Ok(map)
}

/// Mismatches between the runs and an expectation, one line each.
pub fn check_expectation(spec: &GateSpec, rows: &[GateReport], expect: &Expectation) -> Result<Vec<String>> {
    let mut mismatches = Vec::new();
    let label = |row: &GateReport| row.inputs.iter().map(u8::to_string).collect::<String>();
    match expect {
        Expectation::Reference => {
            for row in rows {
                let bits: Vec<bool> = row.inputs.iter().map(|&b| b == 1).collect();
                for (name, want) in reference_outputs(&spec.name, &bits)? {
                    let got = row.decoded.get(name).copied();
                    if got != Some(want) {
                        mismatches.push(format!("{}: {name} = {got:?}, expected {want}", label(row)));
                    }
                }
            }
        }
        Expectation::Values(values) => {
            if values.len() != rows.len() {
                return Err(Error::config(format!(
                    "--expect has {} values for {} rows",
                    values.len(),
                    rows.len()
                )));
            }
            let name = primary_output(spec);
            for (row, &want) in rows.iter().zip(values) {
                let got = row.decoded.get(name).copied();
                if got != Some(want) {
                    mismatches.push(format!("{}: {name} = {got:?}, expected {want}", label(row)));
                }
            }
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::run_protocol;
    use crate::sequencer::{builtin_gate, run_gate};

    fn two_segment_waveform() -> Vec<SpikeRecord> {
        let segs = [
            VoltageSegment {
                level: -0.5,
                duration: 1.0,
            },
            VoltageSegment {
                level: 0.0,
                duration: 1.0,
            },
        ];
        run_protocol(&DeviceParams::seed(), &segs, None).unwrap().0
    }

    #[test]
    fn waveform_csv_layout() {
        let mut buf = Vec::new();
        write_waveform(&mut buf, &two_segment_waveform()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "t_s,v_applied_V,delta_v_V,i_spike_A,q,d");
        assert!(lines[1].starts_with("0e0,-5e-1,-5e-1,-1.8e-8,"));
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_waveform_is_header_only() {
        let mut buf = Vec::new();
        write_waveform(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t_s,v_applied_V,delta_v_V,i_spike_A,q,d\n"
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let gate = builtin_gate("full-adder", DeviceParams::seed()).unwrap();
        let run = run_gate(&gate, &[true, false, true], &ClockConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        export_waveform(&path, &run.waveform).unwrap();
        let rows = read_waveform(&path).unwrap();
        assert_eq!(rows.len(), 7);
        let expected: Vec<WaveformRow> = run.waveform.iter().map(WaveformRow::from).collect();
        assert_eq!(rows, expected);
        let max_pos = rows.iter().map(|r| r.i_spike_A).fold(0.0, f64::max);
        assert_eq!(max_pos.to_bits(), run.max_pos.to_bits());
        assert!(rows.windows(2).all(|w| w[0].t_s < w[1].t_s));
    }

    #[test]
    fn unwritable_path_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = export_waveform(&dir.path().join("missing/w.csv"), &[]).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn config_round_trip() {
        let config = RunConfig {
            profile: Some("seed".into()),
            params: Some(DeviceParams::seed()),
            clock: Some(ClockConfig::with_step(0.5)),
            gate: Some("full-adder".into()),
            inputs: Some(vec![1, 0, 1]),
            range_table: Some(RangeTable::default()),
            segments: Some(vec![VoltageSegment {
                level: 0.3,
                duration: 0.7,
            }]),
            outputs: OutputPaths {
                waveform: Some("w.csv".into()),
                report: None,
            },
            ..RunConfig::default()
        };
        let text = to_json(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, config);
        let custom = RunConfig {
            gate_spec: Some(builtin_gate("not", DeviceParams::seed()).unwrap()),
            all: true,
            ..RunConfig::default()
        };
        let back: RunConfig = serde_json::from_str(&to_json(&custom).unwrap()).unwrap();
        assert_eq!(back, custom);
    }

    #[test]
    fn config_validation() {
        let both = RunConfig {
            inputs: Some(vec![1]),
            all: true,
            ..RunConfig::default()
        };
        assert!(matches!(both.validate(), Err(Error::Config(_))));
        let bad_bit = RunConfig {
            inputs: Some(vec![2]),
            ..RunConfig::default()
        };
        assert!(bad_bit.validate().is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"gaet": "not"}"#).is_err());
    }

    #[test]
    fn resolve_applies_overrides() {
        let config = RunConfig {
            profile: Some("seed".into()),
            clock: Some(ClockConfig::with_step(0.5)),
            ..RunConfig::default()
        };
        let r = config.resolve_gate(Some("not"), None).unwrap();
        assert_eq!(r.clock.step, 0.5);
        assert_eq!(r.profile, "seed");
        assert!(config.resolve_gate(Some("xor"), None).is_err());
        assert!(config.resolve_gate(Some("not"), Some("nope")).is_err());
        let table = RunConfig {
            range_table: Some(RangeTable::default()),
            ..config
        };
        assert!(table.resolve_gate(Some("not"), None).is_err());
    }

    #[test]
    fn expectations() {
        assert_eq!(Expectation::parse("reference").unwrap(), Expectation::Reference);
        assert_eq!(Expectation::parse("1,0").unwrap(), Expectation::Values(vec![1, 0]));
        assert!(Expectation::parse("1,x").is_err());
        let fa = reference_outputs("full-adder", &[true, true, false]).unwrap();
        assert_eq!(fa["sum"], 0);
        assert_eq!(fa["carry"], 1);
        assert_eq!(fa["has_zero"], 1);
        assert_eq!(reference_outputs("not", &[true]).unwrap()["out"], 0);
        assert!(reference_outputs("xor", &[true]).is_err());
    }
}
