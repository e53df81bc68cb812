//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::calibration::{calibrate, published_problem, CalibrationProblem};
use crate::device::{run_protocol, DeviceParams};
use crate::error::{Error, Result};
use crate::io::{
    check_expectation, export_waveform, parse_bits, read_json, to_json, truth_table_csv, write_text, write_waveform,
    Expectation, GateReport, RunConfig,
};
use crate::profiles::{seed_family, ProfileBook, CALIBRATED_FAMILY, SEED_FAMILY};
use crate::rules::{run_rules, DEFAULT_DRAWS};
use crate::sequencer::{run_gate, truth_table};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_BUDGET: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(name = "spikelogic", version, about = "Single-memristor spiking logic simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Profile family (default: calibrated).
    #[arg(long)]
    pub profile: Option<String>,
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an explicit segment list and write the waveform CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Take the device of this gate's profile entry.
        #[arg(long)]
        name: Option<String>,
    },
    /// Run one gate and write a JSON report.
    Gate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        name: Option<String>,
        /// Input bit, repeated once per input.
        #[arg(long = "input")]
        inputs: Vec<u8>,
        /// Expected primary output, or `reference`.
        #[arg(long)]
        expect: Option<String>,
        /// Also export the waveform CSV here.
        #[arg(long)]
        waveform: Option<PathBuf>,
    },
    /// Run every input combination; CSV to --out, JSON beside it.
    TruthTable {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        name: Option<String>,
        /// Comma-separated primary outputs in row order, or `reference`.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Fit profiles; --config takes a problem file, otherwise the built-in one.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        /// Write a profile book with the result as its calibrated family.
        #[arg(long)]
        profile_out: Option<PathBuf>,
    },
    /// Run the physical-rule property suite.
    RulesCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
    },
}

/// Parses `args` (program name first) and runs the command.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Io { .. } | Error::Csv(_) => EXIT_FAILED,
    }
}

fn load_config(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn emit(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_text(path, text),
        None => stdout.write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn report_mismatches(mismatches: &[String], stderr: &mut dyn Write) -> i32 {
    for m in mismatches {
        let _ = writeln!(stderr, "mismatch: {m}");
    }
    if mismatches.is_empty() {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Simulate { common, name } => {
            let config = load_config(&common)?;
            let segments = config
                .segments
                .clone()
                .ok_or_else(|| Error::config("simulate needs a config with segments"))?;
            let params = match (config.params, name.as_deref().or(config.gate.as_deref())) {
                (Some(p), _) => p,
                (None, Some(gate)) => {
                    let book = config.profile_book()?;
                    book.family(config.profile_name(common.profile.as_deref()))?
                        .entry(gate)?
                        .params
                }
                (None, None) => DeviceParams::seed(),
            };
            let (records, _) = run_protocol(&params, &segments, None)?;
            match common.out.as_ref().or(config.outputs.waveform.as_ref()) {
                Some(path) => export_waveform(path, &records)?,
                None => write_waveform(stdout, &records)?,
            }
            Ok(EXIT_OK)
        }
        Command::Gate {
            common,
            name,
            inputs,
            expect,
            waveform,
        } => {
            let config = load_config(&common)?;
            let resolved = config.resolve_gate(name.as_deref(), common.profile.as_deref())?;
            let bits = if inputs.is_empty() {
                config
                    .inputs
                    .clone()
                    .ok_or_else(|| Error::config("no inputs given (use --input)"))?
            } else {
                inputs
            };
            let bits = parse_bits(&bits)?;
            let result = run_gate(&resolved.spec, &bits, &resolved.clock)?;
            let report = GateReport::new(&result, &resolved)?;
            if let Some(path) = waveform.as_ref().or(config.outputs.waveform.as_ref()) {
                export_waveform(path, &result.waveform)?;
            }
            let out = common.out.as_deref().or(config.outputs.report.as_deref());
            emit(out, &to_json(&report)?, stdout)?;
            match expect {
                Some(text) => {
                    let mismatches = check_expectation(&resolved.spec, &[report], &Expectation::parse(&text)?)?;
                    Ok(report_mismatches(&mismatches, stderr))
                }
                None => Ok(EXIT_OK),
            }
        }
        Command::TruthTable { common, name, expect } => {
            let config = load_config(&common)?;
            if config.inputs.is_some() {
                return Err(Error::config(
                    "truth-table runs every input; drop inputs from the config",
                ));
            }
            let resolved = config.resolve_gate(name.as_deref(), common.profile.as_deref())?;
            let rows = truth_table(&resolved.spec, &resolved.clock)?
                .iter()
                .map(|r| GateReport::new(r, &resolved))
                .collect::<Result<Vec<_>>>()?;
            let csv = truth_table_csv(&rows)?;
            match &common.out {
                Some(path) => {
                    write_text(path, &csv)?;
                    let json = config
                        .outputs
                        .report
                        .clone()
                        .unwrap_or_else(|| path.with_extension("json"));
                    write_text(&json, &to_json(&rows)?)?;
                }
                None => {
                    emit(None, &csv, stdout)?;
                    if let Some(json) = &config.outputs.report {
                        write_text(json, &to_json(&rows)?)?;
                    }
                }
            }
            match expect {
                Some(text) => {
                    let mismatches = check_expectation(&resolved.spec, &rows, &Expectation::parse(&text)?)?;
                    Ok(report_mismatches(&mismatches, stderr))
                }
                None => Ok(EXIT_OK),
            }
        }
        Command::Calibrate {
            common,
            seed,
            budget,
            profile_out,
        } => {
            let mut problem: CalibrationProblem = match &common.config {
                Some(path) => read_json(path)?,
                None => published_problem(&seed_family(), DEFAULT_BUDGET, DEFAULT_SEED),
            };
            if let Some(seed) = seed {
                problem.rng_seed = seed;
            }
            if let Some(budget) = budget {
                problem.budget = budget;
            }
            problem.validate().map_err(|e| Error::config(e.to_string()))?;
            let result = calibrate(&problem)?;
            emit(common.out.as_deref(), &to_json(&result)?, stdout)?;
            if let Some(path) = profile_out {
                let mut book = ProfileBook::shipped();
                book.families.insert(SEED_FAMILY.to_string(), seed_family());
                book.families.insert(CALIBRATED_FAMILY.to_string(), result.family());
                write_text(&path, &to_json(&book)?)?;
            }
            if result.infeasible {
                let _ = writeln!(
                    stderr,
                    "calibration did not reach residual 0 (best {:e} after {} evaluations)",
                    result.residual, result.evaluations
                );
                return Ok(EXIT_FAILED);
            }
            Ok(EXIT_OK)
        }
        Command::RulesCheck { common, seed, draws } => {
            let config = load_config(&common)?;
            let book = config.profile_book()?;
            let families: Vec<_> = book.families.iter().map(|(k, f)| (k.as_str(), f)).collect();
            let report = run_rules(seed, draws, &families)?;
            for c in &report.checks {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                let _ = writeln!(stderr, "{status} {} ({} cases, {} failed)", c.name, c.cases, c.failed);
            }
            emit(common.out.as_deref(), &to_json(&report)?, stdout)?;
            Ok(if report.passed() { EXIT_OK } else { EXIT_FAILED })
        }
    }
}
