use spikelogic::adder::{decode_input_order, negative_flags, FlagScope, OrderClass, RangeTable};
use spikelogic::device::{DeviceParams, NULL_EPS};
use spikelogic::encoding::{LogicScheme, ResponseWindow, SchemeKind};
use spikelogic::profiles::{seed_family, ProfileBook, ProfileFamily, CALIBRATED_FAMILY};
use spikelogic::sequencer::{
    all_inputs, builtin_gate, or_readout, or_rule, run_gate, truth_table, zeroed_after, ClockConfig, DecodeRule,
};

fn calibrated() -> ProfileFamily {
    ProfileBook::shipped().family(CALIBRATED_FAMILY).unwrap().clone()
}

fn bits(s: &str) -> Vec<bool> {
    s.chars().map(|c| c == '1').collect()
}

#[test]
fn truth_table_rows_match_standalone_runs() {
    let family = calibrated();
    for name in ["not", "and", "or-readout", "full-adder"] {
        let (gate, clock) = family.gate(name, 1.0).unwrap();
        let table = truth_table(&gate, &clock).unwrap();
        for (row, inputs) in table.iter().zip(all_inputs(gate.arity)) {
            assert_eq!(row, &run_gate(&gate, &inputs, &clock).unwrap());
        }
    }
}

#[test]
fn extrema_sign_invariant() {
    let family = calibrated();
    for name in ["not", "and", "full-adder"] {
        let (gate, clock) = family.gate(name, 1.0).unwrap();
        for run in truth_table(&gate, &clock).unwrap() {
            assert!(run.max_pos >= 0.0 && run.min_neg <= 0.0);
        }
    }
}

#[test]
fn not_gate_inverts_under_seed() {
    let gate = builtin_gate("not", DeviceParams::seed()).unwrap();
    let one = run_gate(&gate, &[true], &ClockConfig::default()).unwrap();
    assert!(one.waveform[1].i_spike < 0.0);
    assert_eq!(one.decoded["out"], 0);
    let zero = run_gate(&gate, &[false], &ClockConfig::default()).unwrap();
    assert!(zero.waveform[1].i_spike > 0.0);
    assert_eq!(zero.decoded["out"], 1);
}

#[test]
fn and_only_fires_on_both_ones() {
    let (gate, clock) = calibrated().gate("and", 1.0).unwrap();
    let ones: Vec<Vec<bool>> = truth_table(&gate, &clock)
        .unwrap()
        .into_iter()
        .filter(|r| r.decoded["out"] == 1)
        .map(|r| r.inputs)
        .collect();
    assert_eq!(ones, vec![vec![true, true]]);
}

#[test]
fn or_readout_from_and_runs() {
    let (gate, clock) = calibrated().gate("and", 1.0).unwrap();
    for inputs in all_inputs(2) {
        let run = run_gate(&gate, &inputs, &clock).unwrap();
        assert_eq!(or_readout(&run, &or_rule()).unwrap(), inputs.iter().any(|&b| b));
    }
}

#[test]
fn and_is_order_sensitive_but_decodes_symmetrically() {
    for family in [seed_family(), calibrated()] {
        let (gate, clock) = family.gate("and", 1.0).unwrap();
        let a = run_gate(&gate, &bits("10"), &clock).unwrap();
        let b = run_gate(&gate, &bits("01"), &clock).unwrap();
        assert!(a.max_pos != b.max_pos || a.min_neg != b.min_neg);
        assert_ne!(a.waveform, b.waveform);
        assert_eq!(a.decoded, b.decoded);
    }
}

#[test]
fn and_response_only_window_variant() {
    let (mut gate, clock) = calibrated().gate("and", 1.0).unwrap();
    gate.response_window = ResponseWindow::ResponseOnly;
    if let DecodeRule::Threshold(rule) = &mut gate.decode {
        rule.window = ResponseWindow::ResponseOnly;
    }
    for inputs in all_inputs(2) {
        let run = run_gate(&gate, &inputs, &clock).unwrap();
        assert_eq!(run.window, 2..3);
        assert_eq!(run.max_pos, run.waveform[2].i_spike.max(0.0));
    }
}

#[test]
fn magnitude_logic_energy_ordering() {
    // Both levels positive: more high inputs leave more charge to bounce back.
    let mut gate = builtin_gate("and", DeviceParams::seed()).unwrap();
    gate.scheme = LogicScheme::new(SchemeKind::Magnitude, 0.5, 0.05).unwrap();
    gate.response_window = ResponseWindow::FromResponse;
    let bounce = |s: &str| {
        run_gate(&gate, &bits(s), &ClockConfig::default())
            .unwrap()
            .min_neg
            .abs()
    };
    assert!(bounce("11") > bounce("10"));
    assert!(bounce("10") >= bounce("00"));
}

#[test]
fn calibrated_runs_zero_out() {
    let family = calibrated();
    for name in ["not", "and", "full-adder"] {
        let (gate, clock) = family.gate(name, 1.0).unwrap();
        for run in truth_table(&gate, &clock).unwrap() {
            let rest = zeroed_after(&run, &gate.params, &clock).unwrap();
            assert!(rest.is_null(&gate.params, NULL_EPS), "{name} {:?}", run.inputs);
        }
    }
}

#[test]
fn seed_fatigue_outlasts_the_zeroing_rest() {
    let gate = builtin_gate("full-adder", DeviceParams::seed()).unwrap();
    let run = run_gate(&gate, &bits("111"), &ClockConfig::default()).unwrap();
    let rest = zeroed_after(&run, &gate.params, &ClockConfig::default()).unwrap();
    assert!(rest.q.abs() < NULL_EPS);
    assert!(rest.d > NULL_EPS);
}

#[test]
fn full_adder_adds_under_calibrated_profile() {
    let (gate, clock) = calibrated().gate("full-adder", 1.0).unwrap();
    for inputs in all_inputs(3) {
        let run = run_gate(&gate, &inputs, &clock).unwrap();
        let n = inputs.iter().filter(|&&b| b).count() as u32;
        assert_eq!(run.decoded["value"], n);
        assert_eq!(run.decoded["sum"], n % 2);
        assert_eq!(run.decoded["carry"], n / 2);
        assert_eq!(run.decoded["has_one"], u32::from(n >= 1));
        assert_eq!(run.decoded["carry_flag"], u32::from(n >= 2));
        assert_eq!(run.decoded["has_zero"], u32::from(n <= 2));
        assert_eq!(run.decoded["consistent"], 1);
        assert_eq!(run.waveform.len(), 7);
    }
}

#[test]
fn whole_window_flag_scope_is_infeasible() {
    // With every record feeding has_one/carry, the (0,0,0) read spike is
    // 0.3 of the forward spike, so a has_one-range forward spike always
    // puts the read spike in the carry range.
    let family = calibrated();
    let (gate, clock) = family.gate("full-adder", 1.0).unwrap();
    let run = run_gate(&gate, &bits("000"), &clock).unwrap();
    let strict = RangeTable {
        flag_scope: FlagScope::Window,
        ..RangeTable::default()
    };
    assert!(!negative_flags(&run, &RangeTable::default()).carry);
    let one = run_gate(&gate, &bits("100"), &clock).unwrap();
    let forward = one.waveform[0].i_spike;
    assert!(forward <= -17.5e-9);
    let read = run.waveform[run.t1_index + 1].i_spike;
    assert!(read <= -5e-9);
    assert!(negative_flags(&run, &strict).carry);
}

#[test]
fn input_order_recovered_from_t2() {
    let family = calibrated();
    let cells = family.order_cells.as_ref().unwrap();
    let (gate, clock) = family.gate("full-adder", 1.0).unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for inputs in all_inputs(3) {
        let run = run_gate(&gate, &inputs, &clock).unwrap();
        let triple = [inputs[0], inputs[1], inputs[2]];
        let class = decode_input_order(run.response_spike(1).unwrap(), cells);
        assert_eq!(class, OrderClass::of(triple));
        assert!(seen.insert((run.decoded["value"], class)));
    }
    assert_eq!(decode_input_order(1.0, cells), OrderClass::Undecidable);
}

#[test]
fn seed_t2_spikes_separate_minority_positions() {
    let gate = builtin_gate("full-adder", DeviceParams::seed()).unwrap();
    let t2 = |s: &str| {
        run_gate(&gate, &bits(s), &ClockConfig::default())
            .unwrap()
            .response_spike(1)
            .unwrap()
    };
    assert_ne!(t2("100"), t2("001"));
    assert_ne!(t2("011"), t2("110"));
}
