use spikelogic::calibration::{calibrate, loss, published_problem, CalibrationProblem};
use spikelogic::profiles::{seed_family, ProfileBook, CALIBRATED_FAMILY};

fn published_problem_with(budget: u64) -> CalibrationProblem {
    published_problem(&seed_family(), budget, 42)
}

#[test]
fn recalibration_reproduces_shipped_profile() {
    let result = calibrate(&published_problem_with(100_000)).unwrap();
    assert_eq!(result.residual, 0.0);
    assert!(!result.infeasible);
    assert!(result.evaluations <= 100_000);
    assert!(result.constraints.iter().all(|c| c.satisfied));
    let shipped = ProfileBook::shipped();
    assert_eq!(&result.family(), shipped.family(CALIBRATED_FAMILY).unwrap());
}

#[test]
fn same_seed_same_result() {
    let a = calibrate(&published_problem_with(3_000)).unwrap();
    let b = calibrate(&published_problem_with(3_000)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn never_worse_than_seed() {
    let problem = published_problem_with(2_000);
    let result = calibrate(&problem).unwrap();
    assert!(result.evaluations <= problem.budget);
    for (key, block) in result.profiles.iter() {
        let seed_only = CalibrationProblem {
            constraints: problem
                .constraints
                .iter()
                .filter(|c| spikelogic::sequencer::profile_key(&c.gate) == key)
                .cloned()
                .collect(),
            ..problem.clone()
        };
        let seeded = loss(&problem.profiles, &seed_only, false);
        let fitted = loss(
            &result.profiles.iter().map(|(k, e)| (k.clone(), e.params)).collect(),
            &seed_only,
            block.inter_input_return,
        );
        assert!(fitted <= seeded, "{key}: {fitted} > {seeded}");
    }
}

#[test]
fn uniform_weight_scaling_keeps_trajectory() {
    let problem = published_problem_with(2_000);
    let mut scaled = problem.clone();
    for c in &mut scaled.constraints {
        c.weight *= 8.0;
    }
    let a = calibrate(&problem).unwrap();
    let b = calibrate(&scaled).unwrap();
    assert_eq!(a.profiles, b.profiles);
    assert_eq!(a.evaluations, b.evaluations);
    assert_eq!(a.residual * 8.0, b.residual);
}

#[test]
fn problem_serialises() {
    let problem = published_problem_with(10);
    let text = serde_json::to_string(&problem).unwrap();
    let back: CalibrationProblem = serde_json::from_str(&text).unwrap();
    assert_eq!(back, problem);
}
