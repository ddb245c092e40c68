//! Browser bindings. Each export returns a JSON string; the `*_json`
//! functions hold the logic so they can be exercised natively.

use serde_json::{json, Value};
use wasm_bindgen::prelude::wasm_bindgen;

use sfp_bench::config::{ProblemConfig, SequenceDef};
use sfp_bench::problems::{generate_random_sfp, s4_solution, SetFamily};
use sfp_core::mappings::{average, estimate_demicontractive_modulus, verify_quasi_nonexpansive};
use sfp_core::sets::SetKind;
use sfp_core::solver::{
    f_value, run, CompositionMode, ParameterSchedule, RunError, RunHistory, StepperConfig,
    Stopping, Variant,
};
use sfp_core::{DomainSampler, MappingSpec, SelfMap, Vector};

const MAX_DEMO_ITER: usize = 5000;

fn error(message: impl ToString) -> Value {
    json!({ "error": message.to_string() })
}

fn history_of(outcome: Result<RunHistory, RunError>) -> Result<RunHistory, String> {
    match outcome {
        Ok(h) => Ok(h),
        Err(RunError::Diverged { history, .. }) => Ok(*history),
        Err(RunError::Input(e)) => Err(e.to_string()),
    }
}

/// Runs the 5×5 linear-system instance from `(1,1,1,1,1)` with a preset and
/// optional overrides of `δ`, `λ` and `θ` (ignored when negative).
pub fn solve_linear_system_json(
    preset: &str,
    mode: &str,
    max_iter: usize,
    delta: f64,
    lambda: f64,
    theta: f64,
) -> Value {
    let mode = match CompositionMode::from_name(mode) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    let mut config = ProblemConfig::example_s4(preset, mode);
    config.stepper.max_iter = max_iter.clamp(1, MAX_DEMO_ITER);
    if delta >= 0.0 {
        config.schedule.delta = Some(SequenceDef::Constant { value: delta });
    }
    if lambda >= 0.0 {
        config.schedule.lambda = Some(lambda);
    }
    if theta >= 0.0 {
        config.schedule.theta = Some(theta);
    }
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => return error(e),
    };
    let history = match history_of(run(
        &resolved.problem,
        &resolved.schedule,
        &resolved.stepper,
        &resolved.x0,
        &resolved.x1,
    )) {
        Ok(h) => h,
        Err(e) => return error(e),
    };
    let target = s4_solution();
    let errors: Vec<f64> = history
        .iterates
        .iter()
        .map(|x| (x - &target).norm_inf())
        .collect();
    json!({
        "iterates": history.iterates.iter().map(|x| x.as_slice().to_vec()).collect::<Vec<_>>(),
        "errors": errors,
        "termination": history.termination.name(),
        "first_within_1e-6": history.first_within(&target, 1e-6),
        "warnings": history.warnings,
    })
}

/// The one-dimensional demicontractive example next to its average `S_λ`,
/// with sampled class diagnostics over a grid of `[0, 1]`.
pub fn explore_mapping_json(lambda: f64, points: usize) -> Value {
    let t = MappingSpec::example_2_2();
    let averaged = match average(&t, lambda) {
        Ok(a) => a,
        Err(e) => return error(e),
    };
    let star = Vector::filled(1, 7.0 / 8.0);
    let grid = DomainSampler::Grid1D {
        lo: 0.0,
        hi: 1.0,
        step: 1e-4,
    };
    let k = estimate_demicontractive_modulus(&t, &star, &grid, 0, 0);
    let slack_t = verify_quasi_nonexpansive(&t, &star, &grid, 0, 0);
    let slack_avg = verify_quasi_nonexpansive(&averaged, &star, &grid, 0, 0);
    let (k, slack_t, slack_avg) = match (k, slack_t, slack_avg) {
        (Ok(k), Ok(a), Ok(b)) => (k, a, b),
        _ => return error("7/8 is not a fixed point"),
    };
    let points = points.clamp(2, 2001);
    let xs: Vec<f64> = (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect();
    let eval = |m: &dyn SelfMap, x: f64| m.eval(&Vector::filled(1, x))[0];
    json!({
        "x": xs,
        "t": xs.iter().map(|&x| eval(&t, x)).collect::<Vec<_>>(),
        "averaged": xs.iter().map(|&x| eval(&averaged, x)).collect::<Vec<_>>(),
        "fixed_point": 7.0 / 8.0,
        "modulus": k,
        "lambda": lambda,
        "quasi_nonexpansive_bound": 1.0 - k,
        "slack_t": slack_t.max_slack,
        "slack_t_witness": slack_t.witness.map(|w| w[0]),
        "slack_averaged": slack_avg.max_slack,
    })
}

/// A random planar instance (`A` is 2×2) solved by the general iteration
/// and by the adaptive CQ method, with the set `C` described for drawing.
pub fn random_planar_json(family: &str, seed: u64, preset: &str, mode: &str, max_iter: usize) -> Value {
    let Some(family) = SetFamily::from_name(family) else {
        return error(format!("unknown family {family:?}"));
    };
    let problem = match generate_random_sfp(2, 2, family, seed) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let schedule = match ParameterSchedule::preset(preset) {
        Ok(s) => s,
        Err(e) => return error(e),
    };
    let mode = match CompositionMode::from_name(mode) {
        Ok(m) => m,
        Err(e) => return error(e),
    };
    let stopping = Stopping {
        max_iter: max_iter.clamp(1, MAX_DEMO_ITER),
        ..Stopping::default()
    };
    let start = Vector::filled(2, 3.0);
    let mut runs = Vec::new();
    for (label, schedule, config) in [
        ("general", schedule, StepperConfig::algorithm1(mode).with_stopping(stopping)),
        (
            "cq",
            ParameterSchedule::cq(),
            StepperConfig::default()
                .with_variant(Variant::CqAdaptive)
                .with_stopping(stopping),
        ),
    ] {
        let history = match history_of(run(&problem, &schedule, &config, &start, &start)) {
            Ok(h) => h,
            Err(e) => return error(e),
        };
        let f: Vec<f64> = history
            .iterates
            .iter()
            .map(|x| f_value(&problem, x).unwrap_or(f64::NAN))
            .collect();
        runs.push(json!({
            "label": label,
            "iterates": history.iterates.iter().map(|x| x.as_slice().to_vec()).collect::<Vec<_>>(),
            "f": f,
            "termination": history.termination.name(),
        }));
    }
    let c = match problem.c().kind() {
        SetKind::Box { lower, upper } => {
            json!({ "kind": "box", "lower": lower.as_slice(), "upper": upper.as_slice() })
        }
        SetKind::Ball { center, radius } => {
            json!({ "kind": "ball", "center": center.as_slice(), "radius": radius })
        }
        SetKind::Halfspace { normal, offset } => {
            json!({ "kind": "halfspace", "normal": normal.as_slice(), "offset": offset })
        }
        _ => json!({ "kind": problem.c().kind_name() }),
    };
    json!({
        "c": c,
        "planted": problem.known_solution().map(|x| x.as_slice().to_vec()),
        "runs": runs,
    })
}

#[wasm_bindgen]
pub fn solve_linear_system(
    preset: &str,
    mode: &str,
    max_iter: usize,
    delta: f64,
    lambda: f64,
    theta: f64,
) -> String {
    solve_linear_system_json(preset, mode, max_iter, delta, lambda, theta).to_string()
}

#[wasm_bindgen]
pub fn explore_mapping(lambda: f64, points: usize) -> String {
    explore_mapping_json(lambda, points).to_string()
}

#[wasm_bindgen]
pub fn random_planar(family: &str, seed: u64, preset: &str, mode: &str, max_iter: usize) -> String {
    random_planar_json(family, seed, preset, mode, max_iter).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_system_converges_with_unanchored_preset() {
        let out = solve_linear_system_json("unanchored", "proof", 1000, -1.0, -1.0, -1.0);
        assert_eq!(out["termination"], "residual_met");
        assert!(out["first_within_1e-6"].as_u64().unwrap() <= 1000);
        let errors = out["errors"].as_array().unwrap();
        assert_eq!(errors.len(), out["iterates"].as_array().unwrap().len());
    }

    #[test]
    fn linear_system_overrides_and_errors() {
        let out = solve_linear_system_json("paper-s4", "explore", 3, 0.25, 0.9, 0.0);
        assert_eq!(out["iterates"].as_array().unwrap().len(), 4);
        assert!(solve_linear_system_json("paper-s4", "nope", 3, -1.0, -1.0, -1.0)["error"].is_string());
        assert!(solve_linear_system_json("paper-s4", "proof", 3, 1.5, -1.0, -1.0)["error"].is_string());
    }

    #[test]
    fn mapping_explorer_reports_modulus_and_slacks() {
        let out = explore_mapping_json(0.25, 11);
        assert!((out["modulus"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-3);
        assert_eq!(out["slack_t"].as_f64().unwrap(), 0.5);
        assert_eq!(out["slack_t_witness"].as_f64().unwrap(), 1.0);
        assert!(out["slack_averaged"].as_f64().unwrap() <= 1e-10);
        assert_eq!(out["averaged"][10].as_f64().unwrap(), 0.8125);
        assert!(explore_mapping_json(0.0, 11)["error"].is_string());
    }

    #[test]
    fn planar_runs_for_every_family() {
        for family in ["box", "ball", "halfspace"] {
            let out = random_planar_json(family, 4, "paper-s4", "proof", 200);
            assert_eq!(out["c"]["kind"], family);
            assert_eq!(out["runs"].as_array().unwrap().len(), 2);
            let cq_f = out["runs"][1]["f"].as_array().unwrap();
            assert!(cq_f.last().unwrap().as_f64().unwrap() <= 1e-10);
        }
        assert!(random_planar_json("cube", 4, "paper-s4", "proof", 10)["error"].is_string());
    }

    #[test]
    fn exports_return_json_text() {
        let text = explore_mapping(0.5, 3);
        let parsed: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["x"].as_array().unwrap().len(), 3);
    }
}
