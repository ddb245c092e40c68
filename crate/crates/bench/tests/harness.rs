use std::fs;
use std::path::Path;
use std::process::Command;

use sfp_bench::config::ProblemConfig;
use sfp_bench::experiment::{execute, render_csv, run_experiment, HarnessError};
use sfp_bench::problems::{build_example_s4, generate_random_sfp, s4_solution, SetFamily};
use sfp_core::solver::{
    f_value, run, CompositionMode, ParameterSchedule, Stepper, StepperConfig, Stopping,
    Termination, Variant,
};
use sfp_core::Vector;

const S4_UNANCHORED: &str = r#"
name = "s4"
[problem]
source = "example-s4"
[schedule]
preset = "unanchored"
[stepper]
max_iter = 1000
"#;

const DIVERGING: &str = r#"
name = "blowup"
[problem]
source = "explicit"
a = [[1.0]]
c = { kind = "whole_space", dim = 1 }
q = { kind = "singleton", point = [0.0] }
[schedule]
preset = "cq"
[stepper]
step = 10.0
"#;

fn sfp(out_dir: &Path, args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_sfp"))
        .args(args)
        .env("SFP_OUT_DIR", out_dir)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn exit_code_residual_met() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s4.toml", S4_UNANCHORED);
    let (code, stdout, _) = sfp(dir.path(), &["run", &cfg]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("residual_met"));
    assert!(dir.path().join("s4.csv").exists());
}

#[test]
fn exit_code_max_iter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "short.toml",
        &S4_UNANCHORED.replace("max_iter = 1000", "max_iter = 3"),
    );
    let (code, stdout, _) = sfp(dir.path(), &["run", &cfg]);
    assert_eq!(code, 1, "{stdout}");
    let csv = fs::read_to_string(dir.path().join("s4.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4);
}

#[test]
fn exit_code_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = write(dir.path(), "a.toml", &S4_UNANCHORED.replace("max_iter", "max_iters"));
    let (code, _, stderr) = sfp(dir.path(), &["run", &bad_key]);
    assert_eq!(code, 2);
    assert!(stderr.contains("max_iters"), "{stderr}");

    let bad_value = write(dir.path(), "b.toml", &S4_UNANCHORED.replace("unanchored", "nope"));
    let (code, _, stderr) = sfp(dir.path(), &["run", &bad_value]);
    assert_eq!(code, 2);
    assert!(stderr.contains("schedule.preset"), "{stderr}");
}

#[test]
fn exit_code_divergence_writes_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "blowup.toml", DIVERGING);
    let (code, _, stderr) = sfp(dir.path(), &["run", &cfg]);
    assert_eq!(code, 3, "{stderr}");
    let csv = fs::read_to_string(dir.path().join("blowup.csv")).unwrap();
    // x_{n+1} = -9 x_n from x = 1 crosses 1e12 at step 13
    assert_eq!(csv.lines().count(), 1 + 14);
}

#[test]
fn exit_code_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, _) = sfp(dir.path(), &["run", "/nonexistent/config.toml"]);
    assert_eq!(code, 4);

    let cfg = write(dir.path(), "s4.toml", S4_UNANCHORED);
    let blocker = dir.path().join("not-a-dir");
    fs::write(&blocker, "").unwrap();
    let (code, _, stderr) = sfp(&blocker, &["run", &cfg]);
    assert_eq!(code, 4, "{stderr}");
}

#[test]
fn validate_schedule_reports_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s4.toml", &S4_UNANCHORED.replace("unanchored", "paper-s4"));
    let (code, stdout, _) = sfp(dir.path(), &["validate-schedule", &cfg, "--horizon", "1000"]);
    assert_eq!(code, 0, "{stdout}");
    for c in ["c1", "c2", "c3", "c4", "c5"] {
        assert!(stdout.contains(&format!("PASS {c}")), "{stdout}");
    }
    let broken = S4_UNANCHORED.replace(
        "preset = \"unanchored\"",
        "preset = \"unanchored\"\nbeta = { rule = \"constant\", value = 0.9 }\ngamma = { rule = \"constant\", value = 0.9 }",
    );
    let cfg = write(dir.path(), "broken.toml", &broken);
    let (code, stdout, _) = sfp(dir.path(), &["validate-schedule", &cfg, "--horizon", "10"]);
    assert_eq!(code, 2, "{stdout}");
    assert!(stdout.contains("FAIL c5"), "{stdout}");
}

#[test]
fn compare_table1_reads_emitted_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = sfp(
        dir.path(),
        &["example-s4", "--preset", "table-1", "--mode", "explore", "--max-iter", "40"],
    );
    assert_eq!(code, 1, "{stdout}");
    let csv = dir.path().join("example-s4-table-1-explore.csv");
    let (code, stdout, _) = sfp(dir.path(), &["compare-table1", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.contains("n= 0  max_dev=0.000e0  match"), "{stdout}");
    assert!(stdout.contains("n=33"), "{stdout}");
}

#[test]
fn props_and_sweep_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout, _) = sfp(dir.path(), &["props", "--seed", "5", "--samples", "40"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(!stdout.contains("FAIL"));

    let configs = dir.path().join("configs");
    fs::create_dir(&configs).unwrap();
    write(&configs, "a.toml", S4_UNANCHORED);
    write(
        &configs,
        "b.toml",
        "name = \"rand\"\n[problem]\nsource = \"random\"\ndim1 = 4\ndim2 = 3\nfamily = \"ball\"\nseed = 1\n[schedule]\npreset = \"cq\"\n",
    );
    let (code, stdout, _) = sfp(dir.path(), &["sweep", configs.to_str().unwrap(), "--seed", "8"]);
    assert_eq!(code, 0, "{stdout}");
    assert_eq!(stdout.lines().count(), 2);
    assert!(dir.path().join("s4.csv").exists() && dir.path().join("rand.csv").exists());
}

#[test]
fn emitted_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ProblemConfig::parse(
        "name = \"det\"\n[problem]\nsource = \"random\"\ndim1 = 5\ndim2 = 4\nfamily = \"halfspace\"\nseed = 11\n[stepper]\nmax_iter = 200\n",
    )
    .unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let first = fs::read(dir.path().join("det.csv")).unwrap();
    run_experiment(&cfg, dir.path()).unwrap();
    let second = fs::read(dir.path().join("det.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn zero_iteration_history_has_one_row() {
    let problem = build_example_s4();
    let history = sfp_core::solver::RunHistory {
        iterates: vec![Vector::filled(5, 1.0)],
        records: vec![],
        termination: Termination::MaxIter,
        warnings: vec![],
    };
    let rows = sfp_bench::experiment::csv_rows(&problem, 0.5, &history).unwrap();
    assert_eq!(render_csv(&rows).lines().count(), 2);
}

#[test]
fn start_at_solution_stops_after_one_step() {
    let mut cfg = ProblemConfig::example_s4("unanchored", CompositionMode::Proof);
    cfg.start.x1 = Some(s4_solution().into_vec());
    let r = execute(&cfg).unwrap();
    assert_eq!(r.termination, Termination::ResidualMet);
    assert_eq!(r.iterations(), 1);
    assert_eq!(r.rows.len(), 2);
}

#[test]
fn cq_reaches_tiny_objective_on_generated_instances() {
    for family in SetFamily::ALL {
        for seed in 0..3 {
            let p = generate_random_sfp(6, 4, family, seed).unwrap();
            let cfg = StepperConfig::default()
                .with_variant(Variant::CqAdaptive)
                .with_stopping(Stopping {
                    max_iter: 20_000,
                    ..Stopping::default()
                });
            let x1 = Vector::filled(6, 3.0);
            let h = run(&p, &ParameterSchedule::cq(), &cfg, &x1, &x1).unwrap();
            let f = f_value(&p, h.final_iterate()).unwrap();
            assert!(f <= 1e-10, "{} seed {seed}: f = {f}", family.name());
        }
    }
}

#[test]
fn anchored_preset_converges_slowly_to_the_solution() {
    // error behaves like 0.61/n, so 1e-6 needs about 6.1e5 steps
    let problem = build_example_s4();
    let schedule = ParameterSchedule::paper_s4();
    let stepper = Stepper::new(&problem, &schedule, StepperConfig::default()).unwrap();
    let target = s4_solution();
    let mut prev = Vector::filled(5, 1.0);
    let mut cur = prev.clone();
    let mut reached = None;
    for n in 1..=800_000 {
        let next = stepper.step(n, &cur, &prev).unwrap().x_next;
        if (&next - &target).norm_inf() <= 1e-6 {
            reached = Some(n);
            break;
        }
        prev = std::mem::replace(&mut cur, next);
    }
    let n = reached.expect("paper-s4 reaches 1e-6");
    assert!(n > 1000, "{n}");
}

#[test]
fn diverged_error_keeps_partial_rows() {
    let cfg = ProblemConfig::parse(DIVERGING).unwrap();
    match execute(&cfg) {
        Err(HarnessError::Diverged { step, partial, .. }) => {
            assert_eq!(step, 13);
            assert_eq!(partial.rows.len(), 14);
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}
