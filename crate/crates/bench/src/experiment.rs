//! Running configs and emitting their trajectories.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use sfp_core::mappings::{average, fixed_point_residual};
use sfp_core::solver::{f_value, grad_f, run, RunError, RunHistory, Termination, Variant};
use sfp_core::{SfpProblem, Vector};

use crate::config::{ConfigError, ProblemConfig, ProblemDef, Resolved};

pub const EXIT_RESIDUAL_MET: i32 = 0;
pub const EXIT_MAX_ITER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("rejected input: {0}")]
    Input(#[from] sfp_core::Error),
    #[error("iterates diverged at step {step} (norm {norm:e})")]
    Diverged {
        step: usize,
        norm: f64,
        /// Rows up to and including the diverged iterate.
        partial: Box<ExperimentResult>,
    },
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Input(_) => EXIT_CONFIG,
            Self::Diverged { .. } => EXIT_DIVERGED,
            Self::Io { .. } => EXIT_IO,
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

/// Diagnostics of one iterate. `theta_n` and `tau_n` belong to the step that
/// produced the iterate and are absent for the start point.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub theta_n: Option<f64>,
    pub tau_n: Option<f64>,
    pub res_c: f64,
    pub res_q: f64,
    pub res_fix: f64,
    /// `‖xₙ − x*‖∞` when a solution is known.
    pub err_to_solution: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub name: String,
    pub fingerprint: String,
    pub history: RunHistory,
    pub rows: Vec<CsvRow>,
    pub final_error: Option<f64>,
    pub termination: Termination,
    pub wall_time: Duration,
}

impl ExperimentResult {
    pub fn exit_code(&self) -> i32 {
        match self.termination {
            Termination::ResidualMet | Termination::GradZero => EXIT_RESIDUAL_MET,
            Termination::MaxIter => EXIT_MAX_ITER,
        }
    }

    pub fn iterations(&self) -> usize {
        self.history.steps()
    }

    pub fn trajectory(&self) -> &[Vector] {
        &self.history.iterates
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: {} after {} iterations",
            self.name,
            self.termination.name(),
            self.iterations()
        );
        if let Some(e) = self.final_error {
            let _ = write!(s, ", error {e:.3e}");
        }
        let last = self.rows.last().expect("at least the start row");
        let _ = write!(
            s,
            ", f {:.3e}, res_C {:.3e}, res_Q {:.3e}, res_fix {:.3e} [{}]",
            last.f, last.res_c, last.res_q, last.res_fix, &self.fingerprint[..12]
        );
        s
    }
}

/// Builds one row per iterate of `history`.
pub fn csv_rows(
    problem: &SfpProblem,
    lambda: f64,
    history: &RunHistory,
) -> Result<Vec<CsvRow>, sfp_core::Error> {
    let averaged = problem.s().map(|s| average(s, lambda)).transpose()?;
    let solution = problem.known_solution();
    history
        .iterates
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let ax = problem.a().apply(x)?;
            let record = k.checked_sub(1).and_then(|i| history.records.get(i));
            Ok(CsvRow {
                n: k,
                x: x.as_slice().to_vec(),
                f: f_value(problem, x)?,
                grad_norm: grad_f(problem, x)?.norm(),
                theta_n: record.map(|r| r.theta_n),
                tau_n: record.map(|r| r.tau_n),
                res_c: problem.c().membership_residual(x)?,
                res_q: problem.q().membership_residual(&ax)?,
                res_fix: match &averaged {
                    Some(t) => fixed_point_residual(t, x)?,
                    None => 0.0,
                },
                err_to_solution: solution.map(|s| (x - s).norm_inf()),
            })
        })
        .collect()
}

/// Runs a config without touching the filesystem.
pub fn execute(config: &ProblemConfig) -> Result<ExperimentResult, HarnessError> {
    let Resolved {
        problem,
        schedule,
        stepper,
        x0,
        x1,
    } = config.resolve()?;
    let lambda = match stepper.variant {
        Variant::Viscosity => 1.0,
        _ => schedule.lambda,
    };
    let start = Instant::now();
    let outcome = run(&problem, &schedule, &stepper, &x0, &x1);
    let wall_time = start.elapsed();
    let assemble = |history: RunHistory| -> Result<ExperimentResult, HarnessError> {
        let rows = csv_rows(&problem, lambda, &history)?;
        Ok(ExperimentResult {
            name: config.name.clone(),
            fingerprint: config.fingerprint(),
            final_error: rows.last().and_then(|r| r.err_to_solution),
            termination: history.termination,
            rows,
            history,
            wall_time,
        })
    };
    match outcome {
        Ok(history) => assemble(history),
        Err(RunError::Input(e)) => Err(e.into()),
        Err(RunError::Diverged {
            step,
            norm,
            history,
        }) => Err(HarnessError::Diverged {
            step,
            norm,
            partial: Box::new(assemble(*history)?),
        }),
    }
}

/// Paths the config's outputs resolve to under `out_dir`.
pub fn output_paths(config: &ProblemConfig, out_dir: &Path) -> (PathBuf, Option<PathBuf>) {
    let csv = config
        .output
        .csv
        .clone()
        .unwrap_or_else(|| format!("{}.csv", config.name));
    (out_dir.join(csv), config.output.svg.as_ref().map(|s| out_dir.join(s)))
}

/// Runs a config and writes its CSV (and SVG when configured) under
/// `out_dir`. A diverged run still writes the rows it produced.
pub fn run_experiment(
    config: &ProblemConfig,
    out_dir: &Path,
) -> Result<ExperimentResult, HarnessError> {
    let (csv_path, svg_path) = output_paths(config, out_dir);
    let write_all = |result: &ExperimentResult| -> Result<(), HarnessError> {
        emit_csv(result, &csv_path)?;
        if let Some(svg) = &svg_path {
            emit_svg(result, svg)?;
        }
        Ok(())
    };
    match execute(config) {
        Ok(result) => {
            write_all(&result)?;
            Ok(result)
        }
        Err(HarnessError::Diverged {
            step,
            norm,
            partial,
        }) => {
            write_all(&partial)?;
            Err(HarnessError::Diverged {
                step,
                norm,
                partial,
            })
        }
        Err(e) => Err(e),
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_default()
}

pub fn csv_header(dim: usize) -> String {
    let xs: Vec<String> = (1..=dim).map(|i| format!("x{i}")).collect();
    format!(
        "n,{},f,grad_norm,theta_n,tau_n,res_C,res_Q,res_fix,err_to_solution",
        xs.join(",")
    )
}

pub fn render_csv(rows: &[CsvRow]) -> String {
    let dim = rows.first().map_or(0, |r| r.x.len());
    let mut out = csv_header(dim);
    out.push('\n');
    for r in rows {
        let mut fields = vec![r.n.to_string()];
        fields.extend(r.x.iter().map(|&v| format_f64(v)));
        fields.extend([
            format_f64(r.f),
            format_f64(r.grad_norm),
            opt(r.theta_n),
            opt(r.tau_n),
            format_f64(r.res_c),
            format_f64(r.res_q),
            format_f64(r.res_fix),
            opt(r.err_to_solution),
        ]);
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<(), HarnessError> {
    write_file(path, &render_csv(&result.rows))
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Reads the iterate columns `x1..xN` of a trajectory CSV, keyed by `n`.
pub fn read_trajectory_csv(text: &str) -> Result<Vec<(usize, Vec<f64>)>, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    if header.first().map(|h| h.trim()) != Some("n") {
        return Err("first column must be n".into());
    }
    let x_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| {
            let h = h.trim();
            h.len() > 1 && h.starts_with('x') && h[1..].chars().all(|c| c.is_ascii_digit())
        })
        .map(|(i, _)| i)
        .collect();
    if x_cols.is_empty() {
        return Err("no x1..xN columns".into());
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            let parse = |col: usize| -> Result<f64, String> {
                fields
                    .get(col)
                    .ok_or_else(|| format!("row {}: missing column {col}", i + 1))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| format!("row {}: {e}", i + 1))
            };
            let n = fields[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| format!("row {}: bad n: {e}", i + 1))?;
            let x = x_cols.iter().map(|&c| parse(c)).collect::<Result<_, _>>()?;
            Ok((n, x))
        })
        .collect()
}

/// Log-scale convergence curve of `err_to_solution`, or of the largest
/// residual when no solution is known.
pub fn render_svg(rows: &[CsvRow]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 40.0;
    let values: Vec<f64> = rows
        .iter()
        .map(|r| {
            r.err_to_solution
                .unwrap_or_else(|| r.res_c.max(r.res_q).max(r.res_fix))
                .max(1e-17)
                .log10()
        })
        .collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    let span = (hi - lo).max(1.0);
    let last_n = (rows.len().max(2) - 1) as f64;
    let points: Vec<String> = values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            let px = PAD + (W - 2.0 * PAD) * k as f64 / last_n;
            let py = PAD + (H - 2.0 * PAD) * (hi - v) / span;
            format!("{px:.2},{py:.2}")
        })
        .collect();
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<line x1=\"{p}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
            "<line x1=\"{p}\" y1=\"{p}\" x2=\"{p}\" y2=\"{b}\" stroke=\"black\"/>\n",
            "<text x=\"{p}\" y=\"{tt}\" font-size=\"12\">1e{hi}</text>\n",
            "<text x=\"{p}\" y=\"{tb}\" font-size=\"12\">1e{lo}</text>\n",
            "<text x=\"{r}\" y=\"{tb}\" font-size=\"12\" text-anchor=\"end\">n = {n}</text>\n",
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = W,
        h = H,
        p = PAD,
        r = W - PAD,
        b = H - PAD,
        tt = PAD - 8.0,
        tb = H - PAD + 16.0,
        hi = hi,
        lo = lo,
        n = rows.len().saturating_sub(1),
        pts = points.join(" "),
    )
}

pub fn emit_svg(result: &ExperimentResult, path: &Path) -> Result<(), HarnessError> {
    write_file(path, &render_svg(&result.rows))
}

/// Reads and parses a config file; unreadable files are I/O errors.
pub fn load_config(path: &Path) -> Result<ProblemConfig, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(ProblemConfig::parse(&text)?)
}

/// Replaces the seed of a randomly generated problem.
pub fn override_seed(config: &mut ProblemConfig, seed: u64) {
    if let ProblemDef::Random { seed: s, .. } = &mut config.problem {
        *s = seed;
    }
}

pub type SweepEntry = (PathBuf, Result<ExperimentResult, HarnessError>);

/// Runs every `*.toml` config in `dir` concurrently, in file-name order.
pub fn sweep(dir: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Vec<SweepEntry>, HarnessError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| HarnessError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    let results = std::thread::scope(|scope| {
        let handles: Vec<_> = paths
            .iter()
            .map(|path| {
                scope.spawn(move || {
                    let mut config = load_config(path)?;
                    if let Some(seed) = seed {
                        override_seed(&mut config, seed);
                    }
                    run_experiment(&config, out_dir)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("experiment thread panicked"))
            .collect::<Vec<_>>()
    });
    Ok(paths.into_iter().zip(results).collect())
}
