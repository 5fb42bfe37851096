use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use recdiff::export::{
    read_finals_csv, read_path_csv, write_diagnostics_csv, write_mc_finals_csv,
    write_mc_summary_csv, write_path_csv, write_qq_csv, write_trajectory_csv, OutputHeader,
    PathData,
};
use recdiff::model::check_assumption1;
use recdiff::montecarlo::{run_trials, scaled_error_variance, InitRule, MIN_VARIANCE_TRIALS};
use recdiff::rng::GENERATOR;
use recdiff::simulate::simulate;
use recdiff::sum::mean_sd;
use recdiff::theory::{
    condition_sums_constant_drift, diagnostics, ks_normality, qq_pairs, DiagnosticsInput,
    MIN_KS_SAMPLE,
};
use recdiff::{make_grid, DriftSpec, ObservationGrid, RngStream, StepRule};

use crate::config::{Command, RunConfig};
use crate::AppError;

/// Stream used for path simulation in `simulate` and `estimate`.
const PATH_STREAM: u64 = 0;
/// Stream used for the uniform initial value in `estimate`.
const INIT_STREAM: u64 = u64::MAX;

type Out<'a> = &'a mut dyn Write;

pub fn dispatch(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    match config.command {
        Command::Simulate => cmd_simulate(config, out),
        Command::Estimate => cmd_estimate(config, out),
        Command::Montecarlo => cmd_montecarlo(config, out),
        Command::Check => cmd_check(config, out),
        Command::Report => cmd_report(config, out),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Io(format!("{}: {e}", path.display()))
}

fn say(out: Out<'_>, text: std::fmt::Arguments<'_>) -> Result<(), AppError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| AppError::Io(format!("stdout: {e}")))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { say($out, format_args!($($arg)*)) };
}

fn write_artifact<F>(dir: &Path, name: &str, body: F) -> Result<PathBuf, AppError>
where
    F: FnOnce(&mut BufWriter<File>) -> recdiff::Result<()>,
{
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| io_err(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).map_err(|e| match e {
        recdiff::Error::Io(io) => io_err(&path, io),
        other => AppError::from(other),
    })?;
    w.flush().map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn header(config: &RunConfig) -> OutputHeader {
    OutputHeader::new(config.seed, GENERATOR, &config.config_hash())
}

fn describe_grid(out: Out<'_>, grid: &ObservationGrid) -> Result<(), AppError> {
    say!(
        out,
        "grid: n = {}, h = {:.9}, T = {:.6}",
        grid.n(),
        grid.step(),
        grid.horizon()
    )?;
    match check_assumption1(grid) {
        Ok(r) => say!(
            out,
            "horizon growth: epsilon_hat = ln T / ln n = {:.6} -> {}",
            r.epsilon_hat,
            if r.pass {
                "pass (< 1/2)"
            } else {
                "FAIL (>= 1/2)"
            }
        ),
        Err(_) => say!(out, "horizon growth: not assessable for n < 2"),
    }
}

fn cmd_simulate(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    let grid = config.grid()?;
    let path = simulate(
        &grid,
        &config.drift,
        config.beta0,
        config.substeps,
        RngStream::new(config.seed, PATH_STREAM),
    )?;
    describe_grid(out, &grid)?;
    let hdr = header(config);
    let file = write_artifact(&config.out_dir, "path.csv", |w| {
        write_path_csv(w, &path, Some(&hdr))
    })?;
    say!(
        out,
        "drift: {}, beta0 = {}",
        config.drift.name(),
        config.beta0
    )?;
    say!(out, "wrote {}", file.display())
}

fn initial_value(config: &RunConfig) -> f64 {
    match config.init_rule {
        InitRule::Fixed(v) => v,
        InitRule::UniformRelative => {
            let u = RngStream::new(config.seed, INIT_STREAM).rng().uniform() - 0.5;
            config.beta0 + config.beta0 * u
        }
    }
}

fn cmd_estimate(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    let (data, constant_drift) = match &config.input {
        Some(input) => {
            let file = File::open(input).map_err(|e| io_err(input, e))?;
            let step = if config.step_explicit {
                Some(step_for_rows(config, input)?)
            } else {
                None
            };
            let data = read_path_csv(file, step)?;
            let known = if config.drift_explicit {
                config.drift.constant_value()
            } else {
                None
            };
            (data, known)
        }
        None => {
            let grid = config.grid()?;
            let path = simulate(
                &grid,
                &config.drift,
                config.beta0,
                config.substeps,
                RngStream::new(config.seed, PATH_STREAM),
            )?;
            let data = PathData {
                increments: path.increments().clone(),
                drift_integrals: Some(path.drift_integrals().to_vec()),
            };
            (data, config.drift.constant_value())
        }
    };

    let report = diagnostics(DiagnosticsInput {
        increments: &data.increments,
        beta0: config.beta0,
        beta_init: initial_value(config),
        drift_integrals: data.drift_integrals.as_deref(),
        constant_drift,
    })?;

    let mut hdr = header(config);
    if report.linear_stat.is_none() {
        hdr = hdr.with_note("note", "drift integrals unavailable");
    }
    if report.condition_sums.is_none() {
        hdr = hdr.with_note(
            "note",
            "drift not constant or unknown; condition sums omitted",
        );
    }
    let traj = write_artifact(&config.out_dir, "trajectory.csv", |w| {
        write_trajectory_csv(w, &report.trajectory, Some(&header(config)))
    })?;
    let diag = write_artifact(&config.out_dir, "diagnostics.csv", |w| {
        write_diagnostics_csv(w, &report, Some(&hdr))
    })?;

    describe_grid(out, data.increments.grid())?;
    say!(out, "beta_init = {}", report.trajectory.betas()[0])?;
    say!(
        out,
        "recursive estimate beta_n = {}",
        report.trajectory.final_estimate()
    )?;
    say!(out, "qmle = {}", report.qmle)?;
    say!(
        out,
        "equivalence gap sqrt(n)(qmle - beta_n) = {:e}",
        report.equivalence_gap
    )?;
    match report.linear_stat {
        Some(v) => say!(out, "linear statistic = {v}")?,
        None => say!(out, "linear statistic: drift integrals unavailable")?,
    }
    say!(out, "wrote {}", traj.display())?;
    say!(out, "wrote {}", diag.display())
}

// Explicit steps apply as given; an exponent needs the row count first.
fn step_for_rows(config: &RunConfig, input: &Path) -> Result<f64, AppError> {
    match config.step_rule {
        StepRule::Explicit(h) => Ok(h),
        StepRule::Exponent(_) => {
            let file = File::open(input).map_err(|e| io_err(input, e))?;
            let rows = read_path_csv(file, Some(1.0))?.increments.len();
            Ok(make_grid(rows, config.step_rule)?.step())
        }
    }
}

fn cmd_montecarlo(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    let mc = config.montecarlo();
    let summary = run_trials(&mc)?;
    let hdr = OutputHeader::new(mc.master_seed, GENERATOR, &mc.config_hash())
        .with_note("trials", &mc.trials.to_string());
    let dir = &config.out_dir;
    let files = [
        write_artifact(dir, "mc_summary.csv", |w| {
            write_mc_summary_csv(w, &summary, Some(&hdr))
        })?,
        write_artifact(dir, "mc_finals.csv", |w| {
            write_mc_finals_csv(w, &summary, Some(&hdr))
        })?,
        write_artifact(dir, "qq.csv", |w| {
            write_qq_csv(w, &summary.qq_pairs, Some(&hdr))
        })?,
    ];

    let mut text = Vec::new();
    write_report(
        &mut text,
        &ReportInput {
            config,
            grid: summary.grid,
            finals: &summary.final_estimates,
            w_sample: &summary.w_sample,
        },
    )?;
    let report_path = write_artifact(dir, "report.txt", |w| Ok(w.write_all(&text)?))?;
    out.write_all(&text)
        .map_err(|e| AppError::Io(format!("stdout: {e}")))?;
    for f in files.iter().chain(std::iter::once(&report_path)) {
        say!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

struct ReportInput<'a> {
    config: &'a RunConfig,
    grid: ObservationGrid,
    finals: &'a [f64],
    w_sample: &'a [f64],
}

fn write_report(out: Out<'_>, input: &ReportInput<'_>) -> Result<(), AppError> {
    let c = input.config;
    let n = input.grid.n();
    say!(out, "Monte Carlo report")?;
    say!(out, "trials L = {}", input.finals.len())?;
    describe_grid(out, &input.grid)?;
    say!(
        out,
        "model: alpha0 = {}, beta0 = {}, drift = {}, substeps = {}",
        c.alpha0,
        c.beta0,
        c.drift.name(),
        c.substeps
    )?;
    let init = match c.init_rule {
        InitRule::UniformRelative => "uniform beta0 (1 + U), U ~ U(-0.5, 0.5)".to_string(),
        InitRule::Fixed(v) => format!("fixed {v}"),
    };
    say!(out, "initial value: {init}")?;
    say!(out, "seed = {}, generator = {GENERATOR}", c.seed)?;
    let (mean, sd) = mean_sd(input.finals);
    say!(out, "mean_final = {mean:.6}")?;
    say!(
        out,
        "sd_final = {sd:.6} (reference sqrt(2 beta0^2 / n) = {:.6})",
        (2.0 * c.beta0 * c.beta0 / n as f64).sqrt()
    )?;
    let reference = 2.0 * c.beta0 * c.beta0;
    match scaled_error_variance(input.finals, c.beta0, n) {
        Ok(v) => say!(
            out,
            "variance of sqrt(n)(beta_n - beta0) = {v:.6} (reference 2 beta0^2 = {reference:.6}, ratio {:.4})",
            v / reference
        )?,
        Err(_) => say!(out, "variance check: insufficient sample (need L >= {MIN_VARIANCE_TRIALS})")?,
    }
    let (w_mean, w_sd) = mean_sd(input.w_sample);
    say!(out, "W: mean = {w_mean:.6}, variance = {:.6}", w_sd * w_sd)?;
    match ks_normality(input.w_sample) {
        Ok(check) => say!(
            out,
            "KS normality of W: D = {:.6}, p-value = {:.6}",
            check.ks_statistic,
            check.ks_pvalue
        )?,
        Err(_) => say!(
            out,
            "KS normality of W: insufficient sample (need L >= {MIN_KS_SAMPLE})"
        )?,
    }
    let worst = central_qq_deviation(input.w_sample);
    if let Some(d) = worst {
        say!(out, "QQ max |q_emp - q_theo| over central 98%: {d:.6}")?;
    }
    Ok(())
}

/// Largest QQ deviation among plotting positions in `[0.01, 0.99]`.
pub fn central_qq_deviation(sample: &[f64]) -> Option<f64> {
    let len = sample.len() as f64;
    qq_pairs(sample)
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            let p = (*i as f64 + 0.5) / len;
            (0.01..=0.99).contains(&p)
        })
        .map(|(_, (q, x))| (x - q).abs())
        .reduce(f64::max)
}

fn cmd_check(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    let grid = config.grid()?;
    describe_grid(out, &grid)?;
    say!(
        out,
        "condition (i): n / Gamma_n(beta0) = 2 beta0^2 = {}",
        2.0 * config.beta0 * config.beta0
    )?;
    match config.drift {
        DriftSpec::Zero | DriftSpec::Constant { .. } => {
            let alpha = config.drift.constant_value().unwrap_or(0.0);
            let sums = condition_sums_constant_drift(&grid, alpha, config.beta0)?;
            say!(out, "condition (ii) sum = {:.9e}", sums.sum_ii)?;
            say!(out, "condition (iii) sum = {:.9e}", sums.sum_iii)?;
            say!(
                out,
                "h sqrt(n) = {:.9e}",
                grid.step() * (grid.n() as f64).sqrt()
            )
        }
        _ => say!(
            out,
            "condition sums: closed form available only for constant drift"
        ),
    }
}

fn cmd_report(config: &RunConfig, out: Out<'_>) -> Result<(), AppError> {
    let input = config
        .input
        .clone()
        .unwrap_or_else(|| config.out_dir.join("mc_finals.csv"));
    let file = File::open(&input).map_err(|e| io_err(&input, e))?;
    let rows = read_finals_csv(file)?;
    if rows.is_empty() {
        return Err(AppError::Data(format!("{}: no trials", input.display())));
    }
    let finals: Vec<f64> = rows.iter().map(|r| r.beta_final).collect();
    let w_sample: Vec<f64> = rows.iter().map(|r| r.w).collect();
    write_report(
        out,
        &ReportInput {
            config,
            grid: config.grid()?,
            finals: &finals,
            w_sample: &w_sample,
        },
    )
}
