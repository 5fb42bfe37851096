//! CSV artifacts.
//!
//! Floats are written with 17 significant digits in `%.17g` style, `.` as the
//! decimal separator and `\n` line endings. Files may start with `# key=value`
//! comment lines, which readers skip.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::estimate::EstimatorTrajectory;
use crate::model::{IncrementSeries, ObservationGrid};
use crate::montecarlo::MonteCarloSummary;
use crate::simulate::SimulatedPath;
use crate::theory::DiagnosticsReport;

/// Formats `x` like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g17).unwrap_or_default()
}

/// Provenance comment lines at the top of every artifact.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputHeader {
    pub seed: u64,
    pub generator: String,
    pub config_hash: String,
    /// Extra `# key=value` lines after the standard three.
    pub notes: Vec<(String, String)>,
}

impl OutputHeader {
    pub fn new(seed: u64, generator: &str, config_hash: &str) -> Self {
        Self {
            seed,
            generator: generator.to_string(),
            config_hash: config_hash.to_string(),
            notes: Vec::new(),
        }
    }

    pub fn with_note(mut self, key: &str, value: &str) -> Self {
        self.notes.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "# seed={}", self.seed)?;
        writeln!(w, "# generator={}", self.generator)?;
        writeln!(w, "# config_hash={}", self.config_hash)?;
        for (k, v) in &self.notes {
            writeln!(w, "# {k}={v}")?;
        }
        Ok(())
    }
}

fn header<W: Write>(w: &mut W, header: Option<&OutputHeader>) -> Result<()> {
    if let Some(h) = header {
        h.write(w)?;
    }
    Ok(())
}

/// `j,t,x,dx,drift_integral`, rows `j = 0..=n`.
pub fn write_path_csv<W: Write>(
    w: &mut W,
    path: &SimulatedPath,
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(w, "j,t,x,dx,drift_integral")?;
    let grid = path.grid();
    let x = path.x_values();
    writeln!(w, "0,{},{},,", fmt_g17(grid.time(0)), fmt_g17(x[0]))?;
    let dx = path.increments().values();
    for j in 1..=grid.n() {
        writeln!(
            w,
            "{j},{},{},{},{}",
            fmt_g17(grid.time(j)),
            fmt_g17(x[j]),
            fmt_g17(dx[j - 1]),
            fmt_g17(path.drift_integrals()[j - 1])
        )?;
    }
    Ok(())
}

/// `j,beta_hat`, rows `j = 0..=n`.
pub fn write_trajectory_csv<W: Write>(
    w: &mut W,
    trajectory: &EstimatorTrajectory,
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(w, "j,beta_hat")?;
    for (j, b) in trajectory.betas().iter().enumerate() {
        writeln!(w, "{j},{}", fmt_g17(*b))?;
    }
    Ok(())
}

/// `q_theoretical,q_empirical`.
pub fn write_qq_csv<W: Write>(
    w: &mut W,
    pairs: &[(f64, f64)],
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(w, "q_theoretical,q_empirical")?;
    for (q, x) in pairs {
        writeln!(w, "{},{}", fmt_g17(*q), fmt_g17(*x))?;
    }
    Ok(())
}

/// Single-row diagnostics; unavailable quantities are left empty.
pub fn write_diagnostics_csv<W: Write>(
    w: &mut W,
    report: &DiagnosticsReport,
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(
        w,
        "n,h,condition_i,sum_ii,sum_iii,equivalence_gap,linear_stat,qmle"
    )?;
    writeln!(
        w,
        "{},{},{},{},{},{},{},{}",
        report.n,
        fmt_g17(report.h),
        fmt_g17(report.condition_i_value),
        opt(report.condition_sums.map(|s| s.sum_ii)),
        opt(report.condition_sums.map(|s| s.sum_iii)),
        fmt_g17(report.equivalence_gap),
        opt(report.linear_stat),
        fmt_g17(report.qmle)
    )?;
    Ok(())
}

/// `j,mean_beta,sd_beta`, rows `j = 0..=n`.
pub fn write_mc_summary_csv<W: Write>(
    w: &mut W,
    summary: &MonteCarloSummary,
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(w, "j,mean_beta,sd_beta")?;
    for (j, (m, s)) in summary
        .mean_trajectory
        .iter()
        .zip(&summary.sd_trajectory)
        .enumerate()
    {
        writeln!(w, "{j},{},{}", fmt_g17(*m), fmt_g17(*s))?;
    }
    Ok(())
}

/// `trial,beta_init,beta_final,w`, rows `l = 1..=L`.
pub fn write_mc_finals_csv<W: Write>(
    w: &mut W,
    summary: &MonteCarloSummary,
    hdr: Option<&OutputHeader>,
) -> Result<()> {
    header(w, hdr)?;
    writeln!(w, "trial,beta_init,beta_final,w")?;
    for (l, ((init, fin), wv)) in summary
        .initial_values
        .iter()
        .zip(&summary.final_estimates)
        .zip(&summary.w_sample)
        .enumerate()
    {
        writeln!(
            w,
            "{},{},{},{}",
            l + 1,
            fmt_g17(*init),
            fmt_g17(*fin),
            fmt_g17(*wv)
        )?;
    }
    Ok(())
}

/// Increments read back from a path file or external data.
#[derive(Debug, Clone, PartialEq)]
pub struct PathData {
    pub increments: IncrementSeries,
    /// Present when the file carries a fully populated `drift_integral` column.
    pub drift_integrals: Option<Vec<f64>>,
}

struct CsvTable {
    columns: Vec<String>,
    header_line: u64,
    rows: Vec<(u64, Vec<String>)>,
}

impl CsvTable {
    fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .has_headers(false)
            .flexible(true)
            .from_reader(reader);
        let mut records = rdr.records();
        let header = records.next().ok_or_else(|| Error::Parse {
            line: 1,
            message: "missing header row".into(),
        })??;
        let columns: Vec<String> = header.iter().map(str::to_string).collect();
        let header_line = header.position().map(|p| p.line()).unwrap_or(1);
        let mut rows = Vec::new();
        for record in records {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record.iter().map(str::to_string).collect()));
        }
        Ok(Self {
            columns,
            header_line,
            rows,
        })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| Error::Parse {
            line: self.header_line.max(1),
            message: format!("missing column `{name}`"),
        })
    }
}

fn parse_cell(line: u64, column: &str, cell: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("column `{column}`: cannot parse `{cell}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Data(format!(
            "line {line}: column `{column}` is not finite ({cell})"
        )));
    }
    Ok(v)
}

/// Reads increments from a CSV with a `dx` column.
///
/// A leading row with an empty `dx` (the `j = 0` row of a path file) is
/// skipped. The step is `step` when given, otherwise the last `t` divided by
/// the number of increments.
pub fn read_path_csv<R: Read>(reader: R, step: Option<f64>) -> Result<PathData> {
    let table = CsvTable::read(reader)?;
    let dx_col = table.require("dx")?;
    let t_col = table.column("t");
    let drift_col = table.column("drift_integral");

    let mut dx = Vec::new();
    let mut drift = Vec::new();
    let mut drift_complete = drift_col.is_some();
    let mut last_t = None;
    for (idx, (line, cells)) in table.rows.iter().enumerate() {
        let cell = |c: usize| cells.get(c).map(String::as_str).unwrap_or("");
        if cell(dx_col).is_empty() {
            if idx == 0 {
                continue;
            }
            return Err(Error::Parse {
                line: *line,
                message: "empty `dx` cell".into(),
            });
        }
        dx.push(parse_cell(*line, "dx", cell(dx_col))?);
        if let Some(c) = t_col {
            last_t = Some(parse_cell(*line, "t", cell(c))?);
        }
        if let Some(c) = drift_col {
            if cell(c).is_empty() {
                drift_complete = false;
            } else if drift_complete {
                drift.push(parse_cell(*line, "drift_integral", cell(c))?);
            }
        }
    }
    if dx.is_empty() {
        return Err(Error::InsufficientData("no increments in input".into()));
    }
    let h = match (step, last_t) {
        (Some(h), _) => h,
        (None, Some(t)) => t / dx.len() as f64,
        (None, None) => {
            return Err(Error::InvalidConfig(
                "sampling step unknown: give h or provide a `t` column".into(),
            ))
        }
    };
    let grid = ObservationGrid::new(dx.len(), h)?;
    Ok(PathData {
        increments: IncrementSeries::new(grid, dx)?,
        drift_integrals: drift_complete.then_some(drift),
    })
}

/// One row of `mc_finals.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinalsRow {
    pub trial: u64,
    pub beta_init: f64,
    pub beta_final: f64,
    pub w: f64,
}

pub fn read_finals_csv<R: Read>(reader: R) -> Result<Vec<FinalsRow>> {
    let table = CsvTable::read(reader)?;
    let cols = [
        table.require("trial")?,
        table.require("beta_init")?,
        table.require("beta_final")?,
        table.require("w")?,
    ];
    table
        .rows
        .iter()
        .map(|(line, cells)| {
            let cell = |c: usize| cells.get(c).map(String::as_str).unwrap_or("");
            let trial = cell(cols[0]).parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("column `trial`: cannot parse `{}`", cell(cols[0])),
            })?;
            Ok(FinalsRow {
                trial,
                beta_init: parse_cell(*line, "beta_init", cell(cols[1]))?,
                beta_final: parse_cell(*line, "beta_final", cell(cols[2]))?,
                w: parse_cell(*line, "w", cell(cols[3]))?,
            })
        })
        .collect()
}
