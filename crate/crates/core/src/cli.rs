//! Command-line front end: `spectrum`, `moments`, `wavefunction`, `verify`
//! and `reproduce`.
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 solver failure,
//! 3 reference mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bigreal::{
    group_fraction, matching_significant_digits, parse_decimal, to_fixed, to_fixed_truncated,
    to_scientific, to_significant, Digits,
};
use crate::eigen::{spectrum, BoundaryProblem, Eigenpair};
use crate::error::SolverError;
use crate::fd::convergence_study;
use crate::observables::{moments, wavefunction_grid, Normalization};
use crate::potential::{parse_potential, Potential};
use crate::presets::{
    doublewell, preset, table1_golden, DOUBLEWELL_L, TABLE2_GOLDEN, TABLE_PRESETS,
};
use crate::series::{Parity, SeriesConfig};

pub const DEFAULT_DIGITS: u32 = 20;
pub const DEFAULT_LEVELS: usize = 4;
pub const DEFAULT_MOMENTS: [u32; 5] = [1, 2, 3, 4, 5];
/// Table 1 entries must share this many leading significant digits with the
/// reference strings.
pub const TABLE1_MIN_MATCH: usize = 12;
/// Digits of headroom `reproduce` asks for above what it compares.
const GUARD_DIGITS: u32 = 2;
/// `verify` tolerances: series vs extrapolated grid value, and observed order.
pub const VERIFY_TOLERANCE: f64 = 1e-4;
pub const VERIFY_ORDER: (f64, f64) = (2.0, 0.2);

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: SolverError,
    },
    #[error("{0}")]
    Mismatch(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Solver { .. } => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

fn solver(context: impl Into<String>) -> impl FnOnce(SolverError) -> CliError {
    let context = context.into();
    move |source| match source {
        SolverError::InvalidInput(msg) => CliError::Config(format!("{context}: {msg}")),
        source => CliError::Solver { context, source },
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "oscilspec",
    version,
    about = "High-precision bound states of even polynomial potentials between hard walls"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lowest eigenvalues of each configured potential.
    Spectrum {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Expectation values <x^{2m}> of the computed states.
    Moments {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Single level to report (default: every computed level).
        #[arg(long)]
        level: Option<usize>,
        /// Comma-separated list of m values.
        #[arg(long, value_delimiter = ',')]
        moments: Option<Vec<u32>>,
    },
    /// Wavefunction samples on a uniform grid of [-L, L].
    Wavefunction {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long, default_value_t = 0)]
        level: usize,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Normalization::PeakOne)]
        normalization: Normalization,
    },
    /// Compare against a finite-difference discretization.
    Verify {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Interior points of the coarsest grid.
        #[arg(long = "fd-points", default_value_t = 4000)]
        fd_points: usize,
    },
    /// Recompute the built-in reference tables and diff them.
    Reproduce {
        #[arg(value_parser = clap::value_parser!(u8).range(1..=2))]
        table: u8,
        #[arg(long, default_value_t = DEFAULT_DIGITS)]
        digits: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct ProblemArgs {
    /// JSON config: one record or an array of records.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in potential: A, B, C, D, F, G, H, box, harmonic, doublewell or all.
    #[arg(long)]
    pub preset: Option<String>,
    /// Wall half-width, as a decimal string.
    #[arg(long = "L", value_name = "HALF_WIDTH")]
    pub half_width: Option<String>,
    /// Target decimal digits.
    #[arg(long)]
    pub digits: Option<u32>,
    #[arg(long)]
    pub levels: Option<usize>,
    /// Well depth for the doublewell preset, V = -mu2 x^2 + x^4.
    #[arg(long)]
    pub mu2: Option<String>,
    #[arg(long)]
    pub precision_ceiling: Option<u32>,
    #[arg(long)]
    pub order_ceiling: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Args, Debug, Default, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// One potential to solve, after config and flags are merged.
#[derive(Clone, Debug)]
pub struct Job {
    pub name: String,
    pub potential: Potential,
    pub half_width: String,
    pub digits: Digits,
    pub levels: usize,
    pub moments: Vec<u32>,
    pub series: SeriesConfig,
}

impl Job {
    pub fn problem(&self) -> Result<BoundaryProblem, CliError> {
        let bits = self.digits.bits().max(64);
        let l = parse_decimal(&self.half_width, bits).ok_or_else(|| {
            CliError::Config(format!(
                "{}: L must be a decimal number, got {:?}",
                self.name, self.half_width
            ))
        })?;
        BoundaryProblem::new(self.potential.clone(), l, self.digits)
            .map(|bp| bp.with_series_config(self.series.clone()))
            .map_err(solver(self.name.clone()))
    }

    fn half_width_f64(&self) -> f64 {
        self.half_width.parse().unwrap_or(f64::NAN)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigRecord {
    name: Option<String>,
    potential: Value,
    #[serde(rename = "L")]
    half_width: Option<Value>,
    digits: Option<u32>,
    levels: Option<usize>,
    moments: Option<Vec<u32>>,
}

/// Parses a config document: a single record or an array of them.
pub fn parse_config(text: &str) -> Result<Vec<Job>, CliError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("config is not valid JSON: {e}")))?;
    let records = match doc {
        Value::Array(items) => items,
        other @ Value::Object(_) => vec![other],
        _ => {
            return Err(CliError::Config(
                "config must be a JSON object or an array of objects".into(),
            ))
        }
    };
    if records.is_empty() {
        return Err(CliError::Config("config contains no records".into()));
    }
    records
        .into_iter()
        .enumerate()
        .map(|(i, raw)| {
            let rec: ConfigRecord = serde_json::from_value(raw)
                .map_err(|e| CliError::Config(format!("config record {i}: {e}")))?;
            let name = rec.name.unwrap_or_else(|| format!("config[{i}]"));
            let map = rec.potential.as_object().ok_or_else(|| {
                CliError::Config(format!(
                    "{name}: potential must be an object like {{\"x^2\": \"1\"}}"
                ))
            })?;
            let potential = parse_potential(map)
                .map_err(|e| CliError::Config(format!("{name}: {e}")))?
                .with_name(name.clone());
            let half_width = match rec.half_width {
                Some(Value::String(s)) => s,
                Some(Value::Number(n)) => n.to_string(),
                Some(other) => {
                    return Err(CliError::Config(format!(
                        "{name}: L must be a decimal string, got {other}"
                    )))
                }
                None => String::new(),
            };
            Ok(Job {
                name,
                potential,
                half_width,
                digits: Digits(rec.digits.unwrap_or(DEFAULT_DIGITS)),
                levels: rec.levels.unwrap_or(DEFAULT_LEVELS),
                moments: rec.moments.unwrap_or_else(|| DEFAULT_MOMENTS.to_vec()),
                series: SeriesConfig::default(),
            })
        })
        .collect()
}

fn preset_job(name: &str, mu2: Option<&str>) -> Result<Job, CliError> {
    let p = preset(name).ok_or_else(|| {
        CliError::Config(format!(
            "unknown preset {name:?}; choose one of A, B, C, D, F, G, H, box, harmonic, doublewell, all"
        ))
    })?;
    let (potential, label) = match (name, mu2) {
        ("doublewell", Some(mu2)) => (
            doublewell(mu2).map_err(|e| CliError::Config(e.to_string()))?,
            format!("doublewell(mu2={mu2})"),
        ),
        ("doublewell", None) => (
            p.potential.clone(),
            p.potential.name().unwrap_or(name).to_string(),
        ),
        (_, Some(_)) => {
            return Err(CliError::Config(
                "--mu2 only applies to the doublewell preset".into(),
            ))
        }
        _ => (p.potential.clone(), name.to_string()),
    };
    Ok(Job {
        name: label,
        potential,
        half_width: if name == "doublewell" {
            DOUBLEWELL_L.to_string()
        } else {
            p.half_width
        },
        digits: Digits(DEFAULT_DIGITS),
        levels: DEFAULT_LEVELS,
        moments: DEFAULT_MOMENTS.to_vec(),
        series: SeriesConfig::default(),
    })
}

/// Merges `--config`/`--preset` with the override flags. With neither given,
/// `default_all` selects every table preset.
pub fn resolve_jobs(args: &ProblemArgs, default_all: bool) -> Result<Vec<Job>, CliError> {
    let mut jobs = match (&args.config, args.preset.as_deref()) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "give either --config or --preset, not both".into(),
            ));
        }
        (Some(path), None) => {
            if args.mu2.is_some() {
                return Err(CliError::Config(
                    "--mu2 only applies to the doublewell preset".into(),
                ));
            }
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        (None, Some("all")) => TABLE_PRESETS
            .iter()
            .map(|n| preset_job(n, None))
            .collect::<Result<_, _>>()?,
        (None, Some(name)) => vec![preset_job(name, args.mu2.as_deref())?],
        (None, None) if default_all => TABLE_PRESETS
            .iter()
            .map(|n| preset_job(n, None))
            .collect::<Result<_, _>>()?,
        (None, None) => {
            return Err(CliError::Config(
                "nothing to solve: give --preset NAME or --config FILE".into(),
            ));
        }
    };
    for job in &mut jobs {
        if let Some(l) = &args.half_width {
            job.half_width = l.clone();
        }
        if let Some(d) = args.digits {
            job.digits = Digits(d);
        }
        if let Some(k) = args.levels {
            job.levels = k;
        }
        if let Some(c) = args.precision_ceiling {
            job.series.precision_ceiling = Digits(c);
        }
        if let Some(c) = args.order_ceiling {
            job.series.order_ceiling = c;
        }
        validate(job)?;
    }
    Ok(jobs)
}

fn validate(job: &Job) -> Result<(), CliError> {
    if job.half_width.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no L given (set \"L\" in the config or pass --L)",
            job.name
        )));
    }
    match parse_decimal(&job.half_width, 64) {
        Some(l) if l > 0 && l.is_finite() => {}
        _ => {
            return Err(CliError::Config(format!(
                "{}: L must be a positive decimal, got {:?}",
                job.name, job.half_width
            )));
        }
    }
    if job.digits.get() < 10 {
        return Err(CliError::Config(format!(
            "{}: digits must be at least 10, got {}",
            job.name, job.digits
        )));
    }
    if job.levels == 0 {
        return Err(CliError::Config(format!(
            "{}: levels must be at least 1",
            job.name
        )));
    }
    Ok(())
}

fn solve(job: &Job, count: usize) -> Result<(BoundaryProblem, Vec<Eigenpair>), CliError> {
    let bp = job.problem()?;
    let levels = spectrum(&bp, count).map_err(solver(format!("potential {}", job.name)))?;
    Ok((bp, levels))
}

fn display_decimals(digits: Digits) -> usize {
    digits.get().saturating_sub(GUARD_DIGITS) as usize
}

/// Rows for the aligned-text and CSV renderings.
pub trait Tabular {
    fn headers() -> Vec<&'static str>;
    fn cells(&self, pretty: bool) -> Vec<String>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub potential: String,
    #[serde(rename = "L")]
    pub half_width: String,
    pub digits: u32,
    pub level: usize,
    pub parity: Parity,
    pub nodes: usize,
    pub energy: String,
    pub converged_digits: f64,
    pub doublet: bool,
    #[serde(skip)]
    pub display: String,
}

impl Tabular for SpectrumRecord {
    fn headers() -> Vec<&'static str> {
        vec![
            "potential",
            "L",
            "level",
            "parity",
            "nodes",
            "energy",
            "converged_digits",
            "doublet",
        ]
    }

    fn cells(&self, pretty: bool) -> Vec<String> {
        let energy = if pretty && !self.display.is_empty() {
            group_fraction(&self.display)
        } else {
            self.energy.clone()
        };
        vec![
            self.potential.clone(),
            self.half_width.clone(),
            self.level.to_string(),
            self.parity.as_str().to_string(),
            self.nodes.to_string(),
            energy,
            format!("{:.1}", self.converged_digits),
            if pretty {
                if self.doublet { "yes" } else { "" }.to_string()
            } else {
                self.doublet.to_string()
            },
        ]
    }
}

fn rounded_digits(d: f64) -> f64 {
    (d * 10.0).round() / 10.0
}

fn spectrum_record(job: &Job, eig: &Eigenpair) -> SpectrumRecord {
    SpectrumRecord {
        potential: job.name.clone(),
        half_width: job.half_width.clone(),
        digits: job.digits.get(),
        level: eig.level,
        parity: eig.parity,
        nodes: eig.nodes,
        energy: to_fixed(&eig.energy, job.digits.get() as usize),
        converged_digits: rounded_digits(eig.converged_digits),
        doublet: eig.doublet,
        display: to_fixed(&eig.energy, display_decimals(job.digits)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentRecord {
    pub potential: String,
    #[serde(rename = "L")]
    pub half_width: String,
    pub level: usize,
    pub parity: Parity,
    pub m: u32,
    pub value: String,
    /// Absent for `m = 0`, which is exact.
    pub converged_digits: Option<f64>,
    #[serde(skip)]
    pub display: String,
}

impl Tabular for MomentRecord {
    fn headers() -> Vec<&'static str> {
        vec![
            "potential",
            "L",
            "level",
            "parity",
            "m",
            "value",
            "converged_digits",
        ]
    }

    fn cells(&self, pretty: bool) -> Vec<String> {
        vec![
            self.potential.clone(),
            self.half_width.clone(),
            self.level.to_string(),
            self.parity.as_str().to_string(),
            self.m.to_string(),
            if pretty && !self.display.is_empty() {
                self.display.clone()
            } else {
                self.value.clone()
            },
            self.converged_digits
                .map(|d| format!("{d:.1}"))
                .unwrap_or_else(|| "exact".into()),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub x: String,
    pub psi: String,
}

impl Tabular for GridRecord {
    fn headers() -> Vec<&'static str> {
        vec!["x", "psi"]
    }

    fn cells(&self, _pretty: bool) -> Vec<String> {
        vec![self.x.clone(), self.psi.clone()]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub potential: String,
    #[serde(rename = "L")]
    pub half_width: String,
    pub level: usize,
    pub series: String,
    pub fd: f64,
    pub richardson: f64,
    pub difference: f64,
    pub order: f64,
    /// Closed-form level, for the empty potential.
    pub analytic: Option<String>,
    pub pass: bool,
}

impl Tabular for VerifyRecord {
    fn headers() -> Vec<&'static str> {
        vec![
            "potential",
            "L",
            "level",
            "series",
            "fd",
            "richardson",
            "difference",
            "order",
            "analytic",
            "pass",
        ]
    }

    fn cells(&self, pretty: bool) -> Vec<String> {
        let (fd, rich, diff, order) = if pretty {
            (
                format!("{:.10}", self.fd),
                format!("{:.10}", self.richardson),
                format!("{:.2e}", self.difference),
                format!("{:.3}", self.order),
            )
        } else {
            (
                self.fd.to_string(),
                self.richardson.to_string(),
                self.difference.to_string(),
                self.order.to_string(),
            )
        };
        vec![
            self.potential.clone(),
            self.half_width.clone(),
            self.level.to_string(),
            self.series.clone(),
            fd,
            rich,
            diff,
            order,
            self.analytic.clone().unwrap_or_default(),
            self.pass.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyDiff {
    pub potential: String,
    pub level: usize,
    pub reference: String,
    pub computed: String,
    pub matched_digits: usize,
    pub pass: bool,
}

impl Tabular for EnergyDiff {
    fn headers() -> Vec<&'static str> {
        vec![
            "potential",
            "level",
            "reference",
            "computed",
            "matched_digits",
            "pass",
        ]
    }

    fn cells(&self, pretty: bool) -> Vec<String> {
        let fmt = |s: &str| {
            if pretty {
                group_fraction(s)
            } else {
                s.to_string()
            }
        };
        vec![
            self.potential.clone(),
            self.level.to_string(),
            fmt(&self.reference),
            fmt(&self.computed),
            self.matched_digits.to_string(),
            self.pass.to_string(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentDiff {
    pub potential: String,
    pub level: usize,
    pub m: u32,
    pub reference: String,
    pub computed: String,
    pub quoted_digits: usize,
    pub matched_digits: usize,
    pub pass: bool,
    pub note: Option<String>,
}

impl Tabular for MomentDiff {
    fn headers() -> Vec<&'static str> {
        vec![
            "potential",
            "level",
            "m",
            "reference",
            "computed",
            "quoted_digits",
            "matched_digits",
            "pass",
            "note",
        ]
    }

    fn cells(&self, _pretty: bool) -> Vec<String> {
        vec![
            self.potential.clone(),
            self.level.to_string(),
            self.m.to_string(),
            self.reference.clone(),
            self.computed.clone(),
            self.quoted_digits.to_string(),
            self.matched_digits.to_string(),
            self.pass.to_string(),
            self.note.clone().unwrap_or_default(),
        ]
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render<T: Tabular + Serialize>(records: &[T], format: Format) -> Result<String, CliError> {
    match format {
        Format::Json => serde_json::to_string_pretty(records)
            .map(|mut s| {
                s.push('\n');
                s
            })
            .map_err(|e| CliError::Config(format!("cannot encode report: {e}"))),
        Format::Csv => {
            let mut out = T::headers().join(",");
            out.push('\n');
            for r in records {
                let cells: Vec<String> = r.cells(false).iter().map(|c| csv_field(c)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            Ok(out)
        }
        Format::Table => {
            let headers = T::headers();
            let rows: Vec<Vec<String>> = records.iter().map(|r| r.cells(true)).collect();
            let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
            for row in &rows {
                for (w, c) in widths.iter_mut().zip(row) {
                    *w = (*w).max(c.chars().count());
                }
            }
            let line = |cells: Vec<String>| -> String {
                let padded: Vec<String> = cells
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:<w$}"))
                    .collect();
                let mut s = padded.join("  ").trim_end().to_string();
                s.push('\n');
                s
            };
            let mut out = line(headers.iter().map(|h| h.to_string()).collect());
            for row in rows {
                out.push_str(&line(row));
            }
            Ok(out)
        }
    }
}

/// Rendered output of one command, plus an optional failure that should set
/// the exit status after the output is written.
pub struct Report {
    pub body: String,
    pub summary: Option<String>,
    pub failure: Option<CliError>,
}

impl Report {
    fn ok(body: String) -> Self {
        Report {
            body,
            summary: None,
            failure: None,
        }
    }
}

pub fn cmd_spectrum(jobs: &[Job], format: Format) -> Result<Report, CliError> {
    let results: Vec<Vec<SpectrumRecord>> = jobs
        .par_iter()
        .map(|job| {
            let (_, levels) = solve(job, job.levels)?;
            Ok(levels.iter().map(|e| spectrum_record(job, e)).collect())
        })
        .collect::<Result<_, CliError>>()?;
    let records: Vec<SpectrumRecord> = results.into_iter().flatten().collect();
    Ok(Report::ok(render(&records, format)?))
}

pub fn cmd_moments(
    jobs: &[Job],
    level: Option<usize>,
    ms: Option<&[u32]>,
    format: Format,
) -> Result<Report, CliError> {
    let results: Vec<Vec<MomentRecord>> = jobs
        .par_iter()
        .map(|job| {
            let count = level.map_or(job.levels, |l| l + 1);
            let (bp, levels) = solve(job, count)?;
            let wanted: Vec<&Eigenpair> = match level {
                Some(l) => vec![&levels[l]],
                None => levels.iter().collect(),
            };
            let ms = ms.unwrap_or(&job.moments);
            let per_level: Vec<Vec<MomentRecord>> = wanted
                .par_iter()
                .map(|eig| {
                    let reports = moments(&bp, eig, ms).map_err(solver(format!(
                        "potential {} level {}",
                        job.name, eig.level
                    )))?;
                    Ok(reports
                        .into_iter()
                        .map(|r| MomentRecord {
                            potential: job.name.clone(),
                            half_width: job.half_width.clone(),
                            level: eig.level,
                            parity: eig.parity,
                            m: r.m,
                            value: to_significant(&r.value, job.digits.get() as usize),
                            converged_digits: r
                                .converged_digits
                                .is_finite()
                                .then(|| rounded_digits(r.converged_digits)),
                            display: to_significant(&r.value, display_decimals(job.digits)),
                        })
                        .collect())
                })
                .collect::<Result<_, CliError>>()?;
            Ok(per_level.into_iter().flatten().collect())
        })
        .collect::<Result<_, CliError>>()?;
    let records: Vec<MomentRecord> = results.into_iter().flatten().collect();
    Ok(Report::ok(render(&records, format)?))
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0');
    let t = t.strip_suffix('.').unwrap_or(t);
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

pub fn cmd_wavefunction(
    jobs: &[Job],
    level: usize,
    points: usize,
    normalization: Normalization,
    format: Format,
) -> Result<Report, CliError> {
    let [job] = jobs else {
        return Err(CliError::Config(format!(
            "wavefunction takes exactly one potential, got {}",
            jobs.len()
        )));
    };
    let (bp, levels) = solve(job, level + 1)?;
    let eig = &levels[level];
    let grid = wavefunction_grid(&bp, eig, points, normalization)
        .map_err(solver(format!("potential {} level {level}", job.name)))?;
    let sig = display_decimals(job.digits);
    let records: Vec<GridRecord> = grid
        .iter()
        .map(|(x, psi)| GridRecord {
            x: trim_zeros(to_significant(x, sig)),
            psi: if psi.is_zero() {
                "0".into()
            } else {
                to_scientific(psi, sig)
            },
        })
        .collect();
    Ok(Report::ok(render(&records, format)?))
}

pub fn cmd_verify(jobs: &[Job], fd_points: usize, format: Format) -> Result<Report, CliError> {
    let results: Vec<Vec<VerifyRecord>> = jobs
        .par_iter()
        .map(|job| {
            let (_, levels) = solve(job, job.levels)?;
            let study =
                convergence_study(&job.potential, job.half_width_f64(), fd_points, job.levels)
                    .map_err(solver(format!("finite differences for {}", job.name)))?;
            Ok(levels
                .iter()
                .enumerate()
                .map(|(k, eig)| {
                    let series = eig.energy.to_f64();
                    let difference = series - study.extrapolated[k];
                    let order = study.order[k];
                    let analytic = job.potential.is_zero().then(|| {
                        let l = job.half_width_f64();
                        let e = ((k + 1) as f64 * std::f64::consts::PI / (2.0 * l)).powi(2);
                        format!("{e:.12}")
                    });
                    VerifyRecord {
                        potential: job.name.clone(),
                        half_width: job.half_width.clone(),
                        level: k,
                        series: to_fixed(&eig.energy, 12),
                        fd: study.coarse[k],
                        richardson: study.extrapolated[k],
                        difference,
                        order,
                        analytic,
                        pass: difference.abs() <= VERIFY_TOLERANCE
                            && (order - VERIFY_ORDER.0).abs() <= VERIFY_ORDER.1,
                    }
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    let records: Vec<VerifyRecord> = results.into_iter().flatten().collect();
    let failed = records.iter().filter(|r| !r.pass).count();
    let summary = format!(
        "{}/{} levels agree within {VERIFY_TOLERANCE:e} with order {} +/- {}",
        records.len() - failed,
        records.len(),
        VERIFY_ORDER.0,
        VERIFY_ORDER.1
    );
    Ok(Report {
        body: render(&records, format)?,
        failure: (failed > 0).then(|| CliError::Mismatch(summary.clone())),
        summary: Some(summary),
    })
}

fn table_job(name: &str, digits: u32) -> Result<Job, CliError> {
    let mut job = preset_job(name, None)?;
    job.digits = Digits(digits);
    Ok(job)
}

fn decimals_of(s: &str) -> usize {
    s.split_once('.').map_or(0, |(_, f)| f.len())
}

fn significant_digits_of(s: &str) -> usize {
    s.chars()
        .filter(char::is_ascii_digit)
        .skip_while(|&c| c == '0')
        .count()
}

/// Smallest `digits` that `reproduce` accepts for the given table.
pub fn reproduce_min_digits(table: u8) -> u32 {
    let needed = if table == 1 {
        TABLE1_MIN_MATCH
    } else {
        TABLE2_GOLDEN
            .iter()
            .map(|r| significant_digits_of(r.value))
            .max()
            .unwrap_or(0)
    };
    needed as u32 + GUARD_DIGITS
}

/// Energies of every table preset against the reference strings.
pub fn table1_diff(digits: u32) -> Result<Vec<EnergyDiff>, CliError> {
    let per: Vec<Vec<EnergyDiff>> = TABLE_PRESETS
        .par_iter()
        .map(|name| {
            let job = table_job(name, digits)?;
            let (_, levels) = solve(&job, 4)?;
            let golden = table1_golden(name).unwrap_or_default();
            Ok(levels
                .iter()
                .zip(golden)
                .map(|(eig, reference)| {
                    let computed = to_fixed(&eig.energy, decimals_of(reference));
                    let matched = matching_significant_digits(&computed, reference)
                        .min(significant_digits_of(reference));
                    EnergyDiff {
                        potential: name.to_string(),
                        level: eig.level,
                        reference: reference.to_string(),
                        computed,
                        matched_digits: matched,
                        pass: matched >= TABLE1_MIN_MATCH,
                    }
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per.into_iter().flatten().collect())
}

/// Moments of the closed-form states against the reference strings. An entry
/// passes when the computed value, truncated or rounded to the quoted number
/// of decimals, reproduces the reference exactly.
pub fn table2_diff(digits: u32) -> Result<Vec<MomentDiff>, CliError> {
    let mut states: Vec<(&str, usize)> =
        TABLE2_GOLDEN.iter().map(|r| (r.preset, r.level)).collect();
    states.dedup();
    let per: Vec<Vec<MomentDiff>> = states
        .par_iter()
        .map(|&(name, level)| {
            let job = table_job(name, digits)?;
            let (bp, levels) = solve(&job, level + 1)?;
            let eig = &levels[level];
            let rows: Vec<_> = TABLE2_GOLDEN
                .iter()
                .filter(|r| r.preset == name && r.level == level)
                .collect();
            let ms: Vec<u32> = rows.iter().map(|r| r.m).collect();
            let values = moments(&bp, eig, &ms)
                .map_err(solver(format!("potential {name} level {level}")))?;
            Ok(rows
                .iter()
                .zip(values)
                .map(|(row, report)| {
                    let decimals = decimals_of(row.value);
                    let truncated = to_fixed_truncated(&report.value, decimals);
                    let rounded = to_fixed(&report.value, decimals);
                    let quoted = significant_digits_of(row.value);
                    let matched = matching_significant_digits(&truncated, row.value)
                        .max(matching_significant_digits(&rounded, row.value))
                        .min(quoted);
                    MomentDiff {
                        potential: name.to_string(),
                        level,
                        m: row.m,
                        reference: row.value.to_string(),
                        computed: to_significant(
                            &report.value,
                            digits.saturating_sub(GUARD_DIGITS) as usize,
                        ),
                        quoted_digits: quoted,
                        matched_digits: matched,
                        pass: matched == quoted,
                        note: row.exact_note.map(str::to_string),
                    }
                })
                .collect())
        })
        .collect::<Result<_, CliError>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn cmd_reproduce(table: u8, digits: u32, format: Format) -> Result<Report, CliError> {
    let min = reproduce_min_digits(table);
    if digits < min {
        return Err(CliError::Config(format!(
            "insufficient precision requested: table {table} compares up to {} digits and needs --digits {min} or more, got {digits}",
            min - GUARD_DIGITS
        )));
    }
    let (body, passed, total, what) = if table == 1 {
        let rows = table1_diff(digits)?;
        let passed = rows.iter().filter(|r| r.pass).count();
        (
            render(&rows, format)?,
            passed,
            rows.len(),
            format!("matched to >= {TABLE1_MIN_MATCH} digits"),
        )
    } else {
        let rows = table2_diff(digits)?;
        let passed = rows.iter().filter(|r| r.pass).count();
        (
            render(&rows, format)?,
            passed,
            rows.len(),
            "matched to every quoted digit".to_string(),
        )
    };
    let summary = format!("table {table}: {passed}/{total} entries {what}");
    Ok(Report {
        body,
        failure: (passed < total).then(|| CliError::Mismatch(summary.clone())),
        summary: Some(summary),
    })
}

fn write_output(body: &str, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, body).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let (report, output) = match cli.command {
        Command::Spectrum { problem, output } => {
            let jobs = resolve_jobs(&problem, false)?;
            (
                cmd_spectrum(&jobs, output.format.unwrap_or(Format::Table))?,
                output,
            )
        }
        Command::Moments {
            problem,
            output,
            level,
            moments,
        } => {
            let jobs = resolve_jobs(&problem, false)?;
            let fmt = output.format.unwrap_or(Format::Table);
            (cmd_moments(&jobs, level, moments.as_deref(), fmt)?, output)
        }
        Command::Wavefunction {
            problem,
            output,
            level,
            points,
            normalization,
        } => {
            let jobs = resolve_jobs(&problem, false)?;
            let fmt = output.format.unwrap_or(Format::Csv);
            (
                cmd_wavefunction(&jobs, level, points, normalization, fmt)?,
                output,
            )
        }
        Command::Verify {
            problem,
            output,
            fd_points,
        } => {
            let jobs = resolve_jobs(&problem, true)?;
            (
                cmd_verify(&jobs, fd_points, output.format.unwrap_or(Format::Table))?,
                output,
            )
        }
        Command::Reproduce {
            table,
            digits,
            output,
        } => (
            cmd_reproduce(table, digits, output.format.unwrap_or(Format::Table))?,
            output,
        ),
    };
    write_output(&report.body, output.out.as_deref(), stdout)?;
    if let Some(summary) = &report.summary {
        let _ = writeln!(stderr, "{summary}");
    }
    match report.failure {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit
/// status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(
            std::iter::once("oscilspec").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn config_accepts_object_and_array() {
        let one = parse_config(
            r#"{"name": "A", "potential": {"x^2": "1", "x^4": "-4", "x^6": "1"}, "L": "4"}"#,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].levels, DEFAULT_LEVELS);
        assert_eq!(one[0].digits, Digits(DEFAULT_DIGITS));
        let two = parse_config(
            r#"[{"potential": {}, "L": 1, "digits": 30, "levels": 2, "moments": [1]},
                {"name": "q", "potential": {"x^4": "1"}, "L": "2.5"}]"#,
        )
        .unwrap();
        assert_eq!(two[0].name, "config[0]");
        assert_eq!(two[0].half_width, "1");
        assert_eq!(two[0].moments, vec![1]);
        assert_eq!(two[1].half_width, "2.5");
    }

    #[test]
    fn config_errors_are_actionable() {
        for (text, needle) in [
            ("[]", "no records"),
            ("3", "object or an array"),
            (r#"{"potential": {"x^3": "1"}, "L": "1"}"#, "x^3"),
            (r#"{"potential": {}, "L": "1", "colour": 2}"#, "colour"),
            (r#"{"potential": [], "L": "1"}"#, "must be an object"),
            ("{", "not valid JSON"),
        ] {
            let err = parse_config(text).unwrap_err();
            assert_eq!(err.exit_code(), 1);
            assert!(err.to_string().contains(needle), "{err} lacks {needle}");
        }
    }

    #[test]
    fn flag_validation() {
        let mut args = ProblemArgs {
            preset: Some("box".into()),
            digits: Some(9),
            ..Default::default()
        };
        assert!(resolve_jobs(&args, false).is_err());
        args.digits = None;
        args.levels = Some(0);
        assert!(resolve_jobs(&args, false).is_err());
        args.levels = None;
        args.half_width = Some("-1".into());
        assert!(resolve_jobs(&args, false).is_err());
        args.half_width = None;
        args.mu2 = Some("4".into());
        assert!(resolve_jobs(&args, false).is_err());
        assert!(resolve_jobs(&ProblemArgs::default(), false).is_err());
        assert_eq!(
            resolve_jobs(&ProblemArgs::default(), true).unwrap().len(),
            7
        );
        let dw = ProblemArgs {
            preset: Some("doublewell".into()),
            mu2: Some("4".into()),
            ..Default::default()
        };
        let jobs = resolve_jobs(&dw, false).unwrap();
        assert_eq!(jobs[0].potential.eval_f64(1.0), -3.0);
    }

    #[test]
    fn box_spectrum_table() {
        let (code, out, _) = run_capture(&["spectrum", "--preset", "box", "--levels", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("2.467 401 100 272 339 655"), "{out}");
        assert!(out.contains("9.869 604 401 089 358 619"), "{out}");
    }

    #[test]
    fn csv_quotes_when_needed() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }

    #[test]
    fn reproduce_refuses_low_precision() {
        let (code, _, err) = run_capture(&["reproduce", "1", "--digits", "10"]);
        assert_eq!(code, 1);
        assert!(err.contains("insufficient precision requested"), "{err}");
        assert_eq!(reproduce_min_digits(1), 14);
        assert_eq!(reproduce_min_digits(2), 19);
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run_capture(&["bogus"]).0, 1);
        assert_eq!(run_capture(&["reproduce", "3"]).0, 1);
        assert_eq!(run_capture(&["--help"]).0, 0);
    }
}
