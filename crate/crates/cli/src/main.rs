mod funcs;
mod point;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use itertools::Itertools;
use qracah::report::{CheckReport, Summary};
use qracah::scalar::parse_ratio;
use qracah::suites::{build_jobs, SuiteConfig, SUITES};
use qracah::{Backend, Cplx, Exact, QBase, QError, Real, Scalar, TailBound};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use funcs::{EvalSettings, FnSpec, Row};
use point::{expand_axis, parse_ratio_list, parse_uint, split_list, Point};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Q(#[from] QError),
    #[error("IoError: {0}")]
    Io(#[from] io::Error),
    #[error("CsvError: {0}")]
    Csv(#[from] csv::Error),
    #[error("JsonError: {0}")]
    Json(#[from] serde_json::Error),
    #[error("InvalidParameter: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    /// The reader closed the pipe, as in `qracah verify ... | head`.
    fn is_broken_pipe(&self) -> bool {
        let pipe = |k: io::ErrorKind| k == io::ErrorKind::BrokenPipe;
        match self {
            CliError::Io(e) => pipe(e.kind()),
            CliError::Csv(e) => matches!(e.kind(), csv::ErrorKind::Io(e) if pipe(e.kind())),
            CliError::Json(e) => e.io_error_kind().is_some_and(pipe),
            _ => false,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "qracah", version, about = "Evaluate and verify q-Racah type rational functions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate one function at one point, e.g. `eval rr_inner N=2 x=1 y=2`.
    Eval {
        function: String,
        /// `key=value` assignments; lists are comma separated.
        point: Vec<String>,
        #[command(flatten)]
        num: Numeric,
    },
    /// Run a verification suite and stream one JSON report per check.
    Verify(VerifyArgs),
    /// Tabulate a function over a grid, row-major in the function's axes.
    Table {
        function: String,
        /// `key=value` assignments; an axis takes `a..b`, `a,b,c`, or `x1,x2;y1,y2` for multi-indices.
        point: Vec<String>,
        #[command(flatten)]
        num: Numeric,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List suites and functions.
    List,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Exact,
    Float,
    Complex,
}

impl Mode {
    fn backend(self) -> Backend {
        match self {
            Mode::Exact => Backend::Exact,
            Mode::Float => Backend::Float,
            Mode::Complex => Backend::Complex,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Arithmetic settings shared by every command.
#[derive(Args, Clone, Debug)]
struct Numeric {
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// `p` with `q = p²`; verify accepts a list.
    #[arg(long)]
    p: Option<String>,
    /// Absolute tail bound required of truncated series.
    #[arg(long, default_value_t = 1e-15)]
    tail_tol: f64,
    /// Largest accepted ratio of consecutive tail terms.
    #[arg(long, default_value_t = 0.9)]
    ratio_cap: f64,
    #[arg(long, default_value_t = 4000)]
    max_terms: usize,
    /// Largest unbounded index in default table grids and su11 suites.
    #[arg(long, default_value_t = 3)]
    x_max: u32,
}

impl Numeric {
    fn tail(&self) -> CliResult<TailBound> {
        Ok(TailBound::new(self.tail_tol, self.ratio_cap, self.max_terms)?)
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    suite: String,
    #[command(flatten)]
    num: Numeric,
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    t: Option<String>,
    #[arg(long)]
    v: Option<String>,
    #[arg(long)]
    u: Option<String>,
    /// Site sizes `n1,n2,...`; repeat for several multivariate configurations.
    /// Univariate checks use every size that occurs.
    #[arg(long = "N")]
    big_n: Vec<String>,
    /// Site weights `k1,k2,...`, repeatable like `--N`.
    #[arg(long)]
    k: Vec<String>,
    #[arg(long)]
    trunc: Option<u32>,
    #[arg(long)]
    multi_x_max: Option<u32>,
    /// Float tolerance; exact checks need identically zero residuals.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Report elapsed_ms as 0 so that reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

/// A report line, fields in schema order.
#[derive(Serialize)]
struct ReportLine<'a> {
    schema_version: u32,
    suite: &'a str,
    check: &'a str,
    params: &'a std::collections::BTreeMap<String, String>,
    residual: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_bound: Option<f64>,
    pass: bool,
    backend: &'a str,
    elapsed_ms: f64,
}

impl<'a> From<&'a CheckReport> for ReportLine<'a> {
    fn from(r: &'a CheckReport) -> Self {
        ReportLine {
            schema_version: SCHEMA_VERSION,
            suite: &r.suite,
            check: &r.check,
            params: &r.params,
            residual: &r.residual,
            error_bound: r.error_bound,
            pass: r.pass,
            backend: &r.backend,
            elapsed_ms: r.elapsed_ms,
        }
    }
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn suite_config(a: &VerifyArgs) -> CliResult<SuiteConfig> {
    let mut cfg = SuiteConfig::default();
    let lists = [
        ("p", &a.num.p, &mut cfg.p),
        ("s", &a.s, &mut cfg.s),
        ("t", &a.t, &mut cfg.t),
        ("v", &a.v, &mut cfg.v),
        ("u", &a.u, &mut cfg.u),
    ];
    for (key, given, slot) in lists {
        if let Some(g) = given {
            *slot = parse_ratio_list(key, g)?;
        }
    }
    if !a.big_n.is_empty() {
        cfg.n_multi = a
            .big_n
            .iter()
            .map(|g| split_list(g).map(|x| parse_uint("N", x)).collect::<Result<Vec<_>, _>>())
            .try_collect()?;
        cfg.n = cfg.n_multi.iter().flatten().copied().sorted().dedup().collect();
    }
    if !a.k.is_empty() {
        cfg.k_multi = a.k.iter().map(|g| parse_ratio_list("k", g)).try_collect()?;
        cfg.k = cfg.k_multi.iter().flatten().cloned().sorted().dedup().collect();
    }
    if let Some(t) = a.trunc {
        cfg.trunc = t;
    }
    if let Some(m) = a.multi_x_max {
        cfg.multi_x_max = m;
    }
    if let Some(tol) = a.tol {
        cfg.tolerance = tol;
    }
    cfg.x_max = a.num.x_max;
    cfg.tail = a.num.tail()?;
    Ok(cfg)
}

fn verify(a: &VerifyArgs) -> CliResult<Summary> {
    let cfg = suite_config(a)?;
    let jobs = build_jobs(a.num.mode.backend(), &a.suite, &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build()?;
    let timing = !a.no_timing;
    let mut w = output(&a.out)?;
    let mut summary = Summary::default();
    // batches run in parallel and are written in job order, so the stream is deterministic
    for batch in jobs.chunks(2 * pool.current_num_threads()) {
        let reports: Vec<Vec<CheckReport>> = pool.install(|| batch.par_iter().map(|j| j.run(timing)).collect());
        for r in reports.iter().flatten() {
            serde_json::to_writer(&mut w, &ReportLine::from(r))?;
            writeln!(w)?;
            if r.pass {
                summary.passed += 1;
            } else {
                summary.failed += 1;
            }
        }
        w.flush()?;
    }
    Ok(summary)
}

fn qbase<S: Scalar>(pt: &Point) -> CliResult<QBase<S>> {
    let p = parse_ratio(pt.get("p").unwrap_or("1/2"))?;
    Ok(QBase::new(p)?)
}

/// Evaluates at every point with the backend chosen at run time.
fn evaluate_all(spec: &FnSpec, mode: Mode, pts: &[Point], set: &EvalSettings) -> CliResult<Vec<Vec<Row>>> {
    fn go<S: Scalar>(spec: &FnSpec, pts: &[Point], set: &EvalSettings) -> CliResult<Vec<Vec<Row>>> {
        let mut out = Vec::with_capacity(pts.len());
        for pt in pts {
            out.push(funcs::evaluate(spec, &qbase::<S>(pt)?, pt, set)?);
        }
        Ok(out)
    }
    match mode {
        Mode::Exact => go::<Exact>(spec, pts, set),
        Mode::Float => go::<Real>(spec, pts, set),
        Mode::Complex => go::<Cplx>(spec, pts, set),
    }
}

fn base_point(assignments: &[String], num: &Numeric) -> CliResult<Point> {
    let mut pt = Point::new();
    pt.extend_assignments(assignments)?;
    if let Some(p) = &num.p {
        pt.set("p", p)?;
    }
    Ok(pt)
}

fn settings(num: &Numeric) -> CliResult<EvalSettings> {
    Ok(EvalSettings { tail: num.tail()?, x_max: num.x_max })
}

fn eval(function: &str, assignments: &[String], num: &Numeric) -> CliResult<()> {
    let spec = funcs::lookup(function)?;
    let pt = base_point(assignments, num)?;
    let rows = evaluate_all(spec, num.mode, std::slice::from_ref(&pt), &settings(num)?)?.remove(0);
    let mut out = io::stdout().lock();
    match rows.as_slice() {
        [row] if row.first().is_some_and(|(c, _)| c == "value") => {
            writeln!(out, "{}", row[0].1)?;
            if let Some((_, b)) = row.iter().find(|(c, b)| c == "error_bound" && b != "0") {
                eprintln!("error_bound: {b}");
            }
        }
        _ => {
            for row in &rows {
                writeln!(out, "{}", row.iter().map(|(c, v)| format!("{c}={v}")).join(" "))?;
            }
        }
    }
    Ok(())
}

/// Grid points in row-major order over the function's axes.
fn grid(spec: &FnSpec, base: &Point, set: &EvalSettings) -> CliResult<Vec<Point>> {
    let mut axes = Vec::with_capacity(spec.axes.len());
    for &axis in spec.axes {
        let values = match base.get(axis) {
            Some(g) => expand_axis(axis, g, spec.multi)?,
            None => funcs::default_axis(spec, axis, base, set)?,
        };
        axes.push(values.into_iter().map(move |v| (axis, v)).collect::<Vec<_>>());
    }
    let mut pts = Vec::new();
    for combo in axes.into_iter().multi_cartesian_product() {
        let mut pt = Point::new();
        for (k, v) in base.entries().filter(|(k, _)| !spec.axes.contains(&k.as_str())) {
            pt.set(k, v)?;
        }
        for (axis, v) in combo {
            pt.set(axis, &v)?;
        }
        pts.push(pt);
    }
    Ok(pts)
}

fn table(function: &str, assignments: &[String], num: &Numeric, format: Format, out: &Option<PathBuf>) -> CliResult<()> {
    let spec = funcs::lookup(function)?;
    let set = settings(num)?;
    let pts = grid(spec, &base_point(assignments, num)?, &set)?;
    let results = evaluate_all(spec, num.mode, &pts, &set)?;
    let mut rows: Vec<Row> = Vec::new();
    for (pt, res) in pts.iter().zip(results) {
        let lead: Row = spec.axes.iter().map(|a| (a.to_string(), pt.get(a).unwrap_or_default().to_string())).collect();
        rows.extend(res.into_iter().map(|r| lead.iter().cloned().chain(r).collect()));
    }
    let header: Vec<String> = rows.iter().flat_map(|r| r.iter().map(|(c, _)| c.clone())).unique().collect();
    let cell = |r: &Row, c: &str| r.iter().find(|(k, _)| k == c).map(|(_, v)| v.clone()).unwrap_or_default();
    let mut w = output(out)?;
    match format {
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            cw.write_record(&header)?;
            for r in &rows {
                cw.write_record(header.iter().map(|c| cell(r, c)))?;
            }
            cw.flush()?;
        }
        Format::Json => {
            for r in &rows {
                let obj: serde_json::Map<String, serde_json::Value> =
                    header.iter().map(|c| (c.clone(), serde_json::Value::String(cell(r, c)))).collect();
                serde_json::to_writer(&mut w, &obj)?;
                writeln!(w)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn list() -> CliResult<()> {
    let mut out = io::stdout().lock();
    writeln!(out, "suites:")?;
    for (id, about) in SUITES {
        writeln!(out, "  {id:<10} {about}")?;
    }
    writeln!(out, "functions:")?;
    for f in funcs::FUNCTIONS {
        writeln!(out, "  {:<13} {}", f.name, f.about)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<ExitCode> {
    match cli.cmd {
        Cmd::Eval { function, point, num } => eval(&function, &point, &num)?,
        Cmd::Verify(a) => {
            let s = verify(&a)?;
            eprintln!("summary: {} checks, {} passed, {} failed", s.passed + s.failed, s.passed, s.failed);
            return Ok(if s.all_passed() { ExitCode::SUCCESS } else { ExitCode::from(1) });
        }
        Cmd::Table { function, point, num, format, out } => table(&function, &point, &num, format, &out)?,
        Cmd::List => list()?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) if e.is_broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
