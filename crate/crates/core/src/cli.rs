//! The `hopf` command line.
//!
//! Exit codes: 0 success, 1 an audit or golden check failed, 2 bad usage or
//! configuration. `HOPF_THREADS` overrides the worker count. Numbers are
//! printed with 12 significant digits; all sampled audits use a fixed seed
//! ([`DEFAULT_SEED`] unless `--seed` or `[run] seed` says otherwise), so
//! output is byte-identical across runs.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characteristics::{
    classify_against, crossing_time, persistence_check, reachable_gradients, through_point, CharOptions, CharType,
    Characteristic, CrossValidation,
};
use crate::config::{ConfigFile, DEFAULT_SEED};
use crate::conjugate::{conjugate_numeric, ConjugateView};
use crate::error::{Error, Result};
use crate::hopf::{evaluate, field, stationary_points, SolveOptions};
use crate::numeric::linspace;
use crate::problem::{catalog, ProblemSpec};
use crate::regularity::{
    all_type_one_check, crossing_check, estimate_theta, injectivity_check, plane_singleton_check, strip_bound,
    viscosity_audit,
};
use crate::singularity::{arc_direction_hint, trace, ScanOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Kv,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "hopf", version, about = "Hopf max-formula solutions of u_t + H(Du) = 0")]
struct Cli {
    /// Catalog problem name (see `hopf check --list`)
    #[arg(long, global = true)]
    problem: Option<String>,
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Hopf search grid nodes per axis
    #[arg(long, global = true)]
    grid_nodes: Option<usize>,
    #[arg(long, global = true)]
    cluster_tol: Option<f64>,
    #[arg(long, global = true)]
    singleton_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// u(t, x) and the maximizer set ℓ(t, x)
    Eval(EvalArgs),
    /// Tabulate u, diam ℓ and regularity over a grid
    Field(FieldArgs),
    /// σ* on a window
    Conjugate(ConjugateArgs),
    /// Characteristics through (t0, x0)
    Char(PointArgs),
    /// Type of the characteristic from y at (t0, y + t0·H_p(σ_y(y)))
    Classify(ClassifyArgs),
    /// Persistence of a type (I) characteristic below t0
    Persist(PersistArgs),
    /// Empirical regular strip on a window
    Strip(StripArgs),
    /// Sufficient-condition audits at a level t*
    Check(CheckArgs),
    /// Viscosity audit at random points
    Verify(VerifyArgs),
    /// Forward trace of a singular point
    Trace(TraceArgs),
    /// Recompute the worked-example reference values
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    t: f64,
    /// Comma-separated coordinates
    #[arg(long, allow_hyphen_values = true)]
    x: String,
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Comma-separated times
    #[arg(long, allow_hyphen_values = true)]
    t: String,
    /// lo:hi per axis, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    window: String,
    #[arg(long, default_value_t = 101)]
    nodes: usize,
}

#[derive(Debug, Args)]
struct ConjugateArgs {
    /// lo:hi per axis; defaults to [-L, L]
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long, default_value_t = 201)]
    nodes: usize,
    /// Force the grid transform even when a closed form exists
    #[arg(long)]
    numeric: bool,
    /// Transform grid nodes per axis (with --numeric)
    #[arg(long, default_value_t = 4001)]
    transform_nodes: usize,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[arg(long)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
}

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long)]
    t0: f64,
    /// Emanation point of the characteristic
    #[arg(long, allow_hyphen_values = true)]
    y: String,
}

#[derive(Debug, Args)]
struct PersistArgs {
    #[arg(long)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    y: String,
    #[arg(long, default_value_t = 16)]
    steps: usize,
}

#[derive(Debug, Args)]
struct StripArgs {
    #[arg(long, allow_hyphen_values = true, default_value = "-3:3")]
    window: String,
    #[arg(long, default_value_t = 201)]
    nodes: usize,
    /// Bisection steps
    #[arg(long, default_value_t = 12)]
    levels: usize,
}

#[derive(Debug, Args)]
struct CheckArgs {
    /// Level to test; defaults to the declared strip bound
    #[arg(long)]
    t_star: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value = "-3:3")]
    window: String,
    #[arg(long, default_value_t = 61)]
    nodes: usize,
    /// (t, x) samples per axis for the crossing audit on (0, t*)
    #[arg(long, default_value_t = 9)]
    crossing_samples: usize,
    /// List catalog problems and exit
    #[arg(long)]
    list: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 1e-4)]
    h: f64,
    #[arg(long, allow_hyphen_values = true, default_value = "-3:3")]
    window: String,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Debug, Args)]
struct TraceArgs {
    #[arg(long)]
    t0: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long, default_value_t = 0.05)]
    eps: f64,
    #[arg(long)]
    t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Case {
    Sect5,
    Remark44,
}

#[derive(Debug, Args)]
struct ReproArgs {
    #[arg(long, value_enum)]
    case: Case,
}

/// Tabular or record output, rendered in the requested format.
#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Table { header: Vec<String>, rows: Vec<Vec<String>> },
    Records(Vec<(String, String)>),
}

impl Report {
    fn records() -> Self {
        Report::Records(Vec::new())
    }

    fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        if let Report::Records(r) = self {
            r.push((key.into(), value.into()));
        }
    }
}

/// `%.12g`-style formatting.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|&x| num(x)).collect::<Vec<_>>().join(" ")
}

/// Renders a report. CSV tables use the header as given; records become a
/// two-column `key,value` CSV. `kv` writes `key=value` lines (table rows as
/// `column[i]=value`); `text` aligns columns.
pub fn emit(report: &Report, format: Format, out: &mut dyn Write) -> io::Result<()> {
    match (report, format) {
        (Report::Table { header, rows }, Format::Csv) => {
            writeln!(out, "{}", header.join(","))?;
            for r in rows {
                writeln!(out, "{}", r.join(","))?;
            }
        }
        (Report::Records(recs), Format::Csv) => {
            writeln!(out, "key,value")?;
            for (k, v) in recs {
                writeln!(out, "{k},{v}")?;
            }
        }
        (Report::Table { header, rows }, Format::Kv) => {
            for (i, r) in rows.iter().enumerate() {
                for (h, v) in header.iter().zip(r) {
                    writeln!(out, "{h}[{i}]={v}")?;
                }
            }
        }
        (Report::Records(recs), Format::Kv) => {
            for (k, v) in recs {
                writeln!(out, "{k}={v}")?;
            }
        }
        (Report::Table { header, rows }, Format::Text) => {
            let widths: Vec<usize> = (0..header.len())
                .map(|c| rows.iter().map(|r| r[c].len()).chain([header[c].len()]).max().unwrap_or(0))
                .collect();
            let line = |cells: &[String]| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            writeln!(out, "{}", line(header))?;
            for r in rows {
                writeln!(out, "{}", line(r))?;
            }
        }
        (Report::Records(recs), Format::Text) => {
            let w = recs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
            for (k, v) in recs {
                writeln!(out, "{k:<w$}  {v}")?;
            }
        }
    }
    Ok(())
}

struct Context {
    spec: ProblemSpec,
    view: ConjugateView,
    opts: SolveOptions,
    seed: u64,
}

fn parse_point(s: &str, dim: usize) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number `{p}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if v.len() != dim {
        return Err(Error::Config(format!("`{s}` has {} coordinates, problem dimension is {dim}", v.len())));
    }
    Ok(v)
}

fn parse_window(s: &str, dim: usize) -> Result<Vec<(f64, f64)>> {
    let axes = s
        .split(',')
        .map(|a| {
            let (lo, hi) = a.split_once(':').ok_or_else(|| Error::Config(format!("window axis `{a}` is not lo:hi")))?;
            let p = |v: &str| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number `{v}`: {e}")));
            let (lo, hi) = (p(lo)?, p(hi)?);
            if !(lo <= hi) {
                return Err(Error::Config(format!("window axis `{a}` has lo > hi")));
            }
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>>>()?;
    if axes.len() != dim {
        return Err(Error::Config(format!("window `{s}` has {} axes, problem dimension is {dim}", axes.len())));
    }
    Ok(axes)
}

fn need_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn need_nodes(name: &str, n: usize) -> Result<()> {
    if n >= 3 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be at least 3, got {n}")))
    }
}

/// Runs the CLI; returns the process exit code.
pub fn run<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    2
                }
            };
        }
    };
    match execute(cli, out) {
        Ok(passed) => i32::from(!passed),
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Config(_) | Error::UnknownProblem { .. } | Error::Parse { .. } | Error::InvalidProblem(_) => 2,
                Error::Domain(_) | Error::Precondition(_) | Error::SearchWindow { .. } => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let format = match (cli.format, &file.run.format) {
        (Some(f), _) => Some(f),
        (None, Some(s)) => Some(Format::from_str(s, true).map_err(|_| Error::Config(format!("unknown format `{s}`")))?),
        (None, None) => None,
    };
    let output = cli.output.clone().or(file.run.output.clone());
    let workers = match std::env::var("HOPF_THREADS") {
        Ok(v) => Some(v.parse::<usize>().map_err(|_| Error::Config(format!("HOPF_THREADS=`{v}` is not a count")))?),
        Err(_) => file.run.workers,
    };

    if let Command::Check(CheckArgs { list: true, .. }) = &cli.command {
        let mut r = Report::records();
        for n in catalog::names() {
            r.push("problem", *n);
        }
        emit(&r, format.unwrap_or(Format::Kv), out).map_err(io_err)?;
        return Ok(true);
    }

    if let Command::Repro(a) = &cli.command {
        let mut g = Goldens::default();
        let opts = file.run.solve_options()?;
        match a.case {
            Case::Sect5 => repro_sect5(&mut g, &opts)?,
            Case::Remark44 => repro_remark44(&mut g, &opts)?,
        }
        let passed = g.passed();
        g.report.push("status", if passed { "pass" } else { "fail" });
        return write_report(&g.report, format.unwrap_or(Format::Kv), output, out).map(|_| passed);
    }

    let spec = match (&cli.problem, &file.problem) {
        (Some(name), _) => catalog::lookup(name)?,
        (None, Some(section)) => section.build()?,
        (None, None) => return Err(Error::Config("no problem given; use --problem NAME or a [problem] section".into())),
    };
    let mut run_section = file.run.clone();
    if cli.grid_nodes.is_some() {
        run_section.grid_nodes = cli.grid_nodes;
    }
    if cli.cluster_tol.is_some() {
        run_section.cluster_tol = cli.cluster_tol;
    }
    if cli.singleton_tol.is_some() {
        run_section.singleton_tol = cli.singleton_tol;
    }
    let opts = run_section.solve_options()?;
    let seed = cli.seed.or(file.run.seed).unwrap_or(DEFAULT_SEED);
    let view = ConjugateView::for_problem(&spec)?;
    let ctx = Context { spec, view, opts, seed };

    let job = || dispatch(&ctx, &cli.command);
    let (report, passed, default_format) = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?
            .install(job)?,
        None => job()?,
    };
    write_report(&report, format.unwrap_or(default_format), output, out)?;
    Ok(passed)
}

fn write_report(report: &Report, format: Format, output: Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    match output {
        Some(path) => {
            let f = File::create(&path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(f);
            emit(report, format, &mut w).and_then(|_| w.flush()).map_err(io_err)
        }
        None => emit(report, format, out).map_err(io_err),
    }
}

fn io_err(e: io::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

fn axis_header(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|k| format!("{prefix}{k}")).collect()
}

fn cells(v: &[f64]) -> Vec<String> {
    v.iter().map(|&x| num(x)).collect()
}

fn dispatch(ctx: &Context, command: &Command) -> Result<(Report, bool, Format)> {
    let Context { spec, view, opts, seed } = ctx;
    let dim = spec.dim;
    match command {
        Command::Eval(a) => {
            let x = parse_point(&a.x, dim)?;
            let m = evaluate(spec, view, a.t, &x, opts)?;
            let mut r = Report::records();
            r.push("problem", spec.name.clone());
            r.push("t", num(a.t));
            r.push("x", nums(&x));
            r.push("u", num(m.value));
            r.push("diameter", num(m.diameter));
            r.push("singleton", m.singleton.to_string());
            r.push("representatives", m.representatives.len().to_string());
            for (i, q) in m.representatives.iter().enumerate() {
                r.push(format!("q[{i}]"), nums(q));
            }
            Ok((r, true, Format::Kv))
        }
        Command::Field(a) => {
            let ts = a
                .t
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Config(format!("bad time `{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let window = parse_window(&a.window, dim)?;
            need_nodes("--nodes", a.nodes)?;
            let table = field(spec, view, &ts, &window, a.nodes, opts)?;
            let mut header = vec!["t".to_string()];
            header.extend(axis_header("x", dim));
            header.extend(["u", "diam", "singleton"].map(String::from));
            let rows = table
                .rows
                .iter()
                .map(|row| {
                    let mut c = vec![num(row.t)];
                    c.extend(cells(&row.x));
                    c.extend([num(row.value), num(row.diameter), row.singleton.to_string()]);
                    c
                })
                .collect();
            Ok((Report::Table { header, rows }, true, Format::Csv))
        }
        Command::Conjugate(a) => {
            need_nodes("--nodes", a.nodes)?;
            let m = spec.domain_radius();
            let window = match &a.window {
                Some(w) => parse_window(w, dim)?,
                None => vec![(-m, m); dim],
            };
            let numeric;
            let v = if a.numeric {
                need_nodes("--transform-nodes", a.transform_nodes)?;
                numeric = conjugate_numeric(&|x| spec.initial(x), dim, spec.transform_radius, m, a.transform_nodes)?;
                &numeric
            } else {
                view
            };
            let axes: Vec<Vec<f64>> = window.iter().map(|&(lo, hi)| linspace(lo, hi, a.nodes)).collect();
            let mut header = if dim == 1 { vec!["q".to_string()] } else { axis_header("q", dim) };
            header.push("sigma_star".into());
            let rows = crate::numeric::product_grid(&axes)
                .iter()
                .map(|q| {
                    let mut c = cells(q);
                    c.push(num(v.value(q)));
                    c
                })
                .collect();
            Ok((Report::Table { header, rows }, true, Format::Csv))
        }
        Command::Char(a) => {
            let x0 = parse_point(&a.x0, dim)?;
            let curves = through_point(spec, a.t0, &x0, &CharOptions::default())?;
            let set = evaluate(spec, view, a.t0, &x0, opts)?;
            let mut header = Vec::new();
            if dim == 1 {
                header.extend(["y", "p", "velocity"].map(String::from));
            } else {
                header.extend(axis_header("y", dim));
                header.extend(axis_header("p", dim));
                header.extend(axis_header("v", dim));
            }
            header.push("type".into());
            let rows = curves
                .iter()
                .map(|c| {
                    let mut row = cells(&c.anchor_y);
                    row.extend(cells(&c.momentum));
                    row.extend(cells(&c.velocity));
                    row.push(classify_against(c, &set).tag.to_string());
                    row
                })
                .collect();
            Ok((Report::Table { header, rows }, true, Format::Csv))
        }
        Command::Classify(a) => {
            let y = parse_point(&a.y, dim)?;
            let c = Characteristic::new(spec, &y);
            let x0 = c.position(a.t0);
            let set = evaluate(spec, view, a.t0, &x0, opts)?;
            let tag = classify_against(&c, &set);
            let mut r = Report::records();
            r.push("y", nums(&y));
            r.push("t0", num(a.t0));
            r.push("x0", nums(&x0));
            r.push("momentum", nums(&c.momentum));
            r.push("distance", num(tag.distance));
            r.push("type", tag.tag.to_string());
            Ok((r, true, Format::Kv))
        }
        Command::Persist(a) => {
            let y = parse_point(&a.y, dim)?;
            if a.steps == 0 {
                return Err(Error::Config("--steps must be positive".into()));
            }
            let c = Characteristic::new(spec, &y);
            let rep = persistence_check(spec, view, &c, a.t0, a.steps, opts)?;
            let mut header = vec!["k".to_string(), "t".to_string()];
            header.extend(axis_header("x", dim));
            header.extend(["contains_momentum", "singleton", "included"].map(String::from));
            let rows = rep
                .samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    let mut row = vec![k.to_string(), num(s.t)];
                    row.extend(cells(&s.x));
                    row.extend([s.contains_momentum, s.singleton, s.included].map(|b| b.to_string()));
                    row
                })
                .collect();
            Ok((Report::Table { header, rows }, rep.passed(), Format::Csv))
        }
        Command::Strip(a) => {
            let window = parse_window(&a.window, dim)?;
            need_nodes("--nodes", a.nodes)?;
            let rep = estimate_theta(spec, view, &window, a.nodes, a.levels, opts)?;
            let mut r = Report::records();
            r.push("problem", spec.name.clone());
            r.push("window", window.iter().map(|(l, h)| format!("{}:{}", num(*l), num(*h))).collect::<Vec<_>>().join(","));
            r.push("nodes", a.nodes.to_string());
            r.push("levels", a.levels.to_string());
            r.push("theta_estimate", num(rep.theta_estimate));
            r.push("resolution", num(rep.resolution));
            r.push("theoretical_bound", rep.theoretical_bound.map_or("none".into(), num));
            match &rep.witness {
                Some(w) => {
                    r.push("witness_t", num(w.t));
                    r.push("witness_x", nums(&w.x));
                    r.push("witness_diameter", num(w.diameter));
                }
                None => r.push("witness", "none (no witness found in window)"),
            }
            for c in &rep.condition_results {
                r.push(format!("condition.{}", c.name), format!("{} at t={}", c.passed, num(c.t)));
            }
            Ok((r, true, Format::Text))
        }
        Command::Check(a) => {
            let window = parse_window(&a.window, dim)?;
            need_nodes("--nodes", a.nodes)?;
            need_nodes("--crossing-samples", a.crossing_samples)?;
            let t = match a.t_star {
                Some(t) => t,
                None => strip_bound(spec)?,
            };
            let copts = CharOptions::with_max_speed(spec);
            let reach = t * copts.max_speed.unwrap_or(0.0) + 1.0;
            let y_window: Vec<(f64, f64)> = window.iter().map(|&(l, h)| (l - reach, h + reach)).collect();
            let inj = injectivity_check(spec, t, &y_window, a.nodes.max(401), 1e-12)?;
            let plane = plane_singleton_check(spec, view, t, &window, a.nodes, opts)?;
            let ones = all_type_one_check(spec, view, t, &window, a.nodes, opts, &copts)?;
            let t_lo = t / a.crossing_samples as f64;
            let cross = crossing_check(spec, view, (t_lo, t), &window, a.crossing_samples, opts, &copts)?;
            let mut r = Report::records();
            r.push("t_star", num(t));
            r.push("injective", inj.injective.to_string());
            r.push("injective.worst_gap", num(inj.worst_gap));
            r.push("singleton_plane", plane.passed.to_string());
            if let Some(w) = &plane.witness {
                r.push("singleton_plane.witness_x", nums(&w.x));
            }
            r.push("all_type_one", ones.passed.to_string());
            if let Some((x, c)) = &ones.counterexample {
                r.push("all_type_one.witness_x", nums(x));
                r.push("all_type_one.witness_y", nums(&c.anchor_y));
            }
            r.push("no_crossing", cross.no_crossings().to_string());
            r.push("no_crossing.tested", cross.tested.to_string());
            if let Some(c) = cross.crossings.first() {
                r.push("no_crossing.witness", format!("t={} x={}", num(c.t), nums(&c.x)));
            }
            let passed = inj.injective && plane.passed && ones.passed && cross.no_crossings();
            Ok((r, passed, Format::Kv))
        }
        Command::Verify(a) => {
            need_positive("--h", a.h)?;
            need_positive("--tol", a.tol)?;
            let window = parse_window(&a.window, dim)?;
            let rep = viscosity_audit(spec, view, a.samples, a.h, &window, a.tol, *seed, opts)?;
            let mut header = vec!["t".to_string()];
            header.extend(axis_header("x", dim));
            header.extend(["kind", "residual", "min_margin", "alpha", "passed"].map(String::from));
            let opt = |v: Option<f64>| v.map_or(String::new(), num);
            let rows = rep
                .points
                .iter()
                .map(|p| {
                    let mut row = vec![num(p.t)];
                    row.extend(cells(&p.x));
                    row.push(format!("{:?}", p.kind).to_lowercase());
                    row.extend([opt(p.residual), opt(p.min_margin), opt(p.alpha), p.passed.to_string()]);
                    row
                })
                .collect();
            Ok((Report::Table { header, rows }, rep.passed(), Format::Csv))
        }
        Command::Trace(a) => {
            let x0 = parse_point(&a.x0, dim)?;
            need_positive("--eps", a.eps)?;
            let path = trace(spec, view, a.t0, &x0, a.eps, a.t_end, opts, &ScanOptions::default())?;
            let mut header = vec!["k".to_string(), "t".to_string()];
            header.extend(axis_header("x", dim));
            header.push("diameter".into());
            let rows = path
                .nodes
                .iter()
                .zip(&path.diameters)
                .enumerate()
                .map(|(k, ((t, x), d))| {
                    let mut row = vec![k.to_string(), num(*t)];
                    row.extend(cells(x));
                    row.push(num(*d));
                    row
                })
                .collect();
            Ok((Report::Table { header, rows }, path.complete(a.t_end), Format::Csv))
        }
        Command::Repro(_) => unreachable!("handled before problem setup"),
    }
}

struct Goldens {
    report: Report,
    failures: usize,
}

impl Default for Goldens {
    fn default() -> Self {
        Self { report: Report::records(), failures: 0 }
    }
}

impl Goldens {
    fn value(&mut self, key: &str, v: String) {
        self.report.push(key, v);
    }

    fn check(&mut self, key: &str, ok: bool) {
        if !ok {
            self.failures += 1;
        }
        self.report.push(format!("{key}.pass"), ok.to_string());
    }

    fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn repro_sect5(g: &mut Goldens, opts: &SolveOptions) -> Result<()> {
    let spec = catalog::lookup("log-example")?;
    let view = ConjugateView::for_problem(&spec)?;
    let s11 = 11f64.sqrt();

    let roots = stationary_points(&spec, &view, 2.0, 0.4, -8.0, 8.0, 20001)?;
    let want = [(-4.0 - s11) / 5.0, (-4.0 + s11) / 5.0, 2.0];
    g.value("critical_points", nums(&roots));
    g.check("critical_points", roots.len() == 3 && roots.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-6));
    let m = evaluate(&spec, &view, 2.0, &[0.4], opts)?;
    g.value("maximizer_2_0.4", nums(&m.representatives.concat()));
    g.check("maximizer_2_0.4", m.singleton && (m.representatives[0][0] - 2.0).abs() <= 1e-6);

    for t1 in [0.75, 1.0, 1.5] {
        let m = evaluate(&spec, &view, t1, &[0.0], opts)?;
        let s = (2.0 * t1 - 1.0).sqrt();
        let key = format!("maximizers_{}_0", num(t1));
        g.value(&key, nums(&m.representatives.concat()));
        let ok = m.representatives.len() == 2
            && (m.representatives[0][0] + s).abs() <= 1e-4
            && (m.representatives[1][0] - s).abs() <= 1e-4;
        g.check(&key, ok);
    }

    let strip = estimate_theta(&spec, &view, &[(-3.0, 3.0)], 201, 12, opts)?;
    g.value("theta_estimate", num(strip.theta_estimate));
    g.check("theta_estimate", (strip.theta_estimate - 0.5).abs() <= 0.01);
    let bound = strip_bound(&spec)?;
    g.value("strip_bound", num(bound));
    g.check("strip_bound", bound == 0.25 && bound <= strip.theta_estimate);
    let plane = plane_singleton_check(&spec, &view, 0.5, &[(-3.0, 3.0)], 201, opts)?;
    g.check("singleton_plane_0.5", plane.passed);

    let copts = CharOptions::with_max_speed(&spec);
    let tags = |t0: f64, x0: f64| -> Result<Vec<String>> {
        let set = evaluate(&spec, &view, t0, &[x0], opts)?;
        Ok(through_point(&spec, t0, &[x0], &copts)?
            .iter()
            .map(|c| format!("{}:{}", num(c.anchor_y[0]), classify_against(c, &set).tag))
            .collect())
    };
    let at_2 = tags(2.0, 0.4)?;
    g.value("types_2_0.4", at_2.join(" "));
    g.check("types_2_0.4", at_2.iter().map(|s| s.ends_with(":I")).collect::<Vec<_>>() == [false, false, true]);
    let at_1 = tags(1.0, 0.0)?;
    g.value("types_1_0", at_1.join(" "));
    g.check("types_1_0", at_1.iter().map(|s| s.ends_with(":I")).collect::<Vec<_>>() == [true, false, true]);

    let path = trace(&spec, &view, 0.6, &[0.0], 0.05, 2.0, opts, &ScanOptions::default())?;
    let max_x = path.nodes.iter().map(|(_, x)| x[0].abs()).fold(0.0, f64::max);
    let max_diam_err = path
        .nodes
        .iter()
        .zip(&path.diameters)
        .map(|((t, _), d)| (d - 2.0 * (2.0 * t - 1.0).sqrt()).abs())
        .fold(0.0, f64::max);
    g.value("trace_nodes", path.nodes.len().to_string());
    g.value("trace_max_abs_x", num(max_x));
    g.value("trace_max_diameter_error", num(max_diam_err));
    g.check("trace", path.complete(2.0) && max_x <= 0.02 && max_diam_err <= 1e-2);

    let reach = reachable_gradients(&spec, &view, 1.0, &[0.0], opts, Some(&CrossValidation::default()))?;
    let pairs: Vec<String> = reach.pairs.iter().map(|p| format!("({}, {})", num(p.p), nums(&p.q))).collect();
    g.value("reachable_1_0", pairs.join(" "));
    g.check("reachable_1_0", reach.pairs.len() == 2 && reach.consistent());
    let hint = arc_direction_hint(&spec, &view, 1.0, &[0.0], opts, 1e-9)?;
    g.value("alpha_1_0", num(hint.scan.alpha));
    g.value("arc_1_0", hint.verdict.to_string());
    g.check("alpha_1_0", (hint.scan.alpha - 2f64.ln()).abs() <= 1e-6);
    Ok(())
}

fn repro_remark44(g: &mut Goldens, opts: &SolveOptions) -> Result<()> {
    let spec = catalog::lookup("sqrt-example")?;
    let view = ConjugateView::for_problem(&spec)?;
    let d = 2.0 * 2f64.sqrt() - 5f64.sqrt();
    let (t_want, x_want) = (10f64.sqrt() / d, 2.0 * (2f64.sqrt() - 5f64.sqrt()) / d);
    let (t, x) = crossing_time(&spec, &[1.0], &[2.0], 0.1, spec.horizon - 0.1)
        .ok_or_else(|| Error::Precondition("characteristics from y=1 and y=2 do not meet".into()))?;
    g.value("crossing_t", num(t));
    g.value("crossing_x", num(x[0]));
    g.check("crossing", (t - t_want).abs() <= 1e-6 && (x[0] - x_want).abs() <= 1e-6);

    let centre = evaluate(&spec, &view, t, &x, opts)?;
    g.value("maximizer_at_crossing", nums(&centre.representatives.concat()));
    let mut all_singleton = centre.singleton;
    for k in 0..8 {
        let a = std::f64::consts::TAU * k as f64 / 8.0;
        let m = evaluate(&spec, &view, t + 0.05 * a.cos(), &[x[0] + 0.05 * a.sin()], opts)?;
        all_singleton &= m.singleton;
    }
    g.check("singleton_neighbourhood", all_singleton);

    let curves = through_point(&spec, t, &x, &CharOptions::with_max_speed(&spec))?;
    let ys: Vec<f64> = curves.iter().map(|c| c.anchor_y[0]).collect();
    g.value("curves_through_crossing", nums(&ys));
    let through = |y: f64| ys.iter().any(|v| (v - y).abs() <= 1e-6);
    g.check("curves_through_crossing", through(1.0) && through(2.0));
    let types: Vec<String> = curves.iter().map(|c| classify_against(c, &centre).tag.to_string()).collect();
    g.value("types_at_crossing", types.join(" "));
    let type_one = curves.iter().filter(|c| classify_against(c, &centre).tag == CharType::TypeI).count();
    g.check("single_type_one_curve", type_one == 1);
    Ok(())
}
