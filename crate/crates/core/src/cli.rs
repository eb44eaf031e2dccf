//! Command-line front end. [`run`] is the whole program minus process
//! plumbing, so it can be driven from tests.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::designer::{design, Partial, QuantileConstraint, Unknown};
use crate::dist::{SDistribution, CDF_TOL};
use crate::error::Error;
use crate::fitter::{fit, Bins, FitConfig};
use crate::io::{fmt, parse_observations};
use crate::lerch;
use crate::oracle::{oracle_quantile, OdeConfig};
use crate::params::{classify, SParams, DEFAULT_F0, DEG_TOL};
use crate::sampler::{Sampler, GENERATOR_ID, TABLE_KNOTS, U_EPS};
use crate::solution::{Shape, NEAR_DEGENERATE, TAIL_Z};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const CURVE_POINTS: usize = 512;
const CURVE_FROM: f64 = 0.001;
const CURVE_TO: f64 = 0.999;
const ORACLE_POINTS: usize = 99;

#[derive(Debug, Parser)]
#[command(name = "sdist", version, about = "S-distribution quantiles, design, sampling and fitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format (default: json for fit, csv for curve, plain otherwise).
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,

    /// Print defaults and tolerances to stderr.
    #[arg(long, short, global = true)]
    verbose: bool,

    /// Write results here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Plain,
}

#[derive(Debug, Args)]
struct ParamArgs {
    /// JSON file with f0, x0, alpha, g, h (bare or under "params"); flags override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    f0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveFor {
    X0,
    Alpha,
    G,
    H,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// X(F) at one or more cumulative levels.
    Quantile {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long = "F", required = true, value_delimiter = ',', allow_negative_numbers = true)]
        levels: Vec<f64>,
    },
    /// F(x).
    Cdf {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, required = true, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
    },
    /// Density at x, or at cumulative levels with --F.
    Pdf {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with = "levels", required_unless_present = "levels")]
        x: Vec<f64>,
        #[arg(long = "F", value_delimiter = ',', allow_negative_numbers = true)]
        levels: Vec<f64>,
    },
    /// Case of (g, h).
    Classify {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, default_value_t = DEG_TOL)]
        deg_tol: f64,
    },
    /// Solve one parameter from X(F*) = x*.
    Design {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, value_enum)]
        solve: SolveFor,
        #[arg(long = "constraint-F", allow_negative_numbers = true)]
        constraint_f: f64,
        #[arg(long = "constraint-x", allow_negative_numbers = true)]
        constraint_x: f64,
    },
    /// Random sample by inverse transform.
    Sample {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Interpolate from a precomputed quantile table.
        #[arg(long)]
        table: bool,
        /// Write a JSON metadata sidecar here.
        #[arg(long)]
        meta: Option<PathBuf>,
    },
    /// Fit observations (file or stdin, one per line).
    Fit {
        input: Option<PathBuf>,
        /// Histogram bin count (default: Freedman–Diaconis).
        #[arg(long)]
        bins: Option<usize>,
        /// Skip the joint refinement after the two-step procedure.
        #[arg(long)]
        two_step: bool,
        /// Write the fitted curve (F, X, pdf) as CSV here.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// (F, X, pdf) triples on a grid.
    Curve {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, default_value_t = CURVE_POINTS)]
        points: usize,
        #[arg(long, default_value_t = CURVE_FROM)]
        from: f64,
        #[arg(long, default_value_t = CURVE_TO)]
        to: f64,
        /// Explicit levels; overrides --points/--from/--to.
        #[arg(long = "F", value_delimiter = ',')]
        levels: Vec<f64>,
    },
    /// Largest analytic-vs-ODE quantile deviation over a grid.
    OracleCheck {
        #[command(flatten)]
        p: ParamArgs,
        #[arg(long, default_value_t = OdeConfig::default().step_count)]
        steps: usize,
        #[arg(long, default_value_t = ORACLE_POINTS)]
        points: usize,
        #[arg(long, default_value_t = 0.01)]
        from: f64,
        #[arg(long, default_value_t = 0.99)]
        to: f64,
    },
}

/// Failure of a subcommand: usage problems map to exit 2, everything the
/// library rejects to exit 1.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.into())
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the program on `args` (including the program name), reading
/// standard input for `fit` when no path is given.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_input(args, &mut io::stdin().lock(), out, err)
}

pub fn run_with_input<I, T>(args: I, input: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let mut buffer = Vec::new();
    let result = dispatch(&cli, input, &mut buffer, err).and_then(|()| {
        match &cli.output {
            Some(path) => std::fs::write(path, &buffer)?,
            None => out.write_all(&buffer)?,
        }
        Ok(())
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Domain(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
    }
}

fn load_params_file(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("--params {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("--params {}: {e}", path.display())))?;
    Ok(match v.get("params") {
        Some(inner) if inner.is_object() => inner.clone(),
        _ => v,
    })
}

impl ParamArgs {
    fn partial(&self) -> Result<Partial, Failure> {
        let file = match &self.params {
            Some(p) => Some(load_params_file(p)?),
            None => None,
        };
        let from_file = |key: &str| -> Result<Option<f64>, Failure> {
            match file.as_ref().and_then(|f| f.get(key)) {
                None => Ok(None),
                Some(v) => v.as_f64().map(Some).ok_or_else(|| {
                    Failure::Usage(format!("--params: field {key:?} is not a number"))
                }),
            }
        };
        Ok(Partial {
            f0: self.f0.or(from_file("f0")?),
            x0: self.x0.or(from_file("x0")?),
            alpha: self.alpha.or(from_file("alpha")?),
            g: self.g.or(from_file("g")?),
            h: self.h.or(from_file("h")?),
        })
    }

    fn full(&self) -> Result<SParams, Failure> {
        let p = self.partial()?;
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| Failure::Usage(format!("missing required flag --{flag}")))
        };
        Ok(SParams::new(
            p.f0.unwrap_or(DEFAULT_F0),
            need(p.x0, "x0")?,
            need(p.alpha, "alpha")?,
            need(p.g, "g")?,
            need(p.h, "h")?,
        )?)
    }
}

/// JSON number, or `"+inf"`/`"-inf"`/`"nan"` where JSON has none.
fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::String(fmt(x))
    }
}

fn write_json(out: &mut dyn Write, v: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)
}

/// Two-column listing `(input, value)` in the chosen format.
fn write_pairs(
    out: &mut dyn Write,
    format: Format,
    names: (&str, &str),
    rows: &[(f64, f64)],
) -> io::Result<()> {
    match format {
        Format::Plain => {
            for (_, v) in rows {
                writeln!(out, "{}", fmt(*v))?;
            }
        }
        Format::Csv => {
            writeln!(out, "{},{}", names.0, names.1)?;
            for (k, v) in rows {
                writeln!(out, "{},{}", fmt(*k), fmt(*v))?;
            }
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|(k, v)| json!({ names.0: jnum(*k), names.1: jnum(*v) }))
                .collect();
            write_json(out, &Value::Array(arr))?;
        }
    }
    Ok(())
}

fn run_info(err: &mut dyn Write, extra: &[(&str, String)]) -> io::Result<()> {
    writeln!(err, "# defaults")?;
    let base = [
        ("f0", fmt(DEFAULT_F0)),
        ("deg_tol", fmt(DEG_TOL)),
        ("near_degenerate_tol", fmt(NEAR_DEGENERATE)),
        ("lerch_tol", fmt(lerch::DEFAULT_TOL)),
        ("lerch_shift_m", lerch::DEFAULT_SHIFT.to_string()),
        ("tail_switch_z", fmt(TAIL_Z)),
        ("cdf_tol", fmt(CDF_TOL)),
        ("oracle_steps", OdeConfig::default().step_count.to_string()),
        ("curve_grid", format!("{CURVE_POINTS} points on [{CURVE_FROM}, {CURVE_TO}]")),
    ];
    for (k, v) in base.iter().map(|(k, v)| (*k, v.clone())).chain(extra.iter().cloned()) {
        writeln!(err, "#   {k} = {v}")?;
    }
    Ok(())
}

fn grid(from: f64, to: f64, points: usize) -> Result<Vec<f64>, Failure> {
    if points < 2 || !(from < to) {
        return Err(Failure::Usage(format!(
            "grid needs --points >= 2 and --from < --to, got {points} on [{from}, {to}]"
        )));
    }
    let step = (to - from) / (points - 1) as f64;
    Ok((0..points).map(|i| from + step * i as f64).collect())
}

fn curve_rows(d: &SDistribution, levels: &[f64]) -> Result<Vec<[f64; 3]>, Failure> {
    levels
        .iter()
        .map(|&f| Ok([f, d.quantile(f)?, d.pdf_at_f(f)?]))
        .collect()
}

fn write_curve(out: &mut dyn Write, format: Format, rows: &[[f64; 3]]) -> io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "F,X,pdf")?;
            for r in rows {
                writeln!(out, "{},{},{}", fmt(r[0]), fmt(r[1]), fmt(r[2]))?;
            }
        }
        Format::Plain => {
            for r in rows {
                writeln!(out, "{} {} {}", fmt(r[0]), fmt(r[1]), fmt(r[2]))?;
            }
        }
        Format::Json => {
            let arr: Vec<Value> = rows
                .iter()
                .map(|r| json!({"F": jnum(r[0]), "X": jnum(r[1]), "pdf": jnum(r[2])}))
                .collect();
            write_json(out, &Value::Array(arr))?;
        }
    }
    Ok(())
}

fn dispatch(cli: &Cli, input: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let format = |default: Format| cli.format.unwrap_or(default);
    let verbose = |err: &mut dyn Write, extra: &[(&str, String)]| -> io::Result<()> {
        if cli.verbose {
            run_info(err, extra)?;
        }
        Ok(())
    };
    let route_of = |p: &SParams| -> Vec<(&'static str, String)> {
        Shape::new(p.g, p.h)
            .map(|s| {
                vec![
                    ("case", s.class().to_string()),
                    ("route", serde_json::to_string(&s.route()).unwrap_or_default()),
                ]
            })
            .unwrap_or_default()
    };

    match &cli.command {
        Command::Quantile { p, levels } => {
            let params = p.full()?;
            verbose(err, &route_of(&params))?;
            let d = SDistribution::new(params)?;
            let rows = levels
                .iter()
                .map(|&f| Ok((f, d.quantile(f)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            write_pairs(out, format(Format::Plain), ("F", "X"), &rows)?;
        }
        Command::Cdf { p, x } => {
            let params = p.full()?;
            verbose(err, &route_of(&params))?;
            let d = SDistribution::new(params)?;
            let rows = x
                .iter()
                .map(|&v| Ok((v, d.cdf(v)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            write_pairs(out, format(Format::Plain), ("x", "F"), &rows)?;
        }
        Command::Pdf { p, x, levels } => {
            let params = p.full()?;
            verbose(err, &route_of(&params))?;
            let d = SDistribution::new(params)?;
            if levels.is_empty() {
                let rows = x
                    .iter()
                    .map(|&v| Ok((v, d.pdf(v)?)))
                    .collect::<Result<Vec<_>, Error>>()?;
                write_pairs(out, format(Format::Plain), ("x", "pdf"), &rows)?;
            } else {
                let rows = levels
                    .iter()
                    .map(|&f| Ok((f, d.pdf_at_f(f)?)))
                    .collect::<Result<Vec<_>, Error>>()?;
                write_pairs(out, format(Format::Plain), ("F", "pdf"), &rows)?;
            }
        }
        Command::Classify { p, deg_tol } => {
            let part = p.partial()?;
            let g = part.g.ok_or_else(|| Failure::Usage("missing required flag --g".into()))?;
            let h = part.h.ok_or_else(|| Failure::Usage("missing required flag --h".into()))?;
            verbose(err, &[("deg_tol_used", fmt(*deg_tol))])?;
            let c = classify(g, h, *deg_tol)?;
            match format(Format::Plain) {
                Format::Plain => writeln!(out, "{c}")?,
                Format::Csv => {
                    writeln!(out, "g,h,case,degeneracy_index,finite_left")?;
                    let idx = c.degeneracy_index.map(|n| n.to_string()).unwrap_or_default();
                    writeln!(out, "{},{},{},{idx},{}", fmt(g), fmt(h), c.case, c.has_finite_left())?;
                }
                Format::Json => write_json(
                    out,
                    &json!({
                        "g": g,
                        "h": h,
                        "case": c.case,
                        "degeneracy_index": c.degeneracy_index,
                        "finite_left": c.has_finite_left(),
                    }),
                )?,
            }
        }
        Command::Design {
            p,
            solve,
            constraint_f,
            constraint_x,
        } => {
            let known = p.partial()?;
            let unknown = match solve {
                SolveFor::X0 => Unknown::X0,
                SolveFor::Alpha => Unknown::Alpha,
                SolveFor::G => Unknown::G,
                SolveFor::H => Unknown::H,
            };
            let c = QuantileConstraint::new(*constraint_f, *constraint_x)?;
            verbose(err, &[("shape_scan", "200 points, root tolerance 1e-12".into())])?;
            let d = design(unknown, c, &known)?;
            if d.multiple_roots {
                writeln!(err, "warning: several roots found; returned the one nearest the scan midpoint")?;
            }
            let value = match unknown {
                Unknown::X0 => d.params.x0,
                Unknown::Alpha => d.params.alpha,
                Unknown::G => d.params.g,
                Unknown::H => d.params.h,
            };
            match format(Format::Plain) {
                Format::Plain => writeln!(out, "{}", fmt(value))?,
                Format::Csv => {
                    writeln!(out, "f0,x0,alpha,g,h,f_star,x_star,achieved_x")?;
                    let q = d.params;
                    let v = d.verification;
                    let cells: Vec<String> = [q.f0, q.x0, q.alpha, q.g, q.h, v.f_star, v.x_star, v.achieved_x]
                        .iter()
                        .map(|x| fmt(*x))
                        .collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
                Format::Json => write_json(out, &serde_json::to_value(d).map_err(io::Error::from)?)?,
            }
        }
        Command::Sample {
            p,
            n,
            seed,
            stream,
            table,
            meta,
        } => {
            if *n == 0 {
                return Err(Failure::Usage("--n must be at least 1".into()));
            }
            let params = p.full()?;
            let mut s = Sampler::with_stream(params, *seed, *stream)?;
            let table_error = if *table {
                Some(s.use_table()?.max_error())
            } else {
                None
            };
            let mut values = vec![0.0; *n];
            s.fill(&mut values)?;
            let mut extra = route_of(&params);
            extra.push(("generator", GENERATOR_ID.into()));
            extra.push(("uniform_clamp", fmt(U_EPS)));
            if let Some(e) = table_error {
                extra.push(("table", format!("{TABLE_KNOTS} knots, max F error {}", fmt(e))));
            }
            verbose(err, &extra)?;
            let metadata = json!({
                "params": params,
                "n": n,
                "seed": seed,
                "stream": stream,
                "generator_id": GENERATOR_ID,
                "table_max_error": table_error,
            });
            if let Some(path) = meta {
                let mut f = File::create(path)?;
                write_json(&mut f, &metadata)?;
            }
            match format(Format::Plain) {
                Format::Plain => {
                    for v in &values {
                        writeln!(out, "{}", fmt(*v))?;
                    }
                }
                Format::Csv => {
                    writeln!(out, "x")?;
                    for v in &values {
                        writeln!(out, "{}", fmt(*v))?;
                    }
                }
                Format::Json => {
                    let mut m = metadata;
                    m["values"] = json!(values);
                    write_json(out, &m)?;
                }
            }
        }
        Command::Fit {
            input: path,
            bins,
            two_step,
            curve,
        } => {
            let data = match path {
                Some(p) => parse_observations(BufReader::new(File::open(p)?))?,
                None => parse_observations(input)?,
            };
            let cfg = FitConfig {
                bins: bins.map_or(Bins::Auto, Bins::Count),
                refine: !*two_step,
                ..FitConfig::default()
            };
            verbose(
                err,
                &[
                    ("bins", bins.map_or("auto (2 IQR n^-1/3)".into(), |b| b.to_string())),
                    ("plotting_positions", "(i - 0.5)/n".into()),
                    ("refinement", (!*two_step).to_string()),
                ],
            )?;
            let r = fit(&data, &cfg)?;
            if let Some(path) = curve {
                let d = SDistribution::new(r.params)?;
                let rows = curve_rows(&d, &grid(CURVE_FROM, CURVE_TO, CURVE_POINTS)?)?;
                let mut f = File::create(path)?;
                write_curve(&mut f, Format::Csv, &rows)?;
            }
            let q = r.params;
            match format(Format::Json) {
                Format::Json => write_json(out, &serde_json::to_value(&r).map_err(io::Error::from)?)?,
                Format::Csv => {
                    writeln!(out, "f0,x0,alpha,g,h")?;
                    writeln!(out, "{},{},{},{},{}", fmt(q.f0), fmt(q.x0), fmt(q.alpha), fmt(q.g), fmt(q.h))?;
                }
                Format::Plain => {
                    for (k, v) in [("f0", q.f0), ("x0", q.x0), ("alpha", q.alpha), ("g", q.g), ("h", q.h)] {
                        writeln!(out, "{k} {}", fmt(v))?;
                    }
                }
            }
        }
        Command::Curve {
            p,
            points,
            from,
            to,
            levels,
        } => {
            let params = p.full()?;
            verbose(err, &route_of(&params))?;
            let d = SDistribution::new(params)?;
            let levels = if levels.is_empty() {
                grid(*from, *to, *points)?
            } else {
                levels.clone()
            };
            write_curve(out, format(Format::Csv), &curve_rows(&d, &levels)?)?;
        }
        Command::OracleCheck {
            p,
            steps,
            points,
            from,
            to,
        } => {
            let params = p.full()?;
            let mut extra = route_of(&params);
            extra.push(("oracle_steps_used", steps.to_string()));
            verbose(err, &extra)?;
            let d = SDistribution::new(params)?;
            let cfg = OdeConfig::with_steps(*steps);
            let (mut max_abs, mut max_rel, mut at) = (0.0f64, 0.0f64, f64::NAN);
            for f in grid(*from, *to, *points)? {
                let a = d.quantile(f)?;
                let o = oracle_quantile(&params, f, &cfg)?;
                let dev = (a - o).abs();
                if dev > max_abs || at.is_nan() {
                    max_abs = dev;
                    at = f;
                }
                max_rel = max_rel.max(dev / (1.0 + a.abs()));
            }
            match format(Format::Plain) {
                Format::Plain => writeln!(out, "{}", fmt(max_abs))?,
                Format::Csv => {
                    writeln!(out, "max_abs,max_rel,at_F")?;
                    writeln!(out, "{},{},{}", fmt(max_abs), fmt(max_rel), fmt(at))?;
                }
                Format::Json => write_json(
                    out,
                    &json!({"max_abs": max_abs, "max_rel": max_rel, "at_F": at, "steps": steps, "points": points}),
                )?,
            }
        }
    }
    Ok(())
}
