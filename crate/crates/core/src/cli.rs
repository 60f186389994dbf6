//! The `ostrowski` command line.
//!
//! Exit codes: 0 on success, 1 when the inequality is violated or cubature
//! runs out of budget, 2 on usage, parse or input errors. Reports are fully
//! written before the process exits.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::cubature;
use crate::ostrowski::{self, ConstantCase, EvalPoint, Rect, SubRect, Surface, CONSTANT_MATCH_TOL};
use crate::quad::{Interval, QuadConfig};
use crate::report::{self, RunInfo};
use crate::weight::WeightSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "ostrowski",
    version,
    about = "Weighted Ostrowski-type bounds for double integrals",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the defect and its bound at one point.
    Verify(VerifyArgs),
    /// Evaluate the defect and bound on a cell-centred grid of points.
    Sweep(SweepArgs),
    /// Certified adaptive cubature of the weighted double integral.
    Cubature(CubatureArgs),
    /// Weighted median of a weight on an interval.
    Median(MedianArgs),
    /// Compare a closed-form constant with the value recomputed from moments.
    Constants(ConstantsArgs),
}

#[derive(Debug, Args)]
struct ProblemArgs {
    /// f(t, s), e.g. "t*s*sin(t+s)".
    #[arg(long, allow_hyphen_values = true)]
    function: String,
    /// `const`, `linear` or `expr:<formula in u>`.
    #[arg(long, default_value = "const")]
    weight: String,
    /// Rectangle a,b,c,d for [a,b]×[c,d].
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    rect: [f64; 4],
    /// Sub-rectangle α₁,α₂,β₁,β₂; defaults to the whole rectangle.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    subrect: Option<[f64; 4]>,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Debug, Args)]
struct TolArgs {
    /// Absolute quadrature tolerance.
    #[arg(long, default_value_t = QuadConfig::default().abs_tol)]
    abs_tol: f64,
    /// Relative quadrature tolerance.
    #[arg(long, default_value_t = QuadConfig::default().rel_tol)]
    rel_tol: f64,
}

impl TolArgs {
    fn config(&self) -> QuadConfig {
        QuadConfig {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            ..QuadConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// key=value file with the same keys as the flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Evaluation point x,y, or `mid` for the sub-rectangle midpoint.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: PointArg,
    /// Use this value for sup |∂²f/∂t∂s| instead of estimating it.
    #[arg(long, allow_hyphen_values = true)]
    sup_norm: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Points per axis nx,ny (each at least 2).
    #[arg(long, value_parser = parse_grid)]
    grid: (usize, usize),
    /// Use this value for sup |∂²f/∂t∂s| instead of estimating it.
    #[arg(long, allow_hyphen_values = true)]
    sup_norm: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct CubatureArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Stop once the certified error bound is at most this.
    #[arg(long)]
    target_error: f64,
    /// Cell budget.
    #[arg(long, default_value_t = 200_000)]
    max_cells: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct MedianArgs {
    /// `const`, `linear` or `expr:<formula in u>`.
    #[arg(long, default_value = "const")]
    weight: String,
    /// Interval lo,hi.
    #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
    interval: (f64, f64),
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct ConstantsArgs {
    /// Which closed form to audit.
    #[arg(long, value_parser = parse_case)]
    case: ConstantCase,
    /// Rectangle a,b,c,d.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    rect: [f64; 4],
    /// Sub-rectangle α₁,α₂,β₁,β₂ (required by w1-subrect).
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    subrect: Option<[f64; 4]>,
    #[command(flatten)]
    tol: TolArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy)]
enum PointArg {
    Mid,
    At(f64, f64),
}

fn parse_reals(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got `{s}`"));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{p}` is not a finite number"))
        })
        .collect()
}

fn parse_rect(s: &str) -> Result<[f64; 4], String> {
    let v = parse_reals(s, 4)?;
    Ok([v[0], v[1], v[2], v[3]])
}

fn parse_interval(s: &str) -> Result<(f64, f64), String> {
    let v = parse_reals(s, 2)?;
    Ok((v[0], v[1]))
}

fn parse_point(s: &str) -> Result<PointArg, String> {
    if s.trim() == "mid" {
        return Ok(PointArg::Mid);
    }
    let (x, y) = parse_interval(s)?;
    Ok(PointArg::At(x, y))
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [nx, ny] => {
            let n = |p: &str| {
                p.parse::<usize>()
                    .map_err(|_| format!("`{p}` is not a count"))
            };
            Ok((n(nx)?, n(ny)?))
        }
        _ => Err(format!("expected nx,ny, got `{s}`")),
    }
}

fn parse_case(s: &str) -> Result<ConstantCase, String> {
    ConstantCase::from_tag(s)
        .ok_or_else(|| format!("unknown case `{s}`; use w1-midpoint, w1-subrect or wu-midpoint"))
}

/// A failure that maps to exit code 2, tagged with the flag it came from.
struct Failure(String);

impl Failure {
    fn at(flag: &str, e: impl std::fmt::Display) -> Failure {
        Failure(format!("{flag}: {e}"))
    }
}

impl From<crate::Error> for Failure {
    fn from(e: crate::Error) -> Failure {
        Failure(e.to_string())
    }
}

/// Reads a `key = value` file, skipping blanks and `#` comments, into flags.
fn config_flags(path: &str) -> Result<Vec<String>, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::at("--config", format!("{path}: {e}")))?;
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Failure::at(
                "--config",
                format!("{path}:{}: expected key = value", n + 1),
            )
        })?;
        let key = key.trim().replace('_', "-");
        if key == "config" {
            return Err(Failure::at(
                "--config",
                format!("{path}:{}: nested config", n + 1),
            ));
        }
        flags.push(format!("--{key}={}", value.trim()));
    }
    Ok(flags)
}

/// Splices flags from any `--config` file right after the subcommand so that
/// explicit flags, which come later, override them.
fn expand_config(argv: &[String]) -> Result<Vec<String>, Failure> {
    let mut path = None;
    for (i, arg) in argv.iter().enumerate().skip(1) {
        if arg == "--config" {
            path = argv.get(i + 1).cloned();
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(argv.to_vec());
    };
    let Some(sub) = argv.iter().skip(1).position(|a| !a.starts_with('-')) else {
        return Ok(argv.to_vec());
    };
    let at = sub + 2;
    let mut out = argv[..at].to_vec();
    out.extend(config_flags(&path)?);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

struct Problem {
    f: Surface,
    w: WeightSpec,
    rect: Rect,
    sub: SubRect,
    cfg: QuadConfig,
}

impl ProblemArgs {
    fn build(&self) -> Result<Problem, Failure> {
        let f = Surface::parse(&self.function).map_err(|e| Failure::at("--function", e))?;
        let [a, b, c, d] = self.rect;
        let rect = Rect::new(a, b, c, d).map_err(|e| Failure::at("--rect", e))?;
        let sub = match self.subrect {
            Some([a1, a2, b1, b2]) => {
                SubRect::within(&rect, a1, a2, b1, b2).map_err(|e| Failure::at("--subrect", e))?
            }
            None => SubRect::full(&rect),
        };
        let cfg = self.tol.config();
        cfg.validate()
            .map_err(|e| Failure::at("--abs-tol/--rel-tol", e))?;
        let w = WeightSpec::from_selector(&self.weight, rect.weight_domain())
            .and_then(|w| w.with_quad(cfg))
            .map_err(|e| Failure::at("--weight", e))?;
        Ok(Problem {
            f,
            w,
            rect,
            sub,
            cfg,
        })
    }

    fn run_info(&self, command: &str, p: &Problem) -> RunInfo {
        RunInfo {
            command: command.into(),
            function: Some(self.function.clone()),
            weight: p.w.to_string(),
            rect: p.rect,
            tolerances: p.cfg,
        }
    }
}

fn check_sup(v: Option<f64>) -> Result<(), Failure> {
    match v {
        Some(m) if !(m >= 0.0 && m.is_finite()) => Err(Failure::at(
            "--sup-norm",
            format!("must be finite and nonnegative, got {m}"),
        )),
        _ => Ok(()),
    }
}

fn pick_format(
    chosen: Option<Format>,
    default: Format,
    allowed: &[Format],
) -> Result<Format, Failure> {
    let f = chosen.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        let names: Vec<&str> = allowed
            .iter()
            .map(|f| match f {
                Format::Json => "json",
                Format::Csv => "csv",
                Format::Text => "text",
            })
            .collect();
        Err(Failure::at(
            "--format",
            format!("this command supports {}", names.join(", ")),
        ))
    }
}

/// An emitted report plus the exit code it implies.
struct Outcome {
    body: String,
    code: i32,
    notes: Vec<String>,
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome, Failure> {
    let p = a.problem.build()?;
    check_sup(a.sup_norm)?;
    let format = pick_format(a.output.format, Format::Json, &[Format::Json, Format::Csv])?;
    let point = match a.point {
        PointArg::Mid => p.sub.as_rect().midpoint(),
        PointArg::At(x, y) => EvalPoint::new(x, y),
    };
    if !p.sub.contains(&point) {
        return Err(Failure::at(
            "--point",
            "point lies outside the sub-rectangle",
        ));
    }
    let r = ostrowski::verify_with(&p.f, &p.w, &p.sub, &point, &p.cfg, a.sup_norm)?;
    let run = a.problem.run_info("verify", &p);
    let body = match format {
        Format::Csv => report::write_csv(std::slice::from_ref(&r)),
        _ => report::bound_json(&run, &r).render(),
    };
    let mut notes = Vec::new();
    if !r.quad_converged {
        notes.push("warning: quadrature did not reach the requested tolerance".into());
    }
    Ok(Outcome {
        body,
        code: if r.satisfied { EXIT_OK } else { EXIT_VIOLATED },
        notes,
    })
}

fn run_sweep(a: &SweepArgs) -> Result<Outcome, Failure> {
    let p = a.problem.build()?;
    check_sup(a.sup_norm)?;
    let format = pick_format(a.output.format, Format::Json, &[Format::Json, Format::Csv])?;
    let results = ostrowski::sweep(&p.f, &p.w, &p.sub, a.grid, &p.cfg, a.sup_norm)
        .map_err(|e| Failure::at("--grid", e))?;
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        reports.push(r?);
    }
    let run = a.problem.run_info("sweep", &p);
    let body = match format {
        Format::Csv => report::write_csv(&reports),
        _ => report::sweep_json(&run, &reports).render(),
    };
    let violated = reports.iter().filter(|r| !r.satisfied).count();
    let mut notes = Vec::new();
    if violated > 0 {
        notes.push(format!(
            "{violated} of {} points violate the bound",
            reports.len()
        ));
    }
    Ok(Outcome {
        body,
        code: if violated == 0 {
            EXIT_OK
        } else {
            EXIT_VIOLATED
        },
        notes,
    })
}

fn run_cubature(a: &CubatureArgs) -> Result<Outcome, Failure> {
    let p = a.problem.build()?;
    pick_format(a.output.format, Format::Json, &[Format::Json])?;
    if !(a.target_error > 0.0 && a.target_error.is_finite()) {
        return Err(Failure::at("--target-error", "must be positive and finite"));
    }
    if a.max_cells == 0 {
        return Err(Failure::at("--max-cells", "must be at least 1"));
    }
    let r = cubature::integrate(&p.f, &p.w, &p.rect, a.target_error, a.max_cells, &p.cfg)?;
    let run = a.problem.run_info("cubature", &p);
    let body = report::cubature_json(&run, a.target_error, a.max_cells, &r).render();
    let mut notes = Vec::new();
    if !r.converged {
        notes.push(format!(
            "not converged: error bound {} after {} cells",
            report::format_g17(r.error_bound),
            r.cells
        ));
    }
    Ok(Outcome {
        body,
        code: if r.converged { EXIT_OK } else { EXIT_VIOLATED },
        notes,
    })
}

fn run_median(a: &MedianArgs) -> Result<Outcome, Failure> {
    let format = pick_format(a.output.format, Format::Text, &[Format::Text, Format::Json])?;
    let (lo, hi) = a.interval;
    let iv = Interval::new(lo, hi).map_err(|e| Failure::at("--interval", e))?;
    let cfg = a.tol.config();
    cfg.validate()
        .map_err(|e| Failure::at("--abs-tol/--rel-tol", e))?;
    let w = WeightSpec::from_selector(&a.weight, iv)
        .and_then(|w| w.with_quad(cfg))
        .map_err(|e| Failure::at("--weight", e))?;
    let median = w.weighted_median(&iv)?;
    let body = match format {
        Format::Json => {
            let mass = w.mass(&iv)?;
            let moment = w.abs_moment(&iv, median)?;
            report::median_json(&w.to_string(), &iv, median, mass, moment).render()
        }
        _ => format!("{}\n", report::format_g17(median)),
    };
    Ok(Outcome {
        body,
        code: EXIT_OK,
        notes: Vec::new(),
    })
}

fn run_constants(a: &ConstantsArgs) -> Result<Outcome, Failure> {
    pick_format(a.output.format, Format::Json, &[Format::Json])?;
    let [ra, rb, rc, rd] = a.rect;
    let rect = Rect::new(ra, rb, rc, rd).map_err(|e| Failure::at("--rect", e))?;
    let sub = match a.subrect {
        Some([a1, a2, b1, b2]) => {
            Some(SubRect::within(&rect, a1, a2, b1, b2).map_err(|e| Failure::at("--subrect", e))?)
        }
        None => None,
    };
    let c = ostrowski::closed_form_constant(a.case, &rect, sub.as_ref())?;
    let run = RunInfo {
        command: "constants".into(),
        function: None,
        weight: match a.case {
            ConstantCase::WuMidpoint => "linear".into(),
            _ => "const".into(),
        },
        rect,
        tolerances: a.tol.config(),
    };
    let mut notes = Vec::new();
    if c.mismatch {
        notes.push(format!(
            "mismatch: printed constant {} differs from recomputed {} (relative tolerance {})",
            report::format_g17(c.printed_value),
            report::format_g17(c.derived_value),
            report::format_g17(CONSTANT_MATCH_TOL)
        ));
    }
    Ok(Outcome {
        body: report::constant_json(&run, &c).render(),
        code: EXIT_OK,
        notes,
    })
}

/// Runs the CLI on `argv` (program name first) with the given streams.
pub fn run_with_io(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    let (outcome, dest) = match &cli.command {
        Command::Verify(a) => (run_verify(a), &a.output.out),
        Command::Sweep(a) => (run_sweep(a), &a.output.out),
        Command::Cubature(a) => (run_cubature(a), &a.output.out),
        Command::Median(a) => (run_median(a), &a.output.out),
        Command::Constants(a) => (run_constants(a), &a.output.out),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let written = match dest {
        Some(path) => {
            fs::write(path, &outcome.body).map_err(|e| format!("--out: {}: {e}", path.display()))
        }
        None => out
            .write_all(outcome.body.as_bytes())
            .and_then(|_| out.flush())
            .map_err(|e| format!("writing report: {e}")),
    };
    if let Err(msg) = written {
        let _ = writeln!(err, "error: {msg}");
        return EXIT_USAGE;
    }
    for note in &outcome.notes {
        let _ = writeln!(err, "{note}");
    }
    outcome.code
}

/// Runs the CLI against the process's standard streams.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(argv, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let argv: Vec<String> = std::iter::once("ostrowski")
            .chain(args.iter().copied())
            .map(String::from)
            .collect();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with_io(&argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn verify_midpoint_product() {
        let (code, out, _) = call(&[
            "verify",
            "--function",
            "t*s",
            "--weight",
            "const",
            "--rect",
            "0,1,0,1",
            "--point",
            "0.5,0.5",
            "--format",
            "json",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["defect"], 0.0);
        assert_eq!(v["bound"], 0.0625);
        assert_eq!(v["satisfied"], true);
    }

    #[test]
    fn median_of_linear_weight() {
        let (code, out, _) = call(&["median", "--weight", "linear", "--interval", "0,2"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("1.41421356237"), "{out}");
    }

    #[test]
    fn parse_error_names_offset() {
        let (code, _, err) = call(&[
            "verify",
            "--function",
            "t*(s",
            "--rect",
            "0,1,0,1",
            "--point",
            "mid",
        ]);
        assert_eq!(code, 2);
        assert!(
            err.contains("--function") && err.contains("offset 4"),
            "{err}"
        );
    }

    #[test]
    fn missing_required_flag_is_usage_error() {
        let (code, _, err) = call(&["sweep", "--function", "t*s", "--rect", "0,1,0,1"]);
        assert_eq!(code, 2);
        assert!(err.contains("--grid"));
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        for cmd in ["verify", "sweep", "cubature", "median", "constants"] {
            assert!(out.contains(cmd));
        }
        let (code, out, _) = call(&["verify", "--help"]);
        assert_eq!(code, 0);
        for flag in ["--function", "--sup-norm", "--config", "--abs-tol"] {
            assert!(out.contains(flag), "{flag}");
        }
    }

    #[test]
    fn negative_rect_values_parse() {
        let (code, out, _) = call(&[
            "verify",
            "--function",
            "t*s",
            "--weight",
            "const",
            "--rect",
            "-1,1,-1,1",
            "--point",
            "-0.5,0.25",
        ]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["point"][0], -0.5);
    }

    #[test]
    fn wrong_format_for_command() {
        let (code, _, err) = call(&["median", "--interval", "0,1", "--format", "csv"]);
        assert_eq!(code, 2);
        assert!(err.contains("--format"));
    }

    #[test]
    fn unconverged_cubature_exits_one() {
        let (code, out, err) = call(&[
            "cubature",
            "--function",
            "t^2*s^2",
            "--rect",
            "0,1,0,1",
            "--target-error",
            "1e-9",
            "--max-cells",
            "4",
        ]);
        assert_eq!(code, 1);
        assert!(err.contains("not converged"));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["converged"], false);
        assert_eq!(v["cells"], 4);
    }

    #[test]
    fn point_outside_is_input_error() {
        let (code, _, err) = call(&[
            "verify",
            "--function",
            "t*s",
            "--rect",
            "0,1,0,1",
            "--point",
            "2,0.5",
        ]);
        assert_eq!(code, 2);
        assert!(err.contains("--point"));
    }
}
