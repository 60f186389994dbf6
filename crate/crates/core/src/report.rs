//! JSON and CSV emitters.
//!
//! Numbers are written with 17 significant digits in the style of C's `%.17g`,
//! which round-trips every finite `f64`. Negative zero is written as `0` and
//! non-finite values become `null` in JSON.

use std::fmt::Write as _;

use crate::cubature::CubatureResult;
use crate::ostrowski::{BoundReport, ConstantComparison, EvalPoint, Rect, SubRect};
use crate::quad::{Interval, QuadConfig};

pub const SCHEMA_VERSION: u64 = 1;

/// `%.17g` with `-0` normalized to `0`. Non-finite values print as
/// `nan`, `inf` and `-inf`.
pub fn format_g17(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Num(f64),
    Int(u64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(&'static str, Json)>),
}

impl Json {
    fn num(v: f64) -> Json {
        Json::Num(v)
    }

    fn nums(vs: &[f64]) -> Json {
        Json::Arr(vs.iter().copied().map(Json::Num).collect())
    }

    fn is_scalar(&self) -> bool {
        !matches!(self, Json::Arr(_) | Json::Obj(_))
    }

    /// Two-space indented text; arrays of scalars stay on one line.
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out, 0);
        out.push('\n');
        out
    }

    fn write(&self, out: &mut String, depth: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Num(v) if v.is_finite() => out.push_str(&format_g17(*v)),
            Json::Num(_) => out.push_str("null"),
            Json::Int(n) => {
                let _ = write!(out, "{n}");
            }
            Json::Str(s) => out.push_str(&serde_json::to_string(s).expect("string escape")),
            Json::Arr(items) if items.iter().all(Json::is_scalar) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write(out, depth);
                }
                out.push(']');
            }
            Json::Arr(items) => {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    indent(out, depth + 1);
                    item.write(out, depth + 1);
                    out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
                }
                indent(out, depth);
                out.push(']');
            }
            Json::Obj(fields) => {
                out.push_str("{\n");
                for (i, (key, value)) in fields.iter().enumerate() {
                    indent(out, depth + 1);
                    let _ = write!(out, "\"{key}\": ");
                    value.write(out, depth + 1);
                    out.push_str(if i + 1 < fields.len() { ",\n" } else { "\n" });
                }
                indent(out, depth);
                out.push('}');
            }
        }
    }
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("  ");
    }
}

/// Run-level fields shared by every record of one invocation.
#[derive(Debug, Clone)]
pub struct RunInfo {
    pub command: String,
    pub function: Option<String>,
    pub weight: String,
    pub rect: Rect,
    pub tolerances: QuadConfig,
}

fn rect_json(r: &Rect) -> Json {
    Json::nums(&[r.t_iv.lo(), r.t_iv.hi(), r.s_iv.lo(), r.s_iv.hi()])
}

fn subrect_json(s: &SubRect) -> Json {
    rect_json(&s.as_rect())
}

fn point_json(p: &EvalPoint) -> Json {
    Json::nums(&[p.x, p.y])
}

fn tolerances_json(q: &QuadConfig) -> Json {
    Json::Obj(vec![
        ("abs_tol", Json::num(q.abs_tol)),
        ("rel_tol", Json::num(q.rel_tol)),
        ("max_depth", Json::Int(q.max_depth as u64)),
        ("min_cell_width", Json::num(q.min_cell_width)),
    ])
}

fn str_or_null(s: &Option<String>) -> Json {
    s.as_ref().map_or(Json::Null, |s| Json::Str(s.clone()))
}

/// One point report in the fixed key order.
pub fn bound_json(run: &RunInfo, r: &BoundReport) -> Json {
    Json::Obj(vec![
        ("schema_version", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str(run.command.clone())),
        ("function", str_or_null(&run.function)),
        ("weight", Json::Str(run.weight.clone())),
        ("rect", rect_json(&run.rect)),
        ("subrect", subrect_json(&r.subrect)),
        ("point", point_json(&r.point)),
        ("m_alpha", Json::num(r.moments.m_alpha)),
        ("m_beta", Json::num(r.moments.m_beta)),
        ("A", Json::num(r.moments.a)),
        ("B", Json::num(r.moments.b)),
        ("sup_norm", Json::num(r.sup_norm)),
        ("sup_norm_method", Json::Str(r.sup_norm_method.tag().into())),
        ("defect", Json::num(r.defect)),
        ("bound", Json::num(r.bound)),
        ("ratio", Json::num(r.ratio)),
        ("satisfied", Json::Bool(r.satisfied)),
        ("paper_constant", Json::Null),
        ("derived_constant", Json::Null),
        ("quad_evaluations", Json::Int(r.quad_evaluations)),
        ("tolerances", tolerances_json(&run.tolerances)),
    ])
}

/// A constants comparison in the point-report schema. `sup_norm` is the
/// implied `M = 1`; no defect is computed. A mismatch shows as differing
/// `paper_constant` and `derived_constant`.
pub fn constant_json(run: &RunInfo, c: &ConstantComparison) -> Json {
    Json::Obj(vec![
        ("schema_version", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str(run.command.clone())),
        ("function", str_or_null(&run.function)),
        ("weight", Json::Str(run.weight.clone())),
        ("rect", rect_json(&run.rect)),
        ("subrect", subrect_json(&c.subrect)),
        ("point", point_json(&c.point)),
        ("m_alpha", Json::num(c.moments.m_alpha)),
        ("m_beta", Json::num(c.moments.m_beta)),
        ("A", Json::num(c.moments.a)),
        ("B", Json::num(c.moments.b)),
        ("sup_norm", Json::num(1.0)),
        ("sup_norm_method", Json::Str("override".into())),
        ("defect", Json::Null),
        ("bound", Json::num(c.derived_value)),
        ("ratio", Json::Null),
        ("satisfied", Json::Null),
        ("paper_constant", Json::num(c.printed_value)),
        ("derived_constant", Json::num(c.derived_value)),
        ("quad_evaluations", Json::Int(0)),
        ("tolerances", tolerances_json(&run.tolerances)),
    ])
}

pub fn sweep_json(run: &RunInfo, reports: &[BoundReport]) -> Json {
    Json::Arr(reports.iter().map(|r| bound_json(run, r)).collect())
}

pub fn cubature_json(
    run: &RunInfo,
    target_error: f64,
    max_cells: usize,
    r: &CubatureResult,
) -> Json {
    Json::Obj(vec![
        ("schema_version", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str(run.command.clone())),
        ("function", str_or_null(&run.function)),
        ("weight", Json::Str(run.weight.clone())),
        ("rect", rect_json(&run.rect)),
        ("target_error", Json::num(target_error)),
        ("max_cells", Json::Int(max_cells as u64)),
        ("value", Json::num(r.value)),
        ("error_bound", Json::num(r.error_bound)),
        ("cells", Json::Int(r.cells as u64)),
        ("evaluations", Json::Int(r.evaluations)),
        ("converged", Json::Bool(r.converged)),
        ("root_grid", Json::Int(r.root_grid as u64)),
        ("cell_grid", Json::Int(r.cell_grid as u64)),
        ("tolerances", tolerances_json(&run.tolerances)),
    ])
}

pub fn median_json(weight: &str, iv: &Interval, median: f64, mass: f64, a: f64) -> Json {
    Json::Obj(vec![
        ("schema_version", Json::Int(SCHEMA_VERSION)),
        ("command", Json::Str("median".into())),
        ("weight", Json::Str(weight.into())),
        ("interval", Json::nums(&[iv.lo(), iv.hi()])),
        ("median", Json::num(median)),
        ("mass", Json::num(mass)),
        ("A", Json::num(a)),
    ])
}

pub const CSV_HEADER: &str = "x,y,defect,bound,ratio,satisfied";

/// Header plus one row per report, LF endings.
pub fn write_csv(reports: &[BoundReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            format_g17(r.point.x),
            format_g17(r.point.y),
            format_g17(r.defect),
            format_g17(r.bound),
            format_g17(r.ratio),
            r.satisfied
        );
    }
    out
}
