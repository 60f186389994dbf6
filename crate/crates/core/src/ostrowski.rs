//! The weighted Ostrowski-type inequality on a (sub)rectangle.
//!
//! For a weight `w`, a sub-rectangle `[α₁,α₂]×[β₁,β₂]` and a point `(x, y)`
//! inside it, write `m_α`, `m_β` for the weight masses of the two sides and
//! `A`, `B` for the absolute first moments of the weight about `x` and `y`.
//! Then, with `M = sup |∂²f/∂t∂s|` over the sub-rectangle,
//!
//! ```text
//! defect = | f(x,y) - (1/m_α)∫w(t)f(t,y)dt - (1/m_β)∫w(s)f(x,s)ds
//!                   + (1/(m_α m_β))∫∫w(t)w(s)f(t,s)ds dt |
//!        ≤ A·B·M / (m_α m_β) = bound
//! ```
//!
//! The signed quantity inside the modulus equals the kernel integral
//! `(1/(m_α m_β))∫∫P(x,t)Q(y,s)∂²f/∂t∂s`; [`identity_residual`] checks that
//! equality numerically. The full rectangle is the special case
//! `SubRect::full`.

use rayon::prelude::*;

use crate::expr::{self, Expr};
use crate::kernel::KernelSpec;
use crate::quad::{integrate_1d, integrate_2d, Interval, QuadConfig};
use crate::weight::{MomentSet, WeightSpec};
use crate::{Error, Result};

/// Multiplicative slack on the bound when deciding `satisfied`.
pub const SATISFY_REL: f64 = 1e-8;
/// Additive slack on the bound when deciding `satisfied`.
pub const SATISFY_ABS: f64 = 1e-9;

/// Grid points per axis for the sup-norm search.
pub const SUP_GRID: usize = 201;
/// Step of the central-difference fallback for the mixed partial.
pub const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub t_iv: Interval,
    pub s_iv: Interval,
}

impl Rect {
    /// `[a,b]×[c,d]`.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Rect> {
        Ok(Rect {
            t_iv: Interval::new(a, b)?,
            s_iv: Interval::new(c, d)?,
        })
    }

    /// The interval a single weight must cover to serve both axes.
    pub fn weight_domain(&self) -> Interval {
        self.t_iv.hull(&self.s_iv)
    }

    pub fn midpoint(&self) -> EvalPoint {
        EvalPoint {
            x: self.t_iv.midpoint(),
            y: self.s_iv.midpoint(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubRect {
    pub t_sub: Interval,
    pub s_sub: Interval,
}

impl SubRect {
    /// `[α₁,α₂]×[β₁,β₂]`, which must lie inside `parent`.
    pub fn within(parent: &Rect, a1: f64, a2: f64, b1: f64, b2: f64) -> Result<SubRect> {
        let t_sub = Interval::new(a1, a2)?;
        let s_sub = Interval::new(b1, b2)?;
        if !parent.t_iv.contains_interval(&t_sub) || !parent.s_iv.contains_interval(&s_sub) {
            return Err(Error::Precondition(format!(
                "sub-rectangle [{a1}, {a2}]×[{b1}, {b2}] is not inside the domain"
            )));
        }
        Ok(SubRect { t_sub, s_sub })
    }

    pub fn full(rect: &Rect) -> SubRect {
        SubRect {
            t_sub: rect.t_iv,
            s_sub: rect.s_iv,
        }
    }

    pub fn as_rect(&self) -> Rect {
        Rect {
            t_iv: self.t_sub,
            s_iv: self.s_sub,
        }
    }

    pub fn contains(&self, p: &EvalPoint) -> bool {
        self.t_sub.contains(p.x) && self.s_sub.contains(p.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub x: f64,
    pub y: f64,
}

impl EvalPoint {
    pub fn new(x: f64, y: f64) -> EvalPoint {
        EvalPoint { x, y }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MixedPartial {
    Symbolic(Expr),
    /// Central differences with step [`FD_STEP`].
    Numeric,
}

/// A function `f(t, s)` together with its mixed partial `∂²f/∂t∂s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    source: String,
    expr: Expr,
    mixed: MixedPartial,
}

impl Surface {
    /// Parses `f(t, s)`; falls back to finite differences when the mixed
    /// partial has no symbolic form (e.g. `abs`).
    pub fn parse(source: &str) -> Result<Surface> {
        let expr = expr::parse(source, &["t", "s"])?;
        let mixed = match expr.diff("t").and_then(|d| d.diff("s")) {
            Ok(d) => MixedPartial::Symbolic(d),
            Err(_) => MixedPartial::Numeric,
        };
        Ok(Surface {
            source: source.to_string(),
            expr,
            mixed,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn mixed_partial(&self) -> &MixedPartial {
        &self.mixed
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        Ok(self.expr.eval(&[t, s])?)
    }

    pub fn mixed(&self, t: f64, s: f64) -> Result<f64> {
        match &self.mixed {
            MixedPartial::Symbolic(d) => Ok(d.eval(&[t, s])?),
            MixedPartial::Numeric => {
                let h = FD_STEP;
                let v = (self.eval(t + h, s + h)?
                    - self.eval(t + h, s - h)?
                    - self.eval(t - h, s + h)?
                    + self.eval(t - h, s - h)?)
                    / (4.0 * h * h);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite {
                        value: v,
                        at: vec![t, s],
                    })
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupNormMethod {
    SymbolicGrid,
    NumericGrid,
    /// Supplied by the caller.
    Override,
}

impl SupNormMethod {
    pub fn tag(self) -> &'static str {
        match self {
            SupNormMethod::SymbolicGrid => "symbolic-grid",
            SupNormMethod::NumericGrid => "numeric-grid",
            SupNormMethod::Override => "override",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupNorm {
    pub value: f64,
    pub method: SupNormMethod,
    /// Mixed-partial evaluations spent on the estimate.
    pub evaluations: u64,
}

/// Both sides of the inequality at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub point: EvalPoint,
    pub subrect: SubRect,
    pub moments: MomentSet,
    pub sup_norm: f64,
    pub sup_norm_method: SupNormMethod,
    pub defect: f64,
    pub bound: f64,
    pub ratio: f64,
    pub satisfied: bool,
    pub quad_evaluations: u64,
    pub quad_converged: bool,
}

pub fn is_satisfied(defect: f64, bound: f64) -> bool {
    defect <= bound * (1.0 + SATISFY_REL) + SATISFY_ABS
}

fn ratio(defect: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        defect / bound
    } else if defect == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn check_point(sub: &SubRect, p: &EvalPoint) -> Result<()> {
    if sub.contains(p) {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "point ({}, {}) outside [{}, {}]×[{}, {}]",
            p.x,
            p.y,
            sub.t_sub.lo(),
            sub.t_sub.hi(),
            sub.s_sub.lo(),
            sub.s_sub.hi()
        )))
    }
}

/// The normalized pieces of the defect functional.
#[derive(Debug, Clone, Copy)]
struct DefectTerms {
    f_xy: f64,
    line_t: f64,
    line_s: f64,
    double: f64,
    evaluations: u64,
    converged: bool,
}

impl DefectTerms {
    fn signed(&self) -> f64 {
        self.f_xy - self.line_t - self.line_s + self.double
    }
}

fn defect_terms(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
) -> Result<DefectTerms> {
    check_point(sub, p)?;
    let m_alpha = w.mass(&sub.t_sub)?;
    let m_beta = w.mass(&sub.s_sub)?;
    let line_t = integrate_1d(|t| Ok(w.eval(t)? * f.eval(t, p.y)?), sub.t_sub, cfg)?;
    let line_s = integrate_1d(|s| Ok(w.eval(s)? * f.eval(p.x, s)?), sub.s_sub, cfg)?;
    let double = integrate_2d(
        |t, s| Ok(w.eval(t)? * w.eval(s)? * f.eval(t, s)?),
        sub.t_sub,
        sub.s_sub,
        cfg,
    )?;
    Ok(DefectTerms {
        f_xy: f.eval(p.x, p.y)?,
        line_t: line_t.value / m_alpha,
        line_s: line_s.value / m_beta,
        double: double.value / (m_alpha * m_beta),
        evaluations: line_t.evaluations + line_s.evaluations + double.evaluations,
        converged: line_t.converged && line_s.converged && double.converged,
    })
}

/// `|f(x,y) - line_t - line_s + double|` in normalized form.
pub fn defect(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
) -> Result<f64> {
    Ok(defect_terms(f, w, sub, p, cfg)?.signed().abs())
}

/// `(1/(m_α m_β))∫∫P(x,t)Q(y,s)∂²f/∂t∂s`, split at `x` and `y`.
pub fn kernel_term(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
) -> Result<f64> {
    check_point(sub, p)?;
    let kp = KernelSpec::new(w, sub.t_sub, p.x)?;
    let kq = KernelSpec::new(w, sub.s_sub, p.y)?;
    let (t_lo, t_hi) = sub.t_sub.split_at(p.x);
    let (s_lo, s_hi) = sub.s_sub.split_at(p.y);
    let mut total = 0.0;
    for (t_piece, t_left) in [(t_lo, true), (t_hi, false)] {
        let Some(t_piece) = t_piece else { continue };
        for (s_piece, s_left) in [(s_lo, true), (s_hi, false)] {
            let Some(s_piece) = s_piece else { continue };
            // the left branch is continued up to its endpoint; the kernel's
            // value exactly at the split belongs to the right branch
            let p_of = |t: f64| {
                if t_left {
                    w.signed_integral(sub.t_sub.lo(), t)
                } else {
                    kp.eval(t)
                }
            };
            let q_of = |s: f64| {
                if s_left {
                    w.signed_integral(sub.s_sub.lo(), s)
                } else {
                    kq.eval(s)
                }
            };
            let r = integrate_2d(
                |t, s| Ok(p_of(t)? * q_of(s)? * f.mixed(t, s)?),
                t_piece,
                s_piece,
                cfg,
            )?;
            total += r.value;
        }
    }
    Ok(total / (w.mass(&sub.t_sub)? * w.mass(&sub.s_sub)?))
}

/// `|f(x,y) - [line_t + line_s - double + kernel]|`, which vanishes up to
/// quadrature error.
pub fn identity_residual(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
) -> Result<f64> {
    let terms = defect_terms(f, w, sub, p, cfg)?;
    let kernel = kernel_term(f, w, sub, p, cfg)?;
    Ok((terms.f_xy - (terms.line_t + terms.line_s - terms.double + kernel)).abs())
}

/// Estimates `sup |∂²f/∂t∂s|` on `sub` with a [`SUP_GRID`]² grid.
pub fn sup_norm_mixed(f: &Surface, sub: &SubRect) -> Result<SupNorm> {
    sup_norm_mixed_on_grid(f, sub, SUP_GRID)
}

/// Grid maximum of `|∂²f/∂t∂s|` followed by one golden-section pass per axis
/// around the grid argmax. This is a lower estimate of the true supremum.
pub fn sup_norm_mixed_on_grid(f: &Surface, sub: &SubRect, n: usize) -> Result<SupNorm> {
    let method = match f.mixed_partial() {
        MixedPartial::Symbolic(d) if d.is_constant() => {
            return Ok(SupNorm {
                value: d.eval(&[])?.abs(),
                method: SupNormMethod::SymbolicGrid,
                evaluations: 1,
            })
        }
        MixedPartial::Symbolic(_) => SupNormMethod::SymbolicGrid,
        MixedPartial::Numeric => SupNormMethod::NumericGrid,
    };
    let n = n.max(2);
    let node = |iv: &Interval, i: usize| {
        if i == n - 1 {
            iv.hi()
        } else {
            iv.lo() + iv.width() * i as f64 / (n - 1) as f64
        }
    };
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for i in 0..n {
        let t = node(&sub.t_sub, i);
        for j in 0..n {
            let v = f.mixed(t, node(&sub.s_sub, j))?.abs();
            if v > best.0 {
                best = (v, i, j);
            }
        }
    }
    let (mut value, bi, bj) = best;
    let mut t_star = node(&sub.t_sub, bi);
    let s_star = node(&sub.s_sub, bj);
    let bracket =
        |iv: &Interval, k: usize| (node(iv, k.saturating_sub(1)), node(iv, (k + 1).min(n - 1)));

    let mut evaluations = (n * n) as u64;
    let (lo, hi) = bracket(&sub.t_sub, bi);
    let (t_ref, v_ref, used) = golden_max(|t| Ok(f.mixed(t, s_star)?.abs()), lo, hi)?;
    evaluations += used;
    if v_ref > value {
        value = v_ref;
        t_star = t_ref;
    }
    let (lo, hi) = bracket(&sub.s_sub, bj);
    let (_, v_ref, used) = golden_max(|s| Ok(f.mixed(t_star, s)?.abs()), lo, hi)?;
    value = value.max(v_ref);
    Ok(SupNorm {
        value,
        method,
        evaluations: evaluations + used,
    })
}

fn golden_max(g: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<(f64, f64, u64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut g1, mut g2) = (g(x1)?, g(x2)?);
    let mut best = if g1 >= g2 { (x1, g1) } else { (x2, g2) };
    let mut evaluations = 2;
    for _ in 0..80 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if g1 >= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - INV_PHI * (hi - lo);
            g1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + INV_PHI * (hi - lo);
            g2 = g(x2)?;
        }
        evaluations += 1;
        for (x, v) in [(x1, g1), (x2, g2)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    Ok((best.0, best.1, evaluations))
}

/// `A(x)·B(y)·M / (m_α m_β)`.
pub fn bound(w: &WeightSpec, sub: &SubRect, p: &EvalPoint, sup_norm: f64) -> Result<f64> {
    Ok(bound_with_moments(&moments(w, sub, p)?, sup_norm)?.1)
}

fn moments(w: &WeightSpec, sub: &SubRect, p: &EvalPoint) -> Result<MomentSet> {
    check_point(sub, p)?;
    w.moments(&sub.t_sub, &sub.s_sub, p.x, p.y)
}

fn bound_with_moments(m: &MomentSet, sup_norm: f64) -> Result<(MomentSet, f64)> {
    if !(sup_norm >= 0.0 && sup_norm.is_finite()) {
        return Err(Error::Precondition(format!(
            "sup-norm must be finite and nonnegative, got {sup_norm}"
        )));
    }
    Ok((*m, m.a * m.b * sup_norm / (m.m_alpha * m.m_beta)))
}

/// Evaluates both sides of the inequality. `sup_override` replaces the grid
/// estimate of the mixed-partial sup-norm.
pub fn verify_with(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
    sup_override: Option<f64>,
) -> Result<BoundReport> {
    let terms = defect_terms(f, w, sub, p, cfg)?;
    let sup = match sup_override {
        Some(value) => SupNorm {
            value,
            method: SupNormMethod::Override,
            evaluations: 0,
        },
        None => sup_norm_mixed(f, sub)?,
    };
    let (moments, bound) = bound_with_moments(&moments(w, sub, p)?, sup.value)?;
    let defect = terms.signed().abs();
    Ok(BoundReport {
        point: *p,
        subrect: *sub,
        moments,
        sup_norm: sup.value,
        sup_norm_method: sup.method,
        defect,
        bound,
        ratio: ratio(defect, bound),
        satisfied: is_satisfied(defect, bound),
        quad_evaluations: terms.evaluations,
        quad_converged: terms.converged,
    })
}

pub fn verify(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    p: &EvalPoint,
    cfg: &QuadConfig,
) -> Result<BoundReport> {
    verify_with(f, w, sub, p, cfg, None)
}

/// Cell-centred `nx × ny` grid inside `sub`, ordered with `x` as the outer
/// index.
pub fn sweep_points(sub: &SubRect, grid: (usize, usize)) -> Result<Vec<EvalPoint>> {
    let (nx, ny) = grid;
    if nx < 2 || ny < 2 {
        return Err(Error::Precondition(format!(
            "sweep grid must be at least 2×2, got {nx}×{ny}"
        )));
    }
    let at = |iv: &Interval, i: usize, n: usize| iv.lo() + iv.width() * (i as f64 + 0.5) / n as f64;
    Ok((0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .map(|(i, j)| EvalPoint::new(at(&sub.t_sub, i, nx), at(&sub.s_sub, j, ny)))
        .collect())
}

/// [`verify`] over [`sweep_points`]. A failing point yields an `Err` entry
/// in its slot; the others are still evaluated.
pub fn sweep(
    f: &Surface,
    w: &WeightSpec,
    sub: &SubRect,
    grid: (usize, usize),
    cfg: &QuadConfig,
    sup_override: Option<f64>,
) -> Result<Vec<Result<BoundReport>>> {
    let points = sweep_points(sub, grid)?;
    // the sup-norm does not depend on the point
    let sup = match sup_override {
        Some(v) => v,
        None => sup_norm_mixed(f, sub)?.value,
    };
    let method = match sup_override {
        Some(_) => SupNormMethod::Override,
        None => sup_norm_mixed_method(f),
    };
    Ok(points
        .par_iter()
        .map(|p| {
            let mut r = verify_with(f, w, sub, p, cfg, Some(sup))?;
            r.sup_norm_method = method;
            Ok(r)
        })
        .collect())
}

fn sup_norm_mixed_method(f: &Surface) -> SupNormMethod {
    match f.mixed_partial() {
        MixedPartial::Symbolic(_) => SupNormMethod::SymbolicGrid,
        MixedPartial::Numeric => SupNormMethod::NumericGrid,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantCase {
    /// `w = 1` at the midpoint of the full rectangle.
    W1Midpoint,
    /// `w = 1` on a sub-rectangle, evaluated at the full rectangle's midpoint.
    W1Subrect,
    /// `w(u) = u` at the midpoint of the full rectangle.
    WuMidpoint,
}

impl ConstantCase {
    pub fn tag(self) -> &'static str {
        match self {
            ConstantCase::W1Midpoint => "w1-midpoint",
            ConstantCase::W1Subrect => "w1-subrect",
            ConstantCase::WuMidpoint => "wu-midpoint",
        }
    }

    pub fn from_tag(tag: &str) -> Option<ConstantCase> {
        [
            ConstantCase::W1Midpoint,
            ConstantCase::W1Subrect,
            ConstantCase::WuMidpoint,
        ]
        .into_iter()
        .find(|c| c.tag() == tag)
    }
}

/// A printed closed-form constant next to the value recomputed from the
/// moments with `M = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantComparison {
    pub case: ConstantCase,
    pub point: EvalPoint,
    pub subrect: SubRect,
    pub moments: MomentSet,
    pub printed_value: f64,
    pub derived_value: f64,
    pub mismatch: bool,
}

/// Relative tolerance below which the two constants count as equal.
pub const CONSTANT_MATCH_TOL: f64 = 1e-10;

pub fn closed_form_constant(
    case: ConstantCase,
    rect: &Rect,
    sub: Option<&SubRect>,
) -> Result<ConstantComparison> {
    let (a, b) = (rect.t_iv.lo(), rect.t_iv.hi());
    let (c, d) = (rect.s_iv.lo(), rect.s_iv.hi());
    let point = rect.midpoint();
    let (subrect, weight, printed_value) = match case {
        ConstantCase::W1Midpoint => (
            SubRect::full(rect),
            WeightSpec::constant(rect.weight_domain())?,
            (b - a) * (d - c) / 16.0,
        ),
        ConstantCase::W1Subrect => {
            let sub =
                *sub.ok_or_else(|| Error::Precondition("w1-subrect needs a sub-rectangle".into()))?;
            let (a1, a2) = (sub.t_sub.lo(), sub.t_sub.hi());
            let (b1, b2) = (sub.s_sub.lo(), sub.s_sub.hi());
            let a3 = (a + b - 2.0 * a1).powi(2) + (a + b - 2.0 * a2).powi(2);
            let b3 = (c + d - 2.0 * b1).powi(2) + (c + d - 2.0 * b2).powi(2);
            (
                sub,
                WeightSpec::constant(rect.weight_domain())?,
                a3 * b3 / (64.0 * (a2 - a1) * (b2 - b1)),
            )
        }
        ConstantCase::WuMidpoint => {
            if a < 0.0 || c < 0.0 {
                return Err(Error::Precondition(
                    "w(u) = u needs a nonnegative rectangle".into(),
                ));
            }
            (
                SubRect::full(rect),
                WeightSpec::linear(rect.weight_domain())?,
                (a + b) * (c + d) / 16.0,
            )
        }
    };
    let moments = moments(&weight, &subrect, &point)?;
    let (_, derived_value) = bound_with_moments(&moments, 1.0)?;
    let scale = printed_value
        .abs()
        .max(derived_value.abs())
        .max(f64::MIN_POSITIVE);
    Ok(ConstantComparison {
        case,
        point,
        subrect,
        moments,
        printed_value,
        derived_value,
        mismatch: (printed_value - derived_value).abs() > CONSTANT_MATCH_TOL * scale,
    })
}
