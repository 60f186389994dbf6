//! Nonnegative weight functions and their moments.
//!
//! A [`WeightSpec`] is validated once on construction: the weight is sampled
//! on a 1001-point grid over its domain and every sample must be finite and
//! nonnegative, and the total mass must be strictly positive. Sampling is a
//! practical check, not a proof of nonnegativity.

use std::fmt;

use crate::expr::{self, Expr};
use crate::quad::{integrate_1d, Interval, QuadConfig};
use crate::{Error, Result};

const VALIDATION_POINTS: usize = 1001;
const MEDIAN_WIDTH: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    /// `w(u) = 1`
    Constant,
    /// `w(u) = u`, requires a nonnegative domain
    Linear,
    /// A user expression over the variable `u`.
    Expression { source: String, expr: Expr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMode {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    kind: WeightKind,
    domain: Interval,
    mode: MomentMode,
    quad: QuadConfig,
}

/// Masses and absolute first moments for one evaluation point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSet {
    pub m_alpha: f64,
    pub m_beta: f64,
    pub a: f64,
    pub b: f64,
}

impl WeightSpec {
    pub fn constant(domain: Interval) -> Result<WeightSpec> {
        WeightSpec::build(WeightKind::Constant, domain, MomentMode::ClosedForm)
    }

    pub fn linear(domain: Interval) -> Result<WeightSpec> {
        if domain.lo() < 0.0 {
            return Err(Error::InvalidWeight(format!(
                "w(u) = u is negative on [{}, {}]",
                domain.lo(),
                domain.hi()
            )));
        }
        WeightSpec::build(WeightKind::Linear, domain, MomentMode::ClosedForm)
    }

    pub fn expression(source: &str, domain: Interval) -> Result<WeightSpec> {
        let expr = expr::parse(source, &["u"])?;
        let kind = WeightKind::Expression {
            source: source.to_string(),
            expr,
        };
        WeightSpec::build(kind, domain, MomentMode::Numeric)
    }

    /// Parses a CLI selector: `const`, `linear` or `expr:<text>`.
    pub fn from_selector(selector: &str, domain: Interval) -> Result<WeightSpec> {
        match selector {
            "const" => WeightSpec::constant(domain),
            "linear" => WeightSpec::linear(domain),
            other => match other.strip_prefix("expr:") {
                Some(text) => WeightSpec::expression(text, domain),
                None => Err(Error::InvalidWeight(format!(
                    "unknown weight selector `{other}` (expected const, linear or expr:<text>)"
                ))),
            },
        }
    }

    fn build(kind: WeightKind, domain: Interval, mode: MomentMode) -> Result<WeightSpec> {
        let spec = WeightSpec {
            kind,
            domain,
            mode,
            quad: QuadConfig::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.domain.lo(), self.domain.hi());
        for i in 0..VALIDATION_POINTS {
            let u = lo + (hi - lo) * i as f64 / (VALIDATION_POINTS - 1) as f64;
            let w = self.eval(u).map_err(|e| {
                Error::InvalidWeight(format!("weight cannot be evaluated at u = {u}: {e}"))
            })?;
            if w < 0.0 {
                return Err(Error::InvalidWeight(format!("w({u}) = {w} is negative")));
            }
        }
        let total = self.signed_integral(lo, hi)?;
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "mass over [{lo}, {hi}] is {total}, need a finite positive value"
            )));
        }
        Ok(())
    }

    /// Switches between closed-form and quadrature evaluation. Expression
    /// weights only support numeric mode.
    pub fn with_mode(mut self, mode: MomentMode) -> Result<WeightSpec> {
        if mode == MomentMode::ClosedForm && matches!(self.kind, WeightKind::Expression { .. }) {
            return Err(Error::InvalidWeight(
                "expression weights have no closed form".into(),
            ));
        }
        self.mode = mode;
        Ok(self)
    }

    pub fn with_quad(mut self, quad: QuadConfig) -> Result<WeightSpec> {
        quad.validate()?;
        self.quad = quad;
        Ok(self)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn mode(&self) -> MomentMode {
        self.mode
    }

    pub fn quad_config(&self) -> &QuadConfig {
        &self.quad
    }

    pub fn eval(&self, u: f64) -> Result<f64> {
        match &self.kind {
            WeightKind::Constant => Ok(1.0),
            WeightKind::Linear => Ok(u),
            WeightKind::Expression { expr, .. } => Ok(expr.eval(&[u])?),
        }
    }

    fn closed_form(&self) -> bool {
        self.mode == MomentMode::ClosedForm
    }

    /// `∫_from^to w(u) du`, signed, zero when the endpoints coincide.
    pub fn signed_integral(&self, from: f64, to: f64) -> Result<f64> {
        if from == to {
            return Ok(0.0);
        }
        let (lo, hi, sign) = if from < to {
            (from, to, 1.0)
        } else {
            (to, from, -1.0)
        };
        let value = match (&self.kind, self.closed_form()) {
            (WeightKind::Constant, true) => hi - lo,
            (WeightKind::Linear, true) => 0.5 * (hi - lo) * (hi + lo),
            _ => integrate_1d(|u| self.eval(u), Interval::new(lo, hi)?, &self.quad)?.value,
        };
        Ok(sign * value)
    }

    fn check_within(&self, iv: &Interval) -> Result<()> {
        if self.domain.contains_interval(iv) {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "interval [{}, {}] lies outside the weight domain [{}, {}]",
                iv.lo(),
                iv.hi(),
                self.domain.lo(),
                self.domain.hi()
            )))
        }
    }

    /// `m(lo, hi) = ∫ w` over `iv`; strictly positive or an error.
    pub fn mass(&self, iv: &Interval) -> Result<f64> {
        self.check_within(iv)?;
        let m = self.signed_integral(iv.lo(), iv.hi())?;
        if m > 0.0 && m.is_finite() {
            Ok(m)
        } else {
            Err(Error::InvalidWeight(format!(
                "mass over [{}, {}] is {m}",
                iv.lo(),
                iv.hi()
            )))
        }
    }

    /// `∫_lo^x (x-u) w(u) du + ∫_x^hi (u-x) w(u) du`.
    pub fn abs_moment(&self, iv: &Interval, x: f64) -> Result<f64> {
        self.check_within(iv)?;
        if !iv.contains(x) {
            return Err(Error::Precondition(format!(
                "moment point {x} outside [{}, {}]",
                iv.lo(),
                iv.hi()
            )));
        }
        let left = x - iv.lo();
        let right = iv.hi() - x;
        match (&self.kind, self.closed_form()) {
            (WeightKind::Constant, true) => Ok(0.5 * (left * left + right * right)),
            // substituting u = lo + v and u = x + v keeps both pieces free of cancellation
            (WeightKind::Linear, true) => Ok(iv.lo() * left * left / 2.0
                + left * left * left / 6.0
                + x * right * right / 2.0
                + right * right * right / 3.0),
            _ => {
                let (below, above) = iv.split_at(x);
                let mut total = 0.0;
                if let Some(piece) = below {
                    total +=
                        integrate_1d(|u| Ok((x - u) * self.eval(u)?), piece, &self.quad)?.value;
                }
                if let Some(piece) = above {
                    total +=
                        integrate_1d(|u| Ok((u - x) * self.eval(u)?), piece, &self.quad)?.value;
                }
                Ok(total.max(0.0))
            }
        }
    }

    /// Leftmost `x` with `∫_lo^x w ≥ m/2`, located by bisection to 1e-12.
    ///
    /// This is the minimiser of [`abs_moment`](Self::abs_moment) on `iv`,
    /// since its derivative is `2∫_lo^x w - m`.
    pub fn weighted_median(&self, iv: &Interval) -> Result<f64> {
        let half = 0.5 * self.mass(iv)?;
        let (mut lo, mut hi) = (iv.lo(), iv.hi());
        while hi - lo > MEDIAN_WIDTH {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.signed_integral(iv.lo(), mid)? >= half {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }

    /// Masses of `t_iv`, `s_iv` and absolute moments at `x`, `y`.
    pub fn moments(&self, t_iv: &Interval, s_iv: &Interval, x: f64, y: f64) -> Result<MomentSet> {
        Ok(MomentSet {
            m_alpha: self.mass(t_iv)?,
            m_beta: self.mass(s_iv)?,
            a: self.abs_moment(t_iv, x)?,
            b: self.abs_moment(s_iv, y)?,
        })
    }
}

/// The selector form accepted by [`WeightSpec::from_selector`].
impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::Constant => write!(f, "const"),
            WeightKind::Linear => write!(f, "linear"),
            WeightKind::Expression { source, .. } => write!(f, "expr:{source}"),
        }
    }
}
