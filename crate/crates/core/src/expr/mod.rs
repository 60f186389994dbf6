//! Scalar expressions over a fixed set of named variables.
//!
//! Expressions are parsed once against a declared variable list; every
//! variable node remembers its slot in that list so evaluation in hot loops
//! is a plain slice lookup. Trees are immutable after construction.

mod diff;
mod parse;

use std::fmt;

use thiserror::Error;

pub use diff::DiffError;
pub use parse::{parse, ParseError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }
}

/// A variable reference; `slot` indexes the variable list given to [`parse`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Var {
    pub name: String,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalErrorKind {
    DivisionByZero,
    LogOfNonPositive,
    SqrtOfNegative,
    NonFinite,
    Unbound(String),
}

impl fmt::Display for EvalErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalErrorKind::DivisionByZero => write!(f, "division by zero"),
            EvalErrorKind::LogOfNonPositive => write!(f, "log of a non-positive value"),
            EvalErrorKind::SqrtOfNegative => write!(f, "sqrt of a negative value"),
            EvalErrorKind::NonFinite => write!(f, "non-finite result"),
            EvalErrorKind::Unbound(name) => write!(f, "variable `{name}` is not bound"),
        }
    }
}

/// Evaluation failure, carrying the rendered subexpression where it occurred.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("domain error in `{subexpr}`: {kind}")]
pub struct EvalError {
    pub kind: EvalErrorKind,
    pub subexpr: String,
}

impl Expr {
    /// Evaluates with `values[slot]` bound to each variable.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let fail = |kind| EvalError {
            kind,
            subexpr: self.to_string(),
        };
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(var) => match values.get(var.slot) {
                Some(v) => *v,
                None => return Err(fail(EvalErrorKind::Unbound(var.name.clone()))),
            },
            Expr::Neg(e) => -e.eval(values)?,
            Expr::Binary(op, lhs, rhs) => {
                let l = lhs.eval(values)?;
                let r = rhs.eval(values)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(fail(EvalErrorKind::DivisionByZero));
                        }
                        l / r
                    }
                    BinOp::Pow => power(l, r),
                }
            }
            Expr::Call(func, arg) => {
                let a = arg.eval(values)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Abs => a.abs(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(fail(EvalErrorKind::LogOfNonPositive));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(fail(EvalErrorKind::SqrtOfNegative));
                        }
                        a.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(fail(EvalErrorKind::NonFinite))
        }
    }

    /// Evaluates with bindings looked up by variable name.
    pub fn eval_named(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        let slots = self.max_slot().map_or(0, |s| s + 1);
        let mut values = vec![f64::NAN; slots];
        let mut bound = vec![false; slots];
        self.visit_vars(&mut |var| {
            if let Some((_, v)) = bindings.iter().find(|(name, _)| *name == var.name) {
                values[var.slot] = *v;
                bound[var.slot] = true;
            }
        });
        let mut missing = None;
        self.visit_vars(&mut |var| {
            if !bound[var.slot] && missing.is_none() {
                missing = Some(var.name.clone());
            }
        });
        if let Some(name) = missing {
            return Err(EvalError {
                kind: EvalErrorKind::Unbound(name.clone()),
                subexpr: name,
            });
        }
        self.eval(&values)
    }

    /// Names of the variables that occur in the tree, in first-seen order.
    pub fn free_vars(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        self.visit_vars(&mut |var| {
            if !names.contains(&var.name) {
                names.push(var.name.clone());
            }
        });
        names
    }

    pub fn is_constant(&self) -> bool {
        let mut any = false;
        self.visit_vars(&mut |_| any = true);
        !any
    }

    fn max_slot(&self) -> Option<usize> {
        let mut max = None;
        self.visit_vars(&mut |var| max = Some(max.map_or(var.slot, |m: usize| m.max(var.slot))));
        max
    }

    fn visit_vars(&self, visit: &mut impl FnMut(&Var)) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(var) => visit(var),
            Expr::Neg(e) | Expr::Call(_, e) => e.visit_vars(visit),
            Expr::Binary(_, l, r) => {
                l.visit_vars(visit);
                r.visit_vars(visit);
            }
        }
    }
}

fn power(base: f64, exponent: f64) -> f64 {
    if exponent.fract() == 0.0 && exponent.abs() <= 1024.0 {
        base.powi(exponent as i32)
    } else {
        base.powf(exponent)
    }
}

/// Fully parenthesized rendering; re-parsing it yields the same tree shape.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => {
                if c.is_sign_negative() {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Expr::Var(var) => write!(f, "{}", var.name),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
