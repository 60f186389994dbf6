//! Symbolic partial derivatives with constant folding.

use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot differentiate `{node}` symbolically: {reason}")]
pub struct DiffError {
    pub node: String,
    pub reason: String,
}

impl Expr {
    /// Exact partial derivative with respect to the variable named `var`.
    ///
    /// `abs` is rejected, as is `^` with anything but a nonnegative integer
    /// constant exponent.
    pub fn diff(&self, var: &str) -> Result<Expr, DiffError> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(v) => Expr::Const(if v.name == var { 1.0 } else { 0.0 }),
            Expr::Neg(e) => neg(e.diff(var)?),
            Expr::Binary(op, l, r) => match op {
                BinOp::Add => add(l.diff(var)?, r.diff(var)?),
                BinOp::Sub => sub(l.diff(var)?, r.diff(var)?),
                BinOp::Mul => add(
                    mul(l.diff(var)?, (**r).clone()),
                    mul((**l).clone(), r.diff(var)?),
                ),
                BinOp::Div => {
                    let num = sub(
                        mul(l.diff(var)?, (**r).clone()),
                        mul((**l).clone(), r.diff(var)?),
                    );
                    div(num, pow((**r).clone(), 2))
                }
                BinOp::Pow => {
                    let n = integer_exponent(self, r)?;
                    if n == 0 {
                        return Ok(Expr::Const(0.0));
                    }
                    let outer = mul(Expr::Const(n as f64), pow((**l).clone(), n - 1));
                    mul(outer, l.diff(var)?)
                }
            },
            Expr::Call(func, arg) => {
                let inner = arg.diff(var)?;
                let a = (**arg).clone();
                let outer = match func {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => return Ok(div(inner, a)),
                    Func::Sqrt => {
                        return Ok(div(inner, mul(Expr::Const(2.0), call(Func::Sqrt, a))))
                    }
                    Func::Abs => {
                        return Err(DiffError {
                            node: self.to_string(),
                            reason: "abs is not differentiable; use a finite-difference fallback"
                                .into(),
                        })
                    }
                };
                mul(outer, inner)
            }
        })
    }
}

fn integer_exponent(node: &Expr, exponent: &Expr) -> Result<u32, DiffError> {
    let reject = || DiffError {
        node: node.to_string(),
        reason: "exponent must be a nonnegative integer constant".into(),
    };
    if !exponent.is_constant() {
        return Err(reject());
    }
    let value = exponent.eval(&[]).map_err(|_| reject())?;
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(reject());
    }
    Ok(value as u32)
}

fn as_const(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(c) => Some(*c),
        _ => None,
    }
}

fn folded(v: f64, otherwise: impl FnOnce() -> Expr) -> Expr {
    if v.is_finite() {
        Expr::Const(v)
    } else {
        otherwise()
    }
}

fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
    Expr::Binary(op, Box::new(l), Box::new(r))
}

fn neg(e: Expr) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) => folded(a + b, || binary(BinOp::Add, l, r)),
        (Some(0.0), _) => r,
        (_, Some(0.0)) => l,
        _ => binary(BinOp::Add, l, r),
    }
}

fn sub(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) => folded(a - b, || binary(BinOp::Sub, l, r)),
        (Some(0.0), _) => neg(r),
        (_, Some(0.0)) => l,
        _ => binary(BinOp::Sub, l, r),
    }
}

fn mul(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) => folded(a * b, || binary(BinOp::Mul, l, r)),
        (Some(a), _) | (_, Some(a)) if a == 0.0 => Expr::Const(0.0),
        (Some(1.0), _) => r,
        (_, Some(1.0)) => l,
        _ => binary(BinOp::Mul, l, r),
    }
}

fn div(l: Expr, r: Expr) -> Expr {
    match (as_const(&l), as_const(&r)) {
        (Some(a), Some(b)) if b != 0.0 => folded(a / b, || binary(BinOp::Div, l, r)),
        (Some(0.0), _) => Expr::Const(0.0),
        (_, Some(1.0)) => l,
        _ => binary(BinOp::Div, l, r),
    }
}

fn pow(base: Expr, n: u32) -> Expr {
    match (n, as_const(&base)) {
        (0, _) => Expr::Const(1.0),
        (1, _) => base,
        (_, Some(b)) => folded(b.powi(n as i32), || {
            binary(BinOp::Pow, base, Expr::Const(n as f64))
        }),
        _ => binary(BinOp::Pow, base, Expr::Const(n as f64)),
    }
}

fn call(func: Func, arg: Expr) -> Expr {
    if let Expr::Const(c) = arg {
        let e = Expr::Call(func, Box::new(Expr::Const(c)));
        if let Ok(v) = e.eval(&[]) {
            return Expr::Const(v);
        }
        return e;
    }
    Expr::Call(func, Box::new(arg))
}
