//! Piecewise Peano kernels built from a weight.
//!
//! On `[lo, hi]` with split point `x` the kernel is
//!
//! ```text
//! K(t) =  ∫_lo^t w(u) du   for lo ≤ t < x
//! K(t) =  ∫_hi^t w(u) du   for x ≤ t ≤ hi
//! ```
//!
//! so it is nonnegative left of the split, nonpositive from the split on, and
//! jumps by the full mass at the split. The boundary point `t = x` takes the
//! second branch.

use crate::quad::{integrate_1d, Interval};
use crate::weight::WeightSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct KernelSpec<'w> {
    weight: &'w WeightSpec,
    iv: Interval,
    split: f64,
}

impl<'w> KernelSpec<'w> {
    pub fn new(weight: &'w WeightSpec, iv: Interval, split: f64) -> Result<KernelSpec<'w>> {
        if !weight.domain().contains_interval(&iv) {
            return Err(Error::Precondition(format!(
                "kernel interval [{}, {}] lies outside the weight domain",
                iv.lo(),
                iv.hi()
            )));
        }
        if !iv.contains(split) {
            return Err(Error::Precondition(format!(
                "split point {split} outside [{}, {}]",
                iv.lo(),
                iv.hi()
            )));
        }
        Ok(KernelSpec { weight, iv, split })
    }

    pub fn interval(&self) -> Interval {
        self.iv
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !self.iv.contains(t) {
            return Err(Error::Precondition(format!(
                "kernel argument {t} outside [{}, {}]",
                self.iv.lo(),
                self.iv.hi()
            )));
        }
        if t < self.split {
            self.weight.signed_integral(self.iv.lo(), t)
        } else {
            self.weight.signed_integral(self.iv.hi(), t)
        }
    }

    /// `∫ |K(t)| dt` by direct quadrature of each smooth piece.
    pub fn abs_integral(&self) -> Result<f64> {
        let (left, right) = self.iv.split_at(self.split);
        let cfg = self.weight.quad_config();
        let mut total = 0.0;
        if let Some(piece) = left {
            // the left branch at t = split itself is only a limit
            let branch = |t: f64| self.weight.signed_integral(self.iv.lo(), t);
            total += integrate_1d(|t| Ok(branch(t)?.abs()), piece, cfg)?.value;
        }
        if let Some(piece) = right {
            total += integrate_1d(|t| Ok(self.eval(t)?.abs()), piece, cfg)?.value;
        }
        Ok(total)
    }
}

/// Free-function form of [`KernelSpec::eval`].
pub fn eval_kernel(k: &KernelSpec<'_>, t: f64) -> Result<f64> {
    k.eval(t)
}

/// Free-function form of [`KernelSpec::abs_integral`].
pub fn kernel_abs_integral(k: &KernelSpec<'_>) -> Result<f64> {
    k.abs_integral()
}
