//! Weighted Ostrowski-type inequality for double integrals.
//!
//! For a nonnegative weight `w` and a function `f(t, s)` on `[a,b]×[c,d]`, the
//! library evaluates the defect
//!
//! ```text
//! | f(x,y) - (1/m_t)∫w(t)f(t,y)dt - (1/m_s)∫w(s)f(x,s)ds + (1/(m_t m_s))∫∫w(t)w(s)f(t,s) |
//! ```
//!
//! and the bound `A(x)B(y)/(m_t m_s) · ‖∂²f/∂t∂s‖∞`, where `A`, `B` are the
//! absolute first moments of the weight. The same inequality applied per cell
//! drives a certified adaptive cubature.
//!
//! Modules, bottom-up:
//! - [`expr`]: expression parsing, evaluation and symbolic differentiation
//! - [`quad`]: adaptive Gauss–Kronrod quadrature in one and two dimensions
//! - [`weight`]: validated weights, mass, absolute moments, weighted median
//! - [`kernel`]: the piecewise Peano kernels and their absolute integrals
//! - [`ostrowski`]: identity residual, defect, bound, sweeps, closed-form constants
//! - [`cubature`]: worst-first adaptive cubature with per-cell certificates
//! - [`report`]: `%.17g` number formatting and the JSON/CSV emitters
//! - [`cli`]: command-line driver

pub mod cli;
pub mod cubature;
mod error;
pub mod expr;
pub mod kernel;
pub mod ostrowski;
pub mod quad;
pub mod report;
pub mod weight;

pub use error::{Error, Result};
