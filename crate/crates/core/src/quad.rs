//! Adaptive Gauss–Kronrod quadrature.
//!
//! Each panel is integrated with the embedded 7-point Gauss / 15-point
//! Kronrod pair; `|K15 - G7|` is the panel error estimate and `K15` the panel
//! value. Panels are bisected worst-first until the summed estimate meets the
//! tolerance. The two-dimensional routine nests the one-dimensional one.
//!
//! Integrands with kinks must be split by the caller at the kink locations;
//! nothing here tries to detect them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::{Error, Result};

/// A finite interval with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Interval { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Smallest interval covering both.
    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Splits at `x`, returning only the pieces with positive width.
    pub fn split_at(&self, x: f64) -> (Option<Interval>, Option<Interval>) {
        let left = (x > self.lo).then(|| Interval {
            lo: self.lo,
            hi: x.min(self.hi),
        });
        let right = (x < self.hi).then(|| Interval {
            lo: x.max(self.lo),
            hi: self.hi,
        });
        (left, right)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    pub min_cell_width: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 40,
            min_cell_width: 1e-12,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol must be positive");
        }
        if !(self.rel_tol >= 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be nonnegative");
        }
        if self.max_depth < 1 {
            return bad("max_depth must be at least 1");
        }
        if !(self.min_cell_width > 0.0 && self.min_cell_width.is_finite()) {
            return bad("min_cell_width must be positive");
        }
        Ok(())
    }

    fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    pub converged: bool,
}

// Abscissae and weights of the 15-point Kronrod extension of 7-point Gauss.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5] and the centre.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
    depth: u32,
    id: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Largest error first; among equal errors the oldest panel wins.
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.id.cmp(&self.id))
    }
}

fn gauss_kronrod<F>(g: &mut F, lo: f64, hi: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut eval = |x: f64| -> Result<f64> {
        let v = g(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                value: v,
                at: vec![x],
            })
        }
    };
    let fc = eval(centre)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = eval(centre - dx)? + eval(centre + dx)?;
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    kronrod *= half;
    gauss *= half;
    Ok((kronrod, (kronrod - gauss).abs()))
}

/// Integrates `g` over `iv`.
///
/// Non-convergence (a panel at `max_depth` or narrower than `min_cell_width`
/// would need bisecting) is not an error: the best estimate is returned with
/// `converged = false`. Errors from `g`, including non-finite values, abort.
pub fn integrate_1d<F>(mut g: F, iv: Interval, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    let (value, error) = gauss_kronrod(&mut g, iv.lo, iv.hi)?;
    let mut evaluations = 15u64;
    if error <= cfg.tolerance_for(value) {
        return Ok(QuadResult {
            value,
            error_estimate: error,
            evaluations,
            converged: true,
        });
    }

    let mut panels = vec![Panel {
        lo: iv.lo,
        hi: iv.hi,
        value,
        error,
        depth: 0,
        id: 0,
    }];
    let mut heap: BinaryHeap<Panel> = panels.iter().copied().collect();
    let mut alive = vec![true];
    let mut converged = false;
    let (mut running_value, mut running_error) = (value, error);

    loop {
        if running_error <= cfg.tolerance_for(running_value) {
            // re-sum in panel order so the decision does not ride on drift
            let (v, e) = live_totals(&panels, &alive);
            running_value = v;
            running_error = e;
            if e <= cfg.tolerance_for(v) {
                converged = true;
                break;
            }
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let width = worst.hi - worst.lo;
        if worst.depth >= cfg.max_depth
            || 0.5 * width < cfg.min_cell_width
            || panels.len() + 2 > MAX_PANELS
        {
            break;
        }
        alive[worst.id] = false;
        running_value -= worst.value;
        running_error -= worst.error;
        let mid = 0.5 * (worst.lo + worst.hi);
        for (lo, hi) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = gauss_kronrod(&mut g, lo, hi)?;
            evaluations += 15;
            let panel = Panel {
                lo,
                hi,
                value,
                error,
                depth: worst.depth + 1,
                id: panels.len(),
            };
            running_value += value;
            running_error += error;
            panels.push(panel);
            alive.push(true);
            heap.push(panel);
        }
    }

    let (value, error_estimate) = live_totals(&panels, &alive);
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations,
        converged,
    })
}

fn live_totals(panels: &[Panel], alive: &[bool]) -> (f64, f64) {
    panels
        .iter()
        .zip(alive)
        .filter(|(_, a)| **a)
        .fold((0.0, 0.0), |(v, e), (p, _)| (v + p.value, e + p.error))
}

/// Integrates `g(t, s)` over `iv_t × iv_s` as an outer integral in `t` of
/// inner integrals in `s`.
///
/// The inner tolerance is tightened so that the accumulated inner error stays
/// within half of the requested tolerance; the reported error estimate is the
/// outer estimate plus the worst inner estimate times the outer width.
pub fn integrate_2d<F>(g: F, iv_t: Interval, iv_s: Interval, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    cfg.validate()?;
    let width_t = iv_t.width();
    let inner_cfg = QuadConfig {
        abs_tol: 0.5 * cfg.abs_tol / width_t.max(1.0),
        rel_tol: 0.5 * cfg.rel_tol,
        ..*cfg
    };
    let outer_cfg = QuadConfig {
        abs_tol: 0.5 * cfg.abs_tol,
        rel_tol: 0.5 * cfg.rel_tol,
        ..*cfg
    };
    let mut inner_evaluations = 0u64;
    let mut worst_inner = 0.0f64;
    let mut inner_converged = true;
    let outer = integrate_1d(
        |t| {
            let r = integrate_1d(|s| g(t, s), iv_s, &inner_cfg)?;
            inner_evaluations += r.evaluations;
            worst_inner = worst_inner.max(r.error_estimate);
            inner_converged &= r.converged;
            Ok(r.value)
        },
        iv_t,
        &outer_cfg,
    )?;
    let error_estimate = outer.error_estimate + worst_inner * width_t;
    Ok(QuadResult {
        value: outer.value,
        error_estimate,
        evaluations: inner_evaluations,
        converged: outer.converged
            && inner_converged
            && error_estimate <= cfg.tolerance_for(outer.value),
    })
}
