//! Shared test catalog and seeded case generation.
#![allow(dead_code)]

use ostrowski_core::ostrowski::{EvalPoint, Rect, SubRect};
use ostrowski_core::quad::Interval;
use ostrowski_core::weight::WeightSpec;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Test surfaces: polynomials up to degree four plus two transcendental ones.
pub const FUNCTIONS: [&str; 8] = [
    "t*s",
    "1+2*t-3*s+t*s",
    "t^2*s^2",
    "t^3*s-2*t*s^2",
    "t^4+s^4+t^2*s^2",
    "t*s^3-t^2*s+0.5*t^3*s",
    "sin(t)*exp(s)",
    "t*s*sin(t+s)",
];

pub const WEIGHTS: [&str; 3] = ["const", "linear", "expr:1+u^2"];

/// All cases live inside this square so every weight above is valid.
pub const DOMAIN: (f64, f64) = (0.0, 2.5);

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn weight(selector: &str) -> WeightSpec {
    WeightSpec::from_selector(selector, Interval::new(DOMAIN.0, DOMAIN.1).unwrap()).unwrap()
}

/// An ordered pair in `[lo, hi]` at least `min_gap` apart.
pub fn span(r: &mut impl Rng, lo: f64, hi: f64, min_gap: f64) -> (f64, f64) {
    loop {
        let a = r.gen_range(lo..hi);
        let b = r.gen_range(lo..hi);
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if b - a >= min_gap {
            return (a, b);
        }
    }
}

pub fn random_rect(r: &mut impl Rng) -> Rect {
    let (a, b) = span(r, DOMAIN.0, DOMAIN.1, 0.3);
    let (c, d) = span(r, DOMAIN.0, DOMAIN.1, 0.3);
    Rect::new(a, b, c, d).unwrap()
}

pub fn random_subrect(r: &mut impl Rng, rect: &Rect) -> SubRect {
    let (a1, a2) = span(r, rect.t_iv.lo(), rect.t_iv.hi(), 0.05 * rect.t_iv.width());
    let (b1, b2) = span(r, rect.s_iv.lo(), rect.s_iv.hi(), 0.05 * rect.s_iv.width());
    SubRect::within(rect, a1, a2, b1, b2).unwrap()
}

pub fn random_point(r: &mut impl Rng, sub: &SubRect) -> EvalPoint {
    EvalPoint::new(
        r.gen_range(sub.t_sub.lo()..=sub.t_sub.hi()),
        r.gen_range(sub.s_sub.lo()..=sub.s_sub.hi()),
    )
}

pub struct Case {
    pub function: &'static str,
    pub weight: &'static str,
    pub rect: Rect,
    pub sub: SubRect,
    pub point: EvalPoint,
}

/// `n` cases cycling through every function × weight pair.
pub fn random_cases(seed: u64, n: usize) -> Vec<Case> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let rect = random_rect(&mut r);
            let sub = random_subrect(&mut r, &rect);
            let point = random_point(&mut r, &sub);
            Case {
                function: FUNCTIONS[i % FUNCTIONS.len()],
                weight: WEIGHTS[(i / FUNCTIONS.len()) % WEIGHTS.len()],
                rect,
                sub,
                point,
            }
        })
        .collect()
}

/// Composite Simpson's rule with `n` (even) panels.
pub fn simpson(g: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut sum = g(lo) + g(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * g(lo + i as f64 * h);
    }
    sum * h / 3.0
}

/// Central-difference mixed partial.
pub fn fd_mixed(g: impl Fn(f64, f64) -> f64, t: f64, s: f64, h: f64) -> f64 {
    (g(t + h, s + h) - g(t + h, s - h) - g(t - h, s + h) + g(t - h, s - h)) / (4.0 * h * h)
}
