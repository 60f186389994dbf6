//! Certified adaptive cubature of `∫∫ w(t)w(s)f(t,s) ds dt`.
//!
//! This is an application of the sub-rectangle inequality rather than a rule
//! taken from the literature. On a cell with weighted-median center `(x, y)`
//! the inequality, multiplied through by `m_α m_β`, reads
//!
//! ```text
//! | ∫∫ w w f - (m_β ∫w(t)f(t,y)dt + m_α ∫w(s)f(x,s)ds - m_α m_β f(x,y)) |
//!     ≤ A(x)·B(y)·M_cell
//! ```
//!
//! so the three-term rule on each cell comes with its own error bound, and the
//! sum over a partition certifies the total. Cells are refined worst-first.
//! The certificate is only as good as the grid estimate of `M_cell`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::ostrowski::{sup_norm_mixed_on_grid, EvalPoint, Rect, SubRect, Surface, SUP_GRID};
use crate::quad::{integrate_1d, Interval, QuadConfig};
use crate::weight::{MomentSet, WeightSpec};
use crate::{Error, Result};

/// Sup-norm grid per axis for cells below the root.
pub const CELL_GRID: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub subrect: SubRect,
    /// Weighted medians of the two sides.
    pub center: EvalPoint,
    pub moments: MomentSet,
    pub sup_norm: f64,
    pub local_value: f64,
    /// `A·B·M_cell`, not normalized by the masses.
    pub local_bound: f64,
    pub evaluations: u64,
    pub quad_converged: bool,
}

impl Cell {
    /// Builds and evaluates a cell, estimating `M_cell` on an `grid`² grid.
    ///
    /// A side carrying no weight makes the cell contribute exactly zero.
    pub fn new(
        f: &Surface,
        w: &WeightSpec,
        subrect: SubRect,
        grid: usize,
        cfg: &QuadConfig,
    ) -> Result<Cell> {
        let raw_t = w.signed_integral(subrect.t_sub.lo(), subrect.t_sub.hi())?;
        let raw_s = w.signed_integral(subrect.s_sub.lo(), subrect.s_sub.hi())?;
        if raw_t <= 0.0 || raw_s <= 0.0 {
            return Ok(Cell {
                subrect,
                center: subrect.as_rect().midpoint(),
                moments: MomentSet {
                    m_alpha: raw_t.max(0.0),
                    m_beta: raw_s.max(0.0),
                    a: 0.0,
                    b: 0.0,
                },
                sup_norm: 0.0,
                local_value: 0.0,
                local_bound: 0.0,
                evaluations: 0,
                quad_converged: true,
            });
        }

        let center = EvalPoint::new(
            w.weighted_median(&subrect.t_sub)?,
            w.weighted_median(&subrect.s_sub)?,
        );
        let moments = w.moments(&subrect.t_sub, &subrect.s_sub, center.x, center.y)?;
        let mut cell = Cell {
            subrect,
            center,
            moments,
            sup_norm: 0.0,
            local_value: 0.0,
            local_bound: 0.0,
            evaluations: 0,
            quad_converged: true,
        };
        let rule = rule_terms(f, w, &cell, cfg)?;
        let sup = sup_norm_mixed_on_grid(f, &subrect, grid)?;
        cell.local_value = rule.value;
        cell.quad_converged = rule.converged;
        cell.sup_norm = sup.value;
        cell.local_bound = moments.a * moments.b * sup.value;
        cell.evaluations = rule.evaluations + sup.evaluations;
        Ok(cell)
    }

    fn split(&self) -> Option<(SubRect, SubRect)> {
        let SubRect { t_sub, s_sub } = self.subrect;
        // larger weighted mass first; ties go to t
        let along_t = self.moments.m_alpha >= self.moments.m_beta;
        let halves = |iv: Interval| {
            let mid = iv.midpoint();
            match iv.split_at(mid) {
                (Some(l), Some(r)) => Some((l, r)),
                _ => None,
            }
        };
        let pick = |t_first: bool| {
            if t_first {
                halves(t_sub)
                    .map(|(l, r)| (SubRect { t_sub: l, s_sub }, SubRect { t_sub: r, s_sub }))
            } else {
                halves(s_sub)
                    .map(|(l, r)| (SubRect { t_sub, s_sub: l }, SubRect { t_sub, s_sub: r }))
            }
        };
        pick(along_t).or_else(|| pick(!along_t))
    }
}

struct RuleTerms {
    value: f64,
    evaluations: u64,
    converged: bool,
}

fn rule_terms(f: &Surface, w: &WeightSpec, cell: &Cell, cfg: &QuadConfig) -> Result<RuleTerms> {
    let EvalPoint { x, y } = cell.center;
    let MomentSet {
        m_alpha, m_beta, ..
    } = cell.moments;
    let line_t = integrate_1d(|t| Ok(w.eval(t)? * f.eval(t, y)?), cell.subrect.t_sub, cfg)?;
    let line_s = integrate_1d(|s| Ok(w.eval(s)? * f.eval(x, s)?), cell.subrect.s_sub, cfg)?;
    let value = m_beta * line_t.value + m_alpha * line_s.value - m_alpha * m_beta * f.eval(x, y)?;
    Ok(RuleTerms {
        value,
        evaluations: line_t.evaluations + line_s.evaluations + 1,
        converged: line_t.converged && line_s.converged,
    })
}

/// `m_β ∫w(t)f(t,y)dt + m_α ∫w(s)f(x,s)ds - m_α m_β f(x,y)` at the cell center.
pub fn cell_rule(f: &Surface, w: &WeightSpec, cell: &Cell, cfg: &QuadConfig) -> Result<f64> {
    Ok(rule_terms(f, w, cell, cfg)?.value)
}

/// `A(x)·B(y)·M_cell` with `M_cell` estimated on a `grid`² grid.
pub fn cell_error_bound(f: &Surface, cell: &Cell, grid: usize) -> Result<f64> {
    let sup = sup_norm_mixed_on_grid(f, &cell.subrect, grid)?;
    Ok(cell.moments.a * cell.moments.b * sup.value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubatureResult {
    pub value: f64,
    /// Sum of the final cells' local bounds.
    pub error_bound: f64,
    pub cells: usize,
    pub evaluations: u64,
    pub converged: bool,
    /// Sup-norm grid per axis used on the root cell.
    pub root_grid: usize,
    /// Sup-norm grid per axis used on every refined cell.
    pub cell_grid: usize,
    /// Final partition in creation order.
    pub leaves: Vec<Cell>,
}

#[derive(Debug, PartialEq)]
struct Entry {
    bound: f64,
    id: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // max-heap on bound, older cell wins ties
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Adaptive worst-first refinement until the summed bound is at most
/// `target_error` or `max_cells` cells exist.
///
/// Running out of budget is not an error: the result carries
/// `converged = false` with the honest bound of the partition reached.
pub fn integrate(
    f: &Surface,
    w: &WeightSpec,
    rect: &Rect,
    target_error: f64,
    max_cells: usize,
    cfg: &QuadConfig,
) -> Result<CubatureResult> {
    if !(target_error > 0.0 && target_error.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "target error must be positive and finite, got {target_error}"
        )));
    }
    if max_cells == 0 {
        return Err(Error::InvalidConfig("max_cells must be at least 1".into()));
    }
    cfg.validate()?;
    let domain = rect.weight_domain();
    if !w.domain().contains_interval(&domain) {
        return Err(Error::Precondition(format!(
            "rectangle needs the weight on [{}, {}]",
            domain.lo(),
            domain.hi()
        )));
    }

    let root = Cell::new(f, w, SubRect::full(rect), SUP_GRID, cfg)?;
    let mut evaluations = root.evaluations;
    let mut running = root.local_bound;
    let mut heap = BinaryHeap::new();
    heap.push(Entry {
        bound: root.local_bound,
        id: 0,
    });
    let mut cells: Vec<Option<Cell>> = vec![Some(root)];
    let mut live = 1usize;

    loop {
        if running <= target_error {
            running = exact_total(&cells);
            if running <= target_error {
                break;
            }
        }
        if live >= max_cells {
            break;
        }
        let Some(Entry { id, bound }) = heap.pop() else {
            break;
        };
        if bound == 0.0 {
            // everything left is exact
            heap.push(Entry { bound, id });
            break;
        }
        let parent = cells[id].as_ref().expect("heap holds live cells");
        let Some((left, right)) = parent.split() else {
            // too narrow to bisect in floating point; leave it as a leaf
            continue;
        };
        let (l, r) = rayon::join(
            || Cell::new(f, w, left, CELL_GRID, cfg),
            || Cell::new(f, w, right, CELL_GRID, cfg),
        );
        let (l, r) = (l?, r?);
        running += l.local_bound + r.local_bound - bound;
        evaluations += l.evaluations + r.evaluations;
        cells[id] = None;
        for child in [l, r] {
            heap.push(Entry {
                bound: child.local_bound,
                id: cells.len(),
            });
            cells.push(Some(child));
        }
        live += 1;
    }

    let leaves: Vec<Cell> = cells.into_iter().flatten().collect();
    let error_bound: f64 = leaves.iter().map(|c| c.local_bound).sum();
    let value: f64 = leaves.iter().map(|c| c.local_value).sum();
    let quad_converged = leaves.iter().all(|c| c.quad_converged);
    Ok(CubatureResult {
        value,
        error_bound,
        cells: leaves.len(),
        evaluations,
        converged: quad_converged && error_bound <= target_error,
        root_grid: SUP_GRID,
        cell_grid: CELL_GRID,
        leaves,
    })
}

fn exact_total(cells: &[Option<Cell>]) -> f64 {
    cells.iter().flatten().map(|c| c.local_bound).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    fn unit_cell(src: &str, w: &WeightSpec) -> Cell {
        let f = Surface::parse(src).unwrap();
        Cell::new(
            &f,
            w,
            SubRect::full(&unit()),
            SUP_GRID,
            &QuadConfig::default(),
        )
        .unwrap()
    }

    fn w1() -> WeightSpec {
        WeightSpec::constant(Interval::new(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn rule_values_on_unit_square() {
        let cfg = QuadConfig::default();
        for (src, want) in [("1", 1.0), ("t*s", 0.25), ("t^2*s^2", 5.0 / 48.0)] {
            let f = Surface::parse(src).unwrap();
            let cell = unit_cell(src, &w1());
            assert_eq!(cell.center, EvalPoint::new(0.5, 0.5));
            let got = cell_rule(&f, &w1(), &cell, &cfg).unwrap();
            assert!((got - want).abs() < 1e-14, "{src}: {got}");
        }
    }

    #[test]
    fn bounds_on_unit_square() {
        for (src, want) in [("t+s", 0.0), ("t*s", 1.0 / 16.0), ("t^2*s^2", 0.25)] {
            let cell = unit_cell(src, &w1());
            assert!((cell.local_bound - want).abs() < 1e-12, "{src}");
            let f = Surface::parse(src).unwrap();
            let again = cell_error_bound(&f, &cell, SUP_GRID).unwrap();
            assert_eq!(again, cell.local_bound);
        }
        // 5/48 against 1/9 is an error of 1/144, inside the bound
        assert!((1.0f64 / 9.0 - 5.0 / 48.0).abs() <= 0.25);
    }

    #[test]
    fn product_to_1e6() {
        let f = Surface::parse("t*s").unwrap();
        let r = integrate(&f, &w1(), &unit(), 1e-6, 200_000, &QuadConfig::default()).unwrap();
        assert!(r.converged);
        assert!(r.error_bound <= 1e-6);
        assert!((r.value - 0.25).abs() <= 1e-6);
        assert_eq!(r.cells, r.leaves.len());
    }

    #[test]
    fn squares_to_1e4() {
        let f = Surface::parse("t^2*s^2").unwrap();
        let r = integrate(&f, &w1(), &unit(), 1e-4, 50_000, &QuadConfig::default()).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0 / 9.0).abs() <= r.error_bound);
        assert!(r.error_bound <= 1e-4);
    }

    #[test]
    fn separable_needs_one_cell() {
        let f = Surface::parse("sin(t)+exp(s)").unwrap();
        let r = integrate(&f, &w1(), &unit(), 1e-9, 100, &QuadConfig::default()).unwrap();
        assert_eq!(r.cells, 1);
        assert!(r.error_bound.abs() <= 1e-12);
        let truth = (1.0 - 1f64.cos()) + (1f64.exp() - 1.0);
        assert!((r.value - truth).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let f = Surface::parse("t^2*s^2").unwrap();
        let r = integrate(&f, &w1(), &unit(), 1e-9, 8, &QuadConfig::default()).unwrap();
        assert!(!r.converged);
        assert_eq!(r.cells, 8);
        assert!((r.value - 1.0 / 9.0).abs() <= r.error_bound);
    }

    #[test]
    fn bisection_does_not_increase_bound() {
        let f = Surface::parse("exp(t)*sin(2*s)+t^3*s").unwrap();
        let w = WeightSpec::linear(Interval::new(0.0, 2.0).unwrap()).unwrap();
        let rect = Rect::new(0.25, 2.0, 0.0, 1.5).unwrap();
        let cfg = QuadConfig::default();
        let mut stack = vec![Cell::new(&f, &w, SubRect::full(&rect), SUP_GRID, &cfg).unwrap()];
        for _ in 0..30 {
            let parent = stack.remove(0);
            let (l, r) = parent.split().unwrap();
            let l = Cell::new(&f, &w, l, CELL_GRID, &cfg).unwrap();
            let r = Cell::new(&f, &w, r, CELL_GRID, &cfg).unwrap();
            assert!(l.local_bound + r.local_bound <= parent.local_bound + 1e-12);
            stack.push(l);
            stack.push(r);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let f = Surface::parse("exp(t+s)").unwrap();
        let w = WeightSpec::linear(Interval::new(0.0, 1.0).unwrap()).unwrap();
        let cfg = QuadConfig::default();
        let a = integrate(&f, &w, &unit(), 1e-4, 10_000, &cfg).unwrap();
        let b = integrate(&f, &w, &unit(), 1e-4, 10_000, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linear_weight_against_quadrature_oracle() {
        let f = Surface::parse("exp(t+s)").unwrap();
        let w = WeightSpec::linear(Interval::new(0.0, 1.0).unwrap()).unwrap();
        let r = integrate(&f, &w, &unit(), 1e-5, 100_000, &QuadConfig::default()).unwrap();
        let tight = QuadConfig {
            abs_tol: 1e-12,
            ..QuadConfig::default()
        };
        let oracle = crate::quad::integrate_2d(
            |t, s| Ok(t * s * (t + s).exp()),
            Interval::new(0.0, 1.0).unwrap(),
            Interval::new(0.0, 1.0).unwrap(),
            &tight,
        )
        .unwrap();
        // ∫ u e^u = 1 on [0,1], so the oracle is 1
        assert!((oracle.value - 1.0).abs() < 1e-12);
        assert!(r.converged);
        assert!((r.value - oracle.value).abs() <= r.error_bound);
    }

    #[test]
    fn zero_weight_cells_contribute_nothing() {
        let w = WeightSpec::expression("(abs(u-0.5)+(u-0.5))^3", Interval::new(0.0, 1.0).unwrap())
            .unwrap();
        let f = Surface::parse("t*s").unwrap();
        let r = integrate(&f, &w, &unit(), 1e-5, 20_000, &QuadConfig::default()).unwrap();
        // w = 8 (u-1/2)^3 on the right half; ∫ 8 u (u-1/2)^3 du over [1/2, 1]
        let g = |u: f64| {
            let v = u - 0.5;
            8.0 * (v.powi(5) / 5.0 + 0.5 * v.powi(4) / 4.0)
        };
        let side = g(1.0) - g(0.5);
        assert!(r.converged);
        assert!((r.value - side * side).abs() <= r.error_bound);
    }
}
