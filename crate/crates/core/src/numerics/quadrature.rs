//! Composite Gauss-Legendre panels.
//!
//! A [`Grid`] splits an interval into panels and places the nodes of a fixed
//! Gauss-Legendre rule on each of them. The same nodes serve three purposes:
//! quadrature, the collocation points of the ODE integrator in
//! [`crate::schrodinger`], and the support of the piecewise polynomial
//! interpolant used for point evaluation and partial-panel integrals.

use std::num::NonZeroUsize;
use std::ops::{Add, Mul};
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};

/// Nodes per panel for tabulation grids.
pub const TABULATION_ORDER: usize = 16;

/// Largest `width * frequency` for tabulation panels. With sixteen nodes a
/// product of two such oscillations is still integrated to machine precision.
pub const PANEL_PHASE: f64 = 1.5;

/// Hard cap on the panel width, independent of frequency.
pub const MAX_PANEL_WIDTH: f64 = 0.5;

static RULE_8: Lazy<GaussRule> = Lazy::new(|| GaussRule::new(8));
static RULE_16: Lazy<GaussRule> = Lazy::new(|| GaussRule::new(16));

/// Anything that can be sampled on a grid and summed with real weights.
pub trait Sample: Copy + Default + Add<Output = Self> + Mul<f64, Output = Self> {
    fn is_finite_sample(&self) -> bool;
}

impl Sample for f64 {
    fn is_finite_sample(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for Complex64 {
    fn is_finite_sample(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Gauss-Legendre rule on `[0, 1]` together with the Lagrange-basis integrals
/// needed for collocation and dense output.
#[derive(Debug)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Vec<f64>,
    /// `int1[i * m + j] = ∫_0^{c_i} L_j`.
    int1: Vec<f64>,
    /// `int2[i * m + j] = ∫_0^{c_i} (c_i - τ) L_j(τ) dτ`.
    int2: Vec<f64>,
    /// `end2[j] = ∫_0^1 (1 - τ) L_j(τ) dτ`.
    end2: Vec<f64>,
}

impl GaussRule {
    pub fn new(order: usize) -> Self {
        let order = NonZeroUsize::new(order).expect("quadrature order must be positive");
        let raw = GaussLegendre::new(order);
        let mut pairs: Vec<(f64, f64)> = raw
            .as_node_weight_pairs()
            .iter()
            .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let m = nodes.len();

        let bary: Vec<f64> = (0..m)
            .map(|j| {
                let prod: f64 = (0..m)
                    .filter(|&k| k != j)
                    .map(|k| nodes[j] - nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();

        let mut rule = GaussRule {
            nodes,
            weights,
            bary,
            int1: vec![0.0; m * m],
            int2: vec![0.0; m * m],
            end2: vec![0.0; m],
        };
        for i in 0..m {
            let (w1, w2) = rule.dense_weights(rule.nodes[i]);
            rule.int1[i * m..(i + 1) * m].copy_from_slice(&w1);
            rule.int2[i * m..(i + 1) * m].copy_from_slice(&w2);
        }
        rule.end2 = rule.dense_weights(1.0).1;
        rule
    }

    /// Shared sixteen-point rule used by tabulation grids.
    pub fn tabulation() -> &'static GaussRule {
        &RULE_16
    }

    /// Shared eight-point rule used where only endpoint values matter.
    pub fn shooting() -> &'static GaussRule {
        &RULE_8
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn int1(&self) -> &[f64] {
        &self.int1
    }

    pub(crate) fn int2(&self) -> &[f64] {
        &self.int2
    }

    pub(crate) fn end2(&self) -> &[f64] {
        &self.end2
    }

    /// Lagrange basis on the rule's nodes evaluated at `t`.
    pub fn lagrange(&self, t: f64) -> Vec<f64> {
        let m = self.order();
        let mut out = vec![0.0; m];
        if let Some(j) = self.nodes.iter().position(|&c| c == t) {
            out[j] = 1.0;
            return out;
        }
        let mut denom = 0.0;
        for ((o, b), c) in out.iter_mut().zip(&self.bary).zip(&self.nodes) {
            *o = b / (t - c);
            denom += *o;
        }
        for v in &mut out {
            *v /= denom;
        }
        out
    }

    /// Weights `(∫_0^t L_j, ∫_0^t (t - τ) L_j(τ) dτ)` for every basis polynomial.
    /// Both are exact: the integrands have degree at most `order`.
    pub fn dense_weights(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.order();
        let mut w1 = vec![0.0; m];
        let mut w2 = vec![0.0; m];
        for k in 0..m {
            let basis = self.lagrange(t * self.nodes[k]);
            let wk = self.weights[k];
            for j in 0..m {
                w1[j] += t * wk * basis[j];
                w2[j] += t * t * wk * (1.0 - self.nodes[k]) * basis[j];
            }
        }
        (w1, w2)
    }
}

/// Panelled interval with Gauss-Legendre nodes on each panel.
#[derive(Debug, Clone)]
pub struct Grid {
    rule: &'static GaussRule,
    edges: Vec<f64>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid from explicit panel edges.
    pub fn from_edges(edges: Vec<f64>, rule: &'static GaussRule) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidArgument("a grid needs at least one panel".into()));
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("grid edges".into()));
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid edges must be strictly increasing".into()));
        }
        let m = rule.order();
        let mut nodes = Vec::with_capacity((edges.len() - 1) * m);
        let mut weights = Vec::with_capacity((edges.len() - 1) * m);
        for w in edges.windows(2) {
            let h = w[1] - w[0];
            for (c, wt) in rule.nodes().iter().zip(rule.weights()) {
                nodes.push(w[0] + c * h);
                weights.push(wt * h);
            }
        }
        Ok(Grid {
            rule,
            edges,
            nodes,
            weights,
        })
    }

    /// Splits `[lo, hi]` at every breakpoint strictly inside it, then
    /// subdivides each piece uniformly so that no panel exceeds `max_width`.
    pub fn with_breakpoints(
        lo: f64,
        hi: f64,
        breakpoints: &[f64],
        max_width: f64,
        rule: &'static GaussRule,
    ) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        if !(max_width > 0.0) {
            return Err(Error::InvalidArgument("panel width must be positive".into()));
        }
        let span = hi - lo;
        let mut cuts = vec![lo];
        let mut inner: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&b| b > lo + 1e-12 * span && b < hi - 1e-12 * span)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * span);
        cuts.extend(inner);
        cuts.push(hi);

        let mut edges = vec![lo];
        for w in cuts.windows(2) {
            let pieces = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / pieces as f64;
            for k in 1..pieces {
                edges.push(w[0] + k as f64 * h);
            }
            edges.push(w[1]);
        }
        Grid::from_edges(edges, rule)
    }

    /// Tabulation grid resolving oscillations of angular frequency `omega`.
    pub fn for_frequency(lo: f64, hi: f64, omega: f64, breakpoints: &[f64]) -> Result<Self> {
        let width = (PANEL_PHASE / omega.max(1e-300)).min(MAX_PANEL_WIDTH);
        Grid::with_breakpoints(lo, hi, breakpoints, width, GaussRule::tabulation())
    }

    /// Uniform panels.
    pub fn uniform(lo: f64, hi: f64, panels: usize) -> Result<Self> {
        if panels == 0 {
            return Err(Error::InvalidArgument("panel count must be positive".into()));
        }
        let h = (hi - lo) / panels as f64;
        let mut edges: Vec<f64> = (0..panels).map(|k| lo + k as f64 * h).collect();
        edges.push(hi);
        Grid::from_edges(edges, GaussRule::tabulation())
    }

    /// Every panel split into `factor` equal parts.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let factor = factor.max(1);
        let mut edges = vec![self.edges[0]];
        for w in self.edges.windows(2) {
            let h = (w[1] - w[0]) / factor as f64;
            for k in 1..factor {
                edges.push(w[0] + k as f64 * h);
            }
            edges.push(w[1]);
        }
        Grid::from_edges(edges, self.rule)
    }

    pub fn rule(&self) -> &'static GaussRule {
        self.rule
    }

    pub fn lo(&self) -> f64 {
        self.edges[0]
    }

    pub fn hi(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn panel_count(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn max_width(&self) -> f64 {
        self.edges
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    fn tol(&self) -> f64 {
        1e-12 * (self.hi() - self.lo()).max(1.0)
    }

    /// Whether `x` coincides with a panel edge (up to rounding).
    pub fn is_edge(&self, x: f64) -> bool {
        let tol = self.tol();
        self.edges.iter().any(|e| (e - x).abs() <= tol)
    }

    /// Index of the panel containing `x`; edges belong to the panel on their right
    /// except for the final edge.
    pub fn locate(&self, x: f64) -> usize {
        let p = self.edges.partition_point(|&e| e <= x);
        p.saturating_sub(1).min(self.panel_count() - 1)
    }

    fn check_values<T: Sample>(&self, values: &[T]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite_sample()) {
            return Err(Error::NonFinite("integrand samples".into()));
        }
        Ok(())
    }

    /// Polynomial interpolant of the panel containing `x`.
    pub fn interpolate<T: Sample>(&self, values: &[T], x: f64) -> Result<T> {
        if values.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        let tol = self.tol();
        if x < self.lo() - tol || x > self.hi() + tol {
            return Err(Error::OutsideGrid {
                lo: x,
                hi: x,
                grid_lo: self.lo(),
                grid_hi: self.hi(),
            });
        }
        let p = self.locate(x);
        let (e0, e1) = (self.edges[p], self.edges[p + 1]);
        let basis = self.rule.lagrange((x - e0) / (e1 - e0));
        let m = self.rule.order();
        Ok(values[p * m..(p + 1) * m]
            .iter()
            .zip(&basis)
            .fold(T::default(), |acc, (&v, &l)| acc + v * l))
    }

    /// Quadrature over the whole grid.
    pub fn integrate_all<T: Sample>(&self, values: &[T]) -> T {
        debug_assert_eq!(values.len(), self.len());
        values
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&v, &w)| acc + v * w)
    }

    /// Quadrature over `[lo, hi]`. Partial panels integrate the panel interpolant
    /// exactly, so splitting at a panel edge is additive to rounding.
    pub fn integrate<T: Sample>(&self, values: &[T], lo: f64, hi: f64) -> Result<T> {
        self.check_values(values)?;
        let tol = self.tol();
        if !(lo < hi) || lo < self.lo() - tol || hi > self.hi() + tol {
            return Err(Error::OutsideGrid {
                lo,
                hi,
                grid_lo: self.lo(),
                grid_hi: self.hi(),
            });
        }
        let m = self.rule.order();
        let first = self.locate(lo);
        let last = if self.is_edge(hi) && hi > self.lo() + tol {
            self.edges.partition_point(|&e| e < hi - tol) - 1
        } else {
            self.locate(hi)
        };
        let mut total = T::default();
        for p in first..=last {
            let (e0, e1) = (self.edges[p], self.edges[p + 1]);
            let a = lo.max(e0);
            let b = hi.min(e1);
            if b - a <= 0.0 {
                continue;
            }
            let chunk = &values[p * m..(p + 1) * m];
            if (a - e0).abs() <= tol && (b - e1).abs() <= tol {
                total = chunk
                    .iter()
                    .zip(&self.weights[p * m..(p + 1) * m])
                    .fold(total, |acc, (&v, &w)| acc + v * w);
            } else {
                let h = e1 - e0;
                let (wa, _) = self.rule.dense_weights(((a - e0) / h).clamp(0.0, 1.0));
                let (wb, _) = self.rule.dense_weights(((b - e0) / h).clamp(0.0, 1.0));
                for j in 0..m {
                    total = total + chunk[j] * ((wb[j] - wa[j]) * h);
                }
            }
        }
        Ok(total)
    }

    /// Samples `f` at every node.
    pub fn sample<T, F: Fn(f64) -> T>(&self, f: F) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Values of a tabulated function on the nodes of another grid covering a
    /// sub-interval of this one.
    pub fn resample<T: Sample>(&self, values: &[T], target: &Grid) -> Result<Vec<T>> {
        target
            .nodes()
            .iter()
            .map(|&x| self.interpolate(values, x))
            .collect()
    }

    pub fn shared(self) -> Arc<Grid> {
        Arc::new(self)
    }
}

/// Composite quadrature of complex samples over `[lo, hi]`.
pub fn integrate(grid: &Grid, values: &[Complex64], lo: f64, hi: f64) -> Result<Complex64> {
    grid.integrate(values, lo, hi)
}
