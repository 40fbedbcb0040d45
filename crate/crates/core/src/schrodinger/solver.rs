//! Gauss collocation for `ξ'' = (V − z) ξ` with `ξ(0) = 1`, `ξ'(0) = 0`.
//!
//! One step over `[x0, x0 + h]` collocates the second-order equation at the
//! Gauss nodes of the grid's rule (Nyström form). The end values are
//! superconvergent of order `2m`; stage values are of order `m + 1` and are
//! what tabulation stores. Real spectral parameters run the same code in
//! `f64`, so their solutions carry no imaginary part at all.

use std::sync::Arc;

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::numerics::{GaussRule, Grid, Sample, MAX_PANEL_WIDTH};

/// Scalar type of the state: `f64` for real `z`, `Complex64` otherwise.
pub trait Field: ComplexField<RealField = f64> + Copy + Sample {}

impl<T: ComplexField<RealField = f64> + Copy + Sample> Field for T {}

/// Largest `h·ω` taken by a single collocation step.
const STEP_PHASE: f64 = 2.0;

/// Extent slack when comparing grid ends against `s`.
const EXTENT_TOL: f64 = 1e-12;

fn finite<T: Field>(v: T) -> bool {
    v.is_finite_sample()
}

/// `sqrt(|V(x) − z|)`, the local angular frequency, maximised over samples.
fn local_omega<T: Field>(q: &[T]) -> f64 {
    q.iter().map(|v| v.modulus().sqrt()).fold(0.0, f64::max)
}

/// `V(x) − z` as a closure over the state type.
fn coefficient<'a, T: Field>(p: &'a Potential, z: T) -> impl Fn(f64) -> T + 'a {
    move |x| T::from_real(p.value(x)) - z
}

/// One collocation step. Writes stage values when `stages` is given and
/// returns the end values.
fn collocate<T: Field>(
    rule: &GaussRule,
    x0: f64,
    h: f64,
    y0: T,
    dy0: T,
    q: &dyn Fn(f64) -> T,
    stages: Option<(&mut [T], &mut [T])>,
) -> Result<(T, T)> {
    let m = rule.order();
    let c = rule.nodes();
    let int1 = rule.int1();
    let int2 = rule.int2();
    let qs: Vec<T> = c.iter().map(|&ci| q(x0 + ci * h)).collect();
    let h2 = T::from_real(h * h);
    let mat = DMatrix::from_fn(m, m, |i, j| {
        let diag = if i == j { T::one() } else { T::zero() };
        diag - h2 * qs[i] * T::from_real(int2[i * m + j])
    });
    let rhs = DVector::from_fn(m, |i, _| qs[i] * (y0 + dy0 * T::from_real(h * c[i])));
    let f = mat.lu().solve(&rhs).ok_or_else(|| Error::Solver {
        x: x0,
        reason: "singular collocation system".into(),
    })?;

    let mut y1 = y0 + dy0 * T::from_real(h);
    let mut dy1 = dy0;
    for (j, &fj) in f.iter().enumerate() {
        y1 += h2 * T::from_real(rule.end2()[j]) * fj;
        dy1 += T::from_real(h * rule.weights()[j]) * fj;
    }
    if let Some((ys, dys)) = stages {
        for i in 0..m {
            let mut y = y0 + dy0 * T::from_real(h * c[i]);
            let mut dy = dy0;
            for j in 0..m {
                y += h2 * T::from_real(int2[i * m + j]) * f[j];
                dy += T::from_real(h * int1[i * m + j]) * f[j];
            }
            ys[i] = y;
            dys[i] = dy;
        }
    }
    if !(finite(y1) && finite(dy1)) {
        return Err(Error::Solver {
            x: x0 + h,
            reason: "non-finite state".into(),
        });
    }
    Ok((y1, dy1))
}

/// Cut points of `[x0, x1]`: every breakpoint strictly inside, then uniform
/// subdivision with `h·ω ≤ STEP_PHASE`.
fn pieces(x0: f64, x1: f64, omega: f64, breakpoints: &[f64]) -> Vec<f64> {
    let tol = EXTENT_TOL * (x1 - x0).abs().max(1.0);
    let mut cuts = vec![x0];
    cuts.extend(
        breakpoints
            .iter()
            .copied()
            .filter(|&b| b > x0 + tol && b < x1 - tol),
    );
    cuts.push(x1);
    let mut out = vec![x0];
    for w in cuts.windows(2) {
        let k = ((w[1] - w[0]) * omega / STEP_PHASE).ceil().max(1.0) as usize;
        let h = (w[1] - w[0]) / k as f64;
        for i in 1..k {
            out.push(w[0] + i as f64 * h);
        }
        out.push(w[1]);
    }
    out
}

/// Node and edge values of a solution on a grid.
pub(crate) struct Tabulation<T> {
    pub xi: Vec<T>,
    pub xi_prime: Vec<T>,
    pub edge_xi: Vec<T>,
    pub edge_xi_prime: Vec<T>,
}

/// Tabulates the solution for spectral parameter `z` on the nodes of `grid`,
/// which must start at 0.
pub(crate) fn tabulate<T: Field>(p: &Potential, z: T, grid: &Grid) -> Result<Tabulation<T>> {
    let rule = grid.rule();
    let m = rule.order();
    let q = coefficient(p, z);
    let breaks = p.breakpoints();
    let mut out = Tabulation {
        xi: vec![T::zero(); grid.len()],
        xi_prime: vec![T::zero(); grid.len()],
        edge_xi: Vec::with_capacity(grid.edges().len()),
        edge_xi_prime: Vec::with_capacity(grid.edges().len()),
    };
    let (mut y, mut dy) = (T::one(), T::zero());
    out.edge_xi.push(y);
    out.edge_xi_prime.push(dy);

    for (k, w) in grid.edges().windows(2).enumerate() {
        let (e0, e1) = (w[0], w[1]);
        let h = e1 - e0;
        let nodes = &grid.nodes()[k * m..(k + 1) * m];
        let mut samples: Vec<T> = nodes.iter().map(|&x| q(x)).collect();
        samples.push(q(e0));
        samples.push(q(e1));
        let omega = local_omega(&samples);
        let cuts = pieces(e0, e1, omega, &breaks);
        let ys = &mut out.xi[k * m..(k + 1) * m];
        let dys = &mut out.xi_prime[k * m..(k + 1) * m];

        if cuts.len() == 2 {
            (y, dy) = collocate(rule, e0, h, y, dy, &q, Some((ys, dys)))?;
        } else {
            // Substeps; stage nodes of the original panel come from dense steps.
            let mut next_node = 0;
            for c in cuts.windows(2) {
                while next_node < m && (nodes[next_node] < c[1] || c[1] == e1) {
                    let t = nodes[next_node] - c[0];
                    (ys[next_node], dys[next_node]) = if t > 0.0 {
                        collocate(rule, c[0], t, y, dy, &q, None)?
                    } else {
                        (y, dy)
                    };
                    next_node += 1;
                }
                (y, dy) = collocate(rule, c[0], c[1] - c[0], y, dy, &q, None)?;
            }
        }
        out.edge_xi.push(y);
        out.edge_xi_prime.push(dy);
    }
    Ok(out)
}

/// Integrates from 0 to `s` and returns `(ξ(s), ξ'(s))`. The visitor, when
/// given, sees `(x, ξ, ξ')` at every stage node and step end in increasing `x`.
pub(crate) fn shoot<T: Field>(
    p: &Potential,
    z: T,
    s: f64,
    mut visit: Option<&mut dyn FnMut(f64, T, T)>,
) -> Result<(T, T)> {
    if s == 0.0 {
        return Ok((T::one(), T::zero()));
    }
    let rule = GaussRule::shooting();
    let m = rule.order();
    let q = coefficient(p, z);
    let omega = (z.modulus() + p.max_abs()).sqrt();
    let width = (STEP_PHASE / omega.max(1e-300)).min(MAX_PANEL_WIDTH);
    let grid = Grid::with_breakpoints(0.0, s, &p.breakpoints(), width, rule)?;
    let (mut y, mut dy) = (T::one(), T::zero());
    let mut ys = vec![T::zero(); m];
    let mut dys = vec![T::zero(); m];
    for w in grid.edges().windows(2) {
        let h = w[1] - w[0];
        match visit.as_deref_mut() {
            Some(f) => {
                (y, dy) = collocate(rule, w[0], h, y, dy, &q, Some((&mut ys, &mut dys)))?;
                for i in 0..m {
                    f(w[0] + rule.nodes()[i] * h, ys[i], dys[i]);
                }
                f(w[1], y, dy);
            }
            None => (y, dy) = collocate(rule, w[0], h, y, dy, &q, None)?,
        }
    }
    Ok((y, dy))
}

fn check_extent(p: &Potential, s: f64) -> Result<()> {
    if !(s >= 0.0) || s > p.s_max() * (1.0 + EXTENT_TOL) {
        return Err(Error::InvalidArgument(format!(
            "position {s} outside the potential's extent [0, {}]",
            p.s_max()
        )));
    }
    Ok(())
}

/// `ξ(·, z)` and `ξ'(·, z)` tabulated on a grid over `[0, s]`.
#[derive(Debug, Clone)]
pub struct WaveField {
    pub z: Complex64,
    pub grid: Arc<Grid>,
    /// `ξ` at the grid nodes.
    pub xi: Vec<Complex64>,
    /// `ξ'` at the grid nodes.
    pub xi_prime: Vec<Complex64>,
    edge_xi: Vec<Complex64>,
    edge_xi_prime: Vec<Complex64>,
}

impl WaveField {
    /// `(ξ(0), ξ'(0))`; always `(1, 0)`.
    pub fn at_start(&self) -> (Complex64, Complex64) {
        (self.edge_xi[0], self.edge_xi_prime[0])
    }

    /// `(ξ(s), ξ'(s))` from the step end values.
    pub fn at_end(&self) -> (Complex64, Complex64) {
        let k = self.edge_xi.len() - 1;
        (self.edge_xi[k], self.edge_xi_prime[k])
    }

    /// Values at panel edges.
    pub fn edge_values(&self) -> (&[Complex64], &[Complex64]) {
        (&self.edge_xi, &self.edge_xi_prime)
    }

    fn edge_index(&self, x: f64) -> Option<usize> {
        let tol = EXTENT_TOL * self.grid.hi().max(1.0);
        self.grid
            .edges()
            .iter()
            .position(|e| (e - x).abs() <= tol)
    }

    /// `ξ(x)`: exact at edges, panel interpolant elsewhere.
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        match self.edge_index(x) {
            Some(k) => Ok(self.edge_xi[k]),
            None => self.grid.interpolate(&self.xi, x),
        }
    }

    /// `ξ'(x)`: exact at edges, panel interpolant elsewhere.
    pub fn eval_prime(&self, x: f64) -> Result<Complex64> {
        match self.edge_index(x) {
            Some(k) => Ok(self.edge_xi_prime[k]),
            None => self.grid.interpolate(&self.xi_prime, x),
        }
    }
}

/// Solves the initial value problem on `grid`, which must span `[0, s]`.
pub fn xi_solve(
    p: &Potential,
    z: Complex64,
    s: f64,
    grid: impl Into<Arc<Grid>>,
) -> Result<WaveField> {
    let grid: Arc<Grid> = grid.into();
    check_extent(p, s)?;
    let tol = EXTENT_TOL * s.max(1.0);
    if grid.lo().abs() > tol || (grid.hi() - s).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "grid spans [{}, {}] but the solution is requested on [0, {s}]",
            grid.lo(),
            grid.hi()
        )));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("spectral parameter".into()));
    }
    let tab = if z.im == 0.0 {
        let t = tabulate(p, z.re, &grid)?;
        let lift = |v: Vec<f64>| v.into_iter().map(Complex64::from).collect::<Vec<_>>();
        Tabulation {
            xi: lift(t.xi),
            xi_prime: lift(t.xi_prime),
            edge_xi: lift(t.edge_xi),
            edge_xi_prime: lift(t.edge_xi_prime),
        }
    } else {
        tabulate(p, z, &grid)?
    };
    Ok(WaveField {
        z,
        grid,
        xi: tab.xi,
        xi_prime: tab.xi_prime,
        edge_xi: tab.edge_xi,
        edge_xi_prime: tab.edge_xi_prime,
    })
}

/// Default tabulation grid on `[0, s]` for spectral parameter `z`.
pub fn grid_for(p: &Potential, z: Complex64, s: f64) -> Result<Grid> {
    let omega = (z.norm() + p.max_abs()).sqrt() + 1.0;
    Grid::for_frequency(0.0, s, omega, &p.breakpoints())
}

/// `(ξ(x, z), ξ'(x, z))` at a single position.
pub fn xi_at(p: &Potential, z: Complex64, x: f64) -> Result<(Complex64, Complex64)> {
    check_extent(p, x)?;
    if z.im == 0.0 {
        let (y, dy) = shoot(p, z.re, x, None)?;
        Ok((y.into(), dy.into()))
    } else {
        shoot(p, z, x, None)
    }
}

/// Real-parameter variant of [`xi_at`].
pub fn xi_at_real(p: &Potential, lambda: f64, x: f64) -> Result<(f64, f64)> {
    check_extent(p, x)?;
    shoot(p, lambda, x, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::cos_sqrt;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_solution_is_cosine() {
        let p = Potential::zero(PI);
        for z in [c(0.0, 0.0), c(2.5, 0.0), c(-3.0, 0.0), c(40.0, 7.0), c(-10.0, -20.0)] {
            let w = xi_solve(&p, z, PI, grid_for(&p, z, PI).unwrap()).unwrap();
            assert_eq!(w.at_start(), (c(1.0, 0.0), c(0.0, 0.0)));
            let root = z.sqrt();
            for (x, v) in w.grid.nodes().iter().zip(&w.xi) {
                let exact = (root * *x).cos();
                assert!((v - exact).norm() <= 1e-12 * exact.norm().max(1.0), "z={z} x={x}");
            }
            let (y, dy) = w.at_end();
            assert!((y - cos_sqrt(z, PI)).norm() <= 1e-12 * y.norm().max(1.0));
            let dexact = -root * (root * PI).sin();
            assert!((dy - dexact).norm() <= 1e-11 * dexact.norm().max(1.0));
        }
    }

    #[test]
    fn constant_potential_shifts_parameter() {
        let p = Potential::constant(4.0, PI).unwrap();
        let (y, _) = xi_at(&p, c(8.0, 0.0), PI / 2.0).unwrap();
        assert!((y - c(-1.0, 0.0)).norm() < 1e-12);
        let z = c(3.0, 2.0);
        let w = xi_solve(&p, z, PI, grid_for(&p, z, PI).unwrap()).unwrap();
        let x = 2.2;
        assert!((w.eval(x).unwrap() - cos_sqrt(z - 4.0, x)).norm() < 1e-11);
    }

    #[test]
    fn real_parameter_gives_real_solution() {
        let p = Potential::cosine_preset(PI);
        let w = xi_solve(&p, c(17.3, 0.0), PI, grid_for(&p, c(17.3, 0.0), PI).unwrap()).unwrap();
        assert!(w.xi.iter().chain(&w.xi_prime).all(|v| v.im == 0.0));
    }

    #[test]
    fn coarse_grid_substeps_agree_with_fine_grid() {
        let p = Potential::piecewise_linear(vec![0.0, 1.0, 2.0, PI], vec![1.0, -2.0, 0.5, 3.0])
            .unwrap();
        let z = c(150.0, 3.0);
        let fine = xi_solve(&p, z, PI, grid_for(&p, z, PI).unwrap()).unwrap();
        let coarse = xi_solve(&p, z, PI, Grid::uniform(0.0, PI, 3).unwrap()).unwrap();
        let (ya, dya) = fine.at_end();
        let (yb, dyb) = coarse.at_end();
        assert!((ya - yb).norm() < 1e-10 * ya.norm().max(1.0));
        assert!((dya - dyb).norm() < 1e-10 * dya.norm().max(1.0));
        for (k, x) in coarse.grid.nodes().iter().enumerate() {
            let (y, _) = xi_at(&p, z, *x).unwrap();
            assert!((coarse.xi[k] - y).norm() < 1e-10 * y.norm().max(1.0));
        }
    }

    #[test]
    fn shooting_matches_tabulation() {
        let p = Potential::cosine_preset(PI);
        for z in [c(0.3, 0.0), c(55.0, -4.0), c(-8.0, 1.0)] {
            let w = xi_solve(&p, z, PI, grid_for(&p, z, PI).unwrap()).unwrap();
            let (y, dy) = xi_at(&p, z, PI).unwrap();
            let (ty, tdy) = w.at_end();
            assert!((y - ty).norm() < 1e-11 * y.norm().max(1.0));
            assert!((dy - tdy).norm() < 1e-11 * dy.norm().max(1.0));
        }
    }

    #[test]
    fn green_identity_for_two_real_parameters() {
        let p = Potential::cosine_preset(PI);
        let (z1, z2) = (3.7, 11.2);
        let g = Grid::for_frequency(0.0, PI, 5.0, &[]).unwrap().shared();
        let w1 = xi_solve(&p, c(z1, 0.0), PI, g.clone()).unwrap();
        let w2 = xi_solve(&p, c(z2, 0.0), PI, g.clone()).unwrap();
        let prod: Vec<Complex64> = w1.xi.iter().zip(&w2.xi).map(|(a, b)| a * b).collect();
        let lhs = (z1 - z2) * g.integrate_all(&prod);
        let (y1, d1) = w1.at_end();
        let (y2, d2) = w2.at_end();
        let rhs = y1 * d2 - d1 * y2;
        assert!((lhs - rhs).norm() < 1e-8);
    }

    #[test]
    fn extent_and_grid_errors() {
        let p = Potential::zero(1.0);
        let g = Grid::uniform(0.0, 2.0, 4).unwrap();
        assert!(matches!(
            xi_solve(&p, c(1.0, 0.0), 2.0, g),
            Err(Error::InvalidArgument(_))
        ));
        let g = Grid::uniform(0.0, 0.5, 4).unwrap();
        assert!(matches!(
            xi_solve(&p, c(1.0, 0.0), 1.0, g),
            Err(Error::GridMismatch(_))
        ));
        assert!(xi_at(&p, c(1.0, 0.0), -0.1).is_err());
    }
}
