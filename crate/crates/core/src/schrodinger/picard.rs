//! Neumann series for the Volterra equation
//! `ξ(x) = cos(√z x) + ∫_0^x G(z, x, y) V(y) ξ(y) dy`.
//!
//! Each iterate is a direct quadrature of the previous one on a fixed
//! tabulation grid, so an iteration costs one dense matrix-vector product.
//! `G` is evaluated as `(x − y)·sinc(√z (x − y))`, which stays accurate for
//! large `Im √z` where the separable sin/cos form loses digits.

use num_complex::Complex64;
use serde::Serialize;

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::numerics::{csqrt, growth, sinc, CompensatedSum, Grid, Tolerances};

/// Default iteration depth.
pub const DEFAULT_PICARD_DEPTH: usize = 30;

/// `G(z, x, y) = sin(√z (x − y)) / √z`, entire in `z`.
pub fn greens(z: Complex64, x: f64, y: f64) -> Complex64 {
    greens_with_root(csqrt(z), x, y)
}

fn greens_with_root(root: Complex64, x: f64, y: f64) -> Complex64 {
    let d = x - y;
    sinc(root * d) * d
}

/// Partial sum of the series with the magnitude of every term.
#[derive(Debug, Clone, Serialize)]
pub struct PicardSum {
    pub value: Complex64,
    /// `sup_y |ξ_n(y)|` over the grid and the endpoint, for `n = 0, 1, …`.
    pub term_sups: Vec<f64>,
    /// Set when a term fell below the tail tolerance before the depth ran out.
    pub stopped_early: bool,
}

/// `Σ_{n ≤ iterations} ξ_n(x, z)` with the default tail tolerance.
pub fn xi_picard(p: &Potential, z: Complex64, x: f64, iterations: usize) -> Result<Complex64> {
    let tol = Tolerances::default().series_tail_tol;
    Ok(xi_picard_series(p, z, x, iterations, tol)?.value)
}

/// Picard partial sum at `x`. Stops once a term's sup falls below
/// `tail_tol · e^{|Im √z| x}`.
pub fn xi_picard_series(
    p: &Potential,
    z: Complex64,
    x: f64,
    iterations: usize,
    tail_tol: f64,
) -> Result<PicardSum> {
    series_with_root(p, csqrt(z), x, iterations, tail_tol)
}

fn series_with_root(
    p: &Potential,
    root: Complex64,
    x: f64,
    iterations: usize,
    tail_tol: f64,
) -> Result<PicardSum> {
    if !(x >= 0.0) || x > p.s_max() * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "position {x} outside the potential's extent [0, {}]",
            p.s_max()
        )));
    }
    let head = (root * x).cos();
    if x == 0.0 || iterations == 0 || p.is_zero() {
        let sups = if x == 0.0 { vec![1.0] } else { vec![head.norm()] };
        return Ok(PicardSum {
            value: head,
            term_sups: sups,
            stopped_early: false,
        });
    }

    let omega = root.norm() + p.max_abs().sqrt() + 1.0;
    let grid = Grid::for_frequency(0.0, x, omega, &p.breakpoints())?;
    let kernel = volterra_matrix(p, root, &grid);
    let rows = grid.len() + 1;
    let cols = grid.len();

    // Targets are the grid nodes followed by the endpoint `x`.
    let mut term: Vec<Complex64> = grid.nodes().iter().map(|&y| (root * y).cos()).collect();
    term.push(head);
    let scale = growth(root * root, x);
    let mut sum = CompensatedSum::new();
    sum.add(head);
    let mut sups = vec![term.iter().map(|v| v.norm()).fold(0.0, f64::max)];
    let mut stopped_early = false;

    for _ in 0..iterations {
        let next: Vec<Complex64> = (0..rows)
            .map(|i| {
                let row = &kernel[i * cols..(i + 1) * cols];
                row.iter()
                    .zip(&term[..cols])
                    .fold(Complex64::new(0.0, 0.0), |acc, (k, v)| acc + k * v)
            })
            .collect();
        if next.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("Picard iterate".into()));
        }
        let sup = next.iter().map(|v| v.norm()).fold(0.0, f64::max);
        sum.add(next[cols]);
        sups.push(sup);
        term = next;
        if sup <= tail_tol * scale {
            stopped_early = sups.len() <= iterations;
            break;
        }
    }
    Ok(PicardSum {
        value: sum.value(),
        term_sups: sups,
        stopped_early,
    })
}

/// Row `i` holds the quadrature weights of `y ↦ G(x_i, y) V(y) u(y)` on
/// `[0, x_i]`; the last row targets the grid's right end.
fn volterra_matrix(p: &Potential, root: Complex64, grid: &Grid) -> Vec<Complex64> {
    let rule = grid.rule();
    let m = rule.order();
    let cols = grid.len();
    let nodes = grid.nodes();
    let v: Vec<f64> = grid.sample(|y| p.value(y));
    let mut out = vec![Complex64::new(0.0, 0.0); (cols + 1) * cols];
    for i in 0..=cols {
        let (target, panel, stage) = if i < cols {
            (nodes[i], i / m, Some(i % m))
        } else {
            (grid.hi(), grid.panel_count(), None)
        };
        let row = &mut out[i * cols..(i + 1) * cols];
        for j in 0..panel * m {
            row[j] = greens_with_root(root, target, nodes[j]) * (v[j] * grid.weights()[j]);
        }
        if let Some(c) = stage {
            let h = grid.edges()[panel + 1] - grid.edges()[panel];
            let weights = &rule.int1()[c * m..(c + 1) * m];
            for (k, w) in weights.iter().enumerate() {
                let j = panel * m + k;
                row[j] = greens_with_root(root, target, nodes[j]) * (v[j] * w * h);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schrodinger::xi_at;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn greens_values() {
        assert_eq!(greens(c(3.0, 1.0), 1.3, 1.3), c(0.0, 0.0));
        assert!((greens(c(0.0, 0.0), 2.0, 1.0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(greens(c(4.0, 0.0), PI, 0.0).norm() < 1e-15);
        let z = c(1e-10, 0.0);
        assert!((greens(z, 1.0, 0.0) - c(1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn zeroth_iterate_is_cosine() {
        let p = Potential::cosine_preset(PI);
        let z = c(5.0, -2.0);
        let v = xi_picard(&p, z, 2.0, 0).unwrap();
        assert_eq!(v, (csqrt(z) * 2.0).cos());
    }

    #[test]
    fn zero_potential_adds_nothing() {
        let p = Potential::zero(PI);
        let z = c(12.0, 3.0);
        assert_eq!(xi_picard(&p, z, PI, 30).unwrap(), (csqrt(z) * PI).cos());
    }

    #[test]
    fn agrees_with_ode_solver() {
        let p = Potential::cosine_preset(PI);
        let z = c(10.0, 0.0);
        let (exact, _) = xi_at(&p, z, PI).unwrap();
        let v = xi_picard(&p, z, PI, DEFAULT_PICARD_DEPTH).unwrap();
        assert!((v - exact).norm() <= 1e-8, "{v} vs {exact}");
    }

    #[test]
    fn terms_respect_factorial_envelope() {
        // |ξ_{n+1}| ≤ ‖V‖₁ C₀^{n+1}/(n+1)! · x/(1+|z|^{1/2}x) · e^{|Im √z| x} · I^n
        // with I = ∫_0^x y|V(y)|/(1+|z|^{1/2}y) dy; C₀ = 2 is admissible for real z > 0.
        let p = Potential::cosine_preset(PI);
        let z = c(30.0, 0.0);
        let x = PI;
        let sum = xi_picard_series(&p, z, x, 25, 0.0).unwrap();
        let rz = z.norm().sqrt();
        let l1 = p.l1_norm(0.0, x);
        let g = Grid::for_frequency(0.0, x, 5.0, &[]).unwrap();
        let inner = g.integrate_all(&g.sample(|y| y * p.value(y).abs() / (1.0 + rz * y)));
        let mut envelope = 2.0 * l1 * x / (1.0 + rz * x);
        for (n, sup) in sum.term_sups.iter().enumerate().skip(1) {
            assert!(*sup <= envelope * (1.0 + 1e-9) + 1e-300, "term {n}: {sup} > {envelope}");
            envelope *= 2.0 * inner / (n + 1) as f64;
        }
    }

    #[test]
    fn branch_independent() {
        let p = Potential::cosine_preset(PI);
        let z = c(7.0, 9.0);
        let plus = series_with_root(&p, csqrt(z), 2.5, 30, 1e-14).unwrap().value;
        let minus = series_with_root(&p, -csqrt(z), 2.5, 30, 1e-14).unwrap().value;
        assert!((plus - minus).norm() <= 1e-12 * plus.norm().max(1.0));
    }

    #[test]
    fn early_stop_is_reported() {
        let p = Potential::cosine_preset(PI);
        let s = xi_picard_series(&p, c(4.0, 0.0), 1.0, 60, 1e-8).unwrap();
        assert!(s.stopped_early);
        assert!(s.term_sups.len() < 61);
        assert!(*s.term_sups.last().unwrap() <= 1e-8);
    }
}
