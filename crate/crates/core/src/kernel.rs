//! Reproducing kernels `k_s(z, w) = ∫_0^s ξ(x, z) ξ(x, w̄) dx` and the transform
//! `f(z) = ∫_0^s ξ(x, z) φ(x) dx` from `L₂(0, s)` onto `B_s`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{csqrt, sinc, Grid, PANEL_PHASE};
use crate::schrodinger::{tabulate, Potential};

fn check_extent(p: &Potential, s: f64) -> Result<()> {
    if s > 0.0 && s <= p.s_max() * (1.0 + 1e-12) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "interval length {s} must lie in (0, {}]",
            p.s_max()
        )))
    }
}

/// Angular frequency a grid must resolve for `ξ(·, z)`.
fn omega_for(p: &Potential, z_abs: f64) -> f64 {
    (z_abs + p.max_abs()).sqrt() + 1.0
}

/// `ξ(·, z)` on the nodes of `grid`, using the real solver for real `z`.
pub(crate) fn xi_on_grid(p: &Potential, z: Complex64, grid: &Grid) -> Result<Vec<Complex64>> {
    if z.im == 0.0 {
        Ok(tabulate(p, z.re, grid)?
            .xi
            .into_iter()
            .map(Complex64::from)
            .collect())
    } else {
        Ok(tabulate(p, z, grid)?.xi)
    }
}

/// `k_s(z, w)` by quadrature. Hermitian: `k(w, z) = conj k(z, w)`.
pub fn kernel_k(p: &Potential, s: f64, z: Complex64, w: Complex64) -> Result<Complex64> {
    check_extent(p, s)?;
    let grid = Grid::for_frequency(
        0.0,
        s,
        omega_for(p, z.norm().max(w.norm())),
        &p.breakpoints(),
    )?;
    let a = xi_on_grid(p, z, &grid)?;
    let b = xi_on_grid(p, w.conj(), &grid)?;
    let prod: Vec<Complex64> = a.iter().zip(&b).map(|(u, v)| u * v).collect();
    grid.integrate(&prod, 0.0, s)
}

/// `k_s(t, t) = ∫_0^s ξ(x, t)² dx` for real `t`; strictly positive.
pub fn kernel_diag(p: &Potential, s: f64, t: f64) -> Result<f64> {
    check_extent(p, s)?;
    let grid = Grid::for_frequency(0.0, s, omega_for(p, t.abs()), &p.breakpoints())?;
    let xi = tabulate(p, t, &grid)?.xi;
    let sq: Vec<f64> = xi.iter().map(|v| v * v).collect();
    Ok(grid.integrate_all(&sq))
}

/// Kernel for `V ≡ 0`:
/// `∫_0^s cos(√z x) cos(√w̄ x) dx = (s/2)[sinc((√z + √w̄)s) + sinc((√z − √w̄)s)]`.
/// `sinc` switches to its Taylor branch near 0, which covers `z = w` and `z = 0`.
pub fn kernel_free(s: f64, z: Complex64, w: Complex64) -> Complex64 {
    let a = csqrt(z);
    let b = csqrt(w.conj());
    (sinc((a + b) * s) + sinc((a - b) * s)) * (0.5 * s)
}

/// Element of `B_s` given by its `L₂(0, s)` preimage `φ`.
#[derive(Debug)]
pub struct DBFunction {
    potential: Potential,
    s: f64,
    grid: Arc<Grid>,
    phi: Vec<Complex64>,
    cache: RwLock<HashMap<(u64, u64), Complex64>>,
}

impl Clone for DBFunction {
    fn clone(&self) -> Self {
        DBFunction {
            potential: self.potential.clone(),
            s: self.s,
            grid: self.grid.clone(),
            phi: self.phi.clone(),
            cache: RwLock::new(HashMap::new()),
        }
    }
}

/// Wraps samples of `φ` on a grid spanning `[0, s]`.
pub fn transform(
    p: &Potential,
    s: f64,
    grid: impl Into<Arc<Grid>>,
    phi: Vec<Complex64>,
) -> Result<DBFunction> {
    DBFunction::from_samples(p, s, grid, phi)
}

impl DBFunction {
    pub fn from_samples(
        p: &Potential,
        s: f64,
        grid: impl Into<Arc<Grid>>,
        phi: Vec<Complex64>,
    ) -> Result<Self> {
        check_extent(p, s)?;
        let grid: Arc<Grid> = grid.into();
        let tol = 1e-12 * s.max(1.0);
        if grid.lo().abs() > tol || (grid.hi() - s).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "grid spans [{}, {}] but φ must live on [0, {s}]",
                grid.lo(),
                grid.hi()
            )));
        }
        if phi.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: phi.len(),
            });
        }
        if phi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("φ samples".into()));
        }
        Ok(DBFunction {
            potential: p.clone(),
            s,
            grid,
            phi,
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Samples `f` on a default grid over `[0, s]`. Discontinuities of `φ`
    /// must be listed in `breakpoints` so that they fall on panel edges.
    pub fn from_fn<F: Fn(f64) -> Complex64>(
        p: &Potential,
        s: f64,
        breakpoints: &[f64],
        f: F,
    ) -> Result<Self> {
        let mut breaks = p.breakpoints();
        breaks.extend_from_slice(breakpoints);
        let grid = Grid::for_frequency(0.0, s, 16.0, &breaks)?;
        let phi = grid.sample(f);
        DBFunction::from_samples(p, s, grid, phi)
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    /// `‖f‖_{B_s} = ‖φ‖_{L₂(0, s)}`.
    pub fn norm(&self) -> f64 {
        let sq: Vec<f64> = self.phi.iter().map(|v| v.norm_sqr()).collect();
        self.grid.integrate_all(&sq).sqrt()
    }

    /// `f(z)`, memoised. The cache never changes the returned value.
    pub fn evaluate(&self, z: Complex64) -> Result<Complex64> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*v);
        }
        let v = self.evaluate_fresh(z)?;
        self.cache
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(v);
        Ok(v)
    }

    /// `f(z)` by quadrature, bypassing the cache. The grid is refined when
    /// its panels are too wide for `ξ(·, z)`; `φ` is carried over through its
    /// panel interpolant, which it equals by definition.
    pub fn evaluate_fresh(&self, z: Complex64) -> Result<Complex64> {
        let omega = omega_for(&self.potential, z.norm());
        let factor = (self.grid.max_width() * omega / PANEL_PHASE).ceil().max(1.0) as usize;
        let (grid, phi) = if factor > 1 {
            let fine = self.grid.refined(factor)?;
            let phi = self.grid.resample(&self.phi, &fine)?;
            (Arc::new(fine), phi)
        } else {
            (self.grid.clone(), self.phi.clone())
        };
        let xi = xi_on_grid(&self.potential, z, &grid)?;
        let prod: Vec<Complex64> = xi.iter().zip(&phi).map(|(a, b)| a * b).collect();
        Ok(grid.integrate_all(&prod))
    }
}

/// Eigenfunctions `ξ(·, λ_n)` tabulated on one grid, for the many inner
/// products `∫ w(x) ξ(x, z) ξ(x, λ_n) dx` that sampling series need.
#[derive(Debug, Clone)]
pub struct EigenTable {
    potential: Potential,
    grid: Arc<Grid>,
    eigenvalues: Vec<f64>,
    values: Vec<Vec<f64>>,
    omega: f64,
}

impl EigenTable {
    /// Tabulates on `[0, extent]`. `breakpoints` become panel edges (e.g. the
    /// kink of a weight). Queries accept `|z| ≤ max(z_radius, max λ_n)`.
    pub fn new(
        p: &Potential,
        extent: f64,
        eigenvalues: &[f64],
        breakpoints: &[f64],
        z_radius: f64,
    ) -> Result<Self> {
        check_extent(p, extent)?;
        let lam_max = eigenvalues.iter().fold(0.0_f64, |m, l| m.max(l.abs()));
        let omega = omega_for(p, lam_max.max(z_radius));
        let mut breaks = p.breakpoints();
        breaks.extend_from_slice(breakpoints);
        let grid = Grid::for_frequency(0.0, extent, omega, &breaks)?.shared();
        let values = eigenvalues
            .par_iter()
            .map(|&l| Ok(tabulate(p, l, &grid)?.xi))
            .collect::<Result<Vec<_>>>()?;
        Ok(EigenTable {
            potential: p.clone(),
            grid,
            eigenvalues: eigenvalues.to_vec(),
            values,
            omega,
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `ξ(·, λ_n)` at the grid nodes.
    pub fn eigenfunction(&self, n: usize) -> &[f64] {
        &self.values[n]
    }

    /// `ξ(x, λ_n)` at an arbitrary position.
    pub fn eigenfunction_at(&self, n: usize, x: f64) -> Result<f64> {
        self.grid.interpolate(&self.values[n], x)
    }

    /// `ξ(·, z)` at the grid nodes.
    pub fn tabulate(&self, z: Complex64) -> Result<Vec<Complex64>> {
        if omega_for(&self.potential, z.norm()) > self.omega * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "z = {z} lies beyond the range this eigenfunction table resolves"
            )));
        }
        xi_on_grid(&self.potential, z, &self.grid)
    }

    /// `∫ weight(x) ξ(x, z) ξ(x, λ_n) dx` for every tabulated `n`, with
    /// `weight` sampled at the grid nodes.
    pub fn inner_row(&self, z: Complex64, weight: &[f64]) -> Result<Vec<Complex64>> {
        if weight.len() != self.grid.len() {
            return Err(Error::LengthMismatch {
                expected: self.grid.len(),
                got: weight.len(),
            });
        }
        let xi = self.tabulate(z)?;
        let u: Vec<Complex64> = xi
            .iter()
            .zip(weight)
            .zip(self.grid.weights())
            .map(|((x, w), q)| x * (w * q))
            .collect();
        Ok(self
            .values
            .iter()
            .map(|e| {
                e.iter()
                    .zip(&u)
                    .fold(Complex64::new(0.0, 0.0), |acc, (a, b)| acc + b * *a)
            })
            .collect())
    }

    /// Weight equal to 1 on `[0, upto]` and 0 beyond; `upto` must be a panel edge.
    pub fn indicator(&self, upto: f64) -> Result<Vec<f64>> {
        if !self.grid.is_edge(upto) {
            return Err(Error::GridMismatch(format!("{upto} is not a panel edge")));
        }
        Ok(self.grid.sample(|x| if x < upto { 1.0 } else { 0.0 }))
    }
}
