//! Shared deterministic kernels: quadrature, root bracketing, seeded noise and
//! a few complex helpers.

mod noise;
mod quadrature;
mod roots;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub use noise::{derive_seed, rng, uniform_noise, NoiseSample, TrigPolynomial};
pub use quadrature::{
    integrate, GaussRule, Grid, Sample, MAX_PANEL_WIDTH, PANEL_PHASE, TABULATION_ORDER,
};
pub use roots::find_root_bracketed;

/// Accuracy targets shared by every module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub ode_tol: f64,
    pub quad_tol: f64,
    pub root_tol: f64,
    pub series_tail_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_tol: 1e-10,
            quad_tol: 1e-10,
            root_tol: 1e-11,
            series_tail_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.entries() {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance {name} must be strictly positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn entries(&self) -> [(&'static str, f64); 4] {
        [
            ("ode_tol", self.ode_tol),
            ("quad_tol", self.quad_tol),
            ("root_tol", self.root_tol),
            ("series_tail_tol", self.series_tail_tol),
        ]
    }

    /// Overrides one tolerance by name.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        let slot = match key {
            "ode_tol" => &mut self.ode_tol,
            "quad_tol" => &mut self.quad_tol,
            "root_tol" => &mut self.root_tol,
            "series_tail_tol" => &mut self.series_tail_tol,
            _ => return Err(Error::InvalidArgument(format!("unknown tolerance `{key}`"))),
        };
        *slot = value;
        self.validate()
    }
}

/// Neumaier-compensated complex accumulator. Summation order is the caller's
/// iteration order, which every caller keeps ascending in the series index.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    comp: Complex64,
}

fn two_sum(acc: &mut f64, comp: &mut f64, x: f64) {
    let t = *acc + x;
    if acc.abs() >= x.abs() {
        *comp += (*acc - t) + x;
    } else {
        *comp += (x - t) + *acc;
    }
    *acc = t;
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: Complex64) {
        two_sum(&mut self.sum.re, &mut self.comp.re, x.re);
        two_sum(&mut self.sum.im, &mut self.comp.im, x.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.comp
    }
}

impl FromIterator<Complex64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = Complex64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Principal square root.
pub fn csqrt(z: Complex64) -> Complex64 {
    z.sqrt()
}

/// `sin(u) / u`, entire; the Taylor branch covers the removable point.
pub fn sinc(u: Complex64) -> Complex64 {
    if u.norm() < 1e-4 {
        let u2 = u * u;
        Complex64::new(1.0, 0.0) - u2 / 6.0 + u2 * u2 / 120.0
    } else {
        u.sin() / u
    }
}

/// `cos(√z x)`, the solution for the zero potential.
pub fn cos_sqrt(z: Complex64, x: f64) -> Complex64 {
    (csqrt(z) * x).cos()
}

/// `e^{|Im √z| x}`, the natural growth scale of every solution.
pub fn growth(z: Complex64, x: f64) -> f64 {
    (csqrt(z).im.abs() * x).exp()
}
