//! Eigenvalues of `H_s(γ)`: Neumann condition at 0 and
//! `φ(s) cos γ + φ'(s) sin γ = 0` at `s`.
//!
//! Each eigenvalue is isolated with the Prüfer angle `θ` defined by
//! `ξ = r cos θ`, `ξ' = −ω r sin θ`. The number of eigenvalues strictly below
//! `λ` equals the number of `k ≥ 0` with `θ_γ + kπ < θ(s, λ)`, where
//! `tan θ_γ = cot γ / ω`. This count does not depend on the scale `ω`, is
//! monotone in `λ`, and pins down the index of every root exactly, so no
//! eigenvalue can be skipped or counted twice. The root itself is then
//! polished with Brent's method on the boundary function `W`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::kernel_diag;
use crate::numerics::{find_root_bracketed, Tolerances};
use crate::output::{format_number, Table};
use crate::schrodinger::{shoot, Potential};

/// Bisection steps allowed when separating neighbouring eigenvalues.
const MAX_SEPARATION_STEPS: usize = 200;

/// Spectrum of `H_s(γ)` with norming constants `k_s(λ_n, λ_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralData {
    pub s: f64,
    pub gamma: f64,
    pub eigenvalues: Vec<f64>,
    pub norming: Vec<f64>,
    /// `|W(λ_n)|`.
    pub residuals: Vec<f64>,
}

impl SpectralData {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest available index.
    pub fn n_max(&self) -> usize {
        self.eigenvalues.len().saturating_sub(1)
    }

    /// Fails unless indices `0..=n` are available.
    pub fn require(&self, n: usize) -> Result<()> {
        if n < self.len() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "spectral data holds indices 0..={} but {n} was requested",
                self.n_max()
            )))
        }
    }

    /// The first `n + 1` entries.
    pub fn truncated(&self, n: usize) -> Result<SpectralData> {
        self.require(n)?;
        Ok(SpectralData {
            s: self.s,
            gamma: self.gamma,
            eigenvalues: self.eigenvalues[..=n].to_vec(),
            norming: self.norming[..=n].to_vec(),
            residuals: self.residuals[..=n].to_vec(),
        })
    }

    /// Columns `n, lambda, norming, boundary_residual`.
    pub fn table(&self) -> Table {
        let mut t = Table::new(["n", "lambda", "norming", "boundary_residual"]);
        for n in 0..self.len() {
            t.push(vec![
                n.to_string(),
                format_number(self.eigenvalues[n]),
                format_number(self.norming[n]),
                format_number(self.residuals[n]),
            ]);
        }
        t
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        self.table().write(w)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..PI).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("gamma must lie in [0, π), got {gamma}")))
    }
}

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

/// `W(z) = ξ(s, z) cos γ + ξ'(s, z) sin γ` for real `z`.
pub fn boundary_value(p: &Potential, s: f64, gamma: f64, z: f64) -> Result<f64> {
    check_extent(p, s)?;
    check_gamma(gamma)?;
    let (y, dy) = shoot(p, z, s, None)?;
    Ok(y * gamma.cos() + dy * gamma.sin())
}

/// Number of eigenvalues of `H_s(γ)` strictly below `lambda`.
pub fn eigenvalue_count(p: &Potential, s: f64, gamma: f64, lambda: f64) -> Result<usize> {
    check_extent(p, s)?;
    check_gamma(gamma)?;
    count_below(p, s, gamma, lambda)
}

fn count_below(p: &Potential, s: f64, gamma: f64, lambda: f64) -> Result<usize> {
    let omega = (lambda - p.mean()).abs().max(1.0).sqrt();
    let mut theta = 0.0_f64;
    let mut last = 0.0_f64;
    let mut visit = |_x: f64, y: f64, dy: f64| {
        let a = (-dy / omega).atan2(y);
        let mut d = a - last;
        if d > PI {
            d -= 2.0 * PI;
        } else if d <= -PI {
            d += 2.0 * PI;
        }
        theta += d;
        last = a;
    };
    shoot(p, lambda, s, Some(&mut visit))?;
    let theta_gamma = if gamma == 0.0 {
        FRAC_PI_2
    } else {
        (gamma.cos() / gamma.sin() / omega).atan()
    };
    Ok(if theta <= theta_gamma {
        0
    } else {
        ((theta - theta_gamma) / PI).ceil() as usize
    })
}

/// Locates `λ_n` with a bracket holding no other eigenvalue.
fn eigenvalue(p: &Potential, s: f64, gamma: f64, n: usize, tol: &Tolerances) -> Result<f64> {
    let (vmin, vmax) = p.range();
    let k = PI / s;
    let mut lo = if n == 0 {
        vmin - 1.0
    } else {
        ((n - 1) as f64 * k).powi(2) + vmin - 1.0
    };
    let mut hi = ((n + 1) as f64 * k).powi(2) + vmax + 1.0;
    let count = |x: f64| count_below(p, s, gamma, x);

    let mut steps = 0;
    while count(lo)? > n {
        lo -= 2.0 * (lo.abs() + 1.0);
        steps += 1;
        if steps > MAX_SEPARATION_STEPS {
            return Err(Error::Spectrum(format!("no lower bracket for λ_{n}")));
        }
    }
    while count(hi)? <= n {
        hi += 2.0 * (hi.abs() + 1.0);
        steps += 1;
        if steps > MAX_SEPARATION_STEPS {
            return Err(Error::Spectrum(format!("no upper bracket for λ_{n}")));
        }
    }
    // Shrink until the bracket holds λ_n and nothing else.
    let (mut c_lo, mut c_hi) = (count(lo)?, count(hi)?);
    while c_lo != n || c_hi != n + 1 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            return Err(Error::Spectrum(format!(
                "eigenvalues near {mid} could not be separated"
            )));
        }
        let c = count(mid)?;
        if c <= n {
            lo = mid;
            c_lo = c;
        } else {
            hi = mid;
            c_hi = c;
        }
        steps += 1;
        if steps > MAX_SEPARATION_STEPS {
            return Err(Error::Spectrum(format!("λ_{n} could not be isolated")));
        }
    }

    let w = |x: f64| boundary_value(p, s, gamma, x).unwrap_or(f64::NAN);
    let scale = hi.abs().max(1.0).sqrt();
    find_root_bracketed(w, lo, hi, tol.root_tol * scale)
        .map_err(|e| Error::Spectrum(format!("λ_{n}: {e}")))
}

/// First `n_max + 1` eigenvalues with norming constants, default tolerances.
pub fn compute_spectrum(p: &Potential, s: f64, gamma: f64, n_max: usize) -> Result<SpectralData> {
    compute_spectrum_with(p, s, gamma, n_max, &Tolerances::default())
}

/// First `n_max + 1` eigenvalues with norming constants.
pub fn compute_spectrum_with(
    p: &Potential,
    s: f64,
    gamma: f64,
    n_max: usize,
    tol: &Tolerances,
) -> Result<SpectralData> {
    check_extent(p, s)?;
    check_gamma(gamma)?;
    tol.validate()?;
    let entries: Vec<(f64, f64, f64)> = (0..=n_max)
        .into_par_iter()
        .map(|n| {
            let lambda = eigenvalue(p, s, gamma, n, tol)?;
            let norming = kernel_diag(p, s, lambda)?;
            let residual = boundary_value(p, s, gamma, lambda)?.abs();
            Ok((lambda, norming, residual))
        })
        .collect::<Result<_>>()?;
    let eigenvalues: Vec<f64> = entries.iter().map(|e| e.0).collect();
    if eigenvalues.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Spectrum("eigenvalues are not strictly increasing".into()));
    }
    Ok(SpectralData {
        s,
        gamma,
        eigenvalues,
        norming: entries.iter().map(|e| e.1).collect(),
        residuals: entries.iter().map(|e| e.2).collect(),
    })
}

/// Spectrum of `H_π(π/2)` for `V ≡ 0`: `λ_n = n²`, norming `π` then `π/2`.
pub fn free_spectrum(n_max: usize) -> SpectralData {
    SpectralData {
        s: PI,
        gamma: FRAC_PI_2,
        eigenvalues: (0..=n_max).map(|n| (n * n) as f64).collect(),
        norming: (0..=n_max).map(|n| if n == 0 { PI } else { FRAC_PI_2 }).collect(),
        residuals: vec![0.0; n_max + 1],
    }
}
