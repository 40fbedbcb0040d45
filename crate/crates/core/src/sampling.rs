//! Kramer sampling: `f(z) = Σ_n f(λ_n) k_s(z, λ_n) / k_s(λ_n, λ_n)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{kernel_free, kernel_k, DBFunction, EigenTable};
use crate::numerics::CompensatedSum;
use crate::output::{format_number, Table};
use crate::schrodinger::Potential;
use crate::spectrum::SpectralData;

/// Samples `f(λ_n)`, `n ≤ truncation`, with optional additive noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    samples: Vec<Complex64>,
    noise: Option<Vec<f64>>,
    truncation: usize,
}

impl SampledFunction {
    pub fn new(samples: Vec<Complex64>, noise: Option<Vec<f64>>, truncation: usize) -> Result<Self> {
        if samples.len() < truncation + 1 {
            return Err(Error::LengthMismatch {
                expected: truncation + 1,
                got: samples.len(),
            });
        }
        if let Some(e) = &noise {
            if e.len() != samples.len() {
                return Err(Error::LengthMismatch {
                    expected: samples.len(),
                    got: e.len(),
                });
            }
        }
        Ok(SampledFunction {
            samples,
            noise,
            truncation,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn noise(&self) -> Option<&[f64]> {
        self.noise.as_deref()
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn with_noise(&self, noise: Vec<f64>) -> Result<Self> {
        SampledFunction::new(self.samples.clone(), Some(noise), self.truncation)
    }

    pub fn with_truncation(&self, truncation: usize) -> Result<Self> {
        SampledFunction::new(self.samples.clone(), self.noise.clone(), truncation)
    }

    /// `f(λ_n) + ε_n` for `n ≤ truncation`.
    pub fn values(&self) -> Vec<Complex64> {
        (0..=self.truncation)
            .map(|n| {
                let e = self.noise.as_ref().map_or(0.0, |e| e[n]);
                self.samples[n] + e
            })
            .collect()
    }
}

/// `f(λ_n)` for `n ≤ n_max`.
pub fn take_samples(f: &DBFunction, sd: &SpectralData, n_max: usize) -> Result<SampledFunction> {
    if f.s() > sd.s * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "function lives in B_{} but the samples come from H_{}",
            f.s(),
            sd.s
        )));
    }
    sd.require(n_max)?;
    let samples = sd.eigenvalues[..=n_max]
        .par_iter()
        .map(|&l| f.evaluate(Complex64::new(l, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::new(samples, None, n_max)
}

/// Source of the sampling coefficients `k(z, λ_n) / k(λ_n, λ_n)`.
pub trait KernelProvider: Sync {
    /// Coefficients for `n ≤ n_max`.
    fn coefficients(&self, z: Complex64, n_max: usize) -> Result<Vec<Complex64>>;
}

/// Coefficient row that collapses to a unit vector when `z` is exactly a
/// sample point; orthogonality makes this the exact value.
fn collapsed(sd: &SpectralData, z: Complex64, n_max: usize) -> Option<Vec<Complex64>> {
    if z.im != 0.0 {
        return None;
    }
    let m = sd.eigenvalues[..=n_max].iter().position(|&l| l == z.re)?;
    let mut row = vec![Complex64::new(0.0, 0.0); n_max + 1];
    row[m] = Complex64::new(1.0, 0.0);
    Some(row)
}

/// One quadrature per kernel value. Slow; intended as a reference.
#[derive(Debug, Clone)]
pub struct DirectKernel<'a> {
    pub potential: &'a Potential,
    pub spectral: &'a SpectralData,
}

impl KernelProvider for DirectKernel<'_> {
    fn coefficients(&self, z: Complex64, n_max: usize) -> Result<Vec<Complex64>> {
        self.spectral.require(n_max)?;
        if let Some(row) = collapsed(self.spectral, z, n_max) {
            return Ok(row);
        }
        (0..=n_max)
            .into_par_iter()
            .map(|n| {
                let t = Complex64::new(self.spectral.eigenvalues[n], 0.0);
                Ok(kernel_k(self.potential, self.spectral.s, z, t)? / self.spectral.norming[n])
            })
            .collect()
    }
}

/// Closed-form kernel for `V ≡ 0`.
#[derive(Debug, Clone)]
pub struct FreeKernel<'a> {
    pub spectral: &'a SpectralData,
}

impl KernelProvider for FreeKernel<'_> {
    fn coefficients(&self, z: Complex64, n_max: usize) -> Result<Vec<Complex64>> {
        let sd = self.spectral;
        sd.require(n_max)?;
        if let Some(row) = collapsed(sd, z, n_max) {
            return Ok(row);
        }
        Ok((0..=n_max)
            .map(|n| kernel_free(sd.s, z, Complex64::new(sd.eigenvalues[n], 0.0)) / sd.norming[n])
            .collect())
    }
}

/// Kernel values from a shared eigenfunction table.
#[derive(Debug, Clone)]
pub struct KernelTable {
    spectral: SpectralData,
    table: EigenTable,
    weight: Vec<f64>,
}

impl KernelTable {
    /// Tabulates `ξ(·, λ_n)` on `[0, s]` for every eigenvalue in `sd`;
    /// queries accept `|z| ≤ max(z_radius, λ_max)`.
    pub fn new(p: &Potential, sd: &SpectralData, z_radius: f64) -> Result<Self> {
        let table = EigenTable::new(p, sd.s, &sd.eigenvalues, &[], z_radius)?;
        let weight = table.grid().sample(|_| 1.0);
        Ok(KernelTable {
            spectral: sd.clone(),
            table,
            weight,
        })
    }

    pub fn table(&self) -> &EigenTable {
        &self.table
    }

    /// `k_s(z, λ_n)` for every tabulated `n`.
    pub fn kernel_row(&self, z: Complex64) -> Result<Vec<Complex64>> {
        self.table.inner_row(z, &self.weight)
    }
}

impl KernelProvider for KernelTable {
    fn coefficients(&self, z: Complex64, n_max: usize) -> Result<Vec<Complex64>> {
        let sd = &self.spectral;
        sd.require(n_max)?;
        if let Some(row) = collapsed(sd, z, n_max) {
            return Ok(row);
        }
        let row = self.kernel_row(z)?;
        Ok(row[..=n_max]
            .iter()
            .zip(&sd.norming)
            .map(|(k, w)| k / w)
            .collect())
    }
}

/// Truncated series value with the magnitude of its last term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reconstruction {
    pub value: Complex64,
    pub last_term: f64,
}

/// `Σ_{n ≤ N} (f(λ_n) + ε_n) c_n`, summed in ascending `n`.
pub fn series(values: &[Complex64], coefficients: &[Complex64]) -> Result<Reconstruction> {
    if coefficients.len() < values.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            got: coefficients.len(),
        });
    }
    let mut sum = CompensatedSum::new();
    let mut last = 0.0;
    for (v, c) in values.iter().zip(coefficients) {
        let term = v * c;
        last = term.norm();
        sum.add(term);
    }
    Ok(Reconstruction {
        value: sum.value(),
        last_term: last,
    })
}

/// Kramer reconstruction at `z` from `sf`.
pub fn reconstruct(
    sf: &SampledFunction,
    sd: &SpectralData,
    kernel: &dyn KernelProvider,
    z: Complex64,
) -> Result<Reconstruction> {
    sd.require(sf.truncation())?;
    let c = kernel.coefficients(z, sf.truncation())?;
    series(&sf.values(), &c)
}

/// Errors of the truncated reconstruction over a set of points, per truncation.
#[derive(Debug, Clone)]
pub struct ConvergenceProfile {
    pub truncations: Vec<usize>,
    /// `sup_z |f(z) − f_N(z)|`, aligned with `truncations`.
    pub sup_errors: Vec<f64>,
    /// One table per truncation.
    pub tables: Vec<Table>,
}

/// Column layout of every profile table.
pub const PROFILE_COLUMNS: [&str; 7] = [
    "z_re",
    "z_im",
    "f_exact_re",
    "f_exact_im",
    "f_N_re",
    "f_N_im",
    "abs_err",
];

/// Reconstruction error of `sf` against `exact` on `zs` for every `N` in
/// `truncations`. One kernel row per point serves all truncations.
pub fn convergence_profile(
    exact: &DBFunction,
    sf: &SampledFunction,
    sd: &SpectralData,
    kernel: &dyn KernelProvider,
    zs: &[Complex64],
    truncations: &[usize],
) -> Result<ConvergenceProfile> {
    let n_top = truncations.iter().copied().max().unwrap_or(0);
    if n_top > sf.truncation() {
        return Err(Error::InvalidArgument(format!(
            "truncation {n_top} exceeds the {} available samples",
            sf.truncation() + 1
        )));
    }
    sd.require(n_top)?;
    let values = sf.values();
    let rows = zs
        .par_iter()
        .map(|&z| {
            let c = kernel.coefficients(z, n_top)?;
            let f = exact.evaluate(z)?;
            let approx = truncations
                .iter()
                .map(|&n| Ok(series(&values[..=n], &c)?.value))
                .collect::<Result<Vec<_>>>()?;
            Ok((f, approx))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tables = Vec::with_capacity(truncations.len());
    let mut sup_errors = Vec::with_capacity(truncations.len());
    for k in 0..truncations.len() {
        let mut t = Table::new(PROFILE_COLUMNS);
        let mut sup = 0.0_f64;
        for (z, (f, approx)) in zs.iter().zip(&rows) {
            let g = approx[k];
            let err = (f - g).norm();
            sup = sup.max(err);
            t.push(
                [z.re, z.im, f.re, f.im, g.re, g.im, err]
                    .iter()
                    .map(|&x| format_number(x))
                    .collect(),
            );
        }
        tables.push(t);
        sup_errors.push(sup);
    }
    Ok(ConvergenceProfile {
        truncations: truncations.to_vec(),
        sup_errors,
        tables,
    })
}

/// Rectangle `[re_lo, re_hi] × [im_lo, im_hi]i` sampled on an `nr × ni` lattice,
/// real part varying fastest.
pub fn z_grid(re: (f64, f64), im: (f64, f64), nr: usize, ni: usize) -> Result<Vec<Complex64>> {
    if nr < 2 || ni < 1 || !(re.0 < re.1) || (ni > 1 && !(im.0 < im.1)) {
        return Err(Error::InvalidArgument(format!(
            "degenerate z grid {re:?} × {im:?} with {nr} × {ni} points"
        )));
    }
    let at = |lo: f64, hi: f64, k: usize, n: usize| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    Ok((0..ni)
        .flat_map(|j| (0..nr).map(move |i| Complex64::new(at(re.0, re.1, i, nr), at(im.0, im.1, j, ni))))
        .collect())
}
