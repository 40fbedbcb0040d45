//! Oversampling: an `f ∈ B_a` sampled at the spectrum of `H_b(γ)`, `a < b`,
//! and rebuilt with the damped kernel
//! `K̃(z, t) = ∫_0^b ξ(x, z) R(x) ξ(x, t) dx / k_b(t, t)`, where `R` is 1 on
//! `[0, a]` and falls linearly to 0 at `b`. The coefficients decay like
//! `n⁻²`, so bounded sample noise produces a bounded reconstruction error.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{BoundReport, BoundSample};
use crate::error::{Error, Result};
use crate::kernel::{xi_on_grid, DBFunction, EigenTable};
use crate::numerics::{csqrt, derive_seed, sinc, uniform_noise, CompensatedSum, Grid};
use crate::output::SCHEMA_VERSION;
use crate::schrodinger::{tabulate, Potential};
use crate::spectrum::{compute_spectrum_with, SpectralData};
use crate::numerics::Tolerances;

/// Default Cauchy-tail budget for `Σ |K̃(z, λ_n)|`.
pub const CAUCHY_TAIL_TOL: f64 = 1e-3;
/// Largest admissible relative spread of `E(δ)/δ` across noise levels.
pub const RATIO_SPREAD_TOL: f64 = 0.10;

fn check_ab(a: f64, b: f64) -> Result<()> {
    if a > 0.0 && a < b && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("need 0 < a < b, got a = {a}, b = {b}")))
    }
}

/// `R_ab(x)`: 1 on `[0, a]`, `(b − x)/(b − a)` on `(a, b]`.
pub fn weight_r(a: f64, b: f64, x: f64) -> Result<f64> {
    check_ab(a, b)?;
    if !(0.0..=b).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, {b}]")));
    }
    Ok(if x <= a { 1.0 } else { (b - x) / (b - a) })
}

/// `Φ(w) = ∫_0^b cos(w x) R_ab(x) dx = ((a+b)/2)·sinc(w(a+b)/2)·sinc(w(b−a)/2)`.
fn ramp_cosine_transform(a: f64, b: f64, w: Complex64) -> Complex64 {
    let m = 0.5 * (a + b);
    sinc(w * m) * sinc(w * (0.5 * (b - a))) * m
}

/// `∫_0^b cos(√z x) R_ab(x) cos(√t x) dx` in closed form, valid for all
/// complex `z`, `t` including the removable points `z = t`.
pub fn free_weighted_inner(a: f64, b: f64, z: Complex64, t: Complex64) -> Complex64 {
    let (u, v) = (csqrt(z), csqrt(t));
    (ramp_cosine_transform(a, b, u + v) + ramp_cosine_transform(a, b, u - v)) * 0.5
}

/// `⟨cos(√z̄ ·), R_aπ cos(n ·)⟩` in the two-fraction form for `b = π`.
/// Singular at `z = n²`; use [`free_weighted_inner`] there.
pub fn ramp_inner_closed_form(a: f64, n: u32, z: Complex64) -> Complex64 {
    let r = csqrt(z);
    let nf = n as f64;
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let tail = (r * PI).cos() * sign;
    let plus = ((r + nf) * a).cos() - tail;
    let minus = ((r - nf) * a).cos() - tail;
    (plus / ((r + nf) * (r + nf)) + minus / ((r - nf) * (r - nf))) / (2.0 * (PI - a))
}

/// Free-case `K̃(z, t)` with norming `k_b(t, t)`.
pub fn free_kernel_tilde(a: f64, b: f64, z: Complex64, t: f64, norming: f64) -> Complex64 {
    free_weighted_inner(a, b, z, Complex64::new(t, 0.0)) / norming
}

/// `K̃(z, λ_n)` by a dedicated quadrature.
pub fn kernel_tilde_direct(
    p: &Potential,
    a: f64,
    sd: &SpectralData,
    z: Complex64,
    n: usize,
) -> Result<Complex64> {
    sd.require(n)?;
    let b = sd.s;
    check_ab(a, b)?;
    let t = sd.eigenvalues[n];
    let omega = (z.norm().max(t.abs()) + p.max_abs()).sqrt() + 1.0;
    let mut breaks = p.breakpoints();
    breaks.push(a);
    let grid = Grid::for_frequency(0.0, b, omega, &breaks)?;
    let xz = xi_on_grid(p, z, &grid)?;
    let xt = tabulate(p, t, &grid)?.xi;
    let prod: Vec<Complex64> = grid
        .nodes()
        .iter()
        .zip(xz.iter().zip(&xt))
        .map(|(&x, (u, v))| u * (v * if x <= a { 1.0 } else { (b - x) / (b - a) }))
        .collect();
    Ok(grid.integrate_all(&prod) / sd.norming[n])
}

/// Rows keyed by the bit patterns of `z`.
type RowCache = RwLock<HashMap<(u64, u64), Arc<Vec<Complex64>>>>;

/// Spectrum of `H_b(γ)` with eigenfunctions tabulated for repeated `K̃` rows.
#[derive(Debug)]
pub struct OversamplingContext {
    potential: Potential,
    a: f64,
    spectral: SpectralData,
    table: EigenTable,
    ramp: Vec<f64>,
    unit: Vec<f64>,
    cache: RowCache,
}

impl OversamplingContext {
    /// Computes `λ_0 … λ_{n_max}` of `H_b(γ)`. Queries accept
    /// `|z| ≤ max(z_radius, λ_{n_max})`.
    pub fn new(
        p: &Potential,
        a: f64,
        b: f64,
        gamma: f64,
        n_max: usize,
        z_radius: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        check_ab(a, b)?;
        let sd = compute_spectrum_with(p, b, gamma, n_max, tol)?;
        OversamplingContext::from_spectrum(p, a, sd, z_radius)
    }

    pub fn from_spectrum(p: &Potential, a: f64, sd: SpectralData, z_radius: f64) -> Result<Self> {
        let b = sd.s;
        check_ab(a, b)?;
        if (b - PI).abs() > 1e-12 {
            log::warn!("oversampling with b = {b}; the robustness theory is stated for b = π");
        }
        let table = EigenTable::new(p, b, &sd.eigenvalues, &[a], z_radius)?;
        let ramp = table
            .grid()
            .sample(|x| if x <= a { 1.0 } else { (b - x) / (b - a) });
        let unit = table.grid().sample(|_| 1.0);
        Ok(OversamplingContext {
            potential: p.clone(),
            a,
            spectral: sd,
            table,
            ramp,
            unit,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.spectral.s
    }

    pub fn gamma(&self) -> f64 {
        self.spectral.gamma
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn table(&self) -> &EigenTable {
        &self.table
    }

    /// `K̃(z, λ_n)` for every `n` in the context, memoised per `z`.
    pub fn kernel_tilde_row(&self, z: Complex64) -> Result<Arc<Vec<Complex64>>> {
        let key = (z.re.to_bits(), z.im.to_bits());
        if let Some(row) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(row.clone());
        }
        let raw = self.table.inner_row(z, &self.ramp)?;
        let row: Arc<Vec<Complex64>> = Arc::new(
            raw.iter()
                .zip(&self.spectral.norming)
                .map(|(v, k)| v / k)
                .collect(),
        );
        Ok(self
            .cache
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(row)
            .clone())
    }

    pub fn kernel_tilde(&self, z: Complex64, n: usize) -> Result<Complex64> {
        self.spectral.require(n)?;
        Ok(self.kernel_tilde_row(z)?[n])
    }

    /// Plain sampling coefficients `k_b(z, λ_n) / k_b(λ_n, λ_n)`.
    pub fn plain_row(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let raw = self.table.inner_row(z, &self.unit)?;
        Ok(raw
            .iter()
            .zip(&self.spectral.norming)
            .map(|(v, k)| v / k)
            .collect())
    }

    /// `S_N(z) = Σ_{n ≤ N} |K̃(z, λ_n)|`.
    pub fn tilde_abs_sum(&self, z: Complex64, n: usize) -> Result<f64> {
        self.spectral.require(n)?;
        Ok(abs_sum(&self.kernel_tilde_row(z)?[..=n]))
    }

    /// `T_N(z) = Σ_{n ≤ N} |k_b(z, λ_n)| / k_b(λ_n, λ_n)`.
    pub fn plain_abs_sum(&self, z: Complex64, n: usize) -> Result<f64> {
        self.spectral.require(n)?;
        Ok(abs_sum(&self.plain_row(z)?[..=n]))
    }

    /// `f(λ_n)` for `n ≤ n_max`. Requires `f ∈ B_a`.
    pub fn samples(&self, f: &DBFunction, n_max: usize) -> Result<Vec<Complex64>> {
        if f.s() > self.a * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "oversampling needs f ∈ B_{}, got an element of B_{}",
                self.a,
                f.s()
            )));
        }
        self.spectral.require(n_max)?;
        self.spectral.eigenvalues[..=n_max]
            .par_iter()
            .map(|&l| f.evaluate(Complex64::new(l, 0.0)))
            .collect()
    }
}

fn abs_sum(row: &[Complex64]) -> f64 {
    let mut s = CompensatedSum::new();
    for v in row {
        s.add(Complex64::new(v.norm(), 0.0));
    }
    s.value().re
}

/// `f̃(z) = Σ_{n ≤ N} K̃(z, λ_n)(f(λ_n) + ε_n)`.
pub fn oversampled_reconstruct(
    ctx: &OversamplingContext,
    samples: &[Complex64],
    noise: Option<&[f64]>,
    z: Complex64,
    n: usize,
) -> Result<Complex64> {
    if samples.len() < n + 1 {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: samples.len(),
        });
    }
    if let Some(e) = noise {
        if e.len() < n + 1 {
            return Err(Error::LengthMismatch {
                expected: n + 1,
                got: e.len(),
            });
        }
    }
    let row = ctx.kernel_tilde_row(z)?;
    ctx.spectral.require(n)?;
    Ok(tilde_series(&row, samples, noise, n))
}

fn tilde_series(row: &[Complex64], samples: &[Complex64], noise: Option<&[f64]>, n: usize) -> Complex64 {
    let mut s = CompensatedSum::new();
    for k in 0..=n {
        let e = noise.map_or(0.0, |e| e[k]);
        s.add(row[k] * (samples[k] + e));
    }
    s.value()
}

/// Outcome of the noise-robustness experiment.
#[derive(Debug, Clone, Serialize)]
pub struct RobustnessReport {
    pub schema_version: u32,
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub deltas: Vec<f64>,
    /// `Ĉ = sup_K Σ_{n ≤ N} |K̃(z, λ_n)|`.
    #[serde(rename = "empirical_C")]
    pub empirical_c: f64,
    /// `E(δ)/δ` under worst-case-sign noise, aligned with `deltas`.
    pub ratios: Vec<f64>,
    /// `(max − min)/min` of `ratios`.
    pub ratio_spread: f64,
    /// `sup_K |f̃ − f|` with no noise.
    pub floor: f64,
    /// Point `z*` where `Σ |K̃|` peaks: `[re, im]`.
    pub probe: [f64; 2],
    /// `sup_K (S_{2N} − S_N)` when the context holds `2N + 1` eigenvalues.
    pub cauchy_tail: Option<f64>,
    pub random_trials: usize,
    pub seed: u64,
    /// Every trial checked against `E ≤ Ĉ·δ`.
    pub trials: BoundReport,
    pub pass: bool,
}

/// Measures `E(δ) = sup_K |f̃ − f| − floor` for worst-case-sign noise
/// `ε_n = δ·sign K̃(z*, λ_n)` and for `random_trials` seeded uniform draws per
/// `δ`, and checks `E(δ) ≤ Ĉ·δ` for each.
pub fn robustness_report(
    ctx: &OversamplingContext,
    f: &DBFunction,
    deltas: &[f64],
    zs: &[Complex64],
    n: usize,
    seed: u64,
    random_trials: usize,
) -> Result<RobustnessReport> {
    let started = std::time::Instant::now();
    if zs.is_empty() || deltas.is_empty() {
        return Err(Error::InvalidArgument("need at least one z and one δ".into()));
    }
    if deltas.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidArgument("noise levels must be positive".into()));
    }
    let samples = ctx.samples(f, n)?;
    let rows = zs
        .par_iter()
        .map(|&z| Ok((ctx.kernel_tilde_row(z)?, f.evaluate(z)?)))
        .collect::<Result<Vec<_>>>()?;
    let clean: Vec<Complex64> = rows
        .iter()
        .map(|(row, fz)| tilde_series(row, &samples, None, n) - fz)
        .collect();
    let floor = clean.iter().map(|e| e.norm()).fold(0.0, f64::max);

    let sums: Vec<f64> = rows.iter().map(|(row, _)| abs_sum(&row[..=n])).collect();
    let (star, c_hat) = sums
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(i, m), (j, &s)| if s > m { (j, s) } else { (i, m) });
    let cauchy_tail = if ctx.spectral.len() > 2 * n {
        Some(
            rows.iter()
                .map(|(row, _)| abs_sum(&row[n + 1..=2 * n]))
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    let signs: Vec<f64> = rows[star].0[..=n]
        .iter()
        .map(|k| if k.re >= 0.0 { 1.0 } else { -1.0 })
        .collect();

    let noise_error = |eps: &[f64]| -> f64 {
        rows.iter()
            .zip(&clean)
            .map(|((row, _), c)| {
                let mut s = CompensatedSum::new();
                for k in 0..=n {
                    s.add(row[k] * eps[k]);
                }
                (c + s.value()).norm()
            })
            .fold(0.0, f64::max)
            - floor
    };

    let mut ratios = Vec::with_capacity(deltas.len());
    let mut checks = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        let eps: Vec<f64> = signs.iter().map(|s| s * delta).collect();
        let e = noise_error(&eps);
        ratios.push(e / delta);
        checks.push(BoundSample::new(
            format!("delta={delta:e} worst-case"),
            e,
            c_hat * delta,
        ));
        for trial in 0..random_trials {
            let stream = (i * random_trials + trial) as u64;
            let eps = uniform_noise(derive_seed(seed, stream), n + 1, delta).values;
            let e = noise_error(&eps);
            checks.push(BoundSample::new(
                format!("delta={delta:e} trial={trial}"),
                e,
                c_hat * delta,
            ));
        }
    }
    let trials = BoundReport::ratio_check("noise error within C*delta", checks, 1.0 + 1e-12)
        .with_runtime(started.elapsed().as_secs_f64());
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio_spread = (hi - lo) / lo;
    let tail_ok = cauchy_tail.map_or(true, |t| t <= CAUCHY_TAIL_TOL);
    let pass = trials.pass && ratio_spread < RATIO_SPREAD_TOL && c_hat.is_finite() && tail_ok;
    Ok(RobustnessReport {
        schema_version: SCHEMA_VERSION,
        a: ctx.a,
        b: ctx.b(),
        gamma: ctx.gamma(),
        n,
        deltas: deltas.to_vec(),
        empirical_c: c_hat,
        ratios,
        ratio_spread,
        floor,
        probe: [zs[star].re, zs[star].im],
        cauchy_tail,
        random_trials,
        seed,
        trials,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::free_spectrum;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weight_values() {
        let (a, b) = (FRAC_PI_2, PI);
        assert_eq!(weight_r(a, b, a / 2.0).unwrap(), 1.0);
        assert_eq!(weight_r(a, b, b).unwrap(), 0.0);
        assert!((weight_r(a, b, 0.5 * (a + b)).unwrap() - 0.5).abs() < 1e-15);
        assert!(weight_r(a, b, 4.0).is_err());
        assert!(weight_r(b, a, 1.0).is_err());
    }

    #[test]
    fn closed_forms_agree_off_the_diagonal() {
        for a in [0.4, FRAC_PI_2, 2.9] {
            for n in 0..6u32 {
                for z in [c(2.0, 0.0), c(3.0, 1.0), c(-4.0, 0.3), c(30.5, -2.0)] {
                    let u = ramp_inner_closed_form(a, n, z);
                    let v = free_weighted_inner(a, PI, z, c((n * n) as f64, 0.0));
                    assert!((u - v).norm() < 1e-12, "a={a} n={n} z={z}: {u} vs {v}");
                }
            }
        }
    }

    #[test]
    fn weighted_inner_matches_quadrature() {
        let p = Potential::zero(PI);
        let sd = free_spectrum(8);
        let a = 1.1;
        for n in [0, 3, 8] {
            for z in [c(5.0, 2.0), c(9.0, 0.0), c(0.0, 0.0)] {
                let q = kernel_tilde_direct(&p, a, &sd, z, n).unwrap();
                let f = free_kernel_tilde(a, PI, z, sd.eigenvalues[n], sd.norming[n]);
                assert!((q - f).norm() < 1e-12, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn context_rows_match_direct_quadrature() {
        let p = Potential::cosine_preset(PI);
        let ctx = OversamplingContext::new(&p, FRAC_PI_2, PI, FRAC_PI_2, 10, 40.0, &Tolerances::default())
            .unwrap();
        let z = c(13.0, -0.7);
        let row = ctx.kernel_tilde_row(z).unwrap();
        for n in [0, 4, 10] {
            let d = kernel_tilde_direct(&p, FRAC_PI_2, ctx.spectral(), z, n).unwrap();
            assert!((row[n] - d).norm() < 1e-11);
        }
        assert!(Arc::ptr_eq(&row, &ctx.kernel_tilde_row(z).unwrap()));
    }

    #[test]
    fn noise_enters_linearly() {
        let p = Potential::zero(PI);
        let ctx = OversamplingContext::from_spectrum(&p, FRAC_PI_2, free_spectrum(30), 25.0).unwrap();
        let f = DBFunction::from_fn(&p, FRAC_PI_2, &[], |x| c(x.cos(), 0.0)).unwrap();
        let s = ctx.samples(&f, 30).unwrap();
        let eps = uniform_noise(3, 31, 0.1).values;
        let z = c(4.0, 0.5);
        let clean = oversampled_reconstruct(&ctx, &s, None, z, 30).unwrap();
        let noisy = oversampled_reconstruct(&ctx, &s, Some(&eps), z, 30).unwrap();
        let row = ctx.kernel_tilde_row(z).unwrap();
        let direct: Complex64 = eps.iter().zip(row.iter()).map(|(e, k)| k * *e).sum();
        assert!((noisy - clean - direct).norm() < 1e-13);
        let big = DBFunction::from_fn(&p, PI, &[], |_| c(1.0, 0.0)).unwrap();
        assert!(ctx.samples(&big, 5).is_err());
    }
}
