//! Auxiliary functions
//!
//! ```text
//! ρ(x)    = ½∫_0^x V − (x/2π)∫_0^π V
//! T(x, n) = ξ(x, λ_n) − cos(nx) − (ρ(x)/n) sin(nx)
//! F(x, z) = ξ(x, z) − cos(√z x)
//! ```
//!
//! and numerical audits of the asymptotic statements built from them. An
//! `O(n^{-p})` claim is audited through the normalised sequence
//! `r_n = n^p·|left side| / envelope`: it passes when its maximum over the
//! upper half of the index range is at most twice its maximum over
//! `[10, n_max/2]`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{kernel_free, EigenTable};
use crate::numerics::{csqrt, Grid};
use crate::output::Table;
use crate::oversampling::ramp_inner_closed_form;
use crate::schrodinger::{xi_at, xi_at_real, Potential};
use crate::spectrum::{compute_spectrum, SpectralData};

/// Allowed growth of a normalised sequence from the lower to the upper range.
pub const BOUNDEDNESS_FACTOR: f64 = 2.0;
/// Sequences whose upper-range maximum stays below this count as zero.
pub const BOUNDEDNESS_FLOOR: f64 = 1e-8;
/// First index of the lower range.
pub const FIRST_AUDITED_INDEX: usize = 10;
/// Budget for exact identities checked by quadrature.
pub const IDENTITY_TOL: f64 = 1e-10;

/// One audited data point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundSample {
    pub input: String,
    pub measured: f64,
    pub reference: f64,
}

impl BoundSample {
    pub fn new(input: impl Into<String>, measured: f64, reference: f64) -> Self {
        BoundSample {
            input: input.into(),
            measured,
            reference,
        }
    }
}

/// A verified inequality. `pass` holds exactly when `worst_ratio ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub samples: Vec<BoundSample>,
    pub worst_ratio: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Wall-clock seconds; excluded from serialised output.
    #[serde(skip)]
    pub runtime: f64,
}

impl BoundReport {
    /// `worst_ratio = max measured/reference`; a zero reference admits only a zero measurement.
    pub fn ratio_check(name: impl Into<String>, samples: Vec<BoundSample>, threshold: f64) -> Self {
        let worst = samples
            .iter()
            .map(|s| {
                if s.reference > 0.0 {
                    s.measured / s.reference
                } else if s.measured <= 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, |m: f64, r| if r.is_nan() { f64::NAN } else { m.max(r) });
        BoundReport {
            name: name.into(),
            samples,
            worst_ratio: worst,
            threshold,
            pass: worst <= threshold,
            runtime: 0.0,
        }
    }

    /// Boundedness audit of `(n, r_n)`. Every sample's reference is the
    /// lower-range maximum.
    pub fn boundedness(name: impl Into<String>, sequence: &[(usize, f64)]) -> Result<Self> {
        let n_max = sequence.iter().map(|(n, _)| *n).max().unwrap_or(0);
        let split = n_max / 2;
        if split < FIRST_AUDITED_INDEX + 1 {
            return Err(Error::InvalidArgument(format!(
                "boundedness audits need indices up to at least {}",
                2 * (FIRST_AUDITED_INDEX + 1)
            )));
        }
        let max_over = |lo: usize, hi: usize| {
            sequence
                .iter()
                .filter(|(n, _)| (lo..=hi).contains(n))
                .map(|(_, r)| *r)
                .fold(0.0, |m: f64, r| if r.is_nan() { f64::NAN } else { m.max(r) })
        };
        let low = max_over(FIRST_AUDITED_INDEX, split);
        let high = max_over(split + 1, n_max);
        let worst = high / low.max(BOUNDEDNESS_FLOOR);
        Ok(BoundReport {
            name: name.into(),
            samples: sequence
                .iter()
                .map(|&(n, r)| BoundSample::new(format!("n={n}"), r, low))
                .collect(),
            worst_ratio: worst,
            threshold: BOUNDEDNESS_FACTOR,
            pass: worst <= BOUNDEDNESS_FACTOR,
            runtime: 0.0,
        })
    }

    pub fn with_runtime(mut self, seconds: f64) -> Self {
        self.runtime = seconds;
        self
    }
}

/// All samples of all reports as rows `audit, input, measured, reference`.
pub fn sequences_table(reports: &[BoundReport]) -> Table {
    let mut t = Table::new(["audit", "input", "measured", "reference"]);
    for r in reports {
        for s in &r.samples {
            t.push(vec![
                r.name.clone(),
                s.input.clone(),
                crate::output::format_number(s.measured),
                crate::output::format_number(s.reference),
            ]);
        }
    }
    t
}

fn check_pi_extent(p: &Potential) -> Result<()> {
    if p.s_max() < PI * (1.0 - 1e-12) {
        Err(Error::InvalidArgument(format!(
            "the auxiliary functions need V on [0, π], the potential stops at {}",
            p.s_max()
        )))
    } else {
        Ok(())
    }
}

/// `ρ(x)` for `x ∈ [0, π]`; vanishes at both ends.
pub fn aux_rho(p: &Potential, x: f64) -> Result<f64> {
    check_pi_extent(p)?;
    if !(0.0..=PI).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, π]")));
    }
    Ok(0.5 * p.integral(0.0, x) - x / (2.0 * PI) * p.integral(0.0, PI))
}

/// `T(x, n)` for `n ≥ 1`, with `λ_n` taken from `sd`.
pub fn aux_t(p: &Potential, sd: &SpectralData, x: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("T(x, n) needs n ≥ 1".into()));
    }
    sd.require(n)?;
    let nf = n as f64;
    let (xi, _) = xi_at_real(p, sd.eigenvalues[n], x)?;
    Ok(xi - (nf * x).cos() - aux_rho(p, x)? / nf * (nf * x).sin())
}

/// `F(x, z)`; zero at `x = 0`.
pub fn aux_f(p: &Potential, x: f64, z: Complex64) -> Result<Complex64> {
    let (xi, _) = xi_at(p, z, x)?;
    Ok(xi - (csqrt(z) * x).cos())
}

/// Default probe set: 25 real parts evenly spread over `[−1, 30]`, each at
/// imaginary parts `0` and `±0.5`.
pub fn default_probes() -> Vec<Complex64> {
    let mut out = Vec::with_capacity(75);
    for im in [0.0, 0.5, -0.5] {
        for k in 0..25 {
            out.push(Complex64::new(-1.0 + 31.0 * k as f64 / 24.0, im));
        }
    }
    out
}

/// `e^{π|Im √z|}`.
fn growth_pi(z: Complex64) -> f64 {
    (PI * csqrt(z).im.abs()).exp()
}

fn factor_full(z: Complex64) -> f64 {
    1.0 + (1.0 + z.norm()) / (1.0 + PI * z.norm().sqrt())
}

fn factor_linear(z: Complex64) -> f64 {
    1.0 + z.norm() / (1.0 + PI * z.norm().sqrt())
}

fn factor_small(z: Complex64) -> f64 {
    1.0 + 1.0 / (1.0 + PI * z.norm().sqrt())
}

/// Configuration of [`audit_suite`].
#[derive(Debug, Clone)]
pub struct AuditConfig {
    /// Largest audited index; at least 22.
    pub n_max: usize,
    /// Probe points for the `z`-dependent estimates.
    pub probes: Vec<Complex64>,
    /// Ramp start for the weighted estimates, in `(0, π)`.
    pub a: f64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            n_max: 60,
            probes: default_probes(),
            a: FRAC_PI_2,
        }
    }
}

/// Weighted sums on the nodes of one grid.
struct Quadrature<'a> {
    grid: &'a Grid,
}

impl Quadrature<'_> {
    /// Weights restricted to `[lo, hi]`; both must be panel edges.
    fn mask(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.grid
            .nodes()
            .iter()
            .zip(self.grid.weights())
            .map(|(&x, &w)| if x > lo && x < hi { w } else { 0.0 })
            .collect()
    }
}

fn dot(w: &[f64], u: impl Iterator<Item = Complex64>) -> Complex64 {
    w.iter()
        .zip(u)
        .fold(Complex64::new(0.0, 0.0), |acc, (w, v)| acc + v * *w)
}

/// Runs every audit for `γ = π/2`, `s = π`. The eigenfunction bound on
/// `[0, b]` uses `b = s_max` of the potential.
pub fn audit_suite(p: &Potential, cfg: &AuditConfig) -> Result<Vec<BoundReport>> {
    check_pi_extent(p)?;
    let a = cfg.a;
    if !(a > 0.0 && a < PI) {
        return Err(Error::InvalidArgument(format!("ramp start {a} outside (0, π)")));
    }
    if cfg.probes.is_empty() {
        return Err(Error::InvalidArgument("empty probe set".into()));
    }
    let n_max = cfg.n_max;
    let started = Instant::now();
    let sd = compute_spectrum(p, PI, FRAC_PI_2, n_max)?;
    let b = p.s_max();
    let z_radius = cfg.probes.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let mut breaks = vec![a];
    if b > PI * (1.0 + 1e-12) {
        breaks.push(PI);
    }
    let table = EigenTable::new(p, b, &sd.eigenvalues, &breaks, z_radius)?;
    let grid = table.grid().as_ref();
    let nodes = grid.nodes();
    let q = Quadrature { grid };
    let w_pi = q.mask(0.0, PI);
    let w_a = q.mask(0.0, a);
    let w_tail = q.mask(a, PI);
    let rho: Vec<f64> = nodes
        .iter()
        .map(|&x| if x <= PI { aux_rho(p, x) } else { Ok(0.0) })
        .collect::<Result<_>>()?;
    let ramp: Vec<f64> = nodes
        .iter()
        .map(|&x| if x <= a { 1.0 } else { ((PI - x) / (PI - a)).max(0.0) })
        .collect();
    let setup = started.elapsed().as_secs_f64();

    let mut reports = Vec::new();
    let timed = |f: &dyn Fn() -> Result<BoundReport>| -> Result<BoundReport> {
        let t = Instant::now();
        Ok(f()?.with_runtime(t.elapsed().as_secs_f64() + setup))
    };

    let indices: Vec<usize> = (1..=n_max).collect();
    reports.push(timed(&|| {
        let seq: Vec<(usize, f64)> = indices
            .iter()
            .map(|&n| (n, n as f64 * (sd.eigenvalues[n].sqrt() - n as f64).abs()))
            .collect();
        BoundReport::boundedness("eigenvalue asymptotics n|sqrt(lambda_n) - n|", &seq)
    })?);
    reports.push(timed(&|| {
        let seq: Vec<(usize, f64)> = indices
            .par_iter()
            .map(|&n| {
                let nf = n as f64;
                let e = table.eigenfunction(n);
                let sup = nodes
                    .iter()
                    .enumerate()
                    .filter(|(_, &x)| x <= PI)
                    .map(|(i, &x)| (e[i] - (nf * x).cos() - rho[i] / nf * (nf * x).sin()).abs())
                    .fold(0.0, f64::max);
                (n, nf * nf * sup)
            })
            .collect();
        BoundReport::boundedness("eigenfunction remainder n^2 sup|T(x,n)|", &seq)
    })?);
    reports.push(timed(&|| {
        let seq: Vec<(usize, f64)> = indices
            .iter()
            .map(|&n| ((n), (n * n) as f64 * (sd.norming[n] - FRAC_PI_2).abs()))
            .collect();
        BoundReport::boundedness("norming asymptotics n^2|k(lambda_n,lambda_n) - pi/2|", &seq)
    })?);
    reports.push(timed(&|| {
        let seq: Vec<(usize, f64)> = indices
            .iter()
            .map(|&n| (n, (n * n) as f64 * (1.0 / sd.norming[n] - 2.0 / PI).abs()))
            .collect();
        BoundReport::boundedness("inverse norming n^2|1/k(lambda_n,lambda_n) - 2/pi|", &seq)
    })?);
    reports.push(timed(&|| ramp_identity_report(&cfg.probes))?);

    // z-dependent estimates: one tabulation of ξ(·, z) per probe.
    let per_probe = cfg
        .probes
        .par_iter()
        .map(|&z| {
            let xi = table.tabulate(z)?;
            let r = csqrt(z);
            let cz: Vec<Complex64> = nodes.iter().map(|&x| (r * x).cos()).collect();
            let f: Vec<Complex64> = xi.iter().zip(&cz).map(|(u, v)| u - v).collect();
            let env = growth_pi(z);
            let rows: Vec<[f64; 8]> = indices
                .iter()
                .map(|&n| {
                    let nf = n as f64;
                    let e = table.eigenfunction(n);
                    let cos_n = || nodes.iter().map(move |&x| (nf * x).cos());
                    let sin_n = || nodes.iter().map(move |&x| (nf * x).sin());
                    let int1 = dot(&w_pi, f.iter().zip(cos_n()).map(|(u, c)| u * c));
                    let int2 = dot(&w_a, cz.iter().zip(sin_n()).zip(&rho).map(|((u, s), r)| u * (s * r)));
                    let int3 = dot(&w_a, f.iter().zip(sin_n()).zip(&rho).map(|((u, s), r)| u * (s * r)));
                    let a6 = dot(&w_pi, f.iter().zip(cos_n()).zip(&ramp).map(|((u, c), w)| u * (c * w)));
                    let a7a = dot(
                        &w_tail,
                        cz.iter().zip(sin_n()).zip(&rho).zip(&ramp).map(|(((u, s), r), w)| u * (s * r * w)),
                    );
                    let a7b = dot(
                        &w_tail,
                        f.iter().zip(sin_n()).zip(&rho).zip(&ramp).map(|(((u, s), r), w)| u * (s * r * w)),
                    );
                    let weighted = dot(&w_pi, xi.iter().zip(e).zip(&ramp).map(|((u, v), w)| u * (v * w)));
                    let weighted_free =
                        dot(&w_pi, cz.iter().zip(cos_n()).zip(&ramp).map(|((u, c), w)| u * (c * w)));
                    let k = dot(&w_pi, xi.iter().zip(e).map(|(u, v)| u * *v));
                    let k_free = kernel_free(PI, Complex64::new(nf * nf, 0.0), z.conj());
                    let n2 = nf * nf;
                    [
                        n2 * int1.norm() / (env * factor_full(z)),
                        nf * int2.norm() / (env * factor_linear(z)),
                        nf * int3.norm() / (env * factor_small(z)),
                        n2 * a6.norm() / (env * factor_full(z)),
                        nf * a7a.norm() / (env * factor_linear(z)),
                        nf * a7b.norm() / (env * factor_small(z)),
                        n2 * (weighted - weighted_free).norm() / (env * factor_full(z)),
                        n2 * (k - k_free).norm() / (env * factor_full(z)),
                    ]
                })
                .collect();
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let names = [
        "F cosine integral n^2|int_0^pi F cos(nx)| / envelope",
        "rho cosine integral n|int_0^a rho cos(sqrt(z)x) sin(nx)| / envelope",
        "rho F integral n|int_0^a rho F sin(nx)| / envelope",
        "weighted F integral n^2|int_0^pi F R cos(nx)| / envelope",
        "ramp tail cosine integral n|int_a^pi cos(sqrt(z)x) R rho sin(nx)| / envelope",
        "ramp tail F integral n|int_a^pi F R rho sin(nx)| / envelope",
        "weighted inner product n^2|<xi(z),R xi(lambda_n)> - <cos,R cos(n.)>| / envelope",
        "kernel comparison n^2|k(lambda_n,conj z) - k_free(n^2,conj z)| / envelope",
    ];
    for (j, name) in names.iter().enumerate() {
        let seq: Vec<(usize, f64)> = indices
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, per_probe.iter().map(|rows| rows[i][j]).fold(0.0, f64::max)))
            .collect();
        reports.push(BoundReport::boundedness(*name, &seq)?.with_runtime(started.elapsed().as_secs_f64()));
    }

    reports.push(timed(&|| {
        let seq: Vec<(usize, f64)> = indices
            .par_iter()
            .map(|&n| {
                let nf = n as f64;
                let e = table.eigenfunction(n);
                let sup = nodes
                    .iter()
                    .zip(e)
                    .map(|(&x, v)| (v - (nf * x).cos()).abs())
                    .fold(0.0, f64::max);
                (n, nf * sup)
            })
            .collect();
        BoundReport::boundedness("eigenfunction comparison n sup_[0,b]|xi(x,lambda_n) - cos(nx)|", &seq)
    })?);
    Ok(reports)
}

/// Closed-form `⟨cos(√z̄ ·), R_aπ cos(n ·)⟩` against quadrature over ramps
/// `a ∈ {π/4, π/2, 3π/4}` and `n ∈ {0, 1, 2, 5, 9}`, on probes away from `n²`.
fn ramp_identity_report(probes: &[Complex64]) -> Result<BoundReport> {
    let mut samples = Vec::new();
    for a in [0.25 * PI, 0.5 * PI, 0.75 * PI] {
        for n in [0u32, 1, 2, 5, 9] {
            for &z in probes.iter().step_by(5) {
                if (z - (n * n) as f64).norm() < 1e-3 {
                    continue;
                }
                let closed = ramp_inner_closed_form(a, n, z);
                let quad = ramp_inner_quadrature(a, n, z)?;
                samples.push(BoundSample::new(
                    format!("a={a:.6} n={n} z={z}"),
                    (closed - quad).norm(),
                    IDENTITY_TOL,
                ));
            }
        }
    }
    Ok(BoundReport::ratio_check("ramp inner product closed form", samples, 1.0))
}

/// `∫_0^π cos(√z x) R_aπ(x) cos(n x) dx` by composite Gauss quadrature.
pub fn ramp_inner_quadrature(a: f64, n: u32, z: Complex64) -> Result<Complex64> {
    let r = csqrt(z);
    let grid = Grid::for_frequency(0.0, PI, r.norm() + n as f64 + 1.0, &[a])?;
    let v = grid.sample(|x| {
        let w = if x <= a { 1.0 } else { (PI - x) / (PI - a) };
        (r * x).cos() * (w * (n as f64 * x).cos())
    });
    Ok(grid.integrate_all(&v))
}
