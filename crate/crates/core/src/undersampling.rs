//! Undersampling: a `g ∈ B_b` sampled only at the spectrum of `H_a(γ)`,
//! `a < b`. The aliased reconstruction
//! `ĝ(z) = Σ_n c_n(z) g(λ_n)`, `c_n(z) = k_a(λ_n, z̄)/k_a(λ_n, λ_n)`,
//! equals `∫_0^b ξ^ext(x, z) ψ(x) dx` where
//! `ξ^ext(x, z) = Σ_n c_n(z) ξ(x, λ_n)` agrees with `ξ(·, z)` on `[0, a]`.
//! Hence `|g(z) − ĝ(z)| ≤ h_a(z) ∫_a^b |ψ|` with
//! `h_a(z) = sup_{x ∈ [a, b]} |ξ^ext(x, z) − ξ(x, z)|`.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::diagnostics::{BoundReport, BoundSample};
use crate::error::{Error, Result};
use crate::kernel::{kernel_k, DBFunction, EigenTable};
use crate::numerics::{CompensatedSum, Tolerances};
use crate::output::SCHEMA_VERSION;
use crate::schrodinger::{xi_at_real, Potential};
use crate::spectrum::{compute_spectrum_with, SpectralData};

/// Uniform points on `[a, b]` scanned by [`ExtensionField::h_sup`].
pub const H_SCAN_POINTS: usize = 2048;
/// Golden-section steps around the discrete maximiser.
const GOLDEN_STEPS: usize = 60;
/// Absolute slack of the pointwise aliasing bound, relative to `1 + |g(z)|`.
pub const ALIASING_SLACK: f64 = 1e-9;

fn key(z: Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

type Row = Arc<Vec<Complex64>>;

/// `sup_{x∈[a,b]} |ξ^ext(x, z) − ξ(x, z)|` and where it is attained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HSup {
    pub value: f64,
    pub argmax: f64,
}

/// Truncated `ξ^ext` for one spectrum of `H_a(γ)`, tabulated on `[0, b]`.
#[derive(Debug)]
pub struct ExtensionField {
    potential: Potential,
    b: f64,
    spectral: SpectralData,
    n: usize,
    table: EigenTable,
    inside: Vec<f64>,
    scan_points: usize,
    coefficients: RwLock<HashMap<(u64, u64), Row>>,
    h: RwLock<HashMap<(u64, u64), HSup>>,
}

impl ExtensionField {
    /// Computes `λ_0 … λ_n` of `H_a(γ)` and tabulates their eigenfunctions
    /// on `[0, b]`.
    pub fn new(
        p: &Potential,
        a: f64,
        b: f64,
        gamma: f64,
        n: usize,
        z_radius: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let sd = compute_spectrum_with(p, a, gamma, n, tol)?;
        ExtensionField::from_spectrum(p, b, sd, n, z_radius)
    }

    pub fn from_spectrum(p: &Potential, b: f64, sd: SpectralData, n: usize, z_radius: f64) -> Result<Self> {
        let a = sd.s;
        if !(a > 0.0 && a < b) || b > p.s_max() * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "need 0 < a < b ≤ {}, got a = {a}, b = {b}",
                p.s_max()
            )));
        }
        sd.require(n)?;
        let sd = sd.truncated(n)?;
        let table = EigenTable::new(p, b, &sd.eigenvalues, &[a], z_radius)?;
        let inside = table.indicator(a)?;
        Ok(ExtensionField {
            potential: p.clone(),
            b,
            spectral: sd,
            n,
            table,
            inside,
            scan_points: H_SCAN_POINTS,
            coefficients: RwLock::new(HashMap::new()),
            h: RwLock::new(HashMap::new()),
        })
    }

    /// Replaces the number of uniform scan points used by [`Self::h_sup`].
    pub fn with_scan_points(mut self, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::InvalidArgument("need at least two scan points".into()));
        }
        self.scan_points = points;
        self.h = RwLock::new(HashMap::new());
        Ok(self)
    }

    pub fn a(&self) -> f64 {
        self.spectral.s
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    pub fn table(&self) -> &EigenTable {
        &self.table
    }

    pub fn scan_points(&self) -> usize {
        self.scan_points
    }

    /// `c_n(z)` for `n ≤ N`. At `z = λ_m` the row is the unit vector `e_m`.
    pub fn coefficients(&self, z: Complex64) -> Result<Arc<Vec<Complex64>>> {
        if let Some(c) = self.coefficients.read().expect("cache lock").get(&key(z)) {
            return Ok(c.clone());
        }
        let row = if let Some(m) = self.spectral_index(z) {
            let mut e = vec![Complex64::new(0.0, 0.0); self.n + 1];
            e[m] = Complex64::new(1.0, 0.0);
            e
        } else {
            self.table
                .inner_row(z, &self.inside)?
                .iter()
                .zip(&self.spectral.norming)
                .map(|(v, k)| v / k)
                .collect()
        };
        Ok(self
            .coefficients
            .write()
            .expect("cache lock")
            .entry(key(z))
            .or_insert_with(|| Arc::new(row))
            .clone())
    }

    fn spectral_index(&self, z: Complex64) -> Option<usize> {
        if z.im != 0.0 {
            return None;
        }
        self.spectral.eigenvalues.iter().position(|&l| l == z.re)
    }

    /// `ξ^ext(x, z)`.
    pub fn xi_ext(&self, x: f64, z: Complex64) -> Result<Complex64> {
        let c = self.coefficients(z)?;
        let mut s = CompensatedSum::new();
        for (n, cn) in c.iter().enumerate() {
            s.add(cn * self.table.eigenfunction_at(n, x)?);
        }
        Ok(s.value())
    }

    /// `ξ^ext(·, z) − ξ(·, z)` at the table nodes.
    pub fn difference_nodes(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let c = self.coefficients(z)?;
        let mut d: Vec<Complex64> = self.table.tabulate(z)?.iter().map(|v| -v).collect();
        for (n, cn) in c.iter().enumerate() {
            if *cn == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (di, e) in d.iter_mut().zip(self.table.eigenfunction(n)) {
                *di += cn * e;
            }
        }
        Ok(d)
    }

    /// `h_a(z)`: uniform scan of `[a, b]`, then golden-section refinement
    /// between the neighbours of the discrete maximiser.
    pub fn h_sup(&self, z: Complex64) -> Result<HSup> {
        if let Some(h) = self.h.read().expect("cache lock").get(&key(z)) {
            return Ok(*h);
        }
        let d = self.difference_nodes(z)?;
        let grid = self.table.grid();
        let (a, b) = (self.a(), self.b);
        let m = self.scan_points;
        let at = |x: f64| -> Result<f64> { Ok(grid.interpolate(&d, x)?.norm()) };
        let xs: Vec<f64> = (0..m).map(|k| a + (b - a) * k as f64 / (m - 1) as f64).collect();
        let vals = xs.iter().map(|&x| at(x)).collect::<Result<Vec<_>>>()?;
        let (k, mut best) = vals
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(i, v), (j, &w)| if w > v { (j, w) } else { (i, v) });
        let mut argmax = xs[k];
        let (mut lo, mut hi) = (xs[k.saturating_sub(1)], xs[(k + 1).min(m - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let (mut f1, mut f2) = (at(x1)?, at(x2)?);
        for _ in 0..GOLDEN_STEPS {
            if f1 > f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = at(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = at(x2)?;
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > best {
                best = f;
                argmax = x;
            }
        }
        let h = HSup { value: best, argmax };
        self.h.write().expect("cache lock").insert(key(z), h);
        Ok(h)
    }

    /// `Σ_{n ≤ k} |c_n(z)|·sup_{x∈[0,b]} |ξ(x, λ_n)|` for every `k ≤ N`.
    pub fn absolute_partial_sums(&self, z: Complex64) -> Result<Vec<f64>> {
        let c = self.coefficients(z)?;
        let mut acc = 0.0;
        Ok(c.iter()
            .enumerate()
            .map(|(n, cn)| {
                // ξ(0, λ) = 1 seeds the sup.
                let sup = self
                    .table
                    .eigenfunction(n)
                    .iter()
                    .fold(1.0_f64, |m, v| m.max(v.abs()));
                acc += cn.norm() * sup;
                acc
            })
            .collect())
    }

    /// `g(λ_n)` for `n ≤ N`.
    pub fn samples(&self, g: &DBFunction) -> Result<Vec<Complex64>> {
        if g.s() > self.b * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "aliasing bound needs g ∈ B_{}, got B_{}",
                self.b,
                g.s()
            )));
        }
        self.spectral
            .eigenvalues
            .par_iter()
            .map(|&l| g.evaluate(Complex64::new(l, 0.0)))
            .collect()
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }
}

/// `ξ^ext(x, z)` with `N + 1` terms by direct quadrature, without tables.
pub fn xi_ext(
    p: &Potential,
    sd_a: &SpectralData,
    x: f64,
    z: Complex64,
    n: usize,
) -> Result<Complex64> {
    sd_a.require(n)?;
    if !(0.0..=p.s_max()).contains(&x) {
        return Err(Error::InvalidArgument(format!("x = {x} outside [0, {}]", p.s_max())));
    }
    let terms = (0..=n)
        .into_par_iter()
        .map(|k| {
            let l = sd_a.eigenvalues[k];
            if z.im == 0.0 && z.re == l {
                return Ok(Complex64::from(xi_at_real(p, l, x)?.0));
            }
            let c = kernel_k(p, sd_a.s, Complex64::new(l, 0.0), z.conj())? / sd_a.norming[k];
            Ok(c * xi_at_real(p, l, x)?.0)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(m) = (z.im == 0.0)
        .then(|| sd_a.eigenvalues[..=n].iter().position(|&l| l == z.re))
        .flatten()
    {
        return Ok(terms[m]);
    }
    let mut s = CompensatedSum::new();
    for t in terms {
        s.add(t);
    }
    Ok(s.value())
}

/// `ĝ(z) = Σ_{n ≤ N} c_n(z) g(λ_n)`.
pub fn undersampled_reconstruct(ext: &ExtensionField, samples: &[Complex64], z: Complex64) -> Result<Complex64> {
    if samples.len() < ext.n + 1 {
        return Err(Error::LengthMismatch {
            expected: ext.n + 1,
            got: samples.len(),
        });
    }
    let c = ext.coefficients(z)?;
    let mut s = CompensatedSum::new();
    for (cn, g) in c.iter().zip(samples) {
        s.add(cn * g);
    }
    Ok(s.value())
}

/// Pointwise check of `|g − ĝ| ≤ h_a·∫_a^b |ψ|` over a set of points.
#[derive(Debug, Clone, Serialize)]
pub struct AliasingReport {
    pub schema_version: u32,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// `∫_a^b |ψ|`.
    pub int_psi_tail: f64,
    /// `D̂ = sup_K h_a(z)`.
    pub sup_h: f64,
    /// `max_K (|g − ĝ| − h_a ∫_a^b |ψ|)`; non-positive means the bound holds.
    pub max_violation: f64,
    pub scan_points: usize,
    pub quadrature_nodes: usize,
    pub z_points: usize,
    pub bound: BoundReport,
    pub pass: bool,
}

/// `ψ ∈ L₂(0, b)` is given through `g`; the bound is checked at every `z`
/// with slack `1e−9·(1 + |g(z)|)`.
pub fn aliasing_report(ext: &ExtensionField, g: &DBFunction, zs: &[Complex64]) -> Result<AliasingReport> {
    let started = std::time::Instant::now();
    if (g.s() - ext.b).abs() > 1e-12 * ext.b {
        return Err(Error::InvalidArgument(format!(
            "ψ must span [0, {}], got [0, {}]",
            ext.b,
            g.s()
        )));
    }
    let grid = g.grid();
    let abs_psi: Vec<f64> = g.phi().iter().map(|v| v.norm()).collect();
    let tail = grid.integrate(&abs_psi, ext.a(), ext.b)?;
    let samples = ext.samples(g)?;
    let rows = zs
        .par_iter()
        .map(|&z| {
            let h = ext.h_sup(z)?;
            let exact = g.evaluate(z)?;
            let approx = undersampled_reconstruct(ext, &samples, z)?;
            Ok((z, h, exact, approx))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut checks = Vec::with_capacity(rows.len());
    let mut sup_h = 0.0_f64;
    let mut violation = f64::NEG_INFINITY;
    for (z, h, exact, approx) in &rows {
        let err = (exact - approx).norm();
        let bound = h.value * tail;
        sup_h = sup_h.max(h.value);
        violation = violation.max(err - bound);
        checks.push(BoundSample::new(
            format!("z={z}"),
            err,
            bound + ALIASING_SLACK * (1.0 + exact.norm()),
        ));
    }
    let bound = BoundReport::ratio_check("aliasing error within h_a times tail of psi", checks, 1.0)
        .with_runtime(started.elapsed().as_secs_f64());
    Ok(AliasingReport {
        schema_version: SCHEMA_VERSION,
        a: ext.a(),
        b: ext.b,
        n: ext.n,
        int_psi_tail: tail,
        sup_h,
        max_violation: violation,
        scan_points: ext.scan_points,
        quadrature_nodes: ext.table.grid().len(),
        z_points: zs.len(),
        pass: bound.pass,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::free_spectrum;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn free_field(n: usize) -> ExtensionField {
        let p = Potential::zero(1.5 * PI);
        ExtensionField::from_spectrum(&p, 1.5 * PI, free_spectrum(n), n, 30.0).unwrap()
    }

    #[test]
    fn collapses_at_sample_points() {
        let ext = free_field(20);
        let z = c(9.0, 0.0);
        assert_eq!(ext.h_sup(z).unwrap().value, 0.0);
        for x in [0.3, 2.0, 4.5] {
            assert!((ext.xi_ext(x, z).unwrap() - (3.0 * x).cos()).norm() < 1e-12);
        }
    }

    #[test]
    fn table_and_direct_paths_agree() {
        let p = Potential::cosine_preset(1.5 * PI);
        let sd = crate::spectrum::compute_spectrum(&p, PI, FRAC_PI_2, 8).unwrap();
        let ext = ExtensionField::from_spectrum(&p, 1.5 * PI, sd.clone(), 8, 30.0).unwrap();
        let z = c(5.5, 1.0);
        for x in [0.5, 3.5, 4.4] {
            let a = ext.xi_ext(x, z).unwrap();
            let b = xi_ext(&p, &sd, x, z, 8).unwrap();
            assert!((a - b).norm() < 1e-10, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn reconstruction_interpolates() {
        let ext = free_field(15);
        let p = ext.potential().clone();
        let g = DBFunction::from_fn(&p, 1.5 * PI, &[], |x| c(x.sin() + 0.2, -x)).unwrap();
        let s = ext.samples(&g).unwrap();
        for n in [0, 4, 15] {
            let z = c((n * n) as f64, 0.0);
            assert!((undersampled_reconstruct(&ext, &s, z).unwrap() - s[n]).norm() < 1e-12);
        }
        assert!(undersampled_reconstruct(&ext, &s[..3], c(1.0, 0.0)).is_err());
    }

    #[test]
    fn h_sup_is_a_maximum() {
        let ext = free_field(30);
        let z = c(0.5, 0.0);
        let h = ext.h_sup(z).unwrap();
        assert!(h.argmax >= PI && h.argmax <= 1.5 * PI);
        for k in 0..50 {
            let x = PI + 0.5 * PI * k as f64 / 49.0;
            let d = (ext.xi_ext(x, z).unwrap() - (0.5f64.sqrt() * x).cos()).norm();
            assert!(d <= h.value * (1.0 + 1e-9));
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let p = Potential::zero(1.5 * PI);
        assert!(ExtensionField::from_spectrum(&p, 2.0 * PI, free_spectrum(5), 5, 1.0).is_err());
        assert!(ExtensionField::from_spectrum(&p, 1.5 * PI, free_spectrum(5), 9, 1.0).is_err());
    }
}
