//! Acceptance gate: every criterion runs and prints one PASS/FAIL line.
//! The process exits non-zero when any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use dbsample_cli::{run, Command, RunConfig};
use dbsample::diagnostics::{audit_suite, ramp_inner_quadrature, AuditConfig};
use dbsample::kernel::kernel_diag;
use dbsample::numerics::{derive_seed, rng, TrigPolynomial};
use dbsample::oversampling::{ramp_inner_closed_form, robustness_report, OversamplingContext};
use dbsample::sampling::{convergence_profile, take_samples, z_grid, KernelTable};
use dbsample::schrodinger::{xi_at, xi_picard};
use dbsample::spectrum::{compute_spectrum, free_spectrum};
use dbsample::undersampling::{aliasing_report, undersampled_reconstruct, ExtensionField};
use dbsample::{Complex64, DBFunction, Potential};
use rand::Rng;

const SEED: u64 = 7;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn piecewise_linear() -> Potential {
    Potential::piecewise_linear(vec![0.0, 1.0, 2.0, PI], vec![1.0, -2.0, 0.5, 3.0]).unwrap()
}

fn seeded_function(p: &Potential, stream: u64, length: f64, s: f64) -> DBFunction {
    let poly = TrigPolynomial::random(derive_seed(SEED, stream), 4, length);
    let breaks: Vec<f64> = if length < s { vec![length] } else { Vec::new() };
    DBFunction::from_fn(p, s, &breaks, |x| c(if x <= length { poly.eval(x) } else { 0.0 }, 0.0)).unwrap()
}

fn free_spectrum_exactness() -> Verdict {
    let sd = compute_spectrum(&Potential::zero(PI), PI, FRAC_PI_2, 40).unwrap();
    let worst = (0..=40)
        .map(|n| (sd.eigenvalues[n] - (n * n) as f64).abs())
        .fold(0.0, f64::max);
    verdict(worst <= 1e-8, format!("max |λ_n − n²| over n ≤ 40 = {worst:.3e} (limit 1e-8)"))
}

fn free_kernel_diagonal() -> Verdict {
    let p = Potential::zero(PI);
    let worst = (0..=40)
        .map(|n| {
            let k = kernel_diag(&p, PI, (n * n) as f64).unwrap();
            (k - if n == 0 { PI } else { FRAC_PI_2 }).abs()
        })
        .fold(0.0, f64::max);
    verdict(worst <= 1e-9, format!("max deviation over n ≤ 40 = {worst:.3e} (limit 1e-9)"))
}

fn ramp_identity() -> Verdict {
    let mut g = rng(derive_seed(SEED, 3));
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let n: u32 = g.gen_range(0..=20);
        let a = g.gen_range(0.2..3.0);
        let z = c(g.gen_range(-5.0..40.0), g.gen_range(-5.0..5.0));
        let closed = ramp_inner_closed_form(a, n, z);
        let quad = ramp_inner_quadrature(a, n, z).unwrap();
        worst = worst.max((closed - quad).norm());
    }
    verdict(worst <= 1e-10, format!("max |closed − quadrature| over 50 draws = {worst:.3e} (limit 1e-10)"))
}

fn solver_cross_validation() -> Verdict {
    let mut worst_abs = 0.0_f64;
    let mut worst_rel = 0.0_f64;
    let mut at = c(0.0, 0.0);
    for p in [Potential::cosine_preset(PI), piecewise_linear()] {
        for r in [0.0, 10.0, 50.0, 100.0] {
            for k in 0..8 {
                let z = Complex64::from_polar(r, k as f64 * PI / 4.0);
                for j in 0..=8 {
                    let x = j as f64 * PI / 8.0;
                    let ode = xi_at(&p, z, x).unwrap().0;
                    let picard = xi_picard(&p, z, x, 80).unwrap();
                    let d = (ode - picard).norm();
                    if d > worst_abs {
                        worst_abs = d;
                        at = z;
                    }
                    worst_rel = worst_rel.max(d / ode.norm().max(1.0));
                }
            }
        }
    }
    verdict(
        worst_abs <= 1e-7,
        format!(
            "max |Δ| = {worst_abs:.3e} at z = {at} (limit 1e-7); max |Δ|/max(1,|ξ|) = {worst_rel:.3e}"
        ),
    )
}

fn sampling_convergence() -> Verdict {
    let p = Potential::cosine_preset(PI);
    let sd = compute_spectrum(&p, PI, FRAC_PI_2, 200).unwrap();
    let kernel = KernelTable::new(&p, &sd, 31.0).unwrap();
    let zs = z_grid((-1.0, 30.0), (-1.0, 1.0), 16, 5).unwrap();
    let worst = (0..5)
        .map(|j| {
            let f = seeded_function(&p, j, PI, PI);
            let sf = take_samples(&f, &sd, 200).unwrap();
            convergence_profile(&f, &sf, &sd, &kernel, &zs, &[200]).unwrap().sup_errors[0]
        })
        .fold(0.0, f64::max);
    verdict(worst <= 1e-4, format!("max over 5 functions of sup_K |f − f_200| = {worst:.3e} (limit 1e-4)"))
}

fn oversampling_robustness() -> Verdict {
    let p = Potential::zero(PI);
    let ctx = OversamplingContext::from_spectrum(&p, FRAC_PI_2, free_spectrum(400), 21.0).unwrap();
    let f = DBFunction::from_fn(&p, FRAC_PI_2, &[], |_| c(1.0, 0.0)).unwrap();
    let zs = z_grid((0.0, 20.0), (0.0, 0.0), 25, 1).unwrap();
    let r = robustness_report(&ctx, &f, &[1e-1, 1e-2, 1e-3], &zs, 200, SEED, 10).unwrap();
    let tail = r.cauchy_tail.unwrap_or(f64::NAN);
    verdict(
        r.pass,
        format!(
            "E ≤ Ĉδ in all {} trials: {}; spread of E/δ = {:.3e} (limit 0.1); Ĉ = {:.6}; |S_400 − S_200| = {tail:.6e} (limit 1e-3)",
            r.trials.samples.len(),
            r.trials.pass,
            r.ratio_spread,
            r.empirical_c
        ),
    )
}

fn plain_vs_oversampled() -> Verdict {
    let ctx = OversamplingContext::from_spectrum(&Potential::zero(PI), FRAC_PI_2, free_spectrum(400), 31.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for m in 0..5 {
        let z = c((m as f64 + 0.5).powi(2), 0.0);
        let s = ctx.tilde_abs_sum(z, 400).unwrap() - ctx.tilde_abs_sum(z, 200).unwrap();
        let t = ctx.plain_abs_sum(z, 400).unwrap() - ctx.plain_abs_sum(z, 200).unwrap();
        pass &= t >= 10.0 * s;
        parts.push(format!("z={}: (T₄₀₀−T₂₀₀)/(S₄₀₀−S₂₀₀) = {:.2}", z.re, t / s));
    }
    verdict(pass, format!("{} (limit ≥ 10)", parts.join("; ")))
}

fn undersampling_bound() -> Verdict {
    let b = 1.5 * PI;
    let p = Potential::cosine_preset(b);
    let zs = z_grid((-1.0, 30.0), (-1.0, 1.0), 5, 5).unwrap();
    let sd = compute_spectrum(&p, PI, FRAC_PI_2, 200).unwrap();
    let ext = ExtensionField::from_spectrum(&p, b, sd.clone(), 200, 31.0).unwrap();
    let mut failures = 0;
    let mut worst_violation = f64::NEG_INFINITY;
    let mut worst_interp = 0.0_f64;
    for j in 0..100 {
        let g = seeded_function(&p, 100 + j, b, b);
        let r = aliasing_report(&ext, &g, &zs).unwrap();
        failures += usize::from(!r.pass);
        worst_violation = worst_violation.max(r.max_violation);
        let s = ext.samples(&g).unwrap();
        for n in [0, 1, 7, 50, 200] {
            let at = undersampled_reconstruct(&ext, &s, c(sd.eigenvalues[n], 0.0)).unwrap();
            worst_interp = worst_interp.max((at - s[n]).norm());
        }
    }
    verdict(
        failures == 0 && worst_interp <= 1e-8,
        format!(
            "{failures}/100 functions violate |g − ĝ| ≤ h_a·∫_a^b|ψ|; max violation = {worst_violation:.3e}; max |ĝ(λ_n) − g(λ_n)| = {worst_interp:.3e} (limit 1e-8)"
        ),
    )
}

fn asymptotic_audits() -> Verdict {
    let names = ["eigenvalue asymptotics", "eigenfunction remainder", "norming asymptotics"];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, p) in [("cosine", Potential::cosine_preset(PI)), ("piecewise-linear", piecewise_linear())] {
        let reports = audit_suite(&p, &AuditConfig::default()).unwrap();
        for name in names {
            let r = reports.iter().find(|r| r.name.starts_with(name)).unwrap();
            pass &= r.pass;
            parts.push(format!("{label}/{name}: {:.3}", r.worst_ratio));
        }
    }
    verdict(pass, format!("worst high/low ratios {} (limit 2)", parts.join(", ")))
}

fn determinism() -> Verdict {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let text = "[spectrum]\nn_max = 40\n[sampling]\nN = 50\nfunctions = 2\n[grid]\nresolution = 4, 3\n";
    let mut outputs = Vec::new();
    for dir in &dirs {
        let mut cfg = RunConfig::parse(text, dir.path()).unwrap();
        cfg.out_dir = dir.path().to_path_buf();
        let mut files = Vec::new();
        for cmd in [Command::Spectrum, Command::Kernel, Command::Reconstruct, Command::Oversample, Command::Audit] {
            files.extend(run(cmd, &cfg).unwrap().artifacts);
        }
        let mut under = cfg.clone();
        under.potential = Potential::cosine_preset(1.5 * PI);
        under.a = PI;
        under.b = 1.5 * PI;
        files.extend(run(Command::Undersample, &under).unwrap().artifacts);
        outputs.push(
            files
                .iter()
                .map(|f| (f.file_name().unwrap().to_owned(), std::fs::read(f).unwrap()))
                .collect::<Vec<_>>(),
        );
    }
    let same = outputs[0] == outputs[1];
    verdict(same, format!("{} artifacts from two runs byte-identical: {same}", outputs[0].len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("free-spectrum exactness", free_spectrum_exactness),
        ("free-kernel diagonal", free_kernel_diagonal),
        ("ramp inner-product identity", ramp_identity),
        ("solver cross-validation", solver_cross_validation),
        ("sampling convergence", sampling_convergence),
        ("oversampling robustness", oversampling_robustness),
        ("plain-vs-oversampled contrast", plain_vs_oversampled),
        ("undersampling bound", undersampling_bound),
        ("asymptotic audits", asymptotic_audits),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                verdict(false, format!("panicked: {msg}"))
            });
        failed += usize::from(!v.pass);
        println!(
            "criterion {:>2} {:<30} {}  [{:.1}s] {}",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!("acceptance: {}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
