use std::f64::consts::{FRAC_PI_2, PI};

use dbsample::diagnostics::ramp_inner_quadrature;
use dbsample::numerics::{uniform_noise, Tolerances};
use dbsample::oversampling::{
    free_weighted_inner, oversampled_reconstruct, ramp_inner_closed_form, robustness_report,
    OversamplingContext,
};
use dbsample::sampling::z_grid;
use dbsample::spectrum::free_spectrum;
use dbsample::{Complex64, DBFunction, Potential};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn free_context(n: usize) -> OversamplingContext {
    OversamplingContext::from_spectrum(&Potential::zero(PI), FRAC_PI_2, free_spectrum(n), 31.0).unwrap()
}

fn half_indicator() -> DBFunction {
    DBFunction::from_fn(&Potential::zero(PI), FRAC_PI_2, &[], |_| c(1.0, 0.0)).unwrap()
}

#[test]
fn closed_form_matches_quadrature() {
    for n in 0..8u32 {
        for z in [c(0.3, 0.0), c(2.0, 1.0), c(17.0, -3.0), c(-5.0, 0.5)] {
            let closed = ramp_inner_closed_form(FRAC_PI_2, n, z);
            let quad = ramp_inner_quadrature(FRAC_PI_2, n, z).unwrap();
            assert!((closed - quad).norm() <= 1e-10, "n={n} z={z}");
        }
    }
}

#[test]
fn diagonal_value_is_the_limit_of_the_closed_form() {
    for n in [1u32, 2, 5] {
        let t = c((n * n) as f64, 0.0);
        let at = free_weighted_inner(FRAC_PI_2, PI, t, t);
        // Symmetric offsets cancel the first-order term; Richardson removes the second.
        let avg = |h: f64| 0.5 * (ramp_inner_closed_form(FRAC_PI_2, n, t + h) + ramp_inner_closed_form(FRAC_PI_2, n, t - h));
        let limit = (4.0 * avg(1e-3) - avg(2e-3)) / 3.0;
        assert!((at - limit).norm() <= 1e-9, "n={n}: {at} vs {limit}");
    }
}

#[test]
fn damped_series_reproduces_band_limited_functions() {
    let ctx = free_context(200);
    let f = half_indicator();
    let s = ctx.samples(&f, 200).unwrap();
    let mut worst = 0.0_f64;
    for k in 0..=40 {
        let z = c(0.5 * k as f64, 0.0);
        let r = oversampled_reconstruct(&ctx, &s, None, z, 200).unwrap();
        let root = z.sqrt();
        let exact = if k == 0 { c(FRAC_PI_2, 0.0) } else { (root * FRAC_PI_2).sin() / root };
        worst = worst.max((r - exact).norm());
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn noise_error_is_bounded_by_the_absolute_kernel_sum() {
    let ctx = free_context(200);
    let f = half_indicator();
    let s = ctx.samples(&f, 200).unwrap();
    let zs = z_grid((0.0, 20.0), (0.0, 0.0), 25, 1).unwrap();
    let eps = uniform_noise(7, 201, 1e-2);
    let mut c_hat = 0.0_f64;
    let mut worst = 0.0_f64;
    for &z in &zs {
        let row = ctx.kernel_tilde_row(z).unwrap();
        c_hat = c_hat.max(row[..=200].iter().map(|k| k.norm()).sum());
        let clean = oversampled_reconstruct(&ctx, &s, None, z, 200).unwrap();
        let noisy = oversampled_reconstruct(&ctx, &s, Some(&eps.values), z, 200).unwrap();
        worst = worst.max((noisy - clean).norm());
    }
    assert!(worst <= c_hat * 1e-2);
}

#[test]
fn robustness_report_is_consistent() {
    let ctx = free_context(200);
    let zs = z_grid((0.0, 20.0), (0.0, 0.0), 25, 1).unwrap();
    let r = robustness_report(&ctx, &half_indicator(), &[1e-1, 1e-2, 1e-3], &zs, 200, 7, 3).unwrap();
    assert!(r.trials.pass);
    assert!(r.ratio_spread < 0.1, "{:?}", r.ratios);
    assert_eq!(r.trials.samples.len(), 12);
    assert!(r.floor < 1e-3);
    assert!(r.cauchy_tail.is_none());
    let json = dbsample::output::to_json(&r).unwrap();
    for key in ["\"a\"", "\"b\"", "\"gamma\"", "\"N\"", "\"deltas\"", "\"empirical_C\"", "\"ratios\"", "\"pass\""] {
        assert!(json.contains(key), "{key}");
    }
}

#[test]
fn plain_absolute_sums_exceed_damped_ones() {
    let ctx = free_context(400);
    let z = c(20.25, 0.0);
    let s = ctx.tilde_abs_sum(z, 400).unwrap() - ctx.tilde_abs_sum(z, 200).unwrap();
    let t = ctx.plain_abs_sum(z, 400).unwrap() - ctx.plain_abs_sum(z, 200).unwrap();
    assert!(t > s && s > 0.0);
}

#[test]
fn cosine_kernel_deviation_decays_like_inverse_square() {
    let p = Potential::cosine_preset(PI);
    let ctx = OversamplingContext::new(&p, FRAC_PI_2, PI, FRAC_PI_2, 60, 31.0, &Tolerances::default()).unwrap();
    let z = c(7.0, 0.5);
    let row = ctx.kernel_tilde_row(z).unwrap();
    let seq: Vec<f64> = (1..=60)
        .map(|n| {
            let free = free_weighted_inner(FRAC_PI_2, PI, z, c((n * n) as f64, 0.0));
            (n * n) as f64 * (row[n] * ctx.spectral().norming[n] - free).norm()
        })
        .collect();
    let high = seq[30..].iter().copied().fold(0.0, f64::max);
    let low = seq[9..30].iter().copied().fold(0.0, f64::max);
    assert!(high <= 2.0 * low, "{low} {high}");
}
