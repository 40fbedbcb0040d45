use std::f64::consts::PI;

use dbsample::kernel::{kernel_free, kernel_k};
use dbsample::numerics::{csqrt, find_root_bracketed, uniform_noise, Grid};
use dbsample::schrodinger::xi_at;
use dbsample::{Complex64, Potential};
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 48, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn integration_is_linear_and_additive(a in -3.0..3.0f64, b in -3.0..3.0f64, mid in 0.1..3.0f64) {
        let g = Grid::uniform(0.0, PI, 8).unwrap();
        let f = g.sample(|x| (2.0 * x).sin() + x);
        let h = g.sample(|x| (-x).exp());
        let mix: Vec<f64> = f.iter().zip(&h).map(|(u, v)| a * u + b * v).collect();
        let lhs = g.integrate(&mix, 0.0, PI).unwrap();
        let rhs = a * g.integrate_all(&f) + b * g.integrate_all(&h);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        let split = g.integrate(&f, 0.0, mid).unwrap() + g.integrate(&f, mid, PI).unwrap();
        prop_assert!((split - g.integrate_all(&f)).abs() <= 1e-8);
    }

    #[test]
    fn root_is_independent_of_the_bracket(lo in 0.0..1.0f64, hi in 1.1..2.5f64) {
        let r = find_root_bracketed(|x| (x - 1.05).tanh(), lo, hi, 1e-12).unwrap();
        prop_assert!((r - 1.05).abs() <= 1e-11);
    }

    #[test]
    fn kernel_is_hermitian(zr in -5.0..30.0f64, zi in -2.0..2.0f64, wr in -5.0..30.0f64, wi in -2.0..2.0f64) {
        let p = Potential::cosine_preset(PI);
        let (z, w) = (c(zr, zi), c(wr, wi));
        let kzw = kernel_k(&p, PI, z, w).unwrap();
        let kwz = kernel_k(&p, PI, w, z).unwrap();
        prop_assert!((kzw - kwz.conj()).norm() <= 1e-9 * (1.0 + kzw.norm()));
    }

    #[test]
    fn solutions_are_real_entire(zr in -40.0..60.0f64, zi in -20.0..20.0f64, x in 0.0..PI) {
        let p = Potential::cosine_preset(PI);
        let z = c(zr, zi);
        let (u, du) = xi_at(&p, z, x).unwrap();
        let (v, dv) = xi_at(&p, z.conj(), x).unwrap();
        let scale = 1e-10 * (1.0 + u.norm() + du.norm());
        prop_assert!((u - v.conj()).norm() <= scale && (du - dv.conj()).norm() <= scale);
    }

    #[test]
    fn free_solution_ignores_the_root_branch(zr in -30.0..60.0f64, zi in -20.0..20.0f64, x in 0.0..PI, wr in -5.0..40.0f64) {
        let z = c(zr, zi);
        let r = csqrt(z);
        let xi = xi_at(&Potential::zero(PI), z, x).unwrap().0;
        let tol = 1e-10 * (1.0 + xi.norm());
        prop_assert!((xi - (r * x).cos()).norm() <= tol);
        prop_assert!((xi - (-r * x).cos()).norm() <= tol);
        let k = kernel_free(PI, z, c(wr, 0.0));
        let direct = kernel_k(&Potential::zero(PI), PI, z, c(wr, 0.0)).unwrap();
        prop_assert!((k - direct).norm() <= 1e-8 * (1.0 + k.norm()));
    }

    #[test]
    fn noise_stays_in_range(seed in any::<u64>(), count in 1usize..500, delta in 0.0..10.0f64) {
        let n = uniform_noise(seed, count, delta);
        prop_assert_eq!(n.values.len(), count);
        prop_assert!(n.values.iter().all(|v| v.abs() <= delta));
        prop_assert!(n.max_abs <= delta);
        prop_assert_eq!(n, uniform_noise(seed, count, delta));
    }
}
