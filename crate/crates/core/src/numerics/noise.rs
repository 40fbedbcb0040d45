use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Bounded perturbation sequence with its sup-norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseSample {
    pub values: Vec<f64>,
    pub max_abs: f64,
}

/// `count` values drawn uniformly from `[-delta, delta]`, reproducible per seed.
pub fn uniform_noise(seed: u64, count: usize, delta: f64) -> NoiseSample {
    let delta = delta.max(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            (delta * (2.0 * u - 1.0)).clamp(-delta, delta)
        })
        .collect();
    let max_abs = values.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    NoiseSample { values, max_abs }
}

/// Independent stream seed for trial `stream` of a run seeded with `seed`
/// (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded generator for experiment inputs (random test functions and the like).
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ_{k ≤ d} (c_k cos(kωx) + s_k sin(kωx))`, `ω = π/length`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrigPolynomial {
    pub frequency: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPolynomial {
    /// Coefficients uniform in `[−1, 1]`, damped by `1/(1 + k)`.
    pub fn random(seed: u64, degree: usize, length: f64) -> Self {
        let mut g = rng(seed);
        let mut draw = |k: usize| (2.0 * g.gen::<f64>() - 1.0) / (1 + k) as f64;
        let mut cos = Vec::with_capacity(degree + 1);
        let mut sin = Vec::with_capacity(degree + 1);
        for k in 0..=degree {
            cos.push(draw(k));
            sin.push(if k == 0 { 0.0 } else { draw(k) });
        }
        TrigPolynomial {
            frequency: std::f64::consts::PI / length,
            cos,
            sin,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (c, s))| {
                let t = k as f64 * self.frequency * x;
                c * t.cos() + s * t.sin()
            })
            .sum()
    }
}
