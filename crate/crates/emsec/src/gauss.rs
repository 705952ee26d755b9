//! Seeded standard-normal sampling (Box-Muller over a ChaCha stream).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One Box-Muller draw: two independent standard normals.
pub(crate) fn standard_normal_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (radius * theta.cos(), radius * theta.sin())
}

pub(crate) struct NormalSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSampler {
    pub(crate) fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub(crate) fn from_rng(rng: ChaCha8Rng) -> Self {
        Self { rng, spare: None }
    }

    pub(crate) fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let (a, b) = standard_normal_pair(&mut self.rng);
        self.spare = Some(b);
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_are_standard_normal() {
        let mut sampler = NormalSampler::new(1);
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let z = sampler.standard_normal();
            sum += z;
            sum_sq += z * z;
        }
        let mean = sum / n as f64;
        let var = sum_sq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a: Vec<f64> = {
            let mut s = NormalSampler::new(9);
            (0..16).map(|_| s.standard_normal()).collect()
        };
        let b: Vec<f64> = {
            let mut s = NormalSampler::new(9);
            (0..16).map(|_| s.standard_normal()).collect()
        };
        assert_eq!(a, b);
    }
}
