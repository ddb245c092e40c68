//! Seeded random helpers shared by property checks and instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::Vector;

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector(rng: &mut SeededRng, dim: usize, scale: f64) -> Vector {
    Vector::from_raw(
        (0..dim)
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect(),
    )
}

pub fn uniform_vector(rng: &mut SeededRng, lower: &[f64], upper: &[f64]) -> Vector {
    Vector::from_raw(
        lower
            .iter()
            .zip(upper)
            .map(|(&lo, &hi)| if hi > lo { rng.random_range(lo..=hi) } else { lo })
            .collect(),
    )
}

pub fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}
