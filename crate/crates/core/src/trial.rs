//! Seeded random trial data. Each trial gets its own generator so sweeps can
//! run in any order, or in parallel, and still report the same numbers.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator for trial `trial` of a sweep seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Overwrite with independent standard complex Gaussians.
pub fn fill_gaussian<R: Rng + ?Sized>(rng: &mut R, out: &mut [Complex64]) {
    for c in out.iter_mut() {
        *c = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_repeatable() {
        let mut a = [Complex64::new(0.0, 0.0); 4];
        let mut b = a;
        fill_gaussian(&mut trial_rng(5, 1), &mut a);
        fill_gaussian(&mut trial_rng(5, 1), &mut b);
        assert_eq!(a, b);
        fill_gaussian(&mut trial_rng(5, 2), &mut b);
        assert_ne!(a, b);
    }
}
