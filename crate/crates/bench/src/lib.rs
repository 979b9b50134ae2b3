//! Shared fixtures for the criterion benches.

use mixnorm::norms::{mixed_norm, Exponent, NormSpec};
use mixnorm::{DenseMatrix, GroupPartition, GroupedVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// A `rows × cols` standard normal matrix with its rows as groups.
pub fn random_groups(rows: usize, cols: usize, seed: u64) -> GroupedVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    GroupedVector::new(data, GroupPartition::uniform(rows, cols).unwrap()).unwrap()
}

pub fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn random_blocks(count: usize, rows: usize, cols: usize, seed: u64) -> Vec<DenseMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let data = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
            DenseMatrix::from_row_major(rows, cols, data).unwrap()
        })
        .collect()
}

/// `ratio · ‖v‖_{1,q}`.
pub fn radius(v: &GroupedVector, q: Exponent, ratio: f64) -> f64 {
    ratio * mixed_norm(v, NormSpec::l1q(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_seeded() {
        assert_eq!(random_groups(3, 4, 1), random_groups(3, 4, 1));
        assert_ne!(random_vector(5, 1), random_vector(5, 2));
        let v = random_groups(10, 3, 0);
        assert!(radius(&v, Exponent::INF, 0.5) > 0.0);
        assert_eq!(random_blocks(2, 3, 2, 0).len(), 2);
    }
}
