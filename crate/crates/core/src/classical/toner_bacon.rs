//! One-bit simulation of sequential qubit correlations.
//!
//! The two-point block is the Toner–Bacon shared-randomness protocol with the
//! first party's input reflected, which flips the singlet sign so the
//! estimator converges to `+a1·a2` — the temporal qubit correlation — instead
//! of `−a1·a2`:
//!
//! * shared randomness: two independent uniform unit vectors `λ1, λ2`;
//! * first output `α = sgn(a1·λ1)`;
//! * one communicated bit `c = sgn(a1·λ1)·sgn(a1·λ2)`;
//! * second output `β = sgn(a2·(λ1 + c·λ2))`.
//!
//! Longer chains run independent blocks on consecutive setting pairs, which
//! reproduces the pair factorization `Π (a_{2i−1}·a_{2i})` of the exact
//! quantum chain; an unpaired trailing setting contributes an independent
//! fair coin, so odd-length correlations vanish.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::quantum::bloch::{dot3, BlochSetting};
use crate::quantum::QuantumError;

/// Human-readable record of the sign convention, for reports.
pub const SIGN_CONVENTION: &str = "alpha = sgn(a1.l1); bit = sgn(a1.l1)*sgn(a1.l2); \
     beta = sgn(a2.(l1 + bit*l2)); first input reflected so E -> +a1.a2";

/// Uniform point on the unit sphere via normalized Gaussians.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochSetting {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if let Ok(setting) = BlochSetting::from_unnormalized(v) {
            return setting;
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// One protocol run; returns the two ±1 outputs.
fn block<R: Rng + ?Sized>(a1: &BlochSetting, a2: &BlochSetting, rng: &mut R) -> (f64, f64) {
    let l1 = random_unit_vector(rng).components();
    let l2 = random_unit_vector(rng).components();
    let a1c = a1.components();
    let a2c = a2.components();
    let alpha = sgn(dot3(&a1c, &l1));
    let bit = alpha * sgn(dot3(&a1c, &l2));
    let shifted = [
        l1[0] + bit * l2[0],
        l1[1] + bit * l2[1],
        l1[2] + bit * l2[2],
    ];
    let beta = sgn(dot3(&a2c, &shifted));
    (alpha, beta)
}

/// Monte Carlo estimate of the two-point correlation `E[αβ]`, which converges
/// to `a1·a2`. Deterministic given the seed.
pub fn toner_bacon_temporal(a1: &BlochSetting, a2: &BlochSetting, samples: u64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let (alpha, beta) = block(a1, a2, &mut rng);
        acc += alpha * beta;
    }
    acc / samples as f64
}

/// Monte Carlo estimate of the n-point correlation `E[α_1···α_n]` from
/// chained independent blocks; converges to `Π_{i odd} a_i·a_{i+1}` for even
/// n and to 0 for odd n (maximally mixed initial convention).
pub fn toner_bacon_chain(
    settings: &[BlochSetting],
    samples: u64,
    seed: u64,
) -> Result<f64, QuantumError> {
    if settings.is_empty() {
        return Err(QuantumError::InvalidParameter(
            "chain needs at least one setting".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut product = 1.0;
        let mut pairs = settings.chunks_exact(2);
        for pair in &mut pairs {
            let (alpha, beta) = block(&pair[0], &pair[1], &mut rng);
            product *= alpha * beta;
        }
        if let [unpaired] = pairs.remainder() {
            // leftover measurement on a fresh maximally mixed state: fair coin
            let l = random_unit_vector(&mut rng);
            product *= sgn(dot3(&unpaired.components(), &l.components()));
        }
        acc += product;
    }
    Ok(acc / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::bloch::{maximally_mixed, qubit_projective_chain};
    use crate::quantum::Limits;

    #[test]
    fn aligned_settings_give_perfect_correlation() {
        let a = BlochSetting::new([0.0, 0.0, 1.0]).unwrap();
        let n = 40_000u64;
        let estimate = toner_bacon_temporal(&a, &a, n, 1);
        assert!(
            (estimate - 1.0).abs() <= 4.0 / (n as f64).sqrt(),
            "estimate {estimate}"
        );
    }

    #[test]
    fn orthogonal_settings_give_vanishing_correlation() {
        let a1 = BlochSetting::new([0.0, 0.0, 1.0]).unwrap();
        let a2 = BlochSetting::new([1.0, 0.0, 0.0]).unwrap();
        let n = 100_000u64;
        let estimate = toner_bacon_temporal(&a1, &a2, n, 2);
        assert!(estimate.abs() <= 4.0 / (n as f64).sqrt(), "estimate {estimate}");
    }

    #[test]
    fn estimator_tracks_dot_product_for_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let n = 100_000u64;
        for trial in 0..10 {
            let a1 = random_unit_vector(&mut rng);
            let a2 = random_unit_vector(&mut rng);
            let estimate = toner_bacon_temporal(&a1, &a2, n, 100 + trial);
            assert!(
                (estimate - a1.dot(&a2)).abs() <= 4.0 / (n as f64).sqrt(),
                "trial {trial}: estimate {estimate} vs exact {}",
                a1.dot(&a2)
            );
        }
    }

    #[test]
    fn estimator_error_shrinks_at_root_n_rate() {
        let a1 = BlochSetting::from_unnormalized([1.0, 1.0, 0.0]).unwrap();
        let a2 = BlochSetting::from_unnormalized([1.0, -0.5, 0.5]).unwrap();
        let exact = a1.dot(&a2);
        for (n, seed) in [(1_000u64, 5u64), (10_000, 6), (100_000, 7)] {
            let estimate = toner_bacon_temporal(&a1, &a2, n, seed);
            assert!(
                (estimate - exact).abs() <= 5.0 / (n as f64).sqrt(),
                "N={n}: error {} above the 1/sqrt(N) band",
                (estimate - exact).abs()
            );
        }
    }

    #[test]
    fn chain_of_two_matches_single_block_estimator() {
        let a1 = BlochSetting::new([0.0, 1.0, 0.0]).unwrap();
        let a2 = BlochSetting::from_unnormalized([1.0, 0.0, 1.0]).unwrap();
        let direct = toner_bacon_temporal(&a1, &a2, 5_000, 9);
        let chained = toner_bacon_chain(&[a1, a2], 5_000, 9).unwrap();
        assert_eq!(direct, chained);
    }

    #[test]
    fn four_point_chain_matches_exact_quantum_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 200_000u64;
        let limits = Limits::default();
        for trial in 0..5 {
            let settings: Vec<BlochSetting> = (0..4).map(|_| random_unit_vector(&mut rng)).collect();
            let exact = qubit_projective_chain(&settings, &maximally_mixed(), &limits).unwrap();
            let estimate = toner_bacon_chain(&settings, n, 200 + trial).unwrap();
            assert!(
                (estimate - exact).abs() <= 5.0 / (n as f64).sqrt(),
                "trial {trial}: {estimate} vs {exact}"
            );
        }
    }

    #[test]
    fn aligned_four_point_chain_is_near_one() {
        let a = BlochSetting::new([0.0, 0.0, 1.0]).unwrap();
        let n = 50_000u64;
        let estimate = toner_bacon_chain(&[a, a, a, a], n, 13).unwrap();
        assert!((estimate - 1.0).abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn odd_chain_estimates_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let settings: Vec<BlochSetting> = (0..3).map(|_| random_unit_vector(&mut rng)).collect();
        let n = 100_000u64;
        let estimate = toner_bacon_chain(&settings, n, 14).unwrap();
        assert!(estimate.abs() <= 4.0 / (n as f64).sqrt());
    }
}
