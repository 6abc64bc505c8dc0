//! Sampled Shapley values for games too large to enumerate all orders.
//!
//! Each sample draws an arrival order with a Fisher-Yates shuffle driven by a
//! `ChaCha8Rng` seeded from the caller's 64-bit seed: for `i` from `n - 1`
//! down to `1`, swap position `i` with a uniform position in `0..=i`. The
//! marginal contributions along that order are accumulated exactly on the
//! common-denominator integer scale of the game, so per-sample telescoping
//! holds without rounding.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coalition::{check_cap, MAX_SUBSET_PLAYERS};
use crate::game::{CharacteristicGame, GameHash};
use crate::rational::{to_f64, Accumulator, Rational, Scaled, ScaledInts};
use crate::shapley::ShapleyError;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloEstimate {
    pub values: Vec<f64>,
    /// Exact sample means; these sum to `v(N)` exactly.
    pub sample_means: Vec<Rational>,
    /// Sample standard deviation of each player's marginals over `sqrt(samples)`.
    pub stderr: Vec<f64>,
    pub samples: u64,
    pub seed: u64,
    pub game_hash: GameHash,
}

pub fn shapley_monte_carlo(game: &CharacteristicGame, samples: u64, seed: u64) -> Result<MonteCarloEstimate, ShapleyError> {
    if samples == 0 {
        return Err(ShapleyError::ZeroSamples);
    }
    let n = game.n();
    check_cap(n, MAX_SUBSET_PLAYERS, "Monte Carlo Shapley")?;
    let scaled = Scaled::new(game.values());
    let as_f64: Vec<f64> = game.values().iter().map(to_f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // i128 sums stay in range for up to 2^32 samples of 90-bit differences.
    let (sums, moments) = match &scaled.ints {
        ScaledInts::Small(v) if samples <= 1 << 32 => sample(v, &as_f64, n, samples, &mut rng),
        ScaledInts::Small(v) => {
            let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            sample(&big, &as_f64, n, samples, &mut rng)
        }
        ScaledInts::Big(v) => sample(v, &as_f64, n, samples, &mut rng),
    };
    let denom = BigInt::from(samples) * &scaled.denom;
    let sample_means: Vec<Rational> = sums.into_iter().map(|s| Rational::new(s, denom.clone())).collect();
    let stderr = moments
        .iter()
        .map(|m| if samples < 2 { 0.0 } else { (m.m2 / (samples - 1) as f64).sqrt() / (samples as f64).sqrt() })
        .collect();
    Ok(MonteCarloEstimate {
        values: sample_means.iter().map(to_f64).collect(),
        sample_means,
        stderr,
        samples,
        seed,
        game_hash: game.hash().clone(),
    })
}

/// Running mean and sum of squared deviations (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }
}

pub(crate) fn shuffle(order: &mut [usize], rng: &mut impl Rng) {
    for i in (1..order.len()).rev() {
        let j = rng.random_range(0..=i);
        order.swap(i, j);
    }
}

fn sample<T: Accumulator>(
    values: &[T],
    as_f64: &[f64],
    n: usize,
    samples: u64,
    rng: &mut ChaCha8Rng,
) -> (Vec<BigInt>, Vec<Moments>) {
    let mut sums = vec![T::zero(); n];
    let mut moments = vec![Moments::default(); n];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..samples {
        shuffle(&mut order, rng);
        let mut prefix = 0usize;
        for &p in &order {
            let next = prefix | (1 << p);
            sums[p] += &T::diff(&values[next], &values[prefix]);
            moments[p].push(as_f64[next] - as_f64[prefix]);
            prefix = next;
        }
    }
    (sums.iter().map(Accumulator::to_bigint).collect(), moments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::Players;
    use crate::rational::int;

    fn table_two() -> CharacteristicGame {
        CharacteristicGame::from_labels(&["A", "B", "C"], [0, 0, 0, 4, 0, 3, 2, 6].into_iter().map(int).collect())
            .unwrap()
    }

    #[test]
    fn close_to_exact_on_backup_sites() {
        let est = shapley_monte_carlo(&table_two(), 100_000, 42).unwrap();
        for (e, exact) in est.values.iter().zip([2.5, 2.0, 1.5]) {
            assert!((e - exact).abs() < 0.05, "{e} vs {exact}");
        }
        assert!(est.stderr.iter().all(|s| *s > 0.0 && *s < 0.05));
    }

    #[test]
    fn sample_means_sum_to_grand_value() {
        for seed in 0..5 {
            let est = shapley_monte_carlo(&table_two(), 37, seed).unwrap();
            assert_eq!(est.sample_means.iter().sum::<Rational>(), int(6));
        }
    }

    #[test]
    fn zero_game_estimates_zero() {
        let g = CharacteristicGame::zero(Players::new(&["A", "B", "C", "D"]).unwrap());
        for seed in [0, 1, u64::MAX] {
            let est = shapley_monte_carlo(&g, 500, seed).unwrap();
            assert_eq!(est.values, vec![0.0; 4]);
            assert_eq!(est.stderr, vec![0.0; 4]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = shapley_monte_carlo(&table_two(), 2_000, 9).unwrap();
        let b = shapley_monte_carlo(&table_two(), 2_000, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let c = shapley_monte_carlo(&table_two(), 2_000, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn rejects_zero_samples() {
        assert_eq!(shapley_monte_carlo(&table_two(), 0, 1).unwrap_err(), ShapleyError::ZeroSamples);
    }

    #[test]
    fn one_sample_has_zero_stderr() {
        let est = shapley_monte_carlo(&table_two(), 1, 3).unwrap();
        assert_eq!(est.stderr, vec![0.0; 3]);
    }

    #[test]
    fn shuffle_is_uniform_enough() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = std::collections::HashMap::new();
        for _ in 0..6_000 {
            let mut o = vec![0, 1, 2];
            shuffle(&mut o, &mut rng);
            *counts.entry(o).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 6);
        assert!(counts.values().all(|&c| (800..1200).contains(&c)), "{counts:?}");
    }
}
