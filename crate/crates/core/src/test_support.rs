//! Random model generation shared by unit tests.

use rand::{Rng, SeedableRng};

use crate::model::HejdModel;

/// A valid model with `m` upward and `n` downward components drawn from `seed`.
pub(crate) fn random_model(m: usize, n: usize, sigma: f64, mu: f64, lambda: f64, seed: u64) -> HejdModel {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rates = |count: usize, floor: f64| {
        let mut r = Vec::with_capacity(count);
        let mut x = floor;
        for _ in 0..count {
            x += rng.random_range(0.5..10.0);
            r.push(x);
        }
        r
    };
    let up_rates = rates(m, 1.0);
    let down_rates = rates(n, 0.0);
    let raw: Vec<f64> = (0..m + n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let down_weights = w.split_off(m);
    HejdModel::new(sigma, mu, lambda, w, up_rates, down_weights, down_rates).unwrap()
}
