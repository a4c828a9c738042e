use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{ProgramId, UserId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FunkSvdParams {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for FunkSvdParams {
    fn default() -> Self {
        FunkSvdParams {
            factors: 16,
            learning_rate: 0.01,
            regularization: 0.02,
            epochs: 20,
            seed: 0,
        }
    }
}

/// Matrix factorization fitted by plain SGD on observed binary preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunkSvd {
    factors: usize,
    users: HashMap<UserId, usize>,
    items: HashMap<ProgramId, usize>,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
}

impl FunkSvd {
    /// `ratings` holds one `(user, program, preference)` triple per observed
    /// pair; order does not matter.
    pub fn fit(ratings: &[(UserId, ProgramId, f64)], params: FunkSvdParams) -> Result<Self> {
        if params.factors == 0 {
            return Err(Error::Config("funksvd factors must be at least 1".into()));
        }
        let mut sorted = ratings.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut users = HashMap::new();
        let mut items = HashMap::new();
        let mut user_ids: Vec<UserId> = sorted.iter().map(|r| r.0).collect();
        user_ids.dedup();
        for (i, u) in user_ids.into_iter().enumerate() {
            users.insert(u, i);
        }
        let mut item_ids: Vec<ProgramId> = sorted.iter().map(|r| r.1).collect();
        item_ids.sort_unstable();
        item_ids.dedup();
        for (i, p) in item_ids.into_iter().enumerate() {
            items.insert(p, i);
        }

        let f = params.factors;
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        let mut user_factors: Vec<f64> = (0..users.len() * f).map(|_| normal.sample(&mut rng)).collect();
        let mut item_factors: Vec<f64> = (0..items.len() * f).map(|_| normal.sample(&mut rng)).collect();

        let triples: Vec<(usize, usize, f64)> = sorted.iter().map(|&(u, p, r)| (users[&u], items[&p], r)).collect();
        let mut order: Vec<usize> = (0..triples.len()).collect();
        let (lr, reg) = (params.learning_rate, params.regularization);
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for &idx in &order {
                let (u, i, r) = triples[idx];
                let (pu, qi) = (u * f, i * f);
                let pred: f64 = (0..f).map(|k| user_factors[pu + k] * item_factors[qi + k]).sum();
                let err = r - pred;
                for k in 0..f {
                    let (x, y) = (user_factors[pu + k], item_factors[qi + k]);
                    user_factors[pu + k] += lr * (err * y - reg * x);
                    item_factors[qi + k] += lr * (err * x - reg * y);
                }
            }
        }
        if user_factors.iter().chain(&item_factors).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("funksvd diverged".into()));
        }
        Ok(FunkSvd {
            factors: f,
            users,
            items,
            user_factors,
            item_factors,
        })
    }

    /// `None` when the user or the program was not seen in training.
    pub fn predict(&self, user: UserId, program: ProgramId) -> Option<f64> {
        let u = *self.users.get(&user)?;
        let i = *self.items.get(&program)?;
        let f = self.factors;
        Some(
            self.user_factors[u * f..(u + 1) * f]
                .iter()
                .zip(&self.item_factors[i * f..(i + 1) * f])
                .map(|(a, b)| a * b)
                .sum(),
        )
    }
}
