//! Weighted regularized matrix factorization for implicit feedback, fitted by
//! alternating least squares.
//!
//! Every `(user, item)` pair enters the objective. Observed pairs with
//! `r > 0` have preference 1 and confidence `1 + alpha * r`; all other pairs
//! have preference 0 and confidence 1. Each half-sweep solves
//! `(YᵀY + Yᵀ(Cᵤ − I)Y + λI) xᵤ = YᵀCᵤpᵤ` exactly per row, so its cost grows
//! with the number of observed entries rather than with `|U| × |I|`.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{ProgramId, UserId};
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WrmfParams {
    pub factors: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Use `r = 1` for every observed pair instead of its count.
    pub binary: bool,
}

impl Default for WrmfParams {
    fn default() -> Self {
        WrmfParams {
            factors: 32,
            alpha: 40.0,
            lambda: 0.1,
            iterations: 15,
            seed: 0,
            binary: false,
        }
    }
}

impl WrmfParams {
    pub fn validate(&self) -> Result<()> {
        if self.factors == 0 {
            return Err(Error::Config("wrmf factors must be at least 1".into()));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err(Error::Config("wrmf alpha and lambda must be positive".into()));
        }
        Ok(())
    }
}

/// Fitted factors. Rows follow the ascending order of `users` / `items`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfModel {
    pub factors: usize,
    pub alpha: f64,
    pub lambda: f64,
    users: Vec<UserId>,
    items: Vec<ProgramId>,
    /// Row-major `|users| × factors`.
    user_factors: Vec<f64>,
    /// Row-major `|items| × factors`.
    item_factors: Vec<f64>,
    #[serde(skip)]
    user_index: HashMap<UserId, usize>,
    #[serde(skip)]
    item_index: HashMap<ProgramId, usize>,
}

/// Sparse observations, deduplicated and summed, with `r > 0`.
struct Observed {
    users: Vec<UserId>,
    items: Vec<ProgramId>,
    /// Per user: `(item row, r)`.
    by_user: Vec<Vec<(usize, f64)>>,
    /// Per item: `(user row, r)`.
    by_item: Vec<Vec<(usize, f64)>>,
}

fn observe(interactions: &[(UserId, ProgramId, f64)], binary: bool) -> Result<Observed> {
    let mut summed: BTreeMap<(UserId, ProgramId), f64> = BTreeMap::new();
    for &(u, p, r) in interactions {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::Invalid(format!("interaction strength {r} for ({u}, {p})")));
        }
        *summed.entry((u, p)).or_default() += r;
    }
    let mut users: Vec<UserId> = summed.keys().map(|k| k.0).collect();
    users.dedup();
    let mut items: Vec<ProgramId> = summed.keys().map(|k| k.1).collect();
    items.sort_unstable();
    items.dedup();
    let ui: HashMap<UserId, usize> = users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
    let ii: HashMap<ProgramId, usize> = items.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut by_user = vec![Vec::new(); users.len()];
    let mut by_item = vec![Vec::new(); items.len()];
    for ((u, p), r) in summed {
        if r > 0.0 {
            let r = if binary { 1.0 } else { r };
            by_user[ui[&u]].push((ii[&p], r));
            by_item[ii[&p]].push((ui[&u], r));
        }
    }
    Ok(Observed {
        users,
        items,
        by_user,
        by_item,
    })
}

fn gram(rows: &[f64], f: usize) -> DMatrix<f64> {
    let n = rows.len() / f;
    let m = DMatrix::from_row_slice(n, f, rows);
    m.transpose() * m
}

/// Solves every row of one side given the other side's factors.
fn solve_side(other: &[f64], f: usize, observed: &[Vec<(usize, f64)>], alpha: f64, lambda: f64) -> Result<Vec<f64>> {
    let base = gram(other, f) + DMatrix::identity(f, f) * lambda;
    let rows: Vec<Result<Vec<f64>>> = par::map(observed, |obs| {
        let mut a = base.clone();
        let mut b = DVector::zeros(f);
        for &(j, r) in obs {
            let y = DVector::from_row_slice(&other[j * f..(j + 1) * f]);
            let c = 1.0 + alpha * r;
            a += (&y * y.transpose()) * (c - 1.0);
            b += &y * c;
        }
        let chol = a
            .cholesky()
            .ok_or_else(|| Error::Numerical("normal equations not positive definite".into()))?;
        Ok(chol.solve(&b).iter().copied().collect())
    });
    let mut out = Vec::with_capacity(observed.len() * f);
    for r in rows {
        out.extend(r?);
    }
    Ok(out)
}

impl MfModel {
    /// Builds a model from explicit factor rows, ascending by id.
    pub fn from_factors(
        users: Vec<UserId>,
        items: Vec<ProgramId>,
        factors: usize,
        user_factors: Vec<f64>,
        item_factors: Vec<f64>,
        alpha: f64,
        lambda: f64,
    ) -> Result<Self> {
        if factors == 0 || user_factors.len() != users.len() * factors || item_factors.len() != items.len() * factors {
            return Err(Error::Invalid("factor matrix dimensions do not match".into()));
        }
        let mut m = MfModel {
            factors,
            alpha,
            lambda,
            users,
            items,
            user_factors,
            item_factors,
            user_index: HashMap::new(),
            item_index: HashMap::new(),
        };
        m.reindex()?;
        Ok(m)
    }

    fn reindex(&mut self) -> Result<()> {
        if !self.users.windows(2).all(|w| w[0] < w[1]) || !self.items.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Invalid("factor ids must be strictly ascending".into()));
        }
        self.user_index = self.users.iter().enumerate().map(|(i, u)| (*u, i)).collect();
        self.item_index = self.items.iter().enumerate().map(|(i, p)| (*p, i)).collect();
        Ok(())
    }

    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    pub fn items(&self) -> &[ProgramId] {
        &self.items
    }

    pub fn user_factors(&self) -> &[f64] {
        &self.user_factors
    }

    pub fn item_factors(&self) -> &[f64] {
        &self.item_factors
    }

    /// Dot product of the factor rows; `None` if either id is unknown.
    pub fn score(&self, user: UserId, program: ProgramId) -> Option<f64> {
        let u = *self.user_index.get(&user)?;
        let i = *self.item_index.get(&program)?;
        let f = self.factors;
        Some(
            self.user_factors[u * f..(u + 1) * f]
                .iter()
                .zip(&self.item_factors[i * f..(i + 1) * f])
                .map(|(a, b)| a * b)
                .sum(),
        )
    }

    /// Dense scoring contract: unknown users or items score 0.
    pub fn predict(&self, user: UserId, program: ProgramId) -> f64 {
        self.score(user, program).unwrap_or(0.0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut m: MfModel = serde_json::from_reader(BufReader::new(file))?;
        if m.user_factors.len() != m.users.len() * m.factors || m.item_factors.len() != m.items.len() * m.factors {
            return Err(Error::Invalid(format!(
                "{}: factor dimensions do not match",
                path.display()
            )));
        }
        m.reindex()?;
        Ok(m)
    }
}

pub fn fit(interactions: &[(UserId, ProgramId, f64)], params: WrmfParams) -> Result<MfModel> {
    fit_traced(interactions, params).map(|(m, _)| m)
}

/// Fits and also returns the loss at initialization and after every
/// half-sweep.
pub fn fit_traced(interactions: &[(UserId, ProgramId, f64)], params: WrmfParams) -> Result<(MfModel, Vec<f64>)> {
    params.validate()?;
    if interactions.is_empty() {
        return Err(Error::Invalid("wrmf needs at least one interaction".into()));
    }
    let obs = observe(interactions, params.binary)?;
    let f = params.factors;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let user_factors: Vec<f64> = (0..obs.users.len() * f).map(|_| rng.random_range(0.0..0.1)).collect();
    let item_factors: Vec<f64> = (0..obs.items.len() * f).map(|_| rng.random_range(0.0..0.1)).collect();
    let mut model = MfModel::from_factors(
        obs.users.clone(),
        obs.items.clone(),
        f,
        user_factors,
        item_factors,
        params.alpha,
        params.lambda,
    )?;
    let mut trace = vec![observed_loss(&model, &obs)];
    for _ in 0..params.iterations {
        model.user_factors = solve_side(&model.item_factors, f, &obs.by_user, params.alpha, params.lambda)?;
        trace.push(observed_loss(&model, &obs));
        model.item_factors = solve_side(&model.user_factors, f, &obs.by_item, params.alpha, params.lambda)?;
        trace.push(observed_loss(&model, &obs));
    }
    if let Some(bad) = trace.iter().find(|l| !l.is_finite()) {
        return Err(Error::Numerical(format!("wrmf loss became {bad}")));
    }
    Ok((model, trace))
}

fn observed_loss(model: &MfModel, obs: &Observed) -> f64 {
    let f = model.factors;
    let xtx = gram(&model.user_factors, f);
    let yty = gram(&model.item_factors, f);
    // Σ over all pairs of s², by the trace identity
    let mut total: f64 = xtx.component_mul(&yty).sum();
    for (u, row) in obs.by_user.iter().enumerate() {
        let x = &model.user_factors[u * f..(u + 1) * f];
        for &(i, r) in row {
            let y = &model.item_factors[i * f..(i + 1) * f];
            let s: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
            let c = 1.0 + model.alpha * r;
            total += c * (1.0 - s) * (1.0 - s) - s * s;
        }
    }
    let norms: f64 = model
        .user_factors
        .iter()
        .chain(&model.item_factors)
        .map(|v| v * v)
        .sum();
    total + model.lambda * norms
}

/// The weighted objective over every `(user, item)` pair known to the model.
/// Interactions with ids outside the model are ignored.
pub fn loss(model: &MfModel, interactions: &[(UserId, ProgramId, f64)], binary: bool) -> Result<f64> {
    let known: Vec<(UserId, ProgramId, f64)> = interactions
        .iter()
        .copied()
        .filter(|(u, p, _)| model.user_index.contains_key(u) && model.item_index.contains_key(p))
        .collect();
    let summed = observe(&known, binary)?;
    let by_user = model
        .users
        .iter()
        .map(|u| {
            let Ok(k) = summed.users.binary_search(u) else {
                return Vec::new();
            };
            summed.by_user[k]
                .iter()
                .map(|&(i, r)| (model.item_index[&summed.items[i]], r))
                .collect()
        })
        .collect();
    let obs = Observed {
        users: model.users.clone(),
        items: model.items.clone(),
        by_user,
        by_item: Vec::new(),
    };
    Ok(observed_loss(model, &obs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids_u(n: u64) -> Vec<UserId> {
        (0..n).map(UserId).collect()
    }

    fn ids_p(n: u64) -> Vec<ProgramId> {
        (0..n).map(ProgramId).collect()
    }

    #[test]
    fn zero_factors_loss_is_observed_confidence() {
        let m = MfModel::from_factors(ids_u(2), ids_p(2), 1, vec![0.0; 2], vec![0.0; 2], 40.0, 0.1).unwrap();
        let inter = [(UserId(0), ProgramId(0), 2.0), (UserId(1), ProgramId(1), 1.0)];
        let l = loss(&m, &inter, false).unwrap();
        assert!((l - ((1.0 + 80.0) + (1.0 + 40.0))).abs() < 1e-12);
    }

    #[test]
    fn unit_factors_predict_one_and_unknown_zero() {
        let m = MfModel::from_factors(ids_u(1), ids_p(1), 2, vec![0.6, 0.8], vec![0.6, 0.8], 1.0, 0.1).unwrap();
        assert!((m.predict(UserId(0), ProgramId(0)) - 1.0).abs() < 1e-15);
        assert_eq!(m.predict(UserId(0), ProgramId(5)), 0.0);
        assert_eq!(m.predict(UserId(5), ProgramId(0)), 0.0);
    }

    #[test]
    fn zero_iterations_keeps_initialization() {
        let inter = [(UserId(0), ProgramId(0), 1.0), (UserId(1), ProgramId(1), 1.0)];
        let params = WrmfParams {
            factors: 3,
            iterations: 0,
            seed: 9,
            ..Default::default()
        };
        let m = fit(&inter, params).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let expected: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..0.1)).collect();
        assert_eq!(m.user_factors(), &expected[..]);
        assert!(m
            .user_factors()
            .iter()
            .chain(m.item_factors())
            .all(|v| (0.0..0.1).contains(v)));
    }

    #[test]
    fn trace_matches_public_loss() {
        let inter: Vec<_> = (0..6).map(|u| (UserId(u), ProgramId(u % 3), 1.0 + u as f64)).collect();
        let (m, trace) = fit_traced(
            &inter,
            WrmfParams {
                factors: 2,
                iterations: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let direct = loss(&m, &inter, false).unwrap();
        assert!((trace.last().unwrap() - direct).abs() <= 1e-9 * direct);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-9));
        }
    }

    /// Loss of a 2 × 2 instance with f = 1, written out pair by pair.
    fn loss_2x2(x: [f64; 2], y: [f64; 2], r: &[[f64; 2]; 2], alpha: f64, lambda: f64) -> f64 {
        let mut total = 0.0;
        for u in 0..2 {
            for i in 0..2 {
                let p = if r[u][i] > 0.0 { 1.0 } else { 0.0 };
                let c = 1.0 + alpha * r[u][i];
                total += c * (p - x[u] * y[i]).powi(2);
            }
        }
        total + lambda * (x[0] * x[0] + x[1] * x[1] + y[0] * y[0] + y[1] * y[1])
    }

    #[test]
    fn half_step_matches_grid_search() {
        let r = [[1.0, 0.0], [2.0, 1.0]];
        let (alpha, lambda) = (2.0, 0.1);
        let y = [0.7, 0.3];
        let by_user = vec![vec![(0, 1.0)], vec![(0, 2.0), (1, 1.0)]];
        let x = solve_side(&y, 1, &by_user, alpha, lambda).unwrap();
        for u in 0..2 {
            // loss separates over users once y is fixed
            let row = |xu: f64| {
                let mut xs = [0.0, 0.0];
                xs[u] = xu;
                loss_2x2(xs, y, &r, alpha, lambda) - loss_2x2([0.0, 0.0], y, &r, alpha, lambda)
            };
            let (best, _) = (-300..=300)
                .map(|k| k as f64 * 0.01)
                .map(|v| (v, row(v)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            assert!((best - x[u]).abs() <= 0.01, "user {u}: grid {best} vs solved {}", x[u]);
            assert!(row(x[u]) <= row(best) + 1e-12);
        }
    }

    #[test]
    fn converged_loss_beats_coarse_grid() {
        let r = [[1.0, 0.0], [2.0, 1.0]];
        let (alpha, lambda) = (2.0, 0.1);
        let inter = [
            (UserId(0), ProgramId(0), 1.0),
            (UserId(1), ProgramId(0), 2.0),
            (UserId(1), ProgramId(1), 1.0),
        ];
        let params = WrmfParams {
            factors: 1,
            alpha,
            lambda,
            iterations: 200,
            seed: 1,
            binary: false,
        };
        let m = fit(&inter, params).unwrap();
        let als = loss(&m, &inter, false).unwrap();
        let grid: Vec<f64> = (0..=30).map(|k| k as f64 * 0.05).collect();
        let mut best = f64::INFINITY;
        for &a in &grid {
            for &b in &grid {
                for &c in &grid {
                    for &d in &grid {
                        best = best.min(loss_2x2([a, b], [c, d], &r, alpha, lambda));
                    }
                }
            }
        }
        assert!(als <= best + 1e-9, "als {als} grid {best}");
        let hand = loss_2x2(
            [m.user_factors()[0], m.user_factors()[1]],
            [m.item_factors()[0], m.item_factors()[1]],
            &r,
            alpha,
            lambda,
        );
        assert!((als - hand).abs() < 1e-12);
    }

    #[test]
    fn save_load_round_trip() {
        let inter: Vec<_> = (0..5).map(|u| (UserId(u), ProgramId(u % 2), 1.0)).collect();
        let m = fit(
            &inter,
            WrmfParams {
                factors: 2,
                iterations: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("wrmf.json");
        m.save(&path).unwrap();
        let back = MfModel::load(&path).unwrap();
        assert_eq!(
            back.predict(UserId(3), ProgramId(1)),
            m.predict(UserId(3), ProgramId(1))
        );
        assert_eq!(back, m);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let inter = [(UserId(0), ProgramId(0), 1.0)];
        assert!(fit(
            &inter,
            WrmfParams {
                lambda: 0.0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(fit(
            &inter,
            WrmfParams {
                factors: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(fit(&[], WrmfParams::default()).is_err());
    }
}
