//! LambdaMART: gradient-boosted regression trees driven by lambda gradients.

mod lambdas;
mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use lambdas::{compute_lambdas, PairWeight, SIGMA};
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, QueryGroup};
use crate::par;
use lambdas::discount;

/// Queries of `(features, label)` documents, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingDataset {
    n_features: usize,
    qids: Vec<u64>,
    /// Query `q` owns rows `offsets[q]..offsets[q + 1]`.
    offsets: Vec<usize>,
    features: Vec<f64>,
    labels: Vec<u8>,
}

impl RankingDataset {
    pub fn new(n_features: usize) -> Self {
        RankingDataset {
            n_features,
            qids: Vec::new(),
            offsets: vec![0],
            features: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn push_query<'a>(&mut self, qid: u64, docs: impl IntoIterator<Item = (&'a [f64], u8)>) -> Result<()> {
        for (x, label) in docs {
            if x.len() != self.n_features {
                return Err(Error::SchemaMismatch {
                    expected: self.n_features,
                    actual: x.len(),
                });
            }
            if label > 1 {
                return Err(Error::Invalid(format!("label {label} is not binary")));
            }
            self.features.extend_from_slice(x);
            self.labels.push(label);
        }
        self.qids.push(qid);
        self.offsets.push(self.labels.len());
        Ok(())
    }

    pub fn from_groups(n_features: usize, groups: &[QueryGroup]) -> Result<Self> {
        let mut d = RankingDataset::new(n_features);
        for g in groups {
            d.push_query(g.qid, g.quadruples.iter().map(|q| (q.features.values(), q.preference)))?;
        }
        Ok(d)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn num_queries(&self) -> usize {
        self.qids.len()
    }

    pub fn num_docs(&self) -> usize {
        self.labels.len()
    }

    pub fn qid(&self, q: usize) -> u64 {
        self.qids[q]
    }

    pub fn rows(&self, q: usize) -> std::ops::Range<usize> {
        self.offsets[q]..self.offsets[q + 1]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.features[r * self.n_features..(r + 1) * self.n_features]
    }

    pub fn label(&self, r: usize) -> u8 {
        self.labels[r]
    }

    pub fn labels(&self, q: usize) -> &[u8] {
        &self.labels[self.rows(q)]
    }

    /// Queries by qid, documents by feature values then label. Fitting on the
    /// canonical form makes the model independent of input order.
    pub fn canonical(&self) -> RankingDataset {
        let mut order: Vec<usize> = (0..self.num_queries()).collect();
        order.sort_by_key(|&q| self.qids[q]);
        let mut out = RankingDataset::new(self.n_features);
        for q in order {
            let mut rows: Vec<usize> = self.rows(q).collect();
            rows.sort_by(|&a, &b| {
                self.row(a)
                    .iter()
                    .zip(self.row(b))
                    .map(|(x, y)| x.total_cmp(y))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(self.labels[a].cmp(&self.labels[b]))
            });
            out.push_query(self.qids[q], rows.into_iter().map(|r| (self.row(r), self.labels[r])))
                .expect("rows already validated");
        }
        out
    }

    /// Keeps queries with at least two documents and both labels present.
    fn trainable(&self) -> RankingDataset {
        let mut out = RankingDataset::new(self.n_features);
        for q in 0..self.num_queries() {
            let labels = self.labels(q);
            let pos = labels.iter().filter(|&&l| l > 0).count();
            if labels.len() >= 2 && pos > 0 && pos < labels.len() {
                out.push_query(self.qids[q], self.rows(q).map(|r| (self.row(r), self.labels[r])))
                    .expect("rows already validated");
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LtrParams {
    pub rounds: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub truncation_k: usize,
    pub seed: u64,
}

impl Default for LtrParams {
    fn default() -> Self {
        LtrParams {
            rounds: 100,
            learning_rate: 0.1,
            max_leaves: 10,
            min_samples_leaf: 50,
            truncation_k: 10,
            seed: 0,
        }
    }
}

impl LtrParams {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return Err(Error::Config("ltr learning_rate must be positive".into()));
        }
        if self.max_leaves < 2 || self.truncation_k == 0 || self.min_samples_leaf == 0 {
            return Err(Error::Config(
                "ltr needs max_leaves >= 2, truncation_k >= 1 and min_samples_leaf >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbmModel {
    pub params: LtrParams,
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
    /// Tie-averaged nDCG@k after each round, starting with the empty model.
    pub train_ndcg: Vec<f64>,
    pub validation_ndcg: Vec<f64>,
}

impl GbmModel {
    pub fn constant(n_features: usize, base_score: f64, params: LtrParams) -> Self {
        GbmModel {
            params,
            n_features,
            base_score,
            learning_rate: params.learning_rate,
            trees: Vec::new(),
            train_ndcg: Vec::new(),
            validation_ndcg: Vec::new(),
        }
    }

    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        self.predict_slice(features.values())
    }

    pub fn predict_slice(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::SchemaMismatch {
                expected: self.n_features,
                actual: x.len(),
            });
        }
        Ok(self.base_score
            + self
                .trees
                .iter()
                .map(|t| self.learning_rate * t.predict(x))
                .sum::<f64>())
    }

    /// Round (0 = empty model) with the best validation nDCG; earliest wins.
    pub fn best_round(&self) -> Option<usize> {
        self.validation_ndcg
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let m: GbmModel = serde_json::from_reader(BufReader::new(file))?;
        if m.trees.iter().filter_map(Tree::max_feature).any(|f| f >= m.n_features) {
            return Err(Error::Invalid(format!(
                "{}: split on a feature beyond the schema",
                path.display()
            )));
        }
        Ok(m)
    }
}

/// Expected nDCG@k when tied scores are ordered uniformly at random.
pub fn tie_averaged_ndcg(scores: &[f64], labels: &[u8], k: usize) -> Option<f64> {
    let relevant = labels.iter().filter(|&&l| l > 0).count();
    if relevant == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut dcg = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let hits = order[start..end].iter().filter(|&&i| labels[i] > 0).count();
        let slots: f64 = (start..end).map(|p| discount(p, k)).sum();
        dcg += hits as f64 / (end - start) as f64 * slots;
        start = end;
    }
    let ideal: f64 = (0..relevant).map(|p| discount(p, k)).sum();
    Some(dcg / ideal)
}

/// Mean tie-averaged nDCG@k over queries with at least one relevant document.
pub fn mean_ndcg(data: &RankingDataset, scores: &[f64], k: usize) -> f64 {
    let per_query: Vec<Option<f64>> = (0..data.num_queries())
        .map(|q| {
            let r = data.rows(q);
            tie_averaged_ndcg(&scores[r.clone()], &data.labels[r], k)
        })
        .collect();
    let vals: Vec<f64> = per_query.into_iter().flatten().collect();
    if vals.is_empty() {
        0.0
    } else {
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Boosts regression trees on lambda gradients. `validation` is scored after
/// every round for the report in [`GbmModel::validation_ndcg`]; it does not
/// stop training.
pub fn fit(train: &RankingDataset, validation: &RankingDataset, params: LtrParams) -> Result<GbmModel> {
    params.validate()?;
    if train.num_queries() == 0 {
        return Err(Error::Invalid("empty training set".into()));
    }
    if validation.n_features != train.n_features && validation.num_queries() > 0 {
        return Err(Error::SchemaMismatch {
            expected: train.n_features,
            actual: validation.n_features,
        });
    }
    let k = params.truncation_k;
    let data = train.canonical().trainable();
    let valid = validation.canonical();
    let mut model = GbmModel::constant(train.n_features, 0.0, params);
    let mut scores = vec![0.0; data.num_docs()];
    let mut vscores = vec![0.0; valid.num_docs()];
    model.train_ndcg.push(mean_ndcg(&data, &scores, k));
    model.validation_ndcg.push(mean_ndcg(&valid, &vscores, k));
    if data.num_queries() == 0 {
        log::warn!("no training query has both labels; returning a constant model");
        return Ok(model);
    }

    let rows: Vec<u32> = (0..data.num_docs() as u32).collect();
    let presorted = tree::Presorted::new(&data.features, data.n_features, &rows);
    for _ in 0..params.rounds {
        let per_query = par::map_range(data.num_queries(), |q| {
            let r = data.rows(q);
            compute_lambdas(&scores[r.clone()], &data.labels[r], k, PairWeight::DeltaNdcg)
        });
        let mut g = Vec::with_capacity(data.num_docs());
        let mut h = Vec::with_capacity(data.num_docs());
        for (l, hh) in per_query {
            g.extend(l);
            h.extend(hh);
        }
        let (mut t, leaves) = tree::grow(&presorted, &g, params.max_leaves, params.min_samples_leaf);
        for (node, leaf_rows) in &leaves {
            let sg: f64 = leaf_rows.iter().map(|&r| g[r as usize]).sum();
            let sh: f64 = leaf_rows.iter().map(|&r| h[r as usize]).sum();
            let value = sg / (sh + 1e-9);
            t.nodes[*node] = Node::Leaf { value };
            for &r in leaf_rows {
                scores[r as usize] += params.learning_rate * value;
            }
        }
        let vdelta = par::map_range(valid.num_docs(), |r| t.predict(valid.row(r)));
        for (s, d) in vscores.iter_mut().zip(vdelta) {
            *s += params.learning_rate * d;
        }
        model.trees.push(t);
        model.train_ndcg.push(mean_ndcg(&data, &scores, k));
        model.validation_ndcg.push(mean_ndcg(&valid, &vscores, k));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Feature 0 equals the label; features 1-2 are noise.
    fn separable(seed: u64, queries: usize) -> RankingDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = RankingDataset::new(3);
        for q in 0..queries {
            let docs: Vec<(Vec<f64>, u8)> = (0..20)
                .map(|i| {
                    let y = u8::from(i % 7 == 0);
                    (vec![f64::from(y), rng.random::<f64>(), rng.random::<f64>()], y)
                })
                .collect();
            d.push_query(q as u64, docs.iter().map(|(x, y)| (x.as_slice(), *y)))
                .unwrap();
        }
        d
    }

    fn small_params(rounds: usize) -> LtrParams {
        LtrParams {
            rounds,
            min_samples_leaf: 5,
            ..Default::default()
        }
    }

    #[test]
    fn separable_data_is_ranked_perfectly_within_ten_rounds() {
        let d = separable(1, 30);
        let m = fit(&d, &d, small_params(10)).unwrap();
        assert!(m.train_ndcg.iter().any(|&v| (v - 1.0).abs() < 1e-12));
        for q in 0..d.num_queries() {
            let s: Vec<f64> = d.rows(q).map(|r| m.predict_slice(d.row(r)).unwrap()).collect();
            let labels = d.labels(q);
            let min_pos = (0..s.len())
                .filter(|&i| labels[i] == 1)
                .map(|i| s[i])
                .fold(f64::INFINITY, f64::min);
            let max_neg = (0..s.len())
                .filter(|&i| labels[i] == 0)
                .map(|i| s[i])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(min_pos > max_neg);
        }
    }

    #[test]
    fn zero_rounds_is_constant_with_random_expectation() {
        let d = separable(2, 5);
        let m = fit(&d, &d, small_params(0)).unwrap();
        assert!(m.trees.is_empty());
        assert_eq!(m.predict_slice(&[1.0, 0.0, 0.0]).unwrap(), m.base_score);
        // 3 relevant of 20 in one tie group: each slot holds 3/20 expected gain
        let slots: f64 = (0..10).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
        let ideal: f64 = (0..3).map(|p| 1.0 / ((p + 2) as f64).log2()).sum();
        assert!((m.validation_ndcg[0] - 0.15 * slots / ideal).abs() < 1e-12);
    }

    #[test]
    fn prediction_is_sum_of_traced_leaves() {
        let d = separable(3, 10);
        let m = fit(&d, &d, small_params(5)).unwrap();
        let x = d.row(4);
        let mut manual = m.base_score;
        for t in &m.trees {
            let mut at = 0;
            loop {
                match &t.nodes[at] {
                    Node::Leaf { value } => {
                        manual += m.learning_rate * value;
                        break;
                    }
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        at = if x[*feature] <= *threshold { *left } else { *right };
                    }
                }
            }
        }
        assert!((manual - m.predict_slice(x).unwrap()).abs() < 1e-12);
        assert!(m.predict_slice(&[0.0]).is_err());
    }

    #[test]
    fn model_ignores_query_and_document_order() {
        let d = separable(4, 12);
        let mut shuffled = RankingDataset::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut qs: Vec<usize> = (0..d.num_queries()).collect();
        qs.reverse();
        for q in qs {
            let mut rows: Vec<usize> = d.rows(q).collect();
            for i in (1..rows.len()).rev() {
                rows.swap(i, rng.random_range(0..=i));
            }
            shuffled
                .push_query(d.qid(q), rows.into_iter().map(|r| (d.row(r), d.label(r))))
                .unwrap();
        }
        let a = fit(&d, &d, small_params(8)).unwrap();
        let b = fit(&shuffled, &shuffled, small_params(8)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_labels_give_base_model() {
        let mut d = RankingDataset::new(1);
        d.push_query(0, [(&[1.0][..], 0), (&[2.0][..], 0)]).unwrap();
        let m = fit(&d, &d, small_params(5)).unwrap();
        assert!(m.trees.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let d = separable(5, 6);
        let m = fit(&d, &d, small_params(3)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save(&p).unwrap();
        assert_eq!(GbmModel::load(&p).unwrap(), m);
    }

    #[test]
    fn tie_averaging() {
        assert_eq!(tie_averaged_ndcg(&[1.0, 0.0], &[1, 0], 10), Some(1.0));
        assert_eq!(tie_averaged_ndcg(&[0.0, 0.0], &[0, 0], 10), None);
        let v = tie_averaged_ndcg(&[0.0, 0.0], &[0, 1], 10).unwrap();
        assert!((v - (0.5 + 0.5 / 3f64.log2())).abs() < 1e-15);
    }
}
