//! GreedyRec: grows a recommendation list one item at a time, each time
//! adding the candidate that maximizes a weighted sum of accuracy, diversity,
//! novelty and serendipity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::ProgramId;
use crate::error::{Error, Result};
use crate::metrics::{distance, ild_at_k, DistanceKey};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveWeights {
    pub accuracy: f64,
    pub diversity: f64,
    pub novelty: f64,
    pub serendipity: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            accuracy: 0.5,
            diversity: 0.25,
            novelty: 0.25,
            serendipity: 0.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.accuracy, self.diversity, self.novelty, self.serendipity];
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config(format!(
                "objective weights must be finite and nonnegative, got {self}"
            )));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::Config("at least one objective weight must be positive".into()));
        }
        Ok(())
    }

    /// `w_acc·acc + w_div·div + w_nov·nov + w_ser·ser`.
    pub fn combine(&self, accuracy: f64, diversity: f64, novelty: f64, serendipity: f64) -> f64 {
        self.accuracy * accuracy + self.diversity * diversity + self.novelty * novelty + self.serendipity * serendipity
    }
}

impl fmt::Display for ObjectiveWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.accuracy, self.diversity, self.novelty, self.serendipity
        )
    }
}

impl FromStr for ObjectiveWeights {
    type Err = String;

    /// `w_acc,w_div,w_nov,w_ser`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad weight {p:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        let [accuracy, diversity, novelty, serendipity] = parts[..] else {
            return Err(format!("expected four comma-separated weights, got {s:?}"));
        };
        let w = ObjectiveWeights {
            accuracy,
            diversity,
            novelty,
            serendipity,
        };
        w.validate().map_err(|e| e.to_string())?;
        Ok(w)
    }
}

/// Where the accuracy term's relevance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracySource {
    /// Model scores min-max normalized over the candidates; usable before
    /// any viewing is known.
    ModelScore,
    /// Binary judgments, for offline reporting.
    GroundTruth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub weights: ObjectiveWeights,
    pub k: usize,
    pub accuracy_source: AccuracySource,
}

/// A candidate with everything the objective reads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Item {
    pub program: ProgramId,
    pub score: f64,
    pub key: DistanceKey,
    /// Normalized self-information of the program.
    pub novelty: f64,
    /// Mean distance to the user's history (1 for an empty history).
    pub unexpectedness: f64,
    pub relevant: bool,
}

fn discount(position: usize) -> f64 {
    1.0 / ((position + 2) as f64).log2()
}

/// Per-candidate gains and the ideal DCG@k they allow.
fn gains(candidates: &[Item], source: AccuracySource, k: usize) -> (Vec<f64>, f64) {
    let g: Vec<f64> = match source {
        AccuracySource::GroundTruth => candidates.iter().map(|c| if c.relevant { 1.0 } else { 0.0 }).collect(),
        AccuracySource::ModelScore => {
            let lo = candidates.iter().map(|c| c.score).fold(f64::INFINITY, f64::min);
            let hi = candidates.iter().map(|c| c.score).fold(f64::NEG_INFINITY, f64::max);
            candidates
                .iter()
                .map(|c| if hi > lo { (c.score - lo) / (hi - lo) } else { 1.0 })
                .collect()
        }
    };
    let mut sorted = g.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let ideal = sorted.iter().take(k).enumerate().map(|(p, v)| v * discount(p)).sum();
    (g, ideal)
}

/// Objective value of `list` (indices into `candidates`), truncated to `k`.
pub fn objective_eval(list: &[usize], candidates: &[Item], spec: &ObjectiveSpec) -> f64 {
    let (g, ideal) = gains(candidates, spec.accuracy_source, spec.k);
    let top = &list[..list.len().min(spec.k)];
    if top.is_empty() {
        return 0.0;
    }
    let acc = if ideal > 0.0 {
        top.iter().enumerate().map(|(p, &i)| g[i] * discount(p)).sum::<f64>() / ideal
    } else {
        0.0
    };
    let keys: Vec<DistanceKey> = top.iter().map(|&i| candidates[i].key).collect();
    let div = ild_at_k(&keys, spec.k);
    let n = top.len() as f64;
    let nov = top.iter().map(|&i| candidates[i].novelty).sum::<f64>() / n;
    let ser = top.iter().map(|&i| candidates[i].unexpectedness).sum::<f64>() / n;
    spec.weights.combine(acc, div, nov, ser)
}

/// Greedy list construction. Continues while candidates remain and the list
/// is shorter than `k`; argmax ties go to the higher model score, then the
/// lower program id. Returns indices into `candidates`.
pub fn greedy_rec(candidates: &[Item], spec: &ObjectiveSpec) -> Vec<usize> {
    let k = spec.k.min(candidates.len());
    let (g, ideal) = gains(candidates, spec.accuracy_source, spec.k);
    let w = spec.weights;
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut taken = vec![false; candidates.len()];
    // running sums for the current list
    let (mut dcg, mut pair_sum, mut nov_sum, mut ser_sum) = (0.0, 0.0, 0.0, 0.0);
    // distance from every candidate to the current list
    let mut dist_to_list = vec![0.0; candidates.len()];

    while chosen.len() < k {
        let len = chosen.len();
        let pairs = ((len + 1) * len / 2) as f64;
        let mut best: Option<(f64, usize)> = None;
        for (i, c) in candidates.iter().enumerate() {
            if taken[i] {
                continue;
            }
            let acc = if ideal > 0.0 {
                (dcg + g[i] * discount(len)) / ideal
            } else {
                0.0
            };
            let div = if len == 0 {
                0.0
            } else {
                (pair_sum + dist_to_list[i]) / pairs
            };
            let n = (len + 1) as f64;
            let value = w.combine(acc, div, (nov_sum + c.novelty) / n, (ser_sum + c.unexpectedness) / n);
            let better = match best {
                None => true,
                Some((bv, bi)) => {
                    let b = &candidates[bi];
                    value > bv || (value == bv && (c.score > b.score || (c.score == b.score && c.program < b.program)))
                }
            };
            if better {
                best = Some((value, i));
            }
        }
        let Some((_, pick)) = best else { break };
        taken[pick] = true;
        dcg += g[pick] * discount(len);
        pair_sum += dist_to_list[pick];
        nov_sum += candidates[pick].novelty;
        ser_sum += candidates[pick].unexpectedness;
        for (i, c) in candidates.iter().enumerate() {
            if !taken[i] {
                dist_to_list[i] += distance(&c.key, &candidates[pick].key);
            }
        }
        chosen.push(pick);
    }
    chosen
}
