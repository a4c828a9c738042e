//! Evaluation metrics: nDCG (accuracy), ILD (diversity), MSI (novelty),
//! Unexpectedness (serendipity), and the program distance shared by ILD and
//! Unexpectedness.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::domain::{Category, ChannelId, ProgramId};
use crate::ingestion::Catalog;

/// The attributes the distance function compares. `channel` is the channel
/// of the airing that put the program in front of the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DistanceKey {
    pub category: Category,
    pub subcategory: u32,
    pub channel: ChannelId,
}

impl DistanceKey {
    pub fn of(catalog: &Catalog, program: ProgramId, channel: ChannelId) -> Option<Self> {
        Some(DistanceKey {
            category: catalog.program(program)?.category,
            subcategory: catalog.subcategory_id(program)?,
            channel,
        })
    }
}

/// `1 - (cat + subcat + channel) / 3`, each indicator 1 on equality.
pub fn distance(i: &DistanceKey, j: &DistanceKey) -> f64 {
    let same = u8::from(i.category == j.category)
        + u8::from(i.subcategory == j.subcategory)
        + u8::from(i.channel == j.channel);
    // (3 - same) / 3 rather than 1 - same / 3 lands exactly on 1/3 and 2/3
    f64::from(3 - same) / 3.0
}

fn discount(position: usize) -> f64 {
    // position is 0-based; log2(rank + 1) with rank = position + 1
    1.0 / ((position + 2) as f64).log2()
}

/// Ideal DCG for `relevant` binary-relevant items at cutoff `k`.
pub fn ideal_dcg(relevant: usize, k: usize) -> f64 {
    (0..relevant.min(k)).map(discount).sum()
}

/// Binary-relevance nDCG@k. `None` when `truth` is empty: the session has
/// no answer and is left out of averages.
pub fn ndcg_at_k(list: &[ProgramId], truth: &HashSet<ProgramId>, k: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let dcg: f64 = list
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, p)| truth.contains(p))
        .map(|(pos, _)| discount(pos))
        .sum();
    Some(dcg / ideal_dcg(truth.len(), k))
}

/// nDCG@k with real-valued gains; `ideal` is the best achievable DCG@k.
pub fn graded_ndcg(gains: &[f64], ideal: f64, k: usize) -> f64 {
    if ideal <= 0.0 {
        return 0.0;
    }
    gains
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, g)| g * discount(pos))
        .sum::<f64>()
        / ideal
}

/// Mean pairwise distance in the top-k; 0 for lists shorter than two.
pub fn ild_at_k(list: &[DistanceKey], k: usize) -> f64 {
    let top = &list[..list.len().min(k)];
    if top.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for (a, i) in top.iter().enumerate() {
        for j in &top[a + 1..] {
            sum += distance(i, j);
        }
    }
    let pairs = top.len() * (top.len() - 1) / 2;
    sum / pairs as f64
}

/// Number of users who watched a program.
pub trait Audience {
    fn audience(&self, program: ProgramId) -> u32;
}

impl Audience for HashMap<ProgramId, u32> {
    fn audience(&self, program: ProgramId) -> u32 {
        self.get(&program).copied().unwrap_or(0)
    }
}

/// Self-information of one item normalized to [0, 1]:
/// `log2(N / max(1, audience)) / log2(N)`. Unwatched items score 1.
pub fn novelty(audience: u32, total_users: usize) -> f64 {
    if audience == 0 {
        return 1.0;
    }
    if total_users <= 1 {
        return 0.0;
    }
    let n = total_users as f64;
    let a = f64::from(audience).min(n);
    (n / a).log2() / n.log2()
}

/// Mean normalized self-information over the top-k; 0 for an empty list.
pub fn msi_at_k(list: &[ProgramId], audience: &impl Audience, k: usize, total_users: usize) -> f64 {
    let top = &list[..list.len().min(k)];
    if top.is_empty() {
        return 0.0;
    }
    top.iter()
        .map(|&p| novelty(audience.audience(p), total_users))
        .sum::<f64>()
        / top.len() as f64
}

/// Mean distance between recommended items and the user's history. An empty
/// history makes everything unexpected (1); an empty list scores 0.
pub fn unexpectedness_at_k(list: &[DistanceKey], history: &[DistanceKey], k: usize) -> f64 {
    let top = &list[..list.len().min(k)];
    if top.is_empty() {
        return 0.0;
    }
    if history.is_empty() {
        return 1.0;
    }
    let sum: f64 = top.iter().map(|i| mean_distance(i, history)).sum();
    sum / top.len() as f64
}

/// Mean distance from one item to every history item; 1 for empty history.
pub fn mean_distance(item: &DistanceKey, history: &[DistanceKey]) -> f64 {
    if history.is_empty() {
        return 1.0;
    }
    history.iter().map(|h| distance(item, h)).sum::<f64>() / history.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(c: usize, s: u32, ch: u64) -> DistanceKey {
        DistanceKey {
            category: Category::ALL[c],
            subcategory: s,
            channel: ChannelId(ch),
        }
    }

    fn ids(xs: &[u64]) -> Vec<ProgramId> {
        xs.iter().map(|&x| ProgramId(x)).collect()
    }

    fn set(xs: &[u64]) -> HashSet<ProgramId> {
        ids(xs).into_iter().collect()
    }

    #[test]
    fn distance_examples() {
        assert_eq!(distance(&key(0, 0, 0), &key(0, 0, 0)), 0.0);
        assert_eq!(distance(&key(0, 0, 0), &key(1, 1, 1)), 1.0);
        assert!((distance(&key(0, 0, 0), &key(0, 1, 1)) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ndcg_examples() {
        assert_eq!(ndcg_at_k(&ids(&[1, 2, 3]), &set(&[1, 2, 3]), 3), Some(1.0));
        let v = ndcg_at_k(&ids(&[9, 1, 8, 7, 6]), &set(&[1]), 5).unwrap();
        assert!((v - 1.0 / 3f64.log2()).abs() < 1e-15);
        assert!((v - 0.6309).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&ids(&[5, 6]), &set(&[1]), 5), Some(0.0));
        assert_eq!(ndcg_at_k(&ids(&[5, 6]), &set(&[]), 5), None);
    }

    #[test]
    fn ndcg_ignores_tail_beyond_k() {
        let a = ndcg_at_k(&ids(&[1, 5, 6, 7, 8]), &set(&[1, 2]), 2);
        let b = ndcg_at_k(&ids(&[1, 5, 8, 7, 6]), &set(&[1, 2]), 2);
        assert_eq!(a, b);
    }

    #[test]
    fn ild_examples() {
        let same = [key(0, 0, 0); 4];
        assert_eq!(ild_at_k(&same, 4), 0.0);
        let apart = [key(0, 0, 0), key(1, 1, 1), key(2, 2, 2)];
        assert_eq!(ild_at_k(&apart, 3), 1.0);
        // pair distances {1, 1, 2/3}
        let mixed = [key(0, 0, 0), key(1, 1, 1), key(1, 2, 2)];
        assert!((ild_at_k(&mixed, 3) - 8.0 / 9.0).abs() < 1e-15);
        assert_eq!(ild_at_k(&mixed, 1), 0.0);
    }

    #[test]
    fn msi_examples() {
        let everyone: HashMap<ProgramId, u32> = [(ProgramId(1), 8), (ProgramId(2), 8)].into();
        assert_eq!(msi_at_k(&ids(&[1, 2]), &everyone, 2, 8), 0.0);
        let nobody: HashMap<ProgramId, u32> = HashMap::new();
        assert_eq!(msi_at_k(&ids(&[3]), &nobody, 1, 8), 1.0);
        let two: HashMap<ProgramId, u32> = [(ProgramId(1), 2)].into();
        assert!((msi_at_k(&ids(&[1]), &two, 1, 8) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn unexpectedness_examples() {
        let h = [key(0, 0, 0), key(0, 0, 0)];
        assert_eq!(unexpectedness_at_k(&[key(0, 0, 0)], &h, 5), 0.0);
        assert_eq!(unexpectedness_at_k(&[key(0, 0, 0)], &[], 5), 1.0);
        // cross distances {1, 1, 2/3, 1}
        let list = [key(1, 1, 1), key(0, 2, 2)];
        let hist = [key(2, 3, 3), key(3, 4, 4)];
        let hist2 = [key(2, 3, 3), key(0, 4, 4)];
        assert!((unexpectedness_at_k(&list, &hist2, 2) - 11.0 / 12.0).abs() < 1e-15);
        assert_eq!(unexpectedness_at_k(&list, &hist, 2), 1.0);
    }
}
