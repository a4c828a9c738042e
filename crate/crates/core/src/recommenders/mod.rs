//! Baseline scorers and the content-based recommender.
//!
//! Every scorer ranks the whole candidate set; truncation to `k` happens in
//! evaluation or re-ranking.

mod tfidf;

use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use tfidf::{build_tfidf, build_tfidf_with, content_based_score, ContentProfile, Field, TfIdfIndex};

use crate::domain::{ProgramId, UserId};
use crate::features::HistoryStats;

/// Candidates ordered by descending score, ties by ascending program id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoredList {
    entries: Vec<(ProgramId, f64)>,
}

impl ScoredList {
    /// Sorts and deduplicates; a repeated program keeps its highest score.
    /// NaN scores sort last.
    pub fn from_scores(mut entries: Vec<(ProgramId, f64)>) -> Self {
        entries.sort_by(rank_order);
        let mut seen = HashSet::with_capacity(entries.len());
        entries.retain(|(p, _)| seen.insert(*p));
        ScoredList { entries }
    }

    pub fn entries(&self) -> &[(ProgramId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn programs(&self) -> impl Iterator<Item = ProgramId> + '_ {
        self.entries.iter().map(|(p, _)| *p)
    }

    pub fn top(&self, k: usize) -> Vec<ProgramId> {
        self.programs().take(k).collect()
    }

    /// Keeps the `m` best entries.
    pub fn truncate(&mut self, m: usize) {
        self.entries.truncate(m);
    }

    /// Drops entries whose score is not strictly positive.
    pub fn positive_only(mut self) -> Self {
        self.entries.retain(|(_, s)| *s > 0.0);
        self
    }
}

/// Descending score, NaN last, then ascending id.
pub(crate) fn rank_order(a: &(ProgramId, f64), b: &(ProgramId, f64)) -> Ordering {
    match (a.1.is_nan(), b.1.is_nan()) {
        (false, false) => b.1.total_cmp(&a.1),
        (true, false) => Ordering::Greater,
        (false, true) => Ordering::Less,
        (true, true) => Ordering::Equal,
    }
    .then(a.0.cmp(&b.0))
}

/// A uniformly random permutation, reproducible from `seed`.
pub fn random_rank(candidates: &[ProgramId], seed: u64) -> ScoredList {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sorted = candidates.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    ScoredList::from_scores(sorted.into_iter().map(|p| (p, rng.random::<f64>())).collect())
}

/// Global positive-view count over the stats window; identical for all users.
pub fn popular_rank(candidates: &[ProgramId], stats: &HistoryStats) -> ScoredList {
    let full = &stats.full;
    ScoredList::from_scores(
        candidates
            .iter()
            .map(|&p| (p, f64::from(full.program_views.get(&p).copied().unwrap_or(0))))
            .collect(),
    )
}

/// The user's total watch seconds per program over the stats window.
pub fn user_popular_rank(user: UserId, candidates: &[ProgramId], stats: &HistoryStats) -> ScoredList {
    let counters = stats.full.users.get(&user);
    ScoredList::from_scores(
        candidates
            .iter()
            .map(|&p| {
                let secs = counters.and_then(|u| u.program_seconds.get(&p)).copied().unwrap_or(0);
                (p, secs as f64)
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[u64]) -> Vec<ProgramId> {
        xs.iter().map(|&x| ProgramId(x)).collect()
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let l = ScoredList::from_scores(vec![
            (ProgramId(5), 1.0),
            (ProgramId(2), 1.0),
            (ProgramId(9), 3.0),
            (ProgramId(2), 0.5),
        ]);
        assert_eq!(l.top(10), ids(&[9, 2, 5]));
        assert_eq!(l.entries()[1], (ProgramId(2), 1.0));
    }

    #[test]
    fn nan_sorts_last() {
        let l = ScoredList::from_scores(vec![(ProgramId(1), f64::NAN), (ProgramId(2), -5.0)]);
        assert_eq!(l.top(2), ids(&[2, 1]));
    }

    #[test]
    fn random_is_seeded() {
        let c = ids(&(0..50).collect::<Vec<_>>());
        assert_eq!(random_rank(&c, 3), random_rank(&c, 3));
        assert_ne!(random_rank(&c, 3).top(50), random_rank(&c, 4).top(50));
        assert_eq!(random_rank(&ids(&[7]), 1).top(5), ids(&[7]));
    }

    #[test]
    fn random_ignores_candidate_order() {
        let a = ids(&[1, 2, 3, 4, 5]);
        let b = ids(&[5, 3, 1, 4, 2]);
        assert_eq!(random_rank(&a, 11), random_rank(&b, 11));
    }
}
