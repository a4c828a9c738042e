use std::collections::HashSet;

use super::{extract, FeatureVector, FunkSvd, HistoryStats, Signals};
use crate::domain::{ProgramId, Quadruple, Timestamp, UserId};
use crate::error::{Error, Result};
use crate::eval::Query;
use crate::ingestion::Catalog;
use crate::par;
use crate::recommenders::{ContentProfile, TfIdfIndex};
use crate::wrmf::MfModel;

/// Everything learned from one history window that features read.
#[derive(Clone, Copy)]
pub struct FeatureContext<'a> {
    pub catalog: &'a Catalog,
    pub index: &'a TfIdfIndex,
    pub stats: &'a HistoryStats,
    pub wrmf: &'a MfModel,
    pub funksvd: &'a FunkSvd,
    /// Keep only the most recently watched programs of a user's history for
    /// content similarity.
    pub history_cap: Option<usize>,
}

impl FeatureContext<'_> {
    /// Programs the user watched past the preference rule in the window.
    pub fn history(&self, user: UserId) -> Vec<ProgramId> {
        let Some(u) = self.stats.full.users.get(&user) else {
            return Vec::new();
        };
        match self.history_cap {
            Some(cap) if u.history.len() > cap => {
                let mut by_recency: Vec<(Timestamp, ProgramId)> = u
                    .history
                    .iter()
                    .map(|p| (u.last_watched.get(p).copied().unwrap_or(i64::MIN), *p))
                    .collect();
                by_recency.sort_unstable_by(|a, b| b.cmp(a));
                let mut kept: Vec<ProgramId> = by_recency.into_iter().take(cap).map(|(_, p)| p).collect();
                kept.sort_unstable();
                kept
            }
            _ => u.history.clone(),
        }
    }

    pub fn profile(&self, user: UserId) -> ContentProfile {
        ContentProfile::new(self.index, &self.history(user))
    }

    pub fn signals(&self, user: UserId, profile: &ContentProfile, program: ProgramId) -> Signals {
        Signals {
            content: profile.score(self.index, program),
            wrmf: self.wrmf.score(user, program),
            funksvd: self.funksvd.predict(user, program),
        }
    }

    /// One vector per candidate of the query, in candidate order.
    pub fn vectors(&self, query: &Query, profile: &ContentProfile) -> Result<Vec<FeatureVector>> {
        query
            .candidates
            .iter()
            .map(|c| {
                let program = self
                    .catalog
                    .program(c.program)
                    .ok_or_else(|| Error::Lookup(format!("candidate program {}", c.program)))?;
                let signals = self.signals(query.user, profile, c.program);
                extract(query.user, program, c, query.time, self.stats, self.catalog, signals)
            })
            .collect()
    }
}

/// The quadruples of one ranking query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryGroup {
    pub qid: u64,
    pub user: UserId,
    pub time: Timestamp,
    pub quadruples: Vec<Quadruple>,
}

/// One quadruple per candidate of each query, preference 1 for candidates in
/// the query's truth set. The query id is the query's position in `queries`.
pub fn build_dataset(ctx: &FeatureContext<'_>, queries: &[Query]) -> Result<Vec<QueryGroup>> {
    // group by user so each content profile is built once
    let mut order: Vec<usize> = (0..queries.len()).collect();
    order.sort_by_key(|&i| (queries[i].user, i));
    let users: Vec<&[usize]> = order.chunk_by(|&a, &b| queries[a].user == queries[b].user).collect();
    let per_user: Vec<Result<Vec<QueryGroup>>> = par::map(&users, |idxs| {
        let profile = ctx.profile(queries[idxs[0]].user);
        idxs.iter()
            .map(|&i| {
                let q = &queries[i];
                let vectors = ctx.vectors(q, &profile)?;
                Ok(group(i as u64, q, vectors, &q.truth))
            })
            .collect()
    });
    let mut out = Vec::with_capacity(queries.len());
    for r in per_user {
        out.extend(r?);
    }
    out.sort_by_key(|g| g.qid);
    Ok(out)
}

fn group(qid: u64, q: &Query, vectors: Vec<FeatureVector>, truth: &HashSet<ProgramId>) -> QueryGroup {
    QueryGroup {
        qid,
        user: q.user,
        time: q.time,
        quadruples: q
            .candidates
            .iter()
            .zip(vectors)
            .map(|(c, features)| Quadruple {
                user: q.user,
                program: c.program,
                preference: u8::from(truth.contains(&c.program)),
                features,
            })
            .collect(),
    }
}
