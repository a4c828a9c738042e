use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::ScenarioKind;
use crate::domain::{
    fraction_of, preference_label, ChannelId, PreferenceRule, ProgramId, Timestamp, UserId, ViewEvent,
};
use crate::ingestion::{Catalog, ViewLog};

/// Events further apart than this start a new session.
pub const SESSION_GAP: i64 = 30 * 60;

/// A maximal run of one user's events with gaps under [`SESSION_GAP`].
#[derive(Debug, Clone, Copy)]
pub struct Session<'a> {
    pub user: UserId,
    pub start: Timestamp,
    pub end: Timestamp,
    pub events: &'a [ViewEvent],
}

/// Splits a log into sessions, in `(user, start)` order. The gap is measured
/// from the latest end seen so far in the session to the next start.
pub fn sessions(log: &ViewLog) -> Vec<Session<'_>> {
    let mut out = Vec::new();
    for (user, events) in log.by_user() {
        let mut first = 0;
        let mut end = events[0].watch_end();
        for i in 1..=events.len() {
            if i == events.len() || events[i].watch_start - end >= SESSION_GAP {
                out.push(Session {
                    user,
                    start: events[first].watch_start,
                    end,
                    events: &events[first..i],
                });
                if i < events.len() {
                    first = i;
                    end = events[i].watch_end();
                }
            } else {
                end = end.max(events[i].watch_end());
            }
        }
    }
    out
}

/// A program offered to a user, with the airing that made it available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub program: ProgramId,
    pub channel: ChannelId,
    pub airing_start: Timestamp,
}

/// Programs on air at `t`, one entry per program (lowest channel id among its
/// simultaneous airings), sorted by program id.
pub fn live_candidates(t: Timestamp, catalog: &Catalog) -> Vec<Candidate> {
    let mut best: BTreeMap<ProgramId, Candidate> = BTreeMap::new();
    for a in catalog.live_at(t) {
        let c = Candidate {
            program: a.program,
            channel: a.channel,
            airing_start: a.start,
        };
        best.entry(a.program)
            .and_modify(|prev| {
                if (c.channel, c.airing_start) < (prev.channel, prev.airing_start) {
                    *prev = c;
                }
            })
            .or_insert(c);
    }
    best.into_values().collect()
}

/// Programs with an airing that started by `t` and ended within the last
/// seven days, one entry per program (its most recent such airing), sorted by
/// program id.
pub fn catchup_candidates(t: Timestamp, catalog: &Catalog) -> Vec<Candidate> {
    let mut best: BTreeMap<ProgramId, Candidate> = BTreeMap::new();
    for a in catalog.catchup_at(t) {
        let c = Candidate {
            program: a.program,
            channel: a.channel,
            airing_start: a.start,
        };
        best.entry(a.program)
            .and_modify(|prev| {
                if (std::cmp::Reverse(c.airing_start), c.channel) < (std::cmp::Reverse(prev.airing_start), prev.channel)
                {
                    *prev = c;
                }
            })
            .or_insert(c);
    }
    best.into_values().collect()
}

pub fn candidates(kind: ScenarioKind, t: Timestamp, catalog: &Catalog) -> Vec<Candidate> {
    match kind {
        ScenarioKind::LiveTv => live_candidates(t, catalog),
        ScenarioKind::CatchUp => catchup_candidates(t, catalog),
    }
}

/// One ranking problem: a user at a time, the candidates on offer and the
/// candidates the user went on to watch.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub user: UserId,
    pub time: Timestamp,
    pub candidates: Vec<Candidate>,
    pub truth: HashSet<ProgramId>,
}

impl Query {
    pub fn programs(&self) -> Vec<ProgramId> {
        self.candidates.iter().map(|c| c.program).collect()
    }
}

/// How query times are chosen for the catch-up scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// One query per session, at the session start.
    #[default]
    PerSession,
    /// One query per user, at the end of the week, judged against the whole
    /// week's viewing.
    Weekly,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryCounts {
    pub sessions: usize,
    pub skipped_no_candidates: usize,
    pub without_truth: usize,
}

/// Programs in `events` whose summed watch time passes the rule.
fn positives(events: &[ViewEvent], catalog: &Catalog, rule: PreferenceRule) -> HashSet<ProgramId> {
    let mut secs: BTreeMap<ProgramId, u64> = BTreeMap::new();
    for e in events {
        *secs.entry(e.program).or_default() += u64::from(e.watched_seconds);
    }
    secs.into_iter()
        .filter(|&(p, s)| {
            catalog.program(p).is_some_and(|prog| {
                let s32 = u32::try_from(s).unwrap_or(u32::MAX);
                preference_label(fraction_of(s32, prog.duration), s32, rule) == 1
            })
        })
        .map(|(p, _)| p)
        .collect()
}

/// Queries for every session starting in `week`, in `(user, time)` order.
/// Only events starting inside `week` count toward the truth. Sessions with
/// no candidates are skipped and counted.
pub fn build_queries(
    log: &ViewLog,
    catalog: &Catalog,
    week: i64,
    kind: ScenarioKind,
    reference: Reference,
    rule: PreferenceRule,
) -> (Vec<Query>, QueryCounts) {
    let timeline = catalog.timeline();
    let mut counts = QueryCounts::default();
    let mut out = Vec::new();
    let in_week: Vec<Session<'_>> = sessions(log)
        .into_iter()
        .filter(|s| timeline.week_of(s.start) == week)
        .collect();

    if kind == ScenarioKind::CatchUp && reference == Reference::Weekly {
        let t = timeline.week_start(week + 1) - 1;
        let cands = catchup_candidates(t, catalog);
        for group in in_week.chunk_by(|a, b| a.user == b.user) {
            counts.sessions += group.len();
            let events: Vec<ViewEvent> = group
                .iter()
                .flat_map(|s| s.events.iter())
                .filter(|e| timeline.week_of(e.watch_start) == week)
                .cloned()
                .collect();
            push_query(
                &mut out,
                &mut counts,
                group[0].user,
                t,
                cands.clone(),
                positives(&events, catalog, rule),
            );
        }
        return (out, counts);
    }

    for s in in_week {
        counts.sessions += 1;
        let cands = candidates(kind, s.start, catalog);
        // a session running past the week boundary must not leak the next
        // week's viewing into this week's labels
        let events: Vec<ViewEvent> = s
            .events
            .iter()
            .filter(|e| timeline.week_of(e.watch_start) == week)
            .cloned()
            .collect();
        push_query(
            &mut out,
            &mut counts,
            s.user,
            s.start,
            cands,
            positives(&events, catalog, rule),
        );
    }
    (out, counts)
}

fn push_query(
    out: &mut Vec<Query>,
    counts: &mut QueryCounts,
    user: UserId,
    time: Timestamp,
    candidates: Vec<Candidate>,
    watched: HashSet<ProgramId>,
) {
    if candidates.is_empty() {
        counts.skipped_no_candidates += 1;
        return;
    }
    let truth: HashSet<ProgramId> = candidates
        .iter()
        .map(|c| c.program)
        .filter(|p| watched.contains(p))
        .collect();
    if truth.is_empty() {
        counts.without_truth += 1;
    }
    out.push(Query {
        user,
        time,
        candidates,
        truth,
    });
}
