use std::collections::HashSet;
use std::sync::OnceLock;

use super::stats::{UserCounters, WindowCounters};
use super::text::{default_stopwords, jaccard, tokenize};
use super::{FeatureSchema, FeatureVector, HistoryStats};
use crate::domain::{is_weekend, DayPart, Program, Timestamp, UserId, DAY, HOUR};
use crate::error::{Error, Result};
use crate::eval::Candidate;
use crate::ingestion::Catalog;

/// Scores produced by other models for the pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Signals {
    /// Content-based similarity to the user's history.
    pub content: f64,
    /// `None` when the user or the program is unknown to the model.
    pub wrmf: Option<f64>,
    pub funksvd: Option<f64>,
}

pub(crate) fn schema() -> &'static FeatureSchema {
    static SCHEMA: OnceLock<FeatureSchema> = OnceLock::new();
    SCHEMA.get_or_init(FeatureSchema::standard)
}

struct Writer {
    values: Vec<f64>,
}

impl Writer {
    fn put(&mut self, name: &str, value: f64) {
        debug_assert!(
            schema().names[self.values.len()].starts_with(name),
            "feature {} written as {name}",
            schema().names[self.values.len()]
        );
        self.values.push(value);
    }

    fn flag(&mut self, name: &str, on: bool) {
        self.put(name, if on { 1.0 } else { 0.0 });
    }
}

static EMPTY_USER: OnceLock<UserCounters> = OnceLock::new();

fn user_in(w: &WindowCounters, user: UserId) -> &UserCounters {
    w.users
        .get(&user)
        .unwrap_or_else(|| EMPTY_USER.get_or_init(UserCounters::default))
}

fn repetition(w: &mut Writer, win: &WindowCounters, u: &UserCounters, program: &Program, candidate: &Candidate) {
    let p = program.id;
    let watched_episodes = u.episodes.get(&p).copied().unwrap_or(0);
    w.put(
        "user_program_views",
        f64::from(u.program_views.get(&p).copied().unwrap_or(0)),
    );
    w.put("user_program_time_share", u.program_share(p));
    w.put("user_channel_share", u.channel_share(candidate.channel));
    w.put("global_program_rank", win.rank_quantile(p));
    w.put("global_program_audience_share", win.audience_share(p));
    w.put("episodes_watched", f64::from(watched_episodes));
    w.put(
        "episodes_remaining",
        f64::from(program.episode_count.saturating_sub(watched_episodes)),
    );
}

fn category(w: &mut Writer, win: &WindowCounters, u: &UserCounters, program: &Program, subcategory: u32) {
    w.put("user_category_share", u.category_share(program.category));
    w.put("user_subcategory_share", u.subcategory_share(subcategory));
    w.put("global_category_share", win.category_share(program.category));
    w.put("global_subcategory_share", win.subcategory_share(subcategory));
}

/// Feature vector for one candidate shown to `user` at `context`.
///
/// `stats` must come from a window that ends before the week of `context`.
pub fn extract(
    user: UserId,
    program: &Program,
    candidate: &Candidate,
    context: Timestamp,
    stats: &HistoryStats,
    catalog: &Catalog,
    signals: Signals,
) -> Result<FeatureVector> {
    if candidate.program != program.id {
        return Err(Error::Lookup(format!(
            "candidate refers to program {}, got program {}",
            candidate.program, program.id
        )));
    }
    let subcategory = catalog
        .subcategory_id(program.id)
        .ok_or_else(|| Error::Lookup(format!("program {} not in catalog", program.id)))?;
    let mut w = Writer {
        values: Vec::with_capacity(schema().len()),
    };
    let full = user_in(&stats.full, user);

    repetition(&mut w, &stats.full, full, program, candidate);
    category(&mut w, &stats.full, full, program, subcategory);

    let part = DayPart::of(context);
    w.flag("broadcast_on_weekend", is_weekend(candidate.airing_start));
    for (name, d) in [
        "daypart_morning",
        "daypart_afternoon",
        "daypart_evening",
        "daypart_night",
    ]
    .into_iter()
    .zip(DayPart::ALL)
    {
        w.flag(name, part == d);
    }
    w.put("user_daypart_share", full.daypart_share(part));
    w.put(
        "hours_since_broadcast",
        (context - candidate.airing_start).max(0) as f64 / HOUR as f64,
    );
    let last = full.last_watched.get(&program.id).copied();
    w.put(
        "days_since_last_watched",
        last.map_or(0.0, |t| (context - t).max(0) as f64 / DAY as f64),
    );

    let title: HashSet<String> = tokenize(&program.title, default_stopwords()).collect();
    w.put("title_jaccard", jaccard(&title, &full.title_tokens));
    w.put("content_similarity", signals.content);

    w.flag("is_series", program.is_series);
    w.put("episode_count", f64::from(program.episode_count));
    w.put(
        "program_age_days",
        (context - program.first_broadcast).max(0) as f64 / DAY as f64,
    );
    w.put("duration_minutes", f64::from(program.duration) / 60.0);

    w.put("wrmf_score", signals.wrmf.unwrap_or(0.0));
    w.put("funksvd_score", signals.funksvd.unwrap_or(0.0));

    for win in [&stats.last1, &stats.last2] {
        let u = user_in(win, user);
        repetition(&mut w, win, u, program, candidate);
        category(&mut w, win, u, program, subcategory);
    }

    w.flag("has_user_history", full.total_seconds > 0);
    w.flag("program_seen_in_window", stats.full.audience(program.id) > 0);
    w.flag("has_watched_before", last.is_some());
    w.flag("cf_known", signals.wrmf.is_some());

    let v = FeatureVector::new(w.values)?;
    schema().check(&v)?;
    Ok(v)
}
