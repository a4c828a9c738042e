use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::text::{default_stopwords, tokenize};
use crate::domain::{
    fraction_of, preference_label, weekday_index, Category, ChannelId, DayPart, PreferenceRule, ProgramId, Timestamp,
    UserId,
};
use crate::error::{Error, Result};
use crate::ingestion::{Catalog, Interaction, ViewLog};

/// Inclusive range of week indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekRange {
    pub first: i64,
    pub last: i64,
}

impl WeekRange {
    pub fn new(first: i64, last: i64) -> Result<Self> {
        if first > last {
            return Err(Error::Invalid(format!("empty week window {first}..={last}")));
        }
        Ok(WeekRange { first, last })
    }

    pub fn contains(&self, week: i64) -> bool {
        self.first <= week && week <= self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The trailing `weeks` weeks, clipped to this range.
    pub fn tail(&self, weeks: i64) -> WeekRange {
        WeekRange {
            first: (self.last - weeks + 1).max(self.first),
            last: self.last,
        }
    }
}

/// One user's viewing over a window.
#[derive(Debug, Clone, Default)]
pub struct UserCounters {
    /// Positive (user, program, day) counts.
    pub program_views: HashMap<ProgramId, u32>,
    pub program_seconds: HashMap<ProgramId, u64>,
    /// Distinct airings of the program watched past the preference rule.
    pub episodes: HashMap<ProgramId, u32>,
    /// Latest watch start per program, any amount watched.
    pub last_watched: HashMap<ProgramId, Timestamp>,
    pub channel_seconds: HashMap<ChannelId, u64>,
    pub category_seconds: [u64; 8],
    pub subcategory_seconds: HashMap<u32, u64>,
    /// Weekday (Monday = 0) × day-part.
    pub daypart_seconds: [[u64; 4]; 7],
    pub total_seconds: u64,
    /// Programs with at least one positive day, ascending.
    pub history: Vec<ProgramId>,
    /// Channel the user watched each history program on most.
    pub history_channels: HashMap<ProgramId, ChannelId>,
    pub title_tokens: HashSet<String>,
}

fn share(part: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        part as f64 / total as f64
    }
}

impl UserCounters {
    pub fn program_share(&self, p: ProgramId) -> f64 {
        share(self.program_seconds.get(&p).copied().unwrap_or(0), self.total_seconds)
    }

    pub fn channel_share(&self, c: ChannelId) -> f64 {
        share(self.channel_seconds.get(&c).copied().unwrap_or(0), self.total_seconds)
    }

    pub fn category_share(&self, c: Category) -> f64 {
        share(self.category_seconds[c.index()], self.total_seconds)
    }

    pub fn subcategory_share(&self, s: u32) -> f64 {
        share(
            self.subcategory_seconds.get(&s).copied().unwrap_or(0),
            self.total_seconds,
        )
    }

    pub fn daypart_share(&self, d: DayPart) -> f64 {
        let secs: u64 = self.daypart_seconds.iter().map(|row| row[d.index()]).sum();
        share(secs, self.total_seconds)
    }
}

/// Per-user and global counters over one window.
#[derive(Debug, Clone)]
pub struct WindowCounters {
    pub range: WeekRange,
    pub users: HashMap<UserId, UserCounters>,
    /// Positive (user, program, day) counts summed over users.
    pub program_views: HashMap<ProgramId, u32>,
    /// Distinct users with a positive view of the program.
    pub program_audience: HashMap<ProgramId, u32>,
    pub category_seconds: [u64; 8],
    pub subcategory_seconds: HashMap<u32, u64>,
    pub total_seconds: u64,
    /// Users with any event in the window.
    pub active_users: usize,
    rank_quantile: HashMap<ProgramId, f64>,
}

impl WindowCounters {
    /// 1 for the most viewed program, falling linearly toward 0; unviewed
    /// programs score 0. Tied programs share the better rank.
    pub fn rank_quantile(&self, p: ProgramId) -> f64 {
        self.rank_quantile.get(&p).copied().unwrap_or(0.0)
    }

    pub fn audience(&self, p: ProgramId) -> u32 {
        self.program_audience.get(&p).copied().unwrap_or(0)
    }

    pub fn audience_share(&self, p: ProgramId) -> f64 {
        share(u64::from(self.audience(p)), self.active_users as u64)
    }

    pub fn category_share(&self, c: Category) -> f64 {
        share(self.category_seconds[c.index()], self.total_seconds)
    }

    pub fn subcategory_share(&self, s: u32) -> f64 {
        share(
            self.subcategory_seconds.get(&s).copied().unwrap_or(0),
            self.total_seconds,
        )
    }
}

impl crate::metrics::Audience for WindowCounters {
    fn audience(&self, program: ProgramId) -> u32 {
        WindowCounters::audience(self, program)
    }
}

/// Counters for a history window plus its last-week and last-two-week
/// sub-windows.
#[derive(Debug, Clone)]
pub struct HistoryStats {
    pub full: WindowCounters,
    pub last1: WindowCounters,
    pub last2: WindowCounters,
}

impl HistoryStats {
    pub fn range(&self) -> WeekRange {
        self.full.range
    }
}

/// Builds counters strictly from interactions and events inside `window`.
pub fn build_stats(
    interactions: &[Interaction],
    log: &ViewLog,
    catalog: &Catalog,
    window: WeekRange,
    rule: PreferenceRule,
) -> Result<HistoryStats> {
    let window = WeekRange::new(window.first, window.last)?;
    Ok(HistoryStats {
        full: counters(interactions, log, catalog, window, rule),
        last1: counters(interactions, log, catalog, window.tail(1), rule),
        last2: counters(interactions, log, catalog, window.tail(2), rule),
    })
}

fn counters(
    interactions: &[Interaction],
    log: &ViewLog,
    catalog: &Catalog,
    range: WeekRange,
    rule: PreferenceRule,
) -> WindowCounters {
    let timeline = catalog.timeline();
    let mut users: HashMap<UserId, UserCounters> = HashMap::new();
    let mut category_seconds = [0u64; 8];
    let mut subcategory_seconds: HashMap<u32, u64> = HashMap::new();
    let mut total_seconds = 0u64;
    // (user, program, airing) → seconds, for episode counting
    let mut per_airing: BTreeMap<(UserId, ProgramId, Timestamp), u64> = BTreeMap::new();
    // (user, program, channel) → seconds, for the history channel
    let mut per_channel: BTreeMap<(UserId, ProgramId, ChannelId), u64> = BTreeMap::new();

    for e in log.events() {
        if !range.contains(timeline.week_of(e.watch_start)) {
            continue;
        }
        let Some(p) = catalog.program(e.program) else {
            continue;
        };
        let secs = u64::from(e.watched_seconds);
        let sub = catalog.subcategory_id(e.program).unwrap_or(u32::MAX);
        let u = users.entry(e.user).or_default();
        *u.program_seconds.entry(e.program).or_default() += secs;
        let last = u.last_watched.entry(e.program).or_insert(e.watch_start);
        *last = (*last).max(e.watch_start);
        *u.channel_seconds.entry(e.channel).or_default() += secs;
        u.category_seconds[p.category.index()] += secs;
        *u.subcategory_seconds.entry(sub).or_default() += secs;
        u.daypart_seconds[weekday_index(e.watch_start)][DayPart::of(e.watch_start).index()] += secs;
        u.total_seconds += secs;

        category_seconds[p.category.index()] += secs;
        *subcategory_seconds.entry(sub).or_default() += secs;
        total_seconds += secs;
        *per_airing.entry((e.user, e.program, e.airing_start)).or_default() += secs;
        *per_channel.entry((e.user, e.program, e.channel)).or_default() += secs;
    }

    for ((user, program, _), secs) in per_airing {
        let Some(p) = catalog.program(program) else {
            continue;
        };
        let secs32 = u32::try_from(secs).unwrap_or(u32::MAX);
        if preference_label(fraction_of(secs32, p.duration), secs32, rule) == 1 {
            if let Some(u) = users.get_mut(&user) {
                *u.episodes.entry(program).or_default() += 1;
            }
        }
    }

    let mut program_views: HashMap<ProgramId, u32> = HashMap::new();
    let mut audience_sets: HashMap<ProgramId, BTreeSet<UserId>> = HashMap::new();
    for r in interactions
        .iter()
        .filter(|r| range.contains(r.week) && r.positive_days > 0)
    {
        *program_views.entry(r.program).or_default() += r.positive_days;
        audience_sets.entry(r.program).or_default().insert(r.user);
        let u = users.entry(r.user).or_default();
        *u.program_views.entry(r.program).or_default() += r.positive_days;
    }
    let program_audience: HashMap<ProgramId, u32> =
        audience_sets.into_iter().map(|(p, s)| (p, s.len() as u32)).collect();

    let stopwords = default_stopwords();
    for (&user, u) in users.iter_mut() {
        let mut history: Vec<ProgramId> = u.program_views.keys().copied().collect();
        history.sort_unstable();
        for p in &history {
            if let Some(prog) = catalog.program(*p) {
                u.title_tokens.extend(tokenize(&prog.title, stopwords));
            }
            let best = per_channel
                .range((user, *p, ChannelId(0))..=(user, *p, ChannelId(u64::MAX)))
                .max_by(|a, b| a.1.cmp(b.1).then(b.0 .2.cmp(&a.0 .2)))
                .map(|(k, _)| k.2);
            if let Some(c) = best {
                u.history_channels.insert(*p, c);
            } else if let Some(a) = catalog.airings_of(*p).next() {
                u.history_channels.insert(*p, a.channel);
            }
        }
        u.history = history;
    }

    let mut ranked: Vec<(ProgramId, u32)> = program_views.iter().map(|(&p, &v)| (p, v)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let n = ranked.len() as f64;
    let mut rank_quantile = HashMap::with_capacity(ranked.len());
    let mut rank = 0usize;
    for (i, &(p, v)) in ranked.iter().enumerate() {
        if i > 0 && ranked[i - 1].1 != v {
            rank = i;
        }
        rank_quantile.insert(p, 1.0 - rank as f64 / n);
    }

    WindowCounters {
        range,
        active_users: users
            .values()
            .filter(|u| u.total_seconds > 0 || !u.program_views.is_empty())
            .count(),
        users,
        program_views,
        program_audience,
        category_seconds,
        subcategory_seconds,
        total_seconds,
        rank_quantile,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ViewEvent, ViewMode, DAY, HOUR, WEEK};
    use crate::ingestion::build_interactions;
    use crate::ingestion::test_support::{airing, program};

    const BASE: i64 = 1_444_003_200; // Monday

    fn catalog() -> Catalog {
        let programs = vec![
            program(1, "Evening News", Category::News, "news", 3600),
            program(2, "Football Night", Category::Sports, "soccer", 3600),
            program(3, "Cartoon Hour", Category::Kids, "cartoons", 3600),
        ];
        let mut airings = Vec::new();
        for d in 0..(4 * 7) {
            airings.push(airing(1, 1, BASE + d * DAY + 20 * HOUR, BASE + d * DAY + 21 * HOUR));
            airings.push(airing(2, 2, BASE + d * DAY + 20 * HOUR, BASE + d * DAY + 21 * HOUR));
            airings.push(airing(3, 3, BASE + d * DAY + 8 * HOUR, BASE + d * DAY + 9 * HOUR));
        }
        Catalog::new(programs, airings).unwrap()
    }

    fn view(user: u64, program: u64, channel: u64, at: i64, secs: u32) -> ViewEvent {
        ViewEvent {
            user: UserId(user),
            program: ProgramId(program),
            channel: ChannelId(channel),
            watch_start: at,
            watched_seconds: secs,
            mode: ViewMode::Live,
            airing_start: at - at.rem_euclid(HOUR),
        }
    }

    fn stats(events: Vec<ViewEvent>, first: i64, last: i64) -> HistoryStats {
        let c = catalog();
        let log = ViewLog::new(events);
        let inter = build_interactions(&log, &c, PreferenceRule::default());
        build_stats(
            &inter,
            &log,
            &c,
            WeekRange::new(first, last).unwrap(),
            PreferenceRule::default(),
        )
        .unwrap()
    }

    #[test]
    fn channel_share_definition() {
        let s = stats(
            vec![
                view(1, 1, 1, BASE + 20 * HOUR, 2700),
                view(1, 2, 2, BASE + DAY + 20 * HOUR, 900),
            ],
            0,
            3,
        );
        let u = &s.full.users[&UserId(1)];
        assert_eq!(u.channel_share(ChannelId(1)), 0.75);
        assert_eq!(u.category_share(Category::Sports), 0.25);
        assert_eq!(u.category_share(Category::Movies), 0.0);
    }

    #[test]
    fn shares_over_partitions_sum_to_one() {
        let mut events = Vec::new();
        for d in 0..20 {
            events.push(view(
                1 + d as u64 % 3,
                1 + d as u64 % 3,
                1 + d as u64 % 3,
                BASE + d * DAY + 20 * HOUR,
                600 + 97 * d as u32,
            ));
            events.push(view(1, 3, 3, BASE + d * DAY + 8 * HOUR, 1000));
        }
        let s = stats(events, 0, 3);
        for u in s.full.users.values() {
            let cat: f64 = Category::ALL.iter().map(|&c| u.category_share(c)).sum();
            let dp: f64 = DayPart::ALL.iter().map(|&d| u.daypart_share(d)).sum();
            let ch: f64 = u.channel_seconds.keys().map(|&c| u.channel_share(c)).sum();
            let sub: f64 = u.subcategory_seconds.keys().map(|&c| u.subcategory_share(c)).sum();
            for total in [cat, dp, ch, sub] {
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
        let global: f64 = Category::ALL.iter().map(|&c| s.full.category_share(c)).sum();
        assert!((global - 1.0).abs() < 1e-9);
    }

    #[test]
    fn drifting_user_differs_between_full_and_last_week() {
        // weeks 0-2 news, week 3 football
        let mut events = Vec::new();
        for w in 0..3 {
            events.push(view(1, 1, 1, BASE + w * WEEK + 20 * HOUR, 3000));
        }
        events.push(view(1, 2, 2, BASE + 3 * WEEK + 20 * HOUR, 3000));
        let s = stats(events, 0, 3);
        let full = &s.full.users[&UserId(1)];
        let last = &s.last1.users[&UserId(1)];
        // recount by hand: 3 of 4 equal-length views were news
        assert_eq!(full.category_share(Category::News), 0.75);
        assert_eq!(last.category_share(Category::News), 0.0);
        assert_eq!(last.category_share(Category::Sports), 1.0);
        assert_eq!(s.last2.users[&UserId(1)].category_share(Category::Sports), 0.5);
    }

    #[test]
    fn counters_ignore_events_outside_window() {
        let s = stats(
            vec![
                view(1, 1, 1, BASE + 20 * HOUR, 3000),
                view(2, 1, 1, BASE + 2 * WEEK + 20 * HOUR, 3000),
            ],
            1,
            2,
        );
        assert!(!s.full.users.contains_key(&UserId(1)));
        assert_eq!(s.full.active_users, 1);
        assert_eq!(s.full.audience(ProgramId(1)), 1);
    }

    #[test]
    fn rank_quantile_and_episodes() {
        let mut events = Vec::new();
        for d in 0..3 {
            events.push(view(1, 1, 1, BASE + d * DAY + 20 * HOUR, 3000));
        }
        events.push(view(2, 2, 2, BASE + 20 * HOUR, 3000));
        events.push(view(2, 3, 3, BASE + 8 * HOUR, 100));
        let s = stats(events, 0, 0);
        assert_eq!(s.full.rank_quantile(ProgramId(1)), 1.0);
        assert_eq!(s.full.rank_quantile(ProgramId(2)), 0.5);
        assert_eq!(s.full.rank_quantile(ProgramId(3)), 0.0);
        assert_eq!(s.full.users[&UserId(1)].episodes[&ProgramId(1)], 3);
        assert_eq!(s.full.users[&UserId(2)].history, vec![ProgramId(2)]);
        assert!(s.full.users[&UserId(1)].title_tokens.contains("news"));
    }

    #[test]
    fn empty_window_is_an_error() {
        assert!(WeekRange::new(3, 2).is_err());
        assert_eq!(WeekRange::new(0, 3).unwrap().tail(2), WeekRange { first: 2, last: 3 });
        assert_eq!(WeekRange::new(3, 3).unwrap().tail(2), WeekRange { first: 3, last: 3 });
    }
}
