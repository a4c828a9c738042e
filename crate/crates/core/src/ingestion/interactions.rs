use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Catalog, ViewLog};
use crate::domain::{fraction_of, preference_label, PreferenceRule, ProgramId, UserId};

/// One labeled `(user, program, week)` record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub user: UserId,
    pub program: ProgramId,
    pub preference: u8,
    pub week: i64,
    /// Days in the week on which the user's accumulated viewing of the
    /// program crossed the preference rule.
    pub positive_days: u32,
    pub watched_seconds: u64,
}

/// Labels viewing per `(user, program, week)`.
///
/// Partial views are summed per `(user, program, day)` before the rule is
/// applied; the weekly preference is 1 when any day in the week is positive.
/// Output is sorted by `(user, program, week)`.
pub fn build_interactions(log: &ViewLog, catalog: &Catalog, rule: PreferenceRule) -> Vec<Interaction> {
    let timeline = catalog.timeline();
    let mut daily: BTreeMap<(UserId, ProgramId, i64), u64> = BTreeMap::new();
    for e in log.events() {
        *daily
            .entry((e.user, e.program, timeline.day_of(e.watch_start)))
            .or_default() += u64::from(e.watched_seconds);
    }

    let mut weekly: BTreeMap<(UserId, ProgramId, i64), Interaction> = BTreeMap::new();
    for ((user, program, day), seconds) in daily {
        let Some(p) = catalog.program(program) else {
            continue;
        };
        let secs = u32::try_from(seconds).unwrap_or(u32::MAX);
        let label = preference_label(fraction_of(secs, p.duration), secs, rule);
        let week = day.div_euclid(7);
        let rec = weekly.entry((user, program, week)).or_insert(Interaction {
            user,
            program,
            preference: 0,
            week,
            positive_days: 0,
            watched_seconds: 0,
        });
        rec.preference = rec.preference.max(label);
        rec.positive_days += u32::from(label);
        rec.watched_seconds += seconds;
    }
    weekly.into_values().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Category, ChannelId, ViewEvent, ViewMode, DAY, HOUR, WEEK};
    use crate::ingestion::test_support::{airing, program};
    use proptest::prelude::*;

    // 2015-10-05T00:00:00Z, a Monday
    const BASE: i64 = 1_444_003_200;

    fn catalog() -> Catalog {
        let mut airings = Vec::new();
        for w in 0..6 {
            airings.push(airing(1, 1, BASE + w * WEEK + 20 * HOUR, BASE + w * WEEK + 21 * HOUR));
        }
        Catalog::new(
            vec![program(1, "Show", Category::TvSeries, "series-drama", 3600)],
            airings,
        )
        .unwrap()
    }

    fn view(at: i64, secs: u32) -> ViewEvent {
        ViewEvent {
            user: UserId(1),
            program: ProgramId(1),
            channel: ChannelId(1),
            watch_start: at,
            watched_seconds: secs,
            mode: ViewMode::Live,
            airing_start: at,
        }
    }

    #[test]
    fn sixty_percent_in_week_three_is_positive() {
        let log = ViewLog::new(vec![view(BASE + 3 * WEEK + 20 * HOUR, 2160)]);
        let out = build_interactions(&log, &catalog(), PreferenceRule::default());
        assert_eq!(out.len(), 1);
        assert_eq!(
            (out[0].user, out[0].program, out[0].preference, out[0].week),
            (UserId(1), ProgramId(1), 1, 3)
        );
    }

    #[test]
    fn ten_percent_is_negative() {
        let log = ViewLog::new(vec![view(BASE + 20 * HOUR, 360)]);
        let out = build_interactions(&log, &catalog(), PreferenceRule::default());
        assert_eq!(out[0].preference, 0);
        assert_eq!(out[0].week, 0);
    }

    #[test]
    fn partial_views_accumulate_within_a_day() {
        // 30% + 25% = 55% of 3600 s
        let log = ViewLog::new(vec![view(BASE + 20 * HOUR, 1080), view(BASE + 20 * HOUR + 1800, 900)]);
        let out = build_interactions(&log, &catalog(), PreferenceRule::default());
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].preference, 1);
        assert_eq!(out[0].watched_seconds, 1980);
    }

    #[test]
    fn partial_views_on_different_days_do_not_accumulate() {
        let log = ViewLog::new(vec![view(BASE + 20 * HOUR, 1080), view(BASE + DAY + 20 * HOUR, 900)]);
        let out = build_interactions(&log, &catalog(), PreferenceRule::default());
        assert_eq!(out[0].preference, 0);
    }

    proptest! {
        #[test]
        fn at_most_one_record_per_user_program_week(
            views in prop::collection::vec((0u64..3, 0i64..(6 * 7), 0u32..4000), 0..40)
        ) {
            let events: Vec<ViewEvent> = views
                .iter()
                .map(|&(u, d, s)| ViewEvent { user: UserId(u), ..view(BASE + d * DAY + 20 * HOUR, s) })
                .collect();
            let log = ViewLog::new(events);
            let out = build_interactions(&log, &catalog(), PreferenceRule::default());
            let distinct: std::collections::BTreeSet<_> = log
                .events()
                .iter()
                .map(|e| (e.user, e.program, (e.watch_start - BASE).div_euclid(WEEK)))
                .collect();
            prop_assert!(out.len() <= distinct.len());
            let total: u64 = out.iter().map(|r| r.watched_seconds).sum();
            let expected: u64 = log.events().iter().map(|e| u64::from(e.watched_seconds)).sum();
            prop_assert_eq!(total, expected);
        }
    }
}
