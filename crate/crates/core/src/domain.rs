//! Core entities shared by every stage of the pipeline: identifiers, the
//! program catalog entry, airings, view events and the implicit-feedback
//! labeling rule.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Seconds since the Unix epoch, UTC.
pub type Timestamp = i64;

pub const HOUR: i64 = 3_600;
pub const DAY: i64 = 86_400;
pub const WEEK: i64 = 7 * DAY;
/// How long a program stays available on Catch-up TV after it starts.
pub const CATCHUP_WINDOW: i64 = 7 * DAY;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u64);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

id_type!(
    /// Opaque program identifier.
    ProgramId
);
id_type!(
    /// Opaque channel identifier.
    ChannelId
);
id_type!(
    /// Opaque user identifier.
    UserId
);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    News,
    TvSeries,
    Entertainment,
    Kids,
    Documentaries,
    Sports,
    Movies,
    Adults,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::News,
        Category::TvSeries,
        Category::Entertainment,
        Category::Kids,
        Category::Documentaries,
        Category::Sports,
        Category::Movies,
        Category::Adults,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// The literal used in EPG files.
    pub fn as_str(self) -> &'static str {
        match self {
            Category::News => "News",
            Category::TvSeries => "TV Series",
            Category::Entertainment => "Entertainment",
            Category::Kids => "Kids",
            Category::Documentaries => "Documentaries",
            Category::Sports => "Sports",
            Category::Movies => "Movies",
            Category::Adults => "Adults",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub id: ProgramId,
    pub title: String,
    pub description: String,
    pub actors: Vec<String>,
    pub directors: Vec<String>,
    pub category: Category,
    pub subcategory: String,
    pub is_series: bool,
    pub episode_count: u32,
    /// Seconds, strictly positive.
    pub duration: u32,
    pub first_broadcast: Timestamp,
}

impl Program {
    pub fn validate(&self) -> Result<()> {
        if self.duration == 0 {
            return Err(Error::Invalid(format!("program {}: zero duration", self.id)));
        }
        if self.is_series != (self.episode_count > 0) {
            return Err(Error::Invalid(format!(
                "program {}: is_series={} inconsistent with episode_count={}",
                self.id, self.is_series, self.episode_count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Airing {
    pub program: ProgramId,
    pub channel: ChannelId,
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Airing {
    /// Live availability: `start <= t < end`.
    pub fn is_live_at(&self, t: Timestamp) -> bool {
        self.start <= t && t < self.end
    }

    /// Catch-up availability window, `[start, start + 7 days]`.
    pub fn catchup_window(&self) -> (Timestamp, Timestamp) {
        (self.start, self.start + CATCHUP_WINDOW)
    }

    pub fn is_catchup_available_at(&self, t: Timestamp) -> bool {
        let (lo, hi) = self.catchup_window();
        lo <= t && t <= hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViewMode {
    Live,
    #[serde(rename = "catchup")]
    CatchUp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub user: UserId,
    pub program: ProgramId,
    pub channel: ChannelId,
    pub watch_start: Timestamp,
    pub watched_seconds: u32,
    pub mode: ViewMode,
    /// Start of the airing the view was attributed to during ingestion.
    pub airing_start: Timestamp,
}

impl ViewEvent {
    pub fn watch_end(&self) -> Timestamp {
        self.watch_start + i64::from(self.watched_seconds)
    }
}

/// Implicit-feedback labeling rule. Both thresholds are strict: a view is a
/// positive only when it watched *more than* the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "threshold", rename_all = "snake_case")]
pub enum PreferenceRule {
    /// More than this fraction of the program's duration.
    WatchedFraction(f64),
    /// More than this many minutes.
    WatchedMinutes(u32),
}

impl Default for PreferenceRule {
    fn default() -> Self {
        PreferenceRule::WatchedFraction(0.5)
    }
}

impl FromStr for PreferenceRule {
    type Err = String;

    /// Accepts `fraction:0.5` or `minutes:10`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| format!("expected fraction:<f> or minutes:<m>, got {s:?}"))?;
        match kind {
            "fraction" => value.parse::<f64>().map_err(|e| e.to_string()).and_then(|f| {
                if (0.0..1.0).contains(&f) {
                    Ok(PreferenceRule::WatchedFraction(f))
                } else {
                    Err(format!("fraction threshold {f} outside [0, 1)"))
                }
            }),
            "minutes" => value
                .parse::<u32>()
                .map(PreferenceRule::WatchedMinutes)
                .map_err(|e| e.to_string()),
            other => Err(format!("unknown preference rule {other:?}")),
        }
    }
}

impl fmt::Display for PreferenceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreferenceRule::WatchedFraction(x) => write!(f, "fraction:{x}"),
            PreferenceRule::WatchedMinutes(m) => write!(f, "minutes:{m}"),
        }
    }
}

/// Fraction of the program watched by this event, clamped to 1.
pub fn watch_fraction(event: &ViewEvent, program: &Program) -> Result<f64> {
    if event.program != program.id {
        return Err(Error::Lookup(format!(
            "event refers to program {}, got program {}",
            event.program, program.id
        )));
    }
    Ok(fraction_of(event.watched_seconds, program.duration))
}

pub(crate) fn fraction_of(watched_seconds: u32, duration: u32) -> f64 {
    (f64::from(watched_seconds) / f64::from(duration)).min(1.0)
}

pub fn preference_label(fraction: f64, watched_seconds: u32, rule: PreferenceRule) -> u8 {
    let positive = match rule {
        PreferenceRule::WatchedFraction(threshold) => fraction > threshold,
        PreferenceRule::WatchedMinutes(minutes) => u64::from(watched_seconds) > 60 * u64::from(minutes),
    };
    u8::from(positive)
}

/// The L2R record: a user, a program, the binary preference and its features.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadruple {
    pub user: UserId,
    pub program: ProgramId,
    pub preference: u8,
    pub features: FeatureVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DayPart {
    Morning,
    Afternoon,
    Evening,
    Night,
}

impl DayPart {
    pub const ALL: [DayPart; 4] = [DayPart::Morning, DayPart::Afternoon, DayPart::Evening, DayPart::Night];

    /// Morning 06–12, afternoon 12–18, evening 18–24, night 00–06 (UTC).
    pub fn of(t: Timestamp) -> DayPart {
        match datetime(t).hour() {
            6..=11 => DayPart::Morning,
            12..=17 => DayPart::Afternoon,
            18..=23 => DayPart::Evening,
            _ => DayPart::Night,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

pub fn datetime(t: Timestamp) -> DateTime<Utc> {
    Utc.timestamp_opt(t, 0).single().unwrap_or_default()
}

/// Monday = 0 .. Sunday = 6.
pub fn weekday_index(t: Timestamp) -> usize {
    datetime(t).weekday().num_days_from_monday() as usize
}

pub fn is_weekend(t: Timestamp) -> bool {
    weekday_index(t) >= 5
}

pub fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    DateTime::parse_from_rfc3339(s)
        .map(|dt| dt.timestamp())
        .map_err(|e| format!("bad RFC 3339 timestamp {s:?}: {e}"))
}

pub fn format_timestamp(t: Timestamp) -> String {
    datetime(t).to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Week numbering for a dataset: week 0 starts at the first Monday 00:00 UTC
/// at or before the dataset's first timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timeline {
    pub origin: Timestamp,
}

impl Timeline {
    pub fn starting_at(first: Timestamp) -> Self {
        let midnight = first.div_euclid(DAY) * DAY;
        let origin = midnight - weekday_index(first) as i64 * DAY;
        Timeline { origin }
    }

    pub fn week_of(&self, t: Timestamp) -> i64 {
        (t - self.origin).div_euclid(WEEK)
    }

    pub fn day_of(&self, t: Timestamp) -> i64 {
        (t - self.origin).div_euclid(DAY)
    }

    pub fn week_start(&self, week: i64) -> Timestamp {
        self.origin + week * WEEK
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn program(duration: u32) -> Program {
        Program {
            id: ProgramId(1),
            title: "t".into(),
            description: String::new(),
            actors: vec![],
            directors: vec![],
            category: Category::News,
            subcategory: "news-general".into(),
            is_series: false,
            episode_count: 0,
            duration,
            first_broadcast: 0,
        }
    }

    fn event(watched: u32) -> ViewEvent {
        ViewEvent {
            user: UserId(1),
            program: ProgramId(1),
            channel: ChannelId(1),
            watch_start: 0,
            watched_seconds: watched,
            mode: ViewMode::Live,
            airing_start: 0,
        }
    }

    #[test]
    fn watch_fraction_examples() {
        let p = program(3600);
        assert_eq!(watch_fraction(&event(1800), &p).unwrap(), 0.5);
        assert_eq!(watch_fraction(&event(0), &p).unwrap(), 0.0);
        // 5400 / 3600 = 1.5, clamped
        assert_eq!(watch_fraction(&event(5400), &p).unwrap(), 1.0);
    }

    #[test]
    fn watch_fraction_rejects_mismatched_program() {
        let mut e = event(10);
        e.program = ProgramId(2);
        assert!(matches!(watch_fraction(&e, &program(60)), Err(Error::Lookup(_))));
    }

    #[test]
    fn watch_fraction_ignores_channel() {
        let p = program(3600);
        let mut e = event(900);
        let a = watch_fraction(&e, &p).unwrap();
        e.channel = ChannelId(99);
        assert_eq!(a, watch_fraction(&e, &p).unwrap());
    }

    #[test]
    fn preference_thresholds_are_strict() {
        let half = PreferenceRule::WatchedFraction(0.5);
        assert_eq!(preference_label(0.51, 0, half), 1);
        assert_eq!(preference_label(0.50, 0, half), 0);
        let ten = PreferenceRule::WatchedMinutes(10);
        assert_eq!(preference_label(0.0, 601, ten), 1);
        assert_eq!(preference_label(0.0, 600, ten), 0);
    }

    #[test]
    fn program_invariants() {
        let mut p = program(60);
        assert!(p.validate().is_ok());
        p.is_series = true;
        assert!(p.validate().is_err());
        p.episode_count = 3;
        assert!(p.validate().is_ok());
        p.duration = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn category_literals_round_trip() {
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
        }
        assert!("Music".parse::<Category>().is_err());
    }

    #[test]
    fn timeline_weeks_start_on_monday() {
        // 2015-10-07 is a Wednesday.
        let wed = parse_timestamp("2015-10-07T13:00:00Z").unwrap();
        let tl = Timeline::starting_at(wed);
        assert_eq!(format_timestamp(tl.origin), "2015-10-05T00:00:00Z");
        assert_eq!(tl.week_of(wed), 0);
        assert_eq!(tl.week_of(tl.origin + WEEK), 1);
        assert_eq!(tl.week_of(tl.origin - 1), -1);
    }

    #[test]
    fn day_parts() {
        let at = |h: &str| DayPart::of(parse_timestamp(&format!("2015-10-05T{h}:00:00Z")).unwrap());
        assert_eq!(at("05"), DayPart::Night);
        assert_eq!(at("06"), DayPart::Morning);
        assert_eq!(at("12"), DayPart::Afternoon);
        assert_eq!(at("18"), DayPart::Evening);
        assert_eq!(at("23"), DayPart::Evening);
    }

    #[test]
    fn preference_rule_parsing() {
        assert_eq!(
            "fraction:0.5".parse::<PreferenceRule>().unwrap(),
            PreferenceRule::WatchedFraction(0.5)
        );
        assert_eq!(
            "minutes:10".parse::<PreferenceRule>().unwrap(),
            PreferenceRule::WatchedMinutes(10)
        );
        assert!("fraction:1.5".parse::<PreferenceRule>().is_err());
        assert!("hours:1".parse::<PreferenceRule>().is_err());
    }

    proptest! {
        #[test]
        fn label_monotone_in_fraction(a in 0.0f64..=1.0, b in 0.0f64..=1.0, t in 0.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rule = PreferenceRule::WatchedFraction(t);
            prop_assert!(preference_label(lo, 0, rule) <= preference_label(hi, 0, rule));
        }

        #[test]
        fn label_monotone_in_seconds(a in 0u32..10_000, b in 0u32..10_000, m in 0u32..60) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let rule = PreferenceRule::WatchedMinutes(m);
            prop_assert!(preference_label(0.0, lo, rule) <= preference_label(0.0, hi, rule));
        }
    }
}
