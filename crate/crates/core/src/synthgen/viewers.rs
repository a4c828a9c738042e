use std::collections::{HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use super::schedule::{Schedule, ORIGIN};
use super::SynthParams;
use crate::domain::{
    Airing, Category, ChannelId, ProgramId, Timestamp, UserId, ViewEvent, ViewMode, CATCHUP_WINDOW, DAY, WEEK,
};
use crate::seed;

/// A user's latent viewing profile, recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: u64,
    pub main_channel: u64,
    pub category_affinity: [f64; 8],
    /// Hour of day (0-23) the user habitually switches on.
    pub habit_hour: u32,
    pub sessions_per_week: u32,
    pub hd_viewer: bool,
}

/// Relative TV usage by hour of day.
const USAGE: [f64; 24] = [
    0.4, 0.2, 0.1, 0.05, 0.05, 0.1, 0.3, 0.6, 0.7, 0.5, 0.4, 0.5, 0.8, 0.9, 0.7, 0.6, 0.7, 0.9, 1.2, 1.6, 2.2, 2.6,
    2.0, 1.0,
];

/// SD airings of every channel, by start.
struct Guide<'a> {
    by_channel: Vec<Vec<&'a Airing>>,
    schedule: &'a Schedule,
    category: HashMap<ProgramId, Category>,
    duration: HashMap<ProgramId, i64>,
}

impl<'a> Guide<'a> {
    fn new(s: &'a Schedule, n_channels: usize) -> Self {
        let mut by_channel = vec![Vec::new(); n_channels];
        for a in &s.airings {
            let c = a.channel.0 as usize;
            if (1..=n_channels).contains(&c) {
                by_channel[c - 1].push(a);
            }
        }
        Guide {
            by_channel,
            schedule: s,
            category: s.programs.iter().map(|p| (p.id, p.category)).collect(),
            duration: s.programs.iter().map(|p| (p.id, i64::from(p.duration))).collect(),
        }
    }

    fn live(&self, channel: usize, t: Timestamp) -> Option<&'a Airing> {
        let list = &self.by_channel[channel];
        let i = list.partition_point(|a| a.start <= t);
        (i > 0 && list[i - 1].end > t).then(|| list[i - 1])
    }

    /// Airings on `channel` that finished before `t` and are still
    /// available for catch-up.
    fn recorded(&self, channel: usize, t: Timestamp) -> impl Iterator<Item = &'a Airing> + '_ {
        let list = &self.by_channel[channel];
        let hi = list.partition_point(|a| a.start <= t);
        // leave room for the session to run on without the window closing
        let lo = list.partition_point(|a| a.start < t - CATCHUP_WINDOW + DAY / 4);
        list[lo..hi].iter().copied().filter(move |a| a.end <= t)
    }
}

struct Viewer<'a> {
    p: &'a SynthParams,
    guide: &'a Guide<'a>,
    profile: &'a UserProfile,
    rng: ChaCha8Rng,
    anchors: Vec<ProgramId>,
    watched_airings: HashSet<(ProgramId, Timestamp)>,
    /// Airings of each program watched past half way.
    familiar: HashMap<ProgramId, u32>,
    tastes: HashMap<ProgramId, f64>,
    events: Vec<ViewEvent>,
}

impl<'a> Viewer<'a> {
    /// Channels this choice may use: the main channel with probability
    /// `channel_loyalty`, otherwise any other.
    fn gate(&mut self) -> Vec<usize> {
        let main = self.profile.main_channel as usize - 1;
        if self.rng.random_bool(self.p.channel_loyalty) {
            vec![main]
        } else {
            (0..self.p.n_channels).filter(|&c| c != main).collect()
        }
    }

    /// This user's own liking of a program, fixed for the whole run.
    fn taste(&mut self, program: ProgramId) -> f64 {
        let (seed, user) = (self.p.seed, self.profile.user);
        *self.tastes.entry(program).or_insert_with(|| {
            let mut rng = seed::rng(seed, "taste", &[user, program.0]);
            LogNormal::new(0.0, 1.0).expect("valid lognormal").sample(&mut rng)
        })
    }

    /// Appeal times category affinity times personal taste, raised for
    /// programs the user already knows.
    fn weight(&mut self, program: ProgramId) -> f64 {
        let cat = self.guide.category[&program];
        let seen = self.familiar.get(&program).copied().unwrap_or(0).min(5);
        self.guide.schedule.appeal[&program]
            * (self.profile.category_affinity[cat.index()] + 0.01)
            * self.taste(program)
            * (1.0 + 3.0 * f64::from(seen))
    }

    /// Anchored series first (with the repeat probability), otherwise a draw
    /// weighted by appeal and category affinity.
    fn choose<'g>(&mut self, options: &[&'g Airing]) -> Option<&'g Airing> {
        if options.is_empty() {
            return None;
        }
        let anchored: Vec<&Airing> = options
            .iter()
            .copied()
            .filter(|a| self.anchors.contains(&a.program))
            .collect();
        if !anchored.is_empty() && self.rng.random_bool(self.p.series_repeat_prob) {
            // most recent airing of the most recently anchored series
            let best = anchored
                .iter()
                .max_by_key(|a| (self.anchors.iter().position(|p| *p == a.program), a.start))
                .copied();
            return best;
        }
        let w: Vec<f64> = options.iter().map(|a| self.weight(a.program)).collect();
        let dist = WeightedIndex::new(&w).ok()?;
        Some(options[dist.sample(&mut self.rng)])
    }

    fn emit(&mut self, a: &Airing, start: Timestamp, seconds: i64, mode: ViewMode) {
        let (program, channel) = match self.guide.schedule.twins.get(&a.program) {
            Some(&twin) if self.profile.hd_viewer => (twin, ChannelId(a.channel.0 + self.p.n_channels as u64)),
            _ => (a.program, a.channel),
        };
        self.events.push(ViewEvent {
            user: UserId(self.profile.user),
            program,
            channel,
            watch_start: start,
            watched_seconds: seconds.max(1) as u32,
            mode,
            airing_start: a.start,
        });
        let duration = self.guide.duration[&a.program];
        if seconds * 2 > duration {
            self.watched_airings.insert((a.program, a.start));
            *self.familiar.entry(a.program).or_default() += 1;
            if self.guide.schedule.series.contains(&a.program) {
                self.anchors.retain(|p| *p != a.program);
                self.anchors.push(a.program);
                if self.anchors.len() > 8 {
                    self.anchors.remove(0);
                }
            }
        }
    }

    /// An airing of a followed series in `[from, to)`, on a channel the gate
    /// allows, to plan a session around.
    fn appointment(&mut self, from: Timestamp, to: Timestamp) -> Option<&'a Airing> {
        if self.anchors.is_empty() || !self.rng.random_bool(self.p.series_repeat_prob) {
            return None;
        }
        let chans = self.gate();
        let guide = self.guide;
        let options: Vec<&'a Airing> = chans
            .iter()
            .flat_map(|&c| {
                let list = &guide.by_channel[c];
                let lo = list.partition_point(|a| a.start < from);
                let hi = list.partition_point(|a| a.start < to);
                list[lo..hi].iter().copied()
            })
            .filter(|a| self.anchors.contains(&a.program))
            .collect();
        if options.is_empty() {
            return None;
        }
        Some(options[self.rng.random_range(0..options.len())])
    }

    /// Returns the session end. A planned first airing skips the first
    /// channel choice.
    fn live_session(&mut self, start: Timestamp, planned: Option<&'a Airing>) -> Timestamp {
        let mut t = start;
        let steps = self.rng.random_range(1..=3);
        for step in 0..steps {
            if let (0, Some(a)) = (step, planned) {
                let secs = ((a.end - t) as f64 * self.rng.random_range(0.85..=1.0)) as i64;
                self.emit(a, t, secs.max(30), ViewMode::Live);
                t = a.end;
                continue;
            }
            let chans = self.gate();
            if chans.len() > 1 && self.rng.random_bool(0.25) {
                let c = chans[self.rng.random_range(0..chans.len())];
                if let Some(a) = self.guide.live(c, t) {
                    let zap = self.rng.random_range(60..300).min(a.end - t);
                    self.emit(a, t, zap, ViewMode::Live);
                    t += zap;
                }
            }
            let options: Vec<&Airing> = chans.iter().filter_map(|&c| self.guide.live(c, t)).collect();
            let Some(a) = self.choose(&options) else { break };
            let remaining = a.end - t;
            let abandon = self.rng.random_bool(0.15);
            let frac = if abandon {
                self.rng.random_range(0.05..0.35)
            } else {
                self.rng.random_range(0.85..=1.0)
            };
            let secs = ((remaining as f64 * frac) as i64).max(30);
            self.emit(a, t, secs, ViewMode::Live);
            t += secs;
            if !abandon {
                t = t.max(a.end);
            }
        }
        t
    }

    fn catchup_session(&mut self, start: Timestamp) -> Timestamp {
        let mut t = start;
        let steps = self.rng.random_range(1..=2);
        for _ in 0..steps {
            let chans = self.gate();
            let options: Vec<&Airing> = chans
                .iter()
                .flat_map(|&c| self.guide.recorded(c, start))
                .filter(|a| !self.watched_airings.contains(&(a.program, a.start)))
                .collect();
            let Some(a) = self.choose(&options) else { break };
            let duration = a.end - a.start;
            let frac = if self.rng.random_bool(0.1) {
                self.rng.random_range(0.05..0.3)
            } else {
                self.rng.random_range(0.6..=1.0)
            };
            let secs = ((duration as f64 * frac) as i64).max(30);
            self.emit(a, t, secs, ViewMode::CatchUp);
            t += secs + self.rng.random_range(0..300);
        }
        t
    }
}

pub(super) fn profiles(p: &SynthParams) -> Vec<UserProfile> {
    let mut rng = seed::rng(p.seed, "channels", &[]);
    // channel popularity is Zipf over a random ranking
    let mut ranking: Vec<usize> = (0..p.n_channels).collect();
    rand::seq::SliceRandom::shuffle(ranking.as_mut_slice(), &mut rng);
    let mut popularity = vec![0.0; p.n_channels];
    for (rank, &c) in ranking.iter().enumerate() {
        popularity[c] = 1.0 / (rank + 1) as f64;
    }
    let channels = WeightedIndex::new(&popularity).expect("positive popularity");
    let hours = WeightedIndex::new(USAGE).expect("positive usage");
    let dirichlet = Dirichlet::new([p.category_affinity_concentration; 8]).expect("positive concentration");

    (1..=p.n_users as u64)
        .map(|u| {
            let mut rng = seed::rng(p.seed, "profile", &[u]);
            let mut affinity: [f64; 8] = dirichlet.sample(&mut rng);
            let main = channels.sample(&mut rng);
            // blend in the population mix so no category is entirely ignored
            for (i, a) in affinity.iter_mut().enumerate() {
                *a = 0.8 * *a + 0.2 * p.category_weights[i] / p.category_weights.iter().sum::<f64>();
            }
            let habit_hour = hours.sample(&mut rng) as u32;
            UserProfile {
                user: u,
                main_channel: main as u64 + 1,
                category_affinity: affinity,
                habit_hour,
                sessions_per_week: rng.random_range(3..=8),
                hd_viewer: rng.random_bool(0.3),
            }
        })
        .collect()
}

/// Simulates every user's viewing, one independent stream per user.
pub(super) fn simulate(p: &SynthParams, schedule: &Schedule, profiles: &[UserProfile]) -> Vec<ViewEvent> {
    let guide = Guide::new(schedule, p.n_channels);
    let hours = WeightedIndex::new(USAGE).expect("positive usage");
    let jitter = Normal::new(0.0, 300.0).expect("valid normal");
    let mut out = Vec::new();
    for profile in profiles {
        let mut v = Viewer {
            p,
            guide: &guide,
            profile,
            rng: seed::rng(p.seed, "viewing", &[profile.user]),
            anchors: Vec::new(),
            watched_airings: HashSet::new(),
            familiar: HashMap::new(),
            tastes: HashMap::new(),
            events: Vec::new(),
        };
        for week in 0..p.n_weeks as i64 {
            // (start, catch-up, planned airing)
            let mut plan: Vec<(Timestamp, bool, Option<&Airing>)> = Vec::new();
            for _ in 0..profile.sessions_per_week {
                let day = v.rng.random_range(0..7);
                let catchup = v.rng.random_bool(p.catchup_share);
                let week_start = ORIGIN + week * WEEK;
                if !catchup {
                    if let Some(a) = v.appointment(week_start, week_start + WEEK) {
                        plan.push((a.start + v.rng.random_range(0..300), false, Some(a)));
                        continue;
                    }
                }
                let offset = if v.rng.random_bool(p.daypart_regularity) {
                    // tuning in just after the habitual hour starts
                    i64::from(profile.habit_hour) * 3600 + f64::abs(jitter.sample(&mut v.rng)) as i64
                } else {
                    hours.sample(&mut v.rng) as i64 * 3600 + v.rng.random_range(0..3600)
                };
                plan.push((
                    ORIGIN + week * WEEK + day * DAY + offset.clamp(0, DAY - 1),
                    catchup,
                    None,
                ));
            }
            plan.sort_by_key(|&(s, c, a)| (s, c, a.map(|a| (a.start, a.channel))));
            let mut last_end = i64::MIN / 2;
            for (s, catchup, planned) in plan {
                if s < last_end + 31 * 60 {
                    continue;
                }
                last_end = if catchup {
                    v.catchup_session(s)
                } else {
                    v.live_session(s, planned)
                };
            }
        }
        out.append(&mut v.events);
    }
    // the guide's last broadcast day runs into the following week
    let horizon = ORIGIN + p.n_weeks as i64 * WEEK;
    out.retain(|e| e.watch_start < horizon);
    out
}
