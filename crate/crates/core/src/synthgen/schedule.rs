use std::collections::{BTreeMap, HashMap, HashSet};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index::sample;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;

use super::words::{person, subcategories, title_words, topic_words, FILLER, PEOPLE};
use super::SynthParams;
use crate::domain::{Airing, Category, ChannelId, Program, ProgramId, Timestamp, DAY, HOUR, WEEK};
use crate::error::{Error, Result};
use crate::seed;

const MINUTE: i64 = 60;

/// Air length of a slot, by category.
fn slot_minutes(c: Category) -> i64 {
    match c {
        Category::News | Category::Kids => 30,
        Category::TvSeries | Category::Entertainment | Category::Documentaries => 60,
        Category::Adults => 90,
        Category::Sports | Category::Movies => 120,
    }
}

/// Chance that a slot of this category holds a daily strip, and a weekly
/// series; the rest are one-off slots.
fn series_share(c: Category) -> (f64, f64) {
    match c {
        Category::News | Category::TvSeries | Category::Entertainment | Category::Kids => (0.55, 0.25),
        Category::Documentaries | Category::Sports | Category::Adults => (0.15, 0.45),
        Category::Movies => (0.0, 0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// The same series every day.
    Strip,
    /// A different series on each weekday.
    Weekly,
    OneShot,
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    /// Offset from the start of the broadcast day (06:00).
    offset: i64,
    minutes: i64,
    category: Category,
    kind: Kind,
}

/// A generated guide before simulcast twins are added.
pub(super) struct Schedule {
    pub programs: Vec<Program>,
    pub airings: Vec<Airing>,
    pub channel_category: Vec<Category>,
    /// Latent appeal of each program, shared by all users.
    pub appeal: HashMap<ProgramId, f64>,
    pub series: HashSet<ProgramId>,
    /// SD program → HD twin.
    pub twins: BTreeMap<ProgramId, ProgramId>,
}

fn day_grid(primary: Category, weights: &WeightedIndex<f64>, rng: &mut ChaCha8Rng) -> Vec<Slot> {
    let mut slots = Vec::new();
    let mut offset = 0;
    let day = 24 * 60;
    while offset < day {
        let hour = (6 + offset / 60) % 24;
        let late = !(6..22).contains(&hour);
        let mut category = if rng.random_bool(0.6) {
            primary
        } else {
            Category::ALL[weights.sample(rng)]
        };
        // adult programming only late at night, kids only in daytime
        if (category == Category::Adults && !late) || (category == Category::Kids && late) {
            category = if primary == Category::Adults || primary == Category::Kids {
                Category::Entertainment
            } else {
                primary
            };
        }
        let mut minutes = slot_minutes(category);
        if offset + minutes > day {
            // stretch the previous slot over the remainder when the last one
            // cannot fit
            match slots.last_mut() {
                Some(prev) if day - offset < 30 => {
                    let prev: &mut Slot = prev;
                    prev.minutes += day - offset;
                    break;
                }
                _ => minutes = day - offset,
            }
        }
        let (strip, weekly) = series_share(category);
        let u: f64 = rng.random();
        let kind = if u < strip {
            Kind::Strip
        } else if u < strip + weekly {
            Kind::Weekly
        } else {
            Kind::OneShot
        };
        slots.push(Slot {
            offset,
            minutes,
            category,
            kind,
        });
        offset += minutes;
    }
    slots
}

struct Builder {
    rng: ChaCha8Rng,
    programs: Vec<Program>,
    titles: HashSet<String>,
    appeal: HashMap<ProgramId, f64>,
    appeal_dist: LogNormal<f64>,
}

impl Builder {
    fn title(&mut self, category: Category) -> String {
        let (adj, noun) = title_words(category);
        let base = format!(
            "{} {}",
            adj.choose(&mut self.rng).unwrap(),
            noun.choose(&mut self.rng).unwrap()
        );
        if self.titles.insert(base.clone()) {
            return base;
        }
        for n in 2.. {
            let t = format!("{base} {n}");
            if self.titles.insert(t.clone()) {
                return t;
            }
        }
        unreachable!()
    }

    fn program(&mut self, category: Category, minutes: i64, is_series: bool, start: Timestamp) -> ProgramId {
        let id = ProgramId(self.programs.len() as u64 + 1);
        let title = self.title(category);
        let subs = subcategories(category);
        let subcategory = subs[self.rng.random_range(0..subs.len())].to_string();
        let topic = topic_words(&subcategory);
        let n_words = self.rng.random_range(6..12);
        let words: Vec<&str> = (0..n_words)
            .map(|_| {
                if self.rng.random_bool(0.6) {
                    *topic.choose(&mut self.rng).unwrap()
                } else {
                    *FILLER.choose(&mut self.rng).unwrap()
                }
            })
            .collect();
        let description = format!("{}: {}.", title, words.join(" "));
        // people are drawn from a category-specific band so casts recur
        let band = (category.index() * PEOPLE / 8, PEOPLE / 8);
        let cast = match category {
            Category::Movies | Category::TvSeries => self.rng.random_range(2..5),
            Category::Kids | Category::Entertainment => self.rng.random_range(0..2),
            _ => 0,
        };
        let actors = (0..cast)
            .map(|_| person(band.0 + self.rng.random_range(0..band.1)))
            .collect();
        let directors = if matches!(
            category,
            Category::Movies | Category::Documentaries | Category::TvSeries
        ) {
            vec![person(band.0 + self.rng.random_range(0..band.1 / 4))]
        } else {
            vec![]
        };
        self.appeal.insert(id, self.appeal_dist.sample(&mut self.rng));
        self.programs.push(Program {
            id,
            title,
            description,
            actors,
            directors,
            category,
            subcategory,
            is_series,
            episode_count: u32::from(is_series),
            duration: (minutes * MINUTE) as u32,
            first_broadcast: start,
        });
        id
    }
}

/// Monday 2015-10-05 00:00 UTC.
pub(super) const ORIGIN: Timestamp = 1_444_003_200;

pub(super) fn build(params: &SynthParams) -> Result<Schedule> {
    let mut rng = seed::rng(params.seed, "schedule", &[]);
    let weights =
        WeightedIndex::new(params.category_weights).map_err(|e| Error::Config(format!("category weights: {e}")))?;
    let channel_category: Vec<Category> = (0..params.n_channels)
        .map(|_| Category::ALL[weights.sample(&mut rng)])
        .collect();
    let grids: Vec<Vec<Slot>> = channel_category
        .iter()
        .map(|&c| day_grid(c, &weights, &mut rng))
        .collect();

    // Series positions: a strip slot, or a weekly slot on one weekday. Each
    // position holds a run of series; the first one may have started before
    // the guide does.
    let weeks = params.n_weeks as i64;
    struct Run {
        channel: usize,
        slot: usize,
        weekday: Option<i64>,
        first_week: i64,
        last_week: i64,
    }
    let mut runs = Vec::new();
    let mut weekly_series: HashSet<(usize, usize, i64)> = HashSet::new();
    for (ch, grid) in grids.iter().enumerate() {
        for (si, slot) in grid.iter().enumerate() {
            let days: Vec<Option<i64>> = match slot.kind {
                Kind::Strip => vec![None],
                // some weekdays of a weekly slot stay one-off
                Kind::Weekly => (0..7).filter(|_| rng.random_bool(0.6)).map(Some).collect(),
                Kind::OneShot => continue,
            };
            for weekday in days {
                if let Some(d) = weekday {
                    weekly_series.insert((ch, si, d));
                }
                let mut w = 0;
                let mut left = rng.random_range(1..=10);
                while w < weeks {
                    let last = (w + left - 1).min(weeks - 1);
                    runs.push(Run {
                        channel: ch,
                        slot: si,
                        weekday,
                        first_week: w,
                        last_week: last,
                    });
                    w = last + 1;
                    left = rng.random_range(5..=12);
                }
            }
        }
    }

    let mut oneshot_slots: Vec<(Timestamp, usize, usize)> = Vec::new();
    for w in 0..weeks {
        for d in 0..7 {
            let day_start = ORIGIN + w * WEEK + d * DAY + 6 * HOUR;
            for (ch, grid) in grids.iter().enumerate() {
                for (si, slot) in grid.iter().enumerate() {
                    let one_off = match slot.kind {
                        Kind::OneShot => true,
                        Kind::Weekly => !weekly_series.contains(&(ch, si, d)),
                        Kind::Strip => false,
                    };
                    if one_off {
                        oneshot_slots.push((day_start + slot.offset * MINUTE, ch, si));
                    }
                }
            }
        }
    }
    oneshot_slots.sort_unstable();

    let total = params.programs_per_week * params.n_weeks;
    let budget = total as i64 - runs.len() as i64;
    if budget < 0 {
        return Err(Error::Config(format!(
            "schedule underflow: {total} programs are fewer than the {} series runs of the grid",
            runs.len()
        )));
    }
    if budget as usize > oneshot_slots.len() {
        return Err(Error::Config(format!(
            "schedule overflow: {total} programs cannot fill {} series runs and {} one-off slots",
            runs.len(),
            oneshot_slots.len()
        )));
    }

    let mut b = Builder {
        rng,
        programs: Vec::new(),
        titles: HashSet::new(),
        appeal: HashMap::new(),
        appeal_dist: LogNormal::new(0.0, 1.2).expect("valid lognormal"),
    };
    let mut airings = Vec::new();
    let mut series = HashSet::new();

    // series, in order of their first airing
    runs.sort_by_key(|r| {
        (
            r.first_week,
            r.weekday.unwrap_or(0),
            grids[r.channel][r.slot].offset,
            r.channel,
        )
    });
    for r in &runs {
        let slot = grids[r.channel][r.slot];
        let first_day = r.weekday.unwrap_or(0);
        let start = ORIGIN + r.first_week * WEEK + first_day * DAY + 6 * HOUR + slot.offset * MINUTE;
        let id = b.program(slot.category, slot.minutes, true, start);
        series.insert(id);
        let mut count = 0;
        for w in r.first_week..=r.last_week {
            let days: Vec<i64> = match r.weekday {
                Some(d) => vec![d],
                None => (0..7).collect(),
            };
            for d in days {
                let s = ORIGIN + w * WEEK + d * DAY + 6 * HOUR + slot.offset * MINUTE;
                airings.push(Airing {
                    program: id,
                    channel: ChannelId(r.channel as u64 + 1),
                    start: s,
                    end: s + slot.minutes * MINUTE,
                });
                count += 1;
            }
        }
        b.programs[id.0 as usize - 1].episode_count = count;
    }

    // one-off slots: the first slot of each (channel, category, length) is a new
    // program, a seeded sample of the rest share the remaining budget evenly
    // across weeks, and everything else is a rerun
    let mut seen_kind: HashSet<(usize, Category, i64)> = HashSet::new();
    let mut forced = vec![false; oneshot_slots.len()];
    for (i, &(_, ch, si)) in oneshot_slots.iter().enumerate() {
        if seen_kind.insert((ch, grids[ch][si].category, grids[ch][si].minutes)) {
            forced[i] = true;
        }
    }
    let n_forced = forced.iter().filter(|f| **f).count() as i64;
    if n_forced > budget {
        return Err(Error::Config(format!(
            "schedule underflow: {budget} one-off programs cannot cover {n_forced} distinct channel slots"
        )));
    }
    let mut fresh = forced.clone();
    let mut remaining = (budget - n_forced) as usize;
    for w in 0..weeks {
        let lo = ORIGIN + w * WEEK;
        let open: Vec<usize> = (0..oneshot_slots.len())
            .filter(|&i| !forced[i] && oneshot_slots[i].0 >= lo && oneshot_slots[i].0 < lo + WEEK)
            .collect();
        let share = remaining / (weeks - w) as usize;
        let share = share.min(open.len());
        for j in sample(&mut b.rng, open.len(), share) {
            fresh[open[j]] = true;
        }
        remaining -= share;
    }
    if remaining > 0 {
        return Err(Error::Config(format!(
            "schedule overflow: {remaining} programs left without a slot"
        )));
    }

    // aired one-offs per (channel, category, length): (program, first start)
    let mut library: HashMap<(usize, Category, i64), Vec<(ProgramId, Timestamp)>> = HashMap::new();
    for (i, &(start, ch, si)) in oneshot_slots.iter().enumerate() {
        let slot = grids[ch][si];
        let id = if fresh[i] {
            let id = b.program(slot.category, slot.minutes, false, start);
            library
                .entry((ch, slot.category, slot.minutes))
                .or_default()
                .push((id, start));
            id
        } else {
            let pool = &library[&(ch, slot.category, slot.minutes)];
            // prefer programs from the last four weeks
            let recent: Vec<ProgramId> = pool
                .iter()
                .filter(|(_, s)| start - s <= 4 * WEEK)
                .map(|(p, _)| *p)
                .collect();
            if recent.is_empty() {
                pool[b.rng.random_range(0..pool.len())].0
            } else {
                recent[b.rng.random_range(0..recent.len())]
            }
        };
        airings.push(Airing {
            program: id,
            channel: ChannelId(ch as u64 + 1),
            start,
            end: start + slot.minutes * MINUTE,
        });
    }

    // simulcast twins on the channel's HD feed
    let n_twins = (b.programs.len() as f64 * params.simulcast_share).round() as usize;
    let n_sd = b.programs.len();
    let mut twins = BTreeMap::new();
    let mut picked: Vec<usize> = sample(&mut b.rng, n_sd, n_twins.min(n_sd)).into_vec();
    picked.sort_unstable();
    let mut by_program: HashMap<ProgramId, Vec<Airing>> = HashMap::new();
    for a in &airings {
        by_program.entry(a.program).or_default().push(*a);
    }
    for i in picked {
        let original = b.programs[i].clone();
        let twin = ProgramId(b.programs.len() as u64 + 1);
        b.programs.push(Program {
            id: twin,
            ..original.clone()
        });
        b.appeal.insert(twin, b.appeal[&original.id]);
        if original.is_series {
            series.insert(twin);
        }
        twins.insert(original.id, twin);
        for a in by_program.get(&original.id).into_iter().flatten() {
            airings.push(Airing {
                program: twin,
                channel: ChannelId(a.channel.0 + params.n_channels as u64),
                start: a.start,
                end: a.end,
            });
        }
    }

    // first broadcast from the guide itself
    let mut first: HashMap<ProgramId, Timestamp> = HashMap::new();
    for a in &airings {
        let e = first.entry(a.program).or_insert(a.start);
        *e = (*e).min(a.start);
    }
    for p in &mut b.programs {
        p.first_broadcast = first[&p.id];
    }
    airings.sort_by_key(|a| (a.start, a.channel, a.program));

    Ok(Schedule {
        programs: b.programs,
        airings,
        channel_category,
        appeal: b.appeal,
        series,
        twins,
    })
}
