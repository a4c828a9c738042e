//! EPG and viewing-log ingestion.
//!
//! Files in, immutable in-memory structures out: [`Catalog`] holds programs
//! and their airings, [`ViewLog`] holds attributed view events.

mod epg;
mod interactions;
mod simulcast;
mod views;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

pub use epg::{parse_epg, read_epg, write_epg, EPG_COLUMNS};
pub use interactions::{build_interactions, Interaction};
pub use simulcast::{merge_simulcasts, overlap_ratio, SIMULCAST_MIN_OVERLAP};
pub use views::{parse_views, read_views, write_views, IngestReport};

use crate::domain::{
    Airing, ChannelId, Program, ProgramId, Timeline, Timestamp, UserId, ViewEvent, ViewMode, CATCHUP_WINDOW,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    programs: BTreeMap<ProgramId, Program>,
    /// Sorted by `(start, channel, program, end)`.
    airings: Vec<Airing>,
    channels: BTreeSet<ChannelId>,
    /// Ids folded into another program by simulcast merging, mapped to the
    /// surviving canonical id.
    aliases: BTreeMap<ProgramId, ProgramId>,
    by_program: HashMap<ProgramId, Vec<usize>>,
    subcategories: HashMap<ProgramId, u32>,
    max_airing_len: i64,
}

impl Catalog {
    pub fn new(programs: Vec<Program>, airings: Vec<Airing>) -> Result<Self> {
        Self::with_aliases(programs, airings, BTreeMap::new())
    }

    pub(crate) fn with_aliases(
        programs: Vec<Program>,
        mut airings: Vec<Airing>,
        aliases: BTreeMap<ProgramId, ProgramId>,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for p in programs {
            p.validate()?;
            if let Some(prev) = map.insert(p.id, p) {
                return Err(Error::Invalid(format!("duplicate program id {}", prev.id)));
            }
        }
        for a in &airings {
            if a.end <= a.start {
                return Err(Error::Invalid(format!(
                    "airing of program {} on channel {} ends before it starts",
                    a.program, a.channel
                )));
            }
            if !map.contains_key(&a.program) {
                return Err(Error::Lookup(format!("airing refers to unknown program {}", a.program)));
            }
        }
        airings.sort_by_key(|a| (a.start, a.channel, a.program, a.end));
        airings.dedup();

        let channels = airings.iter().map(|a| a.channel).collect();
        let mut by_program: HashMap<ProgramId, Vec<usize>> = HashMap::new();
        for (i, a) in airings.iter().enumerate() {
            by_program.entry(a.program).or_default().push(i);
        }
        let names: BTreeSet<&str> = map.values().map(|p| p.subcategory.as_str()).collect();
        let ids: HashMap<&str, u32> = names.into_iter().zip(0u32..).collect();
        let subcategories = map.values().map(|p| (p.id, ids[p.subcategory.as_str()])).collect();
        let max_airing_len = airings.iter().map(|a| a.end - a.start).max().unwrap_or(0);

        Ok(Catalog {
            programs: map,
            airings,
            channels,
            aliases,
            by_program,
            subcategories,
            max_airing_len,
        })
    }

    pub fn programs(&self) -> impl ExactSizeIterator<Item = &Program> {
        self.programs.values()
    }

    pub fn program(&self, id: ProgramId) -> Option<&Program> {
        self.programs.get(&id)
    }

    pub fn num_programs(&self) -> usize {
        self.programs.len()
    }

    pub fn airings(&self) -> &[Airing] {
        &self.airings
    }

    pub fn channels(&self) -> &BTreeSet<ChannelId> {
        &self.channels
    }

    pub fn aliases(&self) -> &BTreeMap<ProgramId, ProgramId> {
        &self.aliases
    }

    /// Maps a raw program id to its canonical id, if it is known.
    pub fn resolve(&self, id: ProgramId) -> Option<ProgramId> {
        if self.programs.contains_key(&id) {
            Some(id)
        } else {
            self.aliases.get(&id).copied()
        }
    }

    pub fn airings_of(&self, program: ProgramId) -> impl Iterator<Item = &Airing> {
        self.by_program
            .get(&program)
            .into_iter()
            .flatten()
            .map(move |&i| &self.airings[i])
    }

    /// Dense id of the program's subcategory, for cheap equality tests.
    pub fn subcategory_id(&self, program: ProgramId) -> Option<u32> {
        self.subcategories.get(&program).copied()
    }

    /// Week numbering anchored at the first airing in the guide.
    pub fn timeline(&self) -> Timeline {
        Timeline::starting_at(self.airings.first().map_or(0, |a| a.start))
    }

    fn scan_back(&self, t: Timestamp, earliest_end: Timestamp) -> impl Iterator<Item = &Airing> {
        let hi = self.airings.partition_point(|a| a.start <= t);
        let horizon = earliest_end - self.max_airing_len;
        self.airings[..hi]
            .iter()
            .rev()
            .take_while(move |a| a.start >= horizon)
            .filter(move |a| a.end >= earliest_end)
    }

    /// Airings on air at `t`.
    pub fn live_at(&self, t: Timestamp) -> impl Iterator<Item = &Airing> {
        self.scan_back(t, t).filter(move |a| a.is_live_at(t))
    }

    /// Airings that started at or before `t` and ended no earlier than seven
    /// days before `t` (including the ones still on air).
    pub fn catchup_at(&self, t: Timestamp) -> impl Iterator<Item = &Airing> {
        self.scan_back(t, t - CATCHUP_WINDOW)
    }
}

/// View events sorted by `(user, watch_start)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViewLog {
    events: Vec<ViewEvent>,
}

impl ViewLog {
    pub fn new(mut events: Vec<ViewEvent>) -> Self {
        events.sort_by(|a, b| {
            (a.user, a.watch_start, a.program, a.channel, a.watched_seconds, a.mode).cmp(&(
                b.user,
                b.watch_start,
                b.program,
                b.channel,
                b.watched_seconds,
                b.mode,
            ))
        });
        ViewLog { events }
    }

    pub fn events(&self) -> &[ViewEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn users(&self) -> BTreeSet<UserId> {
        self.events.iter().map(|e| e.user).collect()
    }

    /// Contiguous per-user slices, in user order.
    pub fn by_user(&self) -> Vec<(UserId, &[ViewEvent])> {
        self.events
            .chunk_by(|a, b| a.user == b.user)
            .map(|chunk| (chunk[0].user, chunk))
            .collect()
    }

    pub fn filter(&self, mut keep: impl FnMut(&ViewEvent) -> bool) -> ViewLog {
        ViewLog {
            events: self.events.iter().filter(|e| keep(e)).cloned().collect(),
        }
    }

    pub fn only_mode(&self, mode: ViewMode) -> ViewLog {
        self.filter(|e| e.mode == mode)
    }
}

/// A parsed, simulcast-merged dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: Catalog,
    pub log: ViewLog,
    pub report: IngestReport,
}

impl Dataset {
    pub fn load(epg: &Path, views: &Path) -> Result<Self> {
        let catalog = merge_simulcasts(&parse_epg(epg)?);
        let (log, report) = parse_views(views, &catalog)?;
        Ok(Dataset { catalog, log, report })
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use crate::domain::Category;

    pub fn program(id: u64, title: &str, category: Category, subcategory: &str, duration: u32) -> Program {
        Program {
            id: ProgramId(id),
            title: title.into(),
            description: format!("{title} description"),
            actors: vec![],
            directors: vec![],
            category,
            subcategory: subcategory.into(),
            is_series: false,
            episode_count: 0,
            duration,
            first_broadcast: 0,
        }
    }

    pub fn airing(program: u64, channel: u64, start: Timestamp, end: Timestamp) -> Airing {
        Airing {
            program: ProgramId(program),
            channel: ChannelId(channel),
            start,
            end,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::domain::{Category, DAY, HOUR};

    fn catalog() -> Catalog {
        let programs = vec![
            program(1, "a", Category::News, "news", 3600),
            program(2, "b", Category::Movies, "movies-action", 7200),
            program(3, "c", Category::Kids, "kids", 1800),
        ];
        let airings = vec![
            airing(1, 1, 20 * HOUR, 21 * HOUR),
            airing(2, 2, 19 * HOUR, 21 * HOUR),
            airing(3, 1, 21 * HOUR, 21 * HOUR + 1800),
            airing(1, 1, 20 * HOUR - 8 * DAY, 21 * HOUR - 8 * DAY),
        ];
        Catalog::new(programs, airings).unwrap()
    }

    #[test]
    fn rejects_dangling_airing() {
        let err = Catalog::new(vec![], vec![airing(9, 1, 0, 10)]).unwrap_err();
        assert!(matches!(err, Error::Lookup(_)));
    }

    #[test]
    fn live_lookup() {
        let c = catalog();
        let mut at: Vec<u64> = c.live_at(20 * HOUR + 60).map(|a| a.program.0).collect();
        at.sort();
        assert_eq!(at, vec![1, 2]);
        let at21: Vec<u64> = c.live_at(21 * HOUR).map(|a| a.program.0).collect();
        assert_eq!(at21, vec![3]);
        assert_eq!(c.live_at(23 * HOUR).count(), 0);
    }

    #[test]
    fn catchup_lookup() {
        let c = catalog();
        let t = 22 * HOUR;
        let mut ids: Vec<(u64, i64)> = c.catchup_at(t).map(|a| (a.program.0, a.start)).collect();
        ids.sort();
        // the rerun eight days earlier is outside the window
        assert_eq!(ids, vec![(1, 20 * HOUR), (2, 19 * HOUR), (3, 21 * HOUR)]);
    }

    #[test]
    fn subcategory_ids_are_dense_and_consistent() {
        let c = catalog();
        let ids: BTreeSet<u32> = (1..=3).filter_map(|p| c.subcategory_id(ProgramId(p))).collect();
        assert_eq!(ids, BTreeSet::from([0, 1, 2]));
    }
}
