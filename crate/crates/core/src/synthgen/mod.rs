//! Deterministic synthetic EPG and viewing-log generator.
//!
//! Channels run a fixed daily grid of daily strips, weekly series and
//! one-off slots. Users have a main channel, a category taste, a habitual
//! viewing hour and a growing set of series they follow, so the log shows
//! the same repetition of programs and channels that real viewing does.

mod schedule;
mod viewers;
mod words;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use viewers::UserProfile;

use crate::domain::{Airing, Category, Program, ProgramId, ViewEvent};
use crate::error::{Error, Result};
use crate::ingestion::{write_epg, write_views, Catalog};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthParams {
    pub n_users: usize,
    pub n_channels: usize,
    pub programs_per_week: usize,
    pub n_weeks: usize,
    pub seed: u64,
    /// Probability that any one viewing choice is made on the user's main
    /// channel.
    pub channel_loyalty: f64,
    /// Dirichlet concentration of user category tastes; small values give
    /// users a few strong favorites.
    pub category_affinity_concentration: f64,
    /// Probability of returning to a followed series when it is available.
    pub series_repeat_prob: f64,
    /// Probability that a session starts at the user's habitual hour.
    pub daypart_regularity: f64,
    /// Share of sessions spent on catch-up.
    pub catchup_share: f64,
    /// Share of programs also broadcast on an HD twin channel.
    pub simulcast_share: f64,
    /// Program mix over the eight categories.
    pub category_weights: [f64; 8],
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_users: 500,
            n_channels: 20,
            programs_per_week: 200,
            n_weeks: 10,
            seed: 0,
            channel_loyalty: 0.6,
            category_affinity_concentration: 0.5,
            series_repeat_prob: 0.85,
            daypart_regularity: 0.7,
            catchup_share: 0.1,
            simulcast_share: 0.05,
            // News, TV Series, Entertainment, Kids, Documentaries, Sports,
            // Movies, Adults
            category_weights: [0.12, 0.22, 0.16, 0.1, 0.12, 0.1, 0.15, 0.03],
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.n_channels == 0 || self.programs_per_week == 0 || self.n_weeks == 0 {
            return Err(Error::Config("synth counts must all be at least 1".into()));
        }
        let probs = [
            ("channel_loyalty", self.channel_loyalty),
            ("series_repeat_prob", self.series_repeat_prob),
            ("daypart_regularity", self.daypart_regularity),
            ("catchup_share", self.catchup_share),
            ("simulcast_share", self.simulcast_share),
        ];
        for (name, v) in probs {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} = {v} is not a probability")));
            }
        }
        if !(self.category_affinity_concentration.is_finite() && self.category_affinity_concentration > 0.0) {
            return Err(Error::Config("category_affinity_concentration must be positive".into()));
        }
        if self.category_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.category_weights.iter().all(|w| *w == 0.0)
        {
            return Err(Error::Config(
                "category weights must be nonnegative with a positive sum".into(),
            ));
        }
        if self.n_channels == 1 && self.channel_loyalty < 1.0 {
            return Err(Error::Config("a single channel needs channel_loyalty = 1".into()));
        }
        Ok(())
    }
}

/// Ground truth of a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: SynthParams,
    /// Primary category of channel `i + 1`.
    pub channel_categories: Vec<Category>,
    /// HD channel ids are the SD id plus this offset.
    pub hd_channel_offset: u64,
    /// Canonical programs, not counting HD twins.
    pub programs: usize,
    /// SD program id and its HD twin.
    pub twins: Vec<(ProgramId, ProgramId)>,
    pub airings: usize,
    pub events: usize,
    pub users: Vec<UserProfile>,
}

/// A generated guide (HD twins not yet merged) and view log.
#[derive(Debug, Clone)]
pub struct Synthetic {
    pub programs: Vec<Program>,
    pub airings: Vec<Airing>,
    pub events: Vec<ViewEvent>,
    pub manifest: Manifest,
}

pub fn generate(params: &SynthParams) -> Result<Synthetic> {
    params.validate()?;
    let schedule = schedule::build(params)?;
    let users = viewers::profiles(params);
    let events = viewers::simulate(params, &schedule, &users);
    let manifest = Manifest {
        params: *params,
        channel_categories: schedule.channel_category.clone(),
        hd_channel_offset: params.n_channels as u64,
        programs: schedule.programs.len() - schedule.twins.len(),
        twins: schedule.twins.iter().map(|(a, b)| (*a, *b)).collect(),
        airings: schedule.airings.len(),
        events: events.len(),
        users,
    };
    Ok(Synthetic {
        programs: schedule.programs,
        airings: schedule.airings,
        events,
        manifest,
    })
}

/// Paths of the files written by [`Synthetic::write`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthFiles {
    pub epg: PathBuf,
    pub views: PathBuf,
    pub manifest: PathBuf,
}

impl SynthFiles {
    pub fn in_dir(dir: &Path) -> Self {
        SynthFiles {
            epg: dir.join("epg.csv"),
            views: dir.join("views.jsonl"),
            manifest: dir.join("manifest.json"),
        }
    }
}

impl Synthetic {
    /// The raw guide, HD twins included as separate programs.
    pub fn catalog(&self) -> Result<Catalog> {
        Catalog::new(self.programs.clone(), self.airings.clone())
    }

    /// Writes `epg.csv`, `views.jsonl` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<SynthFiles> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = SynthFiles::in_dir(dir);
        let catalog = self.catalog()?;

        let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| Error::io(p, e));
        let mut w = create(&files.epg)?;
        write_epg(&catalog, &mut w)?;
        w.flush().map_err(|e| Error::io(&files.epg, e))?;

        let mut w = create(&files.views)?;
        write_views(&self.events, &mut w)?;
        w.flush().map_err(|e| Error::io(&files.views, e))?;

        let mut w = create(&files.manifest)?;
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        w.write_all(b"\n").map_err(|e| Error::io(&files.manifest, e))?;
        w.flush().map_err(|e| Error::io(&files.manifest, e))?;
        Ok(files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthParams {
        SynthParams {
            n_users: 40,
            n_channels: 6,
            programs_per_week: 150,
            n_weeks: 3,
            seed: 3,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.programs, b.programs);
        assert_eq!(a.airings, b.airings);
        let c = generate(&SynthParams { seed: 4, ..small() }).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn program_budget_is_exact() {
        let s = generate(&small()).unwrap();
        assert_eq!(s.manifest.programs, 150 * 3);
        assert_eq!(s.programs.len(), s.manifest.programs + s.manifest.twins.len());
    }

    #[test]
    fn too_many_programs_overflow() {
        let p = SynthParams {
            programs_per_week: 100_000,
            ..small()
        };
        assert!(matches!(generate(&p), Err(Error::Config(m)) if m.contains("overflow")));
    }

    #[test]
    fn too_few_programs_underflow() {
        let p = SynthParams {
            programs_per_week: 10,
            ..small()
        };
        assert!(matches!(generate(&p), Err(Error::Config(m)) if m.contains("underflow")));
    }

    #[test]
    fn invalid_knobs_are_rejected() {
        assert!(SynthParams {
            channel_loyalty: 1.5,
            ..small()
        }
        .validate()
        .is_err());
        assert!(SynthParams { n_users: 0, ..small() }.validate().is_err());
        assert!(SynthParams {
            category_affinity_concentration: 0.0,
            ..small()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn channel_grids_cover_the_day() {
        let s = generate(&small()).unwrap();
        let cat = s.catalog().unwrap();
        // every SD channel has something on at 20:00 on day 3
        let t = schedule::ORIGIN + 3 * crate::domain::DAY + 20 * crate::domain::HOUR;
        let on: std::collections::BTreeSet<u64> = cat.live_at(t).map(|a| a.channel.0).filter(|c| *c <= 6).collect();
        assert_eq!(on.len(), 6);
    }
}
