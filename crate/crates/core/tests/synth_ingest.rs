use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use tvrec::domain::{ChannelId, UserId};
use tvrec::ingestion::Dataset;
use tvrec::synthgen::{generate, SynthParams, Synthetic};

fn params() -> SynthParams {
    SynthParams {
        n_users: 200,
        n_channels: 8,
        programs_per_week: 150,
        n_weeks: 3,
        seed: 11,
        ..SynthParams::default()
    }
}

fn ingest(s: &Synthetic) -> Dataset {
    let dir = tempfile::tempdir().unwrap();
    let files = s.write(dir.path()).unwrap();
    Dataset::load(&files.epg, &files.views).unwrap()
}

/// Channel as seen on the SD grid: HD twins map back to their SD channel.
fn sd_channel(c: ChannelId, n_channels: usize) -> u64 {
    if c.0 > n_channels as u64 {
        c.0 - n_channels as u64
    } else {
        c.0
    }
}

#[test]
fn generated_files_ingest_without_drops() {
    let s = generate(&params()).unwrap();
    let d = ingest(&s);
    assert_eq!(d.report.kept, s.events.len());
    assert_eq!(d.report.dropped_unknown_program, 0);
    assert_eq!(d.report.dropped_unavailable, 0);
    assert_eq!(d.log.len(), s.manifest.events);
}

#[test]
fn simulcast_twins_merge_to_one_program() {
    let s = generate(&params()).unwrap();
    assert!(!s.manifest.twins.is_empty(), "default share should give some twins");
    let d = ingest(&s);
    assert_eq!(d.catalog.num_programs(), s.manifest.programs);
    for &(sd, hd) in &s.manifest.twins {
        let canon = sd.min(hd);
        assert_eq!(d.catalog.resolve(sd), Some(canon));
        assert_eq!(d.catalog.resolve(hd), Some(canon));
    }
    let merged: BTreeSet<_> = s.manifest.twins.iter().map(|&(sd, hd)| sd.max(hd)).collect();
    assert!(d.log.events().iter().all(|e| !merged.contains(&e.program)));
}

#[test]
fn same_seed_writes_identical_files() {
    let s = generate(&params()).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = s.write(a.path()).unwrap();
    let fb = generate(&params()).unwrap().write(b.path()).unwrap();
    for (x, y) in [(fa.epg, fb.epg), (fa.views, fb.views), (fa.manifest, fb.manifest)] {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
    }
}

#[test]
fn full_loyalty_keeps_each_user_on_one_channel() {
    let p = SynthParams {
        channel_loyalty: 1.0,
        ..params()
    };
    let s = generate(&p).unwrap();
    let mut seen: HashMap<UserId, BTreeSet<u64>> = HashMap::new();
    for e in &s.events {
        seen.entry(e.user)
            .or_default()
            .insert(sd_channel(e.channel, p.n_channels));
    }
    assert!(!seen.is_empty());
    for (u, chans) in seen {
        assert_eq!(chans.len(), 1, "user {u} used {chans:?}");
    }
}

/// Share of deliberate views (zaps excluded) on the user's main channel.
fn loyalty_share(s: &Synthetic) -> f64 {
    let n = s.manifest.params.n_channels;
    let main: HashMap<u64, u64> = s.manifest.users.iter().map(|u| (u.user, u.main_channel)).collect();
    let views: Vec<_> = s.events.iter().filter(|e| e.watched_seconds >= 300).collect();
    let on_main = views
        .iter()
        .filter(|e| sd_channel(e.channel, n) == main[&e.user.0])
        .count();
    on_main as f64 / views.len() as f64
}

#[test]
fn loyalty_knob_shows_in_the_log() {
    for loyalty in [0.3, 0.6, 0.9] {
        let s = generate(&SynthParams {
            channel_loyalty: loyalty,
            ..params()
        })
        .unwrap();
        let share = loyalty_share(&s);
        assert!((share - loyalty).abs() <= 0.05, "knob {loyalty}: share {share:.3}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn any_valid_knobs_round_trip(
        seed in 0u64..1000,
        loyalty in 0.0f64..=1.0,
        repeat in 0.0f64..=1.0,
        regularity in 0.0f64..=1.0,
        catchup in 0.0f64..=0.5,
    ) {
        let p = SynthParams {
            n_users: 30,
            n_channels: 5,
            programs_per_week: 200,
            n_weeks: 2,
            seed,
            channel_loyalty: loyalty,
            series_repeat_prob: repeat,
            daypart_regularity: regularity,
            catchup_share: catchup,
            ..SynthParams::default()
        };
        let s = generate(&p).unwrap();
        let d = ingest(&s);
        prop_assert_eq!(d.report.kept, s.events.len());
        prop_assert_eq!(d.catalog.num_programs(), p.programs_per_week * p.n_weeks);
    }
}
