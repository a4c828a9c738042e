use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Catalog, ViewLog};
use crate::domain::{format_timestamp, parse_timestamp, Airing, ChannelId, ProgramId, UserId, ViewEvent, ViewMode};
use crate::error::{Error, Result};

/// One line of the view-log JSONL file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawView {
    user: u64,
    program: u64,
    channel: u64,
    watch_start: String,
    watched_s: u32,
    mode: ViewMode,
}

/// Counts of rows kept and dropped while reading a view log.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub kept: usize,
    pub dropped_unknown_program: usize,
    pub dropped_unavailable: usize,
}

pub fn parse_views(path: &Path, catalog: &Catalog) -> Result<(ViewLog, IngestReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_views(BufReader::new(file), catalog)
}

/// Reads a JSONL view log against a simulcast-merged catalog. Program ids are
/// remapped to canonical ids; rows whose program is unknown or that fall
/// outside every airing's availability window are dropped and counted.
pub fn read_views<R: BufRead>(reader: R, catalog: &Catalog) -> Result<(ViewLog, IngestReport)> {
    let mut report = IngestReport::default();
    let mut events = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::format(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawView = serde_json::from_str(&line).map_err(|e| Error::format(lineno, e.to_string()))?;
        let watch_start = parse_timestamp(&raw.watch_start).map_err(|e| Error::format(lineno, e))?;

        let Some(program) = catalog.resolve(ProgramId(raw.program)) else {
            report.dropped_unknown_program += 1;
            continue;
        };
        let channel = ChannelId(raw.channel);
        let Some(airing) = attribute(catalog, program, channel, watch_start, raw.mode) else {
            report.dropped_unavailable += 1;
            continue;
        };
        events.push(ViewEvent {
            user: UserId(raw.user),
            program,
            channel,
            watch_start,
            watched_seconds: raw.watched_s,
            mode: raw.mode,
            airing_start: airing.start,
        });
    }
    report.kept = events.len();
    if report.dropped_unknown_program + report.dropped_unavailable > 0 {
        log::warn!(
            "dropped {} views with unknown programs and {} outside availability windows",
            report.dropped_unknown_program,
            report.dropped_unavailable
        );
    }
    Ok((ViewLog::new(events), report))
}

/// Finds the airing a view belongs to. Live views must fall inside an airing
/// (same channel preferred); catch-up views go to the most recent airing whose
/// catch-up window contains the watch time.
fn attribute(catalog: &Catalog, program: ProgramId, channel: ChannelId, t: i64, mode: ViewMode) -> Option<&Airing> {
    match mode {
        ViewMode::Live => {
            let mut live = catalog.airings_of(program).filter(|a| a.is_live_at(t));
            let first = live.next()?;
            if first.channel == channel {
                return Some(first);
            }
            Some(live.find(|a| a.channel == channel).unwrap_or(first))
        }
        ViewMode::CatchUp => catalog
            .airings_of(program)
            .filter(|a| a.is_catchup_available_at(t))
            .max_by_key(|a| (a.start, a.channel == channel)),
    }
}

pub fn write_views<W: Write>(events: &[ViewEvent], mut writer: W) -> Result<()> {
    for e in events {
        let raw = RawView {
            user: e.user.0,
            program: e.program.0,
            channel: e.channel.0,
            watch_start: format_timestamp(e.watch_start),
            watched_s: e.watched_seconds,
            mode: e.mode,
        };
        serde_json::to_writer(&mut writer, &raw)?;
        writer.write_all(b"\n").map_err(|e| Error::io("<views>", e))?;
    }
    Ok(())
}
