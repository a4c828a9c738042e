use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use super::Catalog;
use crate::domain::{format_timestamp, parse_timestamp, Airing, Category, ChannelId, Program, ProgramId};
use crate::error::{Error, Result};

/// EPG CSV header, one row per airing.
pub const EPG_COLUMNS: [&str; 13] = [
    "program_id",
    "title",
    "description",
    "actors",
    "directors",
    "category",
    "subcategory",
    "is_series",
    "episode_count",
    "duration_s",
    "channel_id",
    "start_utc",
    "end_utc",
];

pub fn parse_epg(path: &Path) -> Result<Catalog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_epg(BufReader::new(file))
}

pub fn read_epg<R: Read>(reader: R) -> Result<Catalog> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(1, format!("unreadable header: {e}")))?
        .clone();
    let mut col = [0usize; EPG_COLUMNS.len()];
    for (slot, name) in col.iter_mut().zip(EPG_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::format(1, format!("missing required column {name:?}")))?;
    }

    let mut programs: BTreeMap<ProgramId, Program> = BTreeMap::new();
    let mut airings = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::format(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize| record.get(col[i]).unwrap_or("").trim();
        let bad = |what: &str, value: &str| Error::format(line, format!("invalid {what} {value:?}"));

        let id = ProgramId(field(0).parse().map_err(|_| bad("program_id", field(0)))?);
        let category: Category = field(5).parse().map_err(|e: String| Error::format(line, e))?;
        let is_series = match field(7) {
            "true" | "1" => true,
            "false" | "0" => false,
            other => return Err(bad("is_series", other)),
        };
        let episode_count: u32 = field(8).parse().map_err(|_| bad("episode_count", field(8)))?;
        let duration: u32 = field(9).parse().map_err(|_| bad("duration_s", field(9)))?;
        let channel = ChannelId(field(10).parse().map_err(|_| bad("channel_id", field(10)))?);
        let start = parse_timestamp(field(11)).map_err(|e| Error::format(line, e))?;
        let end = parse_timestamp(field(12)).map_err(|e| Error::format(line, e))?;
        if end <= start {
            return Err(Error::format(line, "end_utc not after start_utc"));
        }

        let program = programs.entry(id).or_insert_with(|| Program {
            id,
            title: field(1).to_string(),
            description: field(2).to_string(),
            actors: split_names(field(3)),
            directors: split_names(field(4)),
            category,
            subcategory: field(6).to_string(),
            is_series,
            episode_count,
            duration,
            first_broadcast: start,
        });
        program.first_broadcast = program.first_broadcast.min(start);
        program.validate().map_err(|e| Error::format(line, e.to_string()))?;
        airings.push(Airing {
            program: id,
            channel,
            start,
            end,
        });
    }
    Catalog::new(programs.into_values().collect(), airings)
}

fn split_names(s: &str) -> Vec<String> {
    s.split('|')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(String::from)
        .collect()
}

/// Writes one row per airing, in the catalog's airing order.
pub fn write_epg<W: Write>(catalog: &Catalog, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Invalid(format!("csv write failed: {e}"));
    wtr.write_record(EPG_COLUMNS).map_err(csv_err)?;
    for a in catalog.airings() {
        let p = catalog
            .program(a.program)
            .ok_or_else(|| Error::Lookup(format!("program {}", a.program)))?;
        wtr.write_record([
            p.id.to_string(),
            p.title.clone(),
            p.description.clone(),
            p.actors.join("|"),
            p.directors.join("|"),
            p.category.as_str().to_string(),
            p.subcategory.clone(),
            p.is_series.to_string(),
            p.episode_count.to_string(),
            p.duration.to_string(),
            a.channel.to_string(),
            format_timestamp(a.start),
            format_timestamp(a.end),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(|e| Error::io("<epg>", e))
}
