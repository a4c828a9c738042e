use std::fmt::Write as _;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{Algorithm, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Ndcg,
    Ild,
    Msi,
    Unexpectedness,
    NdcgNew,
    #[serde(rename = "obj")]
    Objective,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Ndcg,
        Metric::Ild,
        Metric::Msi,
        Metric::Unexpectedness,
        Metric::NdcgNew,
        Metric::Objective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ndcg => "ndcg",
            Metric::Ild => "ild",
            Metric::Msi => "msi",
            Metric::Unexpectedness => "unexpectedness",
            Metric::NdcgNew => "ndcg_new",
            Metric::Objective => "obj",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Metric::Ndcg => "Accuracy",
            Metric::Ild => "Diversity",
            Metric::Msi => "Novelty",
            Metric::Unexpectedness => "Serendipity",
            Metric::NdcgNew => "Accuracy (new)",
            Metric::Objective => "Global",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub scenario: Scenario,
    pub metric: Metric,
    pub k: usize,
    pub value: f64,
}

/// `algorithm,scenario,metric,k,value` with six decimals.
pub fn write_report_csv<W: Write>(rows: &[ReportRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["algorithm", "scenario", "metric", "k", "value"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.scenario.to_string(),
            r.metric.name().to_string(),
            r.k.to_string(),
            format!("{:.6}", r.value),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(|e| Error::io("report", e))?;
    Ok(())
}

/// Reads rows written by [`write_report_csv`].
pub fn read_report_csv<R: Read>(reader: R) -> Result<Vec<ReportRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Invalid(format!("reading report: {e}")))?;
        let bad = |what: &str| Error::Invalid(format!("report row {}: bad {what}", line + 2));
        if rec.len() != 5 {
            return Err(bad("column count"));
        }
        rows.push(ReportRow {
            algorithm: rec[0].parse().map_err(|_| bad("algorithm"))?,
            scenario: rec[1].parse().map_err(|_| bad("scenario"))?,
            metric: Metric::ALL
                .into_iter()
                .find(|m| m.name() == &rec[2])
                .ok_or_else(|| bad("metric"))?,
            k: rec[3].parse().map_err(|_| bad("k"))?,
            value: rec[4].parse().map_err(|_| bad("value"))?,
        });
    }
    Ok(rows)
}

fn csv_error(e: csv::Error) -> Error {
    Error::Invalid(format!("writing report: {e}"))
}

/// One block per (scenario, k) with a row per algorithm and a column per
/// metric. Missing values print as `-`.
pub fn render_table(rows: &[ReportRow]) -> String {
    let mut blocks: Vec<(Scenario, usize)> = rows.iter().map(|r| (r.scenario, r.k)).collect();
    blocks.sort();
    blocks.dedup();
    let mut algorithms: Vec<Algorithm> = rows.iter().map(|r| r.algorithm).collect();
    algorithms.sort();
    algorithms.dedup();

    let mut out = String::new();
    for (scenario, k) in blocks {
        let _ = writeln!(out, "{scenario} @{k}");
        let _ = write!(out, "{:<14}", "");
        for m in Metric::ALL {
            let _ = write!(out, "{:>16}", m.column());
        }
        out.push('\n');
        for &a in &algorithms {
            let _ = write!(out, "{:<14}", a.name());
            for m in Metric::ALL {
                let v = rows
                    .iter()
                    .find(|r| r.scenario == scenario && r.k == k && r.algorithm == a && r.metric == m);
                match v {
                    Some(r) => {
                        let _ = write!(out, "{:>16.4}", r.value);
                    }
                    None => {
                        let _ = write!(out, "{:>16}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}
