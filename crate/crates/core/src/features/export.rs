use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{FeatureSchema, QueryGroup};
use crate::error::{Error, Result};

/// SVMlight ranking format: `<label> qid:<q> <idx>:<value> ... # <user> <program>`,
/// 1-based feature indices, zero values omitted.
pub fn write_svmlight<W: Write>(groups: &[QueryGroup], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    let io = |e| Error::io("<svmlight>", e);
    for g in groups {
        for q in &g.quadruples {
            write!(w, "{} qid:{}", q.preference, g.qid).map_err(io)?;
            for (i, v) in q.features.values().iter().enumerate() {
                if *v != 0.0 {
                    write!(w, " {}:{}", i + 1, v).map_err(io)?;
                }
            }
            writeln!(w, " # {} {}", q.user, q.program).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

#[derive(Serialize)]
struct SchemaFile<'a> {
    length: usize,
    names: &'a [String],
}

pub fn write_schema<W: Write>(schema: &FeatureSchema, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(
        &mut writer,
        &SchemaFile {
            length: schema.len(),
            names: &schema.names,
        },
    )?;
    writer.write_all(b"\n").map_err(|e| Error::io("<schema>", e))
}

/// Writes `<stem>.svm` and `schema.json` into `dir`.
pub fn export_dataset(dir: &Path, stem: &str, groups: &[QueryGroup]) -> Result<()> {
    let svm = dir.join(format!("{stem}.svm"));
    write_svmlight(groups, File::create(&svm).map_err(|e| Error::io(&svm, e))?)?;
    let schema = dir.join("schema.json");
    write_schema(
        super::extract::schema(),
        File::create(&schema).map_err(|e| Error::io(&schema, e))?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{ProgramId, Quadruple, UserId};
    use crate::features::FeatureVector;

    #[test]
    fn svmlight_line_format() {
        let groups = vec![QueryGroup {
            qid: 3,
            user: UserId(7),
            time: 0,
            quadruples: vec![Quadruple {
                user: UserId(7),
                program: ProgramId(9),
                preference: 1,
                features: FeatureVector::new(vec![0.5, 0.0, 2.0]).unwrap(),
            }],
        }];
        let mut out = Vec::new();
        write_svmlight(&groups, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1 qid:3 1:0.5 3:2 # 7 9\n");
    }

    #[test]
    fn schema_json_lists_names_in_order() {
        let mut out = Vec::new();
        write_schema(&FeatureSchema::standard(), &mut out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
        assert_eq!(v["length"], 53);
        assert_eq!(v["names"][0], "user_program_views");
    }
}
