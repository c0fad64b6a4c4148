//! Corpus JSON Lines: `{"id": str, "text": str, "labels": {"<category>": 0|1}}`,
//! one object per line. `labels` may be omitted; unknown fields are ignored.

use std::collections::BTreeMap;
use std::path::Path;

use cueselect_core::corpus::CorpusConfig;
use cueselect_core::{Corpus, Error as CoreError, Record};
use serde::{Deserialize, Serialize};

use super::{numbered_lines, read_text, write_bytes};
use crate::error::{CliError, Result};

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    #[serde(default)]
    labels: BTreeMap<String, i64>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    labels: &'a BTreeMap<String, i64>,
}

/// Parses records, keeping the line number of each.
pub fn parse_records(text: &str, path: &Path) -> Result<Vec<(usize, Record)>> {
    let mut out = Vec::new();
    for (line, s) in numbered_lines(text) {
        let raw: RawRecord = serde_json::from_str(s)
            .map_err(|e| CliError::format(path, Some(line), format!("malformed record: {e}")))?;
        out.push((line, Record { id: raw.id, text: raw.text, labels: raw.labels }));
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<(usize, Record)>> {
    parse_records(&read_text(path)?, path)
}

/// Builds a corpus from a file, keeping labels only for `categories` (all when
/// empty). Validation errors name the offending line.
pub fn load_corpus(path: &Path, categories: &[String], config: CorpusConfig) -> Result<Corpus> {
    let numbered = read_records(path)?;
    let lines: Vec<usize> = numbered.iter().map(|r| r.0).collect();
    let line_of_id = |id: &str| numbered.iter().find(|r| r.1.id == id).map(|r| r.0);
    let records: Vec<Record> = numbered.iter().map(|r| r.1.clone()).collect();
    Corpus::from_records(records, categories, config).map_err(|e| {
        let line = match &e {
            CoreError::EmptyId { record } | CoreError::DuplicateId { record, .. } => {
                lines.get(*record).copied()
            }
            CoreError::InvalidLabel { id, .. } => line_of_id(id),
            _ => None,
        };
        match line {
            Some(line) => CliError::format(path, Some(line), message_without_record(&e)),
            None => CliError::Core(e),
        }
    })
}

fn message_without_record(e: &CoreError) -> String {
    match e {
        CoreError::EmptyId { .. } => "empty document id".into(),
        CoreError::DuplicateId { id, .. } => format!("duplicate document id \"{id}\""),
        other => other.to_string(),
    }
}

pub fn records_to_string(records: &[Record]) -> String {
    let mut s = String::new();
    for r in records {
        let out = OutRecord { id: &r.id, text: &r.text, labels: &r.labels };
        s.push_str(&serde_json::to_string(&out).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn write_records(path: &Path, records: &[Record]) -> Result<()> {
    write_bytes(path, records_to_string(records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("c.jsonl")
    }

    #[test]
    fn unknown_fields_ignored_and_labels_optional() {
        let recs = parse_records("{\"id\":\"a\",\"text\":\"x\",\"extra\":5}\n\n", p()).unwrap();
        assert_eq!(recs.len(), 1);
        assert!(recs[0].1.labels.is_empty());
    }

    #[test]
    fn malformed_line_number() {
        let err = parse_records("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\n", p()).unwrap_err();
        assert!(err.to_string().starts_with("c.jsonl:2:"), "{err}");
    }

    #[test]
    fn writer_omits_empty_labels() {
        let r = Record { id: "a".into(), text: "Hi \"there\"".into(), labels: BTreeMap::new() };
        assert_eq!(records_to_string(&[r]), "{\"id\":\"a\",\"text\":\"Hi \\\"there\\\"\"}\n");
    }
}
