//! Annotation exchange files, all JSON Lines.
//!
//! Pending batches are `{"id", "text", "category"}`; returned labels and
//! oracle files are `{"id", "category", "label"}`.

use std::path::Path;

use cueselect_core::selection::{ImportedLabel, PendingBatch};
use cueselect_core::{AnnotationOracle, Corpus, DocIdx, TruthTable};
use serde::{Deserialize, Serialize};

use super::{numbered_lines, read_text, write_bytes};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingRecord {
    pub id: String,
    pub text: String,
    pub category: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub category: String,
    pub label: i64,
}

fn parse_lines<T: for<'de> Deserialize<'de>>(text: &str, path: &Path) -> Result<Vec<(usize, T)>> {
    numbered_lines(text)
        .map(|(line, s)| {
            serde_json::from_str(s)
                .map(|r| (line, r))
                .map_err(|e| CliError::format(path, Some(line), format!("malformed record: {e}")))
        })
        .collect()
}

fn to_lines<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn write_pending(path: &Path, corpus: &Corpus, category: &str, docs: &[DocIdx]) -> Result<()> {
    let recs: Vec<PendingRecord> = docs
        .iter()
        .map(|&d| PendingRecord {
            id: corpus.doc(d).id.clone(),
            text: corpus.doc(d).text.clone(),
            category: category.into(),
        })
        .collect();
    write_bytes(path, to_lines(&recs).as_bytes())
}

pub fn read_pending(path: &Path) -> Result<PendingBatch> {
    let recs: Vec<(usize, PendingRecord)> = parse_lines(&read_text(path)?, path)?;
    let category = recs.first().map(|r| r.1.category.clone()).unwrap_or_default();
    Ok(PendingBatch { category, ids: recs.into_iter().map(|r| r.1.id).collect() })
}

pub fn read_labels(path: &Path) -> Result<Vec<(usize, LabelRecord)>> {
    parse_lines(&read_text(path)?, path)
}

pub fn imported_labels(records: &[(usize, LabelRecord)]) -> Vec<ImportedLabel> {
    records.iter().map(|(_, r)| (r.id.clone(), r.category.clone(), r.label)).collect()
}

/// Loads an oracle; labels must be 0 or 1 and repeated entries must agree.
pub fn read_oracle(path: &Path) -> Result<TruthTable> {
    let mut table = TruthTable::default();
    for (line, r) in read_labels(path)? {
        let label = match r.label {
            0 => 0,
            1 => 1,
            v => return Err(CliError::format(path, Some(line), format!("label {v} is not 0 or 1"))),
        };
        if table.lookup(&r.id, &r.category).is_some_and(|l| l != label) {
            return Err(CliError::format(
                path,
                Some(line),
                format!("conflicting labels for \"{}\" / {}", r.id, r.category),
            ));
        }
        table.insert(&r.id, &r.category, label);
    }
    Ok(table)
}

pub fn oracle_to_string(table: &TruthTable) -> String {
    let recs: Vec<LabelRecord> = table
        .iter()
        .map(|(id, c, l)| LabelRecord { id: id.into(), category: c.into(), label: i64::from(l) })
        .collect();
    to_lines(&recs)
}

pub fn write_oracle(path: &Path, table: &TruthTable) -> Result<()> {
    write_bytes(path, oracle_to_string(table).as_bytes())
}
