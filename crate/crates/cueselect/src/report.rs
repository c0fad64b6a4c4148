//! Campaign report CSV and the plain-text summary table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cueselect_core::selection::Arm;
use cueselect_core::CampaignReport;

use crate::error::{CliError, Result};

pub const CSV_COLUMNS: [&str; 8] = [
    "round",
    "category",
    "arm",
    "n_labeled",
    "minority_f1",
    "macro_f1",
    "precision_at_k",
    "batch_size",
];

fn metric(x: f64) -> String {
    format!("{x:.6}")
}

pub fn campaign_csv(report: &CampaignReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in &report.rows {
        w.write_record([
            r.round.to_string(),
            r.category.clone(),
            r.arm.to_string(),
            r.n_labeled.to_string(),
            metric(r.minority_f1),
            metric(r.macro_f1),
            r.precision_at_k.map(metric).unwrap_or_default(),
            r.batch_size.to_string(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::io(Path::new("<csv>"), e.into_error()))
}

/// One block per category and arm with rows `base`, `base + n`, `base + n*`, …,
/// where `n` is the growth of the category's training set and `*` marks a
/// cumulative row.
pub fn summary_table(report: &CampaignReport) -> String {
    let mut groups: BTreeMap<(&str, Arm), Vec<_>> = BTreeMap::new();
    for r in &report.rows {
        groups.entry((r.category.as_str(), r.arm)).or_default().push(r);
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:<7} {:<16} {:>11} {:>9} {:>8}",
        "category", "arm", "labeled", "minority_f1", "macro_f1", "batch_p"
    );
    for ((cat, arm), mut rows) in groups {
        rows.sort_by_key(|r| r.round);
        let base = rows.first().map_or(0, |r| r.n_labeled);
        for r in rows {
            let added = r.n_labeled.saturating_sub(base);
            let labeled = match r.round {
                0 => format!("{base}"),
                1 => format!("{base} + {added}"),
                _ => format!("{base} + {added}*"),
            };
            let p = r.precision_at_k.map_or_else(|| "-".to_string(), |p| format!("{p:.3}"));
            let _ = writeln!(
                s,
                "{:<12} {:<7} {:<16} {:>11.4} {:>9.4} {:>8}",
                cat, arm.to_string(), labeled, r.minority_f1, r.macro_f1, p
            );
        }
    }
    s.push_str("* cumulative over rounds\n");
    s
}
