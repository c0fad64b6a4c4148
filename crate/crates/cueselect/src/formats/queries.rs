//! Human-editable query file: a `[<category>]` line opens a block, each
//! following line holds terms separated by whitespace, `#` starts a comment.

use std::collections::BTreeMap;
use std::path::Path;

use cueselect_core::QuerySuggestion;

use super::{read_text, write_bytes};
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct QueryFile {
    pub queries: BTreeMap<String, Vec<String>>,
}

impl QueryFile {
    pub fn from_suggestions<'a>(suggestions: impl IntoIterator<Item = &'a QuerySuggestion>) -> Self {
        QueryFile {
            queries: suggestions.into_iter().map(|s| (s.category.clone(), s.terms())).collect(),
        }
    }

    /// Terms for `category`; missing or empty blocks are errors.
    pub fn terms_for(&self, category: &str, path: &Path) -> Result<&[String]> {
        match self.queries.get(category) {
            Some(t) if !t.is_empty() => Ok(t),
            Some(_) => Err(CliError::format(path, None, format!("no query terms for category \"{category}\""))),
            None => Err(CliError::format(path, None, format!("no block for category \"{category}\""))),
        }
    }
}

pub fn parse_queries(text: &str, path: &Path) -> Result<QueryFile> {
    let mut file = QueryFile::default();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or_default().trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .map(str::trim)
                .filter(|n| !n.is_empty())
                .ok_or_else(|| CliError::format(path, Some(line), format!("bad category header \"{s}\"")))?;
            if file.queries.insert(name.to_string(), Vec::new()).is_some() {
                return Err(CliError::format(path, Some(line), format!("category \"{name}\" listed twice")));
            }
            current = Some(name.to_string());
            continue;
        }
        let cat = current
            .as_ref()
            .ok_or_else(|| CliError::format(path, Some(line), "terms before the first [category] header"))?;
        file.queries.get_mut(cat).expect("block exists").extend(s.split_whitespace().map(String::from));
    }
    Ok(file)
}

pub fn read_queries(path: &Path) -> Result<QueryFile> {
    parse_queries(&read_text(path)?, path)
}

/// Categories in sorted order, terms in stored (ranked) order.
pub fn queries_to_string(file: &QueryFile) -> String {
    let mut s = String::from("# One block per category; one term per line. Lines starting with # are ignored.\n");
    for (cat, terms) in &file.queries {
        s.push('\n');
        s.push_str(&format!("[{cat}]\n"));
        for t in terms {
            s.push_str(t);
            s.push('\n');
        }
    }
    s
}

pub fn write_queries(path: &Path, file: &QueryFile) -> Result<()> {
    write_bytes(path, queries_to_string(file).as_bytes())
}
