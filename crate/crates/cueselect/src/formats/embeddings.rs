//! Embedding text file: a `<count> <dim>` header, then one
//! `<id> <v1> … <v_dim>` row per vector.

use std::path::Path;

use cueselect_core::{EmbeddingMatrix, Error as CoreError};

use super::{fmt_float, numbered_lines, parse_float, read_text, write_bytes};
use crate::error::{CliError, Result};

/// A loaded matrix plus the number of rows that were re-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedEmbeddings {
    pub matrix: EmbeddingMatrix,
    pub renormalized: usize,
}

pub fn parse_embeddings(text: &str, path: &Path, provider_tag: &str) -> Result<LoadedEmbeddings> {
    let mut lines = numbered_lines(text);
    let (hline, header) =
        lines.next().ok_or_else(|| CliError::format(path, None, "missing \"<count> <dim>\" header"))?;
    let bad_header = || CliError::format(path, Some(hline), format!("bad header \"{header}\""));
    let mut parts = header.split_whitespace();
    let count: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    let dim: usize = parts.next().and_then(|s| s.parse().ok()).ok_or_else(bad_header)?;
    if parts.next().is_some() || dim == 0 {
        return Err(bad_header());
    }

    let mut matrix = EmbeddingMatrix::new(dim, provider_tag)?;
    let mut renormalized = 0;
    for (line, s) in lines {
        let mut fields = s.split_whitespace();
        let id = fields.next().unwrap_or_default();
        let mut values = Vec::with_capacity(dim);
        for f in fields {
            let v = parse_float(f)
                .ok_or_else(|| CliError::format(path, Some(line), format!("bad component \"{f}\"")))?;
            values.push(v);
        }
        let row = matrix.len() + 1;
        let at = |e: CoreError| {
            let msg = match &e {
                CoreError::DimensionMismatch { expected, found, .. } => format!(
                    "row {row} of \"{id}\" has {found} components, expected {expected}"
                ),
                other => other.to_string(),
            };
            CliError::format(path, Some(line), msg)
        };
        if matrix.push(id, values).map_err(at)? {
            renormalized += 1;
        }
    }
    if matrix.len() != count {
        return Err(CliError::format(
            path,
            None,
            format!("header declares {count} rows, found {}", matrix.len()),
        ));
    }
    Ok(LoadedEmbeddings { matrix, renormalized })
}

pub fn read_embeddings(path: &Path) -> Result<LoadedEmbeddings> {
    let tag = format!("file:{}", path.file_name().unwrap_or_default().to_string_lossy());
    parse_embeddings(&read_text(path)?, path, &tag)
}

pub fn embeddings_to_string(matrix: &EmbeddingMatrix) -> String {
    let mut s = format!("{} {}\n", matrix.len(), matrix.dim());
    for (id, row) in matrix.rows() {
        s.push_str(id);
        for v in row {
            s.push(' ');
            s.push_str(&fmt_float(*v));
        }
        s.push('\n');
    }
    s
}

pub fn write_embeddings(path: &Path, matrix: &EmbeddingMatrix) -> Result<()> {
    write_bytes(path, embeddings_to_string(matrix).as_bytes())
}
