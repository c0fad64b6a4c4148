//! Linear model text format:
//!
//! ```text
//! linmodel v1 <category> <V>
//! bias <float>
//! <term_id> <weight>        (non-zero weights, ascending id)
//! mean <term_id> <value>    (non-zero background means, ascending id)
//! ```

use std::path::Path;

use cueselect_core::{fnv1a, LinearModel};

use super::{fmt_float, numbered_lines, parse_float, read_text, write_bytes};
use crate::error::{CliError, Result};

pub fn model_to_string(model: &LinearModel) -> Result<String> {
    if model.category.is_empty() || model.category.contains(char::is_whitespace) {
        return Err(CliError::Usage(format!(
            "category \"{}\" cannot be stored in a model file",
            model.category
        )));
    }
    if model.background_mean.len() != model.dim() {
        return Err(CliError::Invariant("model background mean has the wrong length".into()));
    }
    let mut s = format!("linmodel v1 {} {}\nbias {}\n", model.category, model.dim(), fmt_float(model.bias));
    for (i, w) in model.weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
        s.push_str(&format!("{i} {}\n", fmt_float(*w)));
    }
    for (i, m) in model.background_mean.iter().enumerate().filter(|(_, m)| **m != 0.0) {
        s.push_str(&format!("mean {i} {}\n", fmt_float(*m)));
    }
    Ok(s)
}

/// Parses a model file. The fingerprint of the result is a hash of the text.
pub fn parse_model(text: &str, path: &Path) -> Result<LinearModel> {
    let err = |line: usize, m: String| CliError::format(path, Some(line), m);
    let mut lines = numbered_lines(text);

    let (hl, header) = lines.next().ok_or_else(|| CliError::format(path, None, "empty model file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    let (category, dim) = match h.as_slice() {
        ["linmodel", "v1", cat, v] => {
            let v: usize = v.parse().map_err(|_| err(hl, format!("bad dimension \"{v}\"")))?;
            (*cat, v)
        }
        ["linmodel", version, ..] if *version != "v1" => {
            return Err(err(hl, format!("unsupported model version \"{version}\"")))
        }
        _ => return Err(err(hl, format!("bad header \"{header}\""))),
    };

    let (bl, bias_line) = lines.next().ok_or_else(|| CliError::format(path, None, "missing bias line"))?;
    let bias = match bias_line.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["bias", v] => parse_float(v).ok_or_else(|| err(bl, format!("bad bias \"{v}\"")))?,
        _ => return Err(err(bl, "expected \"bias <float>\"".into())),
    };

    let mut model = LinearModel::zeros(dim, category);
    model.bias = bias;
    let mut seen_mean = false;
    let mut last: [Option<usize>; 2] = [None, None];
    for (line, s) in lines {
        let fields: Vec<&str> = s.split_whitespace().collect();
        let (is_mean, id, value) = match fields.as_slice() {
            ["mean", id, v] => (true, *id, *v),
            [id, v] => (false, *id, *v),
            _ => return Err(err(line, format!("unrecognized line \"{s}\""))),
        };
        if !is_mean && seen_mean {
            return Err(err(line, "weight line after mean lines".into()));
        }
        seen_mean |= is_mean;
        let i: usize = id.parse().map_err(|_| err(line, format!("bad term id \"{id}\"")))?;
        if i >= dim {
            return Err(err(line, format!("term id {i} out of range for dimension {dim}")));
        }
        let slot = &mut last[usize::from(is_mean)];
        if slot.is_some_and(|p| p >= i) {
            return Err(err(line, format!("term id {i} repeated or out of order")));
        }
        *slot = Some(i);
        let v = parse_float(value).ok_or_else(|| err(line, format!("bad value \"{value}\"")))?;
        if is_mean {
            model.background_mean[i] = v;
        } else {
            model.weights[i] = v;
        }
    }
    model.fingerprint = fnv1a(text.as_bytes());
    Ok(model)
}

pub fn read_model(path: &Path) -> Result<LinearModel> {
    parse_model(&read_text(path)?, path)
}

pub fn write_model(path: &Path, model: &LinearModel) -> Result<()> {
    write_bytes(path, model_to_string(model)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<LinearModel> {
        parse_model(s, Path::new("m.txt"))
    }

    #[test]
    fn exact_round_trip() {
        let mut m = LinearModel::zeros(4, "health");
        m.weights = vec![0.1 + 0.2, 0.0, -1e-300, 2.0];
        m.background_mean = vec![0.0, 1.0 / 3.0, 0.25, 0.0];
        m.bias = -0.7;
        let text = model_to_string(&m).unwrap();
        let back = parse(&text).unwrap();
        assert_eq!(back.weights, m.weights);
        assert_eq!(back.background_mean, m.background_mean);
        assert_eq!(back.bias, m.bias);
        assert_eq!(model_to_string(&back).unwrap(), text);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse("linmodel v2 c 3\nbias 0\n").unwrap_err().to_string().contains("version"));
        assert!(parse("linmodel v1 c 3\nbias 0\n5 1.0\n").is_err());
        assert!(parse("linmodel v1 c 3\nbias 0\nmean 1 1.0\n0 1.0\n").is_err());
        assert!(parse("linmodel v1 c 3\nbias 0\n1 1.0\n1 2.0\n").is_err());
        assert!(parse("linmodel v1 c 3\n").is_err());
        assert!(model_to_string(&LinearModel::zeros(2, "two words")).is_err());
    }
}
