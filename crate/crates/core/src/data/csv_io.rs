use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::batch::Batch;
use crate::error::{Error, Result};

/// Column roles. Every header not named here is a numerical feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsvSchema {
    pub label: String,
    pub time: Option<String>,
    pub categorical: Vec<String>,
    pub ignore: Vec<String>,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label: "label".into(),
            time: None,
            categorical: Vec::new(),
            ignore: Vec::new(),
        }
    }
}

fn is_missing_cell(s: &str) -> bool {
    let t = s.trim();
    t.is_empty()
        || t.eq_ignore_ascii_case("na")
        || t.eq_ignore_ascii_case("nan")
        || t.eq_ignore_ascii_case("null")
}

enum Role {
    Feature(usize),
    Categorical(usize),
    Label,
    Time,
    Ignore,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].trim().is_empty()) {
        return Err(Error::Empty(format!("{}: no header row", path.display())));
    }

    let mut feature_names = Vec::new();
    let mut categorical_names = Vec::new();
    let mut roles = Vec::with_capacity(headers.len());
    let mut seen_label = false;
    let mut seen_time = false;
    for h in headers.iter() {
        let h = h.trim();
        let role = if h == schema.label {
            seen_label = true;
            Role::Label
        } else if schema.time.as_deref() == Some(h) {
            seen_time = true;
            Role::Time
        } else if schema.ignore.iter().any(|c| c == h) {
            Role::Ignore
        } else if schema.categorical.iter().any(|c| c == h) {
            categorical_names.push(h.to_string());
            Role::Categorical(categorical_names.len() - 1)
        } else {
            feature_names.push(h.to_string());
            Role::Feature(feature_names.len() - 1)
        };
        roles.push(role);
    }
    if !seen_label {
        return Err(Error::Csv(format!(
            "label column '{}' not in header",
            schema.label
        )));
    }
    if let (Some(t), false) = (&schema.time, seen_time) {
        return Err(Error::Csv(format!("time column '{t}' not in header")));
    }

    let n_feat = feature_names.len();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    let mut any_missing = false;
    let mut categorical: Vec<Vec<String>> = vec![Vec::new(); categorical_names.len()];
    let mut labels = Vec::new();
    let mut time = Vec::new();

    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::CsvCell {
                row: line,
                column: String::new(),
                message: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        let base = values.len();
        values.resize(base + n_feat, 0.0);
        missing.resize(base + n_feat, false);
        for (j, cell) in record.iter().enumerate() {
            let column = || headers[j].trim().to_string();
            let parse = |what: &str| -> Result<f64> {
                cell.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::CsvCell {
                        row: line,
                        column: column(),
                        message: format!("cannot parse {what} '{cell}'"),
                    })
            };
            match roles[j] {
                Role::Feature(f) => {
                    if is_missing_cell(cell) {
                        missing[base + f] = true;
                        any_missing = true;
                    } else {
                        values[base + f] = parse("number")?;
                    }
                }
                Role::Categorical(c) => categorical[c].push(cell.trim().to_string()),
                Role::Label => {
                    if is_missing_cell(cell) {
                        return Err(Error::CsvCell {
                            row: line,
                            column: column(),
                            message: "missing label".into(),
                        });
                    }
                    let y = parse("label")?;
                    if y != 0.0 && y != 1.0 {
                        return Err(Error::CsvCell {
                            row: line,
                            column: column(),
                            message: format!("label {y} is not 0 or 1"),
                        });
                    }
                    labels.push(y);
                }
                Role::Time => time.push(parse("time")?),
                Role::Ignore => {}
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty(format!("{}: no data rows", path.display())));
    }
    let rows = labels.len();
    let ds = Dataset {
        feature_names,
        features: Batch::new(rows, n_feat, values)?,
        missing: any_missing.then_some(missing),
        categorical_names,
        categorical,
        label_name: schema.label.clone(),
        labels,
        time_name: schema.time.clone(),
        time: schema.time.as_ref().map(|_| time),
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes time (if any), numerical features, categorical columns and the
/// label, in that order. Missing cells are written empty. Floats use the
/// shortest representation that parses back to the same value.
pub fn write_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    let mut header: Vec<&str> = Vec::new();
    if let Some(t) = &ds.time_name {
        header.push(t);
    }
    header.extend(ds.feature_names.iter().map(String::as_str));
    header.extend(ds.categorical_names.iter().map(String::as_str));
    header.push(&ds.label_name);
    writeln!(w, "{}", header.join(","))?;
    let mut line = String::new();
    for r in 0..ds.n_rows() {
        line.clear();
        let push = |s: &str, line: &mut String| {
            if !line.is_empty() {
                line.push(',');
            }
            line.push_str(s);
        };
        if let Some(t) = &ds.time {
            push(&t[r].to_string(), &mut line);
        }
        for c in 0..ds.n_features() {
            if ds.is_missing(r, c) {
                push("", &mut line);
            } else {
                push(&ds.features.get(r, c).to_string(), &mut line);
            }
        }
        for col in &ds.categorical {
            push(&col[r], &mut line);
        }
        push(&ds.labels[r].to_string(), &mut line);
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}
