//! Dataset files: a header `y,delta,z1,...,zp` followed by one row per
//! observation. A first line `#bound=<D>` marks left-censored data with
//! detection bound `D`; without it the data are right-censored.

use std::fs;
use std::path::Path;

use censreg::{CensoredDataset, Error};

use crate::error::CliError;

pub fn read_dataset_csv(path: &Path) -> Result<CensoredDataset, CliError> {
    let text = fs::read_to_string(path)?;
    parse_dataset(&text)
}

pub fn parse_dataset(text: &str) -> Result<CensoredDataset, CliError> {
    let (bound, body, offset) = match text.split_once('\n') {
        Some((first, rest)) if first.trim_start().starts_with('#') => {
            (Some(parse_directive(first.trim())?), rest, 1)
        }
        None if text.trim_start().starts_with('#') => (Some(parse_directive(text.trim())?), "", 1),
        _ => (None, text, 0),
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = reader.headers().map_err(|e| csv_error(e, offset))?.clone();
    let p = check_header(&header, offset + 1)?;

    let mut y = Vec::new();
    let mut delta = Vec::new();
    let mut z = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, offset))?;
        let line = record.position().map_or(0, |pos| pos.line()) + offset;
        if record.len() != p + 2 {
            return Err(CliError::Parse {
                line,
                message: format!("expected {} fields, found {}", p + 2, record.len()),
            });
        }
        let num = |k: usize| -> Result<f64, CliError> {
            let field = &record[k];
            field.parse::<f64>().map_err(|_| CliError::Parse {
                line,
                message: format!("'{field}' in column {} is not a number", &header[k]),
            })
        };
        let d = match &record[1] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(CliError::Parse {
                    line,
                    message: format!("delta must be 0 or 1, found '{other}'"),
                })
            }
        };
        y.push(num(0)?);
        delta.push(d);
        z.push((2..p + 2).map(num).collect::<Result<Vec<f64>, _>>()?);
        lines.push(line);
    }

    let built = match bound {
        Some(b) => CensoredDataset::left_censored(y, delta, &z, b),
        None => CensoredDataset::right_censored(y, delta, &z),
    };
    built.map_err(|e| match e {
        Error::BoundViolation { index, .. } | Error::InvalidIndicator { index, .. } => CliError::Data {
            line: lines[index],
            source: e,
        },
        other => CliError::Core(other),
    })
}

fn parse_directive(line: &str) -> Result<f64, CliError> {
    let value = line
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("bound="))
        .ok_or_else(|| CliError::Parse {
            line: 1,
            message: format!("unknown directive '{line}', expected #bound=<value>"),
        })?;
    match value.trim().parse::<f64>() {
        Ok(b) if b.is_finite() => Ok(b),
        _ => Err(CliError::Parse {
            line: 1,
            message: format!("bound '{value}' is not a finite number"),
        }),
    }
}

fn check_header(header: &csv::StringRecord, line: u64) -> Result<usize, CliError> {
    let names: Vec<&str> = header.iter().collect();
    let p = names.len().saturating_sub(2);
    let ok = names.len() >= 3
        && names[0] == "y"
        && names[1] == "delta"
        && names[2..]
            .iter()
            .enumerate()
            .all(|(j, name)| *name == format!("z{}", j + 1));
    if ok {
        Ok(p)
    } else {
        Err(CliError::Parse {
            line,
            message: format!("header must be y,delta,z1,...,zp; found '{}'", names.join(",")),
        })
    }
}

fn csv_error(e: csv::Error, offset: u64) -> CliError {
    let line = e.position().map_or(offset + 1, |pos| pos.line() + offset);
    CliError::Parse {
        line,
        message: e.to_string(),
    }
}
