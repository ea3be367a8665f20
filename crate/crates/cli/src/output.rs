use std::io::{self, Write};

use censreg::mc::McSummaryRow;
use censreg::ModelFit;

use crate::args::Format;
use crate::error::CliError;

pub const HEADER: [&str; 10] = [
    "design",
    "censor_rate",
    "model",
    "parameter",
    "true",
    "mean",
    "emp_sd",
    "rel_bias_pct",
    "n_converged",
    "n_total",
];

/// Formats `x` with six significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn cells(row: &McSummaryRow, absent: &str) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(|| absent.to_string(), fmt_sig);
    vec![
        row.design.label().to_string(),
        fmt_sig(row.censor_frac),
        row.model.label().to_string(),
        row.parameter.clone(),
        opt(row.truth),
        fmt_sig(row.mean),
        fmt_sig(row.emp_sd),
        opt(row.rel_bias_pct),
        row.n_converged.to_string(),
        row.n_total.to_string(),
    ]
}

/// Writes summary rows in the order given. Nothing is written for an empty slice.
pub fn emit_rows<W: Write>(rows: &[McSummaryRow], format: Format, sink: W) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Io(io::Error::new(
            io::ErrorKind::InvalidInput,
            "no result rows to write",
        )));
    }
    let header: Vec<String> = HEADER.iter().map(|s| s.to_string()).collect();
    match format {
        Format::Csv => {
            let table: Vec<Vec<String>> = rows.iter().map(|r| cells(r, "")).collect();
            write_csv(&header, &table, sink)
        }
        Format::Markdown => {
            let table: Vec<Vec<String>> = rows.iter().map(|r| cells(r, "--")).collect();
            write_markdown(&header, &table, sink)
        }
    }
}

/// Writes the parameters of a single fit.
pub fn emit_fit<W: Write>(fit: &ModelFit, format: Format, sink: W) -> Result<(), CliError> {
    let header: Vec<String> = ["model", "parameter", "estimate", "converged", "iterations"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let table: Vec<Vec<String>> = fit
        .params
        .iter()
        .map(|(name, value)| {
            vec![
                fit.model.label().to_string(),
                name.to_string(),
                fmt_sig(value),
                fit.converged.to_string(),
                fit.iterations.to_string(),
            ]
        })
        .collect();
    match format {
        Format::Csv => write_csv(&header, &table, sink),
        Format::Markdown => write_markdown(&header, &table, sink),
    }
}

fn write_csv<W: Write>(header: &[String], table: &[Vec<String>], sink: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header).map_err(csv_io)?;
    for row in table {
        w.write_record(row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::Io(e),
        other => CliError::Io(io::Error::other(format!("{other:?}"))),
    }
}

fn write_markdown<W: Write>(header: &[String], table: &[Vec<String>], mut sink: W) -> Result<(), CliError> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len().max(3)).collect();
    for row in table {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        format!("| {} |", padded.join(" | "))
    };
    writeln!(sink, "{}", line(header))?;
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    writeln!(sink, "| {} |", rule.join(" | "))?;
    for row in table {
        writeln!(sink, "{}", line(row))?;
    }
    sink.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use censreg::datagen::DesignKind;
    use censreg::ModelKind;

    fn cox_row(truth: Option<f64>) -> McSummaryRow {
        McSummaryRow {
            design: DesignKind::WeibullAft,
            censor_frac: 0.1,
            model: ModelKind::CoxPh,
            parameter: "z1".into(),
            truth,
            mean: -1.508,
            emp_sd: 0.185,
            rel_bias_pct: truth.map(|_| -0.5),
            n_converged: 500,
            n_total: 500,
        }
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(fmt_sig(-1.508), "-1.508");
        assert_eq!(fmt_sig(0.1), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_sig(-0.8075718), "-0.807572");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e6");
        assert_eq!(fmt_sig(0.0000123456789), "1.23457e-5");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(999999.5), "1e6");
        assert_eq!(fmt_sig(f64::NAN), "NaN");
    }

    #[test]
    fn csv_line() {
        let mut buf = Vec::new();
        emit_rows(&[cox_row(Some(-1.5))], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next(),
            Some("design,censor_rate,model,parameter,true,mean,emp_sd,rel_bias_pct,n_converged,n_total")
        );
        assert_eq!(lines.next(), Some("weibull,0.1,coxph,z1,-1.5,-1.508,0.185,-0.5,500,500"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn absent_truth() {
        let mut buf = Vec::new();
        emit_rows(&[cox_row(None)], Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1), Some("weibull,0.1,coxph,z1,,-1.508,0.185,,500,500"));

        let mut buf = Vec::new();
        emit_rows(&[cox_row(None)], Format::Markdown, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cells: Vec<&str> = text.lines().nth(2).unwrap().split('|').map(str::trim).collect();
        assert_eq!(cells[5], "--");
        assert_eq!(cells[8], "--");
    }

    #[test]
    fn markdown_is_aligned() {
        let mut buf = Vec::new();
        emit_rows(&[cox_row(Some(-1.5)), cox_row(None)], Format::Markdown, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let widths: Vec<usize> = text.lines().map(|l| l.chars().count()).collect();
        assert_eq!(widths.len(), 4);
        assert!(widths.iter().all(|&w| w == widths[0]));
        assert!(text.lines().nth(1).unwrap().starts_with("| ---"));
    }

    #[test]
    fn empty_rows_write_nothing() {
        let mut buf = Vec::new();
        assert!(matches!(emit_rows(&[], Format::Csv, &mut buf), Err(CliError::Io(_))));
        assert!(buf.is_empty());
    }
}
