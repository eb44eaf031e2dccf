//! Number formatting and observation parsing shared by the CLI.

use std::io::Read;

use crate::error::{Error, Result};

/// Significant digits of printed numbers.
pub const PRINT_DIGITS: usize = 10;

/// `%g`-style formatting with `digits` significant digits; infinities print
/// as `+inf` / `-inf`.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "+inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt(x: f64) -> String {
    format_sig(x, PRINT_DIGITS)
}

/// One observation per line, taken from the first comma-separated field.
/// A non-numeric first line is treated as a header; any other non-numeric
/// line is an error carrying its line number.
pub fn parse_observations<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut out = Vec::new();
    let mut seen_record = false;
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        let first = !seen_record;
        seen_record = true;
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(v) => {
                return Err(Error::Parse {
                    line,
                    message: format!("observation {v} is not finite"),
                })
            }
            Err(_) if first => {}
            Err(_) => {
                return Err(Error::Parse {
                    line,
                    message: format!("not a number: {field:?}"),
                })
            }
        }
    }
    Ok(out)
}
