//! Fixed-precision number formatting and small CSV tables.

use std::fmt::Write as _;

pub const SIG_DIGITS: usize = 6;

/// `x` with six significant digits: fixed notation for moderate magnitudes,
/// exponent notation otherwise. Negative zero prints as `0`.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // Round first so that the exponent reflects the rounded value.
    let e: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap();
    let mag = e.abs().log10().floor() as i32;
    let s = if (-5..SIG_DIGITS as i32).contains(&mag) {
        let decimals = (SIG_DIGITS as i32 - 1 - mag).max(0) as usize;
        format!("{:.*}", decimals, e)
    } else {
        format!("{:.*e}", SIG_DIGITS - 1, e)
    };
    if s.parse::<f64>() == Ok(0.0) {
        "0".into()
    } else {
        s
    }
}

/// `x` rounded to six significant digits.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let line = |cells: &[String]| cells.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",");
        let _ = writeln!(out, "{}", line(&self.header));
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(r));
        }
        out
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}
