//! CSV emission. UTF-8, LF line endings, `.` decimal separator, at least 12
//! significant digits for every real value.

use std::fmt::Write as _;

use crate::error::invalid;
use crate::Result;

/// Fixed-point rendering with 12 significant digits.
pub fn format_real(v: f64) -> Result<String> {
    if !v.is_finite() {
        return Err(invalid(
            "output",
            format!("refusing to write non-finite value {v}"),
        ));
    }
    if v == 0.0 {
        return Ok("0.00000000000".to_string());
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(1, 80) as usize;
    Ok(format!("{v:.decimals$}"))
}

/// Builds a CSV document row by row.
#[derive(Debug, Default)]
pub struct CsvBuilder {
    text: String,
    columns: usize,
}

impl CsvBuilder {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            columns: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.columns);
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn finish(self) -> String {
        self.text
    }
}
