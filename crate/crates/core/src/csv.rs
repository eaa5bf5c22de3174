//! Plain CSV output with full-precision numbers.

use std::fmt::Write as _;

/// Formats a number with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a header plus numeric rows.
pub fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
