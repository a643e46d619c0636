//! Plain-text report layout and delimited tables.

use std::fmt::Write;

/// Fixed-decimal rendering without a sign on values that round to zero.
pub fn fixed(value: f64, decimals: usize) -> String {
    let s = format!("{value:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.chars().all(|c| c == '0' || c == '.') => rest.to_string(),
        _ => s,
    }
}

/// Left-aligned first column, right-aligned others, two-space gutters.
pub fn text_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: Vec<&str>, out: &mut String| {
        let mut parts = Vec::with_capacity(cells.len());
        for (j, (cell, w)) in cells.iter().zip(&widths).enumerate() {
            if j == 0 {
                parts.push(format!("{cell:<w$}"));
            } else {
                parts.push(format!("{cell:>w$}"));
            }
        }
        let _ = writeln!(out, "  {}", parts.join("  ").trim_end());
    };
    line(headers.to_vec(), &mut out);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    line(rule.iter().map(String::as_str).collect(), &mut out);
    for row in rows {
        line(row.iter().map(String::as_str).collect(), &mut out);
    }
    out
}

/// Delimited table with minimal quoting.
pub fn delimited(headers: &[&str], rows: &[Vec<String>], delimiter: u8) -> String {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(headers).expect("writing to memory");
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("inputs are UTF-8")
}

pub struct Report {
    text: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "{title}");
        let _ = writeln!(text, "{}", "=".repeat(title.chars().count()));
        Report { text }
    }

    pub fn section(&mut self, heading: &str) {
        let _ = writeln!(self.text, "\n{heading}");
        let _ = writeln!(self.text, "{}", "-".repeat(heading.chars().count()));
    }

    pub fn line(&mut self, line: impl AsRef<str>) {
        let _ = writeln!(self.text, "{}", line.as_ref());
    }

    pub fn table(&mut self, headers: &[&str], rows: &[Vec<String>]) {
        self.text.push_str(&text_table(headers, rows));
    }

    pub fn finish(self) -> String {
        self.text
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_drops_negative_zero() {
        assert_eq!(fixed(-0.00001, 4), "0.0000");
        assert_eq!(fixed(-0.25, 2), "-0.25");
        assert_eq!(fixed(1.0, 4), "1.0000");
    }

    #[test]
    fn table_alignment() {
        let t = text_table(&["term", "b_p"], &[vec!["age".into(), "0.4000".into()], vec!["x".into(), "-1.2500".into()]]);
        assert_eq!(t, "  term      b_p\n  ----  -------\n  age    0.4000\n  x     -1.2500\n");
    }

    #[test]
    fn delimited_quotes_when_needed() {
        let t = delimited(&["variable", "b_p"], &[vec!["a,b".into(), "1".into()]], b',');
        assert_eq!(t, "variable,b_p\n\"a,b\",1\n");
    }
}
