//! Command reports: a JSON document, aligned text tables and CSV blocks.

use serde::Serialize;
use serde_json::Value;

/// A rectangular table of preformatted cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Left-aligned text, two spaces between columns.
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.columns.len())
            .map(|j| {
                self.rows
                    .iter()
                    .map(|r| r[j].chars().count())
                    .chain([self.columns[j].chars().count()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> =
                cells.iter().zip(&widths).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = vec![line(&self.columns)];
        out.push(widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.extend(self.rows.iter().map(|r| line(r)));
        out.join("\n")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }
}

/// Fixed-format number: ten significant digits in scientific notation, and
/// `inf`, `-inf` or `nan` for the non-finite values. Negative zero prints as zero.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{:.9e}", x + 0.0)
    }
}

pub fn vector(x: &[f64]) -> String {
    format!("[{}]", x.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "))
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub schema_version: u32,
    /// Tolerances, grids and seeds the command ran with.
    pub config: Value,
    pub result: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Report {
    /// JSON document, then each table as text and as CSV.
    pub fn render(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report values serialize");
        out.push('\n');
        for t in &self.tables {
            out.push_str(&format!("\n== {} ==\n{}\n", t.name, t.to_text()));
        }
        for t in &self.tables {
            out.push_str(&format!("\n-- csv: {} --\n{}", t.name, t.to_csv()));
        }
        out
    }
}
