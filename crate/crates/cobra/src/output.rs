//! Artifact writing: CSV tables and JSON documents, both headed by the
//! library version, the subcommand and a one-line echo of the resolved
//! config. No timestamps are written, so equal inputs give equal bytes.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::config::Format;

/// Provenance carried by every artifact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Preamble {
    pub version: String,
    pub command: String,
    pub config: Value,
}

impl Preamble {
    pub fn new(command: &str, config_echo: &str) -> Self {
        Preamble {
            version: format!("cobra {}", cobra_core::VERSION),
            command: command.to_string(),
            config: serde_json::from_str(config_echo).unwrap_or(Value::Null),
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {}\n# command: {}\n# config: {}\n",
            self.version, self.command, self.config
        )
    }
}

/// Rectangular result with a header row.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<S: ToString>(&mut self, row: impl IntoIterator<Item = S>) {
        self.rows
            .push(row.into_iter().map(|c| c.to_string()).collect());
    }
}

/// One curve of a plot: `(t, value, se)` points.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64, f64)>,
}

fn csv_body(table: &Table) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Renders the artifact for `format`: for CSV the preamble as `#` comment
/// lines followed by the table; for JSON one document holding the preamble,
/// `results` and the table.
pub fn render(
    preamble: &Preamble,
    results: &Value,
    table: &Table,
    format: Format,
) -> anyhow::Result<Vec<u8>> {
    Ok(match format {
        Format::Csv => {
            let mut out = preamble.comment_lines().into_bytes();
            out.extend(csv_body(table)?);
            out
        }
        Format::Json => {
            let doc = serde_json::json!({
                "version": preamble.version,
                "command": preamble.command,
                "config": preamble.config,
                "results": results,
                "table": { "header": table.header, "rows": table.rows },
            });
            let mut out = serde_json::to_vec_pretty(&doc)?;
            out.push(b'\n');
            out
        }
    })
}

/// Long-format plot data: one `series,t,value,se` row per point, series in
/// input order. Curves of equal length are interleaved point by point so
/// overlaid series stay aligned.
pub fn plot_table(curves: &[Series]) -> Table {
    let mut table = Table::new(["series", "t", "value", "se"]);
    let aligned = curves
        .windows(2)
        .all(|w| w[0].points.len() == w[1].points.len());
    if aligned {
        let n = curves.first().map_or(0, |c| c.points.len());
        for k in 0..n {
            for c in curves {
                let (t, v, se) = c.points[k];
                table.push([c.name.clone(), t.to_string(), v.to_string(), se.to_string()]);
            }
        }
    } else {
        for c in curves {
            for &(t, v, se) in &c.points {
                table.push([c.name.clone(), t.to_string(), v.to_string(), se.to_string()]);
            }
        }
    }
    table
}

/// Writes [`plot_table`] as CSV to `path`, headed by the preamble comments
/// when one is given.
pub fn emit_plot_data(
    curves: &[Series],
    path: &Path,
    preamble: Option<&Preamble>,
) -> anyhow::Result<()> {
    let mut out = preamble
        .map(Preamble::comment_lines)
        .unwrap_or_default()
        .into_bytes();
    out.extend(csv_body(&plot_table(curves))?);
    std::fs::File::create(path)?.write_all(&out)?;
    Ok(())
}
