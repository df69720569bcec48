//! Versioned CSV files and atomic writes.
//!
//! Every file starts with [`FORMAT_HEADER`]. Further `#` lines carry
//! `key=value` metadata; the first non-comment line names the columns.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::echo::{EchoSeries, Provenance, TimeGrid};
use crate::error::{Error, Result};

pub const FORMAT_HEADER: &str = "# dicke-phase-lab v1";

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error.to_string()))?;
    Ok(())
}

/// `0.0` for negative zero, so identical runs never differ in a sign.
pub(crate) fn canonical(x: f64) -> f64 {
    x + 0.0
}

pub(crate) fn format_value(x: f64) -> String {
    format!("{:.12e}", canonical(x))
}

pub(crate) fn format_option(x: Option<f64>) -> String {
    x.map(format_value).unwrap_or_default()
}

fn metadata_line(metadata: &BTreeMap<String, String>) -> Option<String> {
    if metadata.is_empty() {
        return None;
    }
    let pairs: Vec<String> = metadata.iter().map(|(k, v)| format!("{k}={v}")).collect();
    Some(format!("# {}", pairs.join(" ")))
}

/// Header, optional metadata line, column line and rows.
pub(crate) fn render(
    metadata: &BTreeMap<String, String>,
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<String> {
    let mut out = String::new();
    out.push_str(FORMAT_HEADER);
    out.push('\n');
    if let Some(line) = metadata_line(metadata) {
        out.push_str(&line);
        out.push('\n');
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(columns).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV output is UTF-8"));
    Ok(out)
}

/// A parsed file: metadata from the comment lines, column names and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub metadata: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn parse(text: &str) -> Result<Self> {
        let first = text.lines().next().unwrap_or("");
        if first.trim_end() != FORMAT_HEADER {
            return Err(Error::MalformedCsv(format!(
                "expected first line {FORMAT_HEADER:?}, found {first:?}"
            )));
        }
        let mut metadata = BTreeMap::new();
        for line in text.lines().skip(1).take_while(|l| l.starts_with('#')) {
            for pair in line.trim_start_matches('#').split_whitespace() {
                if let Some((k, v)) = pair.split_once('=') {
                    metadata.insert(k.to_string(), v.to_string());
                }
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns: Vec<String> = reader
            .headers()
            .map_err(|e| Error::MalformedCsv(e.to_string()))?
            .iter()
            .map(|s| s.trim().to_string())
            .collect();
        let rows = reader
            .records()
            .map(|r| {
                r.map(|rec| rec.iter().map(|s| s.trim().to_string()).collect())
                    .map_err(|e| Error::MalformedCsv(e.to_string()))
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self {
            metadata,
            columns,
            rows,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MalformedCsv(format!("missing column {name:?}")))
    }

    /// Numeric column; empty cells and `NaN` become NaN.
    pub fn numbers(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let cell = row.get(i).map(String::as_str).unwrap_or("");
                if cell.is_empty() {
                    return Ok(f64::NAN);
                }
                cell.parse::<f64>().map_err(|_| {
                    Error::MalformedCsv(format!("row {}: {name} = {cell:?} is not a number", k + 1))
                })
            })
            .collect()
    }
}

/// Contents of an echo file.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoFile {
    pub metadata: BTreeMap<String, String>,
    pub series: EchoSeries,
    pub d: Vec<f64>,
    /// Analytic `L` and `D` on the same grid, when present.
    pub overlay: Option<(Vec<f64>, Vec<f64>)>,
}

const ECHO_COLUMNS: [&str; 4] = ["t", "L", "D", "valid"];
const OVERLAY_COLUMNS: [&str; 2] = ["L_analytic", "D_analytic"];

impl EchoFile {
    pub fn to_csv(&self) -> Result<String> {
        let mut columns: Vec<&str> = ECHO_COLUMNS.to_vec();
        if self.overlay.is_some() {
            columns.extend(OVERLAY_COLUMNS);
        }
        let s = &self.series;
        let rows = (0..s.len()).map(|k| {
            let mut row = vec![
                format!("{:.10}", canonical(s.times[k])),
                format_value(s.values[k]),
                format_value(self.d[k]),
                if s.valid[k] { "1" } else { "0" }.to_string(),
            ];
            if let Some((l, d)) = &self.overlay {
                row.push(format_value(l[k]));
                row.push(format_value(d[k]));
            }
            row
        });
        render(&self.metadata, &columns, rows)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table = CsvTable::parse(text)?;
        let times = table.numbers("t")?;
        let values = table.numbers("L")?;
        let d = table.numbers("D")?;
        let flags = table.numbers("valid")?;
        if times.len() < 2 {
            return Err(Error::MalformedCsv("need at least two rows".into()));
        }
        if times[0].abs() > 1e-12 {
            return Err(Error::MalformedCsv(format!("time must start at 0 (got {})", times[0])));
        }
        let dt = times[1] - times[0];
        for (k, t) in times.iter().enumerate() {
            let expected = k as f64 * dt;
            if !t.is_finite() || (t - expected).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::MalformedCsv(format!(
                    "row {}: time {t} is off the uniform grid (dt = {dt})",
                    k + 1
                )));
            }
        }
        let grid = TimeGrid {
            dt,
            steps: times.len() - 1,
        };
        let provenance = match table.metadata.get("engine").map(String::as_str) {
            Some("effective") => Provenance::EffectiveOracle,
            Some("finite") => Provenance::FiniteN,
            _ => Provenance::Analytic,
        };
        let mut series = EchoSeries::from_values(&grid, values, provenance);
        for (k, (v, flag)) in series.valid.iter_mut().zip(&flags).enumerate() {
            match *flag as i64 {
                0 => *v = false,
                1 if *flag == 1.0 => {}
                _ => {
                    return Err(Error::MalformedCsv(format!(
                        "row {}: valid must be 0 or 1 (got {flag})",
                        k + 1
                    )))
                }
            }
        }
        let overlay = if table.columns.iter().any(|c| c == OVERLAY_COLUMNS[0]) {
            Some((
                table.numbers(OVERLAY_COLUMNS[0])?,
                table.numbers(OVERLAY_COLUMNS[1])?,
            ))
        } else {
            None
        };
        Ok(Self {
            metadata: table.metadata,
            series,
            d,
            overlay,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}
