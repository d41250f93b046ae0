//! Tabular data: typed columns, complete-case filtering, categorical
//! encoding, z-scoring and a self-describing CSV form.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Ordinal,
    Binary,
    Nominal,
    Outcome,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Continuous => "continuous",
            ColumnKind::Ordinal => "ordinal",
            ColumnKind::Binary => "binary",
            ColumnKind::Nominal => "nominal",
            ColumnKind::Outcome => "outcome",
        }
    }
}

impl fmt::Display for ColumnKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ColumnKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "continuous" => ColumnKind::Continuous,
            "ordinal" => ColumnKind::Ordinal,
            "binary" => ColumnKind::Binary,
            "nominal" => ColumnKind::Nominal,
            "outcome" => ColumnKind::Outcome,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown column kind `{other}`"
                )))
            }
        })
    }
}

/// A single table cell. Text only appears in nominal columns.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Missing,
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

impl Column {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Rectangular dataset with typed columns and exactly one outcome column.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    columns: Vec<Column>,
    rows: Vec<Vec<Cell>>,
    outcome: usize,
}

impl DataTable {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        let outcomes: Vec<usize> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ColumnKind::Outcome)
            .map(|(i, _)| i)
            .collect();
        if outcomes.len() != 1 {
            return Err(Error::Data(format!(
                "expected exactly one outcome column, found {}",
                outcomes.len()
            )));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::Shape(format!(
                    "row {r} has {} cells, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            for (c, cell) in row.iter().enumerate() {
                match cell {
                    Cell::Num(v) if !v.is_finite() => {
                        return Err(Error::NonFinite { row: r, col: c })
                    }
                    Cell::Text(_) if columns[c].kind != ColumnKind::Nominal => {
                        return Err(Error::Parse {
                            row: r,
                            col: c,
                            message: format!(
                                "text value in {} column `{}`",
                                columns[c].kind, columns[c].name
                            ),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(Self {
            columns,
            rows,
            outcome: outcomes[0],
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn outcome_index(&self) -> usize {
        self.outcome
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn count_kind(&self, kind: ColumnKind) -> usize {
        self.columns.iter().filter(|c| c.kind == kind).count()
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_missing()).count()
    }

    /// Numeric outcome values, `None` where missing or non-numeric.
    pub fn outcome_values(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r[self.outcome].as_num()).collect()
    }

    /// Writes the table as CSV with a `name:kind` header; missing cells are
    /// empty fields.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(
            self.columns
                .iter()
                .map(|c| format!("{}:{}", c.name, c.kind)),
        )?;
        for row in &self.rows {
            out.write_record(row.iter().map(|cell| match cell {
                Cell::Num(v) => format_num(*v),
                Cell::Text(s) => s.clone(),
                Cell::Missing => String::new(),
            }))?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads the format produced by [`DataTable::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut columns = Vec::new();
        for (c, field) in reader.headers()?.iter().enumerate() {
            let (name, kind) = field.rsplit_once(':').ok_or_else(|| Error::Parse {
                row: 0,
                col: c,
                message: format!("header `{field}` is not `name:kind`"),
            })?;
            columns.push(Column::new(name, kind.parse()?));
        }
        let mut rows = Vec::new();
        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .enumerate()
                .map(|(c, field)| {
                    if field.is_empty() {
                        Ok(Cell::Missing)
                    } else if let Ok(v) = field.parse::<f64>() {
                        Ok(Cell::Num(v))
                    } else if columns[c].kind == ColumnKind::Nominal {
                        Ok(Cell::Text(field.to_string()))
                    } else {
                        Err(Error::Parse {
                            row: r + 1,
                            col: c,
                            message: format!("`{field}` is not a number"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(columns, rows)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_num(v: f64) -> String {
    format!("{v}")
}

/// How a predictor column's values relate to the source table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Encoding {
    /// Numeric values copied as-is.
    Numeric,
    /// Text labels replaced by integer codes; `labels[c]` is the label of
    /// code `c`.
    Codes { labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnProvenance {
    pub name: String,
    pub kind: ColumnKind,
    pub encoding: Encoding,
    /// `(mean, sd)` removed by [`standardize`]; `sd` is 0 for constant
    /// columns.
    pub scaling: Option<(f64, f64)>,
}

/// Predictor matrix, binary outcome and per-column provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub x: DenseMatrix,
    pub y: Vec<u8>,
    pub provenance: Vec<ColumnProvenance>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn n_features(&self) -> usize {
        self.x.cols()
    }

    pub fn feature_names(&self) -> Vec<&str> {
        self.provenance.iter().map(|p| p.name.as_str()).collect()
    }

    /// Original cell for predictor `col` given an encoded (and possibly
    /// standardized) value.
    pub fn decode(&self, col: usize, value: f64) -> Cell {
        let p = &self.provenance[col];
        let raw = match p.scaling {
            Some((mean, sd)) if sd > 0.0 => value * sd + mean,
            Some((mean, _)) => mean,
            None => value,
        };
        match &p.encoding {
            Encoding::Numeric => Cell::Num(raw),
            Encoding::Codes { labels } => {
                let code = raw.round();
                if code >= 0.0 && (code as usize) < labels.len() {
                    Cell::Text(labels[code as usize].clone())
                } else {
                    Cell::Num(raw)
                }
            }
        }
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }
}

/// Drops every row holding a missing cell, keeping row order.
pub fn complete_cases(t: &DataTable) -> Result<DataTable> {
    let rows: Vec<Vec<Cell>> = t
        .rows
        .iter()
        .filter(|r| !r.iter().any(Cell::is_missing))
        .cloned()
        .collect();
    if rows.is_empty() {
        return Err(Error::Data(format!(
            "no complete rows among {} (every row has a missing cell)",
            t.n_rows()
        )));
    }
    Ok(DataTable {
        columns: t.columns.clone(),
        rows,
        outcome: t.outcome,
    })
}

/// Converts a complete table into a numeric predictor matrix.
///
/// Text labels in nominal columns become integer codes in order of first
/// appearance; numeric cells pass through unchanged. The outcome must take
/// the values 0 and 1, both present.
pub fn encode(t: &DataTable) -> Result<FeatureMatrix> {
    if t.n_rows() == 0 {
        return Err(Error::Data("table has no rows".into()));
    }
    let mut y = Vec::with_capacity(t.n_rows());
    for (r, row) in t.rows.iter().enumerate() {
        match row[t.outcome] {
            Cell::Num(v) if v == 0.0 => y.push(0u8),
            Cell::Num(v) if v == 1.0 => y.push(1u8),
            Cell::Missing => {
                return Err(Error::Data(format!(
                    "row {r} is incomplete; apply complete_cases first"
                )))
            }
            ref other => {
                return Err(Error::Parse {
                    row: r,
                    col: t.outcome,
                    message: format!("outcome must be 0 or 1, got {other:?}"),
                })
            }
        }
    }
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::Data(format!(
            "outcome is constant (every row is {})",
            y[0]
        )));
    }

    let predictors: Vec<usize> = (0..t.n_cols()).filter(|&c| c != t.outcome).collect();
    let n = t.n_rows();
    let p = predictors.len();
    if p == 0 {
        return Err(Error::Data("table has no predictor columns".into()));
    }
    let mut data = vec![0.0; n * p];
    let mut provenance = Vec::with_capacity(p);
    for (j, &c) in predictors.iter().enumerate() {
        let col = &t.columns[c];
        let mut labels: Vec<String> = Vec::new();
        for (r, row) in t.rows.iter().enumerate() {
            data[r * p + j] = match &row[c] {
                Cell::Num(v) => *v,
                Cell::Text(s) => match labels.iter().position(|l| l == s) {
                    Some(code) => code as f64,
                    None => {
                        labels.push(s.clone());
                        (labels.len() - 1) as f64
                    }
                },
                Cell::Missing => {
                    return Err(Error::Data(format!(
                        "row {r} is incomplete; apply complete_cases first"
                    )))
                }
            };
        }
        let encoding = if labels.is_empty() {
            Encoding::Numeric
        } else {
            Encoding::Codes { labels }
        };
        provenance.push(ColumnProvenance {
            name: col.name.clone(),
            kind: col.kind,
            encoding,
            scaling: None,
        });
    }
    Ok(FeatureMatrix {
        x: DenseMatrix::from_raw(n, p, data),
        y,
        provenance,
    })
}

/// Z-scores every predictor column (sample standard deviation). Columns
/// whose spread is negligible relative to their magnitude become zeros.
pub fn standardize(m: &FeatureMatrix) -> FeatureMatrix {
    let (n, p) = m.x.shape();
    let mut data = m.x.as_slice().to_vec();
    let mut provenance = m.provenance.clone();
    for j in 0..p {
        let mean = (0..n).map(|i| data[i * p + j]).sum::<f64>() / n as f64;
        let ss: f64 = (0..n).map(|i| (data[i * p + j] - mean).powi(2)).sum();
        let sd = if n > 1 { (ss / (n - 1) as f64).sqrt() } else { 0.0 };
        let scale = (0..n).fold(0.0_f64, |a, i| a.max(data[i * p + j].abs()));
        let constant = sd <= 1e-12 * scale.max(f64::MIN_POSITIVE);
        for i in 0..n {
            let v = &mut data[i * p + j];
            *v = if constant { 0.0 } else { (*v - mean) / sd };
        }
        let (prev_mean, prev_sd) = provenance[j].scaling.unwrap_or((0.0, 1.0));
        provenance[j].scaling = Some(if constant {
            (prev_mean + prev_sd * mean, 0.0)
        } else {
            (prev_mean + prev_sd * mean, prev_sd * sd)
        });
    }
    FeatureMatrix {
        x: DenseMatrix::from_raw(n, p, data),
        y: m.y.clone(),
        provenance,
    }
}
