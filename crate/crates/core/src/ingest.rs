//! Loaders for the Breast Cancer Wisconsin (Original) and Drug Consumption
//! (quantified) files as distributed by the UCI repository.

use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{complete_cases, Cell, Column, ColumnKind, DataTable};

pub const BREAST_CANCER_URL: &str =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/breast-cancer-wisconsin/breast-cancer-wisconsin.data";
pub const DRUG_URL: &str =
    "https://archive.ics.uci.edu/ml/machine-learning-databases/00373/drug_consumption.data";

/// The nine cytology predictors, in file order after the sample id.
pub const BREAST_CANCER_FEATURES: [&str; 9] = [
    "clump_thickness",
    "uniformity_cell_size",
    "uniformity_cell_shape",
    "marginal_adhesion",
    "single_epithelial_cell_size",
    "bare_nuclei",
    "bland_chromatin",
    "normal_nucleoli",
    "mitoses",
];

/// The twelve quantified predictors, in file order after the id.
pub const DRUG_FEATURES: [(&str, ColumnKind); 12] = [
    ("age", ColumnKind::Ordinal),
    ("gender", ColumnKind::Binary),
    ("education", ColumnKind::Ordinal),
    ("country", ColumnKind::Nominal),
    ("ethnicity", ColumnKind::Nominal),
    ("nscore", ColumnKind::Continuous),
    ("escore", ColumnKind::Continuous),
    ("oscore", ColumnKind::Continuous),
    ("ascore", ColumnKind::Continuous),
    ("cscore", ColumnKind::Continuous),
    ("impulsive", ColumnKind::Continuous),
    ("ss", ColumnKind::Continuous),
];

/// The nineteen substance columns, in file order.
pub const DRUG_SUBSTANCES: [&str; 19] = [
    "alcohol", "amphet", "amyl", "benzos", "caff", "cannabis", "choc", "coke", "crack",
    "ecstasy", "heroin", "ketamine", "legalh", "lsd", "meth", "mushrooms", "nicotine", "semer",
    "vsa",
];

const DRUG_COLUMNS: usize = 1 + 12 + 19;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Substance {
    Cocaine,
    Crack,
    Heroin,
}

impl Substance {
    pub const ALL: [Substance; 3] = [Substance::Cocaine, Substance::Crack, Substance::Heroin];

    pub fn name(self) -> &'static str {
        match self {
            Substance::Cocaine => "cocaine",
            Substance::Crack => "crack",
            Substance::Heroin => "heroin",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Substance::Cocaine => "coke",
            Substance::Crack => "crack",
            Substance::Heroin => "heroin",
        }
    }
}

impl fmt::Display for Substance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Substance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cocaine" | "coke" => Ok(Substance::Cocaine),
            "crack" => Ok(Substance::Crack),
            "heroin" => Ok(Substance::Heroin),
            _ => Err(Error::InvalidArgument(format!(
                "unknown substance `{s}`; expected one of cocaine, crack, heroin"
            ))),
        }
    }
}

/// A named dataset on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum DatasetSpec {
    BreastCancer { path: PathBuf },
    Drug { path: PathBuf, substance: Substance },
}

impl DatasetSpec {
    pub fn path(&self) -> &Path {
        match self {
            DatasetSpec::BreastCancer { path } | DatasetSpec::Drug { path, .. } => path,
        }
    }

    pub fn label(&self) -> String {
        match self {
            DatasetSpec::BreastCancer { .. } => "breast_cancer".into(),
            DatasetSpec::Drug { substance, .. } => format!("drug_{substance}"),
        }
    }

    pub fn load(&self) -> Result<DataTable> {
        match self {
            DatasetSpec::BreastCancer { path } => load_breast_cancer(path),
            DatasetSpec::Drug { path, substance } => load_drug(path, *substance),
        }
    }
}

fn open(path: &Path) -> Result<std::io::BufReader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(file))
}

fn records<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn number(field: &str, line: usize, col: usize) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            row: line,
            col,
            message: format!("`{field}` is not a number"),
        })
}

fn check_width(len: usize, expected: usize, line: usize) -> Result<()> {
    if len != expected {
        return Err(Error::Parse {
            row: line,
            col: len.min(expected),
            message: format!("expected {expected} columns, found {len}"),
        });
    }
    Ok(())
}

/// Parses the Breast Cancer Wisconsin (Original) format: no header, 11
/// comma-separated columns, `?` for missing. Drops the id, maps class 4
/// (malignant) to 1 and 2 (benign) to 0, and keeps complete cases only.
pub fn read_breast_cancer<R: Read>(r: R) -> Result<DataTable> {
    let mut columns: Vec<Column> = BREAST_CANCER_FEATURES
        .iter()
        .map(|name| Column::new(*name, ColumnKind::Ordinal))
        .collect();
    columns.push(Column::new("malignant", ColumnKind::Outcome));

    let mut rows = Vec::new();
    for (i, record) in records(r).records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        check_width(record.len(), 11, line)?;
        let mut row = Vec::with_capacity(10);
        for col in 1..10 {
            let field = &record[col];
            row.push(if field == "?" {
                Cell::Missing
            } else {
                Cell::Num(number(field, line, col)?)
            });
        }
        let class = match &record[10] {
            "4" => 1.0,
            "2" => 0.0,
            other => {
                return Err(Error::Parse {
                    row: line,
                    col: 10,
                    message: format!("class must be 2 or 4, got `{other}`"),
                })
            }
        };
        row.push(Cell::Num(class));
        rows.push(row);
    }
    complete_cases(&DataTable::new(columns, rows)?)
}

pub fn load_breast_cancer(path: impl AsRef<Path>) -> Result<DataTable> {
    read_breast_cancer(open(path.as_ref())?)
}

fn use_class(field: &str, line: usize, col: usize) -> Result<bool> {
    match field {
        "CL0" => Ok(false),
        "CL1" | "CL2" | "CL3" | "CL4" | "CL5" | "CL6" => Ok(true),
        other => Err(Error::Parse {
            row: line,
            col,
            message: format!("unknown usage class `{other}`; expected CL0..CL6"),
        }),
    }
}

/// Parses the quantified Drug Consumption file (32 columns; an optional
/// header row is detected and skipped). The outcome is 1 for any lifetime
/// use of `substance` (class other than CL0).
pub fn read_drug<R: Read>(r: R, substance: Substance) -> Result<DataTable> {
    let mut columns: Vec<Column> = DRUG_FEATURES
        .iter()
        .map(|(name, kind)| Column::new(*name, *kind))
        .collect();
    columns.push(Column::new(
        format!("{}_use", substance.name()),
        ColumnKind::Outcome,
    ));
    let target = 13
        + DRUG_SUBSTANCES
            .iter()
            .position(|&s| s == substance.column())
            .expect("substance column listed");

    let mut rows = Vec::new();
    for (i, record) in records(r).records().enumerate() {
        let record = record?;
        let line = i + 1;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        check_width(record.len(), DRUG_COLUMNS, line)?;
        if i == 0 && record[0].parse::<f64>().is_err() {
            continue;
        }
        let mut row = Vec::with_capacity(13);
        for col in 1..13 {
            row.push(Cell::Num(number(&record[col], line, col)?));
        }
        for col in 13..DRUG_COLUMNS {
            use_class(&record[col], line, col)?;
        }
        let used = use_class(&record[target], line, target)?;
        row.push(Cell::Num(f64::from(u8::from(used))));
        rows.push(row);
    }
    DataTable::new(columns, rows)
}

pub fn load_drug(path: impl AsRef<Path>, substance: Substance) -> Result<DataTable> {
    read_drug(open(path.as_ref())?, substance)
}
