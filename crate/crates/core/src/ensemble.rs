//! Ensemble feature matrices: the first two score columns of several
//! embeddings placed side by side.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingResult, Method};
use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;
use crate::preprocess::format_num;

/// Components kept from every embedding.
pub const COMPONENTS_PER_METHOD: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// All eight methods.
    Large,
    /// MDS, t-SNE and PCA.
    Small,
    Custom(Vec<Method>),
}

impl Selection {
    /// Methods in canonical order, without duplicates.
    pub fn methods(&self) -> Vec<Method> {
        let mut m = match self {
            Selection::Large => Method::ALL.to_vec(),
            Selection::Small => vec![Method::Mds, Method::Tsne, Method::Pca],
            Selection::Custom(list) => list.clone(),
        };
        m.sort();
        m.dedup();
        m
    }

    pub fn name(&self) -> String {
        match self {
            Selection::Large => "large".into(),
            Selection::Small => "small".into(),
            Selection::Custom(list) => list
                .iter()
                .map(|m| m.name())
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    pub method: Method,
    /// 1-based component index.
    pub component: usize,
}

impl ColumnSource {
    pub fn label(&self) -> String {
        format!("{}:{}", self.method.name(), self.component)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMatrix {
    pub x: DenseMatrix,
    pub columns: Vec<ColumnSource>,
    pub y: Vec<u8>,
}

/// Concatenates the leading two components of the selected methods.
pub fn build_ensemble(
    results: &[EmbeddingResult],
    selection: &Selection,
    outcome: &[u8],
) -> Result<EnsembleMatrix> {
    let methods = selection.methods();
    if methods.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble selection".into()));
    }
    let mut parts = Vec::with_capacity(methods.len());
    for &m in &methods {
        let r = results
            .iter()
            .find(|r| r.method == m)
            .ok_or_else(|| Error::MissingMethod(m.label().to_string()))?;
        if r.dims() < COMPONENTS_PER_METHOD {
            return Err(Error::Shape(format!(
                "{} has {} component(s); at least {COMPONENTS_PER_METHOD} are needed",
                m.label(),
                r.dims()
            )));
        }
        if r.n_rows() != outcome.len() {
            return Err(Error::Shape(format!(
                "{} has {} rows but the outcome has {}",
                m.label(),
                r.n_rows(),
                outcome.len()
            )));
        }
        parts.push(r.scores.leading_columns(COMPONENTS_PER_METHOD));
    }
    let refs: Vec<&DenseMatrix> = parts.iter().collect();
    let x = DenseMatrix::hstack(&refs)?;
    let columns = methods
        .iter()
        .flat_map(|&method| {
            (1..=COMPONENTS_PER_METHOD).map(move |component| ColumnSource { method, component })
        })
        .collect();
    Ok(EnsembleMatrix {
        x,
        columns,
        y: outcome.to_vec(),
    })
}

impl EnsembleMatrix {
    /// CSV with a `method:component` header and a trailing outcome column.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = self.columns.iter().map(|c| c.label()).collect();
        header.push("outcome".into());
        out.write_record(&header)?;
        for (i, row) in self.x.row_iter().enumerate() {
            let mut rec: Vec<String> = row.iter().map(|&v| format_num(v)).collect();
            rec.push(self.y[i].to_string());
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
