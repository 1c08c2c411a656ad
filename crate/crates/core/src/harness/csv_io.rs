use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::NoiseLaw;
use crate::data::{Dataset, Matrix};
use crate::error::{Error, Result};
use crate::scenarios::exact_flags;
use crate::screening::MultiLabelDataset;

/// Column roles. An empty covariate list means every column that is not a
/// response and not ignored.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub covariates: Vec<String>,
    pub responses: Vec<String>,
    pub ignore: Vec<String>,
}

/// A numeric table split into covariates and responses, row order preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTable {
    pub covariate_names: Vec<String>,
    pub response_names: Vec<String>,
    pub x: Matrix,
    /// `responses[i]` holds the response values of row `i`.
    pub responses: Vec<Vec<f64>>,
}

impl LoadedTable {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    /// Single-response view (or unlabeled when there is no response).
    pub fn dataset(&self) -> Result<Dataset> {
        match self.response_names.len() {
            0 => Ok(Dataset::unlabeled(self.x.clone())),
            1 => Dataset::new(self.x.clone(), Some(self.responses.iter().map(|r| r[0]).collect())),
            k => Err(Error::Data(format!("expected one response column, found {k}"))),
        }
    }

    pub fn multi_label(&self) -> Result<MultiLabelDataset> {
        MultiLabelDataset::new(self.x.clone(), self.responses.clone())
    }

    /// Index of a covariate or, failing that, `None`.
    pub fn covariate_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    pub fn response_index(&self, name: &str) -> Option<usize> {
        self.response_names.iter().position(|c| c == name)
    }
}

fn position(headers: &[String], name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Data(format!("{}: missing column `{name}`", path.display())))
}

/// Reads a headed numeric CSV file.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LoadedTable> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(Error::Data(format!("{}: empty file", path.display())));
    }
    let resp_idx: Vec<usize> = schema.responses.iter().map(|r| position(&headers, r, path)).collect::<Result<_>>()?;
    for name in &schema.ignore {
        position(&headers, name, path)?;
    }
    let cov_idx: Vec<usize> = if schema.covariates.is_empty() {
        (0..headers.len())
            .filter(|i| !resp_idx.contains(i) && !schema.ignore.contains(&headers[*i]))
            .collect()
    } else {
        schema.covariates.iter().map(|c| position(&headers, c, path)).collect::<Result<_>>()?
    };
    if cov_idx.is_empty() {
        return Err(Error::Data(format!("{}: no covariate columns", path.display())));
    }

    let mut xs = Vec::new();
    let mut responses = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let cell = |j: usize| -> Result<f64> {
            let raw = record.get(j).unwrap_or("");
            raw.parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "{}: line {line} (data row {}), column `{}`: cannot parse `{raw}` as a number",
                    path.display(),
                    k + 1,
                    headers[j]
                ))
            })
        };
        for &j in &cov_idx {
            xs.push(cell(j)?);
        }
        responses.push(resp_idx.iter().map(|&j| cell(j)).collect::<Result<Vec<f64>>>()?);
    }
    if responses.is_empty() {
        return Err(Error::Data(format!("{}: header only, no data rows", path.display())));
    }
    let n = responses.len();
    Ok(LoadedTable {
        covariate_names: cov_idx.iter().map(|&j| headers[j].clone()).collect(),
        response_names: resp_idx.iter().map(|&j| headers[j].clone()).collect(),
        x: Matrix::new(n, cov_idx.len(), xs)?,
        responses,
    })
}

/// Formats a number with 17 significant digits.
pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes named columns, one row per matrix row, numbers in [`format_number`] form.
pub fn write_csv(path: &Path, headers: &[String], rows: &Matrix) -> Result<()> {
    write_csv_to(std::fs::File::create(path)?, headers, rows)
}

pub fn write_csv_to<W: std::io::Write>(writer: W, headers: &[String], rows: &Matrix) -> Result<()> {
    if headers.len() != rows.ncols() {
        return Err(Error::DimensionMismatch { expected: rows.ncols(), found: headers.len() });
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(headers)?;
    for row in rows.rows() {
        w.write_record(row.iter().map(|&v| format_number(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Adds noise to one column of `round(fraction * n)` uniformly chosen rows
/// and returns the resulting outlier flags.
pub fn inject_outliers<R: Rng + ?Sized>(
    values: &mut [f64],
    fraction: f64,
    law: NoiseLaw,
    magnitude: f64,
    rng: &mut R,
) -> Vec<bool> {
    let flags = exact_flags(values.len(), fraction, rng);
    for (v, &f) in values.iter_mut().zip(&flags) {
        if f {
            let e: f64 = match law {
                NoiseLaw::Normal => rng.sample(StandardNormal),
                NoiseLaw::Uniform => 2.0 * rng.random::<f64>() - 1.0,
                NoiseLaw::Shift => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            *v += magnitude * e;
        }
    }
    flags
}
