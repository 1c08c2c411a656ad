use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ReportFormat};
use super::csv_io::format_number;
use crate::error::{Error, Result};
use crate::stats::{mean, standard_error};

/// Metrics of one replication, in the report's column order. `None` marks a
/// metric that is undefined for that replication (for instance a
/// conditional rate on an empty cell).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub replication: usize,
    pub seed: u64,
    pub metrics: Vec<Option<f64>>,
}

/// Mean and standard error over the replications where the metric is defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub metric: String,
    pub mean: Option<f64>,
    pub se: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub software: String,
    pub version: String,
    pub procedure: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    pub metric_names: Vec<String>,
    pub replications: Vec<ReplicationRow>,
    pub aggregates: Vec<Aggregate>,
}

/// Mean and `sd / sqrt(count)` of every metric column.
pub fn aggregate(metric_names: &[String], rows: &[ReplicationRow]) -> Result<Vec<Aggregate>> {
    if metric_names.is_empty() {
        return Err(Error::Data("report schema violation: no metrics".into()));
    }
    metric_names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let values: Vec<f64> = rows
                .iter()
                .map(|r| {
                    r.metrics.get(k).copied().ok_or_else(|| {
                        Error::Data(format!("replication {} lacks metric `{name}`", r.replication))
                    })
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .flatten()
                .collect();
            let count = values.len();
            Ok(Aggregate {
                metric: name.clone(),
                mean: (count > 0).then(|| mean(&values)),
                se: (count > 0).then(|| standard_error(&values)),
                count,
            })
        })
        .collect()
}

impl ExperimentReport {
    pub fn aggregate(&self, name: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.metric == name)
    }

    /// Defined per-replication values of one metric.
    pub fn column(&self, name: &str) -> Vec<f64> {
        match self.metric_names.iter().position(|m| m == name) {
            Some(k) => self.replications.iter().filter_map(|r| r.metrics[k]).collect(),
            None => Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        if self.metric_names.is_empty() {
            return Err(Error::Data("report schema violation: no metrics".into()));
        }
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, SignificantDigits::default());
        self.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per replication, then `mean`, `se` and `count` rows. The first
    /// column holds the replication index or the aggregate name, the second
    /// the replication seed (empty on aggregate rows), then one column per
    /// metric. Undefined values are empty cells.
    pub fn to_csv(&self) -> Result<String> {
        if self.metric_names.is_empty() {
            return Err(Error::Data("report schema violation: no metrics".into()));
        }
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["replication".to_string(), "seed".to_string()];
        header.extend(self.metric_names.iter().cloned());
        w.write_record(&header)?;
        for row in &self.replications {
            let mut rec = vec![row.replication.to_string(), row.seed.to_string()];
            rec.extend(row.metrics.iter().map(|&v| opt(v)));
            w.write_record(&rec)?;
        }
        let blocks: [(&str, Box<dyn Fn(&Aggregate) -> String>); 3] = [
            ("mean", Box::new(|a: &Aggregate| opt(a.mean))),
            ("se", Box::new(|a: &Aggregate| opt(a.se))),
            ("count", Box::new(|a: &Aggregate| a.count.to_string())),
        ];
        for (label, f) in blocks.iter() {
            let mut rec = vec![label.to_string(), String::new()];
            rec.extend(self.aggregates.iter().map(f));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv emits UTF-8"))
    }
}

/// Writes `report` to `path` in `format`.
pub fn emit_report(report: &ExperimentReport, path: &Path, format: ReportFormat) -> Result<()> {
    let body = match format {
        ReportFormat::Json => report.to_json()?,
        ReportFormat::Csv => report.to_csv()?,
    };
    let mut f = std::fs::File::create(path)?;
    f.write_all(body.as_bytes())?;
    Ok(())
}

/// Compact JSON with every float written as `d.dddddddddddddddde±x`.
#[derive(Default)]
struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        writer.write_all(format_number(value).as_bytes())
    }
}
