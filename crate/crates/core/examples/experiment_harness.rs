//! Driving replications from a config file and writing JSON and CSV reports.

use cct::harness::{emit_report, run_experiment, ExperimentConfig, ReportFormat};

const CONFIG: &str = r#"
procedure = "outlier-detect"
scenario = "a1"
n = 800
m = 200
alpha = 0.1
reps = 20
seed = 42
"#;

fn main() -> cct::Result<()> {
    let config = ExperimentConfig::from_toml_with_overrides(CONFIG, &[("alpha".into(), "0.15".into())])?;
    let report = run_experiment(&config)?;
    for agg in &report.aggregates {
        let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
        println!("{:<16} mean {:>9}  se {:>9}", agg.metric, show(agg.mean), show(agg.se));
    }
    let dir = std::env::temp_dir();
    emit_report(&report, &dir.join("cct_example.json"), ReportFormat::Json)?;
    emit_report(&report, &dir.join("cct_example.csv"), ReportFormat::Csv)?;
    println!("reports written to {}", dir.display());
    Ok(())
}
