//! Loading a numeric CSV, planting synthetic outliers in the response and
//! running conditional outlier detection on the result.

use cct::conformal::Localization;
use cct::data::{random_split, Dataset};
use cct::harness::{inject_outliers, load_csv, simulate, write_csv, CsvSchema, ExperimentConfig, NoiseLaw, Scenario};
use cct::outlier::{detect_outliers, fdp_and_power, OutlierConfig};

fn main() -> cct::Result<()> {
    let dir = tempfile_dir();
    let path = dir.join("a1.csv");
    let (names, rows) = simulate(&ExperimentConfig { scenario: Scenario::A1, n: 2000, seed: 1, ..Default::default() })?;
    write_csv(&path, &names, &rows)?;

    let schema = CsvSchema { responses: vec!["y".into()], ignore: vec!["outlier".into()], ..Default::default() };
    let table = load_csv(&path, &schema)?;
    let data = table.dataset()?;
    println!("loaded {} rows, covariates {:?}", table.len(), table.covariate_names);

    let mut rng = cct::rng::stream(2);
    let (clean_idx, test_idx) = random_split(data.len(), 0.8, &mut rng)?;
    let clean = data.subset(&clean_idx);
    let mut test = data.subset(&test_idx);
    let mut y = test.response()?.to_vec();
    let flags = inject_outliers(&mut y, 0.1, NoiseLaw::Shift, 12.0, &mut rng);
    test = Dataset::new(test.x, Some(y))?;

    let t = table.covariate_index("x10").expect("x10 column");
    let config = OutlierConfig {
        localization: Localization { weight_columns: Some(vec![t]), ..Default::default() },
        ..Default::default()
    };
    let run = detect_outliers(&clean, &test, &config, &mut rng)?;
    let (fdp, power) = fdp_and_power(&run.final_set, &flags);
    println!("{} detections, FDP {fdp:.3}, power {power:.3}", run.final_set.len());
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join("cct_csv_example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}
