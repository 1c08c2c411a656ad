use rayon::prelude::*;

use super::config::{ExperimentConfig, Procedure, Scenario};
use super::csv_io::{inject_outliers, load_csv, CsvSchema, LoadedTable};
use super::report::{aggregate, ExperimentReport, ReplicationRow};
use crate::data::{random_split, Dataset, Matrix, Standardizer};
use crate::error::{Error, Result};
use crate::outlier::{conformal_bh_baseline, detect_from_scores, fdp_and_power, score_split, OutlierConfig};
use crate::rng::{derive_seed, replication_stream, Stream};
use crate::scenarios::{gen_a1, gen_a2, gen_b1, split_rules, TwoSampleDesign};
use crate::screening::{fwer_metrics, screen, threshold_baseline, MultiLabelDataset, Rule, ScreeningConfig};
use crate::selection::{pser_metrics, select, unweighted_selection, SelectionConfig};
use crate::two_sample::{conditional_two_sample_test, TwoSampleConfig};

/// Named metric values of one replication, in emission order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics(pub Vec<(String, Option<f64>)>);

impl Metrics {
    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.0.push((name.into(), Some(value)));
    }

    /// Records an undefined metric as `None`; other errors propagate.
    pub fn push_defined(&mut self, name: impl Into<String>, value: Result<f64>) -> Result<()> {
        let v = match value {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        self.0.push((name.into(), v));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.iter().find(|(n, _)| n == name).and_then(|(_, v)| *v)
    }
}

/// Cell index of every row: bit `k` is set when column `columns[k]` is at or above `cuts[k]`.
pub fn cell_membership(x: &Matrix, columns: &[usize], cuts: &[f64]) -> Result<Vec<usize>> {
    if let Some(&bad) = columns.iter().find(|&&c| c >= x.ncols()) {
        return Err(Error::Config(format!("field `condition_columns`: column {bad} out of range for {} columns", x.ncols())));
    }
    Ok(x.rows()
        .map(|row| {
            columns
                .iter()
                .zip(cuts)
                .enumerate()
                .fold(0, |acc, (k, (&c, &cut))| if row[c] >= cut { acc | (1 << k) } else { acc })
        })
        .collect())
}

/// Suffix `cell<bits>` with one bit per condition column, first column first.
pub fn cell_name(cell: usize, k: usize) -> String {
    let bits: String = (0..k).map(|b| if cell >> b & 1 == 1 { '1' } else { '0' }).collect();
    format!("cell{bits}")
}

/// A validated config together with any loaded data, shared by all replications.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub procedure: Procedure,
    pub table: Option<LoadedTable>,
    pub rules: Vec<Rule>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let procedure = config
            .procedure
            .ok_or_else(|| Error::Config("field `procedure`: not set (pass a subcommand or set it in the file)".into()))?;
        config.check_scenario(procedure)?;
        let table = match (&config.scenario, &config.csv) {
            (Scenario::Csv, Some(path)) => Some(load_csv(
                path,
                &CsvSchema {
                    covariates: config.covariate_columns.clone(),
                    responses: config.response_columns.clone(),
                    ignore: Vec::new(),
                },
            )?),
            _ => None,
        };
        let rules = config.parsed_rules()?;
        Ok(Self { config, procedure, table, rules })
    }

    fn table(&self) -> Result<&LoadedTable> {
        self.table.as_ref().ok_or_else(|| Error::Config("field `csv`: no table loaded".into()))
    }

    pub fn replication_seed(&self, rep: usize) -> u64 {
        derive_seed(self.config.seed, rep as u64)
    }

    /// Runs replication `rep` on its own derived stream.
    pub fn run_replication(&self, rep: usize) -> Result<Metrics> {
        let mut rng = replication_stream(self.config.seed, rep as u64);
        match self.procedure {
            Procedure::OutlierDetect => self.outlier(&mut rng),
            Procedure::LabelScreen => self.screen(&mut rng),
            Procedure::Select => self.select(&mut rng),
            Procedure::TwoSampleTest => self.two_sample(&mut rng),
        }
    }

    fn cells(&self, x: &Matrix) -> Result<Option<Vec<usize>>> {
        let c = &self.config;
        if c.condition_columns.is_empty() {
            return Ok(None);
        }
        cell_membership(x, &c.condition_columns, &c.condition_cuts).map(Some)
    }

    fn cell_count(&self) -> usize {
        1 << self.config.condition_columns.len()
    }

    fn standardized(&self, reference: Dataset, other: Dataset) -> (Dataset, Dataset) {
        if !self.config.standardize {
            return (reference, other);
        }
        let s = Standardizer::fit(&reference.x);
        (
            Dataset { x: s.transform(&reference.x), y: reference.y },
            Dataset { x: s.transform(&other.x), y: other.y },
        )
    }

    fn csv_outlier_data(&self, rng: &mut Stream) -> Result<(Dataset, Dataset, Vec<bool>)> {
        let table = self.table()?;
        let c = &self.config;
        let data = table.dataset()?;
        let (test_idx, clean_idx) = random_split(data.len(), c.test_fraction, rng)?;
        let clean = data.subset(&clean_idx);
        let mut test = data.subset(&test_idx);
        let flags = match &c.inject_column {
            None => vec![false; test.len()],
            Some(name) => {
                if let Some(j) = table.covariate_index(name) {
                    let mut col = test.x.column(j);
                    let flags = inject_outliers(&mut col, c.inject_fraction, c.inject_law, c.inject_magnitude, rng);
                    for (i, v) in col.into_iter().enumerate() {
                        test.x.set(i, j, v);
                    }
                    flags
                } else if table.response_index(name).is_some() {
                    let y = test.y.as_mut().expect("response column present");
                    inject_outliers(y, c.inject_fraction, c.inject_law, c.inject_magnitude, rng)
                } else {
                    return Err(Error::Config(format!("field `inject_column`: unknown column `{name}`")));
                }
            }
        };
        Ok((clean, test, flags))
    }

    fn outlier(&self, rng: &mut Stream) -> Result<Metrics> {
        let c = &self.config;
        let (clean, test, is_outlier) = match c.scenario {
            Scenario::A1 | Scenario::B1 => {
                let gen = if c.scenario == Scenario::A1 { gen_a1::<Stream> } else { gen_b1::<Stream> };
                let clean = gen(c.n, false, rng);
                let test = gen(c.m, true, rng);
                (clean.data, test.data, test.is_outlier)
            }
            _ => self.csv_outlier_data(rng)?,
        };
        let (clean, test) = self.standardized(clean, test);
        let oc = OutlierConfig {
            alpha: c.alpha,
            localization: c.localization()?,
            score: c.score_spec(),
            split_ratio: c.split_ratio,
            tie_rule: c.tie_rule,
        };
        let split = score_split(&clean, &test, &oc, rng)?;
        let run = detect_from_scores(&split.calib, &split.test_x, &split.test_scores, c.alpha, &split.kernel, c.tie_rule, rng)?;
        let baseline = conformal_bh_baseline(split.calib.scores(), &split.test_scores, c.alpha)?;

        let mut out = Metrics::default();
        let (fdp, power) = fdp_and_power(&run.final_set, &is_outlier);
        out.push("fdp", fdp);
        out.push("power", power);
        out.push("rejections", run.final_set.len() as f64);
        let (bfdp, bpower) = fdp_and_power(&baseline, &is_outlier);
        out.push("baseline_fdp", bfdp);
        out.push("baseline_power", bpower);
        if let Some(cells) = self.cells(&test.x)? {
            let k = c.condition_columns.len();
            for cell in 0..self.cell_count() {
                let in_cell: Vec<usize> = run.final_set.iter().copied().filter(|&j| cells[j] == cell).collect();
                out.push(format!("fdp_{}", cell_name(cell, k)), fdp_and_power(&in_cell, &is_outlier).0);
                let in_cell: Vec<usize> = baseline.iter().copied().filter(|&j| cells[j] == cell).collect();
                out.push(format!("baseline_fdp_{}", cell_name(cell, k)), fdp_and_power(&in_cell, &is_outlier).0);
            }
        }
        Ok(out)
    }

    fn labeled_and_test(&self, rng: &mut Stream) -> Result<(MultiLabelDataset, MultiLabelDataset)> {
        let c = &self.config;
        match c.scenario {
            Scenario::A2 => Ok((gen_a2(c.n, c.noise, rng).data, gen_a2(c.m, c.noise, rng).data)),
            _ => {
                let table = self.table()?;
                let all = table.multi_label()?;
                let (test_idx, lab_idx) = random_split(all.len(), c.test_fraction, rng)?;
                let (lab, test) = (all.subset(&lab_idx), all.subset(&test_idx));
                if !c.standardize {
                    return Ok((lab, test));
                }
                let s = Standardizer::fit(&lab.x);
                Ok((
                    MultiLabelDataset { x: s.transform(&lab.x), ..lab },
                    MultiLabelDataset { x: s.transform(&test.x), ..test },
                ))
            }
        }
    }

    fn screen(&self, rng: &mut Stream) -> Result<Metrics> {
        let c = &self.config;
        let (labeled, test) = self.labeled_and_test(rng)?;
        let violations = test.violations(&self.rules)?;
        let sc = ScreeningConfig {
            alpha: c.alpha,
            localization: c.localization()?,
            rules: self.rules.clone(),
            split_ratio: c.split_ratio,
            l2: c.l2,
        };
        let run = screen(&labeled, &test.x, &sc, rng)?;
        let thr = threshold_baseline(&run.calib_summary, &run.test_scores, c.alpha, &run.result)?;

        let retained = |decisions: &[Vec<bool>]| -> Result<f64> {
            let mut kept = 0usize;
            let mut total = 0usize;
            for (dec, viol) in decisions.iter().zip(&violations) {
                for (&d, &v) in dec.iter().zip(viol) {
                    if !v {
                        total += 1;
                        kept += usize::from(d);
                    }
                }
            }
            if total == 0 {
                return Err(Error::UndefinedMetric("no rule-satisfying components".into()));
            }
            Ok(kept as f64 / total as f64)
        };
        let mut out = Metrics::default();
        out.push("fwer", fwer_metrics(&run.result, &violations, None)?);
        out.push("thr_fwer", fwer_metrics(&thr, &violations, None)?);
        out.push_defined("power", retained(&run.result.decisions))?;
        out.push_defined("thr_power", retained(&thr.decisions))?;
        if let Some(cells) = self.cells(&test.x)? {
            let k = c.condition_columns.len();
            for cell in 0..self.cell_count() {
                let cond: Vec<bool> = cells.iter().map(|&q| q == cell).collect();
                out.push_defined(format!("fwer_{}", cell_name(cell, k)), fwer_metrics(&run.result, &violations, Some(&cond)))?;
                out.push_defined(format!("thr_fwer_{}", cell_name(cell, k)), fwer_metrics(&thr, &violations, Some(&cond)))?;
            }
        }
        Ok(out)
    }

    fn select(&self, rng: &mut Stream) -> Result<Metrics> {
        let c = &self.config;
        let rule = self
            .rules
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("field `rules`: selection needs one rule".into()))?;
        let (labeled, test) = self.labeled_and_test(rng)?;
        let first = |d: &MultiLabelDataset| Dataset::new(d.x.clone(), Some(d.responses.iter().map(|r| r[0]).collect()));
        let labeled = first(&labeled)?;
        let test = first(&test)?;
        let violates: Vec<bool> = test.response()?.iter().map(|&y| rule.violated_by(y)).collect();
        let sc = SelectionConfig {
            alpha: c.alpha,
            rule,
            localization: c.localization()?,
            split_ratio: c.split_ratio,
            l2: c.l2,
        };
        let run = select(&labeled, &test.x, &sc, rng)?;
        let unweighted = unweighted_selection(&run.calib_scores, &run.calib_violates, &run.test_scores, c.alpha, &run.result)?;
        let decisions = &run.result.decisions;

        let mut out = Metrics::default();
        out.push_defined("pser", pser_metrics(decisions, &violates, None))?;
        out.push_defined("unweighted_pser", pser_metrics(&unweighted, &violates, None))?;
        out.push("selected_fraction", decisions.iter().filter(|&&d| d).count() as f64 / decisions.len().max(1) as f64);
        if let Some(cells) = self.cells(&test.x)? {
            let k = c.condition_columns.len();
            for cell in 0..self.cell_count() {
                let cond: Vec<bool> = cells.iter().map(|&q| q == cell).collect();
                out.push_defined(format!("pser_{}", cell_name(cell, k)), pser_metrics(decisions, &violates, Some(&cond)))?;
                out.push_defined(
                    format!("unweighted_pser_{}", cell_name(cell, k)),
                    pser_metrics(&unweighted, &violates, Some(&cond)),
                )?;
            }
        }
        Ok(out)
    }

    fn two_sample(&self, rng: &mut Stream) -> Result<Metrics> {
        let c = &self.config;
        let (d1, d2) = match c.scenario {
            Scenario::A3 => TwoSampleDesign::A3.generate(c.n, c.m, c.hypothesis, rng),
            Scenario::B3 => TwoSampleDesign::B3.generate(c.n, c.m, c.hypothesis, rng),
            Scenario::C3 => TwoSampleDesign::C3.generate(c.n, c.m, c.hypothesis, rng),
            _ => split_rules(&self.table()?.dataset()?, &c.split(), rng)?,
        };
        let (d1, d2) = self.standardized(d1, d2);
        let tc = TwoSampleConfig {
            alpha: c.alpha,
            localization: c.localization()?,
            l2: c.l2,
            split_ratio: c.split_ratio,
        };
        let res = conditional_two_sample_test(&d1, &d2, &tc, rng)?;
        let mut out = Metrics::default();
        out.push("reject", if res.reject { 1.0 } else { 0.0 });
        out.push("p_value", res.p_value);
        out.push("t_hat", res.t_hat);
        out.push("sigma_sq_hat", res.sigma_sq_hat);
        Ok(out)
    }

    /// Runs replications `start_rep..reps` on a pool of `threads` workers
    /// (the global pool when `None`) and aggregates them in index order.
    pub fn run(&self) -> Result<ExperimentReport> {
        let c = &self.config;
        let work = || -> Vec<Result<Metrics>> {
            (c.start_rep..c.reps).into_par_iter().map(|r| self.run_replication(r)).collect()
        };
        let results = match c.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("field `threads`: {e}")))?
                .install(work),
            None => work(),
        };

        let mut names: Option<Vec<String>> = None;
        let mut rows = Vec::with_capacity(results.len());
        for (offset, res) in results.into_iter().enumerate() {
            let replication = c.start_rep + offset;
            let seed = self.replication_seed(replication);
            let metrics = res.map_err(|e| Error::Replication { replication, seed, source: Box::new(e) })?;
            let these: Vec<String> = metrics.0.iter().map(|(n, _)| n.clone()).collect();
            match &names {
                None => names = Some(these),
                Some(n) if *n != these => {
                    return Err(Error::Data(format!("replication {replication} emitted a different metric set")))
                }
                Some(_) => {}
            }
            rows.push(ReplicationRow { replication, seed, metrics: metrics.0.into_iter().map(|(_, v)| v).collect() });
        }
        let metric_names = names.unwrap_or_default();
        let aggregates = aggregate(&metric_names, &rows)?;
        let mut config = c.clone();
        config.rules = config.effective_rules()?;
        config.threads = None;
        config.output = None;
        Ok(ExperimentReport {
            software: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            procedure: self.procedure.name().into(),
            master_seed: c.seed,
            config,
            metric_names,
            replications: rows,
            aggregates,
        })
    }
}

/// Validates `config`, loads its data and runs every replication.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::new(config.clone())?.run()
}

/// One generated sample of `config.scenario` as named columns, for export.
pub fn simulate(config: &ExperimentConfig) -> Result<(Vec<String>, Matrix)> {
    config.validate()?;
    let c = config;
    let mut rng = replication_stream(c.seed, c.start_rep as u64);
    let xnames = |d: usize| (1..=d).map(|k| format!("x{k}")).collect::<Vec<_>>();
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    match c.scenario {
        Scenario::A1 | Scenario::B1 => {
            let s = if c.scenario == Scenario::A1 { gen_a1(c.n, true, &mut rng) } else { gen_b1(c.n, true, &mut rng) };
            let mut names = xnames(s.data.x.ncols());
            let mut x = s.data.x.clone();
            if let Some(y) = &s.data.y {
                names.push("y".into());
                x = x.with_column(y)?;
            }
            names.push("outlier".into());
            let flags: Vec<f64> = s.is_outlier.iter().map(|&b| flag(b)).collect();
            Ok((names, x.with_column(&flags)?))
        }
        Scenario::A2 => {
            let s = gen_a2(c.n, c.noise, &mut rng);
            let mut names = xnames(4);
            let mut x = s.data.x.clone();
            let viol = s.data.violations(&config.parsed_rules()?)?;
            for k in 0..2 {
                names.push(format!("y{}", k + 1));
                x = x.with_column(&s.data.responses.iter().map(|r| r[k]).collect::<Vec<_>>())?;
            }
            for k in 0..2 {
                names.push(format!("violates{}", k + 1));
                x = x.with_column(&viol.iter().map(|v| flag(v[k])).collect::<Vec<_>>())?;
            }
            Ok((names, x))
        }
        Scenario::A3 | Scenario::B3 | Scenario::C3 => {
            let design = match c.scenario {
                Scenario::A3 => TwoSampleDesign::A3,
                Scenario::B3 => TwoSampleDesign::B3,
                _ => TwoSampleDesign::C3,
            };
            let (d1, d2) = design.generate(c.n, c.m, c.hypothesis, &mut rng);
            let stack = |d: &Dataset, tag: f64| -> Result<Matrix> {
                d.x.with_column(d.response()?)?.with_column(&vec![tag; d.len()])
            };
            let mut names = xnames(d1.x.ncols());
            names.extend(["y".to_string(), "sample".to_string()]);
            Ok((names, stack(&d1, 1.0)?.vstack(&stack(&d2, 2.0)?)?))
        }
        Scenario::Csv => Err(Error::Config("field `scenario`: simulate needs a generated scenario, not csv".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(procedure: Procedure, scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            procedure: Some(procedure),
            scenario,
            n: 120,
            m: 40,
            reps: 3,
            seed: 11,
            knn_k: 10,
            ..Default::default()
        }
    }

    #[test]
    fn every_procedure_runs() {
        for (p, s) in [
            (Procedure::OutlierDetect, Scenario::A1),
            (Procedure::OutlierDetect, Scenario::B1),
            (Procedure::LabelScreen, Scenario::A2),
            (Procedure::Select, Scenario::A2),
            (Procedure::TwoSampleTest, Scenario::A3),
            (Procedure::TwoSampleTest, Scenario::C3),
        ] {
            let report = run_experiment(&small(p, s)).unwrap();
            assert_eq!(report.replications.len(), 3);
            assert!(!report.metric_names.is_empty());
        }
    }

    #[test]
    fn cells_are_labelled_by_bits() {
        let x = Matrix::from_rows(&[[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert_eq!(cell_membership(&x, &[0, 1], &[0.0, 0.0]).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(cell_name(1, 2), "cell10");
        assert_eq!(cell_name(2, 2), "cell01");
        assert!(cell_membership(&x, &[5], &[0.0]).is_err());
    }

    #[test]
    fn screening_reports_cells() {
        let mut c = small(Procedure::LabelScreen, Scenario::A2);
        c.condition_columns = vec![0, 2];
        c.condition_cuts = vec![0.0, 0.0];
        let report = run_experiment(&c).unwrap();
        assert!(report.metric_names.contains(&"thr_fwer_cell11".to_string()));
    }

    #[test]
    fn resume_reproduces_the_tail() {
        let c = small(Procedure::Select, Scenario::A2);
        let full = run_experiment(&c).unwrap();
        let tail = run_experiment(&ExperimentConfig { start_rep: 1, ..c }).unwrap();
        assert_eq!(tail.replications[..], full.replications[1..]);
    }

    #[test]
    fn failing_replication_names_its_seed() {
        let mut c = small(Procedure::OutlierDetect, Scenario::A1);
        c.n = 2;
        let err = run_experiment(&c).unwrap_err();
        match err {
            Error::Replication { replication, seed, .. } => {
                assert_eq!(replication, 0);
                assert_eq!(seed, derive_seed(11, 0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn simulate_shapes() {
        let (names, x) = simulate(&small(Procedure::OutlierDetect, Scenario::A1)).unwrap();
        assert_eq!(names.len(), 12);
        assert_eq!(x.nrows(), 120);
        let (names, x) = simulate(&small(Procedure::TwoSampleTest, Scenario::B3)).unwrap();
        assert_eq!(names.last().unwrap(), "sample");
        assert_eq!(x.nrows(), 160);
    }
}
