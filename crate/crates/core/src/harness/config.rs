use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conformal::{Bandwidth, KernelFamily, Localization, TieRule};
use crate::error::{Error, Result};
use crate::models::{ScoreModelSpec, DEFAULT_L2};
use crate::scenarios::{a2_rules, A2Noise, Hypothesis, SplitRule};
use crate::screening::Rule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Procedure {
    OutlierDetect,
    LabelScreen,
    Select,
    TwoSampleTest,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Self::OutlierDetect => "outlier-detect",
            Self::LabelScreen => "label-screen",
            Self::Select => "select",
            Self::TwoSampleTest => "two-sample-test",
        }
    }
}

/// Where the data of each replication comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    A1,
    B1,
    A2,
    A3,
    B3,
    C3,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreKind {
    LinearResidual,
    KnnCqr,
    KnnOneClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Random,
    Tilt,
    Response,
}

/// Distribution of the perturbation added to injected outlier rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseLaw {
    #[default]
    Normal,
    Uniform,
    /// `±1` with equal probability.
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

/// `"auto"` or a positive number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthValue {
    Fixed(f64),
    Named(String),
}

impl Default for BandwidthValue {
    fn default() -> Self {
        Self::Named("auto".into())
    }
}

/// Every key of the flat experiment file. Keys left out take the defaults
/// below; scenario-dependent keys (`score`, `weight_columns`, `rules`) fall
/// back to the scenario's natural choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub procedure: Option<Procedure>,
    pub scenario: Scenario,
    /// Clean / labelled sample size, or the first sample for two-sample designs.
    pub n: usize,
    /// Test sample size, or the second sample for two-sample designs.
    pub m: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// First replication index to run; earlier indices are skipped.
    pub start_rep: usize,
    pub threads: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Option<ReportFormat>,

    pub kernel: KernelFamily,
    pub bandwidth: BandwidthValue,
    pub weight_columns: Option<Vec<usize>>,
    pub tie_rule: TieRule,

    pub score: Option<ScoreKind>,
    pub knn_k: usize,
    pub quantile_lo: f64,
    pub quantile_hi: f64,
    /// z-score features inside the one-class k-NN score.
    pub knn_standardize: bool,
    /// z-score CSV features with statistics of the reference part.
    pub standardize: bool,
    pub split_ratio: f64,
    pub l2: f64,

    pub hypothesis: Hypothesis,
    pub noise: A2Noise,
    /// Label rules such as `"ge:1.5"`, `"le:0"` or `"in:1,2"`.
    pub rules: Vec<String>,
    pub condition_columns: Vec<usize>,
    pub condition_cuts: Vec<f64>,

    pub csv: Option<PathBuf>,
    pub response_columns: Vec<String>,
    pub covariate_columns: Vec<String>,
    pub test_fraction: f64,
    pub split_rule: SplitKind,
    pub tilt_direction: Option<Vec<f64>>,
    pub inject_column: Option<String>,
    pub inject_law: NoiseLaw,
    pub inject_magnitude: f64,
    pub inject_fraction: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            procedure: None,
            scenario: Scenario::A1,
            n: 1000,
            m: 500,
            alpha: 0.1,
            reps: 100,
            seed: 0,
            start_rep: 0,
            threads: None,
            output: None,
            format: None,
            kernel: KernelFamily::Gaussian,
            bandwidth: BandwidthValue::default(),
            weight_columns: None,
            tie_rule: TieRule::Inclusive,
            score: None,
            knn_k: 50,
            quantile_lo: 0.05,
            quantile_hi: 0.95,
            knn_standardize: true,
            standardize: false,
            split_ratio: 0.5,
            l2: DEFAULT_L2,
            hypothesis: Hypothesis::Null,
            noise: A2Noise::Shared,
            rules: Vec::new(),
            condition_columns: Vec::new(),
            condition_cuts: Vec::new(),
            csv: None,
            response_columns: Vec::new(),
            covariate_columns: Vec::new(),
            test_fraction: 0.2,
            split_rule: SplitKind::Random,
            tilt_direction: None,
            inject_column: None,
            inject_law: NoiseLaw::Normal,
            inject_magnitude: 0.0,
            inject_fraction: 0.1,
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("field `{name}`: {msg}"))
}

/// Parses one rule string.
pub fn parse_rule(text: &str) -> Result<Rule> {
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| field("rules", format!("`{text}` is not of the form kind:value")))?;
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| field("rules", format!("`{s}` in `{text}` is not a number")))
    };
    match kind.trim() {
        "ge" => Ok(Rule::AtLeast(num(value)?)),
        "le" => Ok(Rule::AtMost(num(value)?)),
        "in" => Ok(Rule::OneOf(value.split(',').map(num).collect::<Result<_>>()?)),
        other => Err(field("rules", format!("unknown rule kind `{other}` (expected ge, le or in)"))),
    }
}

fn rule_text(rule: &Rule) -> String {
    match rule {
        Rule::AtLeast(a) => format!("ge:{a:?}"),
        Rule::AtMost(a) => format!("le:{a:?}"),
        Rule::OneOf(v) => format!("in:{}", v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")),
    }
}

impl ExperimentConfig {
    /// Parses a config file and applies `key = value` overrides in order.
    /// Override values are read as TOML values, falling back to strings.
    pub fn from_toml_with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, raw) in overrides {
            let value = format!("v = {raw}")
                .parse::<toml::Table>()
                .ok()
                .and_then(|mut t| t.remove("v"))
                .unwrap_or_else(|| toml::Value::String(raw.clone()));
            table.insert(key.clone(), value);
        }
        let config: Self = table.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides(text, &[])
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
            .map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
                other => other,
            })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(field("alpha", format!("must lie in (0, 1), got {}", self.alpha)));
        }
        if self.reps == 0 {
            return Err(field("reps", "at least one replication is required"));
        }
        if self.start_rep >= self.reps {
            return Err(field("start_rep", format!("{} is not below reps = {}", self.start_rep, self.reps)));
        }
        if self.threads == Some(0) {
            return Err(field("threads", "must be positive"));
        }
        if self.scenario != Scenario::Csv && (self.n == 0 || self.m == 0) {
            return Err(field("n", "sample sizes n and m must be positive"));
        }
        self.bandwidth()?;
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(field("split_ratio", "must lie in (0, 1)"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(field("test_fraction", "must lie in (0, 1)"));
        }
        if !(self.inject_fraction >= 0.0 && self.inject_fraction <= 1.0) {
            return Err(field("inject_fraction", "must lie in [0, 1]"));
        }
        if !(self.quantile_lo > 0.0 && self.quantile_lo < self.quantile_hi && self.quantile_hi < 1.0) {
            return Err(field("quantile_lo", "need 0 < quantile_lo < quantile_hi < 1"));
        }
        if self.knn_k == 0 {
            return Err(field("knn_k", "must be positive"));
        }
        if !(self.l2 >= 0.0) {
            return Err(field("l2", "must be nonnegative"));
        }
        if self.condition_columns.len() != self.condition_cuts.len() {
            return Err(field("condition_cuts", "needs one cut per condition column"));
        }
        if self.condition_columns.len() > 8 {
            return Err(field("condition_columns", "at most 8 columns"));
        }
        if self.scenario == Scenario::Csv && self.csv.is_none() {
            return Err(field("csv", "scenario = \"csv\" needs a csv path"));
        }
        self.parsed_rules()?;
        if let Some(p) = self.procedure {
            self.check_scenario(p)?;
        }
        Ok(())
    }

    /// Checks that the scenario can feed `procedure`.
    pub fn check_scenario(&self, procedure: Procedure) -> Result<()> {
        use Scenario::*;
        let ok = match procedure {
            Procedure::OutlierDetect => matches!(self.scenario, A1 | B1 | Csv),
            Procedure::LabelScreen | Procedure::Select => matches!(self.scenario, A2 | Csv),
            Procedure::TwoSampleTest => matches!(self.scenario, A3 | B3 | C3 | Csv),
        };
        if !ok {
            return Err(field(
                "scenario",
                format!("{:?} cannot be used with {}", self.scenario, procedure.name()).to_lowercase(),
            ));
        }
        if self.scenario == Csv {
            let needs_response = match procedure {
                Procedure::OutlierDetect => self.score_kind() != ScoreKind::KnnOneClass,
                _ => true,
            };
            if needs_response && self.response_columns.is_empty() {
                return Err(field("response_columns", format!("{} needs a response column", procedure.name())));
            }
            if matches!(procedure, Procedure::LabelScreen | Procedure::Select) && self.rules.is_empty() {
                return Err(field("rules", "csv data needs explicit rules"));
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> Result<Bandwidth> {
        match &self.bandwidth {
            BandwidthValue::Fixed(h) if *h > 0.0 && h.is_finite() => Ok(Bandwidth::Fixed(*h)),
            BandwidthValue::Fixed(h) => Err(field("bandwidth", format!("must be positive, got {h}"))),
            BandwidthValue::Named(s) if s == "auto" => Ok(Bandwidth::Auto),
            BandwidthValue::Named(s) => Err(field("bandwidth", format!("expected \"auto\" or a number, got `{s}`"))),
        }
    }

    pub fn parsed_rules(&self) -> Result<Vec<Rule>> {
        if self.rules.is_empty() && self.scenario == Scenario::A2 {
            return Ok(a2_rules());
        }
        self.rules.iter().map(|r| parse_rule(r)).collect()
    }

    /// Rule strings actually in force, including scenario defaults.
    pub fn effective_rules(&self) -> Result<Vec<String>> {
        Ok(self.parsed_rules()?.iter().map(rule_text).collect())
    }

    pub fn score_kind(&self) -> ScoreKind {
        self.score.unwrap_or(match self.scenario {
            Scenario::B1 => ScoreKind::KnnOneClass,
            _ => ScoreKind::KnnCqr,
        })
    }

    pub fn score_spec(&self) -> ScoreModelSpec {
        match self.score_kind() {
            ScoreKind::LinearResidual => ScoreModelSpec::LinearResidual,
            ScoreKind::KnnCqr => ScoreModelSpec::KnnCqr { k: self.knn_k, lo: self.quantile_lo, hi: self.quantile_hi },
            ScoreKind::KnnOneClass => ScoreModelSpec::KnnOneClass { k: self.knn_k, standardize: self.knn_standardize },
        }
    }

    pub fn default_weight_columns(&self) -> Option<Vec<usize>> {
        match self.scenario {
            Scenario::A1 => Some(vec![9]),
            Scenario::B1 => Some(vec![0, 1]),
            _ => None,
        }
    }

    pub fn localization(&self) -> Result<Localization> {
        Ok(Localization {
            family: self.kernel,
            bandwidth: self.bandwidth()?,
            weight_columns: self.weight_columns.clone().or_else(|| self.default_weight_columns()),
        })
    }

    pub fn split(&self) -> SplitRule {
        match self.split_rule {
            SplitKind::Random => SplitRule::Random,
            SplitKind::Response => SplitRule::Response,
            SplitKind::Tilt => match &self.tilt_direction {
                Some(d) => SplitRule::Tilt { direction: d.clone() },
                None => SplitRule::tilt_default(),
            },
        }
    }

    /// Output format from `format`, else from the output file extension.
    pub fn report_format(&self) -> ReportFormat {
        self.format.unwrap_or_else(|| match self.output.as_ref().and_then(|p| p.extension()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => ReportFormat::Csv,
            _ => ReportFormat::Json,
        })
    }
}
