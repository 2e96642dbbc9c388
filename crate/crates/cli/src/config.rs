//! Run configuration, read from TOML and adjusted by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sbc_core::cascade::{CascadeConfig, LastStagePolicy, StageWeighting, UnknownAction};
use sbc_core::dataset::{CleaningPolicy, CsvOptions, SplitSpec, WeightScheme};
use sbc_core::gbt::GbtParams;
use sbc_core::hpo::{CvConfig, HalvingConfig, HpGrid, Search};

use crate::error::{CliError, CliResult, Context, Stage};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// One softmax model over all classes.
    Mcc,
    #[default]
    Sbc,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hpo {
    /// Train with `[params]` as given.
    #[default]
    Fixed,
    Gs,
    Hgs,
    /// Pruned halving; cascades only.
    Phgs,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightsMode {
    #[default]
    None,
    /// Inverse class frequency; per stage for cascades.
    InverseFrequency,
    /// Cascades: weights from the original class frequencies.
    OriginalInverseFrequency,
}

impl WeightsMode {
    pub fn scheme(self) -> WeightScheme {
        match self {
            WeightsMode::None => WeightScheme::None,
            _ => WeightScheme::InverseFrequency,
        }
    }

    pub fn stage_weighting(self) -> StageWeighting {
        match self {
            WeightsMode::None => StageWeighting::None,
            WeightsMode::InverseFrequency => StageWeighting::PerStageInverseFrequency,
            WeightsMode::OriginalInverseFrequency => StageWeighting::OriginalInverseFrequency,
        }
    }
}

macro_rules! snake_case_from_str {
    ($t:ty) => {
        impl FromStr for $t {
            type Err = String;

            fn from_str(s: &str) -> Result<Self, String> {
                let s = s.replace('-', "_");
                serde_json::from_value(serde_json::Value::String(s.clone()))
                    .map_err(|_| format!("unrecognized value `{s}`"))
            }
        }

        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                match serde_json::to_value(self) {
                    Ok(serde_json::Value::String(s)) => f.write_str(&s),
                    _ => Err(fmt::Error),
                }
            }
        }
    };
}

snake_case_from_str!(Method);
snake_case_from_str!(Hpo);
snake_case_from_str!(WeightsMode);

/// `emit_unknown` or `assign_last_class`, accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnknownArg(pub UnknownAction);

impl FromStr for UnknownArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
            .map(UnknownArg)
            .map_err(|_| format!("expected `emit_unknown` or `assign_last_class`, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Raw input for `prepare`.
    pub input: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub label_column: String,
    pub header: bool,
    pub missing_tokens: Vec<String>,
    pub drop_columns: Vec<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        let csv = CsvOptions::default();
        Self {
            input: None,
            train: None,
            test: None,
            label_column: csv.label_column,
            header: csv.header,
            missing_tokens: csv.missing_tokens,
            drop_columns: csv.drop_columns,
        }
    }
}

impl DataConfig {
    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: self.label_column.clone(),
            header: self.header,
            missing_tokens: self.missing_tokens.clone(),
            drop_columns: self.drop_columns.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CascadeSection {
    pub last_stage: LastStagePolicy,
    /// Decision threshold of every stage.
    pub threshold: f64,
    /// Per-stage thresholds in rank order; overrides `threshold`.
    pub thresholds: Option<Vec<f64>>,
}

impl Default for CascadeSection {
    fn default() -> Self {
        Self {
            last_stage: LastStagePolicy::default(),
            threshold: 0.5,
            thresholds: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    pub cleaning: CleaningPolicy,
    pub split: SplitSpec,
    pub method: Method,
    pub hpo: Hpo,
    pub weights: WeightsMode,
    /// TOML grid file; the built-in grid when absent.
    pub grid: Option<PathBuf>,
    /// Model parameters; required for `hpo = "fixed"`, the base of every
    /// grid candidate otherwise.
    pub params: Option<GbtParams>,
    pub cascade: CascadeSection,
    pub cv: CvConfig,
    pub halving: HalvingConfig,
    pub unknown_action: UnknownAction,
    /// When set, overrides every other seed.
    pub seed: Option<u64>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataConfig::default(),
            cleaning: CleaningPolicy::default(),
            split: SplitSpec::default(),
            method: Method::default(),
            hpo: Hpo::default(),
            weights: WeightsMode::default(),
            grid: None,
            params: None,
            cascade: CascadeSection::default(),
            cv: CvConfig::default(),
            halving: HalvingConfig::default(),
            unknown_action: UnknownAction::default(),
            seed: None,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).at(Stage::Config, path.display())?;
        Self::from_toml(&text).map_err(|e| CliError::new(Stage::Config, format!("{}: {}", path.display(), e.message)))
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).at(Stage::Config, "invalid configuration")
    }

    /// Relative data, grid and output paths are taken relative to `dir`.
    pub fn resolve_paths(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        for p in [&mut self.data.input, &mut self.data.train, &mut self.data.test, &mut self.grid]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        fix(&mut self.out);
    }

    pub fn apply_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.split.seed = seed;
        self.cv.seed = seed;
        self.halving.seed = seed;
        self.cascade.last_stage.seed = seed;
        if let Some(p) = &mut self.params {
            p.seed = seed;
        }
    }

    /// Checks every setting that can be checked before touching data.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::new(Stage::Config, m));
        if self.hpo == Hpo::Phgs && self.method != Method::Sbc {
            return bad("hpo `phgs` requires method `sbc`".to_string());
        }
        if self.hpo == Hpo::Fixed && self.params.is_none() {
            return bad("hpo `fixed` requires a [params] table".to_string());
        }
        if let Some(p) = &self.params {
            p.validate().at(Stage::Config, "[params]")?;
        }
        if self.method == Method::Mcc && self.weights == WeightsMode::OriginalInverseFrequency {
            return bad("`original_inverse_frequency` weights apply to method `sbc` only".to_string());
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return bad(format!("split.test_fraction {} must lie in (0, 1)", self.split.test_fraction));
        }
        let thresholds = self.cascade.thresholds.iter().flatten().chain([&self.cascade.threshold]);
        for &t in thresholds {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("threshold {t} must lie in (0, 1)"));
            }
        }
        let ratio = self.cascade.last_stage.negatives_per_positive;
        if !(ratio > 0.0 && ratio.is_finite()) {
            return bad(format!("cascade.last_stage.negatives_per_positive {ratio} must be positive"));
        }
        if self.cv.folds < 2 {
            return bad("cv.folds must be at least 2".to_string());
        }
        if self.halving.factor < 2 {
            return bad("halving.factor must be at least 2".to_string());
        }
        if self.hpo != Hpo::Fixed {
            self.load_grid()?;
        }
        Ok(())
    }

    pub fn load_grid(&self) -> CliResult<HpGrid> {
        match &self.grid {
            None => Ok(HpGrid::default_grid()),
            Some(path) => {
                let text = std::fs::read_to_string(path).at(Stage::Config, path.display())?;
                toml::from_str(&text).map_err(|e| {
                    CliError::new(Stage::Config, format!("grid {}: {}", path.display(), e.message()))
                })
            }
        }
    }

    pub fn base_params(&self) -> GbtParams {
        let mut p = self.params.unwrap_or_default();
        if let Some(seed) = self.seed {
            p.seed = seed;
        }
        p
    }

    pub fn search(&self) -> Option<Search> {
        match self.hpo {
            Hpo::Fixed => None,
            Hpo::Gs => Some(Search::Grid),
            Hpo::Hgs => Some(Search::Halving(self.halving)),
            Hpo::Phgs => Some(Search::PrunedHalving(self.halving)),
        }
    }

    pub fn cascade_config(&self) -> CascadeConfig {
        CascadeConfig {
            weighting: self.weights.stage_weighting(),
            last_stage: self.cascade.last_stage,
            threshold: self.cascade.threshold,
        }
    }

    /// Short column name such as `sbc+phgs+weights`.
    pub fn method_label(&self) -> String {
        let mut s = format!("{}+{}", self.method, self.hpo);
        match self.weights {
            WeightsMode::None => {}
            WeightsMode::InverseFrequency => s.push_str("+weights"),
            WeightsMode::OriginalInverseFrequency => s.push_str("+original-weights"),
        }
        s
    }

    /// Applies a benchmark column label such as `mcc+gs` or
    /// `sbc+phgs+weights`.
    pub fn with_method_label(&self, label: &str) -> CliResult<RunConfig> {
        let parts: Vec<&str> = label.trim().split('+').collect();
        let err = || CliError::new(Stage::Config, format!("bad method label `{label}`, expected e.g. `sbc+phgs+weights`"));
        let (method, hpo, weights) = match parts.as_slice() {
            [m, h] => (m, h, WeightsMode::None),
            [m, h, "weights"] => (m, h, WeightsMode::InverseFrequency),
            [m, h, "original-weights"] => (m, h, WeightsMode::OriginalInverseFrequency),
            _ => return Err(err()),
        };
        let mut cfg = self.clone();
        cfg.method = method.parse().map_err(|_| err())?;
        cfg.hpo = hpo.parse().map_err(|_| err())?;
        cfg.weights = weights;
        cfg.validate()?;
        Ok(cfg)
    }
}
