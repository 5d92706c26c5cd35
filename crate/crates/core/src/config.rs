//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    default_ternary_mapping, FilterPasses, ImputeMethod, InputFormat, TernaryMapping,
    DEFAULT_SENTINELS,
};
use crate::metrics::{DiagramMetric, EssentialPolicy, GroundMetric};
use crate::permtest::DEFAULT_PARTITION_CAP;
use crate::persistence::DEFAULT_SIMPLEX_BUDGET;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    pub preprocess: PreprocessConfig,
    pub impute: ImputeConfig,
    pub mca: McaConfig,
    pub persistence: PersistenceConfig,
    pub metric: MetricConfig,
    pub permtest: PermtestConfig,
    pub groups: GroupsConfig,
    pub mds: MdsConfig,
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub path: PathBuf,
    pub format: InputFormat,
    pub sentinels: Vec<String>,
    /// Optional sample metadata table used to restrict the input.
    pub languages: Option<PathBuf>,
    /// Column of `languages` that must equal `subset_value`.
    pub subset_column: Option<String>,
    pub subset_value: Option<String>,
}

impl Default for InputConfig {
    fn default() -> Self {
        InputConfig {
            path: PathBuf::from("values.csv"),
            format: InputFormat::Long,
            sentinels: DEFAULT_SENTINELS.iter().map(|s| s.to_string()).collect(),
            languages: None,
            subset_column: None,
            subset_value: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    pub exclude: Vec<String>,
    pub drop_constant: bool,
    /// Features, then samples, with a larger missing fraction are dropped.
    pub max_missing: f64,
    pub passes: FilterPasses,
    pub ternary: Vec<String>,
    /// Label → `[XY, YX]` indicators.
    pub ternary_mapping: BTreeMap<String, [u8; 2]>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            exclude: Vec::new(),
            drop_constant: true,
            max_missing: 0.20,
            passes: FilterPasses::FixedPoint,
            ternary: Vec::new(),
            ternary_mapping: default_ternary_mapping()
                .into_iter()
                .map(|(k, (a, b))| (k, [a, b]))
                .collect(),
        }
    }
}

impl PreprocessConfig {
    pub fn mapping(&self) -> TernaryMapping {
        self.ternary_mapping
            .iter()
            .map(|(k, v)| (k.clone(), (v[0], v[1])))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputeConfig {
    pub method: ImputeMethod,
    pub k: usize,
    pub seed: u64,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig {
            method: ImputeMethod::Knn,
            k: 5,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McaConfig {
    pub dims: usize,
}

impl Default for McaConfig {
    fn default() -> Self {
        McaConfig { dims: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistenceConfig {
    /// Homology dimension compared across languages.
    pub homology_dim: usize,
    /// Largest Rips scale; the cloud's diameter when absent.
    pub max_scale: Option<f64>,
    pub clearing: bool,
    /// Representative cycles written per language.
    pub max_cycles: usize,
    pub simplex_budget: usize,
}

impl Default for PersistenceConfig {
    fn default() -> Self {
        PersistenceConfig {
            homology_dim: 1,
            max_scale: None,
            clearing: true,
            max_cycles: 3,
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Wasserstein,
    Bottleneck,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub q: f64,
    pub ground: GroundMetric,
    /// Replace infinite deaths by this value instead of dropping them.
    pub essential_cap: Option<f64>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            kind: MetricKind::Wasserstein,
            q: 2.0,
            ground: GroundMetric::Lq,
            essential_cap: None,
        }
    }
}

impl MetricConfig {
    pub fn metric(&self) -> DiagramMetric {
        match self.kind {
            MetricKind::Bottleneck => DiagramMetric::Bottleneck,
            MetricKind::Wasserstein => DiagramMetric::Wasserstein {
                q: self.q,
                ground: self.ground,
            },
        }
    }

    pub fn essential_policy(&self) -> EssentialPolicy {
        self.essential_cap
            .map_or(EssentialPolicy::Exclude, EssentialPolicy::Cap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PermtestConfig {
    pub shuffles: usize,
    pub seed: u64,
    pub exact: bool,
    pub partition_cap: u64,
    /// Groups compared; needed only when the grouping has more than two.
    pub group1: Option<String>,
    pub group2: Option<String>,
}

impl Default for PermtestConfig {
    fn default() -> Self {
        PermtestConfig {
            shuffles: 100,
            seed: 0,
            exact: false,
            partition_cap: DEFAULT_PARTITION_CAP as u64,
            group1: None,
            group2: None,
        }
    }
}

/// Either a `Language_ID,Group` CSV or an inline map; both may be given if
/// they do not disagree.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GroupsConfig {
    pub path: Option<PathBuf>,
    pub assign: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdsConfig {
    pub dims: usize,
}

impl Default for MdsConfig {
    fn default() -> Self {
        MdsConfig { dims: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Worker threads for per-language diagrams; all cores when absent.
    pub workers: Option<usize>,
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            workers: None,
            plots: true,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    /// Parses TOML; relative paths are taken relative to `base`.
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        resolve(base, &mut cfg.input.path);
        if let Some(p) = cfg.input.languages.as_mut() {
            resolve(base, p);
        }
        if let Some(p) = cfg.groups.path.as_mut() {
            resolve(base, p);
        }
        resolve(base, &mut cfg.output.dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..=1.0).contains(&self.preprocess.max_missing) {
            return bad(format!(
                "max_missing {} outside [0, 1]",
                self.preprocess.max_missing
            ));
        }
        if self.mca.dims == 0 {
            return bad("mca.dims must be at least 1".into());
        }
        if self.metric.kind == MetricKind::Wasserstein
            && !(self.metric.q >= 1.0 && self.metric.q.is_finite())
        {
            return bad(format!(
                "metric.q must be a finite number ≥ 1, got {}",
                self.metric.q
            ));
        }
        if self.permtest.shuffles == 0 && !self.permtest.exact {
            return bad("permtest.shuffles must be at least 1".into());
        }
        if self.mds.dims == 0 {
            return bad("mds.dims must be at least 1".into());
        }
        if self.output.workers == Some(0) {
            return bad("output.workers must be at least 1".into());
        }
        if self.input.subset_column.is_some() != self.input.subset_value.is_some() {
            return bad("subset_column and subset_value go together".into());
        }
        if self.input.subset_column.is_some() && self.input.languages.is_none() {
            return bad("a subset filter needs input.languages".into());
        }
        if self.impute.method == ImputeMethod::Knn && self.impute.k == 0 {
            return bad("impute.k must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_apply_to_an_empty_file() {
        let cfg = PipelineConfig::from_toml_str("", Path::new("/base")).unwrap();
        assert_eq!(cfg.preprocess.max_missing, 0.20);
        assert_eq!(cfg.mca.dims, 4);
        assert_eq!(cfg.persistence.homology_dim, 1);
        assert_eq!(cfg.metric.metric(), DiagramMetric::default());
        assert_eq!(cfg.permtest.shuffles, 100);
        assert_eq!(cfg.input.path, Path::new("/base/values.csv"));
        assert_eq!(cfg.output.dir, Path::new("/base/out"));
    }

    #[test]
    fn parses_every_section() {
        let text = r#"
            [input]
            path = "data/values.csv"
            format = "wide"
            [preprocess]
            exclude = ["x1"]
            ternary = ["GB024"]
            passes = "single"
            [preprocess.ternary_mapping]
            "1" = [1, 0]
            "2" = [0, 1]
            "3" = [1, 1]
            [impute]
            method = "mode"
            [metric]
            kind = "bottleneck"
            [permtest]
            exact = true
            seed = 7
            [groups.assign]
            a = "G1"
            b = "G2"
            [output]
            dir = "/abs/out"
            workers = 2
        "#;
        let cfg = PipelineConfig::from_toml_str(text, Path::new("/cfg")).unwrap();
        assert_eq!(cfg.input.path, Path::new("/cfg/data/values.csv"));
        assert_eq!(cfg.input.format, InputFormat::Wide);
        assert_eq!(cfg.preprocess.passes, FilterPasses::Single);
        assert_eq!(cfg.preprocess.mapping(), default_ternary_mapping());
        assert_eq!(cfg.metric.metric(), DiagramMetric::Bottleneck);
        assert_eq!(cfg.groups.assign.len(), 2);
        assert_eq!(cfg.output.dir, Path::new("/abs/out"));
        let again = PipelineConfig::from_toml_str(&cfg.to_toml().unwrap(), Path::new("/")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(PipelineConfig::from_toml_str("[mca]\ndimz = 3", Path::new(".")).is_err());
        assert!(
            PipelineConfig::from_toml_str("[preprocess]\nmax_missing = 1.5", Path::new("."))
                .is_err()
        );
        assert!(PipelineConfig::from_toml_str("[metric]\nq = 0.5", Path::new(".")).is_err());
        assert!(PipelineConfig::from_toml_str(
            "[input]\nsubset_column = \"Macroarea\"",
            Path::new(".")
        )
        .is_err());
    }
}
