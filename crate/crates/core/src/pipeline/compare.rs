use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{resolve, ExperimentConfig, Representation};
use super::experiment::{run_experiment_on, FoldResult, Summary, VERSION};
use crate::classeval::ClassifierKind;
use crate::dataio::{load_csv, RawDataset};
use crate::resample::Preprocessor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arm {
    pub name: String,
    #[serde(default = "none_rep")]
    pub representation: Representation,
    #[serde(default = "none_pre")]
    pub preprocessor: Preprocessor,
    /// Overrides the base classifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierKind>,
}

fn none_rep() -> Representation {
    Representation::None
}

fn none_pre() -> Preprocessor {
    Preprocessor::None
}

impl Arm {
    fn new(name: &str, representation: Representation, preprocessor: Preprocessor) -> Self {
        Self {
            name: name.to_string(),
            representation,
            preprocessor,
            classifier: None,
        }
    }
}

/// Raw data, the three resamplers and the weighted triplet representation.
pub fn default_arms() -> Vec<Arm> {
    vec![
        Arm::new("Baseline", Representation::None, Preprocessor::None),
        Arm::new("Global-CS", Representation::None, Preprocessor::GlobalCs),
        Arm::new("Static-SMOTE", Representation::None, Preprocessor::StaticSmote),
        Arm::new("MDO", Representation::None, Preprocessor::Mdo),
        Arm::new("New Rep.", Representation::TripletWeighted, Preprocessor::None),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    /// Shared settings; its representation and preprocessor are replaced
    /// by each arm's.
    pub base: ExperimentConfig,
    #[serde(default = "default_arms")]
    pub arms: Vec<Arm>,
}

impl CompareConfig {
    pub fn configs(&self) -> Vec<ExperimentConfig> {
        self.arms
            .iter()
            .map(|arm| {
                let mut c = self.base.clone();
                c.representation = arm.representation;
                c.preprocessor = arm.preprocessor;
                if let Some(k) = arm.classifier {
                    c.classifier = k;
                }
                c
            })
            .collect()
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.base.dataset.path = resolve(base_dir, &cfg.base.dataset.path);
        if cfg.arms.is_empty() {
            return Err(Error::Config("compare needs at least one arm".into()));
        }
        for c in cfg.configs() {
            c.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new("")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmResult {
    pub name: String,
    pub config: ExperimentConfig,
    pub summary: Summary,
    pub folds: Vec<FoldResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub version: String,
    pub n_rows: usize,
    pub class_names: Vec<String>,
    pub folds_digest: String,
    pub arms: Vec<ArmResult>,
}

impl Comparison {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Methods as columns in arm order, metrics as rows, `mean ± std` cells.
    pub fn to_table(&self) -> String {
        let mut header = vec!["metric".to_string()];
        header.extend(self.arms.iter().map(|a| a.name.clone()));
        let cell = |m: &super::MetricSummary| format!("{:.3} ± {:.3}", m.mean, m.std);
        let rows = vec![
            header,
            std::iter::once("macro_f1".to_string())
                .chain(self.arms.iter().map(|a| cell(&a.summary.macro_f1)))
                .collect(),
            std::iter::once("gmean".to_string())
                .chain(self.arms.iter().map(|a| cell(&a.summary.gmean)))
                .collect(),
        ];
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for r in &rows {
            let line: Vec<String> = r
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Runs every arm on shared folds.
pub fn compare(cfg: &CompareConfig) -> Result<Comparison> {
    let raw = load_csv(&cfg.base.dataset.path, &cfg.base.dataset.schema())?;
    compare_on(&raw, &cfg.arms.iter().map(|a| a.name.clone()).collect::<Vec<_>>(), &cfg.configs())
}

/// Runs `configs` (named by `names`) on `raw`. Fails unless every config
/// produces the same fold assignment.
pub fn compare_on(raw: &RawDataset, names: &[String], configs: &[ExperimentConfig]) -> Result<Comparison> {
    if names.len() != configs.len() {
        return Err(Error::dim("arm names", configs.len(), names.len()));
    }
    let mut arms = Vec::with_capacity(configs.len());
    let mut shared: Option<(String, Vec<String>)> = None;
    for (name, cfg) in names.iter().zip(configs) {
        let report = run_experiment_on(raw, cfg)?;
        match &shared {
            None => shared = Some((report.folds_digest.clone(), report.class_names.clone())),
            Some((digest, _)) if *digest != report.folds_digest => {
                return Err(Error::Config(format!(
                    "arm {name:?} uses different folds ({} vs {digest})",
                    report.folds_digest
                )));
            }
            Some(_) => {}
        }
        arms.push(ArmResult {
            name: name.clone(),
            config: report.config,
            summary: report.summary,
            folds: report.folds,
        });
    }
    let (folds_digest, class_names) = shared.unwrap_or_default();
    Ok(Comparison {
        version: VERSION.to_string(),
        n_rows: raw.n_rows(),
        class_names,
        folds_digest,
        arms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::DatasetSpec;
    use crate::synth;

    fn base() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(DatasetSpec {
            path: "x.csv".into(),
            label_column: "class".into(),
            categorical: vec![],
            ignore: vec![],
        });
        c.optimizer.epochs = 20;
        c.net.hidden = [16, 8];
        c
    }

    #[test]
    fn default_column_order() {
        let names: Vec<String> = default_arms().into_iter().map(|a| a.name).collect();
        assert_eq!(names, ["Baseline", "Global-CS", "Static-SMOTE", "MDO", "New Rep."]);
    }

    #[test]
    fn duplicate_configs_give_identical_rows() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[20, 10], 2, 3.0, 0)).unwrap();
        let c = base();
        let cmp = compare_on(&raw, &["a".into(), "b".into()], &[c.clone(), c]).unwrap();
        assert_eq!(cmp.arms[0].summary, cmp.arms[1].summary);
        assert_eq!(cmp.arms[0].folds, cmp.arms[1].folds);
    }

    #[test]
    fn mismatched_folds_fail() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[20, 10], 2, 3.0, 0)).unwrap();
        let mut other = base();
        other.cv.seed = 99;
        assert!(compare_on(&raw, &["a".into(), "b".into()], &[base(), other]).is_err());
    }

    #[test]
    fn table_has_one_column_per_arm() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[20, 10], 2, 3.0, 0)).unwrap();
        let cfg = CompareConfig {
            base: base(),
            arms: default_arms(),
        };
        let cmp = compare_on(
            &raw,
            &cfg.arms.iter().map(|a| a.name.clone()).collect::<Vec<_>>(),
            &cfg.configs(),
        )
        .unwrap();
        let table = cmp.to_table();
        let header = table.lines().next().unwrap();
        assert!(header.starts_with("metric"));
        let pos: Vec<usize> = ["Baseline", "Global-CS", "Static-SMOTE", "MDO", "New Rep."]
            .iter()
            .map(|n| header.find(n).unwrap())
            .collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(table.lines().count(), 3);
    }
}
