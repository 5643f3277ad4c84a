use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classeval::ClassifierKind;
use crate::dataio::Schema;
use crate::neighborloss::{NeighborLossConfig, SafeTrainConfig, SafeVariant};
use crate::netcore::{AdamConfig, AutoencoderTrainConfig, NetConfig};
use crate::resample::Preprocessor;
use crate::tripletloss::{TripletConfig, TripletTrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    None,
    Autoencoder,
    Triplet,
    TripletWeighted,
    SafeBasic,
    SafeWeights,
    SafeCutoff,
    SafeMeanDists,
}

impl Representation {
    pub fn safe_variant(self) -> Option<SafeVariant> {
        match self {
            Representation::SafeBasic => Some(SafeVariant::Basic),
            Representation::SafeWeights => Some(SafeVariant::SafeWeights),
            Representation::SafeCutoff => Some(SafeVariant::Cutoff),
            Representation::SafeMeanDists => Some(SafeVariant::MeanDists),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
    pub label_column: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub ignore: Vec<String>,
}

impl DatasetSpec {
    pub fn schema(&self) -> Schema {
        Schema {
            label_column: self.label_column.clone(),
            categorical: self.categorical.clone(),
            ignore: self.ignore.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    pub learning_rate: f64,
    /// Triplet training passes, and autoencoder passes for the
    /// autoencoder-based representations.
    pub epochs: usize,
    /// Neighborhood-loss passes after the autoencoder warm start.
    pub stage2_epochs: usize,
    pub ae_batch_size: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            learning_rate: AdamConfig::default().learning_rate,
            epochs: 200,
            stage2_epochs: 200,
            ae_batch_size: 32,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeighborSettings {
    pub k: usize,
    pub batch_anchors: usize,
    pub cutoff_threshold: f64,
}

impl Default for NeighborSettings {
    fn default() -> Self {
        let d = NeighborLossConfig::default();
        Self {
            k: d.k,
            batch_anchors: d.batch_anchors,
            cutoff_threshold: d.cutoff_threshold,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self { folds: 5, seed: 0 }
    }
}

fn default_repeats() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    #[serde(default = "default_representation")]
    pub representation: Representation,
    #[serde(default = "default_preprocessor")]
    pub preprocessor: Preprocessor,
    #[serde(default = "default_classifier")]
    pub classifier: ClassifierKind,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub triplet: TripletConfig,
    #[serde(default)]
    pub neighbor: NeighborSettings,
    #[serde(default)]
    pub cv: CvSettings,
    /// One full cross-validation per seed.
    #[serde(default = "default_repeats")]
    pub repeats: Vec<u64>,
}

fn default_representation() -> Representation {
    Representation::None
}

fn default_preprocessor() -> Preprocessor {
    Preprocessor::None
}

fn default_classifier() -> ClassifierKind {
    ClassifierKind::Knn1
}

impl ExperimentConfig {
    /// Defaults for everything but the dataset.
    pub fn new(dataset: DatasetSpec) -> Self {
        Self {
            dataset,
            representation: default_representation(),
            preprocessor: default_preprocessor(),
            classifier: default_classifier(),
            net: NetConfig::default(),
            optimizer: OptimizerSettings::default(),
            triplet: TripletConfig::default(),
            neighbor: NeighborSettings::default(),
            cv: CvSettings::default(),
            repeats: default_repeats(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.representation != Representation::None && self.preprocessor != Preprocessor::None {
            return Err(Error::Config(
                "a learned representation and a resampling preprocessor cannot be combined".into(),
            ));
        }
        if self.cv.folds < 2 {
            return Err(Error::Config("cv.folds must be at least 2".into()));
        }
        if self.repeats.is_empty() {
            return Err(Error::Config("repeats must list at least one seed".into()));
        }
        if !(self.optimizer.learning_rate.is_finite() && self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config("optimizer.learning_rate must be positive".into()));
        }
        if self.optimizer.ae_batch_size == 0 {
            return Err(Error::Config("optimizer.ae_batch_size must be positive".into()));
        }
        if self.net.hidden.contains(&0) || self.net.embedding_dim == Some(0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        self.triplet.validate()?;
        self.neighbor_config(SafeVariant::Basic).validate()
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_learning_rate(self.optimizer.learning_rate)
    }

    pub fn neighbor_config(&self, variant: SafeVariant) -> NeighborLossConfig {
        NeighborLossConfig {
            k: self.neighbor.k,
            batch_anchors: self.neighbor.batch_anchors,
            variant,
            cutoff_threshold: self.neighbor.cutoff_threshold,
        }
    }

    pub fn autoencoder_config(&self) -> AutoencoderTrainConfig {
        AutoencoderTrainConfig {
            epochs: self.optimizer.epochs,
            batch_size: self.optimizer.ae_batch_size,
            adam: self.adam(),
        }
    }

    pub fn triplet_train_config(&self, seed: u64) -> TripletTrainConfig {
        TripletTrainConfig {
            net: self.net.clone(),
            triplet: self.triplet,
            epochs: self.optimizer.epochs,
            adam: self.adam(),
            seed,
        }
    }

    pub fn safe_train_config(&self, variant: SafeVariant, seed: u64) -> SafeTrainConfig {
        SafeTrainConfig {
            net: self.net.clone(),
            neighbor: self.neighbor_config(variant),
            autoencoder: self.autoencoder_config(),
            epochs: self.optimizer.stage2_epochs,
            adam: self.adam(),
            seed,
        }
    }

    /// Parses a config and resolves a relative dataset path against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = serde_json::from_str(text)?;
        cfg.dataset.path = resolve(base_dir, &cfg.dataset.path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path.parent().unwrap_or(Path::new("")))
    }
}

pub(crate) fn resolve(base_dir: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}
