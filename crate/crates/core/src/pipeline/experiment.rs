use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Representation};
use crate::classeval::{self, gmean_over_present, macro_f1};
use crate::dataio::{load_csv, stratified_kfold, Dataset, FeatureEncoder, FoldAssignment, RawDataset};
use crate::netcore::EncoderParams;
use crate::neighborloss::{pretrain_encoder, train_safe_encoder};
use crate::tripletloss::{constraint_satisfaction, train_triplet_encoder};
use crate::{resample, rng, Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldResult {
    pub repeat: u64,
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub macro_f1: f64,
    pub gmean: f64,
    /// Fraction of in-batch training triplets meeting the margin after
    /// training; triplet representations only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub triplet_constraint_satisfied: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Population standard deviation over all (repeat, fold) results.
    pub std: f64,
}

impl MetricSummary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub macro_f1: MetricSummary,
    pub gmean: MetricSummary,
}

impl Summary {
    pub fn of(folds: &[FoldResult]) -> Self {
        let f1: Vec<f64> = folds.iter().map(|f| f.macro_f1).collect();
        let g: Vec<f64> = folds.iter().map(|f| f.gmean).collect();
        Self {
            macro_f1: MetricSummary::of(&f1),
            gmean: MetricSummary::of(&g),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub n_rows: usize,
    pub class_names: Vec<String>,
    /// FNV-1a digest of every repeat's fold assignment.
    pub folds_digest: String,
    pub warnings: Vec<String>,
    pub folds: Vec<FoldResult>,
    pub summary: Summary,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Mean ± std of each metric over all folds and repeats.
    pub fn to_table(&self) -> String {
        format!(
            "metric    mean ± std\nmacro_f1  {:.3} ± {:.3}\ngmean     {:.3} ± {:.3}\n",
            self.summary.macro_f1.mean, self.summary.macro_f1.std, self.summary.gmean.mean, self.summary.gmean.std
        )
    }
}

/// Loads the configured dataset and runs the cross-validation.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let raw = load_csv(&cfg.dataset.path, &cfg.dataset.schema())?;
    run_experiment_on(&raw, cfg)
}

/// Fold assignment of every repeat, in `cfg.repeats` order.
pub fn fold_assignments(raw: &RawDataset, cfg: &ExperimentConfig) -> Result<Vec<FoldAssignment>> {
    let classes = raw.class_names();
    let labels: Vec<usize> = raw
        .labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).expect("label from this table"))
        .collect();
    cfg.repeats
        .iter()
        .map(|&r| stratified_kfold(&labels, cfg.cv.folds, rng::derive_seed(cfg.cv.seed, &[r])))
        .collect()
}

pub(crate) fn digest(assignments: &[FoldAssignment]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for a in assignments {
        for &f in a.fold_of.iter().chain([usize::MAX].iter()) {
            for b in (f as u64).to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }
    format!("{h:016x}")
}

/// Cross-validates `cfg` on an in-memory table; `cfg.dataset` is not read.
pub fn run_experiment_on(raw: &RawDataset, cfg: &ExperimentConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let classes = raw.class_names();
    let assignments = fold_assignments(raw, cfg)?;
    let mut warnings: Vec<String> = Vec::new();
    for a in &assignments {
        for w in &a.warnings {
            if !warnings.contains(w) {
                warnings.push(w.clone());
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.repeats.len())
        .flat_map(|r| (0..cfg.cv.folds).map(move |f| (r, f)))
        .collect();
    let folds = jobs
        .par_iter()
        .map(|&(r, f)| {
            let repeat = cfg.repeats[r];
            let seed = rng::derive_seed(cfg.cv.seed, &[repeat, f as u64]);
            run_fold(raw, &classes, &assignments[r], f, cfg, seed)
                .map(|mut res| {
                    res.repeat = repeat;
                    res
                })
                .map_err(|e| Error::Fold {
                    seed: repeat,
                    fold: f,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<FoldResult>>>()?;
    let summary = Summary::of(&folds);
    Ok(EvalReport {
        version: VERSION.to_string(),
        config: cfg.clone(),
        n_rows: raw.n_rows(),
        class_names: classes,
        folds_digest: digest(&assignments),
        warnings,
        folds,
        summary,
    })
}

/// Trains the configured representation on `train`. `None` for the raw
/// representation.
pub fn train_representation(train: &Dataset, cfg: &ExperimentConfig, seed: u64) -> Result<Option<EncoderParams>> {
    Ok(match cfg.representation {
        Representation::None => None,
        Representation::Autoencoder => Some(pretrain_encoder(train, &cfg.net, &cfg.autoencoder_config(), seed)?),
        Representation::Triplet | Representation::TripletWeighted => Some(train_triplet_encoder(
            train,
            &cfg.triplet_train_config(seed),
            cfg.representation == Representation::TripletWeighted,
        )?),
        r => {
            let variant = r.safe_variant().expect("safe representation");
            Some(train_safe_encoder(train, &cfg.safe_train_config(variant, seed))?)
        }
    })
}

fn run_fold(
    raw: &RawDataset,
    classes: &[String],
    assignment: &FoldAssignment,
    fold: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<FoldResult> {
    let train_raw = raw.subset(&assignment.train_indices(fold));
    let test_raw = raw.subset(&assignment.test_indices(fold));
    // statistics come from the training split only
    let encoder = FeatureEncoder::fit(&train_raw)?.with_classes(classes.to_vec());
    let train = encoder.transform(&train_raw)?;
    let test = encoder.transform(&test_raw)?;

    let mut satisfied = None;
    let (train_x, test_x) = match train_representation(&train, cfg, seed)? {
        None => {
            let mut r = rng::seeded(rng::derive_seed(seed, &[3]));
            let resampled = resample::apply(cfg.preprocessor, &train, &mut r)?;
            (resampled.dataset, test)
        }
        Some(net) => {
            if matches!(cfg.representation, Representation::Triplet | Representation::TripletWeighted) {
                let mut r = rng::seeded(rng::derive_seed(seed, &[4]));
                satisfied = Some(constraint_satisfaction(&net, &train, &cfg.triplet, &mut r)?);
            }
            (
                train.with_features(net.forward(train.features())?)?,
                test.with_features(net.forward(test.features())?)?,
            )
        }
    };
    let model = classeval::fit(cfg.classifier, &train_x)?;
    let predicted = classeval::predict(&model, test_x.features())?;
    let c = classes.len();
    Ok(FoldResult {
        repeat: 0,
        fold,
        train_rows: train.n_rows(),
        test_rows: test_x.n_rows(),
        macro_f1: macro_f1(test_x.labels(), &predicted, c)?,
        gmean: gmean_over_present(test_x.labels(), &predicted, c)?,
        triplet_constraint_satisfied: satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::DatasetSpec;
    use crate::synth;

    fn cfg() -> ExperimentConfig {
        ExperimentConfig::new(DatasetSpec {
            path: "unused.csv".into(),
            label_column: "class".into(),
            categorical: vec![],
            ignore: vec![],
        })
    }

    #[test]
    fn summary_is_population_moments() {
        let s = MetricSummary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn repeats_multiply_fold_rows() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[30, 12], 2, 3.0, 0)).unwrap();
        let mut c = cfg();
        c.repeats = vec![4, 9];
        let rep = run_experiment_on(&raw, &c).unwrap();
        assert_eq!(rep.folds.len(), 10);
        assert_eq!(rep.folds.iter().filter(|f| f.repeat == 9).count(), 5);
        let mean = rep.folds.iter().map(|f| f.macro_f1).sum::<f64>() / 10.0;
        assert!((rep.summary.macro_f1.mean - mean).abs() < 1e-12);
        assert_eq!(rep.folds.iter().map(|f| f.test_rows).sum::<usize>(), 84);
    }

    #[test]
    fn identical_config_identical_report() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[25, 10], 3, 2.0, 1)).unwrap();
        let mut c = cfg();
        c.representation = Representation::TripletWeighted;
        c.optimizer.epochs = 3;
        c.net.hidden = [8, 4];
        let a = run_experiment_on(&raw, &c).unwrap().to_json().unwrap();
        let b = run_experiment_on(&raw, &c).unwrap().to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn every_arm_runs() {
        let raw = synth::to_raw(&synth::gaussian_classes(&[30, 20, 12], 3, 2.5, 2)).unwrap();
        let mut c = cfg();
        c.optimizer.epochs = 2;
        c.optimizer.stage2_epochs = 1;
        c.net.hidden = [6, 4];
        c.neighbor.k = 5;
        c.cv.folds = 3;
        for rep in [
            Representation::Autoencoder,
            Representation::Triplet,
            Representation::SafeBasic,
            Representation::SafeWeights,
            Representation::SafeCutoff,
            Representation::SafeMeanDists,
        ] {
            c.representation = rep;
            let r = run_experiment_on(&raw, &c).unwrap();
            assert!(r.summary.macro_f1.mean > 0.0, "{rep:?}");
        }
        c.representation = Representation::None;
        for pre in [
            resample::Preprocessor::GlobalCs,
            resample::Preprocessor::StaticSmote,
            resample::Preprocessor::Mdo,
        ] {
            c.preprocessor = pre;
            for clf in [classeval::ClassifierKind::Knn1, classeval::ClassifierKind::Lda, classeval::ClassifierKind::Tree] {
                c.classifier = clf;
                let r = run_experiment_on(&raw, &c).unwrap();
                assert!(r.summary.gmean.mean > 0.3, "{pre:?} {clf:?}");
            }
        }
    }

    #[test]
    fn fold_errors_carry_context() {
        // 10 rows cannot supply 20 neighbors per anchor
        let raw = synth::to_raw(&synth::gaussian_classes(&[6, 6], 2, 3.0, 0)).unwrap();
        let mut c = cfg();
        c.representation = Representation::SafeBasic;
        c.optimizer.epochs = 1;
        c.cv.folds = 2;
        match run_experiment_on(&raw, &c) {
            Err(Error::Fold { fold, .. }) => assert!(fold < 2),
            other => panic!("{other:?}"),
        }
    }
}
