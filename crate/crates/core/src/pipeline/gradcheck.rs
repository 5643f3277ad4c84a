//! Finite-difference verification of every trainable objective composed
//! with a random encoder.

use rand::Rng as _;
use serde::Serialize;

use crate::neighborloss::{active_hinges, knn_batch_from_embeddings, safe_loss, NeighborLossConfig, SafeVariant};
use crate::netcore::gradcheck::{check_gradient, GradCheckReport, FD_STEP};
use crate::netcore::{init_params, mse_loss, AutoencoderParams, EncoderParams};
use crate::tripletloss::{
    class_weights, mine_triplets, triplet_loss, weighted_triplet_loss, MiningStrategy, Triplet, TripletConfig,
};
use crate::{rng, Matrix, Result};

pub const OBJECTIVES: [&str; 7] = [
    "triplet",
    "triplet_weighted",
    "safe_basic",
    "safe_weights",
    "safe_cutoff",
    "safe_mean_dists",
    "autoencoder_mse",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckEntry {
    pub objective: String,
    pub report: GradCheckReport,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckSuite {
    pub seeds: u64,
    pub entries: Vec<GradCheckEntry>,
}

impl GradCheckSuite {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<18} {:>14} {:>8} {:>8}  result\n", "objective", "max_rel_error", "checked", "skipped");
        for e in &self.entries {
            s.push_str(&format!(
                "{:<18} {:>14.3e} {:>8} {:>8}  {}\n",
                e.objective,
                e.report.max_rel_error,
                e.report.checked,
                e.report.skipped,
                if e.passed { "ok" } else { "FAIL" }
            ));
        }
        s
    }
}

/// Random problem: up to 10 rows in up to 8 dimensions, 2 or 3 classes
/// (every class at least twice), and a random 3-layer encoder.
struct Problem {
    x: Matrix,
    labels: Vec<usize>,
    layer_sizes: Vec<usize>,
    encoder: EncoderParams,
}

fn problem(seed: u64) -> Result<Problem> {
    let mut r = rng::seeded(seed);
    let m = r.random_range(6..=10usize);
    let d = r.random_range(2..=8usize);
    let classes = r.random_range(2..=3usize);
    let x = Matrix::from_shape_simple_fn((m, d), || r.random_range(-2.0..2.0));
    let labels: Vec<usize> = (0..m).map(|i| if i < 2 * classes { i % classes } else { r.random_range(0..classes) }).collect();
    let layer_sizes = vec![d, r.random_range(3..=8), r.random_range(3..=8), r.random_range(2..=4)];
    let encoder = init_params(&layer_sizes, rng::derive_seed(seed, &[1]))?;
    Ok(Problem {
        x,
        labels,
        layer_sizes,
        encoder,
    })
}

fn triplet_bracket_signs(e: &Matrix, triplets: &[Triplet], margin: f64) -> Vec<bool> {
    let sq = |i: usize, j: usize| -> f64 { e.row(i).iter().zip(e.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum() };
    triplets
        .iter()
        .map(|t| sq(t.anchor, t.positive) - sq(t.anchor, t.negative) + margin > 0.0)
        .collect()
}

fn check_triplet(p: &Problem, weighted: bool, seed: u64) -> Result<GradCheckReport> {
    let cfg = TripletConfig {
        margin: 1.0,
        strategy: MiningStrategy::Hardest,
        batch_size: p.x.nrows(),
    };
    let emb = p.encoder.forward(&p.x)?;
    let triplets = mine_triplets(&emb, &p.labels, &cfg, &mut rng::seeded(seed))?;
    let mut counts = vec![0usize; p.labels.iter().max().map_or(0, |m| m + 1)];
    for &y in &p.labels {
        counts[y] += 1;
    }
    let weights = class_weights(&counts)?;
    let loss = |e: &Matrix| -> Result<(f64, Matrix)> {
        if weighted {
            weighted_triplet_loss(e, &triplets, cfg.margin, &weights, &p.labels)
        } else {
            triplet_loss(e, &triplets, cfg.margin)
        }
    };
    let trace = p.encoder.forward_trace(&p.x)?;
    let (_, upstream) = loss(&trace.output)?;
    let (grads, _) = p.encoder.backward_trace(&trace, &upstream)?;
    Ok(check_gradient(&p.encoder, &grads, FD_STEP, |q| {
        let e = q.forward(&p.x).expect("shapes fixed");
        let mut sig = q.activation_pattern(&p.x).expect("shapes fixed");
        sig.extend(triplet_bracket_signs(&e, &triplets, cfg.margin));
        (loss(&e).expect("valid triplets").0, sig)
    }))
}

fn check_safe(p: &Problem, variant: SafeVariant, seed: u64) -> Result<GradCheckReport> {
    let cfg = NeighborLossConfig {
        k: 4,
        batch_anchors: 4,
        variant,
        cutoff_threshold: 0.7,
    };
    let emb = p.encoder.forward(&p.x)?;
    let batch = knn_batch_from_embeddings(&emb, &cfg, &mut rng::seeded(seed))?;
    let members = batch.select_members(&p.x);
    let trace = p.encoder.forward_trace(&members)?;
    let (_, upstream) = safe_loss(&trace.output, &batch, &p.labels, &cfg)?;
    let (grads, _) = p.encoder.backward_trace(&trace, &upstream)?;
    Ok(check_gradient(&p.encoder, &grads, FD_STEP, |q| {
        let e = q.forward(&members).expect("shapes fixed");
        let mut sig = q.activation_pattern(&members).expect("shapes fixed");
        sig.extend(active_hinges(&e, &batch, &p.labels));
        (safe_loss(&e, &batch, &p.labels, &cfg).expect("valid batch").0, sig)
    }))
}

fn check_autoencoder(p: &Problem, seed: u64) -> Result<GradCheckReport> {
    let ae = AutoencoderParams::init(&p.layer_sizes, seed)?;
    let (_, grads) = ae.loss_and_grads(&p.x)?;
    Ok(check_gradient(&ae, &grads, FD_STEP, |q| {
        let code = q.encoder.forward(&p.x).expect("shapes fixed");
        let out = q.decoder.forward(&code).expect("shapes fixed");
        let mut sig = q.encoder.activation_pattern(&p.x).expect("shapes fixed");
        sig.extend(q.decoder.activation_pattern(&code).expect("shapes fixed"));
        (mse_loss(&out, &p.x).expect("shapes fixed").0, sig)
    }))
}

/// Checks every objective in [`OBJECTIVES`] on `seeds` random problems.
pub fn run_gradcheck_suite(seeds: u64) -> Result<GradCheckSuite> {
    let mut entries = Vec::new();
    for name in OBJECTIVES {
        let mut total: Option<GradCheckReport> = None;
        for s in 0..seeds {
            let p = problem(s)?;
            let rep = match name {
                "triplet" => check_triplet(&p, false, s)?,
                "triplet_weighted" => check_triplet(&p, true, s)?,
                "safe_basic" => check_safe(&p, SafeVariant::Basic, s)?,
                "safe_weights" => check_safe(&p, SafeVariant::SafeWeights, s)?,
                "safe_cutoff" => check_safe(&p, SafeVariant::Cutoff, s)?,
                "safe_mean_dists" => check_safe(&p, SafeVariant::MeanDists, s)?,
                _ => check_autoencoder(&p, s)?,
            };
            match &mut total {
                None => total = Some(rep),
                Some(t) => t.merge(&rep),
            }
        }
        let report = total.expect("at least one seed");
        entries.push(GradCheckEntry {
            objective: name.to_string(),
            passed: report.passed(),
            report,
        });
    }
    Ok(GradCheckSuite { seeds, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_a_few_problems() {
        let suite = run_gradcheck_suite(3).unwrap();
        assert_eq!(suite.entries.len(), OBJECTIVES.len());
        assert!(suite.passed(), "{}", suite.to_table());
    }
}
