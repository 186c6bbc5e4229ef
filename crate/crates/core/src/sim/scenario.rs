use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::{mix_seed, perturb, synth_activations, PerturbationKind, PerturbationSpec};
use crate::error::{Error, Result};
use crate::float_codec::Precision;
use crate::proof::{generate_poly, validate_poly, CommitConfig, Thresholds};
use crate::topk::{index_set_mismatch, top_k};

/// Shape of every synthesized chunk in an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkShape {
    pub token_count: usize,
    pub hidden_dim: usize,
}

impl Default for ChunkShape {
    /// One 32-token decode interval of a 4096-wide model.
    fn default() -> Self {
        ChunkShape {
            token_count: 32,
            hidden_dim: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub exp_mismatch: usize,
    pub mantissa_mean: Option<f64>,
    pub mantissa_median: Option<f64>,
    pub topk_mismatch: usize,
    pub accepted: bool,
}

/// Extrema over all trials, mirroring worst-case/best-case result tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub max_exp_mismatch: usize,
    pub min_exp_mismatch: usize,
    pub max_mantissa_mean: Option<f64>,
    pub min_mantissa_mean: Option<f64>,
    pub max_mantissa_median: Option<f64>,
    pub max_topk_mismatch_ratio: f64,
    pub median_topk_mismatch_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema: u32,
    pub scenario: PerturbationSpec,
    pub committed_precision: Precision,
    pub validator_precision: Precision,
    pub k: usize,
    pub shape: ChunkShape,
    pub thresholds: Thresholds,
    pub trials: usize,
    pub accept_count: usize,
    pub aggregate: Aggregate,
    pub per_trial: Vec<TrialSummary>,
}

/// One scenario: synthesize, commit, perturb and validate, `trials` times.
///
/// Trial `t` draws its activations from `mix_seed(spec.seed, 0, t)` and its
/// perturbation from `mix_seed(spec.seed, 1, t)`, so results do not depend
/// on scheduling.
///
/// `PrecisionCast` is handled specially: the ground truth is an fp32 chunk,
/// the committer works in `config.precision()` and the validator in the
/// other precision, each seeing the truth rounded to its own format.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub scenario: PerturbationSpec,
    pub trials: usize,
    pub config: CommitConfig,
    pub thresholds: Thresholds,
    pub shape: ChunkShape,
}

impl Experiment {
    pub fn validator_precision(&self) -> Precision {
        match self.scenario.kind {
            PerturbationKind::PrecisionCast => self.config.precision().other(),
            _ => self.config.precision(),
        }
    }

    pub fn run(&self) -> Result<ExperimentResult> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        self.scenario.validate()?;
        let per_trial = (0..self.trials)
            .into_par_iter()
            .map(|t| self.trial(t))
            .collect::<Result<Vec<_>>>()?;
        let accept_count = per_trial.iter().filter(|t| t.accepted).count();
        let aggregate = aggregate(&per_trial, self.config.k());
        Ok(ExperimentResult {
            schema: 1,
            scenario: self.scenario.clone(),
            committed_precision: self.config.precision(),
            validator_precision: self.validator_precision(),
            k: self.config.k(),
            shape: self.shape,
            thresholds: self.thresholds,
            trials: self.trials,
            accept_count,
            aggregate,
            per_trial,
        })
    }

    fn trial(&self, t: usize) -> Result<TrialSummary> {
        let base = self.scenario.seed;
        let data_seed = mix_seed(base, 0, t as u64);
        let ChunkShape {
            token_count,
            hidden_dim,
        } = self.shape;
        let committed_precision = self.config.precision();

        let (committed, recomputed) = match self.scenario.kind {
            PerturbationKind::PrecisionCast => {
                let truth = synth_activations(data_seed, token_count, hidden_dim, Precision::Fp32)?;
                (truth.cast(committed_precision)?, truth.cast(committed_precision.other())?)
            }
            _ => {
                let original = synth_activations(data_seed, token_count, hidden_dim, committed_precision)?;
                let spec = PerturbationSpec {
                    seed: mix_seed(base, 1, t as u64),
                    ..self.scenario.clone()
                };
                let perturbed = perturb(&original, &spec)?;
                (original, perturbed)
            }
        };

        let poly = generate_poly(&committed, &self.config)?;
        let report = validate_poly(&recomputed, &poly, &self.thresholds, committed_precision)?;
        let k = self.config.k();
        let topk_mismatch = index_set_mismatch(&top_k(&committed, k)?, &top_k(&recomputed, k)?)?.count;
        let summary = report.summary();
        Ok(TrialSummary {
            trial: t,
            exp_mismatch: report.exp_mismatch,
            mantissa_mean: summary.mantissa_mean,
            mantissa_median: summary.mantissa_median,
            topk_mismatch,
            accepted: report.accepted,
        })
    }
}

pub fn run_scenario(
    scenario: PerturbationSpec,
    trials: usize,
    config: CommitConfig,
    thresholds: Thresholds,
    shape: ChunkShape,
) -> Result<ExperimentResult> {
    Experiment {
        scenario,
        trials,
        config,
        thresholds,
        shape,
    }
    .run()
}

fn fold_opt(values: impl Iterator<Item = Option<f64>>, pick: fn(f64, f64) -> f64) -> Option<f64> {
    values.flatten().reduce(pick)
}

fn aggregate(trials: &[TrialSummary], k: usize) -> Aggregate {
    let mut ratios: Vec<f64> = trials.iter().map(|t| t.topk_mismatch as f64 / k as f64).collect();
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        (ratios[n / 2 - 1] + ratios[n / 2]) / 2.0
    };
    Aggregate {
        max_exp_mismatch: trials.iter().map(|t| t.exp_mismatch).max().unwrap_or(0),
        min_exp_mismatch: trials.iter().map(|t| t.exp_mismatch).min().unwrap_or(0),
        max_mantissa_mean: fold_opt(trials.iter().map(|t| t.mantissa_mean), f64::max),
        min_mantissa_mean: fold_opt(trials.iter().map(|t| t.mantissa_mean), f64::min),
        max_mantissa_median: fold_opt(trials.iter().map(|t| t.mantissa_median), f64::max),
        max_topk_mismatch_ratio: ratios.last().copied().unwrap_or(0.0),
        median_topk_mismatch_ratio: median,
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

impl ExperimentResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }

    /// Aligned single-row summary table.
    pub fn to_table(&self) -> String {
        let a = &self.aggregate;
        let pct = |n: usize| format!("{n} ({:.2}%)", 100.0 * n as f64 / self.k as f64);
        let rows = [
            ("scenario", self.scenario.kind.to_string()),
            ("committed/validator", format!("{}/{}", self.committed_precision, self.validator_precision)),
            ("accepted", format!("{}/{}", self.accept_count, self.trials)),
            ("max top-k mismatch", format!("{:.2}%", 100.0 * a.max_topk_mismatch_ratio)),
            ("median top-k mismatch", format!("{:.2}%", 100.0 * a.median_topk_mismatch_ratio)),
            ("max exponent mismatch", pct(a.max_exp_mismatch)),
            ("min exponent mismatch", pct(a.min_exp_mismatch)),
            ("max mantissa diff mean", fmt_opt(a.max_mantissa_mean)),
            ("min mantissa diff mean", fmt_opt(a.min_mantissa_mean)),
            ("max mantissa diff median", fmt_opt(a.max_mantissa_median)),
        ];
        let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (label, value) in rows {
            let _ = writeln!(out, "{label:<width$}  {value}");
        }
        out
    }
}
