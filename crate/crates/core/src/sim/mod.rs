//! Desk-scale experiment harness: synthetic activations, benign and
//! adversarial perturbations, and the error statistics used to calibrate
//! validation thresholds.

mod analysis;
mod scenario;
mod synth;

pub use analysis::{
    exponent_error_histogram, mantissa_error_by_chunk, modulus_distribution_mc, ChunkErrorStats,
    ExponentHistogram, ModulusDistribution, PairingMode, BUCKET_LABELS,
};
pub use scenario::{run_scenario, Aggregate, ChunkShape, Experiment, ExperimentResult, TrialSummary};
pub use synth::{
    mix_seed, perturb, synth_activations, synth_with_outliers, PerturbationKind, PerturbationSpec,
    SynthChunk, OUTLIER_FRACTION, OUTLIER_SCALE,
};
