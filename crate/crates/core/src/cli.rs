//! Command-line front end. The binary is a thin wrapper around [`run`] so
//! every command can be driven in-process.
//!
//! Exit codes: `0` success (for `verify`: accepted), `1` rejected, `2`
//! usage, input or I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commitment::{commit_generation, split_decode, validate_generation, GenerationCommitment};
use crate::dump::read_dump;
use crate::error::{Error, Result};
use crate::float_codec::Precision;
use crate::proof::{decode, default_thresholds, CommitConfig, ReportSummary, Thresholds};
use crate::sim::{modulus_distribution_mc, ChunkShape, Experiment, PerturbationKind, PerturbationSpec};

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_REJECT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Schema version of every JSON document the CLI emits.
pub const JSON_SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "actproof", version, about = "Commit to and verify model activations with top-k polynomial proofs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a commitment file from an activation dump.
    Commit(CommitArgs),
    /// Check an activation dump against a commitment file.
    Verify(VerifyArgs),
    /// Run a synthetic detection experiment.
    Simulate(SimulateArgs),
    /// Summarize a commitment file.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct CommitArgs {
    #[arg(long)]
    activations: PathBuf,
    /// Leading tokens committed as the prefill chunk.
    #[arg(long)]
    prefill_tokens: usize,
    #[arg(long, default_value_t = CommitConfig::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = CommitConfig::DEFAULT_CHUNK_TOKENS)]
    chunk_tokens: usize,
    #[arg(long)]
    out: PathBuf,
    /// Extra metadata entries, KEY=VALUE.
    #[arg(long = "meta", value_parser = parse_key_value)]
    meta: Vec<(String, String)>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    activations: PathBuf,
    #[arg(long)]
    commitment: PathBuf,
    /// Validate at this precision, converting the dump if needed.
    #[arg(long)]
    precision_override: Option<Precision>,
    /// Prefill length; defaults to the value recorded in the commitment.
    #[arg(long)]
    prefill_tokens: Option<usize>,
    #[arg(long)]
    t_exp: Option<u32>,
    #[arg(long)]
    t_mean: Option<f64>,
    #[arg(long)]
    t_median: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// none, benign-jitter, exponent-flip, cancellation-zeros, model-swap,
    /// prompt-prefix-swap, precision-cast or mc-modulus.
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sample count for mc-modulus.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    /// Set size for mc-modulus.
    #[arg(long, default_value_t = 128)]
    set_size: usize,
    #[arg(long, default_value_t = CommitConfig::DEFAULT_K)]
    k: usize,
    #[arg(long, default_value_t = 32)]
    tokens: usize,
    #[arg(long, default_value_t = 4096)]
    hidden_dim: usize,
    /// Committed precision.
    #[arg(long, default_value = "bf16")]
    precision: Precision,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    z: Option<f64>,
    #[arg(long)]
    prefix_tokens: Option<f64>,
    #[arg(long)]
    t_exp: Option<u32>,
    #[arg(long)]
    t_mean: Option<f64>,
    #[arg(long)]
    t_median: Option<f64>,
    /// Print an aligned table instead of JSON.
    #[arg(long)]
    table: bool,
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    commitment: PathBuf,
}

fn parse_key_value(s: &str) -> std::result::Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected KEY=VALUE, got {s:?}"))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_ACCEPT };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Commit(a) => cmd_commit(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Simulate(a) => cmd_simulate(&a, out),
        Command::Inspect(a) => cmd_inspect(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn cmd_commit(args: &CommitArgs, out: &mut dyn Write) -> Result<i32> {
    let raw = std::fs::read(&args.activations)?;
    let activations = crate::dump::decode_dump(&raw)?;
    let tokens = activations.token_count();
    if args.prefill_tokens == 0 || args.prefill_tokens > tokens {
        return Err(Error::InvalidConfig(format!(
            "--prefill-tokens must be in 1..={tokens}"
        )));
    }
    let config = CommitConfig::new(args.k, args.chunk_tokens, activations.precision())?;
    let prefill = activations.tokens(0, args.prefill_tokens)?;
    let decode_chunks = split_decode(&activations, args.prefill_tokens, args.chunk_tokens)?;
    let mut commitment = commit_generation(&prefill, &decode_chunks, &config)?;
    commitment
        .metadata
        .insert("activations_sha256".into(), hex::encode(Sha256::digest(&raw)));
    for (k, v) in &args.meta {
        commitment.metadata.insert(k.clone(), v.clone());
    }
    let bytes = commitment.to_bytes()?;
    std::fs::write(&args.out, &bytes)?;
    writeln!(
        out,
        "proofs={} proof_bytes={} file_bytes={}",
        commitment.proof_count(),
        commitment.proof_bytes(),
        bytes.len()
    )?;
    Ok(EXIT_ACCEPT)
}

fn thresholds_with(base: Thresholds, t_exp: Option<u32>, t_mean: Option<f64>, t_median: Option<f64>) -> Result<Thresholds> {
    Thresholds::new(
        t_exp.unwrap_or(base.t_exp),
        t_mean.unwrap_or(base.t_mean),
        t_median.unwrap_or(base.t_median),
    )
}

#[derive(Serialize)]
struct ChunkVerdict {
    chunk: usize,
    phase: &'static str,
    #[serde(flatten)]
    report: ReportSummary,
}

#[derive(Serialize)]
struct VerifyOutput {
    schema: u32,
    accepted: bool,
    committed_precision: Precision,
    validator_precision: Precision,
    thresholds: Thresholds,
    chunks: Vec<ChunkVerdict>,
}

fn cmd_verify(args: &VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let mut activations = read_dump(&args.activations)?;
    let commitment = GenerationCommitment::from_bytes(&std::fs::read(&args.commitment)?)?;
    if let Some(p) = args.precision_override {
        activations = activations.cast(p)?;
    }
    let validator = activations.precision();
    let prefill_tokens = args
        .prefill_tokens
        .or_else(|| commitment.prefill_tokens())
        .ok_or_else(|| Error::InvalidConfig("prefill length unknown; pass --prefill-tokens".into()))?;
    if prefill_tokens == 0 || prefill_tokens > activations.token_count() {
        return Err(Error::InvalidConfig(format!(
            "prefill of {prefill_tokens} tokens does not fit a dump of {} tokens",
            activations.token_count()
        )));
    }
    let prefill = activations.tokens(0, prefill_tokens)?;
    let decode_chunks = split_decode(&activations, prefill_tokens, commitment.config.chunk_tokens())?;
    let thresholds = thresholds_with(default_thresholds(validator), args.t_exp, args.t_mean, args.t_median)?;
    let report = validate_generation(&prefill, &decode_chunks, &commitment, &thresholds)?;

    let chunks = report
        .reports()
        .enumerate()
        .map(|(i, r)| ChunkVerdict {
            chunk: i,
            phase: if i == 0 { "prefill" } else { "decode" },
            report: r.summary(),
        })
        .collect();
    let output = VerifyOutput {
        schema: JSON_SCHEMA,
        accepted: report.accepted,
        committed_precision: commitment.config.precision(),
        validator_precision: validator,
        thresholds,
        chunks,
    };
    writeln!(out, "{}", serde_json::to_string_pretty(&output).expect("serializable"))?;
    Ok(if report.accepted { EXIT_ACCEPT } else { EXIT_REJECT })
}

#[derive(Serialize)]
struct ModulusOutput<'a> {
    schema: u32,
    scenario: &'static str,
    #[serde(flatten)]
    distribution: &'a crate::sim::ModulusDistribution,
    ratios: std::collections::BTreeMap<u64, f64>,
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let text = if args.scenario == "mc-modulus" {
        let dist = modulus_distribution_mc(args.samples, args.set_size, args.seed)?;
        if args.table {
            dist.to_table()
        } else {
            let ratios = dist.counts.keys().map(|&m| (m, dist.ratio(m))).collect();
            let doc = ModulusOutput {
                schema: JSON_SCHEMA,
                scenario: "mc-modulus",
                distribution: &dist,
                ratios,
            };
            serde_json::to_string_pretty(&doc).expect("serializable")
        }
    } else {
        let kind: PerturbationKind = args.scenario.parse()?;
        let mut spec = PerturbationSpec::new(kind, args.seed);
        for (name, value) in [
            ("delta", args.delta),
            ("p", args.p),
            ("q", args.q),
            ("z", args.z),
            ("prefix_tokens", args.prefix_tokens),
        ] {
            if let Some(v) = value {
                spec = spec.with(name, v);
            }
        }
        let config = CommitConfig::new(args.k, CommitConfig::DEFAULT_CHUNK_TOKENS, args.precision)?;
        let mut experiment = Experiment {
            scenario: spec,
            trials: args.trials,
            config,
            thresholds: default_thresholds(args.precision),
            shape: ChunkShape {
                token_count: args.tokens,
                hidden_dim: args.hidden_dim,
            },
        };
        experiment.thresholds = thresholds_with(
            default_thresholds(experiment.validator_precision()),
            args.t_exp,
            args.t_mean,
            args.t_median,
        )?;
        let result = experiment.run()?;
        if args.table {
            result.to_table()
        } else {
            result.to_json()
        }
    };
    match &args.out {
        Some(path) => std::fs::write(path, format!("{text}\n"))?,
        None => writeln!(out, "{text}")?,
    }
    Ok(EXIT_ACCEPT)
}

fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<i32> {
    let bytes = std::fs::read(&args.commitment)?;
    let c = GenerationCommitment::from_bytes(&bytes)?;
    let profile = c.config.profile();
    writeln!(
        out,
        "profile={} k={} chunk={} proofs={}",
        c.config.precision(),
        c.config.k(),
        c.config.chunk_tokens(),
        c.proof_count()
    )?;
    for (i, proof) in c.proofs().enumerate() {
        let poly = decode(proof, profile)?;
        let phase = if i == 0 { "prefill" } else { "decode" };
        writeln!(
            out,
            "proof {i:>4} {phase:<7} modulus={} k={} bytes={}",
            poly.modulus(),
            poly.len(),
            proof.len()
        )?;
    }
    writeln!(out, "total_bytes={} proof_bytes={}", bytes.len(), c.proof_bytes())?;
    match c.amortized_bytes_per_token() {
        Some(a) => writeln!(out, "amortized={a:.2} B/token")?,
        None => writeln!(out, "amortized=n/a")?,
    }
    for (k, v) in &c.metadata {
        writeln!(out, "meta {k}={v}")?;
    }
    Ok(EXIT_ACCEPT)
}
