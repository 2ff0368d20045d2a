use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use ap3lab::ap_count::{count_3aps_naive, count_3aps_spectral, split_spectrum};
use ap3lab::bohr::{
    bohr_element, convolve, extract_ap_from_convolution, spectrum_flatness, BohrSpec,
    SmoothingProgression,
};
use ap3lab::constructions::{improve_critical_candidate, sample_intersection, two_interval_set};
use ap3lab::critical::{
    anneal_critical, exhaustive_critical, varnavides_csv, varnavides_estimate, Schedule,
    DEFAULT_MINIMIZER_CAP,
};
use ap3lab::harness::{
    emit, parse_improve_params, run_theorem_experiment, ExperimentConfig, Format,
};
use ap3lab::rounding::{round_weights, RoundingOptions};
use ap3lab::{Error, PrimeModulus, ResidueSet, Result, WeightFunction, THREADS_ENV};

/// Three-term progressions in Z/pZ: counts, spectra, Bohr sets, rounding,
/// constructions and critical-set search.
#[derive(Parser)]
#[command(name = "ap3lab", version)]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountMethod {
    Naive,
    Spectral,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchKind {
    Exhaustive,
    Anneal,
}

#[derive(Subcommand)]
enum Command {
    /// Count 3-term progressions in a set.
    Count {
        #[arg(long)]
        set: PathBuf,
        #[arg(long, value_enum, default_value_t = CountMethod::Both)]
        method: CountMethod,
    },
    /// Large spectrum, Bohr step, smoothing and progression extraction.
    Bohr {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        threshold: f64,
        /// Bohr radius for the step n0.
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        length: u64,
        /// Extraction fires when the maximum convolution exceeds 1 - this.
        #[arg(long, default_value_t = 0.5)]
        extract_eps: f64,
    },
    /// Randomized rounding of a weight function with a spectral certificate.
    Round {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        bound_factor: f64,
    },
    /// Sample a large, progression-poor affine intersection A ∩ (uB + v).
    Intersect {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        max_draws: u64,
    },
    /// Two-interval set and its complement with checked progression counts.
    TwoInterval {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        theta: f64,
    },
    /// Run the improvement pipeline on a candidate critical set.
    Improve {
        #[arg(long)]
        set: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Find s-subsets of Z/pZ with the fewest progressions.
    Search {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum, default_value_t = SearchKind::Exhaustive)]
        method: SearchKind,
        /// Required for annealing.
        #[arg(long)]
        seed: Option<u64>,
        /// Most minimizers listed in the output.
        #[arg(long, default_value_t = DEFAULT_MINIMIZER_CAP)]
        cap: usize,
    },
    /// Minimum progression count per density, as a fraction of p^2.
    Varnavides {
        #[arg(long)]
        p: u64,
        #[arg(long, value_delimiter = ',', required = true)]
        densities: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the full spectral experiment described by a config file.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn read_set(path: &Path) -> Result<ResidueSet> {
    ResidueSet::parse(&read(path)?)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{THREADS_ENV} must be a positive integer, got `{raw}`"
        ))
    })?;
    // Fails only if a pool already exists, which cannot happen this early.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Returns the JSON value and, for commands with a fixed table, its CSV.
fn run(command: Command) -> Result<(Value, Option<String>)> {
    match command {
        Command::Count { set, method } => {
            let set = read_set(&set)?;
            let naive = matches!(method, CountMethod::Naive | CountMethod::Both)
                .then(|| count_3aps_naive(&set));
            let spectral = match method {
                CountMethod::Naive => None,
                _ => Some(count_3aps_spectral(&set).map_err(stage("spectral"))?),
            };
            let agreement = match (&naive, &spectral) {
                (Some(n), Some(s)) => {
                    let rel = (s.real - n.total as f64).abs() / (n.total as f64).max(1.0);
                    json!(rel < 1e-6)
                }
                _ => Value::Null,
            };
            let (total, trivial, nontrivial) = match &naive {
                Some(n) => (json!(n.total), json!(n.trivial), json!(n.nontrivial)),
                None => {
                    let s = spectral.as_ref().expect("spectral count present");
                    let total = s.real.round() as u64;
                    let trivial = set.len() as u64;
                    (
                        json!(total),
                        json!(trivial),
                        json!(total.saturating_sub(trivial)),
                    )
                }
            };
            Ok((
                json!({
                    "total": total,
                    "trivial": trivial,
                    "nontrivial": nontrivial,
                    "spectral_value": spectral.map(|s| s.real),
                    "agreement": agreement,
                }),
                None,
            ))
        }
        Command::Bohr {
            set,
            threshold,
            eps,
            length,
            extract_eps,
        } => {
            let set = read_set(&set)?;
            let p = set.modulus();
            let split = split_spectrum(&set, threshold)?;
            let spec = BohrSpec::new(p, split.large_freqs.clone(), eps)?;
            let n0 = bohr_element(&spec).map_err(stage("bohr_element"))?;
            let n = SmoothingProgression::new(p, n0, length)?;
            let conv = convolve(&set, &n).map_err(stage("convolve"))?;
            let (argmax_m, max_conv) = conv.argmax();
            let extractable = extract_eps < 1.0
                && extract_eps * length as f64 > 1.0
                && max_conv > 1.0 - extract_eps;
            let run = if extractable {
                Some(
                    extract_ap_from_convolution(&set, &n, argmax_m, extract_eps)
                        .map_err(stage("extract_ap"))?,
                )
            } else {
                None
            };
            Ok((
                json!({
                    "n0": n0,
                    "large_freqs": split.large_freqs,
                    "flatness": spectrum_flatness(&n, &split.large_freqs),
                    "max_convolution": max_conv,
                    "argmax_m": argmax_m,
                    "extracted_run": run,
                }),
                None,
            ))
        }
        Command::Round {
            weights,
            seed,
            bound_factor,
        } => {
            let w = WeightFunction::parse(&read(&weights)?)?;
            let opts = RoundingOptions::with_bound_factor(bound_factor);
            let (set, cert) = round_weights(&w, seed, &opts).map_err(stage("round"))?;
            cert.verify(&w, &set).map_err(stage("round"))?;
            Ok((
                json!({ "members": set.members(), "certificate": cert }),
                None,
            ))
        }
        Command::Intersect {
            a,
            b,
            eps,
            seed,
            max_draws,
        } => {
            let a = read_set(&a)?;
            let b = read_set(&b)?;
            let sample =
                sample_intersection(&a, &b, eps, max_draws, seed).map_err(stage("intersect"))?;
            Ok((serde_json::to_value(sample)?, None))
        }
        Command::TwoInterval { p, theta } => {
            let p = PrimeModulus::new(p)?;
            let t = two_interval_set(p, theta).map_err(stage("two_interval"))?;
            Ok((serde_json::to_value(t)?, None))
        }
        Command::Improve { set, config } => {
            let set = read_set(&set)?;
            let params = parse_improve_params(&read(&config)?)?;
            let (_, report) = improve_critical_candidate(&set, &params)?;
            Ok((serde_json::to_value(report)?, None))
        }
        Command::Search {
            p,
            s,
            method,
            seed,
            cap,
        } => {
            let p = PrimeModulus::new(p)?;
            let result = match method {
                SearchKind::Exhaustive => exhaustive_critical(p, s, cap)?,
                SearchKind::Anneal => {
                    let seed =
                        seed.ok_or_else(|| Error::InvalidArgument("seed required".into()))?;
                    anneal_critical(p, s, &Schedule::for_modulus(p.get()), seed)?
                }
            };
            Ok((serde_json::to_value(result)?, None))
        }
        Command::Varnavides { p, densities, seed } => {
            let p = PrimeModulus::new(p)?;
            let rows = varnavides_estimate(p, &densities, seed, None)?;
            let csv = varnavides_csv(&rows);
            Ok((serde_json::to_value(rows)?, Some(csv)))
        }
        Command::Experiment { config } => {
            let config = ExperimentConfig::parse(&read(&config)?)?;
            let report = run_theorem_experiment(&config)?;
            Ok((serde_json::to_value(report)?, None))
        }
    }
}

fn stage(name: &'static str) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        e if e.is_validation() => e,
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage: name.to_string(),
            source: Box::new(e),
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
    };
    let result = configure_threads()
        .and_then(|()| run(cli.command))
        .and_then(|(value, table)| emit(&value, table.as_deref(), format, cli.out.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
