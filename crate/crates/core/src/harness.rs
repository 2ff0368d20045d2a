//! Experiment orchestration, configs and output formats for the CLI.
//!
//! No stage reads system entropy: every stochastic step takes its seed from
//! the config, and a config without a seed is rejected.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ap_count::{asymptotic_threshold, count_3aps_naive, split_spectrum};
use crate::bohr::{
    bohr_element, convolve, extract_ap_from_convolution, spectrum_flatness, BohrSpec,
    SmoothingProgression,
};
use crate::constructions::{ImproveParams, PipelineSeeds};
use crate::critical::exhaustive_critical;
use crate::error::{Error, Result};
use crate::report::ExperimentReport;
use crate::zpz::{longest_ap, PrimeModulus, ResidueSet};

/// `size` residues drawn uniformly without replacement.
pub fn random_set(p: PrimeModulus, size: usize, seed: u64) -> Result<ResidueSet> {
    if size > p.size() {
        return Err(Error::InvalidArgument(format!(
            "cannot draw {size} residues mod {p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, p.size(), size);
    Ok(ResidueSet::from_residues(
        p,
        picks.into_iter().map(|x| x as u64),
    ))
}

fn require_seed(v: &Value) -> Result<u64> {
    match v.get("seed") {
        Some(s) => s
            .as_u64()
            .ok_or_else(|| Error::InvalidArgument("seed must be an unsigned integer".into())),
        None => Err(Error::InvalidArgument("seed required".into())),
    }
}

/// Parses improvement parameters. Seeds come either as an explicit
/// `seeds` object or a single `seed` expanded to `seed, seed+1, seed+2`.
pub fn parse_improve_params(text: &str) -> Result<ImproveParams> {
    let mut v: Value = serde_json::from_str(text)?;
    if v.get("seeds").is_none() {
        let seed = require_seed(&v)?;
        v["seeds"] = serde_json::to_value(PipelineSeeds::from_base(seed))?;
    }
    if let Some(map) = v.as_object_mut() {
        map.remove("seed");
    }
    Ok(serde_json::from_value(v)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSource {
    /// Explicit members.
    Members(Vec<i64>),
    /// Uniform random set of size `round(density * p)`.
    Density(f64),
    /// Lexicographically first exhaustive minimizer of this size.
    MinimizerSize(usize),
}

fn default_comparison_samples() -> u64 {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub p: u64,
    pub source: SetSource,
    /// Large-spectrum threshold; the asymptotic formula when absent.
    #[serde(default)]
    pub threshold: Option<f64>,
    pub bohr_eps: f64,
    pub length: u64,
    pub extract_eps: f64,
    #[serde(default = "default_comparison_samples")]
    pub comparison_samples: u64,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        require_seed(&v)?;
        Ok(serde_json::from_value(v)?)
    }
}

/// Runs split, Bohr search, smoothing and extraction on one set and reports
/// how dense the best translate of `N` is and the progression it yields.
pub fn run_theorem_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = PrimeModulus::new(config.p)?;
    let mut report = ExperimentReport::new("experiment", serde_json::to_value(config)?);

    let t = Instant::now();
    let set = match &config.source {
        SetSource::Members(m) => ResidueSet::new(p, m.iter().copied()),
        SetSource::Density(d) => {
            if !(*d > 0.0 && *d <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "density {d} outside (0, 1]"
                )));
            }
            let size = ((d * config.p as f64).round() as usize).clamp(1, p.size());
            random_set(p, size, config.seed)?
        }
        SetSource::MinimizerSize(s) => exhaustive_critical(p, *s, 1)
            .map_err(Error::at_stage("input"))?
            .minimizers
            .remove(0),
    };
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "experiment needs a nonempty set".into(),
        ));
    }
    let counts = count_3aps_naive(&set);
    let own_ap = longest_ap(&set);
    report.push(
        "input",
        json!({ "source": config.source, "seed": config.seed }),
        json!({ "set": set, "size": set.len(), "counts": counts, "longest_ap": own_ap }),
        Value::Null,
        t,
    );

    let t = Instant::now();
    let threshold = config
        .threshold
        .unwrap_or_else(|| asymptotic_threshold(config.p));
    let split = split_spectrum(&set, threshold).map_err(Error::at_stage("split_spectrum"))?;
    report.push(
        "split_spectrum",
        json!({ "threshold": threshold }),
        serde_json::to_value(&split)?,
        json!({ "parseval_bound": split.parseval_bound_holds(config.p, set.len()) }),
        t,
    );

    let t = Instant::now();
    let spec = BohrSpec::new(p, split.large_freqs.clone(), config.bohr_eps)
        .map_err(Error::at_stage("bohr_element"))?;
    let n0 = bohr_element(&spec).map_err(Error::at_stage("bohr_element"))?;
    report.push(
        "bohr_element",
        json!({ "freqs": spec.freqs, "eps": spec.eps }),
        json!({ "n0": n0 }),
        json!({ "pigeonhole_guaranteed": spec.pigeonhole_guaranteed() }),
        t,
    );

    let t = Instant::now();
    let n = SmoothingProgression::new(p, n0, config.length).map_err(Error::at_stage("convolve"))?;
    let conv = convolve(&set, &n).map_err(Error::at_stage("convolve"))?;
    let (argmax_m, max_conv) = conv.argmax();
    let hits = (max_conv * config.length as f64).round() as u64;
    report.push(
        "convolve",
        json!({ "n0": n0, "length": config.length }),
        json!({
            "max_convolution": max_conv,
            "argmax_m": argmax_m,
            "dense_translate": { "hits": hits, "of": config.length },
        }),
        json!({ "flatness": spectrum_flatness(&n, &split.large_freqs) }),
        t,
    );

    let mut extracted = None;
    if max_conv > 1.0 - config.extract_eps
        && config.extract_eps > 1.0 / config.length as f64
        && config.extract_eps < 1.0
    {
        let t = Instant::now();
        let run = extract_ap_from_convolution(&set, &n, argmax_m, config.extract_eps)
            .map_err(Error::at_stage("extract_ap"))?;
        report.push(
            "extract_ap",
            json!({ "m": argmax_m, "eps": config.extract_eps }),
            json!({ "run": run }),
            json!({ "contained": run.is_contained_in(&set) }),
            t,
        );
        extracted = Some(run);
    }

    if matches!(config.source, SetSource::MinimizerSize(_)) && config.comparison_samples > 0 {
        let t = Instant::now();
        let lengths: Vec<u64> = (0..config.comparison_samples)
            .map(|i| {
                random_set(p, set.len(), config.seed.wrapping_add(1 + i))
                    .map(|r| longest_ap(&r).length)
            })
            .collect::<Result<_>>()?;
        let mean = lengths.iter().sum::<u64>() as f64 / lengths.len() as f64;
        report.push(
            "random_comparison",
            json!({ "samples": config.comparison_samples, "size": set.len() }),
            json!({
                "minimizer_longest_ap": own_ap.length,
                "random_mean_longest_ap": mean,
                "random_max_longest_ap": lengths.iter().max(),
                "random_min_longest_ap": lengths.iter().min(),
            }),
            Value::Null,
            t,
        );
    }

    report.verdict = match extracted {
        Some(run) => format!("progression of length {} extracted", run.length),
        None => format!(
            "no translate above 1 - {} (max convolution {max_conv})",
            config.extract_eps
        ),
    };
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn flatten_into(prefix: &str, v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_into(&path, child, out);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                flatten_into(&format!("{prefix}.{i}"), child, out);
            }
        }
        Value::String(s) => {
            let _ = writeln!(out, "{},{}", csv_field(prefix), csv_field(s));
        }
        leaf => {
            let _ = writeln!(out, "{},{}", csv_field(prefix), leaf);
        }
    }
}

/// CSV fallback for nested JSON: one `path,value` row per leaf, objects
/// joined with `.`, array items by index, in serialization order.
pub fn flatten_csv(v: &Value) -> String {
    let mut out = String::from("path,value\n");
    flatten_into("", v, &mut out);
    out
}

/// Renders `value` (or `table`, for CSV when the command has a fixed table
/// schema) and writes it to `path`, or stdout when absent.
pub fn emit(value: &Value, table: Option<&str>, format: Format, path: Option<&Path>) -> Result<()> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Format::Csv => match table {
            Some(t) => t.to_string(),
            None => flatten_csv(value),
        },
    };
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
