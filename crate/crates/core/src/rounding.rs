//! Randomized rounding of a weight function to a 0/1 set whose spectrum
//! stays within `c * log(p) * sqrt(p)` of the weights' spectrum at every
//! frequency.
//!
//! Sampling uses ChaCha8 seeded with `seed + attempt` (wrapping), attempts
//! counted from zero. Each residue `m` is included when a uniform draw in
//! `[0, 1)` falls below `w(m)`, in residue order.

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::{dft_complex, dft_set, dft_weights, Method};
use crate::zpz::{ResidueSet, WeightFunction};

pub const DEFAULT_MAX_ATTEMPTS: u32 = 64;

/// Offset mixed into the seed of the cardinality repair step.
const ADJUST_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// `4 exp(-r t^2 / 2)`.
pub fn hoeffding_bound(r: u64, t: f64) -> Result<f64> {
    if r == 0 || t.is_nan() || t <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "hoeffding bound needs r >= 1 and t > 0 (got r={r}, t={t})"
        )));
    }
    Ok(4.0 * (-(r as f64) * t * t / 2.0).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RoundingOptions {
    pub bound_factor: f64,
    pub max_attempts: u32,
    /// Base of the logarithm in the acceptance bound; `e` by default.
    pub log_base: f64,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions {
            bound_factor: 1.0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            log_base: std::f64::consts::E,
        }
    }
}

impl RoundingOptions {
    pub fn with_bound_factor(bound_factor: f64) -> Self {
        RoundingOptions {
            bound_factor,
            ..Default::default()
        }
    }

    /// `bound_factor * log(p) * sqrt(p)`.
    pub fn bound(&self, p: u64) -> f64 {
        let p = p as f64;
        self.bound_factor * p.log(self.log_base) * p.sqrt()
    }

    fn validate(&self) -> Result<()> {
        if !self.bound_factor.is_finite() || self.bound_factor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bound factor must be positive, got {}",
                self.bound_factor
            )));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidArgument("max_attempts must be >= 1".into()));
        }
        if self.log_base.is_nan() || self.log_base <= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "log base must exceed 1, got {}",
                self.log_base
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundingCertificate {
    /// `max_a |u^(a) - w^(a)|` for the certified set.
    pub max_spectral_deviation: f64,
    pub bound: f64,
    pub attempts: u32,
    pub seed: u64,
    /// `|u| - sum w`, in `[0, 1)`, once the cardinality has been repaired.
    pub delta: Option<f64>,
    /// Membership bits flipped by the cardinality repair.
    pub flips: u64,
}

impl RoundingCertificate {
    /// Recomputes the deviation from two separate transforms and compares.
    pub fn verify(&self, w: &WeightFunction, set: &ResidueSet) -> Result<()> {
        let got = spectral_deviation(w, set);
        if (got - self.max_spectral_deviation).abs() > 1e-9 {
            return Err(Error::Consistency(format!(
                "certificate claims deviation {} but recomputation gives {got}",
                self.max_spectral_deviation
            )));
        }
        Ok(())
    }
}

/// `max_a |u^(a) - w^(a)|`, as the difference of two transforms.
pub fn spectral_deviation(w: &WeightFunction, set: &ResidueSet) -> f64 {
    dft_set(set).max_abs_diff(&dft_weights(w))
}

/// Same quantity through a single transform of `u - w` (linearity).
fn deviation_of_difference(w: &WeightFunction, set: &ResidueSet) -> f64 {
    let diff: Vec<Complex64> = w
        .values()
        .iter()
        .enumerate()
        .map(|(m, &v)| {
            let u = if set.contains(m as u64) { 1.0 } else { 0.0 };
            Complex64::new(u - v, 0.0)
        })
        .collect();
    dft_complex(w.modulus(), &diff, Method::default())
        .coeffs()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

fn sample(w: &WeightFunction, seed: u64) -> ResidueSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = w
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| rng.gen::<f64>() < v)
        .map(|(m, _)| m as u64);
    ResidueSet::from_residues(w.modulus(), members)
}

/// Samples independent Bernoulli(w(m)) memberships until every Fourier
/// coefficient lies within the bound of `w^`.
pub fn round_weights(
    w: &WeightFunction,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<(ResidueSet, RoundingCertificate)> {
    opts.validate()?;
    let bound = opts.bound(w.modulus().get());
    let mut best = f64::INFINITY;
    for attempt in 0..opts.max_attempts {
        let set = sample(w, seed.wrapping_add(attempt as u64));
        let dev = deviation_of_difference(w, &set);
        best = best.min(dev);
        if dev < bound {
            let cert = RoundingCertificate {
                max_spectral_deviation: dev,
                bound,
                attempts: attempt + 1,
                seed,
                delta: None,
                flips: 0,
            };
            return Ok((set, cert));
        }
    }
    Err(Error::RetryExhausted {
        attempts: opts.max_attempts,
        best_deviation: best,
        bound,
    })
}

/// `4 * ceil(ln(p) * sqrt(p))`: the most flips the repair step will make.
pub fn adjustment_cap(p: u64) -> u64 {
    let p = p as f64;
    4 * (p.ln() * p.sqrt()).ceil() as u64
}

/// Flips exactly `||S| - target|` memberships, chosen uniformly among the
/// eligible residues (members when shrinking, non-members when growing).
pub fn adjust_cardinality(
    set: &ResidueSet,
    w: &WeightFunction,
    target: u64,
    seed: u64,
) -> Result<ResidueSet> {
    let p = set.modulus();
    if w.modulus() != p {
        return Err(Error::ModulusMismatch(p.get(), w.modulus().get()));
    }
    if target > p.get() {
        return Err(Error::Precondition(format!(
            "target cardinality {target} exceeds p = {p}"
        )));
    }
    let len = set.len() as u64;
    let need = len.abs_diff(target);
    let cap = adjustment_cap(p.get());
    if need > cap {
        return Err(Error::Precondition(format!(
            "{need} flips needed to reach {target}, above the repair cap {cap}"
        )));
    }
    if need == 0 {
        return Ok(set.clone());
    }
    let eligible: Vec<u64> = if len > target {
        set.members()
    } else {
        set.complement().members()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks: Vec<u64> = index::sample(&mut rng, eligible.len(), need as usize)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    picks.sort_unstable();
    Ok(set.with_flipped(&picks))
}

/// Rounds, then repairs the cardinality to `ceil(sum w)` so that
/// `|u| = sum w + delta` with `0 <= delta < 1`. The certificate describes
/// the repaired set.
pub fn round_to_cardinality(
    w: &WeightFunction,
    seed: u64,
    opts: &RoundingOptions,
) -> Result<(ResidueSet, RoundingCertificate)> {
    let (raw, mut cert) = round_weights(w, seed, opts)?;
    let mass = w.sum();
    let target = (mass - 1e-9).ceil().max(0.0) as u64;
    let adjusted = adjust_cardinality(&raw, w, target, seed ^ ADJUST_SEED_SALT)?;
    cert.flips = raw.len().abs_diff(adjusted.len()) as u64;
    cert.delta = Some((target as f64 - mass).max(0.0));
    cert.max_spectral_deviation = deviation_of_difference(w, &adjusted);
    Ok((adjusted, cert))
}
