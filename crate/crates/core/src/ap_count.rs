//! Exact and spectral counting of three-term progressions.
//!
//! Counting convention: ordered pairs `(n, m)` in `[0, p-1]^2` with
//! `n, n+m, n+2m` all in the set, `m = 0` included. So the trivial part is
//! always `|S|` and the full set has `p^2` progressions.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fourier::{dft_set, Spectrum};
use crate::zpz::{window, ResidueSet};

/// Absolute tolerance on the imaginary residue of the spectral count.
pub const SPECTRAL_IMAG_TOL: f64 = 1e-6;

/// Below this modulus the naive kernel stays on one thread.
const PARALLEL_MIN_P: u64 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Ap3Count {
    pub total: u64,
    pub trivial: u64,
    pub nontrivial: u64,
}

fn count_for_difference(doubled: &[u64], words: &[u64], p: usize, m: usize) -> u64 {
    let tail = p % 64;
    let last = words.len() - 1;
    let m2 = (2 * m) % p;
    words
        .iter()
        .enumerate()
        .map(|(wi, &w)| {
            let base = wi * 64;
            let mut x = w & window(doubled, base + m) & window(doubled, base + m2);
            if wi == last && tail != 0 {
                x &= (1u64 << tail) - 1;
            }
            x.count_ones() as u64
        })
        .sum()
}

/// Exact count via rotate-AND-popcount, one difference `m` at a time.
pub fn count_3aps_naive(set: &ResidueSet) -> Ap3Count {
    let p = set.modulus().size();
    let trivial = set.len() as u64;
    if set.is_empty() {
        return Ap3Count {
            total: 0,
            trivial: 0,
            nontrivial: 0,
        };
    }
    let doubled = set.doubled_words();
    let words = set.words();
    let nontrivial: u64 = if set.p() >= PARALLEL_MIN_P {
        (1..p)
            .into_par_iter()
            .map(|m| count_for_difference(&doubled, words, p, m))
            .sum()
    } else {
        (1..p)
            .map(|m| count_for_difference(&doubled, words, p, m))
            .sum()
    };
    Ap3Count {
        total: trivial + nontrivial,
        trivial,
        nontrivial,
    }
}

/// `(1/p) sum_a F(a)^2 F(-2a)`, with its imaginary residue kept visible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectralCount {
    pub real: f64,
    pub imag: f64,
}

pub fn spectral_sum(spectrum: &Spectrum) -> Complex64 {
    let p = spectrum.modulus();
    let n = p.size();
    let mut acc = Complex64::new(0.0, 0.0);
    for a in 0..n {
        let c = spectrum.coeffs()[a];
        acc += c * c * spectrum.coeffs()[p.neg(p.mul(2, a as u64)) as usize];
    }
    acc
}

/// Spectral form of the count. Errors if the imaginary residue exceeds
/// [`SPECTRAL_IMAG_TOL`] instead of dropping it.
pub fn count_3aps_spectral(set: &ResidueSet) -> Result<SpectralCount> {
    count_from_spectrum(&dft_set(set))
}

pub fn count_from_spectrum(spectrum: &Spectrum) -> Result<SpectralCount> {
    let total = spectral_sum(spectrum) / spectrum.modulus().get() as f64;
    let out = SpectralCount {
        real: total.re,
        imag: total.im,
    };
    if out.imag.is_nan() || out.imag.abs() >= SPECTRAL_IMAG_TOL {
        return Err(Error::Consistency(format!(
            "spectral count has imaginary residue {:e} (real part {})",
            out.imag, out.real
        )));
    }
    Ok(out)
}

fn ser_complex<S: Serializer>(c: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [c.re, c.im].serialize(s)
}

/// Frequencies split by whether `|F(-2a)|` exceeds a threshold.
#[derive(Clone, Debug, Serialize)]
pub struct SpectrumSplit {
    pub threshold: f64,
    /// The `a` with `|F(-2a)| > threshold`, ascending.
    pub large_freqs: Vec<u64>,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(serialize_with = "ser_complex")]
    pub sigma1: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub sigma2: Complex64,
}

impl SpectrumSplit {
    /// `M * T^2 <= p * |S|`, with a relative slack for rounding.
    pub fn parseval_bound_holds(&self, p: u64, set_len: usize) -> bool {
        let lhs = self.m as f64 * self.threshold * self.threshold;
        let rhs = p as f64 * set_len as f64;
        lhs <= rhs * (1.0 + 1e-9)
    }
}

pub fn split_spectrum(set: &ResidueSet, threshold: f64) -> Result<SpectrumSplit> {
    split_from_spectrum(&dft_set(set), threshold)
}

pub fn split_from_spectrum(spectrum: &Spectrum, threshold: f64) -> Result<SpectrumSplit> {
    if !threshold.is_finite() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "spectrum threshold must be positive, got {threshold}"
        )));
    }
    let p = spectrum.modulus();
    let mut large = Vec::new();
    let mut sigma1 = Complex64::new(0.0, 0.0);
    let mut sigma2 = Complex64::new(0.0, 0.0);
    for a in 0..p.get() {
        let c = spectrum.coeffs()[a as usize];
        let d = spectrum.coeffs()[p.neg(p.mul(2, a)) as usize];
        let term = c * c * d;
        if d.norm() > threshold {
            large.push(a);
            sigma1 += term;
        } else {
            sigma2 += term;
        }
    }
    Ok(SpectrumSplit {
        threshold,
        m: large.len(),
        large_freqs: large,
        sigma1,
        sigma2,
    })
}

/// `p ln ln p / sqrt(ln p)`, the asymptotic large-spectrum threshold.
pub fn asymptotic_threshold(p: u64) -> f64 {
    let l = (p as f64).ln();
    p as f64 * l.ln() / l.sqrt()
}

/// Returns `(count(S), count(complement))` after checking
/// `count(S) = p^2 - 3|C|p + 3|C|^2 - count(C)` exactly, `C` the complement.
pub fn complement_identity_check(set: &ResidueSet) -> Result<(u64, u64)> {
    let comp = set.complement();
    let cs = count_3aps_naive(set).total;
    let cc = count_3aps_naive(&comp).total;
    let p = set.p() as i128;
    let c = comp.len() as i128;
    let rhs = p * p - 3 * c * p + 3 * c * c - cc as i128;
    if rhs != cs as i128 {
        return Err(Error::Consistency(format!(
            "inclusion-exclusion identity broken: count(S) = {cs}, rhs = {rhs}"
        )));
    }
    Ok((cs, cc))
}
