//! Bohr neighbourhoods, the smoothing progression `N`, the convolution
//! `S * N`, and extraction of a progression from a dense translate of `N`.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact;
use crate::fourier::{dft_real, dft_set, inverse_dft_with, Method};
use crate::zpz::{ApRun, PrimeModulus, ResidueSet, WeightFunction};

/// Frequencies `a_1..a_k` and a radius `eps`; `n` is in the neighbourhood
/// when `||a_i n / p|| < eps` for every `i`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BohrSpec {
    pub modulus: PrimeModulus,
    pub freqs: Vec<u64>,
    pub eps: f64,
}

impl BohrSpec {
    pub fn new(modulus: PrimeModulus, freqs: Vec<u64>, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "Bohr radius must lie in (0, 1/2), got {eps}"
            )));
        }
        let freqs = freqs.into_iter().map(|a| a % modulus.get()).collect();
        Ok(BohrSpec {
            modulus,
            freqs,
            eps,
        })
    }

    /// `ceil(1/eps)^k < p`: the pigeonhole argument then guarantees a witness.
    pub fn pigeonhole_guaranteed(&self) -> bool {
        let q = exact::ceil_recip(self.eps) as u128;
        u32::try_from(self.freqs.len())
            .ok()
            .and_then(|k| q.checked_pow(k))
            .is_some_and(|cells| cells < self.modulus.get() as u128)
    }

    /// Checks membership of `n` with exact integer arithmetic.
    pub fn contains(&self, n: u64) -> bool {
        let p = self.modulus;
        let max_dist = exact::largest_below(self.eps, p.get());
        self.freqs.iter().all(|&a| {
            let x = p.mul(a, n);
            (x.min(p.get() - x) as i128) <= max_dist
        })
    }
}

/// `||x / p||` for a residue `x`.
pub fn circle_distance(x: u64, p: PrimeModulus) -> f64 {
    let x = x % p.get();
    x.min(p.get() - x) as f64 / p.get() as f64
}

/// Smallest `n` in `[1, p-1]` inside the Bohr neighbourhood, by exhaustive
/// scan.
pub fn bohr_element(spec: &BohrSpec) -> Result<u64> {
    let p = spec.modulus;
    let max_dist = exact::largest_below(spec.eps, p.get());
    (1..p.get())
        .find(|&n| {
            spec.freqs.iter().all(|&a| {
                let x = p.mul(a, n);
                (x.min(p.get() - x) as i128) <= max_dist
            })
        })
        .ok_or(Error::NotFound)
}

/// Dirichlet's box argument made constructive: split the torus into
/// `ceil(1/eps)^k` boxes, walk `y = 0, 1, ...` until two points share a box,
/// and return `|y1 - y2|`. Not necessarily the smallest witness.
pub fn pigeonhole_element(spec: &BohrSpec) -> Option<u64> {
    let p = spec.modulus;
    let q = exact::ceil_recip(spec.eps) as u128;
    let mut seen: HashMap<Vec<u64>, u64> = HashMap::new();
    for y in 0..p.get() {
        let cell: Vec<u64> = spec
            .freqs
            .iter()
            .map(|&a| (p.mul(a, y) as u128 * q / p.get() as u128) as u64)
            .collect();
        if let Some(&prev) = seen.get(&cell) {
            let n = y - prev;
            debug_assert!(spec.contains(n));
            return Some(n);
        }
        seen.insert(cell, y);
    }
    None
}

/// `eps = ln(p)^{-2L}` and `|N| = ceil(ln(p)^L)`, the coupled choice used
/// in the asymptotic argument.
pub fn asymptotic_parameters(p: u64, l: f64) -> (f64, u64) {
    let lp = (p as f64).ln();
    (lp.powf(-2.0 * l), lp.powf(l).ceil() as u64)
}

/// `N = { j * n0 mod p : 0 <= j < length }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SmoothingProgression {
    pub modulus: PrimeModulus,
    pub n0: u64,
    pub length: u64,
}

impl SmoothingProgression {
    pub fn new(modulus: PrimeModulus, n0: u64, length: u64) -> Result<Self> {
        let n0 = n0 % modulus.get();
        if n0 == 0 {
            return Err(Error::InvalidArgument("n0 must be nonzero mod p".into()));
        }
        if length == 0 || length > modulus.get() {
            return Err(Error::InvalidArgument(format!(
                "progression length {length} outside [1, {modulus}]"
            )));
        }
        Ok(SmoothingProgression {
            modulus,
            n0,
            length,
        })
    }

    pub fn elements(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.length).map(|j| self.modulus.mul(j, self.n0))
    }

    pub fn to_set(&self) -> ResidueSet {
        ResidueSet::from_residues(self.modulus, self.elements())
    }

    /// `N^(a) = (1/|N|) sum_{n in N} e^{2 pi i a n / p}`.
    pub fn transform_at(&self, a: u64) -> Complex64 {
        let p = self.modulus;
        let step = p.mul(a, self.n0);
        let mut acc = Complex64::new(0.0, 0.0);
        let mut x = 0;
        for _ in 0..self.length {
            acc += Complex64::from_polar(1.0, 2.0 * PI * x as f64 / p.get() as f64);
            x = p.add(x, step);
        }
        acc / self.length as f64
    }
}

fn check_modulus(set: &ResidueSet, n: &SmoothingProgression) -> Result<()> {
    if set.modulus() != n.modulus {
        return Err(Error::ModulusMismatch(set.p(), n.modulus.get()));
    }
    Ok(())
}

/// Number of `j < |N|` with `m - j n0` in `S`.
fn translate_hits(set: &ResidueSet, n: &SmoothingProgression, m: u64) -> u64 {
    let p = n.modulus;
    n.elements().filter(|&e| set.contains(p.sub(m, e))).count() as u64
}

/// `(S * N)(m) = (1/|N|) |{ n in N : m - n in S }|`, evaluated directly.
pub fn convolve(set: &ResidueSet, n: &SmoothingProgression) -> Result<WeightFunction> {
    check_modulus(set, n)?;
    let p = set.modulus();
    let values = (0..p.get())
        .map(|m| translate_hits(set, n, m) as f64 / n.length as f64)
        .collect();
    WeightFunction::new(p, values)
}

/// The same convolution through the transform: inverse of `S^ * N^`.
pub fn convolve_spectral(set: &ResidueSet, n: &SmoothingProgression, method: Method) -> Vec<f64> {
    let p = set.modulus();
    let mut scaled = vec![0.0; p.size()];
    for e in n.elements() {
        scaled[e as usize] = 1.0 / n.length as f64;
    }
    let s_hat = dft_set(set);
    let n_hat = dft_real(p, &scaled, method);
    let product: Vec<Complex64> = s_hat
        .coeffs()
        .iter()
        .zip(n_hat.coeffs())
        .map(|(a, b)| a * b)
        .collect();
    inverse_dft_with(&crate::fourier::Spectrum::from_coeffs(p, product), method)
}

/// Longest run of consecutive members among `m, m-n0, ..., m-(|N|-1)n0`.
///
/// Requires `(S*N)(m) > 1 - eps`. The run is returned as an ascending
/// progression with step `n0`.
pub fn extract_ap_from_convolution(
    set: &ResidueSet,
    n: &SmoothingProgression,
    m: u64,
    eps: f64,
) -> Result<ApRun> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "extraction eps must lie in (0, 1), got {eps}"
        )));
    }
    check_modulus(set, n)?;
    let p = set.modulus();
    let m = m % p.get();
    let hits = translate_hits(set, n, m);
    // (S*N)(m) > 1 - eps  <=>  (|N| - hits) / |N| < eps
    if !exact::ratio_lt(n.length - hits, n.length, eps) {
        return Err(Error::Precondition(format!(
            "(S*N)({m}) = {}/{} is not above 1 - {eps}",
            hits, n.length
        )));
    }
    let mut best: Option<(u64, u64)> = None; // (length, last j)
    let mut run = 0u64;
    for j in 0..n.length {
        let r = p.sub(m, p.mul(j, n.n0));
        if set.contains(r) {
            run += 1;
            if best.is_none_or(|(len, _)| run > len) {
                best = Some((run, j));
            }
        } else {
            run = 0;
        }
    }
    let Some((length, last_j)) = best else {
        return Ok(ApRun::EMPTY);
    };
    let out = ApRun {
        start: p.sub(m, p.mul(last_j, n.n0)),
        step: n.n0,
        length,
    };
    if !out.is_contained_in(set) {
        return Err(Error::Consistency(format!(
            "extracted run {out:?} is not contained in the set"
        )));
    }
    Ok(out)
}

/// What pigeonhole actually guarantees: with `g` misses among `len`
/// slots, some run of hits has length at least `ceil((len - g) / (g + 1))`.
pub fn pigeonhole_run_bound(len: u64, misses: u64) -> u64 {
    (len - misses).div_ceil(misses + 1)
}

/// `max_a max(|N^(a) - 1|, |N^(-2a) - 1|)` over the given frequencies.
pub fn spectrum_flatness(n: &SmoothingProgression, freqs: &[u64]) -> f64 {
    let p = n.modulus;
    freqs
        .iter()
        .map(|&a| {
            let d1 = (n.transform_at(a) - 1.0).norm();
            let d2 = (n.transform_at(p.neg(p.mul(2, a))) - 1.0).norm();
            d1.max(d2)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    fn scan_oracle(p: u64, freqs: &[u64], eps: f64) -> Option<u64> {
        (1..p).find(|&n| {
            freqs.iter().all(|&a| {
                let x = (a * n) % p;
                let d = x.min(p - x) as f64 / p as f64;
                d < eps
            })
        })
    }

    #[test]
    fn bohr_examples() {
        let s = BohrSpec::new(pm(11), vec![1], 0.1).unwrap();
        assert_eq!(bohr_element(&s).unwrap(), 1);
        assert_eq!(scan_oracle(11, &[1], 0.1), Some(1));
        let s = BohrSpec::new(pm(13), vec![5], 0.1).unwrap();
        assert_eq!(bohr_element(&s).unwrap(), 5);
        assert_eq!(scan_oracle(13, &[5], 0.1), Some(5));
        let s = BohrSpec::new(pm(13), vec![], 0.1).unwrap();
        assert_eq!(bohr_element(&s).unwrap(), 1);
    }

    #[test]
    fn bohr_not_found() {
        // p=7, eps just above 0: only n with a*n = 0 would do
        let s = BohrSpec::new(pm(7), vec![1], 0.01).unwrap();
        assert!(matches!(bohr_element(&s), Err(Error::NotFound)));
        assert!(BohrSpec::new(pm(7), vec![1], 0.5).is_err());
        assert!(BohrSpec::new(pm(7), vec![1], 0.0).is_err());
    }

    #[test]
    fn pigeonhole_route_finds_members() {
        let p = pm(1009);
        let s = BohrSpec::new(p, vec![17, 400, 999], 0.2).unwrap();
        assert!(s.pigeonhole_guaranteed());
        let n = pigeonhole_element(&s).unwrap();
        assert!(s.contains(n));
        assert!(bohr_element(&s).unwrap() <= n);
    }

    #[test]
    fn convolve_examples() {
        let p = pm(7);
        let n = SmoothingProgression::new(p, 1, 2).unwrap();
        let s = ResidueSet::new(p, [0, 1, 2]);
        let w = convolve(&s, &n).unwrap();
        // sliding window: w(m) = (S(m) + S(m-1)) / 2
        let window: Vec<f64> = (0..7u64)
            .map(|m| {
                let hits = [m, (m + 6) % 7].iter().filter(|&&r| s.contains(r)).count();
                hits as f64 / 2.0
            })
            .collect();
        assert_eq!(w.values(), window.as_slice());
        assert_eq!(w.values(), &[0.5, 1.0, 1.0, 0.5, 0.0, 0.0, 0.0]);
        assert_eq!(w.sum(), 3.0);
        let w = convolve(&ResidueSet::full(p), &n).unwrap();
        assert!(w.values().iter().all(|&v| v == 1.0));
        let w = convolve(&ResidueSet::empty(p), &n).unwrap();
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spectral_convolution_agrees() {
        let p = pm(101);
        let s = ResidueSet::from_residues(p, (0..101).filter(|x| x % 3 != 1));
        let n = SmoothingProgression::new(p, 7, 9).unwrap();
        let direct = convolve(&s, &n).unwrap();
        for method in [Method::Direct, Method::ChirpZ] {
            let spectral = convolve_spectral(&s, &n, method);
            for (a, b) in direct.values().iter().zip(&spectral) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extraction_examples() {
        let p = pm(101);
        let n = SmoothingProgression::new(p, 3, 20).unwrap();
        let m = 50;
        let translate: Vec<u64> = (0..20).map(|j| p.sub(m, p.mul(j, 3))).collect();

        let full = ResidueSet::from_residues(p, translate.iter().copied());
        assert_eq!(
            extract_ap_from_convolution(&full, &n, m, 0.1)
                .unwrap()
                .length,
            20
        );

        let missing_last = ResidueSet::from_residues(p, translate[..19].iter().copied());
        let run = extract_ap_from_convolution(&missing_last, &n, m, 0.1).unwrap();
        assert_eq!(run.length, 19);
        assert!(run.is_contained_in(&missing_last));

        let mut holed = translate.clone();
        holed.remove(10);
        let holed = ResidueSet::from_residues(p, holed);
        let run = extract_ap_from_convolution(&holed, &n, m, 0.5).unwrap();
        assert!(run.length >= 10);
        assert!(run.is_contained_in(&holed));
    }

    #[test]
    fn extraction_checks_precondition() {
        let p = pm(101);
        let n = SmoothingProgression::new(p, 3, 20).unwrap();
        let s = ResidueSet::new(p, [50]);
        assert!(matches!(
            extract_ap_from_convolution(&s, &n, 50, 0.1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn flatness_examples() {
        let p = pm(101);
        let n = SmoothingProgression::new(p, 5, 4).unwrap();
        assert!(spectrum_flatness(&n, &[0]) < 1e-12);
        let single = SmoothingProgression::new(p, 5, 1).unwrap();
        assert!(spectrum_flatness(&single, &[1, 2, 50]) < 1e-12);
    }

    #[test]
    fn pigeonhole_bound_values() {
        assert_eq!(pigeonhole_run_bound(20, 0), 20);
        assert_eq!(pigeonhole_run_bound(20, 1), 10);
        assert_eq!(pigeonhole_run_bound(4, 1), 2);
    }

    #[test]
    fn asymptotic_parameter_helper() {
        let (eps, len) = asymptotic_parameters(1009, 1.0);
        let l = 1009f64.ln();
        assert_eq!(eps, l.powi(-2));
        assert_eq!(len, l.ceil() as u64);
    }
}
