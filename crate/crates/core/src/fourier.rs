//! Discrete Fourier transform over Z/pZ.
//!
//! Convention: `F(a) = sum_n f(n) e^{2 pi i a n / p}` (positive exponent).
//! Two evaluation paths are kept side by side: a direct O(p^2) sum over a
//! twiddle table, and a chirp-z (Bluestein) transform that reduces the
//! prime-length DFT to a power-of-two circular convolution.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::zpz::{PrimeModulus, ResidueSet, WeightFunction};

/// Default modulus above which [`Method::Auto`] takes the chirp-z path.
pub const FAST_THRESHOLD: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    ChirpZ,
    /// Direct at or below the threshold, chirp-z above it.
    Auto {
        threshold: u64,
    },
}

impl Default for Method {
    fn default() -> Self {
        Method::Auto {
            threshold: FAST_THRESHOLD,
        }
    }
}

impl Method {
    fn resolve(self, p: u64) -> Method {
        match self {
            Method::Auto { threshold } if p > threshold => Method::ChirpZ,
            Method::Auto { .. } => Method::Direct,
            m => m,
        }
    }
}

/// DFT coefficients `coeffs[a]`, `0 <= a < p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    modulus: PrimeModulus,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn from_coeffs(modulus: PrimeModulus, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(coeffs.len(), modulus.size(), "spectrum length must equal p");
        Spectrum { modulus, coeffs }
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient at any integer frequency, reduced mod p.
    #[inline]
    pub fn at(&self, a: i64) -> Complex64 {
        self.coeffs[self.modulus.reduce(a) as usize]
    }

    /// `sum_a |F(a)|^2`
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// CSV dump with header `a,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,re,im\n");
        for (a, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{a},{},{}", c.re, c.im);
        }
        out
    }
}

/// `e^{2 pi i k / p}` for `k` in `0..p`.
fn twiddles(p: usize) -> Vec<Complex64> {
    (0..p)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / p as f64))
        .collect()
}

fn direct(input: &[Complex64]) -> Vec<Complex64> {
    let p = input.len();
    let tw = twiddles(p);
    (0..p)
        .map(|a| {
            let mut acc = Complex64::new(0.0, 0.0);
            let mut idx = 0usize;
            for x in input {
                if x.re != 0.0 || x.im != 0.0 {
                    acc += x * tw[idx];
                }
                idx += a;
                if idx >= p {
                    idx -= p;
                }
            }
            acc
        })
        .collect()
}

fn chirp_z(input: &[Complex64]) -> Vec<Complex64> {
    let p = input.len();
    let two_p = 2 * p as u128;
    // chirp[k] = e^{i pi k^2 / p}; k^2 reduced mod 2p keeps the angle small
    let chirp: Vec<Complex64> = (0..p)
        .map(|k| {
            let e = (k as u128 * k as u128) % two_p;
            Complex64::from_polar(1.0, PI * e as f64 / p as f64)
        })
        .collect();
    let len = (2 * p - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut u = vec![Complex64::new(0.0, 0.0); len];
    for (n, x) in input.iter().enumerate() {
        u[n] = x * chirp[n];
    }
    let mut v = vec![Complex64::new(0.0, 0.0); len];
    v[0] = chirp[0].conj();
    for k in 1..p {
        v[k] = chirp[k].conj();
        v[len - k] = chirp[k].conj();
    }
    fwd.process(&mut u);
    fwd.process(&mut v);
    for (a, b) in u.iter_mut().zip(&v) {
        *a *= b;
    }
    inv.process(&mut u);
    let scale = 1.0 / len as f64;
    (0..p).map(|a| chirp[a] * u[a] * scale).collect()
}

/// Forward transform of an arbitrary complex function on Z/pZ.
pub fn dft_complex(modulus: PrimeModulus, input: &[Complex64], method: Method) -> Spectrum {
    assert_eq!(input.len(), modulus.size());
    let coeffs = match method.resolve(modulus.get()) {
        Method::ChirpZ => chirp_z(input),
        _ => direct(input),
    };
    Spectrum { modulus, coeffs }
}

pub fn dft_real(modulus: PrimeModulus, values: &[f64], method: Method) -> Spectrum {
    let input: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft_complex(modulus, &input, method)
}

pub fn dft_set_with(set: &ResidueSet, method: Method) -> Spectrum {
    dft_real(set.modulus(), &set.indicator(), method)
}

pub fn dft_weights_with(w: &WeightFunction, method: Method) -> Spectrum {
    dft_real(w.modulus(), w.values(), method)
}

/// Transform of a set's indicator with the default method.
pub fn dft_set(set: &ResidueSet) -> Spectrum {
    dft_set_with(set, Method::default())
}

pub fn dft_weights(w: &WeightFunction) -> Spectrum {
    dft_weights_with(w, Method::default())
}

/// `f(n) = (1/p) sum_a F(a) e^{-2 pi i a n / p}`.
pub fn inverse_dft_complex(spectrum: &Spectrum, method: Method) -> Vec<Complex64> {
    let p = spectrum.modulus.size();
    let conj: Vec<Complex64> = spectrum.coeffs.iter().map(|c| c.conj()).collect();
    let fwd = dft_complex(spectrum.modulus, &conj, method);
    fwd.coeffs
        .into_iter()
        .map(|c| c.conj() / p as f64)
        .collect()
}

/// Real part of the inverse transform.
pub fn inverse_dft_with(spectrum: &Spectrum, method: Method) -> Vec<f64> {
    inverse_dft_complex(spectrum, method)
        .into_iter()
        .map(|c| c.re)
        .collect()
}

pub fn inverse_dft(spectrum: &Spectrum) -> Vec<f64> {
    inverse_dft_with(spectrum, Method::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx_eq::rel_close;

    mod approx_eq {
        pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
            (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
        }
    }

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    /// Straight from the definition, with no shared twiddle table.
    fn oracle(values: &[f64]) -> Vec<Complex64> {
        let p = values.len();
        (0..p)
            .map(|a| {
                values
                    .iter()
                    .enumerate()
                    .map(|(n, &v)| {
                        let ang = 2.0 * PI * ((a * n) % p) as f64 / p as f64;
                        Complex64::new(v * ang.cos(), v * ang.sin())
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn empty_and_full_sets() {
        for method in [Method::Direct, Method::ChirpZ] {
            let s = dft_set_with(&ResidueSet::empty(pm(5)), method);
            assert!(s.coeffs().iter().all(|c| c.norm() < 1e-12));
            let f = dft_set_with(&ResidueSet::full(pm(5)), method);
            assert!((f.coeffs()[0] - Complex64::new(5.0, 0.0)).norm() < 1e-12);
            assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn small_set_matches_definition() {
        let s = ResidueSet::new(pm(7), [0, 1, 2]);
        let spec = dft_set_with(&s, Method::Direct);
        let want = oracle(&s.indicator());
        for (got, w) in spec.coeffs().iter().zip(&want) {
            assert!((got - w).norm() < 1e-12);
        }
        assert!((spec.coeffs()[0].re - 3.0).abs() < 1e-12);
        assert!(rel_close(spec.energy(), 21.0, 1e-9));
        // coefficient 1 is 1 + z + z^2 with z = e^{2 pi i / 7}
        let z = Complex64::from_polar(1.0, 2.0 * PI / 7.0);
        assert!((spec.coeffs()[1] - (1.0 + z + z * z)).norm() < 1e-12);
    }

    #[test]
    fn chirp_z_matches_direct() {
        let p = pm(257);
        let values: Vec<f64> = (0..257).map(|i| ((i * 37 % 11) as f64) / 10.0).collect();
        let a = dft_real(p, &values, Method::Direct);
        let b = dft_real(p, &values, Method::ChirpZ);
        assert!(a.max_abs_diff(&b) < 1e-9);
    }

    #[test]
    fn auto_switches_at_threshold() {
        assert_eq!(Method::default().resolve(4093), Method::Direct);
        assert_eq!(Method::default().resolve(4099), Method::ChirpZ);
        assert_eq!(Method::Auto { threshold: 10 }.resolve(11), Method::ChirpZ);
    }

    #[test]
    fn round_trips() {
        let s = ResidueSet::new(pm(5), [0, 1]);
        let back = inverse_dft(&dft_set(&s));
        for (x, y) in back.iter().zip(s.indicator()) {
            assert!((x - y).abs() < 1e-12);
        }
        let zero = Spectrum::from_coeffs(pm(11), vec![Complex64::new(0.0, 0.0); 11]);
        assert!(inverse_dft(&zero).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn csv_dump() {
        let s = dft_set(&ResidueSet::full(pm(5)));
        let csv = s.to_csv();
        assert!(csv.starts_with("a,re,im\n0,5,0\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
