//! Independent reference implementations used by the integration tests.
//! Each one is the slowest obvious evaluation of its definition and shares
//! no code with the library.

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const SMALL_PRIMES: [u64; 20] = [
    5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
];

pub fn primes_up_to(n: u64) -> Vec<u64> {
    (5..=n)
        .filter(|&k| (2..k).take_while(|d| d * d <= k).all(|d| k % d != 0))
        .collect()
}

/// Random subset of `0..p` where each residue is present with probability `d`.
pub fn random_members(rng: &mut impl Rng, p: u64, d: f64) -> Vec<u64> {
    (0..p).filter(|_| rng.gen_bool(d)).collect()
}

/// Ordered pairs `(n, m)` with `n, n+m, n+2m` all in the set, `m = 0` included.
pub fn triple_loop_count(p: u64, members: &[u64]) -> u64 {
    let mut is = vec![false; p as usize];
    for &x in members {
        is[x as usize] = true;
    }
    let mut count = 0;
    for n in 0..p {
        for m in 0..p {
            if is[n as usize] && is[((n + m) % p) as usize] && is[((n + 2 * m) % p) as usize] {
                count += 1;
            }
        }
    }
    count
}

/// `sum_n f(n) e^{2 pi i a n / p}` evaluated term by term.
pub fn naive_dft(f: &[f64]) -> Vec<(f64, f64)> {
    let p = f.len();
    (0..p)
        .map(|a| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (n, &v) in f.iter().enumerate() {
                let theta = 2.0 * PI * ((a * n) % p) as f64 / p as f64;
                re += v * theta.cos();
                im += v * theta.sin();
            }
            (re, im)
        })
        .collect()
}

/// Longest cyclic progression found by trying every start and every
/// nonzero step.
pub fn brute_longest_ap(p: u64, members: &[u64]) -> u64 {
    if members.is_empty() {
        return 0;
    }
    if members.len() as u64 == p {
        return p;
    }
    let mut is = vec![false; p as usize];
    for &x in members {
        is[x as usize] = true;
    }
    let mut best = 1;
    for step in 1..p {
        for &start in members {
            let mut len = 0;
            let mut x = start;
            while is[x as usize] && len < p {
                len += 1;
                x = (x + step) % p;
            }
            best = best.max(len);
        }
    }
    best
}

/// `||a n / p|| < eps` decided with integers: the distance from `a n mod p`
/// to the nearest multiple of `p` is below `eps p`.
pub fn in_bohr_set(p: u64, freqs: &[u64], eps_num: u64, eps_den: u64, n: u64) -> bool {
    freqs.iter().all(|&a| {
        let r = (a as u128 * n as u128 % p as u128) as u64;
        let d = r.min(p - r);
        // d / p < eps_num / eps_den
        (d as u128) * (eps_den as u128) < (eps_num as u128) * (p as u128)
    })
}

/// `(S*N)(m) = #{0 <= j < len : m - j n0 in S} / len`.
pub fn brute_convolution(p: u64, members: &[u64], n0: u64, len: u64) -> Vec<f64> {
    let mut is = vec![false; p as usize];
    for &x in members {
        is[x as usize] = true;
    }
    (0..p)
        .map(|m| {
            let hits = (0..len)
                .filter(|&j| is[((m + p * p - (j * n0) % p) % p) as usize])
                .count();
            hits as f64 / len as f64
        })
        .collect()
}

/// Smallest count over all `s`-subsets, by plain enumeration.
pub fn brute_min_count(p: u64, s: usize) -> u64 {
    let mut best = u64::MAX;
    let mut chosen: Vec<u64> = Vec::with_capacity(s);
    fn go(p: u64, s: usize, next: u64, chosen: &mut Vec<u64>, best: &mut u64) {
        if chosen.len() == s {
            *best = (*best).min(triple_loop_count(p, chosen));
            return;
        }
        for x in next..p {
            chosen.push(x);
            go(p, s, x + 1, chosen, best);
            chosen.pop();
        }
    }
    go(p, s, 0, &mut chosen, &mut best);
    best
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1.0)
}
