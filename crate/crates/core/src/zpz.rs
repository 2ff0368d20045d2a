//! Residue arithmetic over Z/pZ and the set and weight types everything else
//! is built on.
//!
//! A [`ResidueSet`] is a packed bit-vector, 64 residues per word, so the
//! counting kernels can work a word at a time with AND and popcount.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated prime modulus `p >= 5`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct PrimeModulus(u64);

/// Largest modulus accepted; the O(p^2) kernels are hopeless long before this.
pub const MAX_MODULUS: u64 = 1 << 31;

impl PrimeModulus {
    pub fn new(p: u64) -> Result<Self> {
        if !(5..=MAX_MODULUS).contains(&p) || !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        Ok(PrimeModulus(p))
    }

    #[inline]
    pub fn get(self) -> u64 {
        self.0
    }

    /// `p` as a `usize`, for indexing.
    #[inline]
    pub fn size(self) -> usize {
        self.0 as usize
    }

    /// Reduces an arbitrary integer into `[0, p-1]`.
    #[inline]
    pub fn reduce(self, x: i64) -> u64 {
        x.rem_euclid(self.0 as i64) as u64
    }

    #[inline]
    pub fn add(self, a: u64, b: u64) -> u64 {
        (a + b) % self.0
    }

    #[inline]
    pub fn sub(self, a: u64, b: u64) -> u64 {
        (a + self.0 - b % self.0) % self.0
    }

    #[inline]
    pub fn mul(self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.0 as u128) as u64
    }

    #[inline]
    pub fn neg(self, a: u64) -> u64 {
        (self.0 - a % self.0) % self.0
    }

    pub fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.0;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(self, a: u64) -> Option<u64> {
        let a = a % self.0;
        if a == 0 {
            None
        } else {
            Some(self.pow(a, self.0 - 2))
        }
    }
}

impl fmt::Display for PrimeModulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for PrimeModulus {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = u64::deserialize(d)?;
        PrimeModulus::new(p).map_err(serde::de::Error::custom)
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin; the witness set is exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(q) {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A subset of Z/pZ with cached cardinality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ResidueSet {
    modulus: PrimeModulus,
    words: Vec<u64>,
    len: usize,
}

#[inline]
pub(crate) fn word_count(p: usize) -> usize {
    p.div_ceil(64)
}

impl ResidueSet {
    pub fn empty(modulus: PrimeModulus) -> Self {
        ResidueSet {
            modulus,
            words: vec![0; word_count(modulus.size())],
            len: 0,
        }
    }

    pub fn full(modulus: PrimeModulus) -> Self {
        Self::empty(modulus).complement()
    }

    /// Builds a set from arbitrary integers, reducing each mod p. Duplicates
    /// collapse.
    pub fn new<I>(modulus: PrimeModulus, members: I) -> Self
    where
        I: IntoIterator<Item = i64>,
    {
        let mut words = vec![0u64; word_count(modulus.size())];
        for m in members {
            let r = modulus.reduce(m) as usize;
            words[r / 64] |= 1 << (r % 64);
        }
        Self::from_words(modulus, words)
    }

    pub fn from_residues<I>(modulus: PrimeModulus, members: I) -> Self
    where
        I: IntoIterator<Item = u64>,
    {
        let mut words = vec![0u64; word_count(modulus.size())];
        for m in members {
            let r = (m % modulus.get()) as usize;
            words[r / 64] |= 1 << (r % 64);
        }
        Self::from_words(modulus, words)
    }

    pub fn from_indicator(modulus: PrimeModulus, indicator: &[bool]) -> Result<Self> {
        if indicator.len() != modulus.size() {
            return Err(Error::InvalidArgument(format!(
                "indicator has length {}, expected {}",
                indicator.len(),
                modulus
            )));
        }
        let members = indicator
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i as u64);
        Ok(Self::from_residues(modulus, members))
    }

    pub(crate) fn from_words(modulus: PrimeModulus, mut words: Vec<u64>) -> Self {
        debug_assert_eq!(words.len(), word_count(modulus.size()));
        let tail = modulus.size() % 64;
        if tail != 0 {
            if let Some(last) = words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        let len = words.iter().map(|w| w.count_ones() as usize).sum();
        ResidueSet {
            modulus,
            words,
            len,
        }
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn p(&self) -> u64 {
        self.modulus.get()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `|S| / p`
    pub fn density(&self) -> f64 {
        self.len as f64 / self.p() as f64
    }

    #[inline]
    pub fn contains(&self, r: u64) -> bool {
        let r = (r % self.p()) as usize;
        self.words[r / 64] >> (r % 64) & 1 == 1
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Members in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(wi as u64 * 64 + b)
            })
        })
    }

    pub fn members(&self) -> Vec<u64> {
        self.iter().collect()
    }

    pub fn indicator(&self) -> Vec<f64> {
        (0..self.p())
            .map(|r| if self.contains(r) { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn complement(&self) -> Self {
        let words = self.words.iter().map(|w| !w).collect();
        Self::from_words(self.modulus, words)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_same_modulus(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Ok(Self::from_words(self.modulus, words))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.modulus == other.modulus
            && self
                .words
                .iter()
                .zip(&other.words)
                .all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn check_same_modulus(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch(self.p(), other.p()));
        }
        Ok(())
    }

    /// Image under `n -> a*n + b`. `a` must be nonzero mod p.
    pub fn affine_map(&self, a: u64, b: u64) -> Result<Self> {
        let m = self.modulus;
        if a.is_multiple_of(m.get()) {
            return Err(Error::InvalidArgument(
                "affine multiplier must be nonzero mod p".into(),
            ));
        }
        Ok(Self::from_residues(
            m,
            self.iter().map(|x| m.add(m.mul(a, x), b)),
        ))
    }

    pub(crate) fn with_flipped(&self, residues: &[u64]) -> Self {
        let mut words = self.words.clone();
        for &r in residues {
            let r = r as usize;
            words[r / 64] ^= 1 << (r % 64);
        }
        Self::from_words(self.modulus, words)
    }

    /// Bit-vector of length 2p holding the set twice, so a cyclic rotation can
    /// be read as a plain window.
    pub(crate) fn doubled_words(&self) -> Vec<u64> {
        let p = self.modulus.size();
        let mut out = vec![0u64; word_count(2 * p) + 1];
        for r in self.iter() {
            for pos in [r as usize, r as usize + p] {
                out[pos / 64] |= 1 << (pos % 64);
            }
        }
        out
    }
}

/// Reads 64 bits of `bits` starting at bit `offset`.
#[inline]
pub(crate) fn window(bits: &[u64], offset: usize) -> u64 {
    let i = offset / 64;
    let s = offset % 64;
    if s == 0 {
        bits[i]
    } else {
        (bits[i] >> s) | (bits[i + 1] << (64 - s))
    }
}

impl fmt::Debug for ResidueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ResidueSet(p={}, ", self.p())?;
        f.debug_set().entries(self.iter()).finish()?;
        write!(f, ")")
    }
}

/// A map `m -> w(m)` on residues with every value in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightFunction {
    modulus: PrimeModulus,
    values: Vec<f64>,
}

impl WeightFunction {
    pub fn new(modulus: PrimeModulus, values: Vec<f64>) -> Result<Self> {
        if values.len() != modulus.size() {
            return Err(Error::InvalidArgument(format!(
                "weight vector has length {}, expected {}",
                values.len(),
                modulus
            )));
        }
        if let Some((m, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidArgument(format!(
                "weight w({m}) = {v} outside [0, 1]"
            )));
        }
        Ok(WeightFunction { modulus, values })
    }

    pub fn constant(modulus: PrimeModulus, value: f64) -> Result<Self> {
        Self::new(modulus, vec![value; modulus.size()])
    }

    pub fn indicator(set: &ResidueSet) -> Self {
        WeightFunction {
            modulus: set.modulus(),
            values: set.indicator(),
        }
    }

    #[inline]
    pub fn modulus(&self) -> PrimeModulus {
        self.modulus
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise `w / k`, clamped into `[0, 1]` against rounding.
    pub fn scaled(&self, divisor: f64) -> Result<Self> {
        if divisor.is_nan() || divisor <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "scale divisor {divisor} must be positive"
            )));
        }
        let values = self.values.iter().map(|v| (v / divisor).min(1.0)).collect();
        Self::new(self.modulus, values)
    }

    /// Index and value of the largest entry (first on ties).
    pub fn argmax(&self) -> (u64, f64) {
        let mut best = (0, self.values[0]);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best.1 {
                best = (i as u64, v);
            }
        }
        best
    }
}

/// The triple `n, n+m, n+2m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApTriple {
    pub n: u64,
    pub m: u64,
}

impl ApTriple {
    pub fn members(&self, p: PrimeModulus) -> [u64; 3] {
        let a = self.n % p.get();
        let b = p.add(a, self.m);
        [a, b, p.add(b, self.m)]
    }

    pub fn is_trivial(&self, p: PrimeModulus) -> bool {
        self.m.is_multiple_of(p.get())
    }
}

/// `start, start+step, ..., start+(length-1)*step` mod p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApRun {
    pub start: u64,
    pub step: u64,
    pub length: u64,
}

impl ApRun {
    pub const EMPTY: ApRun = ApRun {
        start: 0,
        step: 0,
        length: 0,
    };

    pub fn elements(&self, p: PrimeModulus) -> impl Iterator<Item = u64> + '_ {
        let mut x = self.start % p.get();
        let step = self.step % p.get();
        (0..self.length).map(move |_| {
            let cur = x;
            x = p.add(x, step);
            cur
        })
    }

    pub fn is_contained_in(&self, set: &ResidueSet) -> bool {
        self.elements(set.modulus()).all(|x| set.contains(x))
    }
}

/// Longest arithmetic progression contained in `set`.
///
/// Steps `1..=(p-1)/2` are scanned; a run with step `s` read backwards has
/// step `p-s`. Ties go to the smallest step, then the smallest start. A run of
/// length one is reported with step 0 and the smallest member as start; the
/// empty set yields [`ApRun::EMPTY`].
pub fn longest_ap(set: &ResidueSet) -> ApRun {
    let p = set.modulus();
    let n = p.size();
    if set.is_empty() {
        return ApRun::EMPTY;
    }
    if set.len() == n {
        return ApRun {
            start: 0,
            step: 1,
            length: p.get(),
        };
    }
    let mut best = ApRun {
        start: set.iter().next().unwrap_or(0),
        step: 0,
        length: 1,
    };
    let mut along = vec![false; n];
    for step in 1..=(p.get() - 1) / 2 {
        // membership along the cycle 0, step, 2*step, ...
        let mut x = 0u64;
        for slot in along.iter_mut() {
            *slot = set.contains(x);
            x = p.add(x, step);
        }
        // rotate so index 0 is a non-member; runs are then linear
        let gap = along.iter().position(|b| !b).unwrap_or(0);
        let mut run_len = 0u64;
        let mut run_start_idx = 0usize;
        let mut best_for_step: Option<(u64, u64)> = None;
        for k in 1..=n {
            let idx = (gap + k) % n;
            if k < n && along[idx] {
                if run_len == 0 {
                    run_start_idx = idx;
                }
                run_len += 1;
            } else if run_len > 0 {
                let start = p.mul(run_start_idx as u64, step);
                let better = match best_for_step {
                    None => true,
                    Some((len, s)) => run_len > len || (run_len == len && start < s),
                };
                if better {
                    best_for_step = Some((run_len, start));
                }
                run_len = 0;
            }
        }
        if let Some((len, start)) = best_for_step {
            if len > best.length {
                best = ApRun {
                    start,
                    step,
                    length: len,
                };
            }
        }
    }
    best
}

/// On-disk set format: `{"p": <int>, "members": [<ints ascending>]}`.
#[derive(Debug, Serialize, Deserialize)]
struct SetFile {
    p: u64,
    members: Vec<i64>,
}

impl ResidueSet {
    /// Parses either the JSON form or the plain-text form (`p=<int>` header,
    /// then one residue per line; blank lines and `#` comments ignored).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let f: SetFile = serde_json::from_str(trimmed)?;
            let m = PrimeModulus::new(f.p)?;
            return Ok(ResidueSet::new(m, f.members));
        }
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty set file".into()))?;
        let p = header
            .strip_prefix("p=")
            .ok_or_else(|| Error::Parse(format!("expected `p=<int>` header, got `{header}`")))?
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("bad modulus: {e}")))?;
        let m = PrimeModulus::new(p)?;
        let members = lines
            .map(|l| {
                l.parse::<i64>()
                    .map_err(|e| Error::Parse(format!("bad residue `{l}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ResidueSet::new(m, members))
    }

    pub fn to_json(&self) -> String {
        let f = SetFile {
            p: self.p(),
            members: self.iter().map(|x| x as i64).collect(),
        };
        serde_json::to_string(&f).expect("set serialization")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("p={}\n", self.p());
        for x in self.iter() {
            out.push_str(&x.to_string());
            out.push('\n');
        }
        out
    }
}

impl Serialize for ResidueSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SetFile {
            p: self.p(),
            members: self.iter().map(|x| x as i64).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ResidueSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = SetFile::deserialize(d)?;
        let m = PrimeModulus::new(f.p).map_err(serde::de::Error::custom)?;
        Ok(ResidueSet::new(m, f.members))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightFile {
    p: u64,
    weights: Vec<f64>,
}

impl WeightFunction {
    /// Parses `{"p": <int>, "weights": [<reals>]}`.
    pub fn parse(text: &str) -> Result<Self> {
        let f: WeightFile = serde_json::from_str(text)?;
        WeightFunction::new(PrimeModulus::new(f.p)?, f.weights)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&WeightFile {
            p: self.modulus.get(),
            weights: self.values.clone(),
        })
        .expect("weight serialization")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn primality() {
        let small: Vec<u64> = (0..60).filter(|&n| is_prime(n)).collect();
        assert_eq!(
            small,
            vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
        );
        assert!(is_prime(1_000_000_007));
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
        assert!(PrimeModulus::new(3).is_err());
        assert!(PrimeModulus::new(9).is_err());
        assert!(PrimeModulus::new(1009).is_ok());
    }

    #[test]
    fn make_residue_set_examples() {
        let s = ResidueSet::new(pm(5), [0, 1]);
        assert_eq!(s.members(), vec![0, 1]);
        assert_eq!(s.len(), 2);
        let s = ResidueSet::new(pm(5), [6, 1]);
        assert_eq!(s.members(), vec![1]);
        assert_eq!(s.len(), 1);
        let s = ResidueSet::new(pm(7), []);
        assert!(s.is_empty());
        let s = ResidueSet::new(pm(7), [-1, 13, 6]);
        assert_eq!(s.members(), vec![6]);
    }

    #[test]
    fn complement_examples() {
        let p5 = pm(5);
        assert_eq!(
            ResidueSet::new(p5, [0, 1]).complement().members(),
            vec![2, 3, 4]
        );
        assert_eq!(
            ResidueSet::empty(p5).complement().members(),
            vec![0, 1, 2, 3, 4]
        );
        assert!(ResidueSet::full(pm(7)).complement().is_empty());
        let big = ResidueSet::new(pm(131), [0, 64, 130]);
        let c = big.complement();
        assert_eq!(c.len(), 128);
        assert!(!c.contains(130) && c.contains(129));
    }

    #[test]
    fn longest_ap_examples() {
        let s = ResidueSet::new(pm(11), [0, 2, 4, 6]);
        assert_eq!(
            longest_ap(&s),
            ApRun {
                start: 0,
                step: 2,
                length: 4
            }
        );
        assert_eq!(longest_ap(&ResidueSet::full(pm(7))).length, 7);
        let single = longest_ap(&ResidueSet::new(pm(13), [5]));
        assert_eq!(single.length, 1);
        assert_eq!(single.start, 5);
        assert_eq!(longest_ap(&ResidueSet::empty(pm(13))), ApRun::EMPTY);
    }

    #[test]
    fn longest_ap_wraps_around() {
        // 9, 10, 0, 1 is a run of step 1 through the wrap point
        let s = ResidueSet::new(pm(11), [9, 10, 0, 1, 5]);
        assert_eq!(
            longest_ap(&s),
            ApRun {
                start: 9,
                step: 1,
                length: 4
            }
        );
    }

    #[test]
    fn longest_ap_tie_breaks_on_step_then_start() {
        // runs {3,4} (step 1) and {0,2} (step 2): step 1 wins
        let s = ResidueSet::new(pm(13), [0, 2, 3, 4, 9]);
        let run = longest_ap(&s);
        assert_eq!(run.step, 1);
        assert_eq!(run.start, 2);
        assert_eq!(run.length, 3);
    }

    #[test]
    fn parse_both_formats() {
        let j = ResidueSet::parse(r#"{"p": 11, "members": [4, 2, 2, 13]}"#).unwrap();
        assert_eq!(j.members(), vec![2, 4]);
        assert_eq!(j.to_json(), r#"{"p":11,"members":[2,4]}"#);
        let t = ResidueSet::parse("p=11\n# comment\n4\n\n2\n13\n").unwrap();
        assert_eq!(t, j);
        assert_eq!(t.to_text(), "p=11\n2\n4\n");
        assert!(matches!(
            ResidueSet::parse("p=12\n1\n"),
            Err(Error::NotPrime(12))
        ));
        assert!(matches!(ResidueSet::parse("1\n2\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn weights_are_validated() {
        assert!(WeightFunction::new(pm(5), vec![0.0, 1.0, 0.5, 0.2, 1.0]).is_ok());
        assert!(WeightFunction::new(pm(5), vec![0.0, 1.1, 0.5, 0.2, 1.0]).is_err());
        assert!(WeightFunction::new(pm(5), vec![0.0; 4]).is_err());
        assert!(WeightFunction::new(pm(5), vec![f64::NAN; 5]).is_err());
        let w = WeightFunction::parse(r#"{"p":5,"weights":[0,0.5,1,0,0]}"#).unwrap();
        assert_eq!(w.sum(), 1.5);
    }

    #[test]
    fn ap_triple_members() {
        let p = pm(7);
        let t = ApTriple { n: 5, m: 3 };
        assert_eq!(t.members(p), [5, 1, 4]);
        assert!(!t.is_trivial(p));
        assert!(ApTriple { n: 2, m: 7 }.is_trivial(p));
    }

    #[test]
    fn modular_helpers() {
        let p = pm(13);
        for a in 1..13 {
            assert_eq!(p.mul(a, p.inv(a).unwrap()), 1);
        }
        assert_eq!(p.inv(0), None);
        assert_eq!(p.sub(2, 5), 10);
        assert_eq!(p.neg(0), 0);
    }
}
