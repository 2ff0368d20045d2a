//! Searching for sets of a given size with the fewest three-term
//! progressions: exhaustive enumeration for tiny moduli, simulated annealing
//! beyond, and the resulting empirical Varnavides ratios.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ap_count::count_3aps_naive;
use crate::error::{Error, Result};
use crate::zpz::{longest_ap, ApRun, PrimeModulus, ResidueSet};

/// Hard guard on the number of subsets the exhaustive search will visit.
pub const EXHAUSTIVE_LIMIT: u128 = 100_000_000;

pub const DEFAULT_MINIMIZER_CAP: usize = 1000;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of progressions through `x` that the set gains when `x` is added
/// to `member` (which must not contain `x`, or whose bit for `x` is ignored).
///
/// Nontrivial progressions have three distinct terms, so `x` sits in exactly
/// one position; the first-position and last-position sums coincide.
fn add_delta(member: &[bool], x: usize) -> u64 {
    let p = member.len();
    let mut ends = 0u64;
    let mut middle = 0u64;
    let mut fwd = x; // x + m
    let mut fwd2 = x; // x + 2m
    let mut back = x; // x - m
    for _ in 1..p {
        fwd += 1;
        if fwd >= p {
            fwd -= p;
        }
        fwd2 += 2;
        if fwd2 >= p {
            fwd2 -= p;
        }
        back = if back == 0 { p - 1 } else { back - 1 };
        if member[fwd] {
            if member[fwd2] {
                ends += 1;
            }
            if member[back] {
                middle += 1;
            }
        }
    }
    1 + 2 * ends + middle
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    Exhaustive,
    Anneal,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SearchStats {
    pub nodes_visited: u64,
    pub moves: u64,
    pub accepted_moves: u64,
    pub energy_checks: u64,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalSearchResult {
    pub p: u64,
    pub s: usize,
    pub min_count: u64,
    pub min_nontrivial: u64,
    /// Exact number of minimizers found (may exceed `minimizers.len()`).
    pub minimizer_count: u64,
    pub minimizers: Vec<ResidueSet>,
    pub longest_ap_per_minimizer: Vec<ApRun>,
    pub method: SearchMethod,
    pub stats: SearchStats,
}

impl CriticalSearchResult {
    fn finish(mut self) -> Result<Self> {
        for m in &self.minimizers {
            let c = count_3aps_naive(m);
            if m.len() != self.s || c.total != self.min_count {
                return Err(Error::Consistency(format!(
                    "minimizer {m:?} has size {} and count {}, expected {} and {}",
                    m.len(),
                    c.total,
                    self.s,
                    self.min_count
                )));
            }
        }
        self.min_nontrivial = self.min_count - self.s as u64;
        self.longest_ap_per_minimizer = self.minimizers.iter().map(longest_ap).collect();
        Ok(self)
    }
}

struct Partition {
    min: u64,
    count: u64,
    found: Vec<Vec<usize>>,
    nodes: u64,
}

struct Dfs<'a> {
    p: usize,
    s: usize,
    cap: usize,
    member: Vec<bool>,
    chosen: Vec<usize>,
    out: &'a mut Partition,
}

impl Dfs<'_> {
    fn walk(&mut self, next: usize, count: u64) {
        self.out.nodes += 1;
        if count > self.out.min {
            return;
        }
        if self.chosen.len() == self.s {
            if count < self.out.min {
                self.out.min = count;
                self.out.count = 0;
                self.out.found.clear();
            }
            self.out.count += 1;
            if self.out.found.len() < self.cap {
                self.out.found.push(self.chosen.clone());
            }
            return;
        }
        let remaining = self.s - self.chosen.len();
        for x in next..=self.p - remaining {
            let d = add_delta(&self.member, x);
            self.member[x] = true;
            self.chosen.push(x);
            self.walk(x + 1, count + d);
            self.chosen.pop();
            self.member[x] = false;
        }
    }
}

/// Every `s`-subset, in lexicographic order, split by smallest element
/// across threads. Partial counts only grow as elements are added, so
/// branches already above the partition's best are cut.
pub fn exhaustive_critical(p: PrimeModulus, s: usize, cap: usize) -> Result<CriticalSearchResult> {
    let n = p.size();
    if s == 0 || s > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality {s} outside [1, {p}]"
        )));
    }
    let combinations = binomial(p.get(), s as u64);
    if combinations > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchTooLarge {
            p: p.get(),
            s,
            combinations,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let parts: Vec<Partition> = (0..=n - s)
        .into_par_iter()
        .map(|first| {
            let mut out = Partition {
                min: u64::MAX,
                count: 0,
                found: Vec::new(),
                nodes: 0,
            };
            let mut member = vec![false; n];
            let d = add_delta(&member, first);
            member[first] = true;
            let mut dfs = Dfs {
                p: n,
                s,
                cap,
                member,
                chosen: vec![first],
                out: &mut out,
            };
            dfs.walk(first + 1, d);
            out
        })
        .collect();

    let min = parts.iter().map(|q| q.min).min().unwrap_or(u64::MAX);
    let mut minimizers = Vec::new();
    let mut count = 0;
    let mut nodes = 0;
    for part in parts {
        nodes += part.nodes;
        if part.min != min {
            continue;
        }
        count += part.count;
        for members in part.found {
            if minimizers.len() < cap {
                minimizers.push(ResidueSet::from_residues(
                    p,
                    members.into_iter().map(|x| x as u64),
                ));
            }
        }
    }
    CriticalSearchResult {
        p: p.get(),
        s,
        min_count: min,
        min_nontrivial: 0,
        minimizer_count: count,
        minimizers,
        longest_ap_per_minimizer: Vec::new(),
        method: SearchMethod::Exhaustive,
        stats: SearchStats {
            nodes_visited: nodes,
            ..Default::default()
        },
    }
    .finish()
}

/// Geometric cooling from `t_start` to `t_end` over `steps` moves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub steps: u64,
    pub t_start: f64,
    pub t_end: f64,
    /// Recount from scratch every this many moves; 0 disables.
    #[serde(default = "default_check_interval")]
    pub check_interval: u64,
}

fn default_check_interval() -> u64 {
    1000
}

impl Schedule {
    pub fn for_modulus(p: u64) -> Self {
        Schedule {
            steps: 20_000,
            t_start: p as f64 / 2.0,
            t_end: 0.05,
            check_interval: default_check_interval(),
        }
    }

    pub fn temperature(&self, step: u64) -> f64 {
        if self.steps <= 1 {
            return self.t_end;
        }
        let frac = step as f64 / (self.steps - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }

    fn validate(&self) -> Result<()> {
        if self.steps > 0 && !(self.t_start > 0.0 && self.t_end > 0.0) {
            return Err(Error::InvalidArgument(
                "annealing temperatures must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Simulated annealing over `s`-subsets with single swap moves and exact
/// integer energies updated in O(p) per move.
pub fn anneal_critical(
    p: PrimeModulus,
    s: usize,
    schedule: &Schedule,
    seed: u64,
) -> Result<CriticalSearchResult> {
    let n = p.size();
    if s > n {
        return Err(Error::InvalidArgument(format!(
            "cardinality {s} exceeds p = {p}"
        )));
    }
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members: Vec<usize> = index::sample(&mut rng, n, s).into_vec();
    members.sort_unstable();
    let mut member = vec![false; n];
    for &x in &members {
        member[x] = true;
    }
    let mut outside: Vec<usize> = (0..n).filter(|&x| !member[x]).collect();
    let to_set = |m: &[bool]| {
        ResidueSet::from_residues(
            p,
            m.iter()
                .enumerate()
                .filter(|(_, &b)| b)
                .map(|(i, _)| i as u64),
        )
    };
    let mut energy = count_3aps_naive(&to_set(&member)).total;
    let mut best = (energy, member.clone());
    let mut stats = SearchStats {
        seed: Some(seed),
        ..Default::default()
    };

    if s > 0 && s < n {
        for step in 0..schedule.steps {
            let i = rng.gen_range(0..members.len());
            let j = rng.gen_range(0..outside.len());
            let (x, y) = (members[i], outside[j]);
            member[x] = false;
            let removed = add_delta(&member, x);
            let added = add_delta(&member, y);
            let delta = added as i64 - removed as i64;
            let temp = schedule.temperature(step);
            let accept = delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / temp).exp();
            stats.moves += 1;
            if accept {
                member[y] = true;
                members[i] = y;
                outside[j] = x;
                energy = (energy as i64 + delta) as u64;
                stats.accepted_moves += 1;
                if energy < best.0 {
                    best = (energy, member.clone());
                }
            } else {
                member[x] = true;
            }
            if schedule.check_interval > 0 && stats.moves.is_multiple_of(schedule.check_interval) {
                stats.energy_checks += 1;
                let full = count_3aps_naive(&to_set(&member)).total;
                if full != energy {
                    return Err(Error::Consistency(format!(
                        "incremental energy {energy} drifted from recount {full} at move {}",
                        stats.moves
                    )));
                }
            }
        }
    }

    CriticalSearchResult {
        p: p.get(),
        s,
        min_count: best.0,
        min_nontrivial: 0,
        minimizer_count: 1,
        minimizers: vec![to_set(&best.1)],
        longest_ap_per_minimizer: Vec::new(),
        method: SearchMethod::Anneal,
        stats,
    }
    .finish()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarnavidesRow {
    pub d: f64,
    pub s: usize,
    pub min_count: u64,
    pub min_nontrivial: u64,
    /// `min_count / p^2`
    pub ratio: f64,
    pub method: SearchMethod,
}

/// Below this many subsets [`varnavides_estimate`] enumerates exactly.
pub const AUTO_EXHAUSTIVE_LIMIT: u128 = 2_000_000;

/// `ceil(d p)`, tolerant of `d p` landing a hair above an integer.
pub fn size_for_density(p: u64, d: f64) -> usize {
    let raw = d * p as f64;
    ((raw - 1e-9).ceil().max(1.0) as usize).min(p as usize)
}

/// For each density, the smallest count found among sets of size
/// `ceil(d p)`, divided by `p^2`: exact where enumeration is cheap,
/// annealed otherwise.
pub fn varnavides_estimate(
    p: PrimeModulus,
    densities: &[f64],
    seed: u64,
    schedule: Option<Schedule>,
) -> Result<Vec<VarnavidesRow>> {
    let schedule = schedule.unwrap_or_else(|| Schedule::for_modulus(p.get()));
    densities
        .iter()
        .map(|&d| {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "density {d} outside (0, 1]"
                )));
            }
            let s = size_for_density(p.get(), d);
            let result = if binomial(p.get(), s as u64) <= AUTO_EXHAUSTIVE_LIMIT {
                exhaustive_critical(p, s, 1)?
            } else {
                anneal_critical(p, s, &schedule, seed)?
            };
            let psq = (p.get() * p.get()) as f64;
            Ok(VarnavidesRow {
                d,
                s,
                min_count: result.min_count,
                min_nontrivial: result.min_nontrivial,
                ratio: result.min_count as f64 / psq,
                method: result.method,
            })
        })
        .collect()
}

pub fn varnavides_csv(rows: &[VarnavidesRow]) -> String {
    let mut out = String::from("d,s,min_count,ratio\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.d, r.s, r.min_count, r.ratio));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(13, 6), 1716);
        assert_eq!(binomial(11, 5), 462);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn add_delta_matches_recount() {
        let p = pm(17);
        let base = ResidueSet::new(p, [0, 1, 3, 7, 8, 12]);
        let mut member = vec![false; 17];
        for x in base.iter() {
            member[x as usize] = true;
        }
        let before = count_3aps_naive(&base).total;
        for y in 0..17u64 {
            if base.contains(y) {
                continue;
            }
            let after =
                count_3aps_naive(&ResidueSet::from_residues(p, base.iter().chain([y]))).total;
            assert_eq!(add_delta(&member, y as usize), after - before);
        }
    }

    #[test]
    fn full_and_singleton_cases() {
        let r = exhaustive_critical(pm(7), 7, 10).unwrap();
        assert_eq!(r.min_count, 49);
        assert_eq!(r.minimizer_count, 1);
        let r = exhaustive_critical(pm(11), 1, 100).unwrap();
        assert_eq!(r.min_count, 1);
        assert_eq!(r.minimizer_count, 11);
        assert_eq!(r.minimizers.len(), 11);
        assert_eq!(r.minimizers[0].members(), vec![0]);
    }

    #[test]
    fn minimizer_cap_keeps_exact_count() {
        let r = exhaustive_critical(pm(11), 1, 3).unwrap();
        assert_eq!(r.minimizers.len(), 3);
        assert_eq!(r.minimizer_count, 11);
    }

    #[test]
    fn guard_rejects_large_spaces() {
        let r = exhaustive_critical(pm(101), 50, 1);
        assert!(matches!(r, Err(Error::SearchTooLarge { .. })));
        assert!(r.unwrap_err().is_validation());
        assert!(exhaustive_critical(pm(11), 0, 1).is_err());
    }

    #[test]
    fn zero_step_anneal_returns_initial_set() {
        let sched = Schedule {
            steps: 0,
            t_start: 1.0,
            t_end: 0.1,
            check_interval: 1000,
        };
        let r = anneal_critical(pm(31), 10, &sched, 42).unwrap();
        let again = anneal_critical(pm(31), 10, &sched, 42).unwrap();
        assert_eq!(r.minimizers, again.minimizers);
        assert_eq!(r.stats.moves, 0);
        assert_eq!(r.min_count, count_3aps_naive(&r.minimizers[0]).total);
    }

    #[test]
    fn anneal_checks_energy() {
        let sched = Schedule {
            steps: 3000,
            t_start: 10.0,
            t_end: 0.1,
            check_interval: 100,
        };
        let r = anneal_critical(pm(37), 12, &sched, 5).unwrap();
        assert_eq!(r.stats.energy_checks, 30);
    }

    #[test]
    fn varnavides_edges() {
        let p = pm(13);
        let rows = varnavides_estimate(p, &[1.0, 0.1], 0, None).unwrap();
        assert_eq!(rows[0].ratio, 1.0);
        assert_eq!(rows[1].s, 2);
        assert_eq!(rows[1].min_nontrivial, 0);
        assert_eq!(rows[1].min_count, 2);
        let csv = varnavides_csv(&rows);
        assert!(csv.starts_with("d,s,min_count,ratio\n1,13,169,1\n"));
        assert!(varnavides_estimate(p, &[0.0], 0, None).is_err());
    }
}
