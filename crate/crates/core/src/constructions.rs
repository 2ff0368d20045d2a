//! Set constructions behind the improvement argument: random affine
//! intersections, the two-interval set with few progressions, and the
//! pipeline that turns a non-concentrated set into a same-size competitor.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ap_count::{count_3aps_naive, count_3aps_spectral, split_spectrum};
use crate::bohr::{
    bohr_element, convolve, extract_ap_from_convolution, spectrum_flatness, BohrSpec,
    SmoothingProgression,
};
use crate::error::{Error, Result};
use crate::report::ExperimentReport;
use crate::rounding::{adjust_cardinality, round_to_cardinality, RoundingOptions};
use crate::zpz::{longest_ap, PrimeModulus, ResidueSet, WeightFunction};

/// Slack, in multiples of `p`, absorbing the rounding of interval endpoints.
pub const TWO_INTERVAL_SLACK: f64 = 10.0;

/// `{u b + v : b in B}`; `u` must be nonzero mod p.
pub fn affine_image(b: &ResidueSet, u: u64, v: u64) -> Result<ResidueSet> {
    b.affine_map(u, v)
}

#[derive(Clone, Debug, Serialize)]
pub struct IntersectionSample {
    pub u: u64,
    pub v: u64,
    pub set: ResidueSet,
    pub density: f64,
    pub nontrivial_3aps: u64,
    pub draws: u64,
    /// `(1 - eps) * gamma * delta * p`
    pub size_threshold: f64,
    /// `alpha * beta * (gamma * delta)^3 * (p^2 + 2 p^{3/2})`
    pub ap_threshold: f64,
}

fn intersection_thresholds(a: &ResidueSet, b: &ResidueSet, eps: f64) -> (f64, f64) {
    let p = a.p() as f64;
    let na = count_3aps_naive(a).nontrivial as f64;
    let nb = count_3aps_naive(b).nontrivial as f64;
    let size = (1.0 - eps) * a.len() as f64 * b.len() as f64 / p;
    // alpha beta (gamma delta)^3 p^2 = na * nb / p^2
    let aps = na * nb / p.powi(4) * (p * p + 2.0 * p.powf(1.5));
    (size, aps)
}

/// Draws `u` in `[1, p-1]` and `v` in `[0, p-1]` uniformly until
/// `C = A ∩ (uB + v)` is both large and progression-poor.
pub fn sample_intersection(
    a: &ResidueSet,
    b: &ResidueSet,
    eps: f64,
    max_draws: u64,
    seed: u64,
) -> Result<IntersectionSample> {
    a.check_same_modulus(b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument(
            "intersection needs nonempty A and B".into(),
        ));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "intersection eps must lie in (0, 1), got {eps}"
        )));
    }
    let p = a.p();
    let (size_threshold, ap_threshold) = intersection_thresholds(a, b, eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 1..=max_draws {
        let u = rng.gen_range(1..p);
        let v = rng.gen_range(0..p);
        let c = a.intersection(&b.affine_map(u, v)?)?;
        if (c.len() as f64) < size_threshold {
            continue;
        }
        let q = count_3aps_naive(&c).nontrivial;
        if q as f64 <= ap_threshold {
            return Ok(IntersectionSample {
                u,
                v,
                density: c.density(),
                set: c,
                nontrivial_3aps: q,
                draws: draw,
                size_threshold,
                ap_threshold,
            });
        }
    }
    Err(Error::DrawsExhausted { draws: max_draws })
}

/// Sums over every `(u, v)` with `u != 0` of `|C|`, `|C|^2` and the
/// nontrivial count of `C = A ∩ (uB + v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntersectionMoments {
    pub pairs: u64,
    pub sum_size: u64,
    pub sum_size_sq: u64,
    pub sum_nontrivial: u64,
}

pub fn exhaustive_intersection_moments(
    a: &ResidueSet,
    b: &ResidueSet,
) -> Result<IntersectionMoments> {
    a.check_same_modulus(b)?;
    let p = a.p();
    let mut out = IntersectionMoments {
        pairs: 0,
        sum_size: 0,
        sum_size_sq: 0,
        sum_nontrivial: 0,
    };
    for u in 1..p {
        for v in 0..p {
            let c = a.intersection(&b.affine_map(u, v)?)?;
            let k = c.len() as u64;
            out.pairs += 1;
            out.sum_size += k;
            out.sum_size_sq += k * k;
            out.sum_nontrivial += count_3aps_naive(&c).nontrivial;
        }
    }
    Ok(out)
}

/// `Ubar = [0, θp/2] ∪ [p/2, p/2 + θp/2]` (integers) and its complement `U`,
/// with the progression counts that were checked at construction.
#[derive(Clone, Debug, Serialize)]
pub struct TwoIntervalSet {
    pub theta: f64,
    #[serde(rename = "U")]
    pub u: ResidueSet,
    #[serde(rename = "Ubar")]
    pub ubar: ResidueSet,
    pub intervals: [(u64, u64); 2],
    pub count_u: u64,
    pub nontrivial_ubar: u64,
    /// `p^2 (1 - 3θ + 2.5θ^2)`
    pub upper_bound: f64,
    /// `θ^2 p^2 / 2`
    pub lower_bound_ubar: f64,
}

/// Integer endpoints of the two intervals; the second may be empty.
pub fn two_interval_endpoints(p: u64, theta: f64) -> [(u64, u64); 2] {
    let pf = p as f64;
    let hi0 = (theta * pf / 2.0).floor() as u64;
    let lo1 = p.div_ceil(2);
    let hi1 = (pf / 2.0 + theta * pf / 2.0).floor() as u64;
    [(0, hi0), (lo1, hi1)]
}

pub fn two_interval_set(p: PrimeModulus, theta: f64) -> Result<TwoIntervalSet> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "theta must lie in (0, 1), got {theta}"
        )));
    }
    let intervals = two_interval_endpoints(p.get(), theta);
    let members = intervals
        .iter()
        .flat_map(|&(lo, hi)| (lo..=hi).filter(move |_| lo <= hi));
    let ubar = ResidueSet::from_residues(p, members);
    let u = ubar.complement();

    let pf = p.get() as f64;
    if (ubar.len() as f64 - theta * pf).abs() > 2.0 {
        return Err(Error::Consistency(format!(
            "|Ubar| = {} is more than 2 away from θp = {}",
            ubar.len(),
            theta * pf
        )));
    }
    let count_u = count_3aps_naive(&u).total;
    let nontrivial_ubar = count_3aps_naive(&ubar).nontrivial;
    let upper_bound = pf * pf * (1.0 - 3.0 * theta + 2.5 * theta * theta);
    let lower_bound_ubar = theta * theta * pf * pf / 2.0;
    let slack = TWO_INTERVAL_SLACK * pf;
    if count_u as f64 > upper_bound + slack {
        return Err(Error::Consistency(format!(
            "count(U) = {count_u} exceeds p^2(1 - 3θ + 2.5θ^2) + {slack} = {}",
            upper_bound + slack
        )));
    }
    if (nontrivial_ubar as f64) < lower_bound_ubar - slack {
        return Err(Error::Consistency(format!(
            "nontrivial count of Ubar {nontrivial_ubar} is below θ^2 p^2 / 2 - {slack}"
        )));
    }
    Ok(TwoIntervalSet {
        theta,
        u,
        ubar,
        intervals,
        count_u,
        nontrivial_ubar,
        upper_bound,
        lower_bound_ubar,
    })
}

/// Seeds for the three stochastic stages of the improvement pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineSeeds {
    pub rounding: u64,
    pub intersect: u64,
    pub adjust: u64,
}

impl PipelineSeeds {
    pub fn from_base(seed: u64) -> Self {
        PipelineSeeds {
            rounding: seed,
            intersect: seed.wrapping_add(1),
            adjust: seed.wrapping_add(2),
        }
    }
}

fn default_intersect_eps() -> f64 {
    0.25
}

fn default_max_draws() -> u64 {
    100_000
}

fn default_bound_factor() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImproveParams {
    /// Large-spectrum threshold `T`.
    pub threshold: f64,
    /// Bohr radius for the step `n0`.
    pub bohr_eps: f64,
    /// Length of the smoothing progression.
    pub length: u64,
    /// `κ` is floored at `1 - concentration_target`. Defaults to
    /// `ln ln p / (ln p)^{1/4}`.
    #[serde(default)]
    pub concentration_target: Option<f64>,
    /// `eps` of the extraction test `(S*N)(m) > 1 - eps`.
    pub extract_eps: f64,
    #[serde(default = "default_bound_factor")]
    pub bound_factor: f64,
    #[serde(default = "default_intersect_eps")]
    pub intersect_eps: f64,
    #[serde(default = "default_max_draws")]
    pub max_draws: u64,
    /// Stop after a successful extraction instead of running every stage.
    #[serde(default = "default_true")]
    pub short_circuit: bool,
    pub seeds: PipelineSeeds,
}

/// `ln ln p / (ln p)^{1/4}`
pub fn asymptotic_concentration_target(p: u64) -> f64 {
    let l = (p as f64).ln();
    l.ln() / l.powf(0.25)
}

fn set_summary(s: &ResidueSet) -> Value {
    let c = count_3aps_naive(s);
    json!({
        "set": s,
        "size": s.len(),
        "total_3aps": c.total,
        "nontrivial_3aps": c.nontrivial,
        "longest_ap": longest_ap(s),
    })
}

/// Runs the whole improvement pipeline on `S` and returns `C'` with
/// `|C'| = |S|` plus a report of every intermediate count. Whether
/// `count(C') < count(S)` is recorded, not required.
pub fn improve_critical_candidate(
    set: &ResidueSet,
    params: &ImproveParams,
) -> Result<(ResidueSet, ExperimentReport)> {
    if set.is_empty() {
        return Err(Error::InvalidArgument(
            "improve needs a nonempty set".into(),
        ));
    }
    let p = set.modulus();
    let target = params
        .concentration_target
        .unwrap_or_else(|| asymptotic_concentration_target(p.get()));
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "concentration target must lie in (0, 1), got {target}"
        )));
    }
    let mut report = ExperimentReport::new(
        "improve",
        json!({ "set": set, "params": params, "concentration_target": target }),
    );

    let t = Instant::now();
    let count_s = count_3aps_naive(set);
    let spectral = count_3aps_spectral(set).map_err(Error::at_stage("count_input"))?;
    report.push(
        "count_input",
        json!({ "set": set }),
        set_summary(set),
        json!({ "spectral_value": spectral.real, "spectral_imag": spectral.imag }),
        t,
    );

    let t = Instant::now();
    let split = split_spectrum(set, params.threshold).map_err(Error::at_stage("split_spectrum"))?;
    let parseval_ok = split.parseval_bound_holds(p.get(), set.len());
    if !parseval_ok {
        return Err(Error::at_stage("split_spectrum")(Error::Consistency(
            "M T^2 exceeds p|S|".into(),
        )));
    }
    report.push(
        "split_spectrum",
        json!({ "threshold": params.threshold }),
        serde_json::to_value(&split)?,
        json!({ "parseval_bound": parseval_ok }),
        t,
    );

    let t = Instant::now();
    let spec = BohrSpec::new(p, split.large_freqs.clone(), params.bohr_eps)
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
    let n = SmoothingProgression::new(p, n0, params.length).map_err(Error::at_stage("convolve"))?;
    let conv = convolve(set, &n).map_err(Error::at_stage("convolve"))?;
    let (argmax_m, max_conv) = conv.argmax();
    let flatness = spectrum_flatness(&n, &split.large_freqs);
    report.push(
        "convolve",
        json!({ "n0": n0, "length": params.length }),
        json!({ "max_convolution": max_conv, "argmax_m": argmax_m }),
        json!({ "flatness": flatness }),
        t,
    );

    let extractable = max_conv > 1.0 - params.extract_eps
        && params.extract_eps > 1.0 / params.length as f64
        && params.extract_eps < 1.0;
    if extractable {
        let t = Instant::now();
        let run = extract_ap_from_convolution(set, &n, argmax_m, params.extract_eps)
            .map_err(Error::at_stage("extract_ap"))?;
        report.push(
            "extract_ap",
            json!({ "m": argmax_m, "eps": params.extract_eps }),
            json!({ "run": run }),
            json!({ "contained": run.is_contained_in(set) }),
            t,
        );
        if params.short_circuit {
            report.verdict = format!(
                "concentrated: progression of length {} extracted",
                run.length
            );
            return Ok((set.clone(), report));
        }
    }

    let kappa = (1.0 - target).max(max_conv);
    if kappa >= 1.0 {
        report.verdict = "already concentrated".to_string();
        return Ok((set.clone(), report));
    }
    let t = Instant::now();
    let w = conv.scaled(kappa).map_err(Error::at_stage("weights"))?;
    report.push(
        "weights",
        json!({ "kappa": kappa }),
        json!({ "kappa": kappa, "mass": w.sum(), "values": w.values() }),
        Value::Null,
        t,
    );

    let t = Instant::now();
    let opts = RoundingOptions::with_bound_factor(params.bound_factor);
    let (rounded, cert) = round_to_cardinality(&w, params.seeds.rounding, &opts)
        .map_err(Error::at_stage("round_weights"))?;
    cert.verify(&w, &rounded)
        .map_err(Error::at_stage("round_weights"))?;
    let mut rounded_out = set_summary(&rounded);
    rounded_out["predicted_total_3aps"] = json!(count_s.total as f64 / kappa.powi(3));
    report.push(
        "round_weights",
        json!({ "seed": params.seeds.rounding, "bound_factor": params.bound_factor }),
        rounded_out,
        serde_json::to_value(&cert)?,
        t,
    );

    let t = Instant::now();
    let theta = 1.0 - kappa;
    let two = two_interval_set(p, theta).map_err(Error::at_stage("two_interval_set"))?;
    report.push(
        "two_interval_set",
        json!({ "theta": theta }),
        json!({
            "size_U": two.u.len(),
            "count_U": two.count_u,
            "nontrivial_Ubar": two.nontrivial_ubar,
            "intervals": two.intervals,
        }),
        json!({ "upper_bound": two.upper_bound, "lower_bound_Ubar": two.lower_bound_ubar }),
        t,
    );

    let t = Instant::now();
    let sample = sample_intersection(
        &two.u,
        &rounded,
        params.intersect_eps,
        params.max_draws,
        params.seeds.intersect,
    )
    .map_err(Error::at_stage("sample_intersection"))?;
    let mut inter_out = set_summary(&sample.set);
    inter_out["u"] = json!(sample.u);
    inter_out["v"] = json!(sample.v);
    inter_out["draws"] = json!(sample.draws);
    report.push(
        "sample_intersection",
        json!({ "seed": params.seeds.intersect, "eps": params.intersect_eps }),
        inter_out,
        json!({
            "size_threshold": sample.size_threshold,
            "ap_threshold": sample.ap_threshold,
        }),
        t,
    );

    let t = Instant::now();
    let c = sample.set;
    let final_set = adjust_cardinality(
        &c,
        &WeightFunction::indicator(&c),
        set.len() as u64,
        params.seeds.adjust,
    )
    .map_err(Error::at_stage("adjust_cardinality"))?;
    if final_set.len() != set.len() {
        return Err(Error::at_stage("adjust_cardinality")(Error::Consistency(
            "final cardinality differs from |S|".into(),
        )));
    }
    let count_final = count_3aps_naive(&final_set);
    let improved = count_final.total < count_s.total;
    let mut final_out = set_summary(&final_set);
    final_out["input_total_3aps"] = json!(count_s.total);
    final_out["improved"] = json!(improved);
    report.push(
        "adjust_cardinality",
        json!({ "seed": params.seeds.adjust, "target": set.len() }),
        final_out,
        json!({ "flips": c.len().abs_diff(final_set.len()) }),
        t,
    );
    report.verdict = if improved {
        "improved: C' has fewer progressions than S".to_string()
    } else {
        "not improved at this modulus".to_string()
    };
    Ok((final_set, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(p: u64) -> PrimeModulus {
        PrimeModulus::new(p).unwrap()
    }

    #[test]
    fn affine_examples() {
        let p = pm(7);
        let b = ResidueSet::new(p, [0, 1, 2]);
        assert_eq!(affine_image(&b, 1, 0).unwrap(), b);
        assert_eq!(affine_image(&b, 2, 1).unwrap().members(), vec![1, 3, 5]);
        assert!(affine_image(&b, 7, 1).is_err());
    }

    #[test]
    fn full_b_gives_a() {
        let p = pm(13);
        let a = ResidueSet::new(p, [0, 1, 2, 5, 8]);
        let s = sample_intersection(&a, &ResidueSet::full(p), 0.5, 10, 4).unwrap();
        assert_eq!(s.set, a);
        assert_eq!(s.draws, 1);
    }

    #[test]
    fn draws_can_run_out() {
        let p = pm(13);
        let a = ResidueSet::new(p, [0, 1, 2, 3]);
        // eps tiny: needs |C| >= (1-eps) 16/13, i.e. two elements, and no
        // nontrivial progressions beyond the tiny threshold
        let r = sample_intersection(&a, &a, 1e-9, 0, 1);
        assert!(matches!(r, Err(Error::DrawsExhausted { draws: 0 })));
    }

    #[test]
    fn two_interval_examples() {
        let t = two_interval_set(pm(101), 0.3).unwrap();
        assert_eq!(t.ubar.len(), 31);
        assert_eq!(t.intervals, [(0, 15), (51, 65)]);
        assert!(t.count_u as f64 <= 101.0 * 101.0 * 0.325 + 1010.0);

        let tiny = two_interval_set(pm(101), 1e-6).unwrap();
        assert_eq!(tiny.ubar.members(), vec![0]);
        assert!(tiny.count_u as f64 >= 101.0 * 101.0 - 3.0 * 101.0);

        assert!(two_interval_set(pm(101), 0.0).is_err());
        assert!(two_interval_set(pm(101), 1.0).is_err());
    }

    #[test]
    fn full_set_is_already_concentrated() {
        let p = pm(31);
        let params = ImproveParams {
            threshold: 5.0,
            bohr_eps: 0.2,
            length: 4,
            concentration_target: Some(0.3),
            extract_eps: 0.5,
            bound_factor: 1.0,
            intersect_eps: 0.25,
            max_draws: 1000,
            short_circuit: false,
            seeds: PipelineSeeds::from_base(1),
        };
        let full = ResidueSet::full(p);
        let (c, report) = improve_critical_candidate(&full, &params).unwrap();
        assert_eq!(c, full);
        assert_eq!(report.verdict, "already concentrated");
        assert_eq!(
            report.stage("convolve").unwrap().outputs["max_convolution"],
            json!(1.0)
        );
    }

    #[test]
    fn extraction_short_circuits() {
        let p = pm(31);
        let params = ImproveParams {
            threshold: 5.0,
            bohr_eps: 0.2,
            length: 4,
            concentration_target: Some(0.3),
            extract_eps: 0.5,
            bound_factor: 1.0,
            intersect_eps: 0.25,
            max_draws: 1000,
            short_circuit: true,
            seeds: PipelineSeeds::from_base(1),
        };
        let s = ResidueSet::new(p, 0..10);
        let (c, report) = improve_critical_candidate(&s, &params).unwrap();
        assert_eq!(c, s);
        assert!(report.verdict.starts_with("concentrated"));
        assert!(report.stage("extract_ap").is_some());
    }
}
