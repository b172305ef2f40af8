//! Intrinsic randomness: extract an almost uniform index on `{1..M}` from a
//! block source, measured by `D_f(phi(X^n) || U_M)`.
//!
//! The source is clipped at the smooth min-entropy level `beta0`, renormalized
//! by `A_n = 1 - sum (P - beta0)^+`, and the clipped masses are packed
//! first-fit-decreasing into `M - 1` bins of capacity `1/M`; the last bin takes
//! whatever is left.

use std::collections::BTreeSet;

use num_rational::BigRational;
use serde::Serialize;

use crate::distributions::{FiniteDistribution, SourceBlock};
use crate::error::{Error, Result};
use crate::exact::{ratio, rational_from_f64, Mass};
use crate::exec::Execution;
use crate::fdiv::{divergence_exact, offset, DivergenceValue, FFunction, OffsetFunction};
use crate::resolvability::{sweep, RateEvaluation, RateRequest};
use crate::smooth_entropy::{min_level, smooth_min_entropy, Order};

/// The clipped and renormalized source.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedDistribution<T> {
    pub beta0: T,
    pub a_n: T,
    pub masses: Vec<T>,
    pub clamped: bool,
}

/// `P-bar(x) = min(P(x), beta0) / A_n` with `-log beta0 = Hinf(delta)`.
pub fn modified_distribution<T: Mass>(
    probs: &[T],
    alphabet: u64,
    delta: &T,
) -> ModifiedDistribution<T> {
    let mut sorted = probs.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("comparable"));
    let lvl = min_level(&sorted, alphabet, delta);
    let a_n = T::one() - lvl.residual;
    let masses = probs
        .iter()
        .map(|p| {
            let clipped = if *p > lvl.beta {
                lvl.beta.clone()
            } else {
                p.clone()
            };
            clipped / a_n.clone()
        })
        .collect();
    ModifiedDistribution {
        beta0: lvl.beta,
        a_n,
        masses,
        clamped: lvl.clamped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractorMap {
    pub m: u64,
    /// Atom indices per bin; bin `i` is the output value `i + 1`.
    pub bins: Vec<Vec<usize>>,
    /// Bin of each atom.
    pub assignment: Vec<usize>,
    /// `P(phi(X^n) = i)` per bin.
    pub bin_mass: Vec<f64>,
    pub achieved: DivergenceValue,
    pub f_name: String,
    pub level: f64,
    pub gamma: f64,
    pub n: u32,
    pub beta0: f64,
    pub a_n: f64,
    /// `A_n / beta0 * e^{-n gamma / 2}`, the largest compliant size.
    pub m_bound: f64,
    /// `M` came from the size formula rather than the caller.
    pub formula_m: bool,
    /// `f0(A_n - M beta0)`, an upper bound on the achieved divergence.
    pub bound: f64,
    /// `max(0, f0(A_n (1 - e^{-n gamma/2})) - level)`.
    pub delta_n: f64,
    pub exact: bool,
    #[serde(skip)]
    beta0_exact: Option<BigRational>,
}

impl ExtractorMap {
    pub fn log_m(&self) -> f64 {
        (self.m as f64).ln()
    }
}

struct Packing {
    bins: Vec<Vec<usize>>,
    assignment: Vec<usize>,
}

// First-fit-decreasing over the modified masses. Values are ranked once
// (ascending, ties by descending index) so the "largest remaining atom that
// fits" query is a range lookup on the set of remaining ranks.
fn pack<T: Mass>(masses: &[T], m: u64) -> Result<Packing> {
    let k = masses.len();
    let mut by_rank: Vec<usize> = (0..k).collect();
    by_rank.sort_by(|&a, &b| {
        masses[a]
            .partial_cmp(&masses[b])
            .expect("comparable")
            .then(b.cmp(&a))
    });
    let sorted: Vec<T> = by_rank.iter().map(|&i| masses[i].clone()).collect();
    let mut remaining: BTreeSet<usize> = (0..k).collect();
    let cap = T::one() / T::from_u64(m);
    let mut bins = vec![Vec::new(); m as usize];
    let mut assignment = vec![usize::MAX; k];
    for (b, bin) in bins.iter_mut().enumerate().take(m as usize - 1) {
        let mut room = cap.clone();
        loop {
            let fit = sorted.partition_point(|v| *v <= room);
            let Some(&r) = remaining.range(..fit).next_back() else {
                break;
            };
            remaining.remove(&r);
            let i = by_rank[r];
            room = room - masses[i].clone();
            bin.push(i);
            assignment[i] = b;
        }
    }
    let last = m as usize - 1;
    for r in remaining.into_iter().rev() {
        let i = by_rank[r];
        bins[last].push(i);
        assignment[i] = last;
    }
    for bin in bins.iter_mut() {
        bin.sort_unstable();
    }
    if let Some(i) = bins.iter().position(|b| b.is_empty()) {
        return Err(Error::Invariant(format!("bin {} of {m} is empty", i + 1)));
    }
    Ok(Packing { bins, assignment })
}

fn check_level(f0: &OffsetFunction, level: f64, gamma: f64) -> Result<()> {
    if !(level >= 0.0 && level < f0.at_zero()) {
        return Err(Error::TargetInfeasible {
            level,
            limit: f0.at_zero(),
        });
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::BadParam(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(())
}

/// Builds the extractor with `M = floor(A_n / beta0 * e^{-n gamma / 2})`.
pub fn build_extractor(
    source: &SourceBlock,
    f: &FFunction,
    level: f64,
    gamma: f64,
) -> Result<ExtractorMap> {
    build(source, f, level, gamma, None)
}

/// Builds the extractor for a caller-chosen `M`, which must satisfy
/// `M beta0 <= A_n` so that every clipped mass fits in one bin.
pub fn build_extractor_with_size(
    source: &SourceBlock,
    f: &FFunction,
    level: f64,
    gamma: f64,
    m: u64,
) -> Result<ExtractorMap> {
    build(source, f, level, gamma, Some(m))
}

fn build(
    source: &SourceBlock,
    f: &FFunction,
    level: f64,
    gamma: f64,
    m: Option<u64>,
) -> Result<ExtractorMap> {
    let f0 = offset(f)?;
    check_level(&f0, level, gamma)?;
    let delta = 1.0 - f0.inverse(level)?;
    let dist = &source.dist;
    let alphabet = dist.len() as u64;
    let n = source.n;
    let shrink = (-(n as f64) * gamma / 2.0).exp();

    let formula_m = m.is_none();
    let (packing, beta0, a_n, beta0_exact) = match dist.exact() {
        Some(ex) => {
            let md = modified_distribution(ex, alphabet, &rational_from_f64(delta));
            let p = pack(&md.masses, choose_size(&md, m, shrink)?)?;
            (p, md.beta0.to_f64(), md.a_n.to_f64(), Some(md.beta0))
        }
        None => {
            let md = modified_distribution(dist.probs(), alphabet, &delta);
            let p = pack(&md.masses, choose_size(&md, m, shrink)?)?;
            (p, md.beta0, md.a_n, None)
        }
    };
    let m = packing.bins.len() as u64;
    let bin_mass: Vec<f64> = packing
        .bins
        .iter()
        .map(|b| b.iter().map(|&i| dist.prob(i)).sum())
        .collect();
    let achieved = uniformity(f, &bin_mass);
    Ok(ExtractorMap {
        m,
        bins: packing.bins,
        assignment: packing.assignment,
        bin_mass,
        achieved,
        f_name: f.name().to_string(),
        level,
        gamma,
        n,
        beta0,
        a_n,
        m_bound: a_n / beta0 * shrink,
        formula_m,
        bound: f0.eval((a_n - m as f64 * beta0).max(0.0)),
        delta_n: (f0.eval(a_n * (1.0 - shrink)) - level).max(0.0),
        exact: beta0_exact.is_some(),
        beta0_exact,
    })
}

fn choose_size<T: Mass>(md: &ModifiedDistribution<T>, m: Option<u64>, shrink: f64) -> Result<u64> {
    let ratio = (md.a_n.clone() / md.beta0.clone()).to_f64();
    match m {
        None => {
            let bound = ratio * shrink;
            if bound.is_nan() || bound < 1.0 {
                return Err(Error::MTooSmall { bound });
            }
            Ok(bound.floor() as u64)
        }
        Some(m) => {
            if m == 0 {
                return Err(Error::MTooSmall { bound: 0.0 });
            }
            if T::from_u64(m) * md.beta0.clone() > md.a_n {
                return Err(Error::MTooLarge { m, bound: ratio });
            }
            Ok(m)
        }
    }
}

fn uniformity(f: &FFunction, bin_mass: &[f64]) -> DivergenceValue {
    let m = bin_mass.len() as f64;
    let value: f64 = bin_mass.iter().map(|&p| f.eval(m * p) / m).sum();
    DivergenceValue {
        value,
        finite: value.is_finite(),
    }
}

/// `D_f(phi(X^n) || U_M) = sum_i (1/M) f(M P(phi = i))`.
pub fn achieved_uniformity(
    map: &ExtractorMap,
    source: &FiniteDistribution,
    f: &FFunction,
) -> Result<DivergenceValue> {
    if map.assignment.len() != source.len() {
        return Err(Error::AlphabetMismatch {
            left: map.assignment.len(),
            right: source.len(),
        });
    }
    let mut bin_mass = vec![0.0; map.m as usize];
    for (i, &b) in map.assignment.iter().enumerate() {
        bin_mass[b] += source.prob(i);
    }
    Ok(uniformity(f, &bin_mass))
}

/// Exact uniformity divergence for piecewise-linear generators.
pub fn achieved_uniformity_exact(
    map: &ExtractorMap,
    source: &FiniteDistribution,
    f: &FFunction,
) -> Option<BigRational> {
    let ex = source.exact()?;
    let mut bins = vec![BigRational::from_integer(0.into()); map.m as usize];
    for (i, &b) in map.assignment.iter().enumerate() {
        bins[b] += &ex[i];
    }
    let u = vec![ratio(1, map.m); map.m as usize];
    divergence_exact(f, &bins, &u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinReport {
    /// Disjoint, exhaustive, no empty bin.
    pub partition: bool,
    /// Bins `1..M-1` carry modified mass at most `1/M`.
    pub upper: bool,
    /// Every bin carries modified mass at least `1/M - beta0/A_n`.
    pub lower: bool,
    /// `P(phi = i) >= A_n / M - beta0`, and `>= A_n/M (1 - e^{-n gamma/2})`
    /// when `M` came from the size formula.
    pub induced: bool,
    pub exact: bool,
}

impl BinReport {
    pub fn holds(&self) -> bool {
        self.partition && self.upper && self.lower && self.induced
    }
}

pub fn verify_bins(map: &ExtractorMap, source: &FiniteDistribution) -> BinReport {
    let partition = {
        let mut seen = vec![false; source.len()];
        let mut ok = map.bins.iter().all(|b| !b.is_empty());
        for (bi, b) in map.bins.iter().enumerate() {
            for &i in b {
                ok &= i < seen.len() && !seen[i] && map.assignment[i] == bi;
                if i < seen.len() {
                    seen[i] = true;
                }
            }
        }
        ok && seen.iter().all(|&s| s)
    };
    let shrink = (-(map.n as f64) * map.gamma / 2.0).exp();
    match (source.exact(), &map.beta0_exact) {
        (Some(ex), Some(b0)) => {
            let a_n = exact_a_n(ex, b0);
            let shrink = rational_from_f64(shrink);
            let mut r = verify_in(map, ex, b0.clone(), a_n, shrink, partition);
            r.exact = true;
            r
        }
        _ => {
            let a_n = 1.0 - crate::smooth_entropy::excess_mass(source.probs(), map.beta0);
            let tol = 1e-12;
            verify_float(map, source.probs(), a_n, shrink, partition, tol)
        }
    }
}

fn exact_a_n(probs: &[BigRational], beta0: &BigRational) -> BigRational {
    let mut excess = BigRational::from_integer(0.into());
    for p in probs {
        if p > beta0 {
            excess += p - beta0;
        }
    }
    BigRational::from_integer(1.into()) - excess
}

fn verify_in(
    map: &ExtractorMap,
    probs: &[BigRational],
    beta0: BigRational,
    a_n: BigRational,
    shrink: BigRational,
    partition: bool,
) -> BinReport {
    let m = BigRational::from_integer(map.m.into());
    let inv_m = BigRational::from_integer(1.into()) / &m;
    let modified = |i: usize| {
        let p = &probs[i];
        (if *p > beta0 { beta0.clone() } else { p.clone() }) / &a_n
    };
    let mut upper = true;
    let mut lower = true;
    let mut induced = true;
    let last = map.bins.len() - 1;
    let floor_mod = &inv_m - &beta0 / &a_n;
    let floor_ind = if map.formula_m {
        &a_n / &m * (BigRational::from_integer(1.into()) - &shrink)
    } else {
        &a_n / &m - &beta0
    };
    for (bi, b) in map.bins.iter().enumerate() {
        let sm: BigRational = b.iter().map(|&i| modified(i)).sum();
        let si: BigRational = b.iter().map(|&i| probs[i].clone()).sum();
        if bi < last {
            upper &= sm <= inv_m;
        }
        lower &= sm >= floor_mod;
        induced &= si >= floor_ind;
    }
    BinReport {
        partition,
        upper,
        lower,
        induced,
        exact: false,
    }
}

fn verify_float(
    map: &ExtractorMap,
    probs: &[f64],
    a_n: f64,
    shrink: f64,
    partition: bool,
    tol: f64,
) -> BinReport {
    let m = map.m as f64;
    let b0 = map.beta0;
    let last = map.bins.len() - 1;
    let floor_ind = if map.formula_m {
        a_n / m * (1.0 - shrink)
    } else {
        a_n / m - b0
    };
    let mut r = BinReport {
        partition,
        upper: true,
        lower: true,
        induced: true,
        exact: false,
    };
    for (bi, b) in map.bins.iter().enumerate() {
        let sm: f64 = b.iter().map(|&i| probs[i].min(b0) / a_n).sum();
        let si: f64 = b.iter().map(|&i| probs[i]).sum();
        if bi < last {
            r.upper &= sm <= 1.0 / m + tol;
        }
        r.lower &= sm >= 1.0 / m - b0 / a_n - tol;
        r.induced &= si >= floor_ind - tol;
    }
    r
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicConverse {
    pub holds: bool,
    pub log_m: f64,
    /// `Hinf(1 - f0^{-1}(level))` in nats.
    pub h_inf: f64,
    /// Per-symbol allowance `2 gamma*`, where `gamma*` is the smallest gamma
    /// whose two-point lower bound exceeds the level; `inf` if none does.
    pub slack_budget: f64,
    pub level: f64,
    pub vacuous: bool,
}

/// Any extractor onto `{1..M}` with divergence `level` satisfies
/// `log M <= Hinf(1 - f0^{-1}(level)) + n * slack_budget`.
///
/// For every gamma, at most `e^{H + n gamma}` sequences have probability at
/// least `e^{-(H + n gamma)}`; if `log M > H + 2 n gamma` they occupy a
/// fraction `x <= e^{-n gamma}` of the bins while carrying mass `1 - q`, and
/// the log-sum inequality forces the divergence up to
/// `min_x x f0(1/x) + (1-x) f0(q/(1-x))`.
pub fn intrinsic_converse_check(
    m: u64,
    level: f64,
    source: &SourceBlock,
    f: &FFunction,
) -> Result<IntrinsicConverse> {
    let f0 = offset(f)?;
    let log_m = (m as f64).ln();
    if level.is_nan() || level >= f0.at_zero() {
        return Ok(IntrinsicConverse {
            holds: true,
            log_m,
            h_inf: f64::INFINITY,
            slack_budget: f64::INFINITY,
            level,
            vacuous: true,
        });
    }
    let level = level.max(0.0);
    let delta = (1.0 - f0.inverse(level)?).clamp(0.0, 1.0 - f64::EPSILON);
    let h = smooth_min_entropy(&source.dist, delta)?.value;
    let n = source.n as f64;
    let mut probs: Vec<f64> = source
        .dist
        .probs()
        .iter()
        .copied()
        .filter(|&p| p > 0.0)
        .collect();
    probs.sort_by(|a, b| a.total_cmp(b));
    let budget = match first_violating_gamma(&f0, &probs, h, n, level) {
        Some(g) => 2.0 * g,
        None => f64::INFINITY,
    };
    Ok(IntrinsicConverse {
        holds: log_m <= h + n * budget + 1e-9,
        log_m,
        h_inf: h,
        slack_budget: budget,
        level,
        vacuous: false,
    })
}

/// `min over x in [0, e^{-n gamma}]` of the two-point divergence bound.
pub fn two_point_bound(f0: &OffsetFunction, ascending: &[f64], h: f64, n: f64, gamma: f64) -> f64 {
    let threshold = -(h + n * gamma);
    let below = ascending.partition_point(|&p| p.ln() < threshold);
    let q: f64 = ascending[..below].iter().sum();
    let phi = |x: f64| {
        let head = if x > 0.0 { x * f0.eval(1.0 / x) } else { 0.0 };
        head + (1.0 - x) * f0.eval(q / (1.0 - x))
    };
    let hi = (-n * gamma).exp().min(1.0 - 1e-15);
    // phi is convex in x: golden-section search plus the endpoints
    let (mut a, mut b) = (0.0f64, hi);
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if phi(c) <= phi(d) {
            b = d;
        } else {
            a = c;
        }
    }
    phi(0.0).min(phi(hi)).min(phi(0.5 * (a + b)))
}

fn first_violating_gamma(
    f0: &OffsetFunction,
    ascending: &[f64],
    h: f64,
    n: f64,
    level: f64,
) -> Option<f64> {
    let exceeds = |g: f64| two_point_bound(f0, ascending, h, n, g) > level;
    let mut hi = 1e-3;
    while !exceeds(hi) {
        hi *= 2.0;
        if hi > 1e4 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if exceeds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Some(hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionOptimum {
    pub m: usize,
    pub divergence: f64,
    /// Bin of each atom for one minimizer (first in enumeration order).
    pub assignment: Vec<usize>,
}

/// Exhaustive minimum of `D_f(phi(X) || U_M)` over every map of the atoms
/// into `M` bins (empty bins allowed). Bins are interchangeable, so only
/// canonical labelings are enumerated.
pub fn exhaustive_min_divergence(
    probs: &[f64],
    m: usize,
    f: &FFunction,
    exec: Execution,
) -> Result<PartitionOptimum> {
    let k = probs.len();
    if k > 12 {
        return Err(Error::TooLarge {
            size: k as u128,
            limit: 12,
        });
    }
    if m == 0 {
        return Err(Error::BadParam("M must be positive".into()));
    }
    let labelings = canonical_labelings(k, m);
    let eval = |idx: u64| {
        let lab = &labelings[idx as usize];
        let mut mass = vec![0.0; m];
        for (i, &b) in lab.iter().enumerate() {
            mass[b as usize] += probs[i];
        }
        uniformity(f, &mass).value
    };
    let (best, divergence) = exec
        .min_by_key_range(labelings.len() as u64, eval)
        .expect("at least one labeling");
    Ok(PartitionOptimum {
        m,
        divergence,
        assignment: labelings[best as usize]
            .iter()
            .map(|&b| b as usize)
            .collect(),
    })
}

/// Restricted growth strings of length `k` with at most `m` distinct values.
fn canonical_labelings(k: usize, m: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(k: usize, m: usize, used: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for b in 0..(used + 1).min(m) {
            cur.push(b as u8);
            rec(k, m, used.max(b + 1), cur, out);
            cur.pop();
        }
    }
    rec(k, m, 0, &mut cur, &mut out);
    out
}

/// Per-n `(1/n) Hinf(1 - f0^{-1}(level + nu) | X^n)` over an i.i.d. family.
pub fn ir_rate_formula(
    base: &FiniteDistribution,
    f: &FFunction,
    req: &RateRequest,
) -> Result<Vec<RateEvaluation>> {
    sweep(base, f, req, Order::Min)
}
