//! Resolvability: approximate a block source by a deterministic map applied to
//! a uniform index on `{1..M}`, measured by `D_f(X^n || phi(U_M))`.
//!
//! The construction takes the smallest high-probability set `B` with
//! `Pr(B) >= f0^{-1}(D)`, conditions the source on it, and quantizes the
//! conditional masses to multiples of `1/M` with `M = ceil(|B| e^{n gamma})`.

use num_rational::BigRational;
use num_traits::Zero;
use serde::Serialize;

use crate::distributions::{iid_power, FiniteDistribution, SourceBlock};
use crate::error::{Error, Result};
use crate::exact::{ratio, rational_from_f64, Mass};
use crate::exec::Execution;
use crate::fdiv::{divergence_exact, divergence_of, offset, DivergenceValue, FFunction};
use crate::smooth_entropy::{
    max_set_size_exact, smooth_max_entropy, smooth_min_entropy, Order, SourceRef,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageEntry {
    pub index: usize,
    pub label: String,
    /// Number of indices in `{1..M}` mapped to this sequence.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvabilityMap {
    pub m: u64,
    /// Image sequences in ascending conditional mass; the last entry absorbs
    /// the quantization overflow.
    pub image: Vec<ImageEntry>,
    /// Pull-back count per source atom (zero outside the image).
    pub counts: Vec<u64>,
    pub achieved: DivergenceValue,
    pub f_name: String,
    pub level: f64,
    pub gamma: f64,
    pub n: u32,
    /// `f0^{-1}(D)`.
    pub coverage: f64,
    /// Members of the high-probability set, by descending mass.
    pub set: Vec<usize>,
    pub set_mass: f64,
    /// Per-instance bound `(1 - P~*) f0(Pr B) + (P-bar* + e^{-n gamma}) f0(...)`.
    pub bound: f64,
    /// `achieved <= level + slack`; equals `e^{-n gamma}` for half-variational.
    pub slack: f64,
    pub exact: bool,
}

impl ResolvabilityMap {
    pub fn log_m(&self) -> f64 {
        (self.m as f64).ln()
    }

    pub fn induced_probs(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&c| c as f64 / self.m as f64)
            .collect()
    }

    pub fn induced_exact(&self) -> Vec<BigRational> {
        self.counts.iter().map(|&c| ratio(c, self.m)).collect()
    }

    /// Distribution of `phi(U_M)` over the source alphabet.
    pub fn induced(&self, source: &FiniteDistribution) -> Result<FiniteDistribution> {
        FiniteDistribution::from_rationals(source.labels().to_vec(), self.induced_exact())
    }
}

struct Quantized {
    m: u64,
    set: Vec<usize>,
    /// Construction set in ascending conditional mass.
    arranged: Vec<usize>,
    counts: Vec<u64>,
}

fn quantize<T: Mass>(probs: &[T], coverage: &T, n: u32, gamma: f64) -> Result<Quantized> {
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b]
            .partial_cmp(&probs[a])
            .expect("comparable")
            .then(a.cmp(&b))
    });
    let mut acc = T::zero();
    let mut size = 0;
    for &i in &order {
        if acc.covers(coverage) || probs[i].is_zero() {
            break;
        }
        acc = acc + probs[i].clone();
        size += 1;
    }
    if size == 0 || !acc.covers(coverage) {
        return Err(Error::DegenerateSupport);
    }
    let set: Vec<usize> = order[..size].to_vec();
    let pr_b = acc;

    let m_real = size as f64 * (n as f64 * gamma).exp();
    if m_real.is_nan() || m_real >= 4.0e18 {
        return Err(Error::Overflow {
            what: format!("M = {size} e^(n gamma) with n = {n}, gamma = {gamma}"),
        });
    }
    let m = m_real.ceil() as u64;
    let mt = T::from_u64(m);

    let cond: Vec<T> = set
        .iter()
        .map(|&i| probs[i].clone() / pr_b.clone())
        .collect();
    let mut arranged: Vec<(usize, T)> = set
        .iter()
        .zip(&cond)
        .filter(|(_, c)| (*c).clone() * mt.clone() >= T::one())
        .map(|(&i, c)| (i, c.clone()))
        .collect();
    arranged.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .expect("comparable")
            .then(a.0.cmp(&b.0))
    });
    if arranged.is_empty() {
        return Err(Error::DegenerateSupport);
    }

    let mut counts = vec![0u64; probs.len()];
    let last = arranged.len() - 1;
    let mut used = 0u64;
    for (i, c) in &arranged[..last] {
        let k = (c.clone() * mt.clone()).floor_u64();
        counts[*i] = k;
        used += k;
    }
    if used >= m {
        return Err(Error::Invariant(format!(
            "quantization used {used} of {m} indices before the last image point"
        )));
    }
    counts[arranged[last].0] = m - used;
    Ok(Quantized {
        m,
        set,
        arranged: arranged.into_iter().map(|(i, _)| i).collect(),
        counts,
    })
}

/// Builds the map for an explicit block source. Exact rational arithmetic is
/// used throughout the quantization when the source carries exact masses.
pub fn build_resolvability_map(
    source: &SourceBlock,
    f: &FFunction,
    level: f64,
    gamma: f64,
) -> Result<ResolvabilityMap> {
    let f0 = offset(f)?;
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
    let coverage = f0.inverse(level)?;
    let dist = &source.dist;
    let q = match dist.exact() {
        Some(ex) => quantize(ex, &rational_from_f64(coverage), source.n, gamma)?,
        None => quantize(dist.probs(), &coverage, source.n, gamma)?,
    };

    let set_mass: f64 = match dist.exact() {
        Some(ex) => q
            .set
            .iter()
            .map(|&i| ex[i].clone())
            .fold(BigRational::zero(), |a, b| a + b)
            .to_f64(),
        None => q.set.iter().map(|&i| dist.prob(i)).sum(),
    };
    let star = *q.arranged.last().expect("nonempty");
    let p_star = dist.prob(star);
    let cond_star = p_star / set_mass;
    let induced_star = q.counts[star] as f64 / q.m as f64;
    let e = (-(source.n as f64) * gamma).exp();
    let g_b = f0.eval(set_mass);
    let tail = (cond_star + e) * f0.eval(p_star / (cond_star + e));
    let bound = (1.0 - induced_star) * g_b + tail;
    let slack = tail - cond_star * g_b;

    let image = q
        .arranged
        .iter()
        .map(|&i| ImageEntry {
            index: i,
            label: dist.labels()[i].clone(),
            count: q.counts[i],
        })
        .collect();
    let mut map = ResolvabilityMap {
        m: q.m,
        image,
        counts: q.counts,
        achieved: DivergenceValue {
            value: 0.0,
            finite: true,
        },
        f_name: f.name().to_string(),
        level,
        gamma,
        n: source.n,
        coverage,
        set: q.set,
        set_mass,
        bound,
        slack,
        exact: dist.exact().is_some(),
    };
    map.achieved = achieved_divergence(&map, dist, f)?;
    Ok(map)
}

/// `D_f(X^n || phi(U_M))`, with the induced distribution as second argument.
pub fn achieved_divergence(
    map: &ResolvabilityMap,
    source: &FiniteDistribution,
    f: &FFunction,
) -> Result<DivergenceValue> {
    if map.counts.len() != source.len() {
        return Err(Error::AlphabetMismatch {
            left: map.counts.len(),
            right: source.len(),
        });
    }
    Ok(divergence_of(f, source.probs(), &map.induced_probs()))
}

/// Exact achieved divergence for piecewise-linear generators on exact sources.
pub fn achieved_divergence_exact(
    map: &ResolvabilityMap,
    source: &FiniteDistribution,
    f: &FFunction,
) -> Option<BigRational> {
    divergence_exact(f, source.exact()?, &map.induced_exact())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct QuantizationReport {
    /// `0 <= P-bar(x_i) - P~(x_i) < 1/M` for every image point but the last.
    pub sandwich: bool,
    /// `P~(x*) - P-bar(x*) <= |B|/M <= e^{-n gamma}`.
    pub overflow: bool,
    /// Image inside the high-probability set.
    pub support: bool,
    pub exact: bool,
}

impl QuantizationReport {
    pub fn holds(&self) -> bool {
        self.sandwich && self.overflow && self.support
    }
}

/// Re-derives the quantization inequalities of a built map, in exact
/// arithmetic when the source has rational masses.
pub fn verify_quantization(
    map: &ResolvabilityMap,
    source: &FiniteDistribution,
) -> QuantizationReport {
    match source.exact() {
        Some(ex) => {
            let e_bound = rational_from_f64((-(map.n as f64) * map.gamma).exp());
            let mut r = verify_in(map, ex, Some(e_bound));
            r.exact = true;
            r
        }
        None => {
            let e_bound = (-(map.n as f64) * map.gamma).exp() * (1.0 + 1e-12);
            verify_in(map, source.probs(), Some(e_bound))
        }
    }
}

fn verify_in<T: Mass>(
    map: &ResolvabilityMap,
    probs: &[T],
    e_bound: Option<T>,
) -> QuantizationReport {
    let m = T::from_u64(map.m);
    let inv_m = T::one() / m.clone();
    let pr_b = map.set.iter().fold(T::zero(), |a, &i| a + probs[i].clone());
    let last = map.image.len() - 1;
    let mut sandwich = true;
    for entry in &map.image[..last] {
        let cond = probs[entry.index].clone() / pr_b.clone();
        let induced = T::from_u64(entry.count) / m.clone();
        let gap = cond - induced;
        sandwich &= gap >= T::zero() && gap < inv_m;
    }
    let star = &map.image[last];
    let over = T::from_u64(star.count) / m.clone() - probs[star.index].clone() / pr_b;
    let set_ratio = T::from_u64(map.set.len() as u64) / m;
    let mut overflow = over <= set_ratio;
    if let Some(e) = e_bound {
        overflow &= set_ratio <= e;
    }
    let support = map
        .counts
        .iter()
        .enumerate()
        .all(|(i, &c)| c == 0 || map.set.contains(&i));
    QuantizationReport {
        sandwich,
        overflow,
        support,
        exact: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConverseOutcome {
    pub holds: bool,
    pub log_m: f64,
    /// The entropy lower bound on `log M`; 0 when the level is vacuous.
    pub bound: f64,
    pub level: f64,
    /// Measured level at or above `f0(0)`: the bound says nothing.
    pub vacuous: bool,
    pub exact: bool,
}

/// Any mapping `{1..M} -> X^n` with `D_f <= level` needs
/// `log M >= H0(1 - f0^{-1}(level))`. Floating comparison with slack `1e-9`.
pub fn converse_check(
    m: u64,
    level: f64,
    source: &FiniteDistribution,
    f: &FFunction,
) -> Result<ConverseOutcome> {
    let f0 = offset(f)?;
    let log_m = (m as f64).ln();
    if level.is_nan() || level >= f0.at_zero() {
        return Ok(ConverseOutcome {
            holds: true,
            log_m,
            bound: 0.0,
            level,
            vacuous: true,
            exact: false,
        });
    }
    let t = f0.inverse(level.max(0.0))?;
    let delta = (1.0 - t).clamp(0.0, 1.0 - f64::EPSILON);
    let bound = smooth_max_entropy(source, delta)?.value;
    Ok(ConverseOutcome {
        holds: log_m >= bound - 1e-9,
        log_m,
        bound,
        level,
        vacuous: false,
        exact: false,
    })
}

/// Exact converse test for piecewise-linear generators: the level is an exact
/// rational and `log M >= H0` reduces to `M >= |B|`. `None` for curved `f`.
pub fn converse_check_exact(
    m: u64,
    level: &BigRational,
    probs: &[BigRational],
    f: &FFunction,
) -> Option<ConverseOutcome> {
    let f0 = offset(f).ok()?;
    let t = f0.inverse_exact(level)?;
    let log_m = (m as f64).ln();
    let level_f = level.to_f64();
    if t <= BigRational::zero() {
        return Some(ConverseOutcome {
            holds: true,
            log_m,
            bound: 0.0,
            level: level_f,
            vacuous: true,
            exact: true,
        });
    }
    let size = max_set_size_exact(probs, &t);
    Some(ConverseOutcome {
        holds: m >= size,
        log_m,
        bound: (size as f64).ln(),
        level: level_f,
        vacuous: false,
        exact: true,
    })
}

/// Pull-back counts of an arbitrary mapping given as `assignment[u] = atom`.
pub fn counts_of_mapping(assignment: &[usize], alphabet: usize) -> Vec<u64> {
    let mut counts = vec![0u64; alphabet];
    for &a in assignment {
        counts[a] += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRequest {
    pub level: f64,
    pub nu: Vec<f64>,
    pub n: Vec<u32>,
    /// Reference rate for the second-order column.
    pub rate: Option<f64>,
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateEvaluation {
    pub n: u32,
    pub nu: f64,
    /// Smoothing argument `1 - f0^{-1}(level + nu)`.
    pub delta: f64,
    /// Smooth entropy in nats.
    pub value: f64,
    pub first_order: f64,
    pub second_order: Option<f64>,
    /// `(1/n) H(1 - f0^{-1}(level) + nu)`, the alternative expression; absent
    /// when the argument leaves `[0, 1)`.
    pub alt_first_order: Option<f64>,
}

/// Per-n `(1/n) H0(1 - f0^{-1}(D + nu) | X^n)` over an i.i.d. family.
pub fn rate_formula(
    base: &FiniteDistribution,
    f: &FFunction,
    req: &RateRequest,
) -> Result<Vec<RateEvaluation>> {
    sweep(base, f, req, Order::Max)
}

pub(crate) fn sweep(
    base: &FiniteDistribution,
    f: &FFunction,
    req: &RateRequest,
    order: Order,
) -> Result<Vec<RateEvaluation>> {
    let f0 = offset(f)?;
    if req.n.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadParam("n list must be strictly increasing".into()));
    }
    let t0 = f0.inverse(req.level)?;
    let mut deltas = Vec::with_capacity(req.nu.len());
    for &nu in &req.nu {
        if nu < 0.0 {
            return Err(Error::BadParam(format!("nu must be nonnegative, got {nu}")));
        }
        let t = f0.inverse(req.level + nu)?;
        let alt = 1.0 - t0 + nu;
        deltas.push((nu, 1.0 - t, (alt < 1.0).then_some(alt)));
    }
    let cells: Vec<Result<Vec<RateEvaluation>>> = req.exec.map(&req.n, |&n| {
        let view = iid_power(base, n)?;
        let src = SourceRef::Product(&view);
        let entropy = |d: f64| match order {
            Order::Max => smooth_max_entropy(src, d).map(|r| r.value),
            Order::Min => smooth_min_entropy(src, d).map(|r| r.value),
        };
        let nf = n as f64;
        deltas
            .iter()
            .map(|&(nu, delta, alt)| {
                let value = entropy(delta)?;
                let alt_first_order = match alt {
                    Some(a) => Some(entropy(a)? / nf),
                    None => None,
                };
                Ok(RateEvaluation {
                    n,
                    nu,
                    delta,
                    value,
                    first_order: value / nf,
                    second_order: req.rate.map(|r| (value - nf * r) / nf.sqrt()),
                    alt_first_order,
                })
            })
            .collect()
    });
    let mut out = Vec::new();
    for c in cells {
        out.extend(c?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{materialize, SourceSpec};
    use crate::fdiv::FFunction;

    fn bern(p: f64) -> FiniteDistribution {
        SourceSpec::Bernoulli { bernoulli: p }.build().unwrap()
    }

    #[test]
    fn exact_copy_of_uniform() {
        let src = SourceBlock::single(FiniteDistribution::uniform(2).unwrap());
        let f = FFunction::half_variational();
        // e^{gamma} rounds to 1 in double precision, so M = |B| = 2
        let map = build_resolvability_map(&src, &f, 0.0, 1e-17).unwrap();
        assert_eq!(map.m, 2);
        assert_eq!(map.counts, vec![1, 1]);
        assert_eq!(map.achieved.value, 0.0);
        // any visible gamma forces one spare index
        let map = build_resolvability_map(&src, &f, 0.0, 1e-9).unwrap();
        assert_eq!(map.m, 3);
        assert!(verify_quantization(&map, &src.dist).holds());
    }

    #[test]
    fn bernoulli_square_example() {
        let src = materialize(&bern(0.3), 2).unwrap();
        let f = FFunction::half_variational();
        let map = build_resolvability_map(&src, &f, 0.2, 0.1).unwrap();
        assert_eq!(map.set.len(), 3);
        assert_eq!(map.m, (3.0 * 0.2f64.exp()).ceil() as u64);
        assert_eq!(map.counts.iter().sum::<u64>(), map.m);
        let rep = verify_quantization(&map, &src.dist);
        assert!(rep.holds() && rep.exact);
        // two routes to the same number
        let direct: f64 = src
            .dist
            .probs()
            .iter()
            .zip(map.induced_probs())
            .map(|(p, q)| (p - q).max(0.0))
            .sum();
        assert!((map.achieved.value - direct).abs() < 1e-12);
        let ex = achieved_divergence_exact(&map, &src.dist, &f).unwrap();
        assert!((ex.to_f64() - direct).abs() < 1e-15);
        assert!(map.achieved.value <= map.bound + 1e-12);
        assert!(map.achieved.value <= 0.2 + map.slack + 1e-12);
        assert!((map.slack - (-0.2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn reverse_kl_at_twelve() {
        let src = materialize(&bern(0.11), 12).unwrap();
        let f = FFunction::reverse_kl();
        let map = build_resolvability_map(&src, &f, 0.1, 0.05).unwrap();
        assert!(verify_quantization(&map, &src.dist).holds());
        assert!(map.achieved.finite);
        assert!(map.achieved.value <= map.bound + 1e-12);
        assert!(map.achieved.value <= 0.1 + map.slack + 1e-12);
    }

    #[test]
    fn kl_outside_image_is_infinite() {
        let src = materialize(&bern(0.3), 3).unwrap();
        let map = build_resolvability_map(&src, &FFunction::half_variational(), 0.3, 0.1).unwrap();
        assert!(map.counts.contains(&0));
        let d = achieved_divergence(&map, &src.dist, &FFunction::kl()).unwrap();
        assert!(!d.finite);
    }

    #[test]
    fn infeasible_levels() {
        let src = materialize(&bern(0.3), 2).unwrap();
        assert!(matches!(
            build_resolvability_map(&src, &FFunction::half_variational(), 1.0, 0.1),
            Err(Error::TargetInfeasible { .. })
        ));
        assert!(matches!(
            build_resolvability_map(&src, &FFunction::kl(), 0.1, 0.1),
            Err(Error::C2PrimeViolated(_))
        ));
    }

    #[test]
    fn converse_on_constructed_and_copy() {
        let src = materialize(&bern(0.3), 3).unwrap();
        for f in [
            FFunction::half_variational(),
            FFunction::hellinger(),
            FFunction::reverse_kl(),
        ] {
            let map = build_resolvability_map(&src, &f, 0.15, 0.2).unwrap();
            let c = converse_check(map.m, map.achieved.value, &src.dist, &f).unwrap();
            assert!(c.holds, "{}", f.name());
        }
        let d = &src.dist;
        let c = converse_check(8, 0.0, d, &FFunction::half_variational()).unwrap();
        assert!(c.holds && (c.bound - 8f64.ln()).abs() < 1e-12);
        let ex = converse_check_exact(
            8,
            &BigRational::zero(),
            d.exact().unwrap(),
            &FFunction::variational(),
        )
        .unwrap();
        assert!(ex.holds);
        let ex = converse_check_exact(
            7,
            &BigRational::zero(),
            d.exact().unwrap(),
            &FFunction::variational(),
        )
        .unwrap();
        assert!(!ex.holds);
    }

    #[test]
    fn rate_rows_and_e_gamma() {
        let base = bern(0.3);
        let req = RateRequest {
            level: 0.2,
            nu: vec![0.1, 0.01],
            n: vec![4, 8, 16],
            rate: Some(0.6),
            exec: Execution::Sequential,
        };
        let hv = rate_formula(&base, &FFunction::half_variational(), &req).unwrap();
        assert_eq!(hv.len(), 6);
        for g in [1.0, 1.5, 5.0] {
            let eg = rate_formula(&base, &FFunction::e_gamma(g).unwrap(), &req).unwrap();
            assert_eq!(eg, hv);
        }
        let par = rate_formula(
            &base,
            &FFunction::half_variational(),
            &RateRequest {
                exec: Execution::Parallel,
                ..req.clone()
            },
        )
        .unwrap();
        assert_eq!(par, hv);
        for pair in hv.chunks(2) {
            assert!(pair[0].first_order <= pair[1].first_order + 1e-15);
        }
        let bad = RateRequest {
            n: vec![8, 4],
            ..req
        };
        assert!(rate_formula(&base, &FFunction::half_variational(), &bad).is_err());
    }

    #[test]
    fn uniform_rates_are_ceil_counts() {
        let base = FiniteDistribution::uniform(3).unwrap();
        let req = RateRequest {
            level: 0.2,
            nu: vec![0.0],
            n: vec![5],
            rate: None,
            exec: Execution::Sequential,
        };
        let r = rate_formula(&base, &FFunction::half_variational(), &req).unwrap();
        let want = (0.8f64 * 243.0).ceil().ln() / 5.0;
        assert!((r[0].first_order - want).abs() < 1e-12);
    }
}
