//! Smooth max entropy `H0(delta)` (log of the smallest set with mass at least
//! `1 - delta`) and smooth min entropy `Hinf(delta)` (`-log` of the smallest
//! clipping level `beta >= 1/|X|` whose excess mass is at most `delta`).

use num_bigint::BigUint;
use num_traits::Zero;
use serde::Serialize;

use crate::distributions::{FiniteDistribution, ProductSourceView, SourceBlock};
use crate::error::{Error, Result};
use crate::exact::{biguint_ceil_exp, ln_biguint, Mass, MASS_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Max,
    Min,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    Max {
        set_size: BigUint,
        mass: f64,
    },
    Min {
        /// `ln beta`; `beta` itself may underflow at large `n`.
        ln_beta: f64,
        residual: f64,
        clamped: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothEntropyResult {
    pub order: Order,
    pub delta: f64,
    /// Nats.
    pub value: f64,
    pub witness: Witness,
}

impl SmoothEntropyResult {
    pub fn beta(&self) -> Option<f64> {
        match self.witness {
            Witness::Min { ln_beta, .. } => Some(ln_beta.exp()),
            Witness::Max { .. } => None,
        }
    }

    pub fn set_size(&self) -> Option<&BigUint> {
        match &self.witness {
            Witness::Max { set_size, .. } => Some(set_size),
            Witness::Min { .. } => None,
        }
    }
}

/// Anything the smooth entropies can be computed on.
#[derive(Debug, Clone, Copy)]
pub enum SourceRef<'a> {
    Atoms(&'a FiniteDistribution),
    Product(&'a ProductSourceView),
}

impl<'a> From<&'a FiniteDistribution> for SourceRef<'a> {
    fn from(d: &'a FiniteDistribution) -> Self {
        SourceRef::Atoms(d)
    }
}

impl<'a> From<&'a SourceBlock> for SourceRef<'a> {
    fn from(b: &'a SourceBlock) -> Self {
        SourceRef::Atoms(&b.dist)
    }
}

impl<'a> From<&'a ProductSourceView> for SourceRef<'a> {
    fn from(v: &'a ProductSourceView) -> Self {
        SourceRef::Product(v)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::BadParam(format!(
            "delta must lie in [0,1), got {delta}"
        )));
    }
    Ok(())
}

pub fn smooth_max_entropy<'a>(
    source: impl Into<SourceRef<'a>>,
    delta: f64,
) -> Result<SmoothEntropyResult> {
    check_delta(delta)?;
    let (set_size, mass) = match source.into() {
        SourceRef::Atoms(d) => {
            let (k, mass) = max_prefix_f64(&sorted_desc(d.probs()), 1.0 - delta);
            (BigUint::from(k), mass)
        }
        SourceRef::Product(v) => max_prefix_classes(v, 1.0 - delta),
    };
    Ok(SmoothEntropyResult {
        order: Order::Max,
        delta,
        value: ln_biguint(&set_size),
        witness: Witness::Max { set_size, mass },
    })
}

pub fn smooth_min_entropy<'a>(
    source: impl Into<SourceRef<'a>>,
    delta: f64,
) -> Result<SmoothEntropyResult> {
    check_delta(delta)?;
    let (ln_beta, residual, clamped) = match source.into() {
        SourceRef::Atoms(d) => {
            let sorted = sorted_desc(d.probs());
            let level = min_level(&sorted, d.len() as u64, &delta);
            (level.beta.ln(), level.residual, level.clamped)
        }
        SourceRef::Product(v) => min_level_classes(v, delta),
    };
    Ok(SmoothEntropyResult {
        order: Order::Min,
        delta,
        value: -ln_beta,
        witness: Witness::Min {
            ln_beta,
            residual,
            clamped,
        },
    })
}

fn sorted_desc<T: Mass>(probs: &[T]) -> Vec<T> {
    let mut v = probs.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).expect("masses are comparable"));
    v
}

/// Shortest prefix of descending masses covering `target`. Returns the prefix
/// length and its mass.
pub fn max_prefix<T: Mass>(sorted_desc: &[T], target: &T) -> (u64, T) {
    let mut acc = T::zero();
    if acc.covers(target) {
        return (0, acc);
    }
    for (k, p) in sorted_desc.iter().enumerate() {
        acc = acc + p.clone();
        if acc.covers(target) {
            return (k as u64 + 1, acc);
        }
    }
    (sorted_desc.len() as u64, acc)
}

/// Float prefix with compensated summation, so the covering test is not
/// perturbed by the order of accumulation.
pub fn max_prefix_f64(sorted_desc: &[f64], target: f64) -> (u64, f64) {
    let mut acc = Neumaier::default();
    if acc.value().covers(&target) {
        return (0, 0.0);
    }
    for (k, &p) in sorted_desc.iter().enumerate() {
        acc.add(p);
        if acc.value().covers(&target) {
            return (k as u64 + 1, acc.value());
        }
    }
    (sorted_desc.len() as u64, acc.value())
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct Neumaier {
    sum: f64,
    carry: f64,
}

impl Neumaier {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

fn max_prefix_classes(v: &ProductSourceView, target: f64) -> (BigUint, f64) {
    let mut count = BigUint::zero();
    let mut sum = Neumaier::default();
    if 0.0.covers(&target) {
        return (count, 0.0);
    }
    for c in v.classes() {
        let acc = sum.value();
        if (acc + c.mass).covers(&target) {
            let need = target - MASS_TOL - acc;
            let ln_k = need.ln() - c.ln_prob;
            let k = if ln_k < 50.0 {
                let k = (need / c.per_sequence_prob()).ceil().max(1.0);
                BigUint::from(k as u64)
            } else {
                biguint_ceil_exp(ln_k)
            };
            let k = k.min(c.multiplicity.clone());
            let part = (ln_biguint(&k) + c.ln_prob).exp();
            return (count + k, acc + part);
        }
        sum.add(c.mass);
        count += &c.multiplicity;
    }
    (count, sum.value())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinLevel<T> {
    pub beta: T,
    pub residual: T,
    pub clamped: bool,
}

/// Water-filling: smallest `beta >= 1/alphabet` with `sum (P - beta)^+ <= delta`.
/// `sorted_desc` holds the masses in descending order.
pub fn min_level<T: Mass>(sorted_desc: &[T], alphabet: u64, delta: &T) -> MinLevel<T> {
    let floor = T::one() / T::from_u64(alphabet);
    let mut head = T::zero();
    let mut beta = T::zero();
    let len = sorted_desc.len();
    for k in 1..=len {
        head = head + sorted_desc[k - 1].clone();
        let kk = T::from_u64(k as u64);
        let next = if k < len {
            sorted_desc[k].clone()
        } else {
            T::zero()
        };
        let at_next = head.clone() - kk.clone() * next.clone();
        if at_next > *delta {
            // the solution lies on this piece
            beta = (head.clone() - delta.clone()) / kk;
            break;
        }
    }
    let clamped = beta.partial_cmp(&floor) != Some(std::cmp::Ordering::Greater);
    if clamped {
        beta = floor;
    }
    let residual = sorted_desc
        .iter()
        .filter(|p| **p > beta)
        .fold(T::zero(), |acc, p| acc + (p.clone() - beta.clone()));
    MinLevel {
        beta,
        residual,
        clamped,
    }
}

fn min_level_classes(v: &ProductSourceView, delta: f64) -> (f64, f64, bool) {
    let ln_floor = -v.ln_alphabet_size();
    let classes = v.classes();
    let mut head = 0.0;
    let mut count = BigUint::zero();
    let mut ln_beta = f64::NEG_INFINITY;
    for (k, c) in classes.iter().enumerate() {
        head += c.mass;
        count += &c.multiplicity;
        let ln_count = ln_biguint(&count);
        let at_next = match classes.get(k + 1) {
            Some(next) => head - (ln_count + next.ln_prob).exp(),
            None => head,
        };
        if at_next > delta {
            ln_beta = (head - delta).ln() - ln_count;
            break;
        }
    }
    let clamped = ln_beta.is_nan() || ln_beta <= ln_floor;
    if clamped {
        ln_beta = ln_floor;
    }
    let residual: f64 = classes
        .iter()
        .take_while(|c| c.ln_prob > ln_beta)
        .map(|c| c.mass - (c.ln_multiplicity + ln_beta).exp())
        .sum();
    (ln_beta, residual.max(0.0), clamped)
}

/// `sum (P - beta)^+`, the excess mass above a clipping level.
pub fn excess_mass(probs: &[f64], beta: f64) -> f64 {
    probs.iter().map(|&p| (p - beta).max(0.0)).sum()
}

/// Exhaustive minimum of `log |A|` over subsets with mass at least `1 - delta`.
pub fn oracle_max_entropy(dist: &FiniteDistribution, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let k = dist.len();
    if k > 20 {
        return Err(Error::TooLarge {
            size: k as u128,
            limit: 20,
        });
    }
    let p = dist.probs();
    let target = 1.0 - delta;
    let mut mass = vec![0.0f64; 1 << k];
    let mut best = u32::MAX;
    for mask in 1usize..(1 << k) {
        let low = mask.trailing_zeros() as usize;
        mass[mask] = mass[mask & (mask - 1)] + p[low];
        let size = mask.count_ones();
        if size < best && mass[mask].covers(&target) {
            best = size;
        }
    }
    if target <= MASS_TOL {
        best = 0;
    }
    Ok(if best == 0 {
        f64::NEG_INFINITY
    } else {
        (best as f64).ln()
    })
}

/// Grid search for the smallest admissible clipping level, refined by
/// bisection inside the bracketing piece. Independent of [`min_level`].
pub fn oracle_min_entropy(dist: &FiniteDistribution, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let k = dist.len();
    if k > 10_000 {
        return Err(Error::TooLarge {
            size: k as u128,
            limit: 10_000,
        });
    }
    let p = dist.probs();
    let g = |beta: f64| excess_mass(p, beta);
    let mut knots: Vec<f64> = p.to_vec();
    knots.push(0.0);
    knots.sort_by(|a, b| a.total_cmp(b));
    knots.dedup();
    // first knot (ascending) where the excess is already small enough
    let hi_idx = knots
        .iter()
        .position(|&b| g(b) <= delta)
        .expect("the largest mass has zero excess");
    let mut beta = knots[hi_idx];
    if hi_idx > 0 {
        let (mut lo, mut hi) = (knots[hi_idx - 1], knots[hi_idx]);
        let steps = 1000;
        for i in 1..=steps {
            let b = lo + (hi - lo) * i as f64 / steps as f64;
            if g(b) <= delta {
                hi = b;
                lo = lo + (hi - lo) * (i - 1) as f64 / i as f64;
                break;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) <= delta {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        beta = hi;
    }
    let beta = beta.max(1.0 / k as f64);
    Ok(-beta.ln())
}

/// `H0` in exact arithmetic over rational masses: the size of the smallest
/// set whose mass is at least `target`.
pub fn max_set_size_exact(
    probs: &[num_rational::BigRational],
    target: &num_rational::BigRational,
) -> u64 {
    max_prefix(&sorted_desc(probs), target).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{iid_power, make_distribution, materialize, SourceSpec};
    use crate::exact::ratio;
    use num_rational::BigRational;

    fn bern(p: f64) -> FiniteDistribution {
        SourceSpec::Bernoulli { bernoulli: p }.build().unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn max_entropy_examples() {
        let u = FiniteDistribution::uniform(8).unwrap();
        let r = smooth_max_entropy(&u, 0.0).unwrap();
        assert!(close(r.value, 8f64.ln()));
        match r.witness {
            Witness::Max { ref set_size, mass } => {
                assert_eq!(*set_size, BigUint::from(8u8));
                assert!(close(mass, 1.0));
            }
            _ => unreachable!(),
        }
        let d = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        assert!(close(
            smooth_max_entropy(&d, 0.25).unwrap().value,
            2f64.ln()
        ));
        let b = materialize(&bern(0.3), 2).unwrap();
        assert!(close(smooth_max_entropy(&b, 0.2).unwrap().value, 3f64.ln()));
        let v = iid_power(&bern(0.3), 2).unwrap();
        assert!(close(smooth_max_entropy(&v, 0.2).unwrap().value, 3f64.ln()));
        assert!(smooth_max_entropy(&d, 1.0).is_err());
    }

    #[test]
    fn min_entropy_examples() {
        let u = FiniteDistribution::uniform(8).unwrap();
        assert!(close(smooth_min_entropy(&u, 0.0).unwrap().value, 8f64.ln()));
        let d = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        let r = smooth_min_entropy(&d, 0.2).unwrap();
        assert!(close(r.value, 3f64.ln()));
        assert!(matches!(r.witness, Witness::Min { clamped: true, .. }));
        let d = make_distribution(&[0.7, 0.2, 0.1]).unwrap();
        let r = smooth_min_entropy(&d, 0.3).unwrap();
        assert!(close(r.value, -(0.4f64).ln()));
        assert!(matches!(r.witness, Witness::Min { clamped: false, .. }));
    }

    #[test]
    fn oracles_on_examples() {
        let d = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        assert!(close(oracle_max_entropy(&d, 0.25).unwrap(), 2f64.ln()));
        assert!(close(oracle_max_entropy(&d, 0.0).unwrap(), 3f64.ln()));
        assert!(close(oracle_max_entropy(&d, 0.5).unwrap(), 0.0));
        assert!((oracle_min_entropy(&d, 0.2).unwrap() - 3f64.ln()).abs() < 1e-9);
        let d = make_distribution(&[0.7, 0.2, 0.1]).unwrap();
        assert!((oracle_min_entropy(&d, 0.3).unwrap() + 0.4f64.ln()).abs() < 1e-9);
        let big = make_distribution(&[1.0; 21]).unwrap();
        assert!(oracle_max_entropy(&big, 0.1).is_err());
    }

    #[test]
    fn exact_water_filling() {
        let p: Vec<BigRational> = vec![ratio(7, 10), ratio(2, 10), ratio(1, 10)];
        let lvl = min_level(&p, 3, &ratio(3, 10));
        assert_eq!(lvl.beta, ratio(2, 5));
        assert_eq!(lvl.residual, ratio(3, 10));
        let p: Vec<BigRational> = vec![ratio(1, 2), ratio(3, 10), ratio(1, 5)];
        let lvl = min_level(&p, 3, &ratio(1, 5));
        assert_eq!(lvl.beta, ratio(1, 3));
        assert!(lvl.clamped);
        assert_eq!(max_set_size_exact(&p, &ratio(3, 4)), 2);
        assert_eq!(max_set_size_exact(&p, &ratio(4, 5)), 2);
        assert_eq!(max_set_size_exact(&p, &ratio(81, 100)), 3);
    }

    #[test]
    fn type_classes_match_atoms() {
        for &p in &[0.3, 0.11, 0.5] {
            for n in [1u32, 3, 7, 10, 14] {
                let view = iid_power(&bern(p), n).unwrap();
                let block = materialize(&bern(p), n).unwrap();
                for &delta in &[0.0, 0.01, 0.1, 0.25, 0.5, 0.9] {
                    let a = smooth_max_entropy(&block, delta).unwrap();
                    let b = smooth_max_entropy(&view, delta).unwrap();
                    assert_eq!(a.set_size(), b.set_size(), "p={p} n={n} d={delta}");
                    let a = smooth_min_entropy(&block, delta).unwrap();
                    let b = smooth_min_entropy(&view, delta).unwrap();
                    assert!(
                        (a.value - b.value).abs() < 1e-9,
                        "p={p} n={n} d={delta}: {} vs {}",
                        a.value,
                        b.value
                    );
                }
            }
        }
    }

    #[test]
    fn large_n_is_finite_and_ordered() {
        let view = iid_power(&bern(0.11), 4096).unwrap();
        let h0 = smooth_max_entropy(&view, 0.11).unwrap().value / 4096.0;
        let hi = smooth_min_entropy(&view, 0.11).unwrap().value / 4096.0;
        let h = -(0.11f64 * 0.11f64.ln() + 0.89 * 0.89f64.ln());
        assert!(hi < h && h < h0, "{hi} {h} {h0}");
        assert!(h0 - h < 0.05 && h - hi < 0.05);
    }
}
