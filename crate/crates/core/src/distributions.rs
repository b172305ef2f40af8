//! Finite distributions, uniform distributions and i.i.d. block sources.
//!
//! A [`ProductSourceView`] never materializes the `|X|^n` sequences. Symbols
//! of equal mass are pooled into groups, and each type class is a composition
//! of `n` over those groups; its multiplicity is an exact big integer.

use std::collections::HashSet;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ln_biguint, rational_from_f64};

/// Tolerance on the total mass of a validated distribution.
pub const SUM_TOL: f64 = 1e-12;

/// Largest explicit alphabet produced by [`materialize`].
pub const MAX_MATERIALIZED: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDistribution {
    labels: Vec<String>,
    probs: Vec<f64>,
    exact: Option<Vec<BigRational>>,
}

impl FiniteDistribution {
    /// Normalizes `weights` and attaches `labels`.
    pub fn new(labels: Vec<String>, weights: &[f64]) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                labels: labels.len(),
                weights: weights.len(),
            });
        }
        check_labels(&labels)?;
        let mut sum = 0.0;
        for (index, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if w < 0.0 {
                return Err(Error::NegativeMass { index, value: w });
            }
            sum += w;
        }
        if weights.is_empty() || sum <= 0.0 {
            return Err(Error::AllZero);
        }
        let probs = if sum == 1.0 {
            weights.to_vec()
        } else {
            weights.iter().map(|w| w / sum).collect()
        };
        Ok(FiniteDistribution {
            labels,
            probs,
            exact: None,
        })
    }

    /// Exact backend: masses are kept as rationals and normalized exactly.
    pub fn from_rationals(labels: Vec<String>, weights: Vec<BigRational>) -> Result<Self> {
        if labels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                labels: labels.len(),
                weights: weights.len(),
            });
        }
        check_labels(&labels)?;
        let mut sum = BigRational::zero();
        for (index, w) in weights.iter().enumerate() {
            if w.is_negative() {
                return Err(Error::NegativeMass {
                    index,
                    value: w.to_f64().unwrap_or(f64::NAN),
                });
            }
            sum += w;
        }
        if sum.is_zero() {
            return Err(Error::AllZero);
        }
        let exact: Vec<BigRational> = weights.into_iter().map(|w| w / &sum).collect();
        let probs = exact.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
        Ok(FiniteDistribution {
            labels,
            probs,
            exact: Some(exact),
        })
    }

    /// Exact distribution from nonnegative integer weights.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let weights = counts
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        Self::from_rationals(default_labels(counts.len()), weights)
    }

    /// Attaches an exact rational copy of the stored floats.
    pub fn with_exact_from_floats(mut self) -> Self {
        let exact: Vec<BigRational> = self.probs.iter().map(|&p| rational_from_f64(p)).collect();
        let sum: BigRational = exact.iter().sum();
        self.exact = Some(exact.into_iter().map(|p| p / &sum).collect());
        self
    }

    pub fn uniform(m: usize) -> Result<Self> {
        UniformDistribution::new(m as u64)?.to_distribution()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn exact(&self) -> Option<&[BigRational]> {
        self.exact.as_deref()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Indices of atoms that carry no mass.
    pub fn zero_mass_atoms(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.probs[i] == 0.0).collect()
    }

    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|&&p| p > 0.0).count()
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn same_alphabet(&self, other: &FiniteDistribution) -> Result<()> {
        if self.len() != other.len() || self.labels != other.labels {
            return Err(Error::AlphabetMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Atom indices sorted by mass descending, ties by index.
    pub fn descending_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.probs[b].total_cmp(&self.probs[a]).then(a.cmp(&b)));
        idx
    }
}

/// Normalizes `weights` over the labels `"0", "1", ...`, keeping input order.
pub fn make_distribution(weights: &[f64]) -> Result<FiniteDistribution> {
    FiniteDistribution::new(default_labels(weights.len()), weights)
}

pub fn default_labels(k: usize) -> Vec<String> {
    (0..k).map(|i| i.to_string()).collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::DuplicateLabel(l.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniformDistribution {
    size: u64,
}

impl UniformDistribution {
    pub fn new(size: u64) -> Result<Self> {
        if size == 0 {
            return Err(Error::BadParam("uniform size must be positive".into()));
        }
        Ok(UniformDistribution { size })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn prob(&self) -> f64 {
        1.0 / self.size as f64
    }

    pub fn exact_prob(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::from(self.size))
    }

    pub fn to_distribution(&self) -> Result<FiniteDistribution> {
        if self.size as usize > MAX_MATERIALIZED {
            return Err(Error::TooLarge {
                size: self.size as u128,
                limit: MAX_MATERIALIZED as u128,
            });
        }
        let m = self.size as usize;
        FiniteDistribution::from_rationals(default_labels(m), vec![self.exact_prob(); m])
    }
}

/// Symbols of the base alphabet sharing one mass value.
#[derive(Debug, Clone, PartialEq)]
pub struct MassGroup {
    pub prob: f64,
    pub ln_prob: f64,
    pub symbols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeClass {
    /// Symbol counts per mass group, summing to `n`.
    pub counts: Vec<u32>,
    pub ln_prob: f64,
    /// Per-sequence probability as a product of powers; 0 on underflow.
    pub prob: f64,
    pub multiplicity: BigUint,
    pub ln_multiplicity: f64,
    /// Total probability of the class, `multiplicity * per_sequence_prob`.
    pub mass: f64,
}

impl TypeClass {
    pub fn per_sequence_prob(&self) -> f64 {
        self.prob
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PowerLimits {
    pub max_classes: usize,
    /// Cap on `log2 |X|^n`.
    pub max_bits: u64,
}

impl Default for PowerLimits {
    fn default() -> Self {
        PowerLimits {
            max_classes: 4_000_000,
            max_bits: 1 << 20,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductSourceView {
    base: FiniteDistribution,
    n: u32,
    groups: Vec<MassGroup>,
    classes: Vec<TypeClass>,
}

impl ProductSourceView {
    pub fn base(&self) -> &FiniteDistribution {
        &self.base
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn groups(&self) -> &[MassGroup] {
        &self.groups
    }

    /// Type classes sorted by per-sequence probability, descending.
    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    /// `ln |X|^n`, counting zero-mass symbols.
    pub fn ln_alphabet_size(&self) -> f64 {
        self.n as f64 * (self.base.len() as f64).ln()
    }

    pub fn alphabet_size(&self) -> BigUint {
        BigUint::from(self.base.len()).pow(self.n)
    }

    pub fn total_multiplicity(&self) -> BigUint {
        self.classes.iter().map(|c| &c.multiplicity).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.classes.iter().map(|c| c.mass).sum()
    }
}

pub fn iid_power(base: &FiniteDistribution, n: u32) -> Result<ProductSourceView> {
    iid_power_with_limits(base, n, PowerLimits::default())
}

pub fn iid_power_with_limits(
    base: &FiniteDistribution,
    n: u32,
    limits: PowerLimits,
) -> Result<ProductSourceView> {
    if n == 0 {
        return Err(Error::BadParam("block length must be at least 1".into()));
    }
    if base.len() < 2 {
        return Err(Error::BadParam(
            "base alphabet needs at least two symbols".into(),
        ));
    }
    let bits = n as f64 * (base.len() as f64).log2();
    if bits > limits.max_bits as f64 {
        return Err(Error::Overflow {
            what: format!("|X|^n = {}^{}", base.len(), n),
        });
    }

    let groups = mass_groups(base);
    let g = groups.len();
    let class_count = binomial_f64(n as u64 + g as u64 - 1, g as u64 - 1);
    if class_count > limits.max_classes as f64 {
        return Err(Error::TooLarge {
            size: class_count as u128,
            limit: limits.max_classes as u128,
        });
    }

    let mut classes = Vec::with_capacity(class_count as usize);
    let mut counts = vec![0u32; g];
    enumerate_classes(&groups, 0, n, BigUint::one(), &mut counts, &mut classes);
    classes.sort_by(|a, b| {
        b.ln_prob
            .total_cmp(&a.ln_prob)
            .then_with(|| b.counts.cmp(&a.counts))
    });
    Ok(ProductSourceView {
        base: base.clone(),
        n,
        groups,
        classes,
    })
}

fn mass_groups(base: &FiniteDistribution) -> Vec<MassGroup> {
    let mut groups: Vec<MassGroup> = Vec::new();
    for i in base.descending_order() {
        let p = base.prob(i);
        if p == 0.0 {
            continue;
        }
        match groups.last_mut() {
            Some(gr) if gr.prob == p => gr.symbols.push(i),
            _ => groups.push(MassGroup {
                prob: p,
                ln_prob: p.ln(),
                symbols: vec![i],
            }),
        }
    }
    groups
}

// Depth-first over compositions; `coeff` carries the product of the binomials
// and symbol-count powers chosen so far.
fn enumerate_classes(
    groups: &[MassGroup],
    depth: usize,
    remaining: u32,
    coeff: BigUint,
    counts: &mut Vec<u32>,
    out: &mut Vec<TypeClass>,
) {
    let g = groups.len();
    let width = groups[depth].symbols.len() as u32;
    if depth + 1 == g {
        counts[depth] = remaining;
        let multiplicity = coeff * BigUint::from(width).pow(remaining);
        let ln_prob: f64 = groups
            .iter()
            .zip(counts.iter())
            .map(|(gr, &c)| c as f64 * gr.ln_prob)
            .sum();
        let prob: f64 = groups
            .iter()
            .zip(counts.iter())
            .map(|(gr, &c)| gr.prob.powi(c as i32))
            .product();
        let ln_multiplicity = ln_biguint(&multiplicity);
        // direct product while everything is representable, logs otherwise
        let mass = match multiplicity.to_f64() {
            Some(m) if m < 9.0e15 && prob > 1e-300 => m * prob,
            _ => (ln_multiplicity + ln_prob).exp(),
        };
        out.push(TypeClass {
            counts: counts.clone(),
            ln_prob,
            prob,
            ln_multiplicity,
            mass,
            multiplicity,
        });
        return;
    }
    let mut binom = BigUint::one();
    let mut power = BigUint::one();
    for c in 0..=remaining {
        if c > 0 {
            binom = binom * BigUint::from(remaining - c + 1) / BigUint::from(c);
            power *= width;
        }
        counts[depth] = c;
        enumerate_classes(
            groups,
            depth + 1,
            remaining - c,
            &coeff * &binom * &power,
            counts,
            out,
        );
    }
}

fn binomial_f64(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSample {
    /// Per-symbol self-information in nats.
    pub value: f64,
    pub mass: f64,
}

/// Information spectrum of a block source: one sample per distinct
/// probability level, ascending in value.
pub fn spectrum_of(view: &ProductSourceView) -> Vec<SpectrumSample> {
    let n = view.n() as f64;
    let mut out: Vec<(f64, SpectrumSample)> = Vec::new();
    for c in view.classes() {
        let value = -c.ln_prob / n;
        match out.last_mut() {
            Some((ln, s)) if same_level(*ln, c.ln_prob) => s.mass += c.mass,
            _ => out.push((
                c.ln_prob,
                SpectrumSample {
                    value,
                    mass: c.mass,
                },
            )),
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

/// Spectrum of an explicit block distribution of length `n`.
pub fn spectrum_of_block(block: &SourceBlock) -> Vec<SpectrumSample> {
    let n = block.n as f64;
    let d = &block.dist;
    let mut out: Vec<(f64, SpectrumSample)> = Vec::new();
    for i in d.descending_order() {
        let p = d.prob(i);
        if p == 0.0 {
            break;
        }
        let ln = p.ln();
        match out.last_mut() {
            Some((l, s)) if same_level(*l, ln) => s.mass += p,
            _ => out.push((
                ln,
                SpectrumSample {
                    value: -ln / n,
                    mass: p,
                },
            )),
        }
    }
    out.into_iter().map(|(_, s)| s).collect()
}

fn same_level(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// An explicit distribution over length-`n` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceBlock {
    pub dist: FiniteDistribution,
    pub n: u32,
}

impl SourceBlock {
    pub fn new(dist: FiniteDistribution, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadParam("block length must be at least 1".into()));
        }
        Ok(SourceBlock { dist, n })
    }

    /// A single distribution read as a length-1 block.
    pub fn single(dist: FiniteDistribution) -> Self {
        SourceBlock { dist, n: 1 }
    }
}

/// Every sequence of `base^n` in lexicographic order. Exact masses are
/// carried along when the base has them.
pub fn materialize(base: &FiniteDistribution, n: u32) -> Result<SourceBlock> {
    if n == 0 {
        return Err(Error::BadParam("block length must be at least 1".into()));
    }
    let k = base.len();
    let size = (k as u128).checked_pow(n).unwrap_or(u128::MAX);
    if size > MAX_MATERIALIZED as u128 {
        return Err(Error::TooLarge {
            size,
            limit: MAX_MATERIALIZED as u128,
        });
    }
    let size = size as usize;
    let joiner = if base.labels().iter().all(|l| l.chars().count() == 1) {
        ""
    } else {
        ","
    };
    let mut labels = Vec::with_capacity(size);
    let mut probs = Vec::with_capacity(size);
    let mut exact = base.exact().map(|_| Vec::with_capacity(size));
    let mut digits = vec![0usize; n as usize];
    for _ in 0..size {
        let label: Vec<&str> = digits.iter().map(|&d| base.labels()[d].as_str()).collect();
        labels.push(label.join(joiner));
        probs.push(digits.iter().map(|&d| base.prob(d)).product::<f64>());
        if let (Some(ex), Some(bx)) = (exact.as_mut(), base.exact()) {
            let mut p = BigRational::one();
            for &d in &digits {
                p *= &bx[d];
            }
            ex.push(p);
        }
        for d in digits.iter_mut().rev() {
            *d += 1;
            if *d < k {
                break;
            }
            *d = 0;
        }
    }
    let dist = match exact {
        Some(ex) => FiniteDistribution::from_rationals(labels, ex)?,
        None => FiniteDistribution {
            labels,
            probs,
            exact: None,
        },
    };
    Ok(SourceBlock { dist, n })
}

/// JSON description of a base distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SourceSpec {
    Explicit {
        labels: Vec<String>,
        weights: Vec<f64>,
    },
    Bernoulli {
        bernoulli: f64,
    },
    Uniform {
        uniform: u64,
    },
}

impl SourceSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses the shorthands `bernoulli:p`, `uniform:M`, `weights:w1,w2,...`
    /// or an inline JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        if t.starts_with('{') {
            return Self::from_json(t);
        }
        let (kind, arg) = t
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected kind:value, got {t:?}")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {s:?}")))
        };
        match kind.trim() {
            "bernoulli" => Ok(SourceSpec::Bernoulli {
                bernoulli: num(arg)?,
            }),
            "uniform" => arg
                .trim()
                .parse::<u64>()
                .map(|uniform| SourceSpec::Uniform { uniform })
                .map_err(|_| Error::Parse(format!("bad alphabet size {arg:?}"))),
            "weights" => {
                let weights = arg.split(',').map(num).collect::<Result<Vec<_>>>()?;
                Ok(SourceSpec::Explicit {
                    labels: default_labels(weights.len()),
                    weights,
                })
            }
            other => Err(Error::Parse(format!("unknown source kind {other:?}"))),
        }
    }

    /// Builds the base distribution. Bernoulli and uniform sources get exact
    /// rational masses.
    pub fn build(&self) -> Result<FiniteDistribution> {
        match self {
            SourceSpec::Explicit { labels, weights } => {
                FiniteDistribution::new(labels.clone(), weights)
            }
            SourceSpec::Bernoulli { bernoulli: p } => {
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::BadParam(format!(
                        "bernoulli parameter {p} not in [0,1]"
                    )));
                }
                let one = rational_from_f64(*p);
                let zero = BigRational::one() - &one;
                FiniteDistribution::from_rationals(vec!["0".into(), "1".into()], vec![zero, one])
            }
            SourceSpec::Uniform { uniform } => {
                UniformDistribution::new(*uniform)?.to_distribution()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bern(p: f64) -> FiniteDistribution {
        SourceSpec::Bernoulli { bernoulli: p }.build().unwrap()
    }

    #[test]
    fn make_distribution_examples() {
        assert_eq!(make_distribution(&[1.0, 1.0]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(
            make_distribution(&[2.0, 1.0, 1.0]).unwrap().probs(),
            &[0.5, 0.25, 0.25]
        );
        let d = make_distribution(&[0.49, 0.21, 0.21, 0.09]).unwrap();
        for (a, b) in d.probs().iter().zip([0.49, 0.21, 0.21, 0.09]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(make_distribution(&[0.0, 0.0]), Err(Error::AllZero));
        assert!(matches!(
            make_distribution(&[1.0, -0.5]),
            Err(Error::NegativeMass { index: 1, .. })
        ));
        assert!(matches!(
            FiniteDistribution::new(vec!["a".into(), "a".into()], &[1.0, 1.0]),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn zero_mass_atoms_are_flagged() {
        let d = make_distribution(&[0.0, 3.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.zero_mass_atoms(), vec![0, 2]);
        assert_eq!(d.support_size(), 2);
    }

    #[test]
    fn bernoulli_square_classes() {
        let v = iid_power(&bern(0.3), 2).unwrap();
        let got: Vec<(Vec<u32>, u64, f64)> = v
            .classes()
            .iter()
            .map(|c| {
                (
                    c.counts.clone(),
                    c.multiplicity.to_u64().unwrap(),
                    c.per_sequence_prob(),
                )
            })
            .collect();
        assert_eq!(got.len(), 3);
        assert_eq!((got[0].0.clone(), got[0].1), (vec![2, 0], 1));
        assert_eq!((got[1].0.clone(), got[1].1), (vec![1, 1], 2));
        assert_eq!((got[2].0.clone(), got[2].1), (vec![0, 2], 1));
        for (g, want) in got.iter().zip([0.49, 0.21, 0.09]) {
            assert!((g.2 - want).abs() < 1e-15);
        }
    }

    #[test]
    fn n_one_gives_one_class_per_symbol() {
        let d = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        let v = iid_power(&d, 1).unwrap();
        assert_eq!(v.classes().len(), 3);
        assert!(v.classes().iter().all(|c| c.multiplicity == BigUint::one()));
    }

    #[test]
    fn uniform_pools_into_one_level() {
        let v = iid_power(&FiniteDistribution::uniform(2).unwrap(), 10).unwrap();
        assert_eq!(v.classes().len(), 1);
        assert_eq!(v.total_multiplicity(), BigUint::from(1024u32));
        assert!((v.classes()[0].per_sequence_prob() - 2f64.powi(-10)).abs() < 1e-18);
    }

    #[test]
    fn multiplicities_cover_the_support_power() {
        let d = make_distribution(&[0.4, 0.3, 0.2, 0.1, 0.0]).unwrap();
        let v = iid_power(&d, 9).unwrap();
        assert_eq!(v.total_multiplicity(), BigUint::from(4u32).pow(9));
        assert!((v.total_mass() - 1.0).abs() < 1e-10);
        assert_eq!(v.alphabet_size(), BigUint::from(5u32).pow(9));
    }

    #[test]
    fn overflow_and_size_limits() {
        let limits = PowerLimits {
            max_classes: 10,
            max_bits: 64,
        };
        assert!(matches!(
            iid_power_with_limits(&bern(0.3), 65, limits),
            Err(Error::Overflow { .. })
        ));
        let d = make_distribution(&[0.5, 0.3, 0.2]).unwrap();
        assert!(matches!(
            iid_power_with_limits(&d, 5, limits),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn spectrum_examples() {
        let s = spectrum_of(&iid_power(&FiniteDistribution::uniform(2).unwrap(), 3).unwrap());
        assert_eq!(s.len(), 1);
        assert!((s[0].value - 2f64.ln()).abs() < 1e-15 && (s[0].mass - 1.0).abs() < 1e-12);

        let s = spectrum_of(&iid_power(&bern(0.3), 2).unwrap());
        let want: [(f64, f64); 3] = [(0.49, 0.49), (0.21, 0.42), (0.09, 0.09)];
        assert_eq!(s.len(), 3);
        for (got, (p, m)) in s.iter().zip(want) {
            assert!((got.value - 0.5 * (1.0 / p).ln()).abs() < 1e-12);
            assert!((got.mass - m).abs() < 1e-12);
        }

        let s = spectrum_of(&iid_power(&bern(0.5), 5).unwrap());
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn materialize_matches_classes() {
        let b = materialize(&bern(0.3), 3).unwrap();
        assert_eq!(b.dist.len(), 8);
        assert_eq!(b.dist.labels()[0], "000");
        assert_eq!(b.dist.labels()[5], "101");
        let ex = b.dist.exact().unwrap();
        let total: BigRational = ex.iter().sum();
        assert!(total.is_one());
        let from_block = spectrum_of_block(&b);
        let from_view = spectrum_of(&iid_power(&bern(0.3), 3).unwrap());
        assert_eq!(from_block.len(), from_view.len());
        for (a, b) in from_block.iter().zip(&from_view) {
            assert!((a.value - b.value).abs() < 1e-12 && (a.mass - b.mass).abs() < 1e-12);
        }
    }

    #[test]
    fn source_spec_parsing() {
        assert_eq!(
            SourceSpec::parse("bernoulli:0.3").unwrap(),
            SourceSpec::Bernoulli { bernoulli: 0.3 }
        );
        assert_eq!(
            SourceSpec::parse("uniform:8").unwrap(),
            SourceSpec::Uniform { uniform: 8 }
        );
        let s = SourceSpec::parse(r#"{"labels":["a","b"],"weights":[3,1]}"#).unwrap();
        assert_eq!(s.build().unwrap().probs(), &[0.75, 0.25]);
        assert_eq!(
            SourceSpec::parse(r#"{"bernoulli":0.11}"#).unwrap(),
            SourceSpec::Bernoulli { bernoulli: 0.11 }
        );
        assert!(SourceSpec::parse("gauss:1").is_err());
        let w = SourceSpec::parse("weights:1,1,2").unwrap().build().unwrap();
        assert_eq!(w.probs(), &[0.25, 0.25, 0.5]);
    }
}
