//! Finite-n information-spectrum quantiles and the diagnostics comparing them
//! with the smooth-entropy rates.
//!
//! For a decreasing offset generator `f0`, `f0(Pr{Z <= R}) <= eps` holds iff
//! `Pr{Z <= R} >= f0^{-1}(eps)`, where `Z = (1/n) log 1/P(X^n)`. Both
//! quantities are therefore quantiles of the sorted spectrum.

use serde::Serialize;

use crate::distributions::{iid_power, spectrum_of, FiniteDistribution, SpectrumSample};
use crate::error::{Error, Result};
use crate::exact::MASS_TOL;
use crate::exec::Execution;
use crate::fdiv::{offset, FFunction};
use crate::intrinsic::ir_rate_formula;
use crate::resolvability::{rate_formula, RateEvaluation, RateRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumOrder {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumRate {
    pub n: u32,
    pub epsilon: f64,
    pub order: SpectrumOrder,
    /// `inf{R : f0(Pr{Z <= R}) <= eps}`; second order reports `sqrt(n)(kbar - R)`.
    pub kbar: f64,
    /// `sup{R : f0(Pr{Z >= R}) <= eps}`, scaled like `kbar`.
    pub kunder: f64,
}

/// `samples` is a spectrum in ascending self-information order, as produced
/// by [`spectrum_of`]. `rate` is the reference first-order rate, required for
/// the second order.
pub fn spectrum_rate(
    samples: &[SpectrumSample],
    n: u32,
    f: &FFunction,
    epsilon: f64,
    order: SpectrumOrder,
    rate: Option<f64>,
) -> Result<SpectrumRate> {
    if samples.is_empty() {
        return Err(Error::DegenerateSupport);
    }
    if n == 0 {
        return Err(Error::BadParam("n must be positive".into()));
    }
    let f0 = offset(f)?;
    let t = f0.inverse(epsilon)?;
    let (kbar, kunder) = quantiles(samples, t);
    let (kbar, kunder) = match order {
        SpectrumOrder::First => (kbar, kunder),
        SpectrumOrder::Second => {
            let r =
                rate.ok_or_else(|| Error::BadParam("second order needs a reference rate".into()))?;
            let s = (n as f64).sqrt();
            (s * (kbar - r), s * (kunder - r))
        }
    };
    Ok(SpectrumRate {
        n,
        epsilon,
        order,
        kbar,
        kunder,
    })
}

// Smallest level whose CDF reaches t and largest level whose survival does.
fn quantiles(samples: &[SpectrumSample], t: f64) -> (f64, f64) {
    let last = samples.len() - 1;
    let mut cdf = 0.0;
    let mut kbar = samples[last].value;
    for s in samples {
        cdf += s.mass;
        if cdf >= t - MASS_TOL {
            kbar = s.value;
            break;
        }
    }
    let mut surv = 0.0;
    let mut kunder = samples[0].value;
    for s in samples.iter().rev() {
        surv += s.mass;
        if surv >= t - MASS_TOL {
            kunder = s.value;
            break;
        }
    }
    (kbar, kunder)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub n: u32,
    pub nu: f64,
    pub h0_rate: f64,
    pub hinf_rate: f64,
    pub kbar: f64,
    pub kunder: f64,
    pub gap0: f64,
    pub gapinf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub f_name: String,
    pub level: f64,
    pub rows: Vec<EquivalenceRow>,
    /// Last gap is no larger than the first (per nu).
    pub gap0_shrinks: bool,
    pub gapinf_shrinks: bool,
}

/// Per-n gaps between the smooth-entropy rates at smoothing
/// `1 - f0^{-1}(level + nu)` and the spectrum quantiles at `eps = level + nu`.
pub fn equivalence_report(
    base: &FiniteDistribution,
    f: &FFunction,
    level: f64,
    nu: &[f64],
    n: &[u32],
    exec: Execution,
) -> Result<EquivalenceReport> {
    let req = RateRequest {
        level,
        nu: nu.to_vec(),
        n: n.to_vec(),
        rate: None,
        exec,
    };
    let h0 = rate_formula(base, f, &req)?;
    let hinf = ir_rate_formula(base, f, &req)?;
    let spectra = exec.map(n, |&k| -> Result<Vec<SpectrumSample>> {
        Ok(spectrum_of(&iid_power(base, k)?))
    });
    let spectra: Vec<Vec<SpectrumSample>> = spectra.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(h0.len());
    for (a, b) in h0.iter().zip(&hinf) {
        let idx = n.iter().position(|&k| k == a.n).expect("n from request");
        let s = spectrum_rate(
            &spectra[idx],
            a.n,
            f,
            level + a.nu,
            SpectrumOrder::First,
            None,
        )?;
        rows.push(EquivalenceRow {
            n: a.n,
            nu: a.nu,
            h0_rate: a.first_order,
            hinf_rate: b.first_order,
            kbar: s.kbar,
            kunder: s.kunder,
            gap0: (a.first_order - s.kbar).abs(),
            gapinf: (b.first_order - s.kunder).abs(),
        });
    }
    let shrinks = |gap: fn(&EquivalenceRow) -> f64| {
        nu.iter().all(|&v| {
            let g: Vec<f64> = rows.iter().filter(|r| r.nu == v).map(gap).collect();
            match (g.first(), g.last()) {
                (Some(a), Some(b)) => *b <= *a + 1e-12,
                _ => true,
            }
        })
    };
    let gap0_shrinks = shrinks(|r| r.gap0);
    let gapinf_shrinks = shrinks(|r| r.gapinf);
    Ok(EquivalenceReport {
        f_name: f.name().to_string(),
        level,
        rows,
        gap0_shrinks,
        gapinf_shrinks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepStatistics {
    pub values: Vec<f64>,
    pub window: usize,
    /// Minimum over the trailing window ending at each index.
    pub running_liminf: Vec<f64>,
    /// Maximum over the trailing window ending at each index.
    pub running_limsup: Vec<f64>,
    pub liminf: f64,
    pub limsup: f64,
}

/// Trailing-window estimates of liminf and limsup of a per-n sequence.
pub fn sweep_statistics(values: &[f64], window: usize) -> Result<SweepStatistics> {
    if values.len() < 2 {
        return Err(Error::TooFewPoints {
            need: 2,
            got: values.len(),
        });
    }
    if window == 0 {
        return Err(Error::BadParam("window must be positive".into()));
    }
    let mut lo = Vec::with_capacity(values.len());
    let mut hi = Vec::with_capacity(values.len());
    for i in 0..values.len() {
        let tail = &values[(i + 1).saturating_sub(window)..=i];
        lo.push(tail.iter().copied().fold(f64::INFINITY, f64::min));
        hi.push(tail.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(SweepStatistics {
        values: values.to_vec(),
        window,
        liminf: *lo.last().expect("nonempty"),
        limsup: *hi.last().expect("nonempty"),
        running_liminf: lo,
        running_limsup: hi,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimisticRates {
    /// The ordinary estimate (limsup for resolvability, liminf for intrinsic).
    pub first_order: f64,
    /// The optimistic estimate (the swapped operator).
    pub optimistic_first_order: f64,
    pub second_order: Option<f64>,
    pub optimistic_second_order: Option<f64>,
}

fn rates_of(
    evals: &[RateEvaluation],
    window: usize,
) -> Result<(SweepStatistics, Option<SweepStatistics>)> {
    let first: Vec<f64> = evals.iter().map(|e| e.first_order).collect();
    let second: Option<Vec<f64>> = evals.iter().map(|e| e.second_order).collect();
    let s1 = sweep_statistics(&first, window)?;
    let s2 = second.map(|s| sweep_statistics(&s, window)).transpose()?;
    Ok((s1, s2))
}

/// Resolvability: the ordinary rate is a limsup of the H0 rates, the
/// optimistic rate a liminf. `evals` should hold a single nu.
pub fn optimistic_resolvability(
    evals: &[RateEvaluation],
    window: usize,
) -> Result<OptimisticRates> {
    let (s1, s2) = rates_of(evals, window)?;
    Ok(OptimisticRates {
        first_order: s1.limsup,
        optimistic_first_order: s1.liminf,
        second_order: s2.as_ref().map(|s| s.limsup),
        optimistic_second_order: s2.as_ref().map(|s| s.liminf),
    })
}

/// Intrinsic randomness: the ordinary rate is a liminf of the Hinf rates, the
/// optimistic rate a limsup.
pub fn optimistic_intrinsic(evals: &[RateEvaluation], window: usize) -> Result<OptimisticRates> {
    let (s1, s2) = rates_of(evals, window)?;
    Ok(OptimisticRates {
        first_order: s1.liminf,
        optimistic_first_order: s1.limsup,
        second_order: s2.as_ref().map(|s| s.liminf),
        optimistic_second_order: s2.as_ref().map(|s| s.limsup),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SourceSpec;

    fn bern(p: f64) -> FiniteDistribution {
        SourceSpec::Bernoulli { bernoulli: p }.build().unwrap()
    }

    #[test]
    fn uniform_point_spectrum() {
        let u = FiniteDistribution::uniform(3).unwrap();
        let f = FFunction::hellinger();
        for n in [1, 4, 9] {
            let s = spectrum_of(&iid_power(&u, n).unwrap());
            for eps in [0.0, 0.3, 0.9] {
                let r = spectrum_rate(&s, n, &f, eps, SpectrumOrder::First, None).unwrap();
                assert!((r.kbar - 3f64.ln()).abs() < 1e-12);
                assert_eq!(r.kbar, r.kunder);
            }
        }
    }

    #[test]
    fn bernoulli_two_symbols() {
        let s = spectrum_of(&iid_power(&bern(0.3), 2).unwrap());
        assert_eq!(s.len(), 3);
        let f = FFunction::half_variational();
        let r = spectrum_rate(&s, 2, &f, 0.2, SpectrumOrder::First, None).unwrap();
        assert!((r.kbar - 0.5 * (1.0 / 0.21f64).ln()).abs() < 1e-12);
        assert!((r.kunder - 0.5 * (1.0 / 0.49f64).ln()).abs() < 1e-12);
        assert!(matches!(
            spectrum_rate(&s, 2, &f, 1.0, SpectrumOrder::First, None),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn quantile_matches_bisection() {
        let f = FFunction::reverse_kl();
        let f0 = offset(&f).unwrap();
        for n in [16, 64, 200] {
            let s = spectrum_of(&iid_power(&bern(0.2), n).unwrap());
            let eps = 0.3;
            let r = spectrum_rate(&s, n, &f, eps, SpectrumOrder::First, None).unwrap();
            let cdf = |x: f64| {
                s.iter()
                    .filter(|v| v.value <= x)
                    .map(|v| v.mass)
                    .sum::<f64>()
            };
            let (mut lo, mut hi) = (0.0, s.last().unwrap().value);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if f0.eval(cdf(mid)) <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let j = s.partition_point(|v| v.value < r.kbar);
            let prev = if j > 0 { s[j - 1].value } else { r.kbar };
            assert!(hi <= r.kbar + 1e-9 && hi >= prev - 1e-9, "n={n}");
        }
    }

    #[test]
    fn second_order_scales() {
        let b = bern(0.11);
        let h = -(0.11f64 * 0.11f64.ln() + 0.89 * 0.89f64.ln());
        let f = FFunction::half_variational();
        let s = spectrum_of(&iid_power(&b, 400).unwrap());
        let one = spectrum_rate(&s, 400, &f, 0.1, SpectrumOrder::First, None).unwrap();
        let two = spectrum_rate(&s, 400, &f, 0.1, SpectrumOrder::Second, Some(h)).unwrap();
        assert!((two.kbar - 20.0 * (one.kbar - h)).abs() < 1e-9);
        assert!(two.kbar.is_finite() && two.kbar > 0.0);
        assert!(spectrum_rate(&s, 400, &f, 0.1, SpectrumOrder::Second, None).is_err());
    }

    #[test]
    fn equivalence_gaps_shrink() {
        let f = FFunction::half_variational();
        let rep = equivalence_report(
            &bern(0.3),
            &f,
            0.2,
            &[0.01],
            &[8, 64, 512],
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(rep.rows.len(), 3);
        assert!(rep.gap0_shrinks && rep.gapinf_shrinks, "{rep:?}");
        for r in &rep.rows {
            assert!(r.kunder <= r.kbar + 1e-9);
        }
    }

    #[test]
    fn sweep_statistics_windows() {
        let c = sweep_statistics(&[0.7; 6], 3).unwrap();
        assert_eq!((c.liminf, c.limsup), (0.7, 0.7));
        let alt: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { 1.0 } else { 2.0 })
            .collect();
        let a = sweep_statistics(&alt, 4).unwrap();
        assert!(a.liminf < a.limsup);
        assert!(a
            .running_liminf
            .iter()
            .zip(&a.running_limsup)
            .all(|(l, h)| l <= h));
        assert!(matches!(
            sweep_statistics(&[1.0], 2),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn optimistic_agrees_for_iid() {
        let req = RateRequest {
            level: 0.1,
            nu: vec![0.01],
            n: vec![1024, 1536, 2048],
            rate: None,
            exec: Execution::Sequential,
        };
        let f = FFunction::half_variational();
        let ev = rate_formula(&bern(0.3), &f, &req).unwrap();
        let o = optimistic_resolvability(&ev, 3).unwrap();
        assert!((o.first_order - o.optimistic_first_order).abs() < 0.01);
        let ev = ir_rate_formula(&bern(0.3), &f, &req).unwrap();
        let o = optimistic_intrinsic(&ev, 3).unwrap();
        assert!((o.first_order - o.optimistic_first_order).abs() < 0.01);
        assert!(o.first_order <= o.optimistic_first_order);
    }
}
