//! Convex generators `f` with `f(1) = 0`, the f-divergence with its boundary
//! conventions, the offset function `f0(t) = f(t) + c_f (1 - t)` and its
//! inverse on `[0, 1]`.

mod conditions;

pub use conditions::{check_conditions, ConditionReport, ConditionVerdict};

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::distributions::FiniteDistribution;
use crate::error::{Error, Result};
use crate::exact::rational_from_f64;

type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type InverseFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kind {
    Kl,
    ReverseKl,
    Hellinger,
    SqHellinger,
    Variational,
    HalfVariational,
    Alpha(f64),
    EGamma(f64),
    Custom,
}

/// A convex generator together with its boundary metadata.
#[derive(Clone)]
pub struct FFunction {
    name: String,
    kind: Kind,
    eval: EvalFn,
    f_at_zero: f64,
    c_f: f64,
    closed_inverse: Option<InverseFn>,
    offset: bool,
}

impl fmt::Debug for FFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("f_at_zero", &self.f_at_zero)
            .field("c_f", &self.c_f)
            .field("offset", &self.offset)
            .finish()
    }
}

impl FFunction {
    pub fn kl() -> Self {
        Self::named(
            "kl",
            Kind::Kl,
            |t| if t == 1.0 { 0.0 } else { t * t.ln() },
            0.0,
            f64::INFINITY,
            None,
        )
    }

    pub fn reverse_kl() -> Self {
        Self::named(
            "reverse_kl",
            Kind::ReverseKl,
            |t| if t == 1.0 { 0.0 } else { -t.ln() },
            f64::INFINITY,
            0.0,
            Some(Arc::new(|d: f64| (-d).exp())),
        )
    }

    pub fn hellinger() -> Self {
        Self::named(
            "hellinger",
            Kind::Hellinger,
            |t| 1.0 - t.sqrt(),
            1.0,
            0.0,
            Some(Arc::new(|d: f64| (1.0 - d) * (1.0 - d))),
        )
    }

    pub fn sq_hellinger() -> Self {
        Self::named(
            "sq_hellinger",
            Kind::SqHellinger,
            |t| {
                let r = 1.0 - t.sqrt();
                r * r
            },
            1.0,
            1.0,
            Some(Arc::new(|d: f64| (1.0 - d / 2.0) * (1.0 - d / 2.0))),
        )
    }

    pub fn variational() -> Self {
        Self::named(
            "variational",
            Kind::Variational,
            |t| (t - 1.0).abs(),
            1.0,
            1.0,
            Some(Arc::new(|d: f64| 1.0 - d / 2.0)),
        )
    }

    pub fn half_variational() -> Self {
        Self::named(
            "half_variational",
            Kind::HalfVariational,
            |t| (1.0 - t).max(0.0),
            1.0,
            0.0,
            Some(Arc::new(|d: f64| 1.0 - d)),
        )
    }

    /// `(t^a - a t - (1 - a)) / (a (a - 1))` for `a` in (0, 1).
    pub fn alpha(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::BadParam(format!("alpha must lie in (0,1), got {a}")));
        }
        let denom = a * (a - 1.0);
        let inverse: InverseFn = if a == 0.5 {
            Arc::new(|d: f64| (1.0 - d / 4.0) * (1.0 - d / 4.0))
        } else {
            Arc::new(move |d: f64| (d * denom + 1.0).max(0.0).powf(1.0 / a))
        };
        Ok(Self::named(
            &format!("alpha:{a}"),
            Kind::Alpha(a),
            move |t| ((t.powf(a) - 1.0) - a * (t - 1.0)) / denom,
            1.0 / a,
            1.0 / (1.0 - a),
            Some(inverse),
        ))
    }

    /// `(g - t)^+ + 1 - g` for `g >= 1`; its divergence is the E_g divergence.
    pub fn e_gamma(g: f64) -> Result<Self> {
        if !(g >= 1.0 && g.is_finite()) {
            return Err(Error::BadParam(format!(
                "gamma must be at least 1, got {g}"
            )));
        }
        Ok(Self::named(
            &format!("e_gamma:{g}"),
            Kind::EGamma(g),
            move |t| (g - t).max(0.0) - (g - 1.0),
            1.0,
            0.0,
            Some(Arc::new(|d: f64| 1.0 - d)),
        ))
    }

    fn named(
        name: &str,
        kind: Kind,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_at_zero: f64,
        c_f: f64,
        closed_inverse: Option<InverseFn>,
    ) -> Self {
        FFunction {
            name: name.to_string(),
            kind,
            eval: Arc::new(eval),
            f_at_zero,
            c_f,
            closed_inverse,
            offset: false,
        }
    }

    /// A user-supplied generator. `f(1) = 0` and convexity are checked on a
    /// grid; `f(0)` and `c_f` are estimated numerically. Linear generators are
    /// rejected.
    pub fn custom(name: &str, eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let eval: EvalFn = Arc::new(eval);
        if eval(1.0) != 0.0 {
            return Err(Error::BadParam(format!("{name}: f(1) must be exactly 0")));
        }
        let grid = log_grid(1e-6, 1e6, 241);
        if !is_convex_on(&*eval, &grid) {
            return Err(Error::NotConvex(name.to_string()));
        }
        let slope = eval(2.0);
        if grid
            .iter()
            .all(|&t| (eval(t) - slope * (t - 1.0)).abs() <= 1e-12 * (1.0 + t.abs()))
        {
            return Err(Error::LinearGenerator(name.to_string()));
        }
        let c_f = conditions::estimate_c_f(&*eval);
        let f_at_zero = conditions::estimate_f_at_zero(&*eval);
        Ok(FFunction {
            name: name.to_string(),
            kind: Kind::Custom,
            eval,
            f_at_zero,
            c_f,
            closed_inverse: None,
            offset: false,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// `f(0)` as the limit from the right; may be `+inf`.
    pub fn f_at_zero(&self) -> f64 {
        self.f_at_zero
    }

    /// `lim f(u)/u` as `u -> inf`; `+inf` when the limit diverges.
    pub fn c_f(&self) -> f64 {
        self.c_f
    }

    pub fn is_offset(&self) -> bool {
        self.offset
    }

    pub fn has_closed_inverse(&self) -> bool {
        self.closed_inverse.is_some()
    }

    /// `f(t)` for `t >= 0`, with `f(0)` taken as the right limit.
    pub fn eval(&self, t: f64) -> f64 {
        if t == 0.0 {
            self.f_at_zero
        } else {
            (self.eval)(t)
        }
    }

    /// Generators that are affine on each of finitely many rational pieces,
    /// so divergences can be evaluated in exact arithmetic.
    pub fn is_piecewise_linear(&self) -> bool {
        matches!(
            self.kind,
            Kind::Variational | Kind::HalfVariational | Kind::EGamma(_)
        )
    }

    /// Exact `f(t)` for piecewise-linear generators.
    pub fn eval_exact(&self, t: &BigRational) -> Option<BigRational> {
        let one = BigRational::one();
        let pos = |x: BigRational| {
            if x.is_positive() {
                x
            } else {
                BigRational::zero()
            }
        };
        let c = if self.offset {
            rational_from_f64(self.c_f_origin())
        } else {
            BigRational::zero()
        };
        let base = match self.kind {
            Kind::Variational => (t - &one).abs(),
            Kind::HalfVariational => pos(&one - t),
            Kind::EGamma(g) => {
                let g = rational_from_f64(g);
                pos(&g - t) - (g - &one)
            }
            _ => return None,
        };
        Some(base + c * (one - t))
    }

    fn c_f_origin(&self) -> f64 {
        // only meaningful for offset generators built from registered kinds
        match self.kind {
            Kind::Variational | Kind::SqHellinger => 1.0,
            Kind::Alpha(a) => 1.0 / (1.0 - a),
            _ => 0.0,
        }
    }

    /// Exact `c_f` for piecewise-linear generators.
    pub fn c_f_exact(&self) -> Option<BigRational> {
        if !self.is_piecewise_linear() {
            return None;
        }
        Some(rational_from_f64(self.c_f))
    }
}

/// The registered generators, with `alpha` and `e_gamma` at representative
/// parameters.
pub fn registry() -> Vec<FFunction> {
    vec![
        FFunction::kl(),
        FFunction::reverse_kl(),
        FFunction::hellinger(),
        FFunction::sq_hellinger(),
        FFunction::variational(),
        FFunction::half_variational(),
        FFunction::alpha(0.5).expect("valid alpha"),
        FFunction::e_gamma(2.0).expect("valid gamma"),
    ]
}

/// Parses `half-variational`, `alpha:0.5`, `e-gamma:2.0` and friends.
/// Dashes and underscores are interchangeable.
pub fn parse_generator(spec: &str) -> Result<FFunction> {
    let norm = spec.trim().to_ascii_lowercase().replace('_', "-");
    let (name, arg) = match norm.split_once(':') {
        Some((n, a)) => (n.to_string(), Some(a.to_string())),
        None => (norm.clone(), None),
    };
    let param = |what: &str| -> Result<f64> {
        arg.as_deref()
            .ok_or_else(|| Error::BadParam(format!("{what} needs a parameter, e.g. {what}:0.5")))?
            .parse::<f64>()
            .map_err(|_| Error::BadParam(format!("bad {what} parameter in {spec:?}")))
    };
    let no_arg = |f: FFunction| {
        if arg.is_some() {
            Err(Error::BadParam(format!("{name} takes no parameter")))
        } else {
            Ok(f)
        }
    };
    match name.as_str() {
        "kl" => no_arg(FFunction::kl()),
        "reverse-kl" => no_arg(FFunction::reverse_kl()),
        "hellinger" => no_arg(FFunction::hellinger()),
        "sq-hellinger" => no_arg(FFunction::sq_hellinger()),
        "variational" => no_arg(FFunction::variational()),
        "half-variational" => no_arg(FFunction::half_variational()),
        "alpha" => FFunction::alpha(param("alpha")?),
        "e-gamma" => FFunction::e_gamma(param("e-gamma")?),
        other => Err(Error::BadParam(format!("unknown generator {other:?}"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub value: f64,
    pub finite: bool,
}

impl DivergenceValue {
    fn from_sum(value: f64) -> Self {
        DivergenceValue {
            value,
            finite: value.is_finite(),
        }
    }
}

/// `sum_z Q(z) f(P(z)/Q(z))` with `0 f(0/0) = 0` and `0 f(a/0) = a c_f`.
pub fn f_divergence(
    f: &FFunction,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
) -> Result<DivergenceValue> {
    p.same_alphabet(q)?;
    Ok(divergence_of(f, p.probs(), q.probs()))
}

/// Same as [`f_divergence`] on raw mass vectors of equal length.
pub fn divergence_of(f: &FFunction, p: &[f64], q: &[f64]) -> DivergenceValue {
    assert_eq!(p.len(), q.len(), "mass vectors differ in length");
    let mut sum = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        sum += term(f, a, b);
    }
    DivergenceValue::from_sum(sum)
}

fn term(f: &FFunction, a: f64, b: f64) -> f64 {
    if b > 0.0 {
        if a == 0.0 {
            b * f.f_at_zero
        } else {
            b * f.eval(a / b)
        }
    } else if a > 0.0 {
        a * f.c_f
    } else {
        0.0
    }
}

/// Exact divergence for piecewise-linear generators; `None` otherwise.
pub fn divergence_exact(
    f: &FFunction,
    p: &[BigRational],
    q: &[BigRational],
) -> Option<BigRational> {
    if !f.is_piecewise_linear() {
        return None;
    }
    assert_eq!(p.len(), q.len(), "mass vectors differ in length");
    let c_f = f.c_f_exact()?;
    let mut sum = BigRational::zero();
    for (a, b) in p.iter().zip(q) {
        if b.is_positive() {
            sum += b * f.eval_exact(&(a / b))?;
        } else if a.is_positive() {
            sum += a * &c_f;
        }
    }
    Some(sum)
}

/// The offset function `f0`, stored as a generator with `c_{f0} = 0`.
#[derive(Debug, Clone)]
pub struct OffsetFunction {
    origin: FFunction,
    f0: FFunction,
}

impl OffsetFunction {
    pub fn origin(&self) -> &FFunction {
        &self.origin
    }

    pub fn as_generator(&self) -> &FFunction {
        &self.f0
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.f0.eval(t)
    }

    /// `f0(0)`, the supremum of admissible levels.
    pub fn at_zero(&self) -> f64 {
        self.f0.f_at_zero
    }

    /// `f0^{-1}(d) = inf { t : f0(t) = d }` on `[0, 1]`.
    pub fn inverse(&self, d: f64) -> Result<f64> {
        self.check_level(d)?;
        Ok(match &self.f0.closed_inverse {
            Some(inv) => inv(d),
            None => self.inverse_bisect(d),
        })
    }

    /// Bisection for `inf { t in [0,1] : f0(t) <= d }`; on flat pieces this
    /// returns the left edge.
    pub fn inverse_bisect(&self, d: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-15 {
            let mid = 0.5 * (lo + hi);
            if self.eval(mid) <= d {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Exact inverse for piecewise-linear generators.
    pub fn inverse_exact(&self, d: &BigRational) -> Option<BigRational> {
        let one = BigRational::one();
        match self.origin.kind {
            Kind::HalfVariational | Kind::EGamma(_) => Some(one - d),
            Kind::Variational => Some(one - d / BigRational::from_integer(2.into())),
            _ => None,
        }
    }

    pub fn check_level(&self, d: f64) -> Result<()> {
        if !(d >= 0.0 && d < self.at_zero()) {
            return Err(Error::OutOfRange {
                level: d,
                limit: self.at_zero(),
            });
        }
        Ok(())
    }
}

/// Builds `f0(t) = f(t) + c_f (1 - t)`; requires finite `c_f`.
pub fn offset(f: &FFunction) -> Result<OffsetFunction> {
    if !f.c_f.is_finite() {
        return Err(Error::C2PrimeViolated(f.name.clone()));
    }
    let c = f.c_f;
    let inner = f.eval.clone();
    let eval: EvalFn = if c == 0.0 {
        inner
    } else {
        Arc::new(move |t| inner(t) + c * (1.0 - t))
    };
    let f0 = FFunction {
        name: if c == 0.0 {
            f.name.clone()
        } else {
            format!("{}_0", f.name)
        },
        kind: f.kind,
        eval,
        f_at_zero: f.f_at_zero + c,
        c_f: 0.0,
        closed_inverse: f.closed_inverse.clone(),
        offset: c != 0.0,
    };
    Ok(OffsetFunction {
        origin: f.clone(),
        f0,
    })
}

/// `f0^{-1}(d)` for the offset of `f`.
pub fn inverse(f: &FFunction, d: f64) -> Result<f64> {
    offset(f)?.inverse(d)
}

pub(crate) fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

pub(crate) fn is_convex_on(f: &dyn Fn(f64) -> f64, grid: &[f64]) -> bool {
    for w in grid.windows(3) {
        for lambda in [0.25, 0.5, 0.75] {
            let (t1, t2) = (w[0], w[2]);
            let mid = lambda * t1 + (1.0 - lambda) * t2;
            let chord = lambda * f(t1) + (1.0 - lambda) * f(t2);
            let scale = 1.0 + f(t1).abs().max(f(t2).abs());
            if f(mid) > chord + 1e-12 * scale {
                return false;
            }
        }
    }
    true
}
