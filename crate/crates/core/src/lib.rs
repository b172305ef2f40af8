//! f-divergences, smooth max/min entropies, and constructive resolvability
//! and intrinsic-randomness maps for finite-alphabet sources.
//!
//! Everything is measured in nats. Block sources are either explicit
//! distributions over sequences ([`distributions::SourceBlock`]) or implicit
//! i.i.d. products compressed into type classes
//! ([`distributions::ProductSourceView`]).

pub mod distributions;
pub mod error;
pub mod exact;
pub mod exec;
pub mod fdiv;
pub mod intrinsic;
pub mod resolvability;
pub mod smooth_entropy;
pub mod spectrum;

pub use distributions::{
    iid_power, make_distribution, materialize, spectrum_of, FiniteDistribution, ProductSourceView,
    SourceBlock, SourceSpec, SpectrumSample, UniformDistribution,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use fdiv::{
    check_conditions, f_divergence, offset, parse_generator, registry, DivergenceValue, FFunction,
    OffsetFunction,
};
pub use intrinsic::{build_extractor, build_extractor_with_size, ExtractorMap};
pub use resolvability::{
    build_resolvability_map, rate_formula, RateEvaluation, RateRequest, ResolvabilityMap,
};
pub use smooth_entropy::{smooth_max_entropy, smooth_min_entropy, SmoothEntropyResult};
pub use spectrum::{
    equivalence_report, spectrum_rate, sweep_statistics, SpectrumOrder, SpectrumRate,
};
