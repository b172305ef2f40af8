//! Command-line front end: parses a [`RunConfig`], runs one computation and
//! writes JSON maps or CSV sweeps.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use smoothgen::distributions::{iid_power, materialize, SourceBlock};
use smoothgen::fdiv::divergence_of;
use smoothgen::intrinsic::{
    achieved_uniformity, build_extractor, build_extractor_with_size, intrinsic_converse_check,
    ir_rate_formula, verify_bins,
};
use smoothgen::resolvability::{
    achieved_divergence, build_resolvability_map, converse_check, counts_of_mapping,
    verify_quantization,
};
use smoothgen::smooth_entropy::{smooth_max_entropy, smooth_min_entropy, SourceRef};
use smoothgen::spectrum::{optimistic_intrinsic, optimistic_resolvability, OptimisticRates};
use smoothgen::{
    equivalence_report, make_distribution, parse_generator, rate_formula, Execution, FFunction,
    FiniteDistribution, RateEvaluation, RateRequest, SourceSpec,
};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "smoothgen",
    version,
    about = "Smooth entropies, resolvability and intrinsic randomness under f-divergences"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Machine-readable output on stdout
    #[arg(long, global = true)]
    pub json: bool,

    /// Run per-n cells on the calling thread only
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// D_f(P || Q) for two weight vectors
    Divergence(DivergenceArgs),
    /// Smooth max or min entropy of an i.i.d. block
    Entropy(EntropyArgs),
    /// Build a resolvability map {1..M} -> X^n
    Resolve(ResolveArgs),
    /// Build an extractor X^n -> {1..M}
    Extract(ExtractArgs),
    /// Rate sweep over n and nu
    Rates(RatesArgs),
    /// Smooth-entropy rates against spectrum quantiles
    Equivalence(EquivalenceArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DivergenceArgs {
    /// Generator name, e.g. kl, hellinger, alpha:0.5, e-gamma:2
    #[arg(long)]
    pub f: String,
    /// Comma-separated weights of P
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,
    /// Comma-separated weights of Q
    #[arg(long, value_delimiter = ',', required = true)]
    pub q: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntropyOrder {
    Max,
    Min,
}

#[derive(Args, Debug, Clone)]
pub struct EntropyArgs {
    /// bernoulli:p, uniform:M, weights:a,b,... or inline JSON
    #[arg(long)]
    pub source: String,
    #[arg(long, value_enum)]
    pub order: EntropyOrder,
    #[arg(long)]
    pub delta: f64,
    /// Block length (type classes are used above 1)
    #[arg(long, default_value_t = 1)]
    pub n: u32,
}

#[derive(Args, Debug, Clone)]
pub struct ResolveArgs {
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long)]
    pub f: String,
    /// Target divergence level
    #[arg(long = "D")]
    pub level: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Where to write the map
    #[arg(long, default_value = "map.json")]
    pub out: PathBuf,
    /// Random mappings checked against the converse bound
    #[arg(long, default_value_t = 0)]
    pub converse_trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct ExtractArgs {
    #[arg(long)]
    pub source: String,
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    #[arg(long)]
    pub f: String,
    /// Target divergence level
    #[arg(long = "Delta", alias = "D")]
    pub level: f64,
    #[arg(long)]
    pub gamma: f64,
    /// Output size; defaults to the largest size the construction guarantees
    #[arg(long)]
    pub m: Option<u64>,
    #[arg(long, default_value = "extractor.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub converse_trials: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Resolvability,
    Intrinsic,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Emit {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[arg(long)]
    pub source: String,
    #[arg(long)]
    pub f: String,
    #[arg(long = "D")]
    pub level: f64,
    /// Comma-separated nu ladder
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.01,0.001")]
    pub nu: Vec<f64>,
    /// Comma-separated, strictly increasing block lengths
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Emit::Csv)]
    pub emit: Emit,
}

#[derive(Args, Debug, Clone)]
pub struct RatesArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_enum, default_value_t = RateKind::Resolvability)]
    pub kind: RateKind,
    /// Reference first-order rate for the second-order column
    #[arg(long)]
    pub rate: Option<f64>,
    /// Trailing window for the liminf/limsup summary
    #[arg(long, default_value_t = 3)]
    pub window: usize,
}

#[derive(Args, Debug, Clone)]
pub struct EquivalenceArgs {
    #[command(flatten)]
    pub sweep: SweepArgs,
}

/// Exit status: 0 success, 2 infeasible target, 1 anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<smoothgen::Error>() {
        Some(e) if e.is_infeasible() => 2,
        _ => 1,
    }
}

pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let exec = if config.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match &config.command {
        Command::Divergence(a) => divergence(a, config.json, stdout),
        Command::Entropy(a) => entropy(a, config.json, stdout),
        Command::Resolve(a) => resolve(a, config.json, stdout),
        Command::Extract(a) => extract(a, config.json, stdout),
        Command::Rates(a) => rates(a, exec, stdout),
        Command::Equivalence(a) => equivalence(a, exec, stdout),
    }
}

fn generator(spec: &str) -> Result<FFunction> {
    parse_generator(spec).with_context(|| format!("--f {spec}"))
}

fn source(spec: &str) -> Result<FiniteDistribution> {
    SourceSpec::parse(spec)
        .and_then(|s| s.build())
        .with_context(|| format!("--source {spec}"))
}

fn block(spec: &str, n: u32) -> Result<SourceBlock> {
    let base = source(spec)?;
    Ok(materialize(&base, n)?)
}

fn print_json(stdout: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *stdout, value)?;
    writeln!(stdout)?;
    Ok(())
}

fn write_artifact(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn divergence(a: &DivergenceArgs, as_json: bool, stdout: &mut dyn Write) -> Result<()> {
    if a.p.len() != a.q.len() {
        bail!("--p has {} weights but --q has {}", a.p.len(), a.q.len());
    }
    let f = generator(&a.f)?;
    let p = make_distribution(&a.p).context("--p")?;
    let q = make_distribution(&a.q).context("--q")?;
    let d = divergence_of(&f, p.probs(), q.probs());
    if as_json {
        print_json(
            stdout,
            &json!({ "f": f.name(), "divergence_nats": d.value, "finite": d.finite }),
        )
    } else {
        writeln!(stdout, "D_{}(P||Q) = {} nats", f.name(), d.value)?;
        Ok(())
    }
}

fn entropy(a: &EntropyArgs, as_json: bool, stdout: &mut dyn Write) -> Result<()> {
    let base = source(&a.source)?;
    let view;
    let src = if a.n > 1 {
        view = iid_power(&base, a.n)?;
        SourceRef::from(&view)
    } else {
        SourceRef::from(&base)
    };
    let (name, r) = match a.order {
        EntropyOrder::Max => ("H0", smooth_max_entropy(src, a.delta)?),
        EntropyOrder::Min => ("Hinf", smooth_min_entropy(src, a.delta)?),
    };
    if as_json {
        print_json(
            stdout,
            &json!({
                "order": name,
                "n": a.n,
                "delta": a.delta,
                "entropy_nats": r.value,
                "rate_nats": r.value / a.n as f64,
                "set_size": r.set_size().map(|s| s.to_string()),
                "beta": r.beta(),
            }),
        )
    } else {
        writeln!(stdout, "{}", r.value)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ConverseSummary {
    trials: u32,
    seed: u64,
    checked: u32,
    vacuous: u32,
    violations: u32,
}

fn resolve(a: &ResolveArgs, as_json: bool, stdout: &mut dyn Write) -> Result<()> {
    let f = generator(&a.f)?;
    let src = block(&a.source, a.n)?;
    let map = build_resolvability_map(&src, &f, a.level, a.gamma)?;
    let quant = verify_quantization(&map, &src.dist);
    let achieved = achieved_divergence(&map, &src.dist, &f)?;
    let converse = resolvability_trials(&src, &f, map.m, a.converse_trials, a.seed)?;
    write_artifact(&a.out, &map)?;
    if as_json {
        return print_json(
            stdout,
            &json!({
                "map": a.out.display().to_string(),
                "M": map.m,
                "log_M_nats": map.log_m(),
                "achieved_nats": achieved.value,
                "level": a.level,
                "slack_nats": map.slack,
                "bound_nats": map.bound,
                "quantization_holds": quant.holds(),
                "converse": converse,
            }),
        );
    }
    writeln!(stdout, "M = {}  log M = {} nats", map.m, map.log_m())?;
    writeln!(
        stdout,
        "achieved D_{} = {}  (level {} + slack {})",
        f.name(),
        achieved.value,
        a.level,
        map.slack
    )?;
    if a.converse_trials > 0 {
        writeln!(
            stdout,
            "converse: {} random mappings, {} violations",
            converse.trials, converse.violations
        )?;
    }
    Ok(())
}

// Random maps {1..M} -> X^n, each measured against the entropy lower bound.
fn resolvability_trials(
    src: &SourceBlock,
    f: &FFunction,
    m: u64,
    trials: u32,
    seed: u64,
) -> Result<ConverseSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = src.dist.len();
    let mut s = ConverseSummary {
        trials,
        seed,
        checked: 0,
        vacuous: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let size = rng.gen_range(1..=m.clamp(2, 1 << 16));
        let assignment: Vec<usize> = (0..size).map(|_| rng.gen_range(0..k)).collect();
        let counts = counts_of_mapping(&assignment, k);
        let q: Vec<f64> = counts.iter().map(|&c| c as f64 / size as f64).collect();
        let d = divergence_of(f, src.dist.probs(), &q);
        let out = converse_check(size, d.value, &src.dist, f)?;
        s.checked += 1;
        s.vacuous += out.vacuous as u32;
        s.violations += !out.holds as u32;
    }
    Ok(s)
}

fn extract(a: &ExtractArgs, as_json: bool, stdout: &mut dyn Write) -> Result<()> {
    let f = generator(&a.f)?;
    let src = block(&a.source, a.n)?;
    let map = match a.m {
        Some(m) => build_extractor_with_size(&src, &f, a.level, a.gamma, m)?,
        None => build_extractor(&src, &f, a.level, a.gamma)?,
    };
    let bins = verify_bins(&map, &src.dist);
    let achieved = achieved_uniformity(&map, &src.dist, &f)?;
    let converse = intrinsic_trials(&src, &f, map.m, a.converse_trials, a.seed)?;
    write_artifact(&a.out, &map)?;
    if as_json {
        return print_json(
            stdout,
            &json!({
                "extractor": a.out.display().to_string(),
                "M": map.m,
                "log_M_nats": map.log_m(),
                "achieved_nats": achieved.value,
                "level": a.level,
                "delta_n_nats": map.delta_n,
                "bound_nats": map.bound,
                "bins_hold": bins.holds(),
                "converse": converse,
            }),
        );
    }
    writeln!(stdout, "M = {}  log M = {} nats", map.m, map.log_m())?;
    writeln!(
        stdout,
        "achieved D_{} = {}  (level {} + delta_n {})",
        f.name(),
        achieved.value,
        a.level,
        map.delta_n
    )?;
    if a.converse_trials > 0 {
        writeln!(
            stdout,
            "converse: {} random extractors, {} violations",
            converse.trials, converse.violations
        )?;
    }
    Ok(())
}

// Random maps X^n -> {1..M'} for M' up to 2M.
fn intrinsic_trials(
    src: &SourceBlock,
    f: &FFunction,
    m: u64,
    trials: u32,
    seed: u64,
) -> Result<ConverseSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = src.dist.len();
    let mut s = ConverseSummary {
        trials,
        seed,
        checked: 0,
        vacuous: 0,
        violations: 0,
    };
    for _ in 0..trials {
        let size = rng.gen_range(1..=(2 * m).clamp(2, 1 << 16));
        let mut mass = vec![0.0; size as usize];
        for i in 0..k {
            mass[rng.gen_range(0..size as usize)] += src.dist.prob(i);
        }
        let u = vec![1.0 / size as f64; size as usize];
        let d = divergence_of(f, &mass, &u);
        let out = intrinsic_converse_check(size, d.value, src, f)?;
        s.checked += 1;
        s.vacuous += out.vacuous as u32;
        s.violations += !out.holds as u32;
    }
    Ok(s)
}

fn request(s: &SweepArgs, rate: Option<f64>, exec: Execution) -> RateRequest {
    RateRequest {
        level: s.level,
        nu: s.nu.clone(),
        n: s.n.clone(),
        rate,
        exec,
    }
}

fn emit(
    s: &SweepArgs,
    stdout: &mut dyn Write,
    csv_text: String,
    json_value: serde_json::Value,
) -> Result<()> {
    let text = match s.emit {
        Emit::Csv => csv_text,
        Emit::Json => {
            let mut t = serde_json::to_string_pretty(&json_value)?;
            t.push('\n');
            t
        }
    };
    match &s.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(stdout.write_all(text.as_bytes())?),
    }
}

fn csv_string(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn rates(a: &RatesArgs, exec: Execution, stdout: &mut dyn Write) -> Result<()> {
    let s = &a.sweep;
    let f = generator(&s.f)?;
    let base = source(&s.source)?;
    let req = request(s, a.rate, exec);
    let rows = match a.kind {
        RateKind::Resolvability => rate_formula(&base, &f, &req)?,
        RateKind::Intrinsic => ir_rate_formula(&base, &f, &req)?,
    };
    let summary = summarize(&rows, &s.nu, a.kind, a.window);
    let text = csv_string(
        &[
            "n",
            "nu",
            "delta",
            "entropy_nats",
            "rate_nats",
            "second_order_nats",
            "alt_rate_nats",
        ],
        rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.nu.to_string(),
                r.delta.to_string(),
                r.value.to_string(),
                r.first_order.to_string(),
                opt(r.second_order),
                opt(r.alt_first_order),
            ]
        }),
    )?;
    emit(
        s,
        stdout,
        text,
        json!({ "f": f.name(), "rows": rows, "summary": summary }),
    )
}

#[derive(Serialize)]
struct NuSummary {
    nu: f64,
    #[serde(flatten)]
    rates: OptimisticRates,
}

fn summarize(rows: &[RateEvaluation], nu: &[f64], kind: RateKind, window: usize) -> Vec<NuSummary> {
    nu.iter()
        .filter_map(|&v| {
            let per: Vec<RateEvaluation> = rows.iter().filter(|r| r.nu == v).cloned().collect();
            let rates = match kind {
                RateKind::Resolvability => optimistic_resolvability(&per, window),
                RateKind::Intrinsic => optimistic_intrinsic(&per, window),
            };
            rates.ok().map(|rates| NuSummary { nu: v, rates })
        })
        .collect()
}

fn equivalence(a: &EquivalenceArgs, exec: Execution, stdout: &mut dyn Write) -> Result<()> {
    let s = &a.sweep;
    let f = generator(&s.f)?;
    let base = source(&s.source)?;
    let rep = equivalence_report(&base, &f, s.level, &s.nu, &s.n, exec)?;
    let text = csv_string(
        &[
            "n",
            "nu",
            "h0_rate_nats",
            "hinf_rate_nats",
            "kbar_nats",
            "kunder_nats",
            "gap0_nats",
            "gapinf_nats",
        ],
        rep.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.nu.to_string(),
                r.h0_rate.to_string(),
                r.hinf_rate.to_string(),
                r.kbar.to_string(),
                r.kunder.to_string(),
                r.gap0.to_string(),
                r.gapinf.to_string(),
            ]
        }),
    )?;
    emit(s, stdout, text, serde_json::to_value(&rep)?)
}
