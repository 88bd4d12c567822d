//! The paired sweep: for every (kind, α, seed) cell one hard instance, one
//! corrupted advice and one arrival order shared by all variants.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::time::Instant;

use rayon::prelude::*;
use tam_core::algorithms::{greedy, ranking, test_and_match, AblationFlags, Decision, Instance, ShortCircuit, TamParams};
use tam_core::disttest::Verdict;
use tam_core::instances::{
    corrupt_advice, gen_hard_instance, random_order, write_histogram, CorruptionKind, CorruptionSpec,
    HardInstanceParams,
};
use tam_core::rng::{stream_rng, Stream};
use tam_core::TypeHistogram;

use crate::{BenchError, Result};

/// Worker-pool size override.
pub const WORKERS_ENV: &str = "TAM_WORKERS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantKind {
    Ranking,
    Greedy,
    Tam(AblationFlags),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variant {
    pub name: String,
    pub kind: VariantKind,
}

impl Variant {
    pub const DEFAULT_NAMES: [&'static str; 6] =
        ["Ranking", "Greedy", "TaM-all", "TaM-no-remap", "TaM-no-bucket", "TaM-no-patch"];

    pub fn new(name: &str, kind: VariantKind) -> Self {
        Variant { name: name.to_string(), kind }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let all = AblationFlags::ALL;
        let kind = match name {
            "Ranking" => VariantKind::Ranking,
            "Greedy" => VariantKind::Greedy,
            "TaM-all" => VariantKind::Tam(all),
            "TaM-no-remap" => VariantKind::Tam(AblationFlags { use_remap: false, ..all }),
            "TaM-no-bucket" => VariantKind::Tam(AblationFlags { use_bucket: false, ..all }),
            "TaM-no-patch" => VariantKind::Tam(AblationFlags { use_patch: false, ..all }),
            "TaM-none" => VariantKind::Tam(AblationFlags::NONE),
            other => {
                return Err(BenchError::Config(format!(
                    "unknown variant {other:?}; expected one of {}, TaM-none",
                    Self::DEFAULT_NAMES.join(", ")
                )))
            }
        };
        Ok(Variant::new(name, kind))
    }

    pub fn defaults() -> Vec<Variant> {
        Self::DEFAULT_NAMES.iter().map(|n| Self::by_name(n).unwrap()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub alphas: Vec<f64>,
    pub kinds: Vec<CorruptionKind>,
    pub variants: Vec<Variant>,
    pub params: TamParams,
    pub record_wall_time: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(BenchError::Config(msg.to_string()));
        if self.seeds.is_empty() || self.alphas.is_empty() || self.kinds.is_empty() || self.variants.is_empty() {
            return bad("seeds, alphas, kinds and variants must be nonempty");
        }
        if self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return bad("alphas must lie in [0, 1]");
        }
        for (i, v) in self.variants.iter().enumerate() {
            if self.variants[..i].iter().any(|w| w.name == v.name) {
                return Err(BenchError::Config(format!("duplicate variant name {:?}", v.name)));
            }
        }
        gen_hard_instance(&HardInstanceParams::new(self.n, 0))?;
        Ok(())
    }

    /// Number of (kind, α, seed) cells.
    pub fn cells(&self) -> usize {
        self.kinds.len() * self.alphas.len() * self.seeds.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub variant: String,
    pub kind: CorruptionKind,
    pub alpha: f64,
    pub seed: u64,
    pub m: usize,
    pub n_star: usize,
    /// `m / n_star`, or 0 for an errored cell.
    pub ratio: f64,
    /// `pass`, `fail`, `weak_advice`, `budget_too_large`, `none` for the
    /// baselines, or `error: <message>`.
    pub test_verdict: String,
    pub l1_hat: Option<f64>,
    pub k_consumed: usize,
    pub wall_time_ms: f64,
    /// Hash of the instance, advice and order; written only in verbose mode.
    pub instance_hash: Option<u64>,
}

impl ResultRow {
    pub fn is_error(&self) -> bool {
        self.test_verdict.starts_with("error")
    }
}

/// The `test_verdict` column value for a TaM run.
pub fn verdict_label(decision: &Decision) -> &'static str {
    match decision {
        Decision::Tested(r) if r.verdict == Verdict::Pass => "pass",
        Decision::Tested(_) => "fail",
        Decision::BaselineOnly(ShortCircuit::WeakAdvice) => "weak_advice",
        Decision::BaselineOnly(ShortCircuit::BudgetTooLarge) => "budget_too_large",
    }
}

struct Prepared {
    truth: TypeHistogram,
    instance: Instance,
    order: Vec<usize>,
}

fn prepare(n: usize, seed: u64) -> tam_core::Result<Prepared> {
    let truth = gen_hard_instance(&HardInstanceParams::new(n, seed))?;
    let instance = Instance::from_histogram(&truth);
    let order = random_order(n, &mut stream_rng(seed, Stream::Arrival));
    Ok(Prepared { truth, instance, order })
}

fn cell_hash(truth: &TypeHistogram, advice: &TypeHistogram, order: &[usize]) -> u64 {
    let mut h = DefaultHasher::new();
    write_histogram(truth).hash(&mut h);
    write_histogram(advice).hash(&mut h);
    order.hash(&mut h);
    h.finish()
}

struct Cell {
    kind: CorruptionKind,
    alpha: f64,
    seed: u64,
    seed_index: usize,
}

fn run_cell(spec: &SweepSpec, cell: &Cell, prepared: &tam_core::Result<Prepared>, hash: bool) -> Vec<ResultRow> {
    let blank = |variant: &Variant| ResultRow {
        variant: variant.name.clone(),
        kind: cell.kind,
        alpha: cell.alpha,
        seed: cell.seed,
        m: 0,
        n_star: 0,
        ratio: 0.0,
        test_verdict: "none".into(),
        l1_hat: None,
        k_consumed: 0,
        wall_time_ms: 0.0,
        instance_hash: None,
    };
    let errored = |variant: &Variant, n_star: usize, msg: String| ResultRow {
        n_star,
        test_verdict: format!("error: {msg}"),
        ..blank(variant)
    };

    let p = match prepared {
        Ok(p) => p,
        Err(e) => return spec.variants.iter().map(|v| errored(v, 0, e.to_string())).collect(),
    };
    let n_star = p.instance.n_star();
    let advice = match corrupt_advice(&p.truth, &CorruptionSpec::new(cell.alpha, cell.kind, spec.n, cell.seed)) {
        Ok(a) => a,
        Err(e) => return spec.variants.iter().map(|v| errored(v, n_star, e.to_string())).collect(),
    };
    let instance_hash = hash.then(|| cell_hash(&p.truth, &advice, &p.order));

    spec.variants
        .iter()
        .map(|variant| {
            let start = Instant::now();
            let g = p.instance.graph();
            let result = match variant.kind {
                VariantKind::Ranking => {
                    ranking(g, &p.order, &mut stream_rng(cell.seed, Stream::Baseline)).map(|m| (m.size(), None))
                }
                VariantKind::Greedy => greedy(g, &p.order).map(|m| (m.size(), None)),
                VariantKind::Tam(flags) => test_and_match(&p.instance, &p.order, &advice, flags, &spec.params, cell.seed)
                    .map(|out| (out.m(), Some(out))),
            };
            // Whole microseconds, so the value survives the CSV's 3 decimals.
            let wall_time_ms =
                if spec.record_wall_time { (start.elapsed().as_secs_f64() * 1e6).round() / 1e3 } else { 0.0 };
            let mut row = match result {
                Ok((m, out)) => ResultRow {
                    m,
                    n_star,
                    ratio: m as f64 / n_star as f64,
                    test_verdict: out.as_ref().map_or("none", |o| verdict_label(&o.decision)).into(),
                    l1_hat: out.as_ref().and_then(|o| o.l1_hat()),
                    k_consumed: out.as_ref().map_or(0, |o| o.k_consumed()),
                    wall_time_ms,
                    ..blank(variant)
                },
                Err(e) => errored(variant, n_star, e.to_string()),
            };
            row.instance_hash = instance_hash;
            row
        })
        .collect()
}

fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let workers: usize = v
            .parse()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| BenchError::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer")))?;
        builder = builder.num_threads(workers);
    }
    builder.build().map_err(|e| BenchError::Config(e.to_string()))
}

/// Runs every variant on every cell. Rows come out in grid order (kind, α,
/// seed, variant), independent of scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>> {
    run_sweep_with(spec, false)
}

/// As [`run_sweep`]; with `hash` set each row carries the cell's instance
/// hash.
pub fn run_sweep_with(spec: &SweepSpec, hash: bool) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let pool = pool()?;
    let cells: Vec<Cell> = spec
        .kinds
        .iter()
        .flat_map(|&kind| {
            spec.alphas.iter().flat_map(move |&alpha| {
                spec.seeds.iter().enumerate().map(move |(seed_index, &seed)| Cell { kind, alpha, seed, seed_index })
            })
        })
        .collect();
    let rows = pool.install(|| {
        let prepared: Vec<tam_core::Result<Prepared>> = spec.seeds.par_iter().map(|&s| prepare(spec.n, s)).collect();
        cells
            .par_iter()
            .map(|cell| run_cell(spec, cell, &prepared[cell.seed_index], hash))
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}
