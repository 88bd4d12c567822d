//! Python module `tam`. Histograms cross the boundary in the text format of
//! `tam_core::instances` (`n=<int>` then `count<TAB>i1,i2,...` lines).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use tam_bench::report::to_csv_bytes;
use tam_bench::sweep::verdict_label;
use tam_bench::{run_sweep, Config, Variant, VariantKind};
use tam_core::algorithms::{greedy, hardness_demo, ranking, test_and_match, Instance};
use tam_core::instances::{
    corrupt_advice as corrupt, gen_hard_instance, parse_histogram, random_order, write_histogram, CorruptionKind,
    CorruptionSpec, Gadget, HardInstanceParams,
};
use tam_core::rng::{stream_rng, Stream};
use tam_core::{l1_histogram, max_matching, ImpliedGraph, TypeHistogram};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse(text: &str) -> PyResult<TypeHistogram> {
    parse_histogram(text).map_err(value_err)
}

/// Hard instance over `n` vertices as histogram text.
#[pyfunction]
fn hard_instance(n: usize, seed: u64) -> PyResult<String> {
    gen_hard_instance(&HardInstanceParams::new(n, seed)).map(|h| write_histogram(&h)).map_err(value_err)
}

/// Corrupts `round(alpha * n)` online vertices; `kind` is `add` or `replace`.
#[pyfunction]
fn corrupt_advice(truth: &str, alpha: f64, kind: &str, seed: u64) -> PyResult<String> {
    let truth = parse(truth)?;
    let kind: CorruptionKind = kind.parse().map_err(value_err)?;
    corrupt(&truth, &CorruptionSpec::new(alpha, kind, truth.n(), seed)).map(|h| write_histogram(&h)).map_err(value_err)
}

/// Count-scale L1 distance.
#[pyfunction]
fn l1_distance(a: &str, b: &str) -> PyResult<u64> {
    l1_histogram(&parse(a)?, &parse(b)?).map_err(value_err)
}

/// Size of a maximum matching of the histogram's implied graph.
#[pyfunction]
fn max_matching_size(hist: &str) -> PyResult<usize> {
    Ok(max_matching(&ImpliedGraph::from_histogram(&parse(hist)?)).size())
}

/// One run under the arrival order drawn from `seed`. Returns a dict with
/// `m`, `n_star`, `ratio`, `verdict`, `l1_hat` and `k_consumed`.
#[pyfunction]
#[pyo3(signature = (truth, advice, variant = "TaM-all", seed = 0))]
fn run<'py>(py: Python<'py>, truth: &str, advice: &str, variant: &str, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let (truth, advice) = (parse(truth)?, parse(advice)?);
    let variant = Variant::by_name(variant).map_err(value_err)?;
    let instance = Instance::from_histogram(&truth);
    let order = random_order(truth.n(), &mut stream_rng(seed, Stream::Arrival));
    let out = PyDict::new(py);
    let m = match variant.kind {
        VariantKind::Ranking => {
            ranking(instance.graph(), &order, &mut stream_rng(seed, Stream::Baseline)).map_err(value_err)?.size()
        }
        VariantKind::Greedy => greedy(instance.graph(), &order).map_err(value_err)?.size(),
        VariantKind::Tam(flags) => {
            let r = test_and_match(&instance, &order, &advice, flags, &Default::default(), seed).map_err(value_err)?;
            out.set_item("verdict", verdict_label(&r.decision))?;
            out.set_item("l1_hat", r.l1_hat())?;
            out.set_item("k_consumed", r.k_consumed())?;
            r.m()
        }
    };
    out.set_item("m", m)?;
    out.set_item("n_star", instance.n_star())?;
    out.set_item("ratio", m as f64 / instance.n_star() as f64)?;
    Ok(out)
}

/// Ratios of blind mimicking on the gadget pair: (correct, wrong advice).
#[pyfunction]
#[pyo3(signature = (n = 1000))]
fn demo_hardness(n: usize) -> PyResult<(f64, f64)> {
    let right = hardness_demo(n, Gadget::First, Gadget::First).map_err(value_err)?;
    let wrong = hardness_demo(n, Gadget::First, Gadget::Second).map_err(value_err)?;
    Ok((right, wrong))
}

/// Runs a sweep described by TOML text and returns the CSV.
#[pyfunction]
fn sweep(py: Python<'_>, config: &str) -> PyResult<String> {
    let spec = Config::parse(config).and_then(|c| c.to_spec()).map_err(value_err)?;
    let rows = py.detach(|| run_sweep(&spec)).map_err(value_err)?;
    Ok(String::from_utf8(to_csv_bytes(&rows, false)).expect("CSV is UTF-8"))
}

#[pymodule]
fn tam(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(hard_instance, m)?)?;
    m.add_function(wrap_pyfunction!(corrupt_advice, m)?)?;
    m.add_function(wrap_pyfunction!(l1_distance, m)?)?;
    m.add_function(wrap_pyfunction!(max_matching_size, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(demo_hardness, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
