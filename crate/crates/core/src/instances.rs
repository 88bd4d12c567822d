//! Benchmark graph generators, advice corruption, random arrival orders and
//! the line-oriented histogram text format.

use std::fmt::Write as _;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::types::{TypeHistogram, VertexType};

/// Threshold constant of the hard known-IID family.
pub const C25: f64 = 0.81034;

#[derive(Clone, Debug, PartialEq)]
pub struct HardInstanceParams {
    pub n: usize,
    pub c25: f64,
    pub seed: u64,
}

impl HardInstanceParams {
    pub fn new(n: usize, seed: u64) -> Self {
        HardInstanceParams { n, c25: C25, seed }
    }

    /// Size of each of the two sparse classes, `round(c25 / 2 · n)` (half up).
    pub fn class_size(&self) -> usize {
        (self.c25 / 2.0 * self.n as f64 + 0.5).floor() as usize
    }

    fn validate(&self) -> Result<usize> {
        if self.n < 4 || self.n % 2 != 0 {
            return invalid(format!("hard instance needs an even n >= 4, got {}", self.n));
        }
        if !(0.0..=1.0).contains(&self.c25) {
            return invalid(format!("c25 = {} outside [0, 1]", self.c25));
        }
        let m = self.class_size();
        // At least one fully connected vertex must remain.
        if 2 * m >= self.n {
            return invalid(format!(
                "2m = {} leaves no fully connected vertices for n = {}",
                2 * m,
                self.n
            ));
        }
        Ok(m)
    }
}

/// `m` random 2-subsets, `m` random 3-subsets and `n − 2m` copies of the full
/// type. Subsets are drawn independently per online vertex.
pub fn gen_hard_instance(params: &HardInstanceParams) -> Result<TypeHistogram> {
    let m = params.validate()?;
    let n = params.n;
    let mut rng = stream_rng(params.seed, Stream::Instance);
    let mut types = Vec::with_capacity(n);
    for size in [2usize, 3] {
        for _ in 0..m {
            let nb = index::sample(&mut rng, n, size).into_iter().map(|u| u as u32).collect();
            types.push(VertexType::new(nb, n)?);
        }
    }
    types.extend(std::iter::repeat_n(VertexType::full(n), n - 2 * m));
    TypeHistogram::from_types(n, types)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gadget {
    First,
    Second,
}

/// The two indistinguishable graphs: online `v_j` (`j < n/2`) sees
/// `{u_j, u_{j+n/2}}`; the second half sees `{u_{j−n/2}}` in the first gadget
/// and `{u_j}` in the second. Returned with the canonical order (first half
/// first).
pub fn gen_gadget(n: usize, which: Gadget) -> Result<(TypeHistogram, Vec<VertexType>)> {
    if n < 2 || n % 2 != 0 {
        return invalid(format!("gadget needs an even n >= 2, got {n}"));
    }
    let half = n / 2;
    let mut order = Vec::with_capacity(n);
    for j in 0..n {
        let nb = if j < half {
            vec![j as u32, (j + half) as u32]
        } else {
            match which {
                Gadget::First => vec![(j - half) as u32],
                Gadget::Second => vec![j as u32],
            }
        };
        order.push(VertexType::new(nb, n)?);
    }
    let hist = TypeHistogram::from_types(n, order.iter().cloned())?;
    Ok((hist, order))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CorruptionKind {
    /// New type = old type ∪ random type.
    AddUnion,
    /// New type = random type.
    Replace,
}

impl CorruptionKind {
    pub fn name(self) -> &'static str {
        match self {
            CorruptionKind::AddUnion => "add",
            CorruptionKind::Replace => "replace",
        }
    }
}

impl std::str::FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" | "add-union" | "1" => Ok(CorruptionKind::AddUnion),
            "replace" | "2" => Ok(CorruptionKind::Replace),
            other => invalid(format!("unknown corruption kind {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionSpec {
    pub alpha: f64,
    pub kind: CorruptionKind,
    pub edge_prob: f64,
    pub seed: u64,
}

impl CorruptionSpec {
    /// Uses the default edge probability `ln(n) / (10 n)`.
    pub fn new(alpha: f64, kind: CorruptionKind, n: usize, seed: u64) -> Self {
        let edge_prob = (n as f64).ln() / (10.0 * n as f64);
        CorruptionSpec { alpha, kind, edge_prob, seed }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return invalid(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if !(self.edge_prob > 0.0 && self.edge_prob < 1.0) {
            return invalid(format!("edge probability {} outside (0, 1)", self.edge_prob));
        }
        Ok(())
    }
}

/// Corrupts exactly `round(α·n)` expanded online vertices chosen without
/// replacement. Selection and random types are drawn from the corruption
/// stream in permutation order, so for a fixed seed the corrupted set at a
/// smaller `α` is a prefix of the set at a larger one.
pub fn corrupt_advice(c_star: &TypeHistogram, spec: &CorruptionSpec) -> Result<TypeHistogram> {
    spec.validate()?;
    let n = c_star.n();
    let mut types = c_star.expand();
    let k = (spec.alpha * n as f64).round() as usize;
    if k == 0 {
        return Ok(c_star.clone());
    }
    let mut rng = stream_rng(spec.seed, Stream::Corruption);
    let mut positions: Vec<usize> = (0..types.len()).collect();
    positions.shuffle(&mut rng);
    let degree = Binomial::new(n as u64, spec.edge_prob)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    for &pos in positions.iter().take(k) {
        let d = degree.sample(&mut rng) as usize;
        let nb = index::sample(&mut rng, n, d).into_iter().map(|u| u as u32).collect();
        let random = VertexType::new(nb, n)?;
        types[pos] = match spec.kind {
            CorruptionKind::AddUnion => types[pos].union(&random),
            CorruptionKind::Replace => random,
        };
    }
    TypeHistogram::from_types(n, types)
}

/// Uniform permutation of `len` online positions (Fisher–Yates).
pub fn random_order<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    order
}

/// `n=<int>` header, then `count<TAB>i1,i2,...` per distinct type in sorted
/// order. Every line ends with `\n`.
pub fn write_histogram(hist: &TypeHistogram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n={}", hist.n());
    for (t, c) in hist.iter() {
        let _ = writeln!(out, "{c}\t{t}");
    }
    out
}

pub fn parse_histogram(text: &str) -> Result<TypeHistogram> {
    let mut lines = text.lines().enumerate();
    let parse_err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "empty input".into()))?;
    let n: usize = header
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(0, format!("expected `n=<int>`, found {header:?}")))?;
    let mut counts = Vec::new();
    for (i, line) in lines {
        let (count, list) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(i, "expected `count<TAB>indices`".into()))?;
        let count: u64 = count.parse().map_err(|_| parse_err(i, format!("bad count {count:?}")))?;
        let nb = if list.is_empty() {
            Vec::new()
        } else {
            list.split(',')
                .map(|x| x.parse::<u32>().map_err(|_| parse_err(i, format!("bad index {x:?}"))))
                .collect::<Result<Vec<_>>>()?
        };
        let t = VertexType::new(nb, n).map_err(|e| parse_err(i, e.to_string()))?;
        counts.push((t, count));
    }
    TypeHistogram::from_counts(n, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{max_matching, ImpliedGraph};
    use crate::types::l1_normalized;

    #[test]
    fn hard_instance_class_sizes() {
        let h = gen_hard_instance(&HardInstanceParams::new(2000, 3)).unwrap();
        let mut by_size = [0u64; 3];
        for (t, c) in h.iter() {
            match t.len() {
                2 => by_size[0] += c,
                3 => by_size[1] += c,
                2000 => by_size[2] += c,
                other => panic!("unexpected type size {other}"),
            }
        }
        assert_eq!(by_size, [810, 810, 380]);
    }

    #[test]
    fn hard_instance_support_is_roughly_point_eight_n() {
        for seed in 0..10 {
            let h = gen_hard_instance(&HardInstanceParams::new(2000, seed)).unwrap();
            let r = h.support_size();
            // 1620 sparse draws collide only rarely, plus the single full type.
            assert!((1600..=1621).contains(&r), "support {r}");
        }
    }

    #[test]
    fn hard_instance_rejects_small_or_odd_n() {
        assert!(gen_hard_instance(&HardInstanceParams::new(4, 0)).is_err());
        assert!(gen_hard_instance(&HardInstanceParams::new(11, 0)).is_err());
        assert!(gen_hard_instance(&HardInstanceParams::new(10, 0)).is_ok());
    }

    #[test]
    fn gadgets_for_n_two() {
        let vt = |v: &[u32]| VertexType::new(v.to_vec(), 2).unwrap();
        let (_, first) = gen_gadget(2, Gadget::First).unwrap();
        assert_eq!(first, vec![vt(&[0, 1]), vt(&[0])]);
        let (_, second) = gen_gadget(2, Gadget::Second).unwrap();
        assert_eq!(second, vec![vt(&[0, 1]), vt(&[1])]);
        assert!(gen_gadget(3, Gadget::First).is_err());
    }

    #[test]
    fn gadgets_share_prefix_and_have_perfect_matchings() {
        for n in (2..=20).step_by(2) {
            let (h1, o1) = gen_gadget(n, Gadget::First).unwrap();
            let (h2, o2) = gen_gadget(n, Gadget::Second).unwrap();
            assert_eq!(o1[..n / 2], o2[..n / 2]);
            assert_ne!(o1[n / 2..], o2[n / 2..]);
            for h in [h1, h2] {
                assert_eq!(max_matching(&ImpliedGraph::from_histogram(&h)).size(), n);
            }
        }
    }

    #[test]
    fn zero_alpha_is_identity() {
        let h = gen_hard_instance(&HardInstanceParams::new(200, 1)).unwrap();
        let spec = CorruptionSpec::new(0.0, CorruptionKind::Replace, 200, 9);
        assert_eq!(corrupt_advice(&h, &spec).unwrap(), h);
    }

    #[test]
    fn add_union_only_grows_types() {
        let h = gen_hard_instance(&HardInstanceParams::new(200, 1)).unwrap();
        let spec = CorruptionSpec::new(1.0, CorruptionKind::AddUnion, 200, 9);
        let out = corrupt_advice(&h, &spec).unwrap();
        // Perfect bipartite pairing of input types with output supersets.
        let src = h.expand();
        let dst = out.expand();
        let sup: Vec<VertexType> = src
            .iter()
            .map(|t| {
                let js = (0..dst.len() as u32).filter(|&j| t.is_subset_of(&dst[j as usize])).collect();
                VertexType::new(js, dst.len()).unwrap()
            })
            .collect();
        let g = ImpliedGraph::new(dst.len(), sup).unwrap();
        assert_eq!(max_matching(&g).size(), src.len());
    }

    #[test]
    fn replace_half_moves_half_the_mass() {
        let mut total = 0.0;
        for seed in 0..10 {
            let h = gen_hard_instance(&HardInstanceParams::new(2000, seed)).unwrap();
            let spec = CorruptionSpec::new(0.5, CorruptionKind::Replace, 2000, seed);
            let out = corrupt_advice(&h, &spec).unwrap();
            let l1 = l1_normalized(&h, &out).unwrap();
            assert!((0.85..=1.0).contains(&l1), "seed {seed}: {l1}");
            total += l1;
        }
        assert!((total / 10.0 - 1.0).abs() < 0.1);
    }

    #[test]
    fn random_order_is_seeded() {
        use crate::rng::{stream_rng, Stream};
        let a = random_order(50, &mut stream_rng(7, Stream::Arrival));
        let b = random_order(50, &mut stream_rng(7, Stream::Arrival));
        assert_eq!(a, b);
        assert_eq!(random_order(1, &mut stream_rng(7, Stream::Arrival)), vec![0]);
    }

    #[test]
    fn random_order_is_uniform_on_four() {
        use crate::rng::{stream_rng, Stream};
        let mut rng = stream_rng(2024, Stream::Arrival);
        let mut freq = std::collections::HashMap::new();
        let trials = 100_000;
        for _ in 0..trials {
            *freq.entry(random_order(4, &mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(freq.len(), 24);
        let expected = trials as f64 / 24.0;
        let chi2: f64 = freq.values().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 23 degrees of freedom; 0.999 quantile is 49.7.
        assert!(chi2 < 49.7, "chi-square {chi2}");
        for &c in freq.values() {
            assert!((c as f64 / trials as f64 - 1.0 / 24.0).abs() < 0.005);
        }
    }

    #[test]
    fn text_format_round_trips() {
        let h = gen_hard_instance(&HardInstanceParams::new(40, 5)).unwrap();
        let text = write_histogram(&h);
        assert!(text.starts_with("n=40\n"));
        let back = parse_histogram(&text).unwrap();
        assert_eq!(back, h);
        assert_eq!(write_histogram(&back), text);

        let with_empty = TypeHistogram::from_counts(2, [(VertexType::empty(), 1), (VertexType::full(2), 1)]).unwrap();
        let text = write_histogram(&with_empty);
        assert_eq!(text, "n=2\n1\t\n1\t0,1\n");
        assert_eq!(parse_histogram(&text).unwrap(), with_empty);
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!(matches!(parse_histogram(""), Err(Error::Parse { .. })));
        assert!(matches!(parse_histogram("n=2\n2 0,1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_histogram("n=2\n1\t0,5\n1\t0\n"), Err(Error::Parse { line: 2, .. })));
        assert!(parse_histogram("n=2\n1\t0\n").is_err());
    }
}
