//! Invariant suite behind `tam selftest`: oracle comparisons, exact
//! identities and sampler checks on randomly generated small cases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tam_core::advice::{patch_advice, remap_offline, AdviceBundle};
use tam_core::algorithms::{mimic_all, Instance};
use tam_core::disttest::{poisson_sample, poisson_tail_bound, simulate_p, ArrivalBuffer};
use tam_core::instances::random_order;
use tam_core::matching::brute_force_max_matching;
use tam_core::rng::{stream_rng, Stream};
use tam_core::{l1_histogram, l1_reduced, max_matching, ImpliedGraph, ReducedDomain, TypeHistogram, VertexType};

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

pub fn random_type<R: Rng>(rng: &mut R, n: usize, p: f64) -> VertexType {
    let nb = (0..n as u32).filter(|_| rng.random_bool(p)).collect();
    VertexType::new(nb, n).expect("indices below n")
}

/// Histogram over `n` online vertices drawn from at most `max_types`
/// random types.
pub fn random_histogram<R: Rng>(rng: &mut R, n: usize, max_types: usize, p: f64) -> TypeHistogram {
    let types: Vec<VertexType> = (0..rng.random_range(1..=max_types)).map(|_| random_type(rng, n, p)).collect();
    let online = (0..n).map(|_| types[rng.random_range(0..types.len())].clone());
    TypeHistogram::from_types(n, online).expect("valid types")
}

/// Hopcroft–Karp against exhaustive search.
pub fn matching_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=7);
        let p = rng.random_range(0.1..0.7);
        let types: Vec<VertexType> = (0..n).map(|_| random_type(&mut rng, n, p)).collect();
        let g = ImpliedGraph::new(n, types.clone()).expect("valid graph");
        let m = max_matching(&g);
        if m.validate(&types).is_err() || m.size() != brute_force_max_matching(&types, n) {
            mismatches += 1;
        }
    }
    check("max matching = brute force", mismatches == 0, format!("{mismatches} mismatches in {cases} cases"))
}

/// Best assignment of true slots to advice slots with subset-contained
/// advice types, by exhaustive search.
pub fn exhaustive_overlap(truth: &TypeHistogram, advice: &TypeHistogram) -> u64 {
    fn go(slots: &[VertexType], advice: &[(VertexType, u64)], left: &mut [u64]) -> u64 {
        let Some((first, rest)) = slots.split_first() else {
            return 0;
        };
        let mut best = go(rest, advice, left);
        for (j, (t, _)) in advice.iter().enumerate() {
            if left[j] > 0 && t.is_subset_of(first) {
                left[j] -= 1;
                best = best.max(1 + go(rest, advice, left));
                left[j] += 1;
            }
        }
        best
    }
    let advice: Vec<(VertexType, u64)> = advice.iter().map(|(t, c)| (t.clone(), c)).collect();
    let mut left: Vec<u64> = advice.iter().map(|&(_, c)| c).collect();
    go(&truth.expand(), &advice, &mut left)
}

/// Max-flow remapping against exhaustive assignment.
pub fn remap_oracle(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=6);
        let p = rng.random_range(0.2..0.8);
        let truth = random_histogram(&mut rng, n, 4, p);
        let advice = random_histogram(&mut rng, n, 4, p / 2.0);
        let ok = match remap_offline(&truth, &advice) {
            Ok((remap, overlap)) => {
                remap.validate(&truth, &advice).is_ok() && overlap == exhaustive_overlap(&truth, &advice)
            }
            Err(_) => false,
        };
        mismatches += usize::from(!ok);
    }
    check("offline remap = exhaustive", mismatches == 0, format!("{mismatches} mismatches in {cases} cases"))
}

/// L1 on the advice support plus a dummy label equals the full L1.
pub fn reduced_l1_identity(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=30);
        let truth = random_histogram(&mut rng, n, 8, 0.15);
        let advice = random_histogram(&mut rng, n, 8, 0.15);
        let domain = ReducedDomain::from_support(&advice);
        let reduced = l1_reduced(&domain.project(&truth), &domain.project(&advice)).expect("same length");
        let full = l1_histogram(&truth, &advice).expect("same n") as f64 / n as f64;
        failures += usize::from((reduced - full).abs() > 1e-12);
    }
    check("reduced-domain L1 identity", failures == 0, format!("{failures} failures in {cases} cases"))
}

/// `L1(ĉ, ĉ′) = 2k` and `L1(c*, ĉ′) ≤ L1(c*, ĉ) + 2k` for the patched advice.
pub fn patch_bounds(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=20);
        let (p, q) = (rng.random_range(0.05..0.6), rng.random_range(0.05..0.6));
        let truth = random_histogram(&mut rng, n, 6, p);
        let advice = random_histogram(&mut rng, n, 6, q);
        let bundle = AdviceBundle::new(advice.clone());
        let k = (n - bundle.n_hat()) as u64;
        let ok = match patch_advice(&bundle) {
            Ok((patched, _)) => {
                let h = patched.histogram();
                patched.n_hat() == n
                    && l1_histogram(&advice, h) == Ok(2 * k)
                    && l1_histogram(&truth, h).unwrap() <= l1_histogram(&truth, &advice).unwrap() + 2 * k
            }
            Err(_) => false,
        };
        failures += usize::from(!ok);
    }
    check("patch L1 bounds", failures == 0, format!("{failures} failures in {cases} pairs"))
}

/// Blind mimicking matches at least `n̂ − L1/2`.
pub fn mimic_bound(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=12);
        let (p, q) = (rng.random_range(0.1..0.6), rng.random_range(0.1..0.6));
        let truth = random_histogram(&mut rng, n, 5, p);
        let advice = random_histogram(&mut rng, n, 5, q);
        let bundle = AdviceBundle::new(advice.clone());
        let inst = Instance::from_histogram(&truth);
        let order = random_order(n, &mut rng);
        let ok = mimic_all(inst.graph(), &order, &bundle, false).is_ok_and(|m| {
            let l1 = l1_histogram(&truth, &advice).unwrap() as usize;
            m.validate(inst.graph().online_types()).is_ok() && 2 * m.size() + l1 >= 2 * bundle.n_hat()
        });
        failures += usize::from(!ok);
    }
    check("mimic lower bound", failures == 0, format!("{failures} failures in {cases} cases"))
}

/// Pooled SimulateP output against the population law of a 10-vertex
/// instance (counts 3, 2, 2, 1, 1, 1).
pub fn simulate_p_law(calls: usize, seed: u64) -> Check {
    let pop = [0usize, 0, 0, 1, 1, 2, 2, 3, 4, 5];
    let truth = [0.3, 0.2, 0.2, 0.1, 0.1, 0.1];
    let mut rng = stream_rng(seed, Stream::Tester);
    let mut freq = [0usize; 6];
    let mut ok = true;
    for _ in 0..calls {
        let order = random_order(pop.len(), &mut rng);
        let mut buffer = ArrivalBuffer::new(pop.len());
        let mut stream = order.iter().map(|&v| pop[v]);
        match simulate_p(&mut buffer, &mut stream, 5, &mut rng) {
            Ok(xs) => xs.into_iter().for_each(|x| freq[x] += 1),
            Err(_) => ok = false,
        }
    }
    let total: usize = freq.iter().sum();
    let tv = freq.iter().zip(truth).map(|(&f, p)| (f as f64 / total as f64 - p).abs()).sum::<f64>() / 2.0;
    check("SimulateP law", ok && tv <= 0.02, format!("TV = {tv:.5} over {calls} calls"))
}

/// Moments at mean 50 and tail frequencies at mean 100 against the bound.
pub fn poisson_sampler(draws: usize, seed: u64) -> Check {
    let mut rng = stream_rng(seed, Stream::Tester);
    let xs: Vec<f64> = (0..draws).map(|_| poisson_sample(50.0, &mut rng).expect("valid mean") as f64).collect();
    let mean = xs.iter().sum::<f64>() / draws as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
    let mut ok = (mean - 50.0).abs() <= 0.1 && (var - 50.0).abs() <= 1.0;
    let ys: Vec<i64> = (0..draws).map(|_| poisson_sample(100.0, &mut rng).expect("valid mean") as i64).collect();
    for x in [20i64, 50, 100] {
        let freq = ys.iter().filter(|&&d| (d - 100).abs() >= x).count() as f64 / draws as f64;
        ok &= freq <= poisson_tail_bound(100.0, x as f64);
    }
    check("Poisson sampler", ok, format!("mean {mean:.4}, variance {var:.4}"))
}

/// Everything, at the sizes used by `tam selftest`.
pub fn run_all() -> Vec<Check> {
    vec![
        matching_oracle(500, 1),
        remap_oracle(200, 2),
        reduced_l1_identity(50, 3),
        patch_bounds(1000, 4),
        mimic_bound(500, 5),
        simulate_p_law(100_000, 6),
        poisson_sampler(1_000_000, 7),
    ]
}
