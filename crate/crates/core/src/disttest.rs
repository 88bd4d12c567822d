//! Distribution-testing primitives: Poissonized sample counts, IID
//! simulation from a random-order stream, the plug-in L1 estimator and the
//! pass/fail gate built on them.

use std::borrow::Borrow;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{invalid, Error, Result};
use crate::types::{l1_reduced, ReducedDomain, VertexType};

/// `Pr[|X − m| ≥ x] ≤ 2 exp(−x² / (2(m + x)))` for `X ~ Poisson(m)`, capped at 1.
pub fn poisson_tail_bound(mean: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    (2.0 * (-(x * x) / (2.0 * (mean + x))).exp()).min(1.0)
}

pub fn poisson_sample<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean > 0.0 && mean.is_finite()) {
        return invalid(format!("Poisson mean must be positive and finite, got {mean}"));
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(dist.sample(rng) as u64)
}

/// Inputs to the sample-budget arithmetic.
#[derive(Clone, Debug, PartialEq)]
pub struct BudgetParams {
    /// Number of advice labels in the testing domain (without `t0`).
    pub r_hat: usize,
    pub n_hat: usize,
    pub n: usize,
    pub beta: f64,
    /// Additive accuracy; defaults to `n̂/n − β`.
    pub epsilon: Option<f64>,
    /// Overall failure rate `δ = δ' + δ_poi`.
    pub delta: f64,
    /// Leading constant of the sample size.
    pub sample_constant: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestBudget {
    pub s: usize,
    pub cap: usize,
    pub delta_prime: f64,
    pub delta_poi: f64,
    pub epsilon: f64,
    pub tau: f64,
}

fn base_samples(r_hat: usize, epsilon: f64, delta_prime: f64, c: f64) -> usize {
    let r = r_hat as f64;
    let s = c * (r + 1.0) * (1.0 / delta_prime).ln() / (epsilon * epsilon * (r + 2.0).ln());
    (s.ceil() as usize).max(1)
}

fn arrival_cap(s: usize, r_hat: usize) -> usize {
    let slack = ((r_hat as f64 + 1.0).ln()).sqrt();
    ((s as f64 * slack).ceil() as usize).max(s)
}

impl TestBudget {
    pub fn new(p: &BudgetParams) -> Result<Self> {
        if p.n == 0 || p.n_hat > p.n {
            return invalid(format!("n̂ = {} must lie in [0, n = {}] with n > 0", p.n_hat, p.n));
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return invalid(format!("delta = {} outside (0, 1)", p.delta));
        }
        if !(p.sample_constant > 0.0) {
            return invalid("sample constant must be positive");
        }
        let gap = p.n_hat as f64 / p.n as f64 - p.beta;
        let epsilon = p.epsilon.unwrap_or(gap);
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return invalid(format!("epsilon = {epsilon} must be positive"));
        }
        let tau = 2.0 * gap - epsilon;

        // δ' and δ_poi depend on each other through s; iterate to a fixed point.
        let mut delta_prime = p.delta;
        let mut s = base_samples(p.r_hat, epsilon, delta_prime, p.sample_constant);
        let mut cap = arrival_cap(s, p.r_hat);
        let mut delta_poi = poisson_tail_bound(s as f64, (cap - s) as f64);
        for _ in 0..32 {
            let next = p.delta - delta_poi;
            if next <= 0.0 {
                delta_prime = p.delta / 2.0;
                s = base_samples(p.r_hat, epsilon, delta_prime, p.sample_constant);
                cap = arrival_cap(s, p.r_hat);
                delta_poi = poisson_tail_bound(s as f64, (cap - s) as f64);
                break;
            }
            let s_next = base_samples(p.r_hat, epsilon, next, p.sample_constant);
            delta_prime = next;
            if s_next == s {
                break;
            }
            s = s_next;
            cap = arrival_cap(s, p.r_hat);
            delta_poi = poisson_tail_bound(s as f64, (cap - s) as f64);
        }
        Ok(TestBudget { s, cap, delta_prime, delta_poi, epsilon, tau })
    }
}

/// Online arrivals observed so far, for a population of `n`.
#[derive(Clone, Debug)]
pub struct ArrivalBuffer<T> {
    seen: Vec<T>,
    n: usize,
}

impl<T: Clone> ArrivalBuffer<T> {
    pub fn new(n: usize) -> Self {
        ArrivalBuffer { seen: Vec::new(), n }
    }

    pub fn seen(&self) -> &[T] {
        &self.seen
    }

    pub fn len(&self) -> usize {
        self.seen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seen.is_empty()
    }

    pub fn population(&self) -> usize {
        self.n
    }
}

/// Draws `s` IID samples of the population's type distribution from a
/// uniformly random arrival stream. With `i` arrivals seen, each draw
/// re-observes a uniform earlier arrival with probability `i/n`, otherwise it
/// consumes the next fresh arrival. At most `s` fresh arrivals are consumed.
pub fn simulate_p<T, I, R>(
    buffer: &mut ArrivalBuffer<T>,
    fresh: &mut I,
    s: usize,
    rng: &mut R,
) -> Result<Vec<T>>
where
    T: Clone,
    I: Iterator<Item = T>,
    R: Rng + ?Sized,
{
    let start = buffer.seen.len();
    let mut out = Vec::with_capacity(s);
    while out.len() < s {
        let i = buffer.seen.len();
        if i > 0 && rng.random::<f64>() < i as f64 / buffer.n as f64 {
            let j = rng.random_range(0..i);
            out.push(buffer.seen[j].clone());
        } else {
            if i >= buffer.n {
                return Err(Error::StreamExhausted { consumed: i - start });
            }
            let x = fresh
                .next()
                .ok_or(Error::StreamExhausted { consumed: i - start })?;
            buffer.seen.push(x.clone());
            out.push(x);
        }
    }
    Ok(out)
}

/// Plug-in estimate of `L1(p*, q)`: the empirical distribution of the
/// reduced samples against `q`.
pub fn empirical_l1<T: Borrow<VertexType>>(
    samples: &[T],
    domain: &ReducedDomain,
    q: &[f64],
) -> Result<f64> {
    let labels: Vec<usize> = samples.iter().map(|t| domain.reduce_type(t.borrow())).collect();
    empirical_l1_reduced(&labels, q)
}

/// Same as [`empirical_l1`] for samples that are already reduced.
pub fn empirical_l1_reduced(labels: &[usize], q: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return invalid("no samples");
    }
    let mut p_hat = vec![0.0; q.len()];
    for &l in labels {
        if l >= q.len() {
            return invalid(format!("label {l} outside the domain of size {}", q.len()));
        }
        p_hat[l] += 1.0;
    }
    let s = labels.len() as f64;
    p_hat.iter_mut().for_each(|x| *x /= s);
    l1_reduced(&p_hat, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailReason {
    /// `s1 + s2` exceeded the arrival cap.
    PoissonOverflow,
    /// Both Poisson counts were zero.
    NoSamples,
    StreamExhausted,
    /// Estimate at or above the threshold.
    TooFar,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestReport {
    pub verdict: Verdict,
    pub reason: Option<FailReason>,
    pub l1_hat: Option<f64>,
    pub samples: usize,
    /// Fresh arrivals consumed from the stream.
    pub consumed: usize,
}

impl TestReport {
    fn fail(reason: FailReason, consumed: usize) -> Self {
        TestReport { verdict: Verdict::Fail, reason: Some(reason), l1_hat: None, samples: 0, consumed }
    }
}

/// Poissonized identity gate on reduced labels: passes iff the plug-in
/// estimate against `q` is below `τ`.
pub fn minimax_test<I, R>(
    budget: &TestBudget,
    q: &[f64],
    buffer: &mut ArrivalBuffer<usize>,
    fresh: &mut I,
    rng: &mut R,
) -> TestReport
where
    I: Iterator<Item = usize>,
    R: Rng + ?Sized,
{
    let half = budget.s as f64 / 2.0;
    let s1 = poisson_sample(half, rng).expect("s >= 1");
    let s2 = poisson_sample(half, rng).expect("s >= 1");
    let total = (s1 + s2) as usize;
    if total > budget.cap {
        return TestReport::fail(FailReason::PoissonOverflow, 0);
    }
    if total == 0 {
        return TestReport::fail(FailReason::NoSamples, 0);
    }
    let before = buffer.len();
    let labels = match simulate_p(buffer, fresh, total, rng) {
        Ok(labels) => labels,
        Err(_) => return TestReport::fail(FailReason::StreamExhausted, buffer.len() - before),
    };
    let consumed = buffer.len() - before;
    let l1_hat = empirical_l1_reduced(&labels, q).expect("labels come from the domain");
    let pass = l1_hat < budget.tau;
    TestReport {
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        reason: (!pass).then_some(FailReason::TooFar),
        l1_hat: Some(l1_hat),
        samples: total,
        consumed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};
    use crate::types::TypeHistogram;

    fn vt(v: &[u32]) -> VertexType {
        VertexType::new(v.to_vec(), 8).unwrap()
    }

    #[test]
    fn poisson_rejects_non_positive_mean() {
        let mut rng = stream_rng(0, Stream::Tester);
        assert!(poisson_sample(0.0, &mut rng).is_err());
        assert!(poisson_sample(-1.0, &mut rng).is_err());
        assert!(poisson_sample(1e7, &mut rng).is_ok());
    }

    #[test]
    fn budget_arithmetic() {
        let p = BudgetParams {
            r_hat: 10,
            n_hat: 1000,
            n: 1000,
            beta: 0.696,
            epsilon: None,
            delta: 0.1,
            sample_constant: 1.0,
        };
        let b = TestBudget::new(&p).unwrap();
        assert!((b.epsilon - 0.304).abs() < 1e-12);
        assert!((b.tau - 0.304).abs() < 1e-12);
        assert!(b.cap >= b.s);
        assert!((b.delta_prime + b.delta_poi - 0.1).abs() < 1e-9 || b.delta_prime == 0.05);
        let expected = (11.0 * (1.0 / b.delta_prime).ln() / (0.304f64.powi(2) * 12f64.ln())).ceil();
        assert_eq!(b.s as f64, expected);
        assert_eq!(b.cap, (b.s as f64 * 11f64.ln().sqrt()).ceil() as usize);

        let bad = BudgetParams { n_hat: 600, ..p.clone() };
        assert!(TestBudget::new(&bad).is_err());
        let explicit = BudgetParams { epsilon: Some(0.1), ..p };
        let b = TestBudget::new(&explicit).unwrap();
        assert!((b.tau - (2.0 * 0.304 - 0.1)).abs() < 1e-12);
    }

    #[test]
    fn first_draw_always_consumes_fresh() {
        let mut rng = stream_rng(1, Stream::Tester);
        for _ in 0..100 {
            let mut buffer = ArrivalBuffer::new(10);
            let mut stream = 100..110usize;
            let out = simulate_p(&mut buffer, &mut stream, 1, &mut rng).unwrap();
            assert_eq!(out, vec![100]);
        }
    }

    #[test]
    fn fresh_consumption_never_exceeds_s() {
        let mut rng = stream_rng(2, Stream::Tester);
        for s in 1..50 {
            let mut buffer = ArrivalBuffer::new(60);
            let mut stream = 0..60usize;
            simulate_p(&mut buffer, &mut stream, s, &mut rng).unwrap();
            assert!(buffer.len() <= s);
        }
    }

    #[test]
    fn exhausted_stream_errors() {
        let mut rng = stream_rng(3, Stream::Tester);
        let mut buffer = ArrivalBuffer::new(1000);
        let mut stream = 0..2usize;
        let err = simulate_p(&mut buffer, &mut stream, 50, &mut rng).unwrap_err();
        assert_eq!(err, Error::StreamExhausted { consumed: 2 });
    }

    #[test]
    fn empirical_l1_edge_cases() {
        let q_hist = TypeHistogram::from_counts(2, [(vt(&[0]), 2)]).unwrap();
        let domain = ReducedDomain::from_support(&q_hist);
        let q = domain.project(&q_hist);
        let same = vec![vt(&[0]); 5];
        assert_eq!(empirical_l1(&same, &domain, &q).unwrap(), 0.0);
        let other = vec![vt(&[1]); 5];
        assert_eq!(empirical_l1(&other, &domain, &q).unwrap(), 2.0);
        assert!(empirical_l1::<VertexType>(&[], &domain, &q).is_err());
    }

    #[test]
    fn overflow_fails_without_consuming() {
        let hist = TypeHistogram::from_counts(4, [(vt(&[0]), 4)]).unwrap();
        let domain = ReducedDomain::from_support(&hist);
        let q = domain.project(&hist);
        // cap far below the Poisson mean forces the overflow branch.
        let budget = TestBudget { s: 1000, cap: 10, delta_prime: 0.05, delta_poi: 0.05, epsilon: 0.3, tau: 0.3 };
        let mut rng = stream_rng(4, Stream::Tester);
        let mut buffer = ArrivalBuffer::new(4);
        let mut stream = [0usize; 4].into_iter();
        let report = minimax_test(&budget, &q, &mut buffer, &mut stream, &mut rng);
        assert_eq!(report.verdict, Verdict::Fail);
        assert_eq!(report.reason, Some(FailReason::PoissonOverflow));
        assert_eq!(report.consumed, 0);
        assert!(buffer.is_empty());
    }
}
