//! Online algorithms: the Greedy and Ranking baselines, Mimic, and the
//! test-and-match meta-algorithm with its ablation switches.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::advice::{bucket_coarsen, bucket_partition, patch_advice, remap_online, AdviceBundle, CoarsenTarget, LabelIndex};
use crate::disttest::{minimax_test, ArrivalBuffer, BudgetParams, TestBudget, TestReport, Verdict};
use crate::error::{invalid, Error, Result};
use crate::instances::{gen_gadget, Gadget};
use crate::matching::{competitive_ratio, max_matching, ImpliedGraph};
use crate::rng::{stream_rng, Stream};
use crate::types::{Matching, ReducedDomain, TypeHistogram, VertexType};

/// A true instance together with its offline optimum `n*`.
#[derive(Clone, Debug)]
pub struct Instance {
    graph: ImpliedGraph,
    n_star: usize,
}

impl Instance {
    pub fn new(graph: ImpliedGraph) -> Self {
        let n_star = max_matching(&graph).size();
        Instance { graph, n_star }
    }

    pub fn from_histogram(hist: &TypeHistogram) -> Self {
        Self::new(ImpliedGraph::from_histogram(hist))
    }

    pub fn graph(&self) -> &ImpliedGraph {
        &self.graph
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn n_star(&self) -> usize {
        self.n_star
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Testing,
    Mimicking,
    Baseline,
}

/// Mutable state of one run.
#[derive(Clone, Debug)]
pub struct RunState {
    matched_offline: Vec<bool>,
    assignment: Vec<Option<u32>>,
    m: usize,
    consumed: usize,
    phase: Phase,
}

impl RunState {
    pub fn new(n: usize, online: usize) -> Self {
        RunState {
            matched_offline: vec![false; n],
            assignment: vec![None; online],
            m: 0,
            consumed: 0,
            phase: Phase::Testing,
        }
    }

    pub fn matched(&self) -> usize {
        self.m
    }

    /// Arrivals processed so far.
    pub fn consumed(&self) -> usize {
        self.consumed
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_free(&self, u: u32) -> bool {
        !self.matched_offline[u as usize]
    }

    pub fn matched_offline(&self) -> &[bool] {
        &self.matched_offline
    }

    /// Records the arrival of online vertex `v` and, if `u` is given, the
    /// edge `(v, u)`. The caller guarantees `u` is a free neighbor.
    fn settle(&mut self, v: usize, u: Option<u32>) {
        if let Some(u) = u {
            debug_assert!(!self.matched_offline[u as usize]);
            self.matched_offline[u as usize] = true;
            self.assignment[v] = Some(u);
            self.m += 1;
        }
        self.consumed += 1;
    }

    pub fn into_matching(self) -> Matching {
        Matching::from_assignment(self.assignment).expect("only free offline vertices are matched")
    }
}

fn check_order(g: &ImpliedGraph, order: &[usize]) -> Result<()> {
    let mut seen = vec![false; g.online_len()];
    for &v in order {
        if v >= seen.len() || std::mem::replace(&mut seen[v], true) {
            return invalid(format!("arrival order is not a permutation of 0..{}", seen.len()));
        }
    }
    if order.len() != seen.len() {
        return invalid(format!("arrival order has {} entries for {} online vertices", order.len(), seen.len()));
    }
    Ok(())
}

/// Matches each arrival to its lowest-index free neighbor.
pub fn greedy(g: &ImpliedGraph, order: &[usize]) -> Result<Matching> {
    check_order(g, order)?;
    let mut state = RunState::new(g.n(), g.online_len());
    for &v in order {
        let u = g.online_type(v).neighbors().iter().copied().find(|&u| state.is_free(u));
        state.settle(v, u);
    }
    Ok(state.into_matching())
}

/// Ranking over the offline vertices still free in `state`: draws a uniform
/// rank order of them and matches each arrival to its best-ranked free
/// neighbor.
pub fn ranking_resume<R: Rng + ?Sized>(g: &ImpliedGraph, rest: &[usize], state: &mut RunState, rng: &mut R) {
    state.phase = Phase::Baseline;
    let mut free: Vec<u32> = (0..g.n() as u32).filter(|&u| state.is_free(u)).collect();
    free.shuffle(rng);
    let mut rank = vec![u32::MAX; g.n()];
    for (r, &u) in free.iter().enumerate() {
        rank[u as usize] = r as u32;
    }
    for &v in rest {
        let u = g
            .online_type(v)
            .neighbors()
            .iter()
            .copied()
            .filter(|&u| state.is_free(u))
            .min_by_key(|&u| rank[u as usize]);
        state.settle(v, u);
    }
}

pub fn ranking<R: Rng + ?Sized>(g: &ImpliedGraph, order: &[usize], rng: &mut R) -> Result<Matching> {
    check_order(g, order)?;
    let mut state = RunState::new(g.n(), g.online_len());
    ranking_resume(g, order, &mut state, rng);
    Ok(state.into_matching())
}

/// Replays `M̂` type by type.
#[derive(Clone, Debug)]
pub struct Mimic<'a> {
    advice: &'a AdviceBundle,
    slots: Vec<Vec<Option<u32>>>,
    next: Vec<usize>,
    remaining: Vec<u64>,
    remap: Option<LabelIndex>,
    /// Offline vertices left free by the unpatched advice matching.
    patch_pool: Option<Vec<bool>>,
}

impl<'a> Mimic<'a> {
    pub fn new(advice: &'a AdviceBundle, use_remap: bool, patch_pool: Option<&[u32]>) -> Self {
        let slots = advice.slots();
        let remaining = advice.histogram().iter().map(|(_, c)| c).collect();
        let patch_pool = patch_pool.map(|pool| {
            let mut mask = vec![false; advice.n()];
            pool.iter().for_each(|&u| mask[u as usize] = true);
            mask
        });
        Mimic {
            advice,
            next: vec![0; slots.len()],
            slots,
            remaining,
            remap: use_remap.then(|| LabelIndex::new(advice.histogram())),
            patch_pool,
        }
    }

    pub fn remaining(&self) -> &[u64] {
        &self.remaining
    }

    fn choose_label(&self, t: &VertexType) -> Option<usize> {
        let own = self.advice.label_of(t).filter(|&l| self.remaining[l] > 0);
        match &self.remap {
            Some(index) if own.is_none() => remap_online(t, index, &self.remaining),
            _ => own,
        }
    }

    /// Decides the match of online vertex `v` of type `t`.
    pub fn step(&mut self, state: &mut RunState, v: usize, t: &VertexType) -> Result<Option<u32>> {
        let mut proposal = None;
        let mut fallback = true;
        if let Some(l) = self.choose_label(t) {
            let slot = self.slots[l][self.next[l]];
            self.next[l] += 1;
            self.remaining[l] -= 1;
            if let Some(u) = slot {
                if !t.contains(u) {
                    return Err(Error::InvariantViolation(format!(
                        "mimic proposed offline {u} to an arrival of type {{{t}}}"
                    )));
                }
                if state.is_free(u) {
                    proposal = Some(u);
                }
            } else {
                // An unmatched advice slot: mimicry leaves the arrival unmatched.
                fallback = false;
            }
        }
        if proposal.is_none() && fallback {
            if let Some(pool) = &self.patch_pool {
                proposal = t.neighbors().iter().copied().find(|&u| pool[u as usize] && state.is_free(u));
            }
        }
        state.settle(v, proposal);
        Ok(proposal)
    }
}

/// Runs Mimic on every arrival, with optional online remapping.
pub fn mimic_all(g: &ImpliedGraph, order: &[usize], advice: &AdviceBundle, use_remap: bool) -> Result<Matching> {
    check_order(g, order)?;
    if advice.n() != g.n() {
        return invalid("advice and instance disagree on n");
    }
    let mut state = RunState::new(g.n(), g.online_len());
    state.phase = Phase::Mimicking;
    let mut mimic = Mimic::new(advice, use_remap, None);
    for &v in order {
        mimic.step(&mut state, v, g.online_type(v))?;
    }
    Ok(state.into_matching())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AblationFlags {
    pub use_remap: bool,
    pub use_bucket: bool,
    pub use_patch: bool,
}

impl AblationFlags {
    pub const ALL: AblationFlags = AblationFlags { use_remap: true, use_bucket: true, use_patch: true };
    pub const NONE: AblationFlags = AblationFlags { use_remap: false, use_bucket: false, use_patch: false };
}

pub const DEFAULT_BETA: f64 = 0.696;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_SAMPLE_CONSTANT: f64 = 2.0;
pub const DEFAULT_GAMMA: f64 = 0.5;
pub const DEFAULT_TEST_FRACTION: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct TamParams {
    /// Competitive ratio assumed for the baseline.
    pub beta: f64,
    /// Defaults to `n̂/n − β`.
    pub epsilon: Option<f64>,
    pub delta: f64,
    pub sample_constant: f64,
    /// Testing is skipped when the arrival cap exceeds `γ·n`.
    pub gamma: f64,
    /// Bucketing picks the largest testing domain whose arrival cap stays
    /// within this fraction of `n`.
    pub test_fraction: f64,
}

impl Default for TamParams {
    fn default() -> Self {
        TamParams {
            beta: DEFAULT_BETA,
            epsilon: None,
            delta: DEFAULT_DELTA,
            sample_constant: DEFAULT_SAMPLE_CONSTANT,
            gamma: DEFAULT_GAMMA,
            test_fraction: DEFAULT_TEST_FRACTION,
        }
    }
}

impl TamParams {
    fn budget(&self, r_hat: usize, n_hat: usize, n: usize) -> Result<TestBudget> {
        TestBudget::new(&BudgetParams {
            r_hat,
            n_hat,
            n,
            beta: self.beta,
            epsilon: self.epsilon,
            delta: self.delta,
            sample_constant: self.sample_constant,
        })
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta) {
            return invalid(format!("beta = {} outside [0, 1)", self.beta));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return invalid(format!("epsilon = {e} must be positive"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return invalid(format!("gamma = {} outside (0, 1]", self.gamma));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction <= self.gamma) {
            return invalid(format!("test fraction = {} outside (0, gamma]", self.test_fraction));
        }
        Ok(())
    }

    /// Largest testing-domain size (at most `upper`) whose arrival cap fits
    /// in `test_fraction · n`.
    pub fn max_test_support(&self, n_hat: usize, n: usize, upper: usize) -> Option<usize> {
        let limit = self.test_fraction * n as f64;
        let fits = |r: usize| self.budget(r, n_hat, n).is_ok_and(|b| b.cap as f64 <= limit);
        if upper == 0 || !fits(1) {
            return None;
        }
        let (mut lo, mut hi) = (1, upper);
        while lo < hi {
            let mid = lo + (hi - lo).div_ceil(2);
            if fits(mid) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        // The overflow bound shrinks as r grows, so if it already exceeds δ
        // at the largest fitting r no smaller domain helps.
        let sound = self.budget(lo, n_hat, n).is_ok_and(|b| b.delta_poi < self.delta);
        sound.then_some(lo)
    }
}

/// Why a run went straight to the baseline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShortCircuit {
    /// `n̂/n ≤ β`.
    WeakAdvice,
    /// The arrival cap exceeds `γ·n`.
    BudgetTooLarge,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decision {
    BaselineOnly(ShortCircuit),
    Tested(TestReport),
}

/// Bookkeeping at the moment a failed test hands over to the baseline.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchPoint {
    pub arrivals: usize,
    pub matched: usize,
    pub consumed_online: Vec<bool>,
    pub matched_offline: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub matching: Matching,
    pub n_star: usize,
    pub ratio: f64,
    pub decision: Decision,
    pub budget: Option<TestBudget>,
    /// `n̂` of the advice actually mimicked.
    pub n_hat: usize,
    /// Labels in the testing domain.
    pub test_labels: usize,
    pub switch: Option<SwitchPoint>,
}

impl RunOutcome {
    pub fn m(&self) -> usize {
        self.matching.size()
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match &self.decision {
            Decision::Tested(r) => Some(r.verdict),
            Decision::BaselineOnly(_) => None,
        }
    }

    pub fn l1_hat(&self) -> Option<f64> {
        match &self.decision {
            Decision::Tested(r) => r.l1_hat,
            Decision::BaselineOnly(_) => None,
        }
    }

    /// Fresh arrivals the tester consumed.
    pub fn k_consumed(&self) -> usize {
        match &self.decision {
            Decision::Tested(r) => r.consumed,
            Decision::BaselineOnly(_) => 0,
        }
    }
}

/// Advice after preprocessing, with the matching domain for the tester.
struct Prepared {
    advice: AdviceBundle,
    patch_pool: Option<Vec<u32>>,
    domain: Option<ReducedDomain>,
}

fn prepare(advice: &TypeHistogram, n: usize, flags: AblationFlags, params: &TamParams) -> Result<Prepared> {
    let mut bundle = AdviceBundle::new(advice.clone());
    let mut target = None;
    if flags.use_bucket {
        let n_hat_est = if flags.use_patch { n } else { bundle.n_hat() };
        target = params.max_test_support(n_hat_est, n, bundle.r_hat().max(1));
        if let Some(r) = target {
            if bundle.r_hat() > r {
                let coarse = bucket_coarsen(&bundle, CoarsenTarget::Support(r))?;
                // Intersection labels are only adopted when they keep the
                // advice matching intact.
                if coarse.reached && coarse.advice.n_hat() == bundle.n_hat() {
                    bundle = coarse.advice;
                }
            }
        }
    }
    let mut patch_pool = None;
    if flags.use_patch {
        let (patched, record) = patch_advice(&bundle)?;
        if record.k > 0 {
            patch_pool = Some(record.a_u);
        }
        bundle = patched;
    }
    let domain = match (flags.use_bucket, target) {
        (true, Some(r)) => Some(bucket_partition(bundle.histogram(), r)?),
        (true, None) => None,
        (false, _) => Some(ReducedDomain::from_support(bundle.histogram())),
    };
    Ok(Prepared { advice: bundle, patch_pool, domain })
}

fn baseline_only(
    instance: &Instance,
    order: &[usize],
    reason: ShortCircuit,
    n_hat: usize,
    budget: Option<TestBudget>,
    alg_seed: u64,
) -> Result<RunOutcome> {
    let mut rng = stream_rng(alg_seed, Stream::Baseline);
    let matching = ranking(instance.graph(), order, &mut rng)?;
    outcome(instance, matching, Decision::BaselineOnly(reason), budget, n_hat, 0, None)
}

fn outcome(
    instance: &Instance,
    matching: Matching,
    decision: Decision,
    budget: Option<TestBudget>,
    n_hat: usize,
    test_labels: usize,
    switch: Option<SwitchPoint>,
) -> Result<RunOutcome> {
    matching.validate(instance.graph().online_types())?;
    let ratio = competitive_ratio(matching.size(), instance.n_star())?;
    Ok(RunOutcome { matching, n_star: instance.n_star(), ratio, decision, budget, n_hat, test_labels, switch })
}

/// Test-and-match: mimic the advice on a prefix while testing it against the
/// arrivals, then keep mimicking on a pass or hand the rest to Ranking.
pub fn test_and_match(
    instance: &Instance,
    order: &[usize],
    advice: &TypeHistogram,
    flags: AblationFlags,
    params: &TamParams,
    alg_seed: u64,
) -> Result<RunOutcome> {
    params.validate()?;
    let g = instance.graph();
    check_order(g, order)?;
    let n = instance.n();
    if advice.n() != n || g.online_len() != n {
        return invalid(format!("advice over n = {} for an instance with n = {n}", advice.n()));
    }
    let prep = prepare(advice, n, flags, params)?;
    let n_hat = prep.advice.n_hat();
    if n_hat as f64 / n as f64 <= params.beta {
        return baseline_only(instance, order, ShortCircuit::WeakAdvice, n_hat, None, alg_seed);
    }
    let Some(domain) = prep.domain else {
        return baseline_only(instance, order, ShortCircuit::BudgetTooLarge, n_hat, None, alg_seed);
    };
    let budget = params.budget(domain.advice_labels(), n_hat, n)?;
    if budget.cap as f64 > params.gamma * n as f64 {
        return baseline_only(instance, order, ShortCircuit::BudgetTooLarge, n_hat, Some(budget), alg_seed);
    }

    let mut state = RunState::new(n, n);
    let mut mimic = Mimic::new(&prep.advice, flags.use_remap, prep.patch_pool.as_deref());
    let (prefix, rest) = order.split_at(budget.cap.min(n));
    let mut observed = Vec::with_capacity(prefix.len());
    for &v in prefix {
        let t = g.online_type(v);
        mimic.step(&mut state, v, t)?;
        observed.push(domain.reduce_type(t));
    }

    let q = domain.project(prep.advice.histogram());
    let mut tester = stream_rng(alg_seed, Stream::Tester);
    let mut buffer = ArrivalBuffer::new(n);
    let report = minimax_test(&budget, &q, &mut buffer, &mut observed.into_iter(), &mut tester);

    let mut switch = None;
    if report.verdict == Verdict::Pass {
        state.phase = Phase::Mimicking;
        for &v in rest {
            mimic.step(&mut state, v, g.online_type(v))?;
        }
    } else {
        let mut consumed_online = vec![false; n];
        prefix.iter().for_each(|&v| consumed_online[v] = true);
        switch = Some(SwitchPoint {
            arrivals: prefix.len(),
            matched: state.matched(),
            consumed_online,
            matched_offline: state.matched_offline().to_vec(),
        });
        let mut rng = stream_rng(alg_seed, Stream::Baseline);
        ranking_resume(g, rest, &mut state, &mut rng);
    }
    let labels = domain.advice_labels();
    outcome(instance, state.into_matching(), Decision::Tested(report), Some(budget), n_hat, labels, switch)
}

/// Ratio achieved by blindly following the advised gadget's perfect matching
/// on the true gadget, in canonical order.
pub fn hardness_demo(n: usize, true_which: Gadget, advised_which: Gadget) -> Result<f64> {
    let (truth, order_types) = gen_gadget(n, true_which)?;
    let (advised, _) = gen_gadget(n, advised_which)?;
    let graph = ImpliedGraph::new(n, order_types)?;
    let instance = Instance::new(graph);
    debug_assert_eq!(instance.n_star(), truth.n());
    let advice = AdviceBundle::new(advised);
    let order: Vec<usize> = (0..n).collect();
    let matching = mimic_all(instance.graph(), &order, &advice, false)?;
    competitive_ratio(matching.size(), instance.n_star())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt(v: &[u32], n: usize) -> VertexType {
        VertexType::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn greedy_on_a_star() {
        let g = ImpliedGraph::new(4, vec![vt(&[0], 4); 4]).unwrap();
        assert_eq!(greedy(&g, &[3, 1, 0, 2]).unwrap().size(), 1);
    }

    #[test]
    fn ranking_single_vertex() {
        let g = ImpliedGraph::new(1, vec![VertexType::full(1)]).unwrap();
        let mut rng = stream_rng(0, Stream::Baseline);
        assert_eq!(ranking(&g, &[0], &mut rng).unwrap().size(), 1);
    }

    #[test]
    fn bad_orders_are_rejected() {
        let g = ImpliedGraph::new(2, vec![VertexType::full(2); 2]).unwrap();
        assert!(greedy(&g, &[0, 0]).is_err());
        assert!(greedy(&g, &[0]).is_err());
        assert!(greedy(&g, &[0, 2]).is_err());
    }

    #[test]
    fn perfect_advice_mimic_is_exact() {
        let n = 4;
        let h = TypeHistogram::from_counts(n, [(vt(&[0, 2], n), 1), (vt(&[1, 2], n), 1), (vt(&[0, 1, 3], n), 2)])
            .unwrap();
        let inst = Instance::from_histogram(&h);
        let advice = AdviceBundle::new(h);
        for order in [[0, 1, 2, 3], [3, 2, 1, 0], [2, 0, 3, 1]] {
            let m = mimic_all(inst.graph(), &order, &advice, false).unwrap();
            assert_eq!(m.size(), 4);
        }
    }

    #[test]
    fn exhausted_type_is_left_unmatched() {
        let n = 2;
        let truth = TypeHistogram::from_counts(n, [(vt(&[0], n), 2)]).unwrap();
        let advice = AdviceBundle::new(TypeHistogram::from_counts(n, [(vt(&[0], n), 1), (vt(&[1], n), 1)]).unwrap());
        let inst = Instance::from_histogram(&truth);
        assert_eq!(mimic_all(inst.graph(), &[0, 1], &advice, false).unwrap().size(), 1);
    }

    #[test]
    fn remap_recovers_a_perfect_matching() {
        // True types {0,2}, {1,2}, {0,1,3} x2; advice {0}, {2}, {3}, {1,3}.
        let n = 4;
        let truth = TypeHistogram::from_counts(n, [(vt(&[0, 2], n), 1), (vt(&[1, 2], n), 1), (vt(&[0, 1, 3], n), 2)])
            .unwrap();
        let advice = TypeHistogram::from_counts(n, [(vt(&[0], n), 1), (vt(&[2], n), 1), (vt(&[3], n), 1), (vt(&[1, 3], n), 1)])
            .unwrap();
        let inst = Instance::from_histogram(&truth);
        let bundle = AdviceBundle::new(advice);
        assert_eq!(bundle.n_hat(), 4);
        let order: Vec<usize> = (0..4).collect();
        assert!(mimic_all(inst.graph(), &order, &bundle, false).unwrap().size() < 4);
        // {0,2} -> {0}, {1,2} -> {2}, then the pair takes {1,3} and {3}.
        let order = [2, 3, 0, 1];
        let m = mimic_all(inst.graph(), &order, &bundle, true).unwrap();
        m.validate(inst.graph().online_types()).unwrap();
        assert_eq!(m.size(), 4);
    }

    #[test]
    fn hardness_gadget_ratios() {
        assert_eq!(hardness_demo(1000, Gadget::First, Gadget::First).unwrap(), 1.0);
        assert_eq!(hardness_demo(1000, Gadget::First, Gadget::Second).unwrap(), 0.5);
        assert_eq!(hardness_demo(2, Gadget::Second, Gadget::First).unwrap(), 0.5);
    }

    #[test]
    fn weak_advice_runs_pure_ranking() {
        let n = 10;
        let truth = TypeHistogram::from_counts(n, [(VertexType::full(n), n as u64)]).unwrap();
        let advice = TypeHistogram::from_counts(n, [(vt(&[0], n), n as u64)]).unwrap();
        let inst = Instance::from_histogram(&truth);
        let order: Vec<usize> = (0..n).rev().collect();
        let out = test_and_match(&inst, &order, &advice, AblationFlags::NONE, &TamParams::default(), 5).unwrap();
        assert_eq!(out.decision, Decision::BaselineOnly(ShortCircuit::WeakAdvice));
        let pure = ranking(inst.graph(), &order, &mut stream_rng(5, Stream::Baseline)).unwrap();
        assert_eq!(out.matching, pure);
    }
}
