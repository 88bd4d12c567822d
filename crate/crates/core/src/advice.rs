//! Advice transformations: patching the advice graph to a perfect matching,
//! coarsening its support with intersection labels, and remapping true
//! types onto advice labels that are subsets of them.

use std::collections::{BTreeSet, HashMap};

use crate::error::{invalid, Error, Result};
use crate::flow::FlowNetwork;
use crate::matching::{max_matching, ImpliedGraph};
use crate::types::{Matching, ReducedDomain, TypeHistogram, VertexType};

/// An advice histogram together with a fixed maximum matching `M̂` of the
/// graph it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct AdviceBundle {
    histogram: TypeHistogram,
    matching: Matching,
    /// Original advice type → the coarsened label that now stands for it.
    members: HashMap<VertexType, VertexType>,
}

impl AdviceBundle {
    pub fn new(histogram: TypeHistogram) -> Self {
        let matching = max_matching(&ImpliedGraph::from_histogram(&histogram));
        AdviceBundle { histogram, matching, members: HashMap::new() }
    }

    fn with_members(histogram: TypeHistogram, members: HashMap<VertexType, VertexType>) -> Self {
        AdviceBundle { members, ..Self::new(histogram) }
    }

    pub fn histogram(&self) -> &TypeHistogram {
        &self.histogram
    }

    /// `M̂`, indexed by the expanded online order of the histogram.
    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn n(&self) -> usize {
        self.histogram.n()
    }

    pub fn n_hat(&self) -> usize {
        self.matching.size()
    }

    pub fn r_hat(&self) -> usize {
        self.histogram.support_size()
    }

    pub fn members(&self) -> &HashMap<VertexType, VertexType> {
        &self.members
    }

    /// Label index standing for `t`: its coarsened label if it was merged,
    /// otherwise `t` itself if it is in the support.
    pub fn label_of(&self, t: &VertexType) -> Option<usize> {
        let label = self.members.get(t).unwrap_or(t);
        self.histogram.index_of(label)
    }

    /// `M̂` partners of every slot of each label, matched slots first.
    pub fn slots(&self) -> Vec<Vec<Option<u32>>> {
        let mut offset = 0;
        self.histogram
            .iter()
            .map(|(_, c)| {
                let range = offset..offset + c as usize;
                offset += c as usize;
                let mut s: Vec<Option<u32>> = range.map(|v| self.matching.partner(v)).collect();
                s.sort_by_key(|p| p.is_none());
                s
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PatchRecord {
    pub original_n_hat: usize,
    /// `n − n̂`.
    pub k: usize,
    /// Offline vertices left free by `M̂`.
    pub a_u: Vec<u32>,
    /// Expanded online slots left free by `M̂`.
    pub a_v: Vec<usize>,
    /// Neighbor set of the added label (`A_U`), if anything was patched.
    pub new_label: Option<VertexType>,
}

/// Moves the `k` unmatched slots onto a new label adjacent to exactly the
/// `k` unmatched offline vertices, so that the patched advice has a perfect
/// matching.
pub fn patch_advice(advice: &AdviceBundle) -> Result<(AdviceBundle, PatchRecord)> {
    let n = advice.n();
    let n_hat = advice.n_hat();
    if n_hat == n {
        let record = PatchRecord { original_n_hat: n_hat, ..PatchRecord::default() };
        return Ok((advice.clone(), record));
    }
    let mut used = vec![false; n];
    for (_, u) in advice.matching.pairs() {
        used[u as usize] = true;
    }
    let a_u: Vec<u32> = (0..n as u32).filter(|&u| !used[u as usize]).collect();
    let a_v: Vec<usize> = (0..advice.matching.online_len())
        .filter(|&v| advice.matching.partner(v).is_none())
        .collect();
    let k = n - n_hat;
    debug_assert_eq!(a_u.len(), k);
    debug_assert_eq!(a_v.len(), k);

    let online = advice.histogram.expand();
    let mut counts: HashMap<VertexType, u64> = advice.histogram.iter().map(|(t, c)| (t.clone(), c)).collect();
    for &v in &a_v {
        *counts.get_mut(&online[v]).expect("slot type is in the support") -= 1;
    }
    let new_label = VertexType::from_sorted(a_u.clone());
    *counts.entry(new_label.clone()).or_insert(0) += k as u64;
    let histogram = TypeHistogram::from_counts(n, counts)?;
    let patched = AdviceBundle::with_members(histogram, advice.members.clone());
    if patched.n_hat() != n {
        return Err(Error::InvariantViolation(format!(
            "patched advice has n̂ = {} instead of {n}",
            patched.n_hat()
        )));
    }
    let record = PatchRecord { original_n_hat: n_hat, k, a_u, a_v, new_label: Some(new_label) };
    Ok((patched, record))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoarsenTarget {
    /// Merge until at most this many labels remain.
    Support(usize),
    /// Merge until every label has at least this count.
    CountThreshold(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coarsened {
    pub advice: AdviceBundle,
    /// Whether the target was met; `false` means no further legal merge.
    pub reached: bool,
    pub merges: usize,
}

struct Bucket {
    label: VertexType,
    count: u64,
    members: Vec<VertexType>,
    alive: bool,
}

/// Greedy coarsening: repeatedly takes the smallest-count bucket and merges it
/// into the bucket whose intersection with it drops the fewest offline
/// vertices. Merges with an empty intersection are never made.
pub fn bucket_coarsen(advice: &AdviceBundle, target: CoarsenTarget) -> Result<Coarsened> {
    if target == CoarsenTarget::Support(0) {
        return invalid("target support must be at least 1");
    }
    let n = advice.n();
    let mut buckets: Vec<Bucket> = advice
        .histogram
        .iter()
        .map(|(t, c)| Bucket { label: t.clone(), count: c, members: vec![t.clone()], alive: true })
        .collect();
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (id, b) in buckets.iter().enumerate() {
        for &u in b.label.neighbors() {
            by_vertex[u as usize].push(id);
        }
    }
    let mut queue: BTreeSet<(u64, usize)> = buckets.iter().enumerate().map(|(id, b)| (b.count, id)).collect();
    let mut alive = buckets.len();
    let mut merges = 0;
    let mut seen = vec![usize::MAX; buckets.len()];

    let done = |alive: usize, smallest: Option<u64>| match target {
        CoarsenTarget::Support(r) => alive <= r,
        CoarsenTarget::CountThreshold(c) => smallest.is_none_or(|s| s >= c),
    };
    loop {
        let smallest = queue.first().map(|&(c, _)| c);
        if done(alive, smallest) {
            break;
        }
        let Some((_, a)) = queue.pop_first() else { break };
        // Candidates share at least one offline vertex with `a`.
        let mut best: Option<(usize, usize)> = None;
        for &u in buckets[a].label.neighbors() {
            for &b in &by_vertex[u as usize] {
                if b == a || seen[b] == a || !buckets[b].alive || !buckets[b].label.contains(u) {
                    continue;
                }
                seen[b] = a;
                let common = buckets[a].label.intersection(&buckets[b].label).len();
                let loss = buckets[a].label.len() + buckets[b].label.len() - 2 * common;
                if best.is_none_or(|(l, id)| (loss, b) < (l, id)) {
                    best = Some((loss, b));
                }
            }
        }
        // No partner: `a` stays as is and leaves the queue.
        let Some((_, b)) = best else { continue };
        queue.remove(&(buckets[b].count, b));
        let label = buckets[a].label.intersection(&buckets[b].label);
        let moved = std::mem::take(&mut buckets[a].members);
        let count = buckets[a].count;
        buckets[a].alive = false;
        let target_bucket = &mut buckets[b];
        target_bucket.label = label;
        target_bucket.count += count;
        target_bucket.members.extend(moved);
        queue.insert((target_bucket.count, b));
        alive -= 1;
        merges += 1;
    }

    let smallest = buckets.iter().filter(|b| b.alive).map(|b| b.count).min();
    let reached = done(alive, smallest);
    if merges == 0 {
        return Ok(Coarsened { advice: advice.clone(), reached, merges });
    }
    let mut label_of_member: HashMap<VertexType, VertexType> = HashMap::new();
    for b in buckets.iter().filter(|b| b.alive) {
        for m in &b.members {
            label_of_member.insert(m.clone(), b.label.clone());
        }
    }
    let mut members: HashMap<VertexType, VertexType> = HashMap::new();
    for (orig, old) in &advice.members {
        if let Some(new) = label_of_member.get(old) {
            members.insert(orig.clone(), new.clone());
        }
    }
    for (m, label) in label_of_member {
        members.entry(m).or_insert(label);
    }
    let histogram = TypeHistogram::from_counts(
        n,
        buckets.iter().filter(|b| b.alive).map(|b| (b.label.clone(), b.count)),
    )?;
    Ok(Coarsened { advice: AdviceBundle::with_members(histogram, members), reached, merges })
}

/// Testing-only grouping of the advice support into at most `target_r`
/// labels. Types holding at least `n / target_r` mass keep their own label;
/// the rest are cut, in sorted order, into contiguous groups of roughly equal
/// mass.
pub fn bucket_partition(advice: &TypeHistogram, target_r: usize) -> Result<ReducedDomain> {
    if target_r == 0 {
        return invalid("target support must be at least 1");
    }
    if advice.support_size() <= target_r {
        return Ok(ReducedDomain::from_support(advice));
    }
    let threshold = advice.n().div_ceil(target_r) as u64;
    let mut heavy: Vec<(&VertexType, u64)> = advice.iter().filter(|&(_, c)| c >= threshold).collect();
    heavy.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    heavy.truncate(target_r - 1);
    let heavy_set: std::collections::HashSet<&VertexType> = heavy.iter().map(|&(t, _)| t).collect();
    let light: Vec<(&VertexType, u64)> = advice.iter().filter(|(t, _)| !heavy_set.contains(t)).collect();

    let mut groups: Vec<Vec<VertexType>> = heavy.iter().map(|&(t, _)| vec![t.clone()]).collect();
    let slots = (target_r - groups.len()).min(light.len());
    let mass: u64 = light.iter().map(|&(_, c)| c).sum();
    let mut acc = 0u64;
    let mut current = Vec::new();
    let mut made = 0;
    for (i, &(t, c)) in light.iter().enumerate() {
        current.push(t.clone());
        acc += c;
        let left = light.len() - i - 1;
        let remaining_groups = slots - made - 1;
        // Close the group at the next equal-mass boundary, keeping at least
        // one type for every group still to come.
        let boundary = (made as u64 + 1) * mass / slots as u64;
        if remaining_groups > 0 && (acc >= boundary || left == remaining_groups) {
            groups.push(std::mem::take(&mut current));
            made += 1;
        }
    }
    if !current.is_empty() {
        groups.push(current);
    }
    ReducedDomain::from_groups(groups)
}

/// Advice labels ordered for the online remapping scan.
#[derive(Clone, Debug)]
pub struct LabelIndex {
    labels: Vec<VertexType>,
    lookup: HashMap<VertexType, usize>,
    /// Label indices by descending cardinality, then ascending label.
    scan: Vec<usize>,
}

impl LabelIndex {
    pub fn new(advice: &TypeHistogram) -> Self {
        let labels: Vec<VertexType> = advice.types().cloned().collect();
        let lookup = labels.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut scan: Vec<usize> = (0..labels.len()).collect();
        scan.sort_by(|&a, &b| labels[b].len().cmp(&labels[a].len()).then_with(|| labels[a].cmp(&labels[b])));
        LabelIndex { labels, lookup, scan }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &VertexType {
        &self.labels[i]
    }
}

/// Online remapping of an arrival: the largest advice label contained in its
/// type that still has remaining count, ties broken by larger remaining count
/// and then by the smaller label. `None` if no such label exists.
pub fn remap_online(arrival: &VertexType, index: &LabelIndex, remaining: &[u64]) -> Option<usize> {
    if let Some(&i) = index.lookup.get(arrival) {
        if remaining[i] > 0 {
            return Some(i);
        }
    }
    let start = index.scan.partition_point(|&i| index.labels[i].len() > arrival.len());
    let mut best: Option<usize> = None;
    for &i in &index.scan[start..] {
        if let Some(b) = best {
            if index.labels[i].len() < index.labels[b].len() {
                break;
            }
        }
        if remaining[i] == 0 || !index.labels[i].is_subset_of(arrival) {
            continue;
        }
        if best.is_none_or(|b| remaining[i] > remaining[b]) {
            best = Some(i);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemapEntry {
    pub source: VertexType,
    /// `None` means unmapped.
    pub target: Option<VertexType>,
    pub count: u64,
}

/// Assignment of every true slot to an advice label contained in it, or to
/// nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Remapping {
    entries: Vec<RemapEntry>,
}

impl Remapping {
    pub fn entries(&self) -> &[RemapEntry] {
        &self.entries
    }

    /// Number of slots mapped to some advice label.
    pub fn overlap(&self) -> u64 {
        self.entries.iter().filter(|e| e.target.is_some()).map(|e| e.count).sum()
    }

    /// One `(true type, target)` pair per slot, in the order of the true
    /// histogram.
    pub fn assignment(&self) -> Vec<(VertexType, Option<VertexType>)> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n((e.source.clone(), e.target.clone()), e.count as usize))
            .collect()
    }

    pub fn validate(&self, c_star: &TypeHistogram, advice: &TypeHistogram) -> Result<()> {
        let mut used: HashMap<&VertexType, u64> = HashMap::new();
        let mut per_source: HashMap<&VertexType, u64> = HashMap::new();
        for e in &self.entries {
            *per_source.entry(&e.source).or_insert(0) += e.count;
            if let Some(t) = &e.target {
                if !t.is_subset_of(&e.source) {
                    return Err(Error::InvariantViolation(format!("{{{t}}} is not a subset of {{{}}}", e.source)));
                }
                *used.entry(t).or_insert(0) += e.count;
            }
        }
        for (t, c) in c_star.iter() {
            if per_source.get(t).copied().unwrap_or(0) != c {
                return Err(Error::InvariantViolation(format!("slots of {{{t}}} not fully assigned")));
            }
        }
        for (t, u) in used {
            if u > advice.count(t) {
                return Err(Error::InvariantViolation(format!("advice label {{{t}}} used {u} times")));
            }
        }
        Ok(())
    }
}

/// Maximum-overlap remapping of `c*` onto `ĉ` via an integral max flow:
/// source → true type (capacity `c*_i`) → contained advice label → sink
/// (capacity `ĉ_j`).
pub fn remap_offline(c_star: &TypeHistogram, advice: &TypeHistogram) -> Result<(Remapping, u64)> {
    if c_star.n() != advice.n() {
        return invalid(format!("histograms over n = {} and n = {}", c_star.n(), advice.n()));
    }
    let r_star = c_star.support_size();
    let r_hat = advice.support_size();
    let source = 0;
    let sink = 1 + r_star + r_hat;
    let mut net = FlowNetwork::new(sink + 1);
    let mut arcs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); r_star];
    for (i, (ti, ci)) in c_star.iter().enumerate() {
        net.add_edge(source, 1 + i, ci);
        for (j, (tj, _)) in advice.iter().enumerate() {
            if tj.is_subset_of(ti) {
                arcs[i].push((j, net.add_edge(1 + i, 1 + r_star + j, ci)));
            }
        }
    }
    for (j, (_, cj)) in advice.iter().enumerate() {
        net.add_edge(1 + r_star + j, sink, cj);
    }
    let value = net.max_flow(source, sink);

    let mut entries = Vec::new();
    for (i, (ti, ci)) in c_star.iter().enumerate() {
        let mut mapped = 0;
        for &(j, e) in &arcs[i] {
            let f = net.flow(e);
            if f > 0 {
                let target = advice.get_index(j).map(|(t, _)| t.clone());
                entries.push(RemapEntry { source: ti.clone(), target, count: f });
                mapped += f;
            }
        }
        if mapped < ci {
            entries.push(RemapEntry { source: ti.clone(), target: None, count: ci - mapped });
        }
    }
    let remapping = Remapping { entries };
    debug_assert_eq!(remapping.overlap(), value);
    Ok((remapping, value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt(v: &[u32], n: usize) -> VertexType {
        VertexType::new(v.to_vec(), n).unwrap()
    }

    #[test]
    fn perfect_advice_needs_no_patch() {
        let h = TypeHistogram::from_counts(2, [(VertexType::full(2), 2)]).unwrap();
        let a = AdviceBundle::new(h);
        let (p, rec) = patch_advice(&a).unwrap();
        assert_eq!(p, a);
        assert_eq!(rec.k, 0);
        assert!(rec.new_label.is_none());
    }

    #[test]
    fn star_advice_patches_to_perfect() {
        // Every slot sees only vertex 0: n̂ = 1.
        let h = TypeHistogram::from_counts(4, [(vt(&[0], 4), 4)]).unwrap();
        let a = AdviceBundle::new(h.clone());
        let (p, rec) = patch_advice(&a).unwrap();
        assert_eq!(rec.k, 3);
        assert_eq!(rec.a_u, vec![1, 2, 3]);
        assert_eq!(p.n_hat(), 4);
        assert_eq!(p.r_hat(), 2);
        assert_eq!(p.histogram().count(&vt(&[1, 2, 3], 4)), 3);
        assert_eq!(crate::l1_histogram(&h, p.histogram()).unwrap(), 6);
    }

    #[test]
    fn slots_list_matched_first() {
        let h = TypeHistogram::from_counts(3, [(vt(&[0], 3), 3)]).unwrap();
        let a = AdviceBundle::new(h);
        let slots = a.slots();
        assert_eq!(slots, vec![vec![Some(0), None, None]]);
    }

    #[test]
    fn single_type_is_not_coarsened() {
        let h = TypeHistogram::from_counts(3, [(VertexType::full(3), 3)]).unwrap();
        let a = AdviceBundle::new(h);
        let out = bucket_coarsen(&a, CoarsenTarget::Support(1)).unwrap();
        assert!(out.reached);
        assert_eq!(out.merges, 0);
        assert_eq!(out.advice, a);
    }

    #[test]
    fn disjoint_types_cannot_merge() {
        let h = TypeHistogram::from_counts(2, [(vt(&[0], 2), 1), (vt(&[1], 2), 1)]).unwrap();
        let a = AdviceBundle::new(h);
        let out = bucket_coarsen(&a, CoarsenTarget::Support(1)).unwrap();
        assert!(!out.reached);
        assert_eq!(out.advice, a);
        assert!(bucket_coarsen(&a, CoarsenTarget::Support(0)).is_err());
    }

    #[test]
    fn label_of_follows_members() {
        let n = 4;
        let h = TypeHistogram::from_counts(n, [(vt(&[0, 1], n), 2), (vt(&[0, 1, 2], n), 1), (vt(&[3], n), 1)])
            .unwrap();
        let a = AdviceBundle::new(h);
        let out = bucket_coarsen(&a, CoarsenTarget::Support(2)).unwrap();
        assert!(out.reached);
        let b = out.advice;
        assert_eq!(b.r_hat(), 2);
        let merged = b.label_of(&vt(&[0, 1, 2], n)).unwrap();
        assert_eq!(b.histogram().get_index(merged).unwrap(), (&vt(&[0, 1], n), 3));
        assert_eq!(b.label_of(&vt(&[0, 1], n)), Some(merged));
        assert_eq!(b.label_of(&vt(&[2], n)), None);
    }

    #[test]
    fn partition_keeps_heavy_types() {
        let n = 10;
        let h = TypeHistogram::from_counts(
            n,
            [(vt(&[0], n), 5), (vt(&[1], n), 1), (vt(&[2], n), 1), (vt(&[3], n), 1), (vt(&[4], n), 1), (vt(&[5], n), 1)],
        )
        .unwrap();
        let d = bucket_partition(&h, 3).unwrap();
        assert_eq!(d.advice_labels(), 3);
        assert_eq!(d.group(0), &[vt(&[0], n)]);
        assert_eq!(d.reduce_type(&vt(&[1], n)), d.reduce_type(&vt(&[2], n)));
        assert_ne!(d.reduce_type(&vt(&[1], n)), d.reduce_type(&vt(&[5], n)));
        let d = bucket_partition(&h, 1).unwrap();
        assert_eq!(d.advice_labels(), 1);
        assert_eq!(bucket_partition(&h, 6).unwrap().advice_labels(), 6);
    }

    #[test]
    fn online_remap_prefers_largest_subset() {
        let n = 4;
        let advice =
            TypeHistogram::from_counts(n, [(vt(&[1, 3], n), 1), (vt(&[3], n), 1), (vt(&[0], n), 1), (vt(&[2], n), 1)])
                .unwrap();
        let idx = LabelIndex::new(&advice);
        let i24 = advice.index_of(&vt(&[1, 3], n)).unwrap();
        let i4 = advice.index_of(&vt(&[3], n)).unwrap();
        let arrival = vt(&[0, 1, 3], n);
        let mut remaining = vec![1; 4];
        remaining[advice.index_of(&vt(&[0], n)).unwrap()] = 0;
        assert_eq!(remap_online(&arrival, &idx, &remaining), Some(i24));
        remaining[i24] = 0;
        assert_eq!(remap_online(&arrival, &idx, &remaining), Some(i4));
        remaining[i4] = 0;
        assert_eq!(remap_online(&arrival, &idx, &remaining), None);
        // An exact label is its own subset.
        assert_eq!(remap_online(&vt(&[2], n), &idx, &[1, 1, 1, 1]), advice.index_of(&vt(&[2], n)));
    }

    #[test]
    fn online_remap_ties() {
        let n = 3;
        let advice = TypeHistogram::from_counts(n, [(vt(&[0], n), 1), (vt(&[1], n), 2)]).unwrap();
        let idx = LabelIndex::new(&advice);
        let arrival = vt(&[0, 1], n);
        // Higher remaining count wins; then the smaller label.
        assert_eq!(remap_online(&arrival, &idx, &[1, 2]), Some(1));
        assert_eq!(remap_online(&arrival, &idx, &[1, 1]), Some(0));
    }

    #[test]
    fn offline_remap_identity() {
        let n = 4;
        let h = TypeHistogram::from_counts(n, [(vt(&[0, 2], n), 1), (vt(&[1, 2], n), 1), (vt(&[0, 1, 3], n), 2)])
            .unwrap();
        let (r, overlap) = remap_offline(&h, &h).unwrap();
        assert_eq!(overlap, 4);
        r.validate(&h, &h).unwrap();
        for (s, t) in r.assignment() {
            assert_eq!(Some(s), t);
        }
    }
}
