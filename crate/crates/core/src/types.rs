//! Vertex types, type histograms, matchings and the L1 arithmetic shared by
//! every other module.
//!
//! A *type* is the neighbor set of an online vertex. Histograms are sparse:
//! only realized types are stored, each with a strictly positive count, and
//! the counts always sum to the offline vertex count `n`.

use std::collections::HashMap;
use std::fmt;

use indexmap::IndexMap;

use crate::error::{invalid, Error, Result};

/// Sorted, duplicate-free set of offline vertex indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexType(Vec<u32>);

impl VertexType {
    /// Canonicalizes `neighbors` (sort + dedup) and checks every index is `< n`.
    pub fn new(mut neighbors: Vec<u32>, n: usize) -> Result<Self> {
        neighbors.sort_unstable();
        neighbors.dedup();
        if let Some(&last) = neighbors.last() {
            if last as usize >= n {
                return invalid(format!("offline index {last} out of range for n = {n}"));
            }
        }
        Ok(VertexType(neighbors))
    }

    /// Caller guarantees `neighbors` is strictly increasing.
    pub(crate) fn from_sorted(neighbors: Vec<u32>) -> Self {
        debug_assert!(neighbors.windows(2).all(|w| w[0] < w[1]));
        VertexType(neighbors)
    }

    pub fn empty() -> Self {
        VertexType(Vec::new())
    }

    /// The type adjacent to every offline vertex.
    pub fn full(n: usize) -> Self {
        VertexType((0..n as u32).collect())
    }

    pub fn neighbors(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, u: u32) -> bool {
        self.0.binary_search(&u).is_ok()
    }

    pub fn is_valid_for(&self, n: usize) -> bool {
        self.0.windows(2).all(|w| w[0] < w[1]) && self.0.last().is_none_or(|&u| (u as usize) < n)
    }

    pub fn is_subset_of(&self, other: &VertexType) -> bool {
        if self.0.len() > other.0.len() {
            return false;
        }
        let mut rest = other.0.as_slice();
        for &u in &self.0 {
            match rest.binary_search(&u) {
                Ok(pos) => rest = &rest[pos + 1..],
                Err(_) => return false,
            }
        }
        true
    }

    pub fn intersection(&self, other: &VertexType) -> VertexType {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        VertexType(out)
    }

    pub fn union(&self, other: &VertexType) -> VertexType {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let next = match (self.0.get(i), other.0.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        VertexType(out)
    }
}

/// Comma-separated indices, `""` for the empty type.
impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, u) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{u}")?;
        }
        Ok(())
    }
}

/// Sparse histogram of online vertex types over `n` offline vertices.
///
/// Entries are kept in ascending type order so iteration (and therefore the
/// expanded graph and every derived matching) is deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeHistogram {
    n: usize,
    entries: IndexMap<VertexType, u64>,
}

impl TypeHistogram {
    /// Aggregates `(type, count)` pairs. Zero counts are dropped; the total
    /// must equal `n`.
    pub fn from_counts<I>(n: usize, counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexType, u64)>,
    {
        let mut entries: IndexMap<VertexType, u64> = IndexMap::new();
        for (t, c) in counts {
            if !t.is_valid_for(n) {
                return invalid(format!("type {{{t}}} is not valid for n = {n}"));
            }
            if c > 0 {
                *entries.entry(t).or_insert(0) += c;
            }
        }
        let total: u64 = entries.values().sum();
        if total != n as u64 {
            return invalid(format!("histogram counts sum to {total}, expected n = {n}"));
        }
        entries.sort_unstable_keys();
        Ok(TypeHistogram { n, entries })
    }

    /// Histogram of an explicit list of online types (one per online vertex).
    pub fn from_types<I>(n: usize, types: I) -> Result<Self>
    where
        I: IntoIterator<Item = VertexType>,
    {
        Self::from_counts(n, types.into_iter().map(|t| (t, 1)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of distinct realized types.
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    pub fn count(&self, t: &VertexType) -> u64 {
        self.entries.get(t).copied().unwrap_or(0)
    }

    pub fn contains(&self, t: &VertexType) -> bool {
        self.entries.contains_key(t)
    }

    pub fn index_of(&self, t: &VertexType) -> Option<usize> {
        self.entries.get_index_of(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VertexType, u64)> + '_ {
        self.entries.iter().map(|(t, &c)| (t, c))
    }

    pub fn types(&self) -> impl Iterator<Item = &VertexType> + '_ {
        self.entries.keys()
    }

    pub fn get_index(&self, i: usize) -> Option<(&VertexType, u64)> {
        self.entries.get_index(i).map(|(t, &c)| (t, c))
    }

    /// One entry per online vertex: sorted by type, then multiplicity.
    pub fn expand(&self) -> Vec<VertexType> {
        let mut out = Vec::with_capacity(self.n);
        for (t, c) in self.iter() {
            for _ in 0..c {
                out.push(t.clone());
            }
        }
        out
    }

    /// `p = c / n` over the support, in iteration order.
    pub fn frequencies(&self) -> Vec<f64> {
        self.entries.values().map(|&c| c as f64 / self.n as f64).collect()
    }
}

/// `Σ_t |a(t) − b(t)|` at count scale.
pub fn l1_histogram(a: &TypeHistogram, b: &TypeHistogram) -> Result<u64> {
    if a.n != b.n {
        return invalid(format!("histograms over different n ({} vs {})", a.n, b.n));
    }
    let mut total = 0u64;
    for (t, ca) in a.iter() {
        total += ca.abs_diff(b.count(t));
    }
    for (t, cb) in b.iter() {
        if !a.contains(t) {
            total += cb;
        }
    }
    Ok(total)
}

/// L1 between the normalized distributions `a/n` and `b/n`.
pub fn l1_normalized(a: &TypeHistogram, b: &TypeHistogram) -> Result<f64> {
    Ok(l1_histogram(a, b)? as f64 / a.n as f64)
}

/// A matching between online positions and offline vertices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    online_to_offline: Vec<Option<u32>>,
    size: usize,
}

impl Matching {
    pub fn empty(online: usize) -> Self {
        Matching { online_to_offline: vec![None; online], size: 0 }
    }

    pub fn from_assignment(online_to_offline: Vec<Option<u32>>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for u in online_to_offline.iter().flatten() {
            if !seen.insert(*u) {
                return Err(Error::InvariantViolation(format!(
                    "offline vertex {u} matched twice"
                )));
            }
        }
        let size = seen.len();
        Ok(Matching { online_to_offline, size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn online_len(&self) -> usize {
        self.online_to_offline.len()
    }

    pub fn partner(&self, online: usize) -> Option<u32> {
        self.online_to_offline.get(online).copied().flatten()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.online_to_offline.iter().enumerate().filter_map(|(v, u)| u.map(|u| (v, u)))
    }

    pub fn as_slice(&self) -> &[Option<u32>] {
        &self.online_to_offline
    }

    /// Checks injectivity and that every pair is an edge of `online_types`.
    pub fn validate(&self, online_types: &[VertexType]) -> Result<()> {
        if online_types.len() != self.online_to_offline.len() {
            return Err(Error::InvariantViolation("matching length mismatch".into()));
        }
        let mut used = std::collections::HashSet::new();
        for (v, u) in self.pairs() {
            if !online_types[v].contains(u) {
                return Err(Error::InvariantViolation(format!(
                    "pair ({v}, {u}) is not an edge"
                )));
            }
            if !used.insert(u) {
                return Err(Error::InvariantViolation(format!("offline {u} used twice")));
            }
        }
        Ok(())
    }
}

/// The advice support plus one dummy label `t0` that absorbs every type the
/// advice does not predict. Positions `0..r` are advice labels; position `r`
/// is `t0`.
///
/// A label may stand for a group of advice types (testing-domain bucketing);
/// every member type reduces to its group's position.
#[derive(Clone, Debug)]
pub struct ReducedDomain {
    groups: Vec<Vec<VertexType>>,
    index: HashMap<VertexType, usize>,
}

impl ReducedDomain {
    /// One label per advice type.
    pub fn from_support(hist: &TypeHistogram) -> Self {
        Self::from_groups(hist.types().map(|t| vec![t.clone()]).collect())
            .expect("histogram keys are distinct")
    }

    /// One label per group; groups must be disjoint and nonempty.
    pub fn from_groups(groups: Vec<Vec<VertexType>>) -> Result<Self> {
        let mut index = HashMap::new();
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return invalid("empty label group");
            }
            for t in members {
                if index.insert(t.clone(), g).is_some() {
                    return invalid(format!("type {{{t}}} appears in two label groups"));
                }
            }
        }
        Ok(ReducedDomain { groups, index })
    }

    /// Number of positions including `t0` (`r̂ + 1`).
    pub fn len(&self) -> usize {
        self.groups.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of advice labels `r̂`.
    pub fn advice_labels(&self) -> usize {
        self.groups.len()
    }

    pub fn dummy(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, label: usize) -> &[VertexType] {
        &self.groups[label]
    }

    /// Position of `t`'s label, or `t0` when the advice never predicted it.
    pub fn reduce_type(&self, t: &VertexType) -> usize {
        self.index.get(t).copied().unwrap_or(self.dummy())
    }

    /// `q = ĉ / n` pushed onto this domain; `t0` gets zero mass.
    pub fn project(&self, hist: &TypeHistogram) -> Vec<f64> {
        let mut q = vec![0.0; self.len()];
        for (t, c) in hist.iter() {
            q[self.reduce_type(t)] += c as f64;
        }
        let n = hist.n() as f64;
        q.iter_mut().for_each(|x| *x /= n);
        q
    }
}

const NORMALIZATION_TOL: f64 = 1e-9;

/// L1 on the reduced domain: `Σ_{t∈T̂} |p̂(t) − q(t)| + p̂(t0)`.
pub fn l1_reduced(p_hat: &[f64], q: &[f64]) -> Result<f64> {
    if p_hat.len() != q.len() || q.is_empty() {
        return invalid(format!(
            "frequency vectors of length {} and {}",
            p_hat.len(),
            q.len()
        ));
    }
    for (name, v) in [("p_hat", p_hat), ("q", q)] {
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL || v.iter().any(|&x| x < 0.0) {
            return invalid(format!("{name} is not a distribution (sum {sum})"));
        }
    }
    let dummy = q.len() - 1;
    if q[dummy] != 0.0 {
        return invalid("q must assign zero mass to the dummy label");
    }
    let on_support: f64 = p_hat[..dummy].iter().zip(&q[..dummy]).map(|(p, q)| (p - q).abs()).sum();
    Ok(on_support + p_hat[dummy])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vt(v: &[u32]) -> VertexType {
        VertexType::new(v.to_vec(), 16).unwrap()
    }

    fn small_truth() -> TypeHistogram {
        TypeHistogram::from_counts(4, [(vt(&[0, 2]), 1), (vt(&[1, 2]), 1), (vt(&[0, 1, 3]), 2)])
            .unwrap()
    }

    fn disjoint_advice() -> TypeHistogram {
        TypeHistogram::from_counts(
            4,
            [(vt(&[0]), 1), (vt(&[2]), 1), (vt(&[3]), 1), (vt(&[1, 3]), 1)],
        )
        .unwrap()
    }

    #[test]
    fn vertex_type_is_canonical() {
        let t = VertexType::new(vec![3, 1, 3, 2], 4).unwrap();
        assert_eq!(t.neighbors(), &[1, 2, 3]);
        assert!(VertexType::new(vec![4], 4).is_err());
        assert_eq!(t.to_string(), "1,2,3");
        assert_eq!(VertexType::empty().to_string(), "");
    }

    #[test]
    fn set_operations() {
        let a = vt(&[1, 3, 5]);
        let b = vt(&[3, 4, 5, 6]);
        assert_eq!(a.intersection(&b), vt(&[3, 5]));
        assert_eq!(a.union(&b), vt(&[1, 3, 4, 5, 6]));
        assert!(vt(&[3, 5]).is_subset_of(&a));
        assert!(!a.is_subset_of(&b));
        assert!(VertexType::empty().is_subset_of(&a));
        assert!(a.is_subset_of(&a));
    }

    #[test]
    fn histogram_rejects_wrong_total() {
        assert!(TypeHistogram::from_counts(3, [(vt(&[0]), 2)]).is_err());
        let h = TypeHistogram::from_counts(3, [(vt(&[0]), 2), (vt(&[0]), 1), (vt(&[1]), 0)])
            .unwrap();
        assert_eq!(h.support_size(), 1);
        assert_eq!(h.count(&vt(&[0])), 3);
    }

    #[test]
    fn disjoint_supports_have_count_distance_2n() {
        // Both histograms carry mass 4 on disjoint supports, so the count-scale
        // distance is 8 and the normalized distance is the maximal 2.
        assert_eq!(l1_histogram(&small_truth(), &disjoint_advice()).unwrap(), 8);
        assert_eq!(l1_normalized(&small_truth(), &disjoint_advice()).unwrap(), 2.0);
    }

    #[test]
    fn l1_identity_and_mismatch() {
        assert_eq!(l1_histogram(&small_truth(), &small_truth()).unwrap(), 0);
        let other = TypeHistogram::from_counts(5, [(vt(&[0]), 5)]).unwrap();
        assert!(matches!(l1_histogram(&small_truth(), &other), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn reduce_type_maps_unknown_to_dummy() {
        let d = ReducedDomain::from_support(&disjoint_advice());
        assert_eq!(d.len(), 5);
        assert_eq!(d.reduce_type(&vt(&[1, 3])), 1);
        assert_eq!(d.reduce_type(&vt(&[0, 2])), d.dummy());
        assert_eq!(d.reduce_type(&VertexType::empty()), d.dummy());
    }

    #[test]
    fn l1_reduced_edge_cases() {
        let d = ReducedDomain::from_support(&disjoint_advice());
        let q = d.project(&disjoint_advice());
        assert_eq!(l1_reduced(&q, &q).unwrap(), 0.0);
        let mut all_dummy = vec![0.0; d.len()];
        all_dummy[d.dummy()] = 1.0;
        assert_eq!(l1_reduced(&all_dummy, &q).unwrap(), 2.0);
        assert!(l1_reduced(&all_dummy[..3], &q).is_err());
        assert!(l1_reduced(&all_dummy, &all_dummy).is_err());
    }

    #[test]
    fn matching_validation() {
        let types = vec![vt(&[0, 1]), vt(&[1])];
        let m = Matching::from_assignment(vec![Some(0), Some(1)]).unwrap();
        assert_eq!(m.size(), 2);
        m.validate(&types).unwrap();
        let bad = Matching::from_assignment(vec![Some(1), None]).unwrap();
        bad.validate(&types).unwrap();
        let non_edge = Matching::from_assignment(vec![None, Some(0)]).unwrap();
        assert!(non_edge.validate(&types).is_err());
        assert!(Matching::from_assignment(vec![Some(1), Some(1)]).is_err());
    }
}
