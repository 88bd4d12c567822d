#![allow(dead_code)]

use rand::Rng;
use tam_core::{TypeHistogram, VertexType};

pub fn random_type<R: Rng>(rng: &mut R, n: usize, p: f64) -> VertexType {
    let nb = (0..n as u32).filter(|_| rng.random_bool(p)).collect();
    VertexType::new(nb, n).unwrap()
}

/// Histogram over `n` with at most `max_types` distinct random types.
pub fn random_histogram<R: Rng>(rng: &mut R, n: usize, max_types: usize, p: f64) -> TypeHistogram {
    let types: Vec<VertexType> = (0..rng.random_range(1..=max_types)).map(|_| random_type(rng, n, p)).collect();
    let online = (0..n).map(|_| types[rng.random_range(0..types.len())].clone());
    TypeHistogram::from_types(n, online).unwrap()
}

/// Unmatched online vertices have no free neighbor.
pub fn is_maximal(types: &[VertexType], assignment: &[Option<u32>], n: usize) -> bool {
    let mut used = vec![false; n];
    assignment.iter().flatten().for_each(|&u| used[u as usize] = true);
    types
        .iter()
        .zip(assignment)
        .all(|(t, a)| a.is_some() || t.neighbors().iter().all(|&u| used[u as usize]))
}
