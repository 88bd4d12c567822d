//! Online bipartite matching with distributional advice: the test-and-match
//! algorithm, its baselines, advice transformations and the synthetic
//! benchmark families.

pub mod advice;
pub mod algorithms;
pub mod disttest;
pub mod error;
pub mod flow;
pub mod instances;
pub mod matching;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use matching::{competitive_ratio, max_matching, postfix_optimum, ImpliedGraph};
pub use types::{l1_histogram, l1_normalized, l1_reduced, Matching, ReducedDomain, TypeHistogram, VertexType};
