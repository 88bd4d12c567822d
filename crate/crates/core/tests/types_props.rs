mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tam_core::instances::{parse_histogram, write_histogram};
use tam_core::{l1_histogram, l1_normalized, l1_reduced, ReducedDomain};

use common::random_histogram;

/// On the advice support plus a dummy, L1 against the truth is unchanged.
#[test]
fn reduced_domain_preserves_l1() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = rng.random_range(1..=30);
        let truth = random_histogram(&mut rng, n, 8, 0.15);
        let advice = random_histogram(&mut rng, n, 8, 0.15);
        let domain = ReducedDomain::from_support(&advice);
        let p = domain.project(&truth);
        let q = domain.project(&advice);
        let reduced = l1_reduced(&p, &q).unwrap();
        let full = l1_histogram(&truth, &advice).unwrap() as f64 / n as f64;
        assert!((reduced - full).abs() < 1e-12, "{reduced} vs {full}");
    }
}

proptest! {
    #[test]
    fn l1_is_a_metric(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let a = random_histogram(&mut rng, n, 5, 0.3);
        let b = random_histogram(&mut rng, n, 5, 0.3);
        let c = random_histogram(&mut rng, n, 5, 0.3);
        let ab = l1_histogram(&a, &b).unwrap();
        prop_assert_eq!(ab, l1_histogram(&b, &a).unwrap());
        prop_assert_eq!(l1_histogram(&a, &a).unwrap(), 0);
        prop_assert!(ab <= l1_histogram(&a, &c).unwrap() + l1_histogram(&c, &b).unwrap());
        prop_assert!(ab % 2 == 0);
        prop_assert!(l1_normalized(&a, &b).unwrap() <= 2.0);
    }

    #[test]
    fn text_format_round_trips(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=25);
        let h = random_histogram(&mut rng, n, 6, 0.3);
        let text = write_histogram(&h);
        prop_assert_eq!(parse_histogram(&text).unwrap(), h);
    }
}
