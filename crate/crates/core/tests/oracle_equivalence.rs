//! Full-scale independence check of the two summatory routes: the hyperbola
//! recursion against naive block-sieved accumulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use piltz_core::divisor::{summatory_checkpoints, HyperbolaCalculator};

/// Every x up to 2·10⁴ for every order 2..=6, plus 10³ seeded random
/// x ≤ 10⁶ per order; exact equality throughout.
#[test]
fn hyperbola_equals_naive_everywhere() {
    let orders: Vec<u32> = (2..=6).collect();
    orders.par_iter().for_each(|&k| {
        const DENSE: u64 = 20_000;
        let dense: Vec<u64> = (0..=DENSE).collect();
        let naive = summatory_checkpoints(k, &dense).unwrap();
        let mut calc = HyperbolaCalculator::new(k);
        for x in 0..=DENSE {
            assert_eq!(
                calc.summatory(x).unwrap(),
                naive[x as usize],
                "dense disagreement at k={k} x={x}"
            );
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0xD1C4 + k as u64);
        let random: Vec<u64> = (0..1000).map(|_| rng.random_range(1..=1_000_000u64)).collect();
        let naive = summatory_checkpoints(k, &random).unwrap();
        for (i, &x) in random.iter().enumerate() {
            assert_eq!(
                calc.summatory(x).unwrap(),
                naive[i],
                "random disagreement at k={k} x={x}"
            );
        }
    });
}

/// The telescoping identity in exact rational arithmetic at full sample scale.
#[test]
fn telescoping_identity_200_samples() {
    let report = piltz_core::lemmas::telescoping_suite(42, 200);
    assert_eq!(report.holds, 200);
    assert_eq!(report.violated, 0);
}
