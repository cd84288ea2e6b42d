//! Library optimizers against the brute-force oracles in `common`.

mod common;

use common::*;
use num_traits::One;
use ordmech::general::{self, GeneralInstance};
use ordmech::matching::{self, MatchingInstance};
use ordmech::matroid;
use ordmech::prefs::{expected_counts, histogram, rank_approx_factor};
use ordmech::rational::{ceil_log2, from_usize};
use ordmech::sched;
use ordmech::Rational;
use proptest::prelude::*;
use rand::SeedableRng;

fn sizes(max_n: usize, max_m: usize) -> impl Strategy<Value = (usize, usize, u64)> {
    (1..=max_n, 1..=max_m, any::<u64>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn maxranks_matching_match_dp((n, m, seed) in sizes(7, 7)) {
        let p = random_profile(&mut rng(seed), n, m);
        prop_assert_eq!(matching::maxranks_matching(&MatchingInstance::new(p.clone())), brute_maxranks_matching(&p));
    }

    #[test]
    fn max_match_is_maximal_every_stage((n, m, seed) in sizes(7, 7)) {
        let inst = MatchingInstance::new(random_profile(&mut rng(seed), n, m));
        for (idx, s) in matching::max_match_stages(&inst).iter().enumerate() {
            prop_assert!(s.is_matching());
            prop_assert!(matching::is_maximal_in(&inst, s, idx + 1));
        }
    }

    #[test]
    fn general_maxranks_match_enumeration((n, m, seed) in sizes(9, 9)) {
        let p = random_profile(&mut rng(seed), n, m);
        prop_assert_eq!(GeneralInstance::new(p.clone()).maxranks(), brute_maxranks_general(&p));
    }

    #[test]
    fn randrank_within_log_bound((n, m, seed) in (2usize..=12, 1usize..=12, any::<u64>())) {
        let inst = GeneralInstance::new(random_profile(&mut rng(seed), n, m));
        let l = general::randrank(&inst).unwrap();
        let e = expected_counts(&l, |o| histogram(&inst.profile, *o).unwrap());
        let f = rank_approx_factor(&e, &inst.maxranks()).unwrap();
        prop_assert!(f.at_most(&from_usize(2 * ceil_log2(n))));
    }

    #[test]
    fn best_lottery_beats_randrank((n, m, seed) in sizes(6, 5)) {
        let inst = GeneralInstance::new(random_profile(&mut rng(seed), n, m));
        let best = general::best_factor_lottery(&inst).unwrap();
        let l = general::randrank(&inst).unwrap();
        prop_assert!(general::lottery_factor(&inst, &l).unwrap().fraction() <= best.fraction);
    }

    #[test]
    fn matroid_intersection_matches_enumeration((n, m, seed) in sizes(5, 3)) {
        let market = random_market(&mut rng(seed), n, m);
        let mr = maxranks_of(&matroid_rank_vectors(&market), m);
        for r in 1..=m {
            prop_assert_eq!(matroid::max_common_independent(&market, r).len(), mr[r - 1]);
        }
    }

    #[test]
    fn maxrank_sched_matches_enumeration((n, m, seed) in sizes(6, 3)) {
        let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let inst = random_unrelated(&mut g, n, m);
        let all: Vec<usize> = (0..n).collect();
        for r in 1..=m {
            prop_assert_eq!(sched::maxrank_sched(&inst, &all, r).unwrap(), brute_maxrank_sched(&inst, &all, r));
        }
    }

    #[test]
    fn ps_is_doubly_stochastic_and_decomposes((n, seed) in (1usize..=6, any::<u64>())) {
        let inst = MatchingInstance::new(random_profile(&mut rng(seed), n, n));
        let x = matching::ps(&inst).unwrap();
        prop_assert!(x.is_doubly_stochastic());
        let l = matching::bvn_decompose(&x).unwrap();
        for j in 0..n {
            for i in 0..n {
                let p: Rational = l.iter().filter(|(a, _)| a.get(j) == Some(i)).map(|(_, w)| w.clone()).sum();
                prop_assert_eq!(&p, &x.x[j][i]);
            }
        }
    }

    #[test]
    fn rsd_matches_serial_dictatorship_average((n, m, seed) in sizes(4, 4)) {
        let inst = MatchingInstance::new(random_profile(&mut rng(seed), n, m));
        let l = matching::rsd(&inst).unwrap();
        let orders = permutations(n);
        let w = Rational::one() / from_usize(orders.len());
        let mut expected: std::collections::BTreeMap<ordmech::Assignment, Rational> = Default::default();
        for order in &orders {
            *expected.entry(matching::serial_dictatorship(&inst, order)).or_default() += &w;
        }
        prop_assert_eq!(l.support_size(), expected.len());
        for (a, p) in &expected {
            prop_assert_eq!(&l.prob(a), p);
        }
    }
}
