use proptest::prelude::*;
use roughshe::analysis::{psi0, NaturalMetric, ReferenceMetric, SpaceTimeMetric};
use roughshe::gaussian::{natural_metric_fast, CovarianceKernel};
use roughshe::io::{read_noise, write_noise};
use roughshe::kernel::Weight;
use roughshe::noise::{mollify, sample_noise};
use roughshe::rng::derive_seed;
use roughshe::{HurstParameter, SpaceTimeGrid};

fn hurst() -> impl Strategy<Value = HurstParameter> {
    (0.26f64..0.49).prop_map(|h| HurstParameter::new(h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn covariance_is_symmetric_translation_invariant_and_cauchy_schwarz(
        h in hurst(), t in 0.01f64..5.0, s in 0.01f64..5.0, x in -10.0f64..10.0, y in -10.0f64..10.0, shift in -50.0f64..50.0
    ) {
        let k = CovarianceKernel::new(h);
        let c = k.cov((t, x), (s, y));
        prop_assert!((c - k.cov((s, y), (t, x))).abs() <= 1e-14 * c.abs().max(1e-300) + 1e-16);
        prop_assert!((c - k.cov((t, x + shift), (s, y + shift))).abs() <= 1e-9 * k.variance(t.max(s)));
        prop_assert!(c * c <= k.variance(t) * k.variance(s) * (1.0 + 1e-10));
    }

    #[test]
    fn variance_scales_like_t_to_the_h(h in hurst(), t in 0.01f64..10.0, lambda in 0.1f64..10.0) {
        let k = CovarianceKernel::new(h);
        let ratio = k.variance(lambda * t) / k.variance(t);
        prop_assert!((ratio / lambda.powf(h.h()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn natural_offset_matches_pairwise_distance(h in hurst(), t in 0.05f64..3.0, tau in 0.0f64..2.0, z in -5.0f64..5.0) {
        let k = CovarianceKernel::new(h);
        let m = NaturalMetric::new(h);
        let direct = natural_metric_fast((t, 0.0), (t + tau, z), &k);
        let off = m.offset(t, tau, z);
        prop_assert!((off - direct).abs() <= 1e-7 * direct.max(1e-3), "{off} vs {direct}");
        prop_assert!(ReferenceMetric::new(h).offset(t, tau, z) >= 0.0);
    }

    #[test]
    fn psi0_is_nondecreasing_and_starts_at_one(t in 0.01f64..10.0, a in 1.0f64..100.0, b in 1.0f64..100.0) {
        let r = t.sqrt();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(psi0(t, lo * r).unwrap() <= psi0(t, hi * r).unwrap());
        prop_assert_eq!(psi0(t, r).unwrap(), 1.0);
        prop_assert!(psi0(t, 0.5 * r).is_err());
    }

    #[test]
    fn weight_ratio_is_a_quotient_of_weights(a in 0.0f64..2.0, x in -100.0f64..100.0, z in -100.0f64..100.0) {
        let w = Weight::power(a);
        prop_assert_eq!(w.ratio(0.0, z), 1.0);
        prop_assert!((w.ratio(x, z) - w.eval(z - x) / w.eval(z)).abs() <= 1e-12 * w.ratio(x, z));
    }

    #[test]
    fn sub_seeds_are_reproducible(master in any::<u64>(), i in 0u64..1000, j in 1000u64..2000) {
        prop_assert_eq!(derive_seed(master, i), derive_seed(master, i));
        prop_assert_ne!(derive_seed(master, i), derive_seed(master, j));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn noise_dump_round_trips(nt in 1usize..8, half in 1usize..16, seed in any::<u64>(), h in hurst()) {
        let grid = SpaceTimeGrid::new(0.5, 2.0, nt, 2 * half + 1).unwrap();
        let noise = sample_noise(&grid, h, seed).unwrap();
        let mut bytes = Vec::new();
        write_noise(&mut bytes, &noise).unwrap();
        let back = read_noise(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.increments, noise.increments);
        prop_assert_eq!(back.grid, grid);
    }

    #[test]
    fn mollification_preserves_slice_mass(seed in any::<u64>(), eps in 1e-4f64..0.5, h in hurst()) {
        let grid = SpaceTimeGrid::new(1.0, 4.0, 4, 65).unwrap();
        let noise = sample_noise(&grid, h, seed).unwrap();
        let m = mollify(&noise, eps).unwrap();
        for i in 0..grid.nt {
            let a: f64 = noise.slice(i).iter().sum();
            let b: f64 = m.slice(i).iter().sum();
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + a.abs()));
        }
    }
}
