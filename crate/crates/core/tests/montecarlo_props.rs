use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
use qfi_radar::gaussian::GaussianBiphoton;
use qfi_radar::kinematics::Strategy;
use qfi_radar::montecarlo::{sample_times, McConfig, SampleDomain, Welford};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn thread_count_does_not_change_samples(seed in 0u64..1_000_000, kappa in -0.95f64..0.95, chunk in 1usize..700) {
        let state = GaussianBiphoton::new(1.0, -2.0, 0.5, 3.0, 0.7, 1.3, kappa).unwrap();
        let cfg = McConfig { chunk_size: chunk, ..McConfig::new(2_000, seed, SampleDomain::Time, Strategy::EntangledBiphoton) };
        let many = sample_times(&state, &cfg).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap()
            .install(|| sample_times(&state, &cfg).unwrap());
        prop_assert_eq!(many.points.len(), 2_000);
        prop_assert_eq!(many, one);
    }

    #[test]
    fn welford_merge_is_order_consistent(xs in proptest::collection::vec(-1e3f64..1e3, 2..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Welford::default(), Welford::default());
        xs[..cut].iter().for_each(|&x| a.push(x));
        xs[cut..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        prop_assert_eq!(m.count, all.count);
        prop_assert!((m.mean - all.mean).abs() <= 1e-9 * (1.0 + all.mean.abs()));
        prop_assert!((m.variance() - all.variance()).abs() <= 1e-9 * (1.0 + all.variance()));
    }
}
