use initlearn_core::gd::{run_gd, GdConfig, StepRule};
use initlearn_core::problems::testing::Shifted;
use initlearn_core::problems::{
    project_box, sum_rate, sum_rate_gradient, ConvexPerturbFamily, Instance, ProblemFamily, SumRateFamily,
    SumRateInstance,
};
use initlearn_core::seed::seeded;
use proptest::prelude::*;

fn unit_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, n)
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn box_projection_is_idempotent_and_nearest(theta in prop::collection::vec(-3.0..3.0f64, 1..12),
                                                 probe in prop::collection::vec(0.0..1.0f64, 12)) {
        let p = project_box(&theta);
        prop_assert_eq!(project_box(&p), p.clone());
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
        let q = &probe[..theta.len()];
        prop_assert!(dist2(&theta, &p) <= dist2(&theta, q) + 1e-12);
    }

    #[test]
    fn halfspace_projection_is_idempotent_and_nearest(seed in any::<u64>(), scale in 0.1..5.0f64) {
        let mut rng = seeded(seed);
        let fam = ConvexPerturbFamily::sample(6, 1.0, &mut rng).unwrap();
        let inst = fam.sample_instance(&mut rng);
        let theta: Vec<f64> = fam.sample_init(&inst, &mut rng).iter().map(|v| v * scale - 1.0).collect();
        let p = fam.project(&theta, &inst);
        prop_assert!(fam.view(&inst).margin(&p) <= 1e-12);
        let pp = fam.project(&p, &inst);
        prop_assert!(dist2(&p, &pp) < 1e-24);
        // Any feasible point is at least as far from θ.
        for _ in 0..16 {
            let other = fam.sample_init(&inst, &mut rng);
            prop_assert!(dist2(&theta, &p) <= dist2(&theta, &other) + 1e-9);
        }
    }

    #[test]
    fn iterates_stay_feasible(seed in any::<u64>(), iters in 0usize..40) {
        let mut rng = seeded(seed);
        let fam = ConvexPerturbFamily::sample(8, 1.0, &mut rng).unwrap();
        let inst = fam.sample_instance(&mut rng);
        let start = fam.sample_init(&inst, &mut rng);
        let out = run_gd(&fam, &inst, &start, &GdConfig::new(iters, 0.0, fam.default_step_rule()), true).unwrap();
        prop_assert_eq!(fam.constraint_check(&out.theta_star, &inst), Some(true));

        let sr = SumRateFamily::new(4, 10.0);
        let inst = sr.sample_instance(&mut rng);
        let start = sr.sample_init(&inst, &mut rng);
        let out = run_gd(&sr, &inst, &start, &GdConfig::new(iters, 0.0, sr.default_step_rule()), false).unwrap();
        prop_assert!(out.theta_star.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn quadratic_matches_closed_form(c in unit_vec(3), t0 in prop::collection::vec(-2.0..2.0f64, 3),
                                     p in 0.05..0.45f64, q in 1.0..10.0f64, k in 0usize..60) {
        // θ_K − c = (θ_0 − c)·Π(1 − 2p/(q+j)) while every factor is in (0, 1).
        let fam = Shifted::new(c.clone());
        let rule = StepRule::new(p, q).unwrap();
        let out = run_gd(&fam, &fam.instance(), &t0, &GdConfig::new(k, 0.0, rule), false).unwrap();
        let factor: f64 = (0..k).map(|j| 1.0 - 2.0 * p / (q + j as f64)).product();
        let expected: f64 = t0.iter().zip(&c).map(|(t, c)| ((t - c) * factor).powi(2)).sum();
        prop_assert!((out.value_star - expected).abs() <= 1e-12 * (1.0 + expected));
        prop_assert_eq!(out.iterations_used, k);
    }

    #[test]
    fn sum_rate_is_permutation_invariant(seed in any::<u64>(), n in 2usize..7) {
        let mut rng = seeded(seed);
        let fam = SumRateFamily::new(n, 10.0);
        let inst = fam.sample_instance(&mut rng);
        let theta = fam.sample_init(&inst, &mut rng);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(1);
        perm.swap(0, n - 1);
        let ch: Vec<f64> = (0..n * n).map(|k| inst.x[perm[k / n] * n + perm[k % n]]).collect();
        let th: Vec<f64> = perm.iter().map(|&i| theta[i]).collect();
        let a = SumRateInstance::new(n, inst.x.clone());
        let b = SumRateInstance::new(n, ch);
        prop_assert!((sum_rate(&theta, &a) - sum_rate(&th, &b)).abs() < 1e-12);
        let ga = sum_rate_gradient(&theta, &a);
        let gb = sum_rate_gradient(&th, &b);
        for (i, &pi) in perm.iter().enumerate() {
            prop_assert!((gb[i] - ga[pi]).abs() < 1e-12);
        }
    }

    #[test]
    fn gd_is_deterministic(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let fam = SumRateFamily::new(5, 10.0);
        let inst = fam.sample_instance(&mut rng);
        let start = fam.sample_init(&inst, &mut rng);
        let cfg = GdConfig::new(30, 1e-6, fam.default_step_rule()).with_trace();
        let a = run_gd(&fam, &inst, &start, &cfg, false).unwrap();
        let b = run_gd(&fam, &inst, &start, &cfg, false).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn trace_prefix_does_not_depend_on_cap() {
    let mut rng = seeded(9);
    let fam = SumRateFamily::new(6, 10.0);
    let inst: Instance = fam.sample_instance(&mut rng);
    let start = fam.sample_init(&inst, &mut rng);
    let long = run_gd(&fam, &inst, &start, &GdConfig::new(80, 0.0, fam.default_step_rule()).with_trace(), false).unwrap();
    let short = run_gd(&fam, &inst, &start, &GdConfig::new(30, 0.0, fam.default_step_rule()).with_trace(), false).unwrap();
    assert_eq!(long.trace.unwrap()[..30], short.trace.unwrap()[..]);
}
