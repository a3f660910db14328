use dnc::channel::{generate_channel, sparsify, transmit};
use dnc::cluster::{label_rrhs, nest_labelling, permute_to_dbbd, verify_dbbd, BlockStructure};
use dnc::detect::build_a_hat;
use dnc::netgen::{generate_layout, AreaGeometry, NetworkLayout};
use dnc::planner::{self, Mode};
use dnc::solver;
use dnc::threshold::{
    sinr_ratio_lower_bound, solve_threshold, ThresholdQuery, UserLoad, BISECTION_TOL_M,
};
use proptest::prelude::*;

fn layout(n: usize, seed: u64) -> NetworkLayout {
    let side = (n as f64 / 1e-5).sqrt();
    let g = AreaGeometry::rectangle(side, side, 1.0).unwrap();
    generate_layout(g, n, 2 * n, seed).unwrap()
}

fn structure(l: &NetworkLayout, r1: f64, r2: Option<f64>, d0: f64) -> BlockStructure {
    let s = label_rrhs(l, r1, d0).unwrap();
    match r2 {
        Some(r) => nest_labelling(&s, l, r, d0).unwrap(),
        None => s,
    }
}

fn system(l: &NetworkLayout, s: &BlockStructure, d0: f64, seed: u64) -> dnc::cluster::DbbdSystem {
    let powers = vec![1e6; l.n_user()];
    let ch = generate_channel(l, 3.7, d0, &powers, 1.0, seed).unwrap();
    let y = transmit(&ch, seed + 1);
    let (h_hat, _) = sparsify(&ch);
    let a = build_a_hat(&h_hat, &powers, 1.0, 0.5);
    permute_to_dbbd(&a, s, &y.y).unwrap()
}

/// Grid sides `(r1, optional r2)` valid for threshold `d0`.
fn sides() -> impl Strategy<Value = (f64, f64, Option<f64>)> {
    (
        40.0..200.0f64,
        2.1..12.0f64,
        proptest::option::of(0.3..1.0f64),
    )
        .prop_map(|(d0, k, f)| {
            let r1 = k * d0;
            let r2 = f.map(|f| (r1 * f).max(2.05 * d0)).filter(|&r| r <= r1);
            (d0, r1, r2)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn labelling_is_a_bijection(n in 20usize..300, seed in 0u64..1000, (d0, r1, r2) in sides()) {
        let l = layout(n, seed);
        let s = structure(&l, r1, r2, d0);
        let mut seen = vec![false; n];
        for &v in &s.new_of_old {
            prop_assert!(v < n && !seen[v]);
            seen[v] = true;
        }
        let inv = s.old_of_new();
        for (old, &new) in s.new_of_old.iter().enumerate() {
            prop_assert_eq!(inv[new], old);
        }
    }

    #[test]
    fn permuted_matrix_is_dbbd(n in 20usize..200, seed in 0u64..1000, (d0, r1, r2) in sides()) {
        let l = layout(n, seed);
        let s = structure(&l, r1, r2, d0);
        let report = verify_dbbd(&system(&l, &s, d0, seed));
        prop_assert!(report.ok, "{} violations", report.violations.len());
    }

    #[test]
    fn structure_json_round_trip(n in 20usize..200, seed in 0u64..1000, (d0, r1, r2) in sides()) {
        let l = layout(n, seed);
        let s = structure(&l, r1, r2, d0);
        let back = BlockStructure::from_json(&s.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back.new_of_old, &s.new_of_old);
        prop_assert_eq!(back.layer_stats(), s.layer_stats());
    }

    #[test]
    fn bound_is_monotone_in_threshold(
        r in 2e3..20e3f64,
        beta in 1.0..20.0f64,
        a in 1.0..3000.0f64,
        b in 1.0..3000.0f64,
    ) {
        let q = ThresholdQuery::standard(0.9, r, UserLoad::Density(beta));
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(sinr_ratio_lower_bound(lo, &q).unwrap() <= sinr_ratio_lower_bound(hi, &q).unwrap());
    }

    #[test]
    fn threshold_round_trip(r in 3e3..20e3f64, beta in 2.0..15.0f64, rho in 0.5..0.99f64) {
        let q = ThresholdQuery::standard(rho, r, UserLoad::Density(beta));
        let d0 = solve_threshold(&q).unwrap();
        prop_assert!(sinr_ratio_lower_bound(d0, &q).unwrap() >= rho);
        prop_assert!(sinr_ratio_lower_bound(d0 - 2.0 * BISECTION_TOL_M, &q).unwrap() < rho);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solution_is_mode_and_worker_invariant(n in 30usize..250, seed in 0u64..1000, (d0, r1, r2) in sides()) {
        let l = layout(n, seed);
        let s = structure(&l, r1, r2, d0);
        let sys = system(&l, &s, d0, seed);
        let modes: &[Mode] = if r2.is_some() { &[Mode::Mode1, Mode::Mode2, Mode::Mode3] } else { &[Mode::Mode1, Mode::Mode3] };
        let (x0, _) = solver::solve(&sys, 1, modes[0]).unwrap();
        for &m in modes {
            for w in [1, 3, 8] {
                let (x, _) = solver::solve(&sys, w, m).unwrap();
                prop_assert_eq!(solver::checksum(&x), solver::checksum(&x0));
            }
        }
        let reference = solver::dense_reference(&sys.a, &sys.rhs).unwrap();
        prop_assert!(solver::vector_relative_error(&x0, &reference) < 1e-10);
    }

    #[test]
    fn trace_matches_kernel_counts(n in 30usize..250, seed in 0u64..1000, (d0, r1, r2) in sides()) {
        let l = layout(n, seed);
        let s = structure(&l, r1, r2, d0);
        let (_, trace) = solver::solve(&system(&l, &s, d0, seed), 2, Mode::Mode1).unwrap();
        prop_assert_eq!(trace.total_flops(), trace.total_measured());
        prop_assert_eq!(trace.layers, s.layer_count());
        let phased: f64 = trace.phases().iter().flat_map(|p| p.units.iter()).sum();
        prop_assert!((phased - trace.total_flops() as f64).abs() <= 1e-9 * phased.max(1.0));
    }
}

#[test]
fn planner_orders_are_continuous_at_region_edges() {
    let q = |a, b| num_rational::Rational64::new(a, b);
    // s1 + 7 s2 = 3 with s1 - s2 < 1/3: mode 1 and mode 2 meet
    let (s1, s2) = (q(1, 4), q(11, 28));
    let [m1, m2, _] = planner::two_layer_orders(s1, s2);
    assert_eq!(m1.order, m2.order);
}
