use polarize::model::{MipInstance, WeightMatrix};
use polarize::solver::{brute_force_oracle, dual_bound, solve_bnb, SolveOptions, Status};
use proptest::prelude::*;

mod common;
use common::enumerate;

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, u32, u32)> {
    (1u32..=3, 1usize..=8, 2usize..=9, any::<bool>()).prop_flat_map(|(n, ng, nl, binary)| {
        let nl = nl.max(n as usize);
        let cap = if binary { 1 } else { n };
        (prop::collection::vec(prop::collection::vec(-1.0..1.0f64, ng), nl), Just(cap), Just(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bnb_matches_enumeration((w, cap, n) in instance()) {
        let inst = MipInstance::from_matrix(WeightMatrix::from_rows(&w).unwrap(), vec![cap; w.len()], n).unwrap();
        let expect = enumerate(&w, cap, n);
        let r = solve_bnb(&inst, &SolveOptions::default()).unwrap();
        prop_assert!((r.value - expect).abs() <= 1e-9);
        prop_assert_eq!(r.status, Status::Optimal);
        prop_assert!((brute_force_oracle(&inst).unwrap().value - expect).abs() <= 1e-12);
        // weak duality for the returned certificate
        prop_assert!(r.dual_bound >= expect - 1e-9);
        prop_assert!((dual_bound(&inst, &r.dual_lambda).unwrap() - r.dual_bound).abs() < 1e-12);
    }

    #[test]
    fn any_simplex_point_bounds_the_optimum((w, cap, n) in instance(), raw in prop::collection::vec(0.0..1.0f64, 8)) {
        let inst = MipInstance::from_matrix(WeightMatrix::from_rows(&w).unwrap(), vec![cap; w.len()], n).unwrap();
        let m = w[0].len();
        let total: f64 = raw[..m].iter().sum::<f64>() + 1e-9;
        let lambda: Vec<f64> = raw[..m].iter().map(|v| (v + 1e-9 / m as f64) / total).collect();
        let bound = dual_bound(&inst, &lambda).unwrap();
        prop_assert!(bound >= enumerate(&w, cap, n) - 1e-9);
    }

    #[test]
    fn scaling_weights_scales_the_optimum((w, cap, n) in instance(), k in 0.1..10.0f64) {
        let scaled: Vec<Vec<f64>> = w.iter().map(|r| r.iter().map(|x| k * x).collect()).collect();
        let a = MipInstance::from_matrix(WeightMatrix::from_rows(&w).unwrap(), vec![cap; w.len()], n).unwrap();
        let b = MipInstance::from_matrix(WeightMatrix::from_rows(&scaled).unwrap(), vec![cap; w.len()], n).unwrap();
        let va = solve_bnb(&a, &SolveOptions::default()).unwrap().value;
        let vb = solve_bnb(&b, &SolveOptions::default()).unwrap().value;
        prop_assert!((k * va - vb).abs() <= 1e-8 * k.max(1.0));
    }
}

#[test]
fn larger_instances_agree_with_the_oracle() {
    // near the enumeration limit: 40 candidates, N = 4 binary (91 390 subsets)
    let w: Vec<Vec<f64>> = (0..40)
        .map(|c| (0..12).map(|p| (((c * 7 + p * 13) % 17) as f64 / 17.0) - 0.3).collect())
        .collect();
    let inst = MipInstance::from_matrix(WeightMatrix::from_rows(&w).unwrap(), vec![1; 40], 4).unwrap();
    let exact = brute_force_oracle(&inst).unwrap().value;
    let r = solve_bnb(&inst, &SolveOptions::default()).unwrap();
    assert!((r.value - exact).abs() <= 1e-9);
}

#[test]
fn gap_limit_stops_early_with_a_valid_gap() {
    let w: Vec<Vec<f64>> = (0..60)
        .map(|c| (0..20).map(|p| ((c * 31 + p * 11) % 23) as f64 / 23.0).collect())
        .collect();
    let inst = MipInstance::from_matrix(WeightMatrix::from_rows(&w).unwrap(), vec![1; 60], 3).unwrap();
    let exact = brute_force_oracle(&inst).unwrap().value;
    let opts = SolveOptions {
        gap_limit: Some(10.0),
        ..SolveOptions::default()
    };
    let r = solve_bnb(&inst, &opts).unwrap();
    assert!(r.value <= exact + 1e-12);
    assert!(r.value + r.gap >= exact - 1e-9);
}
