mod common;

use num_rational::BigRational;
use proptest::prelude::*;

use resamplex::model::to_f64;
use resamplex::variance::{
    brute_force_variance_oracle, conditional_mixed_moment, hierarchical_variance, hierarchical_variance_exact,
    resampling_variance, resampling_variance_exact, single_sample_variance, ExactMoments, MomentMode,
    OmegaPair, Scheme, VarianceMethod, VarianceOptions,
};
use resamplex::CalcTree;

use common::{direct_theta, direct_variance, law, two_point};

const CAP: u64 = 10_000_000;

fn small_law() -> impl Strategy<Value = resamplex::DistributionSpec> {
    (-4i32..4, 1i32..6, 1u32..4).prop_map(|(a, gap, k)| two_point(a as f64, (a + gap) as f64, k as f64 / 4.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixed_moment_endpoints(
        laws in prop::collection::vec(small_law(), 3),
        op in prop::sample::select(vec!["sum", "max", "min"]),
    ) {
        let tree = CalcTree::parse(&format!("{op}(x1, x2, x3)")).unwrap();
        let mode = MomentMode::Exact { cap: CAP };
        let none = conditional_mixed_moment(&tree, &laws, OmegaPair::empty(), mode).unwrap();
        let full = conditional_mixed_moment(&tree, &laws, OmegaPair::full(3), mode).unwrap();
        let moments = ExactMoments::compute(&tree, &laws, CAP).unwrap();
        prop_assert_eq!(none.exact.unwrap(), &moments.mu * &moments.mu);
        prop_assert_eq!(full.exact.unwrap(), moments.mu2.clone());
        let mu = direct_theta(&tree, &laws);
        prop_assert!((to_f64(&moments.mu) - mu).abs() < 1e-12);
    }

    #[test]
    fn variance_is_non_increasing_in_r(
        laws in prop::collection::vec(small_law(), 2),
        sizes in prop::collection::vec(1usize..6, 2),
        op in prop::sample::select(vec!["sum", "max", "min"]),
    ) {
        let tree = CalcTree::parse(&format!("{op}(x1, x2)")).unwrap();
        let moments = ExactMoments::compute(&tree, &laws, CAP).unwrap();
        let mut prev: Option<BigRational> = None;
        for r in 1..30 {
            let d = moments.variance(&sizes, r);
            if let Some(p) = &prev {
                prop_assert!(d <= *p);
            }
            prev = Some(d);
        }
        prop_assert!(prev.unwrap() >= moments.variance_limit(&sizes));
    }

    #[test]
    fn single_sample_variance_dominates_classical(sigma2 in 0.1f64..1e3, n in 1usize..50, r in 1usize..500) {
        let v = single_sample_variance(sigma2, n, r);
        prop_assert!((v.classical - sigma2 / n as f64).abs() < 1e-9 * sigma2);
        if n == 1 {
            prop_assert!((v.resampling - v.classical).abs() < 1e-9 * sigma2);
        } else {
            prop_assert!(v.resampling > v.classical);
        }
    }
}

#[test]
fn first_table_ratio_pattern() {
    // at r = 50 the resampling variance exceeds the classical one by 10-30% for n in 5..=15
    for n in [5, 8, 10, 13, 15] {
        let v = single_sample_variance(781.25, n, 50);
        let excess = v.resampling / v.classical - 1.0;
        assert!((0.07..0.3).contains(&excess), "n = {n}: {excess}");
    }
}

#[test]
fn single_input_engine_matches_closed_form() {
    let l = law(&[(0.0, 0.25), (2.0, 0.5), (5.0, 0.25)]);
    let sigma2 = direct_variance(&CalcTree::parse("x1").unwrap(), std::slice::from_ref(&l));
    let tree = CalcTree::parse("x1").unwrap();
    for n in 1..6 {
        for r in [1, 2, 7, 50] {
            let d = to_f64(&resampling_variance_exact(&tree, std::slice::from_ref(&l), &[n], r, CAP).unwrap());
            let want = single_sample_variance(sigma2, n, r).resampling;
            assert!((d - want).abs() < 1e-12, "n={n} r={r}: {d} vs {want}");
        }
    }
}

#[test]
fn hierarchical_engine_matches_oracle() {
    let laws = [
        two_point(0.0, 1.0, 0.5),
        two_point(-1.0, 2.0, 0.25),
        law(&[(0.5, 0.5), (1.5, 0.25), (3.0, 0.25)]),
    ];
    for text in [
        "sum@2(x1@2, x2@1)",
        "max@3(x1@1, x2@2)",
        "min@2(sum@2(x1@2, x2@1), x3@1)",
        "kofn[k=2,t=0.75]@2(x1@1, x2@2, x3@1)",
        "max@2(min@1(x1@2, x2@2), x3@1)",
    ] {
        let tree = CalcTree::parse(text).unwrap();
        let laws = &laws[..tree.arity()];
        let engine = hierarchical_variance_exact(&tree, laws, CAP).unwrap();
        let oracle = brute_force_variance_oracle(&tree, laws, &[], Scheme::Hierarchical, 100_000_000).unwrap();
        assert!((to_f64(&engine) - to_f64(&oracle)).abs() < 1e-10, "{text}");
    }
}

#[test]
fn inserting_a_wide_sum_node_keeps_linear_variance() {
    let laws = [two_point(0.0, 1.0, 0.5), two_point(0.0, 3.0, 0.25), two_point(-2.0, 2.0, 0.5)];
    let flat = CalcTree::parse("sum@6(x1@3, x2@4, x3@2)").unwrap();
    let nested = CalcTree::parse("sum@6(sum@100000(x1@3, x2@4), x3@2)").unwrap();
    let a = to_f64(&hierarchical_variance_exact(&flat, &laws, CAP).unwrap());
    let b = to_f64(&hierarchical_variance_exact(&nested, &laws, CAP).unwrap());
    assert!((a - b).abs() / a < 0.01, "{a} vs {b}");
}

#[test]
fn monte_carlo_fallback_agrees_with_exact() {
    let laws = [two_point(0.0, 1.0, 0.5), law(&[(0.0, 0.5), (2.0, 0.25), (3.0, 0.25)])];
    let tree = CalcTree::parse("max(x1, x2)").unwrap();
    let sizes = [3, 2];
    let r = 4;
    let exact_d = to_f64(&resampling_variance_exact(&tree, &laws, &sizes, r, CAP).unwrap());
    let opts = VarianceOptions {
        cap: 1,
        mc_replications: 400_000,
        seed: Some(17),
    };
    let mc = resampling_variance(&tree, &laws, &sizes, r, &opts).unwrap();
    assert_eq!(mc.method, VarianceMethod::MonteCarlo);
    assert!((mc.variance - exact_d).abs() < 4.0 * mc.std_error, "{} ± {} vs {exact_d}", mc.variance, mc.std_error);

    let no_seed = VarianceOptions { seed: None, ..opts };
    assert!(resampling_variance(&tree, &laws, &sizes, r, &no_seed).is_err());

    let htree = CalcTree::parse("max@3(x1@3, x2@2)").unwrap();
    let hexact = to_f64(&hierarchical_variance_exact(&htree, &laws, CAP).unwrap());
    let hmc = hierarchical_variance(&htree, &laws, &opts).unwrap();
    assert!((hmc.variance - hexact).abs() < 4.0 * hmc.std_error, "{} ± {} vs {hexact}", hmc.variance, hmc.std_error);
}

#[test]
fn quadrature_for_one_continuous_input() {
    let tree = CalcTree::parse("x1").unwrap();
    let laws = [resamplex::DistributionSpec::exponential(0.5).unwrap()];
    let rep = resampling_variance(&tree, &laws, &[4], 10, &VarianceOptions::default()).unwrap();
    assert_eq!(rep.method, VarianceMethod::Quadrature);
    // σ² = 4
    let want = single_sample_variance(4.0, 4, 10).resampling;
    assert!((rep.variance - want).abs() < 1e-6, "{} vs {want}", rep.variance);
}

#[test]
fn omega_probability_is_exact() {
    let sizes = [2, 3, 5];
    let w = OmegaPair::from_indices(&[0, 2]);
    let p = resamplex::variance::omega_probability(w, &sizes);
    // (1/2)(2/3)(1/5)
    assert_eq!(p, BigRational::new(1.into(), 15.into()));
}
