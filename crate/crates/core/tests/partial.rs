mod common;

use proptest::prelude::*;

use resamplex::choice::exact_mean_variance;
use resamplex::model::to_f64;
use resamplex::partial::{
    conditional_expectation, estimate_known_subfunction, estimate_simulated_subfunction,
    known_subfunction_realizations_with, simulated_subfunction_realizations_with, PartialModel,
};
use resamplex::{DistributionSpec, SamplePool};

use common::{direct_theta, draw_pools, law, pool, two_point};

const T: f64 = 1.0;

fn x_laws() -> [DistributionSpec; 3] {
    [two_point(0.5, 2.0, 0.4), two_point(0.0, 3.0, 0.25), two_point(0.2, 0.9, 0.5)]
}

fn z_laws() -> [DistributionSpec; 3] {
    [
        two_point(0.0, 1.5, 0.5),
        two_point(0.5, 4.0, 0.2),
        law(&[(0.0, 0.3), (0.4, 0.3), (2.0, 0.4)]),
    ]
}

fn model_from(pools: Vec<SamplePool>, t: f64) -> PartialModel {
    let [a, b, c]: [SamplePool; 3] = pools.try_into().unwrap();
    PartialModel::hier_query([a, b, c], z_laws(), t).unwrap()
}

fn truth() -> f64 {
    let [x1, x3, x5] = x_laws();
    let [z2, z4, z6] = z_laws();
    let model = model_from(vec![pool(&[0.0]), pool(&[0.0]), pool(&[0.0])], T);
    direct_theta(model.tree(), &[x1, z2, x3, z4, x5, z6])
}

#[test]
fn both_situations_are_unbiased_and_ordered_by_conditioning() {
    let theta = truth();
    for sizes in [[1, 1, 1], [2, 1, 1], [1, 2, 1]] {
        for r in 1..=2 {
            let (known_mean, known_var) = exact_mean_variance(10_000_000, |e| {
                let model = model_from(draw_pools(e, &x_laws(), &sizes), T);
                let v = known_subfunction_realizations_with(&model, r, e).unwrap();
                v.iter().sum::<f64>() / r as f64
            })
            .unwrap();
            let (sim_mean, sim_var) = exact_mean_variance(10_000_000, |e| {
                let model = model_from(draw_pools(e, &x_laws(), &sizes), T);
                let v = simulated_subfunction_realizations_with(&model, r, 1, e).unwrap();
                v.iter().sum::<f64>() / r as f64
            })
            .unwrap();
            assert!((to_f64(&known_mean) - theta).abs() < 1e-12, "{sizes:?} r={r}");
            assert!((to_f64(&sim_mean) - theta).abs() < 1e-12, "{sizes:?} r={r}");
            assert!(known_var <= sim_var, "{sizes:?} r={r}");
        }
    }
}

#[test]
fn wider_replicates_sit_between_the_two_situations() {
    let sizes = [1, 1, 1];
    let var_at = |n: usize| {
        exact_mean_variance(10_000_000, |e| {
            let model = model_from(draw_pools(e, &x_laws(), &sizes), T);
            simulated_subfunction_realizations_with(&model, 1, n, e).unwrap()[0]
        })
        .unwrap()
        .1
    };
    let (_, known) = exact_mean_variance(10_000_000, |e| {
        let model = model_from(draw_pools(e, &x_laws(), &sizes), T);
        known_subfunction_realizations_with(&model, 1, e).unwrap()[0]
    })
    .unwrap();
    let (v1, v2) = (var_at(1), var_at(2));
    assert!(known <= v2 && v2 <= v1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conditional_expectation_is_a_probability_falling_in_t(
        x in prop::collection::vec(0.0f64..4.0, 3),
        rates in prop::collection::vec(0.1f64..3.0, 3),
    ) {
        let laws: Vec<_> = rates.iter().map(|&r| DistributionSpec::exponential(r).unwrap()).collect();
        let mut prev = 1.0;
        for step in 0..40 {
            let t = step as f64 * 0.1;
            let pools = [pool(&[x[0]]), pool(&[x[1]]), pool(&[x[2]])];
            let model = PartialModel::hier_query(pools, [laws[0].clone(), laws[1].clone(), laws[2].clone()], t).unwrap();
            let p = conditional_expectation(&model, &x).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p <= prev + 1e-15);
            prev = p;
        }
    }
}

#[test]
fn seeded_situations_agree_on_exponential_laws() {
    let mut rng = resamplex::choice::stream(11, resamplex::choice::DATA_STREAM);
    let x: Vec<_> = [0.1, 0.2, 0.4]
        .iter()
        .map(|&rate| resamplex::model::draw_sample(&DistributionSpec::exponential(rate).unwrap(), 30, &mut rng).unwrap())
        .collect();
    let z = [0.7, 0.8, 0.5].map(|rate| DistributionSpec::exponential(rate).unwrap());
    let [a, b, c]: [SamplePool; 3] = x.try_into().unwrap();
    let model = PartialModel::hier_query([a, b, c], z, 0.8).unwrap();
    let known = estimate_known_subfunction(&model, 40_000, 5).unwrap();
    let sim = estimate_simulated_subfunction(&model, 40_000, 2, 6).unwrap();
    let se = (known.std_error.unwrap().powi(2) + sim.std_error.unwrap().powi(2)).sqrt();
    assert!((known.value - sim.value).abs() < 4.0 * se, "{} vs {} ± {se}", known.value, sim.value);
    assert!(known.std_error.unwrap() < sim.std_error.unwrap());
}
