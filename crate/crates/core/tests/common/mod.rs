#![allow(dead_code)]

use resamplex::choice::ChoiceSource;
use resamplex::{CalcTree, DistributionSpec, SamplePool};

pub fn law(points: &[(f64, f64)]) -> DistributionSpec {
    DistributionSpec::discrete(
        points.iter().map(|p| p.0).collect(),
        points.iter().map(|p| p.1).collect(),
    )
    .unwrap()
}

pub fn two_point(a: f64, b: f64, p: f64) -> DistributionSpec {
    law(&[(a, p), (b, 1.0 - p)])
}

pub fn pool(v: &[f64]) -> SamplePool {
    SamplePool::new(v.to_vec()).unwrap()
}

/// Every point of the product of the supports with its probability.
pub fn support_product(laws: &[DistributionSpec]) -> Vec<(Vec<f64>, f64)> {
    let mut out = vec![(Vec::new(), 1.0)];
    for l in laws {
        let s = l.finite_support().unwrap();
        out = out
            .into_iter()
            .flat_map(|(x, p)| {
                s.iter().map(move |&(v, q)| {
                    let mut y = x.clone();
                    y.push(v);
                    (y, p * q)
                })
            })
            .collect();
    }
    out
}

pub fn direct_theta(tree: &CalcTree, laws: &[DistributionSpec]) -> f64 {
    support_product(laws)
        .iter()
        .map(|(x, p)| p * tree.eval(x).unwrap())
        .sum()
}

pub fn direct_variance(tree: &CalcTree, laws: &[DistributionSpec]) -> f64 {
    let mu = direct_theta(tree, laws);
    support_product(laws)
        .iter()
        .map(|(x, p)| p * (tree.eval(x).unwrap() - mu).powi(2))
        .sum()
}

pub fn draw_pools(e: &mut impl ChoiceSource, laws: &[DistributionSpec], sizes: &[usize]) -> Vec<SamplePool> {
    laws.iter()
        .zip(sizes)
        .map(|(l, &n)| SamplePool::new((0..n).map(|_| e.draw(l)).collect()).unwrap())
        .collect()
}
