//! Point estimators of `θ = E φ(X_1, …, X_m)` from per-input samples.
//!
//! Each randomized estimator has a `*_with` form that takes any
//! [`ChoiceSource`]; the seeded public form wraps it with a [`SplitSource`].
//! The same `*_with` code is what the exact enumeration oracles replay.

use serde::Serialize;

use crate::choice::{ChoiceSource, SplitSource};
use crate::error::{Error, Result};
use crate::model::{apply_node, CalcTree, DistributionSpec, NodeKind, SamplePool};
use crate::stats::{CompensatedSum, RunningMoments};

pub const DEFAULT_PLUGIN_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Simple,
    Hierarchical,
    PlugIn,
    BlockPlugIn,
    BlockResampling,
    KnownSubfunction,
    SimulatedSubfunction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub value: f64,
    pub method: Method,
    /// Number of realizations averaged (`r`, or `n_k` at the root).
    pub replications: usize,
    /// Per-input pool sizes, or per-node sizes for hierarchical resampling.
    pub sizes: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Standard error of the mean over realizations, conditional on the pools.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
}

fn check_pools(pools: &[SamplePool], tree: &CalcTree) -> Result<()> {
    if pools.len() != tree.arity() {
        return Err(Error::ArityMismatch {
            expected: tree.arity(),
            got: pools.len(),
        });
    }
    Ok(())
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    Ok(())
}

/// Per-realization values `φ(X(l))`, `l = 1..r`: one uniform pick per pool,
/// independently across pools and realizations.
pub fn simple_realizations_with<S: ChoiceSource + ?Sized>(
    pools: &[SamplePool],
    tree: &CalcTree,
    r: usize,
    src: &mut S,
) -> Result<Vec<f64>> {
    check_pools(pools, tree)?;
    check_r(r)?;
    let mut x = vec![0.0; pools.len()];
    Ok((0..r)
        .map(|_| {
            for (xi, pool) in x.iter_mut().zip(pools) {
                *xi = pool.values()[src.uniform_index(pool.len())];
            }
            tree.eval_unchecked(&x)
        })
        .collect())
}

pub fn simple_estimate_with<S: ChoiceSource + ?Sized>(
    pools: &[SamplePool],
    tree: &CalcTree,
    r: usize,
    src: &mut S,
) -> Result<f64> {
    let vals = simple_realizations_with(pools, tree, r, src)?;
    Ok(vals.iter().sum::<f64>() / r as f64)
}

/// Simple resampling estimator `θ* = (1/r) Σ φ(X(l))`.
pub fn simple_estimate(
    pools: &[SamplePool],
    tree: &CalcTree,
    r: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let vals = simple_realizations_with(pools, tree, r, &mut SplitSource::new(seed))?;
    let mut m = RunningMoments::default();
    vals.iter().for_each(|&v| m.push(v));
    Ok(EstimateReport {
        value: vals.iter().sum::<f64>() / r as f64,
        method: Method::Simple,
        replications: r,
        sizes: pools.iter().map(SamplePool::len).collect(),
        seed: Some(seed),
        std_error: Some(m.std_error()),
        variance: None,
    })
}

/// Node samples built level by level; returns the root sample.
pub fn hierarchical_root_sample_with<S: ChoiceSource + ?Sized>(
    pools: &[SamplePool],
    tree: &CalcTree,
    src: &mut S,
) -> Result<Vec<f64>> {
    check_pools(pools, tree)?;
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(tree.len());
    let mut args = Vec::new();
    for node in tree.nodes() {
        let sample = match node.kind {
            NodeKind::Leaf { input } => pools[input].values().to_vec(),
            ref kind => (0..node.size)
                .map(|_| {
                    args.clear();
                    for &c in &node.children {
                        let child = &samples[c];
                        args.push(child[src.uniform_index(child.len())]);
                    }
                    apply_node(kind, &args)
                })
                .collect(),
        };
        samples.push(sample);
    }
    Ok(samples.pop().expect("non-empty tree"))
}

pub fn hierarchical_estimate_with<S: ChoiceSource + ?Sized>(
    pools: &[SamplePool],
    tree: &CalcTree,
    src: &mut S,
) -> Result<f64> {
    let root = hierarchical_root_sample_with(pools, tree, src)?;
    Ok(root.iter().sum::<f64>() / root.len() as f64)
}

/// Hierarchical resampling: every internal node `v` builds a sample of size
/// `n_v` from its children's samples; `θ*` is the mean of the root sample.
pub fn hierarchical_estimate(
    pools: &[SamplePool],
    tree: &CalcTree,
    seed: u64,
) -> Result<EstimateReport> {
    let root = hierarchical_root_sample_with(pools, tree, &mut SplitSource::new(seed))?;
    let mut m = RunningMoments::default();
    root.iter().for_each(|&v| m.push(v));
    let mut sizes = tree.sizes();
    for (i, pool) in pools.iter().enumerate() {
        sizes[tree.leaf_for_input(i)] = pool.len();
    }
    Ok(EstimateReport {
        value: root.iter().sum::<f64>() / root.len() as f64,
        method: Method::Hierarchical,
        replications: root.len(),
        sizes,
        seed: Some(seed),
        std_error: Some(m.std_error()),
        variance: None,
    })
}

/// Exact expectation of `φ` under the empirical laws: the average over all
/// `Π n_i` index combinations.
pub fn plugin_estimate(pools: &[SamplePool], tree: &CalcTree, cap: u64) -> Result<f64> {
    check_pools(pools, tree)?;
    let total = pools
        .iter()
        .try_fold(1u128, |acc, p| acc.checked_mul(p.len() as u128))
        .unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: "plug-in enumeration",
            count: total,
            cap: cap as u128,
            hint: "use simple_estimate for a resampling estimate",
        });
    }
    let mut idx = vec![0usize; pools.len()];
    let mut x: Vec<f64> = pools.iter().map(|p| p.values()[0]).collect();
    let mut sum = CompensatedSum::default();
    loop {
        sum.add(tree.eval_unchecked(&x));
        // odometer, last input fastest
        let mut i = pools.len();
        loop {
            if i == 0 {
                return Ok(sum.value() / total as f64);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < pools[i].len() {
                x[i] = pools[i].values()[idx[i]];
                break;
            }
            idx[i] = 0;
            x[i] = pools[i].values()[0];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockSource {
    Pool(SamplePool),
    Law(DistributionSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub source: BlockSource,
    /// Number of parallel subqueries `l_i` sharing the block's law.
    pub multiplicity: usize,
}

/// Blocks of parallel subqueries with a common law per block. The query time
/// is the minimum over blocks of the maximum within a block, so
/// `R(t) = P{time > t} = Π (1 - F_i(t)^{l_i})`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSystem {
    blocks: Vec<Block>,
}

impl BlockSystem {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("block system has no blocks".into()));
        }
        if let Some(i) = blocks.iter().position(|b| b.multiplicity == 0) {
            return Err(Error::InvalidParameter(format!(
                "block {} has multiplicity 0",
                i + 1
            )));
        }
        Ok(Self { blocks })
    }

    pub fn from_pools(pools: Vec<SamplePool>, multiplicities: &[usize]) -> Result<Self> {
        if pools.len() != multiplicities.len() {
            return Err(Error::ArityMismatch {
                expected: multiplicities.len(),
                got: pools.len(),
            });
        }
        Self::new(
            pools
                .into_iter()
                .zip(multiplicities)
                .map(|(p, &l)| Block {
                    source: BlockSource::Pool(p),
                    multiplicity: l,
                })
                .collect(),
        )
    }

    pub fn from_laws(laws: Vec<DistributionSpec>, multiplicities: &[usize]) -> Result<Self> {
        if laws.len() != multiplicities.len() {
            return Err(Error::ArityMismatch {
                expected: multiplicities.len(),
                got: laws.len(),
            });
        }
        Self::new(
            laws.into_iter()
                .zip(multiplicities)
                .map(|(d, &l)| Block {
                    source: BlockSource::Law(d),
                    multiplicity: l,
                })
                .collect(),
        )
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.multiplicity).collect()
    }

    /// `Π (1 - F_i(t)^{l_i})` using each block's law, or the empirical law of
    /// its pool.
    pub fn reliability(&self, t: f64) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let f = match &b.source {
                    BlockSource::Law(d) => d.cdf(t),
                    BlockSource::Pool(p) => p.empirical().cdf(t),
                };
                1.0 - f.powi(b.multiplicity as i32)
            })
            .product()
    }

    fn pools(&self) -> Result<Vec<&SamplePool>> {
        self.blocks
            .iter()
            .enumerate()
            .map(|(i, b)| match &b.source {
                BlockSource::Pool(p) => Ok(p),
                BlockSource::Law(_) => Err(Error::InvalidParameter(format!(
                    "block {} has a law, not an observed pool",
                    i + 1
                ))),
            })
            .collect()
    }
}

/// Plug-in estimator `R̂(t) = Π (1 - F̂_i(t)^{l_i})` from empirical laws.
pub fn plugin_block_reliability(system: &BlockSystem, t: f64) -> Result<f64> {
    system.pools()?;
    Ok(system.reliability(t))
}

pub fn resampling_block_reliability_with<S: ChoiceSource + ?Sized>(
    system: &BlockSystem,
    t: f64,
    r: usize,
    src: &mut S,
) -> Result<f64> {
    check_r(r)?;
    let pools = system.pools()?;
    for (i, (pool, block)) in pools.iter().zip(system.blocks()).enumerate() {
        if pool.len() < block.multiplicity {
            return Err(Error::PoolTooSmall {
                block: i + 1,
                size: pool.len(),
                needed: block.multiplicity,
            });
        }
    }
    let mut scratch: Vec<usize> = Vec::new();
    let mut hits = 0usize;
    for _ in 0..r {
        let alive = pools.iter().zip(system.blocks()).all(|(pool, block)| {
            // partial Fisher-Yates: l distinct elements without replacement
            scratch.clear();
            scratch.extend(0..pool.len());
            let mut any_exceeds = false;
            for k in 0..block.multiplicity {
                let j = k + src.uniform_index(pool.len() - k);
                scratch.swap(k, j);
                any_exceeds |= pool.values()[scratch[k]] > t;
            }
            any_exceeds
        });
        hits += alive as usize;
    }
    Ok(hits as f64 / r as f64)
}

/// Unbiased resampling estimator of `R(t)`: each realization draws `l_i`
/// distinct elements from block `i`'s pool; a block survives when at least
/// one of its draws exceeds `t`, and the realization is the product over
/// blocks.
pub fn resampling_block_reliability(
    system: &BlockSystem,
    t: f64,
    r: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let value = resampling_block_reliability_with(system, t, r, &mut SplitSource::new(seed))?;
    let pools = system.pools()?;
    Ok(EstimateReport {
        value,
        method: Method::BlockResampling,
        replications: r,
        sizes: pools.iter().map(|p| p.len()).collect(),
        seed: Some(seed),
        std_error: Some((value * (1.0 - value) / r as f64).sqrt()),
        variance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::{enumerate_paths, exact_mean_variance};
    use crate::model::{exact, to_f64};
    use num_rational::BigRational;
    use num_traits::Zero;

    fn pools(vals: &[&[f64]]) -> Vec<SamplePool> {
        vals.iter().map(|v| SamplePool::new(v.to_vec()).unwrap()).collect()
    }

    #[test]
    fn always_one_indicator() {
        let tree = CalcTree::parse("kofn[k=1,t=-inf](x1, x2)").unwrap();
        let p = pools(&[&[1.0, 2.0, 3.0], &[-4.0]]);
        assert_eq!(simple_estimate(&p, &tree, 17, 1).unwrap().value, 1.0);
    }

    #[test]
    fn singleton_pools_are_deterministic() {
        let tree = CalcTree::parse("max(x1, sum(x2, x3))").unwrap();
        let p = pools(&[&[4.0], &[1.0], &[2.5]]);
        for (r, seed) in [(1, 0), (9, 3), (50, 77)] {
            assert_eq!(simple_estimate(&p, &tree, r, seed).unwrap().value, 4.0);
        }
    }

    #[test]
    fn seeded_estimates_are_reproducible() {
        let tree = CalcTree::parse("max(x1, x2)").unwrap();
        let p = pools(&[&[1.0, 5.0, 2.0], &[3.0, 0.5]]);
        let a = simple_estimate(&p, &tree, 40, 9).unwrap();
        let b = simple_estimate(&p, &tree, 40, 9).unwrap();
        assert_eq!(a, b);
        let h = CalcTree::parse("max@7(x1, x2)").unwrap();
        assert_eq!(
            hierarchical_estimate(&p, &h, 4).unwrap(),
            hierarchical_estimate(&p, &h, 4).unwrap()
        );
    }

    #[test]
    fn arity_and_r_errors() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let p = pools(&[&[1.0]]);
        assert!(matches!(
            simple_estimate(&p, &tree, 3, 0),
            Err(Error::ArityMismatch { .. })
        ));
        let p2 = pools(&[&[1.0], &[2.0]]);
        assert!(simple_estimate(&p2, &tree, 0, 0).is_err());
    }

    #[test]
    fn chain_with_single_slot_returns_a_pool_element() {
        let tree = CalcTree::parse("sum@1(x1)").unwrap();
        let p = pools(&[&[3.0, 8.0, 11.0]]);
        for seed in 0..20 {
            let v = hierarchical_estimate(&p, &tree, seed).unwrap().value;
            assert!([3.0, 8.0, 11.0].contains(&v));
        }
    }

    /// Exact distribution of an estimator's output given fixed pools.
    fn output_law(f: impl FnMut(&mut crate::choice::Enumerator) -> f64) -> Vec<(f64, f64)> {
        let mut law: Vec<(BigRational, BigRational)> = Vec::new();
        enumerate_paths(1_000_000, f, |p, v| {
            let v = exact(v);
            match law.iter_mut().find(|(x, _)| *x == v) {
                Some(e) => e.1 += p,
                None => law.push((v, p.clone())),
            }
        })
        .unwrap();
        law.sort();
        law.iter().map(|(v, p)| (to_f64(v), to_f64(p))).collect()
    }

    #[test]
    fn single_node_hierarchy_matches_simple_in_distribution() {
        let p = pools(&[&[0.0, 2.0], &[1.0, 4.0]]);
        for (op, r) in [("max", 3), ("sum", 2), ("min", 3)] {
            let flat = CalcTree::parse(&format!("{op}(x1, x2)")).unwrap();
            let hier = CalcTree::parse(&format!("{op}@{r}(x1, x2)")).unwrap();
            let a = output_law(|e| simple_estimate_with(&p, &flat, r, e).unwrap());
            let b = output_law(|e| hierarchical_estimate_with(&p, &hier, e).unwrap());
            assert_eq!(a, b, "{op}");
        }
    }

    #[test]
    fn exhaustive_simple_resampling_equals_plugin() {
        let p = pools(&[&[1.0, 3.0], &[2.0, 4.0]]);
        for op in ["sum", "max"] {
            let tree = CalcTree::parse(&format!("{op}(x1, x2)")).unwrap();
            let (mean, _) =
                exact_mean_variance(1000, |e| simple_estimate_with(&p, &tree, 1, e).unwrap())
                    .unwrap();
            assert_eq!(to_f64(&mean), plugin_estimate(&p, &tree, 100).unwrap());
        }
    }

    #[test]
    fn plugin_examples() {
        let p = pools(&[&[1.0, 3.0], &[2.0, 4.0]]);
        let sum = CalcTree::parse("sum(x1, x2)").unwrap();
        let max = CalcTree::parse("max(x1, x2)").unwrap();
        assert_eq!(plugin_estimate(&p, &sum, 100).unwrap(), 5.0);
        assert_eq!(plugin_estimate(&p, &max, 100).unwrap(), 3.25);
        let k = CalcTree::parse("kofn[k=2,t=2.5](x1, x2, x3)").unwrap();
        let p3 = pools(&[&[1.0], &[2.0], &[3.0]]);
        assert_eq!(plugin_estimate(&p3, &k, 100).unwrap(), 0.0);
        assert!(matches!(
            plugin_estimate(&p, &sum, 3),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn plugin_block_examples() {
        let one = |x: f64| BlockSystem::from_pools(pools(&[&[x]]), &[2]).unwrap();
        assert_eq!(plugin_block_reliability(&one(3.0), 1.0).unwrap(), 1.0);
        assert_eq!(plugin_block_reliability(&one(0.5), 1.0).unwrap(), 0.0);
        assert_eq!(plugin_block_reliability(&one(1.0), 1.0).unwrap(), 0.0);
        let two = BlockSystem::from_pools(pools(&[&[1.0, 3.0], &[2.0, 4.0]]), &[1, 1]).unwrap();
        assert_eq!(plugin_block_reliability(&two, 2.0).unwrap(), 0.25);
    }

    #[test]
    fn block_resampling_examples() {
        let single = BlockSystem::from_pools(pools(&[&[0.0, 2.0, 5.0, 0.5]]), &[1]).unwrap();
        // with l = 1 each realization is the survival indicator of one drawn element
        let v = resampling_block_reliability(&single, 1.0, 400, 3).unwrap().value;
        assert!((v - 0.5).abs() < 0.1);

        let pair = BlockSystem::from_pools(pools(&[&[0.0, 2.0]]), &[2]).unwrap();
        let law = output_law(|e| resampling_block_reliability_with(&pair, 1.0, 5, e).unwrap());
        assert_eq!(law, vec![(1.0, 1.0)]);

        let small = BlockSystem::from_pools(pools(&[&[0.0]]), &[2]).unwrap();
        assert!(matches!(
            resampling_block_reliability(&small, 1.0, 1, 0),
            Err(Error::PoolTooSmall { .. })
        ));
    }

    #[test]
    fn block_resampling_is_unbiased_for_two_point_law() {
        let law = DistributionSpec::two_point(0.0, 2.0).unwrap();
        let (mean, _) = exact_mean_variance(100_000, |e| {
            let p = vec![SamplePool::new(vec![e.draw(&law), e.draw(&law)]).unwrap()];
            let sys = BlockSystem::from_pools(p, &[2]).unwrap();
            resampling_block_reliability_with(&sys, 1.0, 2, e).unwrap()
        })
        .unwrap();
        assert_eq!(to_f64(&mean), 0.75);
        assert!(!mean.is_zero());
    }
}
