//! Variance of resampling estimators.
//!
//! For simple resampling with `r` realizations,
//! `D θ* = (μ₂ + (r − 1) μ₁₁) / r − μ²`, where `μ₁₁ = Σ_ω P{ω} μ₁₁(ω)` runs
//! over the subsets ω of inputs whose picks coincide between two
//! realizations. Moments are unconditional: they average over the sampling
//! of the pools as well as over the resampling.
//!
//! For hierarchical resampling the same assembly is applied at the root with
//! `r = n_k`, after propagating the joint law of two distinct slots of every
//! node's sample up the tree.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::choice::{exact_mean_variance, stream, ChoiceSource, RngSource, MC_STREAM_BASE};
use crate::error::{Error, Result};
use crate::estimator::{hierarchical_estimate_with, simple_estimate_with};
use crate::model::{apply_node, exact, to_f64, CalcTree, DistributionSpec, NodeKind, SamplePool};
use crate::stats::{variance_with_error, RunningMoments};

type Q = BigRational;

pub const DEFAULT_EXACT_CAP: u64 = 10_000_000;
pub const DEFAULT_ORACLE_CAP: u64 = 100_000_000;

/// Subset of input indices, as a bitmask over 0-based inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct OmegaPair(pub u64);

impl OmegaPair {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn full(m: usize) -> Self {
        Self(if m == 64 { u64::MAX } else { (1u64 << m) - 1 })
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        Self(indices.iter().fold(0, |acc, &i| acc | (1 << i)))
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    /// All `2^m` subsets of `{0..m}`.
    pub fn all(m: usize) -> impl Iterator<Item = OmegaPair> {
        assert!(m < 64, "too many inputs for subset enumeration");
        (0..1u64 << m).map(OmegaPair)
    }
}

/// `P{ω} = Π_{i∈ω} 1/n_i · Π_{i∉ω} (1 − 1/n_i)`.
pub fn omega_probability(omega: OmegaPair, sizes: &[usize]) -> Q {
    sizes.iter().enumerate().fold(Q::one(), |acc, (i, &n)| {
        let inv = Q::new(1.into(), (n as i64).into());
        if omega.contains(i) {
            acc * inv
        } else {
            acc * (Q::one() - inv)
        }
    })
}

fn check_laws(tree: &CalcTree, laws: &[DistributionSpec]) -> Result<()> {
    if laws.len() != tree.arity() {
        return Err(Error::ArityMismatch {
            expected: tree.arity(),
            got: laws.len(),
        });
    }
    Ok(())
}

fn check_sizes(tree: &CalcTree, sizes: &[usize]) -> Result<()> {
    if sizes.len() != tree.arity() {
        return Err(Error::ArityMismatch {
            expected: tree.arity(),
            got: sizes.len(),
        });
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("sample sizes must be >= 1".into()));
    }
    Ok(())
}

fn exact_supports(laws: &[DistributionSpec]) -> Result<Vec<Vec<(Q, Q)>>> {
    laws.iter()
        .map(|l| {
            l.exact_support().ok_or_else(|| {
                Error::Unsupported(format!(
                    "exact mode needs finite-support laws with finite atoms, got {:?}",
                    l.kind()
                ))
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    Exact { cap: u64 },
    MonteCarlo { replications: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    /// Zero in exact mode.
    pub std_error: f64,
    #[serde(skip)]
    pub exact: Option<Q>,
}

/// `E[φ(X) φ(X′)]` where `X′` repeats `X` on the inputs in ω and uses
/// independent copies elsewhere.
pub fn conditional_mixed_moment(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    omega: OmegaPair,
    mode: MomentMode,
) -> Result<MomentEstimate> {
    check_laws(tree, laws)?;
    match mode {
        MomentMode::Exact { cap } => {
            let supports = exact_supports(laws)?;
            let q = exact_mixed_moment(tree, &supports, omega, cap)?;
            Ok(MomentEstimate {
                value: to_f64(&q),
                std_error: 0.0,
                exact: Some(q),
            })
        }
        MomentMode::MonteCarlo { replications, seed } => {
            let mut rng = RngSource(stream(seed, MC_STREAM_BASE));
            let m = tree.arity();
            let mut x = vec![0.0; m];
            let mut y = vec![0.0; m];
            let mut acc = RunningMoments::default();
            for _ in 0..replications {
                for i in 0..m {
                    x[i] = rng.draw(&laws[i]);
                    y[i] = if omega.contains(i) { x[i] } else { rng.draw(&laws[i]) };
                }
                acc.push(tree.eval_unchecked(&x) * tree.eval_unchecked(&y));
            }
            Ok(MomentEstimate {
                value: acc.mean(),
                std_error: acc.std_error(),
                exact: None,
            })
        }
    }
}

fn exact_mixed_moment(
    tree: &CalcTree,
    supports: &[Vec<(Q, Q)>],
    omega: OmegaPair,
    cap: u64,
) -> Result<Q> {
    let m = supports.len();
    // digits: one per shared input, two per unshared input
    let mut radix = Vec::new();
    let mut owner = Vec::new();
    for (i, s) in supports.iter().enumerate() {
        radix.push(s.len());
        owner.push((i, 0u8));
        if !omega.contains(i) {
            radix.push(s.len());
            owner.push((i, 1u8));
        }
    }
    let total = radix
        .iter()
        .try_fold(1u128, |acc, &r| acc.checked_mul(r as u128))
        .unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: "mixed-moment support enumeration",
            count: total,
            cap: cap as u128,
            hint: "use the Monte Carlo moment mode",
        });
    }
    let mut digits = vec![0usize; radix.len()];
    let mut x = vec![Q::zero(); m];
    let mut y = vec![Q::zero(); m];
    let mut acc = Q::zero();
    loop {
        let mut w = Q::one();
        for (d, &(i, copy)) in owner.iter().enumerate() {
            let (v, p) = &supports[i][digits[d]];
            w *= p;
            if copy == 0 {
                x[i] = v.clone();
                if omega.contains(i) {
                    y[i] = v.clone();
                }
            } else {
                y[i] = v.clone();
            }
        }
        acc += w * tree.eval_unchecked(&x) * tree.eval_unchecked(&y);
        if !odometer(&mut digits, &radix) {
            return Ok(acc);
        }
    }
}

fn odometer(digits: &mut [usize], radix: &[usize]) -> bool {
    for d in (0..digits.len()).rev() {
        digits[d] += 1;
        if digits[d] < radix[d] {
            return true;
        }
        digits[d] = 0;
    }
    false
}

/// Exact `μ`, `μ₂` and `μ₁₁(ω)` for every ω.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactMoments {
    pub mu: Q,
    pub mu2: Q,
    /// Indexed by the ω bitmask.
    pub mu11_by_omega: Vec<Q>,
}

impl ExactMoments {
    pub fn compute(tree: &CalcTree, laws: &[DistributionSpec], cap: u64) -> Result<Self> {
        check_laws(tree, laws)?;
        let supports = exact_supports(laws)?;
        let m = tree.arity();
        let mu11_by_omega = OmegaPair::all(m)
            .map(|w| exact_mixed_moment(tree, &supports, w, cap))
            .collect::<Result<Vec<_>>>()?;
        // μ from a single copy
        let mut mu = Q::zero();
        let radix: Vec<usize> = supports.iter().map(Vec::len).collect();
        let mut digits = vec![0usize; m];
        let mut x = vec![Q::zero(); m];
        loop {
            let mut w = Q::one();
            for i in 0..m {
                let (v, p) = &supports[i][digits[i]];
                w *= p;
                x[i] = v.clone();
            }
            mu += w * tree.eval_unchecked(&x);
            if !odometer(&mut digits, &radix) {
                break;
            }
        }
        let mu2 = mu11_by_omega[OmegaPair::full(m).0 as usize].clone();
        Ok(Self {
            mu,
            mu2,
            mu11_by_omega,
        })
    }

    pub fn mu11(&self, sizes: &[usize]) -> Q {
        self.mu11_by_omega
            .iter()
            .enumerate()
            .map(|(w, q)| omega_probability(OmegaPair(w as u64), sizes) * q)
            .fold(Q::zero(), |a, b| a + b)
    }

    /// `(μ₂ + (r − 1) μ₁₁) / r − μ²`.
    pub fn variance(&self, sizes: &[usize], r: usize) -> Q {
        let r = Q::from_integer((r as i64).into());
        (&self.mu2 + (&r - Q::one()) * self.mu11(sizes)) / r - &self.mu * &self.mu
    }

    /// Limit `r → ∞`: `μ₁₁ − μ²`.
    pub fn variance_limit(&self, sizes: &[usize]) -> Q {
        self.mu11(sizes) - &self.mu * &self.mu
    }
}

/// Summary of the moments behind a variance figure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentSet {
    pub mu: f64,
    pub mu2: f64,
    pub mu11: f64,
    /// `μ₁₁(ω)` indexed by ω bitmask; empty when not computed per subset.
    pub mu11_by_omega: Vec<f64>,
    pub input_means: Vec<f64>,
    pub input_variances: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceReport {
    pub variance: f64,
    pub std_error: f64,
    pub method: VarianceMethod,
    pub moments: MomentSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceOptions {
    pub cap: u64,
    pub mc_replications: u64,
    /// Required whenever the Monte Carlo fallback is used.
    pub seed: Option<u64>,
}

impl Default for VarianceOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_EXACT_CAP,
            mc_replications: 200_000,
            seed: None,
        }
    }
}

impl VarianceOptions {
    fn mc_seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            Error::InvalidParameter("the Monte Carlo fallback needs an explicit seed".into())
        })
    }
}

fn input_moments(laws: &[DistributionSpec]) -> (Vec<f64>, Vec<f64>) {
    (
        laws.iter().map(DistributionSpec::mean).collect(),
        laws.iter().map(DistributionSpec::variance).collect(),
    )
}

/// Exact variance of the simple resampling estimator on finite-support laws.
pub fn resampling_variance_exact(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    sizes: &[usize],
    r: usize,
    cap: u64,
) -> Result<Q> {
    check_sizes(tree, sizes)?;
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    Ok(ExactMoments::compute(tree, laws, cap)?.variance(sizes, r))
}

/// Variance of simple resampling. Exact for finite-support laws; for a single
/// continuous input the moments come from numerical integration; otherwise
/// seeded Monte Carlo with a batch-means standard error.
pub fn resampling_variance(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    sizes: &[usize],
    r: usize,
    opts: &VarianceOptions,
) -> Result<VarianceReport> {
    check_laws(tree, laws)?;
    check_sizes(tree, sizes)?;
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    let (input_means, input_variances) = input_moments(laws);
    let finite = laws.iter().all(|l| l.exact_support().is_some());
    let exact = if finite {
        match ExactMoments::compute(tree, laws, opts.cap) {
            Ok(em) => Some(em),
            Err(Error::CapExceeded { .. }) if opts.seed.is_some() => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if let Some(em) = exact {
        let mu11 = em.mu11(sizes);
        return Ok(VarianceReport {
            variance: to_f64(&em.variance(sizes, r)),
            std_error: 0.0,
            method: VarianceMethod::Exact,
            moments: MomentSet {
                mu: to_f64(&em.mu),
                mu2: to_f64(&em.mu2),
                mu11: to_f64(&mu11),
                mu11_by_omega: em.mu11_by_omega.iter().map(to_f64).collect(),
                input_means,
                input_variances,
            },
        });
    }
    if tree.arity() == 1 {
        let law = &laws[0];
        let (mu, e1) = integrate(|u| tree.eval_unchecked(&[law.quantile(u)]));
        let (mu2, e2) = integrate(|u| tree.eval_unchecked(&[law.quantile(u)]).powi(2));
        let n = sizes[0] as f64;
        let mu11 = mu2 / n + (1.0 - 1.0 / n) * mu * mu;
        let rf = r as f64;
        return Ok(VarianceReport {
            variance: (mu2 + (rf - 1.0) * mu11) / rf - mu * mu,
            std_error: e2 + 2.0 * mu.abs() * e1,
            method: VarianceMethod::Quadrature,
            moments: MomentSet {
                mu,
                mu2,
                mu11,
                mu11_by_omega: vec![mu * mu, mu2],
                input_means,
                input_variances,
            },
        });
    }
    monte_carlo_resampling_variance(tree, laws, sizes, r, opts, input_means, input_variances)
}

fn integrate(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let out = quadrature::integrate(f, 0.0, 1.0, 1e-10);
    (out.integral, out.error_estimate)
}

const MC_BATCHES: u64 = 32;

fn monte_carlo_resampling_variance(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    sizes: &[usize],
    r: usize,
    opts: &VarianceOptions,
    input_means: Vec<f64>,
    input_variances: Vec<f64>,
) -> Result<VarianceReport> {
    let seed = opts.mc_seed()?;
    let per_batch = (opts.mc_replications / MC_BATCHES).max(2);
    let m = tree.arity();
    // each batch: sums of φ, φ², φφ′ with ω drawn coordinate-wise w.p. 1/n_i
    let batches: Vec<[f64; 3]> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngSource(stream(seed, MC_STREAM_BASE + b));
            let mut x = vec![0.0; m];
            let mut y = vec![0.0; m];
            let mut s = [0.0; 3];
            for _ in 0..per_batch {
                for i in 0..m {
                    x[i] = rng.draw(&laws[i]);
                    let shared = rng.uniform_index(sizes[i]) == 0;
                    y[i] = if shared { x[i] } else { rng.draw(&laws[i]) };
                }
                let (a, c) = (tree.eval_unchecked(&x), tree.eval_unchecked(&y));
                s[0] += a + c;
                s[1] += a * a + c * c;
                s[2] += a * c;
            }
            let k = per_batch as f64;
            [s[0] / (2.0 * k), s[1] / (2.0 * k), s[2] / k]
        })
        .collect();
    let rf = r as f64;
    let assemble = |m: &[f64; 3]| (m[1] + (rf - 1.0) * m[2]) / rf - m[0] * m[0];
    let mut pooled = [0.0; 3];
    let mut per = RunningMoments::default();
    for b in &batches {
        for j in 0..3 {
            pooled[j] += b[j] / MC_BATCHES as f64;
        }
        per.push(assemble(b));
    }
    Ok(VarianceReport {
        variance: assemble(&pooled),
        std_error: per.std_error(),
        method: VarianceMethod::MonteCarlo,
        moments: MomentSet {
            mu: pooled[0],
            mu2: pooled[1],
            mu11: pooled[2],
            mu11_by_omega: Vec::new(),
            input_means,
            input_variances,
        },
    })
}

/// Closed form for one input: `D θ* = σ²/r + (r − 1) σ² / (r n)`, next to the
/// classical `σ²/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingleSampleVariance {
    pub resampling: f64,
    pub classical: f64,
}

pub fn single_sample_variance(sigma2: f64, n: usize, r: usize) -> SingleSampleVariance {
    let (n, r) = (n as f64, r as f64);
    SingleSampleVariance {
        resampling: sigma2 / r + (r - 1.0) * sigma2 / (r * n),
        classical: sigma2 / n,
    }
}

/// Marginal law of one slot of a node's sample and the joint law of two
/// distinct slots.
#[derive(Debug, Clone)]
struct SlotLaw {
    marginal: BTreeMap<Q, Q>,
    pair: BTreeMap<(Q, Q), Q>,
}

/// Exact variance of the hierarchical estimator. Leaf sample sizes and node
/// resample sizes are read from the tree.
pub fn hierarchical_variance_exact(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    cap: u64,
) -> Result<Q> {
    check_laws(tree, laws)?;
    let supports = exact_supports(laws)?;
    let mut slot_laws: Vec<SlotLaw> = Vec::with_capacity(tree.len());
    for node in tree.nodes() {
        let law = match node.kind {
            NodeKind::Leaf { input } => {
                let marginal: BTreeMap<Q, Q> = supports[input].iter().cloned().collect();
                let mut pair = BTreeMap::new();
                for (a, p) in &supports[input] {
                    for (b, q) in &supports[input] {
                        pair.insert((a.clone(), b.clone()), p * q);
                    }
                }
                SlotLaw { marginal, pair }
            }
            ref kind => combine_children(
                kind,
                node.children.iter().map(|&c| (&slot_laws[c], tree.node(c).size)),
                cap,
            )?,
        };
        slot_laws.push(law);
    }
    let root = &slot_laws[tree.root()];
    let mu = root
        .marginal
        .iter()
        .fold(Q::zero(), |acc, (v, p)| acc + v * p);
    let mu2 = root
        .marginal
        .iter()
        .fold(Q::zero(), |acc, (v, p)| acc + v * v * p);
    let mu11 = root
        .pair
        .iter()
        .fold(Q::zero(), |acc, ((a, b), p)| acc + a * b * p);
    let n = Q::from_integer((tree.node(tree.root()).size as i64).into());
    Ok((mu2 + (&n - Q::one()) * mu11) / n - &mu * &mu)
}

fn combine_children<'a>(
    kind: &NodeKind,
    children: impl Iterator<Item = (&'a SlotLaw, usize)>,
    cap: u64,
) -> Result<SlotLaw> {
    // Two distinct parent slots pick the same child element w.p. 1/n_c,
    // otherwise two distinct child slots.
    let mut mixes: Vec<Vec<(Q, Q, Q)>> = Vec::new();
    let mut margins: Vec<Vec<(Q, Q)>> = Vec::new();
    for (law, n) in children {
        let same = Q::new(1.into(), (n as i64).into());
        let diff = Q::one() - &same;
        let mut mix: BTreeMap<(Q, Q), Q> = BTreeMap::new();
        if n > 1 {
            for ((a, b), p) in &law.pair {
                *mix.entry((a.clone(), b.clone())).or_insert_with(Q::zero) += &diff * p;
            }
        }
        for (a, p) in &law.marginal {
            *mix.entry((a.clone(), a.clone())).or_insert_with(Q::zero) += &same * p;
        }
        mixes.push(mix.into_iter().map(|((a, b), p)| (a, b, p)).collect());
        margins.push(law.marginal.iter().map(|(a, p)| (a.clone(), p.clone())).collect());
    }
    let total = mixes
        .iter()
        .try_fold(1u128, |acc, m| acc.checked_mul(m.len() as u128))
        .unwrap_or(u128::MAX);
    if total > cap as u128 {
        return Err(Error::CapExceeded {
            what: "hierarchical slot-pair enumeration",
            count: total,
            cap: cap as u128,
            hint: "use the Monte Carlo mode of hierarchical_variance",
        });
    }
    let k = mixes.len();
    let mut pair = BTreeMap::new();
    let mut digits = vec![0usize; k];
    let radix: Vec<usize> = mixes.iter().map(Vec::len).collect();
    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    loop {
        a.clear();
        b.clear();
        let mut w = Q::one();
        for (c, &d) in digits.iter().enumerate() {
            let (x, y, p) = &mixes[c][d];
            a.push(x.clone());
            b.push(y.clone());
            w *= p;
        }
        *pair
            .entry((apply_node(kind, &a), apply_node(kind, &b)))
            .or_insert_with(Q::zero) += w;
        if !odometer(&mut digits, &radix) {
            break;
        }
    }
    let mut marginal = BTreeMap::new();
    let radix: Vec<usize> = margins.iter().map(Vec::len).collect();
    let mut digits = vec![0usize; k];
    loop {
        a.clear();
        let mut w = Q::one();
        for (c, &d) in digits.iter().enumerate() {
            let (x, p) = &margins[c][d];
            a.push(x.clone());
            w *= p;
        }
        *marginal.entry(apply_node(kind, &a)).or_insert_with(Q::zero) += w;
        if !odometer(&mut digits, &radix) {
            break;
        }
    }
    Ok(SlotLaw { marginal, pair })
}

/// Variance of hierarchical resampling: exact on finite-support laws within
/// the cap, otherwise seeded Monte Carlo over synthetic pools.
pub fn hierarchical_variance(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    opts: &VarianceOptions,
) -> Result<VarianceReport> {
    check_laws(tree, laws)?;
    let (input_means, input_variances) = input_moments(laws);
    match hierarchical_variance_exact(tree, laws, opts.cap) {
        Ok(q) => {
            return Ok(VarianceReport {
                variance: to_f64(&q),
                std_error: 0.0,
                method: VarianceMethod::Exact,
                moments: MomentSet {
                    mu: f64::NAN,
                    mu2: f64::NAN,
                    mu11: f64::NAN,
                    mu11_by_omega: Vec::new(),
                    input_means,
                    input_variances,
                },
            })
            .map(|mut rep: VarianceReport| {
                // fill μ from the law of the root when cheap
                if let Ok(em) = ExactMoments::compute(tree, laws, opts.cap.min(1_000_000)) {
                    rep.moments.mu = to_f64(&em.mu);
                    rep.moments.mu2 = to_f64(&em.mu2);
                }
                rep
            });
        }
        Err(Error::CapExceeded { .. }) | Err(Error::Unsupported(_)) => {}
        Err(e) => return Err(e),
    }
    let seed = opts.mc_seed()?;
    let leaf_sizes = tree.leaf_sizes();
    let per_batch = (opts.mc_replications / MC_BATCHES).max(2);
    let batches: Vec<Vec<f64>> = (0..MC_BATCHES)
        .into_par_iter()
        .map(|b| {
            let mut rng = RngSource(stream(seed, MC_STREAM_BASE + b));
            (0..per_batch)
                .map(|_| {
                    let pools: Vec<SamplePool> = laws
                        .iter()
                        .zip(&leaf_sizes)
                        .map(|(law, &n)| {
                            SamplePool::new((0..n).map(|_| rng.draw(law)).collect())
                                .expect("finite draws")
                        })
                        .collect();
                    hierarchical_estimate_with(&pools, tree, &mut rng).expect("validated tree")
                })
                .collect()
        })
        .collect();
    let all: Vec<f64> = batches.into_iter().flatten().collect();
    let (variance, std_error) = variance_with_error(&all);
    let mean = all.iter().sum::<f64>() / all.len() as f64;
    Ok(VarianceReport {
        variance,
        std_error,
        method: VarianceMethod::MonteCarlo,
        moments: MomentSet {
            mu: mean,
            mu2: f64::NAN,
            mu11: f64::NAN,
            mu11_by_omega: Vec::new(),
            input_means,
            input_variances,
        },
    })
}

/// Which estimator the oracle replays.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Simple resampling with `r` realizations over pools of the given sizes.
    Simple { r: usize },
    /// Hierarchical resampling with all sizes taken from the tree.
    Hierarchical,
}

/// Exact variance by enumerating every pool realization and every resampling
/// pick, replaying the estimator itself. Independent of the omega-pair
/// machinery.
pub fn brute_force_variance_oracle(
    tree: &CalcTree,
    laws: &[DistributionSpec],
    sizes: &[usize],
    scheme: Scheme,
    cap: u64,
) -> Result<Q> {
    check_laws(tree, laws)?;
    let supports = exact_supports(laws)?;
    let sizes: Vec<usize> = match scheme {
        Scheme::Simple { .. } => {
            check_sizes(tree, sizes)?;
            sizes.to_vec()
        }
        Scheme::Hierarchical => tree.leaf_sizes(),
    };
    let mut paths: f64 = supports
        .iter()
        .zip(&sizes)
        .map(|(s, &n)| (s.len() as f64).powi(n as i32))
        .product();
    paths *= match scheme {
        Scheme::Simple { r } => (sizes.iter().map(|&n| n as f64).product::<f64>()).powi(r as i32),
        Scheme::Hierarchical => tree
            .internal_ids()
            .map(|v| {
                let node = tree.node(v);
                let per_slot: f64 = node
                    .children
                    .iter()
                    .map(|&c| match tree.node(c).kind {
                        NodeKind::Leaf { input } => sizes[input] as f64,
                        _ => tree.node(c).size as f64,
                    })
                    .product();
                per_slot.powi(node.size as i32)
            })
            .product(),
    };
    if paths > cap as f64 {
        return Err(Error::CapExceeded {
            what: "brute-force variance oracle",
            count: paths as u128,
            cap: cap as u128,
            hint: "shrink the sizes or use resampling_variance",
        });
    }
    let (_, var) = exact_mean_variance(cap, |e| {
        let pools: Vec<SamplePool> = laws
            .iter()
            .zip(&sizes)
            .map(|(law, &n)| {
                SamplePool::new((0..n).map(|_| e.draw(law)).collect()).expect("finite atoms")
            })
            .collect();
        match scheme {
            Scheme::Simple { r } => simple_estimate_with(&pools, tree, r, e),
            Scheme::Hierarchical => hierarchical_estimate_with(&pools, tree, e),
        }
        .expect("validated inputs")
    })?;
    Ok(var)
}

/// Variance of `θ*` given the observed pools (resampling randomness only):
/// `Var_H(φ) / r` under the empirical laws.
pub fn conditional_variance(
    pools: &[SamplePool],
    tree: &CalcTree,
    r: usize,
    cap: u64,
) -> Result<f64> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    let (_, var) = exact_mean_variance(cap, |e| {
        simple_estimate_with(pools, tree, 1, e).expect("validated inputs")
    })?;
    Ok(to_f64(&var) / r as f64)
}

/// Exact rational for a float constant, for callers comparing against the
/// exact engine.
pub fn q(x: f64) -> Q {
    exact(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(a: f64, b: f64) -> DistributionSpec {
        DistributionSpec::two_point(a, b).unwrap()
    }

    fn qf(x: &Q) -> f64 {
        to_f64(x)
    }

    #[test]
    fn omega_probability_examples() {
        let p = omega_probability(OmegaPair::from_indices(&[0]), &[2, 3]);
        assert_eq!(p, Q::new(1.into(), 3.into()));
        let full = omega_probability(OmegaPair::full(2), &[2, 3]);
        assert_eq!(full, Q::new(1.into(), 6.into()));
    }

    #[test]
    fn omega_probabilities_sum_to_one() {
        for m in 1..=8 {
            for base in 1..=10usize {
                let sizes: Vec<usize> = (0..m).map(|i| 1 + (base + i * 3) % 10).collect();
                let total = OmegaPair::all(m)
                    .map(|w| omega_probability(w, &sizes))
                    .fold(Q::zero(), |a, b| a + b);
                assert_eq!(total, Q::one(), "m={m} sizes={sizes:?}");
            }
        }
    }

    #[test]
    fn mixed_moment_examples_for_sum() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let laws = [two(0.0, 2.0), two(0.0, 4.0)];
        let exact = |w: &[usize]| {
            conditional_mixed_moment(
                &tree,
                &laws,
                OmegaPair::from_indices(w),
                MomentMode::Exact { cap: 1000 },
            )
            .unwrap()
            .value
        };
        assert_eq!(exact(&[0]), 10.0);
        assert_eq!(exact(&[]), 9.0);
        assert_eq!(exact(&[0, 1]), 14.0);
        let mc = conditional_mixed_moment(
            &tree,
            &laws,
            OmegaPair::from_indices(&[0]),
            MomentMode::MonteCarlo {
                replications: 50_000,
                seed: 2,
            },
        )
        .unwrap();
        assert!((mc.value - 10.0).abs() < 4.0 * mc.std_error);
    }

    #[test]
    fn resampling_variance_sum_example() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let laws = [two(0.0, 2.0), two(0.0, 4.0)];
        let em = ExactMoments::compute(&tree, &laws, 1000).unwrap();
        assert_eq!(qf(&em.mu11(&[2, 2])), 11.5);
        assert_eq!(qf(&em.variance(&[2, 2], 2)), 3.75);
        assert_eq!(qf(&em.variance_limit(&[2, 2])), 2.5);
        let oracle =
            brute_force_variance_oracle(&tree, &laws, &[2, 2], Scheme::Simple { r: 2 }, 1_000_000)
                .unwrap();
        assert_eq!(qf(&oracle), 3.75);
    }

    #[test]
    fn moment_identities() {
        let tree = CalcTree::parse("max(x1, min(x2, x3))").unwrap();
        let laws = [two(0.0, 3.0), two(1.0, 2.0), two(-1.0, 5.0)];
        let em = ExactMoments::compute(&tree, &laws, 10_000).unwrap();
        assert_eq!(em.mu11_by_omega[0], &em.mu * &em.mu);
        assert_eq!(em.mu11_by_omega[7], em.mu2);
        assert!(em.mu2 >= &em.mu * &em.mu);
    }

    #[test]
    fn single_sample_closed_form() {
        let v = single_sample_variance(781.25, 1, 50);
        assert_eq!((v.resampling, v.classical), (781.25, 781.25));
        let v = single_sample_variance(781.25, 10, 50);
        assert!((v.resampling - 92.1875).abs() < 1e-12);
        assert_eq!(v.classical, 78.125);
        let v = single_sample_variance(1.0, 2, 2);
        assert_eq!(v.resampling, 0.75);
        let v = single_sample_variance(781.25, 5, 50);
        assert!((v.resampling - 168.75).abs() < 1e-12);
    }

    #[test]
    fn oracle_small_examples() {
        let tree = CalcTree::parse("x1").unwrap();
        let law = [two(0.0, 2.0)];
        let v = brute_force_variance_oracle(&tree, &law, &[1], Scheme::Simple { r: 1 }, 1000);
        assert_eq!(qf(&v.unwrap()), 1.0);
        let v = brute_force_variance_oracle(&tree, &law, &[2], Scheme::Simple { r: 2 }, 1000);
        assert_eq!(qf(&v.unwrap()), 0.75);
        let max = CalcTree::parse("max(x1, x2)").unwrap();
        let laws = [two(0.0, 2.0), two(0.0, 2.0)];
        let v = brute_force_variance_oracle(&max, &laws, &[2, 2], Scheme::Simple { r: 2 }, 1 << 20)
            .unwrap();
        assert_eq!(v, resampling_variance_exact(&max, &laws, &[2, 2], 2, 1000).unwrap());
    }

    #[test]
    fn oracle_cap() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let laws = [two(0.0, 2.0), two(0.0, 4.0)];
        let err = brute_force_variance_oracle(&tree, &laws, &[2, 2], Scheme::Simple { r: 3 }, 10)
            .unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn single_node_hierarchy_equals_simple_variance() {
        let laws = [two(0.0, 2.0), two(1.0, 4.0)];
        for op in ["sum", "max", "min"] {
            let flat = CalcTree::parse(&format!("{op}(x1, x2)")).unwrap();
            let hier = CalcTree::parse(&format!("{op}@3(x1@2, x2@3)")).unwrap();
            let a = resampling_variance_exact(&flat, &laws, &[2, 3], 3, 10_000).unwrap();
            let b = hierarchical_variance_exact(&hier, &laws, 10_000).unwrap();
            assert_eq!(a, b, "{op}");
        }
    }

    #[test]
    fn hierarchical_matches_oracle_and_is_monotone() {
        let laws = [two(0.0, 2.0), two(0.0, 4.0)];
        let mut last = f64::INFINITY;
        for n in [1, 2] {
            let tree = CalcTree::parse(&format!("sum@2(x1@{n}, x2@2)")).unwrap();
            let engine = hierarchical_variance_exact(&tree, &laws, 10_000).unwrap();
            let oracle =
                brute_force_variance_oracle(&tree, &laws, &[], Scheme::Hierarchical, 1 << 22)
                    .unwrap();
            assert_eq!(engine, oracle);
            assert!(qf(&engine) <= last);
            last = qf(&engine);
        }
        let deep = CalcTree::parse("max@2(sum@2(x1@2, x2), x3@2)").unwrap();
        let laws3 = [two(0.0, 1.0), two(0.0, 2.0), two(1.0, 2.0)];
        let engine = hierarchical_variance_exact(&deep, &laws3, 10_000).unwrap();
        let oracle =
            brute_force_variance_oracle(&deep, &laws3, &[], Scheme::Hierarchical, 1 << 24).unwrap();
        assert_eq!(engine, oracle);
    }

    #[test]
    fn quadrature_path_matches_closed_form() {
        let tree = CalcTree::parse("x1").unwrap();
        let law = [DistributionSpec::exponential(0.5).unwrap()];
        let rep = resampling_variance(&tree, &law, &[5], 50, &VarianceOptions::default()).unwrap();
        assert_eq!(rep.method, VarianceMethod::Quadrature);
        let closed = single_sample_variance(4.0, 5, 50).resampling;
        assert!((rep.variance - closed).abs() < 1e-6, "{} vs {closed}", rep.variance);
    }

    #[test]
    fn monte_carlo_path_needs_seed_and_tracks_closed_form() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let laws = [
            DistributionSpec::uniform(0.0, 1.0).unwrap(),
            DistributionSpec::exponential(1.0).unwrap(),
        ];
        let mut opts = VarianceOptions::default();
        assert!(resampling_variance(&tree, &laws, &[3, 4], 5, &opts).is_err());
        opts.seed = Some(9);
        let rep = resampling_variance(&tree, &laws, &[3, 4], 5, &opts).unwrap();
        assert_eq!(rep.method, VarianceMethod::MonteCarlo);
        // linear φ: Σ σ_i² (1/r + (r−1)/(r n_i))
        let expect = single_sample_variance(1.0 / 12.0, 3, 5).resampling
            + single_sample_variance(1.0, 4, 5).resampling;
        assert!(
            (rep.variance - expect).abs() < 4.0 * rep.std_error,
            "{} ± {} vs {expect}",
            rep.variance,
            rep.std_error
        );
    }

    #[test]
    fn conditional_variance_of_mean() {
        let pools = vec![SamplePool::new(vec![0.0, 2.0]).unwrap()];
        let tree = CalcTree::parse("x1").unwrap();
        assert_eq!(conditional_variance(&pools, &tree, 4, 100).unwrap(), 0.25);
    }
}
