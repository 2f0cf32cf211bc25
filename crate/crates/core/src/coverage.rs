//! Upper confidence bounds from resampling realizations and their actual
//! coverage.
//!
//! For a functional that depends only on the order of its arguments, the
//! estimator given the samples depends only on the protocol: the sequence of
//! sample labels of the pooled order statistics. Under i.i.d. continuous
//! inputs all protocols are equally likely, so the coverage probability is an
//! average over protocols of a binomial tail.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::choice::{stream, ChoiceSource, MC_STREAM_BASE};
use crate::error::{Error, Result};
use crate::model::SamplePool;
use crate::stats::RunningMoments;

pub const DEFAULT_PROTOCOL_CAP: u128 = 10_000_000;
const MC_CHUNKS: u64 = 64;

/// Rank-determined target functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `1{X_m < min(X_1, …, X_{m−1})}`.
    MinSelection,
    /// `1{X_1 < X_2 < … < X_m}`.
    Ordering,
}

impl Functional {
    pub fn name(&self) -> &'static str {
        match self {
            Functional::MinSelection => "min-selection",
            Functional::Ordering => "ordering",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "min-selection" => Ok(Functional::MinSelection),
            "ordering" => Ok(Functional::Ordering),
            _ => Err(Error::InvalidParameter(format!(
                "unknown functional `{name}` (expected min-selection or ordering)"
            ))),
        }
    }

    pub fn eval(&self, x: &[f64]) -> bool {
        let m = x.len();
        match self {
            Functional::MinSelection => x[..m - 1].iter().all(|&v| x[m - 1] < v),
            Functional::Ordering => x.windows(2).all(|w| w[0] < w[1]),
        }
    }

    /// `θ` under i.i.d. continuous inputs: `1/m` or `1/m!`.
    pub fn theta(&self, m: usize) -> BigRational {
        let den: u64 = match self {
            Functional::MinSelection => m as u64,
            Functional::Ordering => (1..=m as u64).product(),
        };
        BigRational::new(1.into(), den.into())
    }
}

/// Sample labels (0-based) of the pooled values in ascending order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Protocol {
    labels: Vec<u16>,
}

impl Protocol {
    pub fn from_labels(labels: Vec<u16>) -> Self {
        Self { labels }
    }

    /// Labels as 1-based sample numbers.
    pub fn one_based(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| l as usize + 1).collect()
    }

    pub fn labels(&self) -> &[u16] {
        &self.labels
    }

    pub fn sizes(&self, m: usize) -> Vec<usize> {
        let mut s = vec![0; m];
        for &l in &self.labels {
            s[l as usize] += 1;
        }
        s
    }

    /// Two-sample count form: `c_i` is the number of second-sample elements
    /// in `(X_1(i), X_1(i+1)]`, with cells below the first and above the
    /// last first-sample order statistic.
    pub fn two_sample_counts(&self) -> Result<Vec<usize>> {
        if self.labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParameter("count form needs exactly two samples".into()));
        }
        let mut counts = vec![0];
        for &l in &self.labels {
            if l == 0 {
                counts.push(0);
            } else {
                *counts.last_mut().unwrap() += 1;
            }
        }
        Ok(counts)
    }

    /// Inverse of [`Protocol::two_sample_counts`].
    pub fn from_two_sample_counts(counts: &[usize]) -> Self {
        let mut labels = Vec::new();
        for (i, &c) in counts.iter().enumerate() {
            if i > 0 {
                labels.push(0);
            }
            labels.extend(std::iter::repeat_n(1, c));
        }
        Self { labels }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Protocol of the given samples. Equal values anywhere in the pool are
/// rejected.
pub fn protocol_of_samples(samples: &[SamplePool]) -> Result<Protocol> {
    let mut all: Vec<(f64, u16)> = samples
        .iter()
        .enumerate()
        .flat_map(|(i, s)| s.values().iter().map(move |&v| (v, i as u16)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = all.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::TiedValues(w[0].0));
    }
    Ok(Protocol {
        labels: all.into_iter().map(|(_, l)| l).collect(),
    })
}

/// `N! / Π n_i!`, saturating.
pub fn protocol_count(sizes: &[usize]) -> u128 {
    let mut count: u128 = 1;
    let mut placed = 0u128;
    for &n in sizes {
        for j in 1..=n as u128 {
            placed += 1;
            // C(placed, j) built incrementally stays integral
            count = match count.checked_mul(placed) {
                Some(c) => c / j,
                None => return u128::MAX,
            };
        }
    }
    count
}

/// Exchangeable-model probability of any single protocol, `Π n_i! / N!`.
pub fn protocol_probability(sizes: &[usize]) -> BigRational {
    let fact = |n: usize| (1..=n as u64).fold(num_bigint::BigInt::one(), |a, k| a * k);
    let num = sizes
        .iter()
        .fold(num_bigint::BigInt::one(), |a, &n| a * fact(n));
    BigRational::new(num, fact(sizes.iter().sum()))
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter("sample sizes must be >= 1".into()));
    }
    Ok(())
}

/// Visit every protocol in lexicographic order.
pub fn visit_protocols(sizes: &[usize], cap: u128, mut visit: impl FnMut(&Protocol)) -> Result<u128> {
    check_sizes(sizes)?;
    let count = protocol_count(sizes);
    if count > cap {
        return Err(Error::CapExceeded {
            what: "protocol enumeration",
            count,
            cap,
            hint: "use Monte Carlo protocol sampling",
        });
    }
    let mut labels: Vec<u16> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(i as u16, n))
        .collect();
    let mut p = Protocol { labels: labels.clone() };
    loop {
        visit(&p);
        if !next_permutation(&mut labels) {
            return Ok(count);
        }
        p.labels.copy_from_slice(&labels);
    }
}

fn next_permutation(a: &mut [u16]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).expect("pivot");
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

/// All protocols with their exact probabilities.
pub fn enumerate_protocols(sizes: &[usize], cap: u128) -> Result<Vec<(Protocol, BigRational)>> {
    let p = protocol_probability(sizes);
    let mut out = Vec::new();
    visit_protocols(sizes, cap, |proto| out.push((proto.clone(), p.clone())))?;
    Ok(out)
}

/// Number of index tuples `(j_1, …, j_m)` whose elements satisfy the event.
pub fn success_count(protocol: &Protocol, functional: Functional, m: usize) -> u64 {
    match functional {
        Functional::MinSelection => {
            // elements of every other sample still above the current position
            let mut above = protocol.sizes(m);
            let mut total = 0u64;
            for &l in &protocol.labels {
                let l = l as usize;
                above[l] -= 1;
                if l == m - 1 {
                    total += (0..m - 1).map(|i| above[i] as u64).product::<u64>();
                }
            }
            total
        }
        Functional::Ordering => {
            // chains[i]: increasing chains through samples 0..=i so far
            let mut chains = vec![0u64; m];
            for &l in &protocol.labels {
                let l = l as usize;
                chains[l] += if l == 0 { 1 } else { chains[l - 1] };
            }
            chains[m - 1]
        }
    }
}

/// Fraction `p` of index tuples satisfying the event, given the protocol.
pub fn success_fraction(protocol: &Protocol, functional: Functional, m: usize) -> BigRational {
    let total: u64 = protocol.sizes(m).iter().map(|&n| n as u64).product();
    BigRational::new(success_count(protocol, functional, m).into(), total.into())
}

/// `k = ⌊(1 − γ) r⌋`.
pub fn order_index(gamma: f64, r: usize) -> usize {
    ((1.0 - gamma) * r as f64 + 1e-9).floor() as usize
}

/// Resampling realizations from observed samples: each is the mean of
/// `batch` indicators of the functional at one uniform pick per sample.
pub fn success_realizations_with<S: ChoiceSource + ?Sized>(
    samples: &[SamplePool],
    functional: Functional,
    r: usize,
    batch: usize,
    src: &mut S,
) -> Result<Vec<f64>> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if r == 0 || batch == 0 {
        return Err(Error::InvalidParameter("r and batch must be >= 1".into()));
    }
    let mut x = vec![0.0; samples.len()];
    Ok((0..r)
        .map(|_| {
            let mut hits = 0usize;
            for _ in 0..batch {
                for (xi, s) in x.iter_mut().zip(samples) {
                    *xi = s.values()[src.uniform_index(s.len())];
                }
                hits += functional.eval(&x) as usize;
            }
            hits as f64 / batch as f64
        })
        .collect())
}

/// Lower end of the interval `(θ*_(k), ∞)`; `−∞` when `k = 0`.
pub fn upper_bound(realizations: &[f64], gamma: f64) -> Result<f64> {
    if realizations.is_empty() {
        return Err(Error::EmptySample);
    }
    check_gamma(gamma)?;
    let k = order_index(gamma, realizations.len());
    if k == 0 {
        return Ok(f64::NEG_INFINITY);
    }
    let mut v = realizations.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v[k - 1])
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidParameter(format!("gamma must be in (0, 1), got {gamma}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub sizes: Vec<usize>,
    pub gamma: f64,
    pub r: usize,
    pub functional: Functional,
    /// Draws averaged per realization; 1 gives single-draw realizations.
    #[serde(default = "one")]
    pub batch: usize,
}

fn one() -> usize {
    1
}

impl CoverageConfig {
    pub fn new(sizes: Vec<usize>, gamma: f64, r: usize, functional: Functional) -> Result<Self> {
        let c = Self {
            sizes,
            gamma,
            r,
            functional,
            batch: 1,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.sizes)?;
        check_gamma(self.gamma)?;
        if self.r == 0 || self.batch == 0 {
            return Err(Error::InvalidParameter("r and batch must be >= 1".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.sizes.len()
    }

    pub fn k(&self) -> usize {
        order_index(self.gamma, self.r)
    }
}

/// Law of the success count over protocols: `(count, probability)` pairs
/// and the number of index tuples `Π n_i`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessLaw {
    pub sizes: Vec<usize>,
    pub functional: Functional,
    pub tuples: u64,
    pub atoms: Vec<(u64, f64)>,
    /// Protocols sampled, or `None` when enumerated exactly.
    pub samples: Option<u64>,
}

impl SuccessLaw {
    /// Exact law by enumerating every protocol.
    pub fn exact(sizes: &[usize], functional: Functional, cap: u128) -> Result<Self> {
        let m = sizes.len();
        let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
        let total = visit_protocols(sizes, cap, |p| {
            *counts.entry(success_count(p, functional, m)).or_insert(0) += 1;
        })?;
        Ok(Self {
            sizes: sizes.to_vec(),
            functional,
            tuples: sizes.iter().map(|&n| n as u64).product(),
            atoms: counts
                .into_iter()
                .map(|(c, k)| (c, k as f64 / total as f64))
                .collect(),
            samples: None,
        })
    }

    /// Exact law as rationals.
    pub fn exact_rational(
        sizes: &[usize],
        functional: Functional,
        cap: u128,
    ) -> Result<Vec<(u64, BigRational)>> {
        let m = sizes.len();
        let mut counts: BTreeMap<u64, u128> = BTreeMap::new();
        let total = visit_protocols(sizes, cap, |p| {
            *counts.entry(success_count(p, functional, m)).or_insert(0) += 1;
        })?;
        Ok(counts
            .into_iter()
            .map(|(c, k)| {
                (
                    c,
                    BigRational::new((k as i128).into(), (total as i128).into()),
                )
            })
            .collect())
    }

    /// Law estimated from uniformly sampled protocols.
    pub fn sampled(sizes: &[usize], functional: Functional, samples: u64, seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let m = sizes.len();
        let per = samples.div_ceil(MC_CHUNKS);
        let maps: Vec<BTreeMap<u64, u64>> = (0..MC_CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut rng = stream(seed, MC_STREAM_BASE + c);
                let mut labels: Vec<u16> = sizes
                    .iter()
                    .enumerate()
                    .flat_map(|(i, &n)| std::iter::repeat_n(i as u16, n))
                    .collect();
                let mut counts = BTreeMap::new();
                let todo = per.min(samples.saturating_sub(c * per));
                for _ in 0..todo {
                    labels.shuffle(&mut rng);
                    let p = Protocol::from_labels(labels.clone());
                    *counts.entry(success_count(&p, functional, m)).or_insert(0) += 1;
                }
                counts
            })
            .collect();
        let mut merged: BTreeMap<u64, u64> = BTreeMap::new();
        for map in maps {
            for (c, k) in map {
                *merged.entry(c).or_insert(0) += k;
            }
        }
        Ok(Self {
            sizes: sizes.to_vec(),
            functional,
            tuples: sizes.iter().map(|&n| n as u64).product(),
            atoms: merged
                .into_iter()
                .map(|(c, k)| (c, k as f64 / samples as f64))
                .collect(),
            samples: Some(samples),
        })
    }

    /// Exact when within the cap, otherwise sampled.
    pub fn build(sizes: &[usize], functional: Functional, mode: CoverageMode) -> Result<Self> {
        match mode {
            CoverageMode::Exact { cap } => Self::exact(sizes, functional, cap),
            CoverageMode::Sampled { samples, seed } => Self::sampled(sizes, functional, samples, seed),
            CoverageMode::Auto { cap, samples, seed } => {
                if protocol_count(sizes) <= cap {
                    Self::exact(sizes, functional, cap)
                } else {
                    Self::sampled(sizes, functional, samples, seed)
                }
            }
        }
    }

    /// `Σ P(count) · count / Π n_i`.
    pub fn mean_fraction(&self) -> f64 {
        self.atoms
            .iter()
            .map(|&(c, p)| p * c as f64 / self.tuples as f64)
            .sum()
    }

    /// Coverage `R` for `r` realizations at level `γ`, each realization the
    /// mean of `batch` draws. Returns `(R, standard error)`; the error is 0
    /// for an exact law.
    pub fn coverage(&self, r: usize, gamma: f64, batch: usize) -> Result<(f64, f64)> {
        check_gamma(gamma)?;
        if r == 0 || batch == 0 {
            return Err(Error::InvalidParameter("r and batch must be >= 1".into()));
        }
        let k = order_index(gamma, r);
        if k == 0 {
            return Ok((1.0, 0.0));
        }
        let theta = self.functional.theta(self.sizes.len());
        // batch mean <= θ  ⇔  successes <= ⌊batch θ⌋
        let limit = (BigRational::from_integer((batch as i64).into()) * theta)
            .floor()
            .to_integer();
        let limit: u64 = limit.try_into().expect("small");
        let mut r_sum = 0.0;
        let mut r2 = 0.0;
        for &(c, p) in &self.atoms {
            let frac = c as f64 / self.tuples as f64;
            // one realization at or below θ
            let below = binomial_cdf(batch as u64, frac, limit);
            // at least k of r realizations at or below θ
            let f = binomial_sf(r as u64, below, k as u64 - 1);
            r_sum += p * f;
            r2 += p * f * f;
        }
        let se = match self.samples {
            None => 0.0,
            Some(n) => ((r2 - r_sum * r_sum).max(0.0) / n as f64).sqrt(),
        };
        Ok((r_sum, se))
    }
}

/// `P{Bin(n, p) <= x}`.
pub fn binomial_cdf(n: u64, p: f64, x: u64) -> f64 {
    if x >= n || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    Binomial::new(p, n).expect("valid binomial").cdf(x)
}

/// `P{Bin(n, p) > x}`.
pub fn binomial_sf(n: u64, p: f64, x: u64) -> f64 {
    if x >= n || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return 1.0;
    }
    Binomial::new(p, n).expect("valid binomial").sf(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    Exact { cap: u128 },
    Sampled { samples: u64, seed: u64 },
    Auto { cap: u128, samples: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    pub k: usize,
    pub theta: f64,
    pub coverage: f64,
    pub std_error: f64,
    pub exact: bool,
    pub protocols: u128,
}

/// Actual coverage probability `R = P{θ*_(k) <= θ}`.
pub fn actual_coverage(config: &CoverageConfig, mode: CoverageMode) -> Result<CoverageReport> {
    config.validate()?;
    let law = SuccessLaw::build(&config.sizes, config.functional, mode)?;
    let (coverage, std_error) = law.coverage(config.r, config.gamma, config.batch)?;
    Ok(CoverageReport {
        config: config.clone(),
        k: config.k(),
        theta: crate::model::to_f64(&config.functional.theta(config.m())),
        coverage,
        std_error,
        exact: law.samples.is_none(),
        protocols: protocol_count(&config.sizes),
    })
}

/// Coverage across several confidence levels from one success law.
pub fn coverage_profile(
    sizes: &[usize],
    functional: Functional,
    r: usize,
    gammas: &[f64],
    mode: CoverageMode,
) -> Result<Vec<(f64, f64)>> {
    let law = SuccessLaw::build(sizes, functional, mode)?;
    gammas.iter().map(|&g| law.coverage(r, g, 1)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulatedCoverage {
    pub coverage: f64,
    pub std_error: f64,
    pub runs: u64,
}

/// Direct simulation: draw uniform samples, form `r` resampling realizations,
/// build the bound and check it against `θ`.
pub fn simulate_coverage(config: &CoverageConfig, runs: u64, seed: u64) -> Result<SimulatedCoverage> {
    config.validate()?;
    let theta = crate::model::to_f64(&config.functional.theta(config.m()));
    let per = runs.div_ceil(MC_CHUNKS);
    let chunks: Vec<RunningMoments> = (0..MC_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, MC_STREAM_BASE + c);
            let mut acc = RunningMoments::default();
            let todo = per.min(runs.saturating_sub(c * per));
            let mut x = vec![0.0; config.m()];
            let mut real = vec![0.0; config.r];
            for _ in 0..todo {
                let samples: Vec<Vec<f64>> = config
                    .sizes
                    .iter()
                    .map(|&n| (0..n).map(|_| rng.gen::<f64>()).collect())
                    .collect();
                for v in real.iter_mut() {
                    let mut hits = 0usize;
                    for _ in 0..config.batch {
                        for (xi, s) in x.iter_mut().zip(&samples) {
                            *xi = s[rng.gen_range(0..s.len())];
                        }
                        hits += config.functional.eval(&x) as usize;
                    }
                    *v = hits as f64 / config.batch as f64;
                }
                let bound = upper_bound(&real, config.gamma).expect("validated");
                acc.push(if bound <= theta { 1.0 } else { 0.0 });
            }
            acc
        })
        .collect();
    let mut all = RunningMoments::default();
    chunks.iter().for_each(|c| all.merge(c));
    Ok(SimulatedCoverage {
        coverage: all.mean(),
        std_error: all.std_error(),
        runs,
    })
}

/// Exact `E_protocols[p]`, which equals `θ`.
pub fn mean_success_fraction(sizes: &[usize], functional: Functional, cap: u128) -> Result<BigRational> {
    let tuples: u64 = sizes.iter().map(|&n| n as u64).product();
    let law = SuccessLaw::exact_rational(sizes, functional, cap)?;
    Ok(law.into_iter().fold(BigRational::zero(), |acc, (c, p)| {
        acc + p * BigRational::new(c.into(), tuples.into())
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::to_f64;
    use proptest::prelude::*;

    fn pools(v: &[&[f64]]) -> Vec<SamplePool> {
        v.iter().map(|s| SamplePool::new(s.to_vec()).unwrap()).collect()
    }

    #[test]
    fn protocol_examples() {
        let p = protocol_of_samples(&pools(&[&[2.5, 6.3, 1.0], &[0.5, 4.7], &[3.1, 0.2, 5.2]]))
            .unwrap();
        assert_eq!(p.one_based(), vec![3, 2, 1, 1, 3, 2, 3, 1]);
        assert_eq!(p.to_string(), "(3,2,1,1,3,2,3,1)");
        let p = protocol_of_samples(&pools(&[&[1.0], &[2.0]])).unwrap();
        assert_eq!(p.one_based(), vec![1, 2]);
        let p = protocol_of_samples(&pools(&[&[1.0, 3.0], &[2.0, 4.0]])).unwrap();
        assert_eq!(p.two_sample_counts().unwrap(), vec![0, 1, 1]);
        assert_eq!(Protocol::from_two_sample_counts(&[0, 1, 1]), p);
        assert!(matches!(
            protocol_of_samples(&pools(&[&[1.0], &[1.0]])),
            Err(Error::TiedValues(_))
        ));
    }

    #[test]
    fn enumeration_examples() {
        let all = enumerate_protocols(&[1, 1], 100).unwrap();
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|(_, p)| *p == BigRational::new(1.into(), 2.into())));
        let all = enumerate_protocols(&[2, 1], 100).unwrap();
        assert_eq!(all.len(), 3);
        assert!(all.iter().all(|(_, p)| *p == BigRational::new(1.into(), 3.into())));
        for sizes in [vec![3, 3, 3], vec![2, 1, 4], vec![4, 4]] {
            let all = enumerate_protocols(&sizes, 1_000_000).unwrap();
            assert_eq!(all.len() as u128, protocol_count(&sizes));
            let total = all.iter().fold(BigRational::zero(), |a, (_, p)| a + p);
            assert_eq!(total, BigRational::one());
        }
        assert!(matches!(
            enumerate_protocols(&[9, 9, 3], DEFAULT_PROTOCOL_CAP),
            Err(Error::CapExceeded { .. })
        ));
    }

    #[test]
    fn success_fraction_examples() {
        let below = Protocol::from_labels(vec![1, 1, 0, 0]);
        assert_eq!(success_fraction(&below, Functional::MinSelection, 2), BigRational::one());
        let p = Protocol::from_labels(vec![0, 1]);
        assert_eq!(success_fraction(&p, Functional::MinSelection, 2), BigRational::zero());
        let mut hits = 0;
        visit_protocols(&[1, 1, 1], 10, |p| {
            let f = success_fraction(p, Functional::Ordering, 3);
            if p.labels() == [0, 1, 2] {
                assert_eq!(f, BigRational::one());
                hits += 1;
            } else {
                assert_eq!(f, BigRational::zero());
            }
        })
        .unwrap();
        assert_eq!(hits, 1);
    }

    #[test]
    fn success_fraction_matches_direct_count() {
        let samples = pools(&[&[0.3, 2.0, 1.1], &[0.7, 0.1], &[1.5, 0.05, 0.9]]);
        let p = protocol_of_samples(&samples).unwrap();
        for f in [Functional::MinSelection, Functional::Ordering] {
            let mut n = 0;
            for a in samples[0].values() {
                for b in samples[1].values() {
                    for c in samples[2].values() {
                        n += f.eval(&[*a, *b, *c]) as u64;
                    }
                }
            }
            assert_eq!(success_count(&p, f, 3), n, "{f:?}");
        }
    }

    #[test]
    fn mean_fraction_is_theta() {
        for sizes in [vec![1, 1], vec![2, 3], vec![3, 3, 3], vec![4, 2, 3], vec![1, 4, 4]] {
            for f in [Functional::MinSelection, Functional::Ordering] {
                let mean = mean_success_fraction(&sizes, f, 1_000_000).unwrap();
                assert_eq!(mean, f.theta(sizes.len()), "{sizes:?} {f:?}");
            }
        }
    }

    #[test]
    fn upper_bound_examples() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        assert_eq!(upper_bound(&v, 0.8).unwrap(), 0.2);
        assert_eq!(upper_bound(&v, 0.95).unwrap(), f64::NEG_INFINITY);
        assert_eq!(upper_bound(&[0.3; 10], 0.7).unwrap(), 0.3);
        assert_eq!(order_index(0.7, 10), 3);
        assert_eq!(order_index(0.9, 10), 1);
    }

    #[test]
    fn degenerate_coverage_is_one_half() {
        for r in [1, 5, 20] {
            for gamma in [0.05, 0.5, 0.9] {
                let c = CoverageConfig::new(vec![1, 1], gamma, r, Functional::MinSelection).unwrap();
                let rep = actual_coverage(&c, CoverageMode::Exact { cap: 100 }).unwrap();
                let expect = if c.k() == 0 { 1.0 } else { 0.5 };
                assert!((rep.coverage - expect).abs() < 1e-15, "r={r} γ={gamma}");
            }
        }
    }

    #[test]
    fn exact_matches_simulation() {
        for r in [10, 20] {
            let c = CoverageConfig::new(vec![3, 3, 3], 0.9, r, Functional::MinSelection).unwrap();
            let exact = actual_coverage(&c, CoverageMode::Exact { cap: 100_000 }).unwrap();
            let sim = simulate_coverage(&c, 20_000, 5).unwrap();
            assert!(
                (exact.coverage - sim.coverage).abs() < 3.0 * sim.std_error,
                "r={r}: {} vs {} ± {}",
                exact.coverage,
                sim.coverage,
                sim.std_error
            );
        }
    }

    #[test]
    fn sampled_law_tracks_exact_law() {
        let exact = SuccessLaw::exact(&[3, 3, 3], Functional::Ordering, 100_000).unwrap();
        let sampled = SuccessLaw::sampled(&[3, 3, 3], Functional::Ordering, 200_000, 1).unwrap();
        let (a, _) = exact.coverage(25, 0.8, 1).unwrap();
        let (b, se) = sampled.coverage(25, 0.8, 1).unwrap();
        assert!((a - b).abs() < 4.0 * se, "{a} vs {b} ± {se}");
        assert!((sampled.mean_fraction() - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn batched_single_draw_agrees() {
        let law = SuccessLaw::exact(&[2, 2, 2], Functional::MinSelection, 1000).unwrap();
        let c = CoverageConfig {
            batch: 3,
            ..CoverageConfig::new(vec![2, 2, 2], 0.8, 15, Functional::MinSelection).unwrap()
        };
        let exact = law.coverage(15, 0.8, 3).unwrap().0;
        let sim = simulate_coverage(&c, 20_000, 8).unwrap();
        assert!((exact - sim.coverage).abs() < 3.0 * sim.std_error);
    }

    #[test]
    fn coverage_rises_with_gamma() {
        let law = SuccessLaw::exact(&[3, 3, 3], Functional::MinSelection, 100_000).unwrap();
        for r in [10, 37, 80] {
            let rs: Vec<f64> = [0.5, 0.6, 0.7, 0.8, 0.9]
                .iter()
                .map(|&g| law.coverage(r, g, 1).unwrap().0)
                .collect();
            assert!(rs.windows(2).all(|w| w[0] <= w[1] + 1e-12), "r={r}: {rs:?}");
        }
        let theta = to_f64(&Functional::Ordering.theta(3));
        assert!((theta - 1.0 / 6.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn success_fraction_is_rank_invariant(
            vals in prop::collection::vec(0.0f64..100.0, 7),
            split in 1usize..3,
        ) {
            let mut v = vals.clone();
            v.sort_by(f64::total_cmp);
            v.dedup();
            prop_assume!(v.len() == vals.len());
            let h = [&vals[..split], &vals[split..split + 2], &vals[split + 2..]];
            let a = protocol_of_samples(&pools(&h)).unwrap();
            let t: Vec<Vec<f64>> = h.iter().map(|s| s.iter().map(|x| (x * 0.5).exp() - 3.0).collect()).collect();
            let tp: Vec<&[f64]> = t.iter().map(|s| s.as_slice()).collect();
            let b = protocol_of_samples(&pools(&tp)).unwrap();
            for f in [Functional::MinSelection, Functional::Ordering] {
                prop_assert_eq!(success_fraction(&a, f, 3), success_fraction(&b, f, 3));
            }
        }
    }
}
