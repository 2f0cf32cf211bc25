use num_rational::BigRational;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use super::scalar::exact;
use crate::error::{Error, Result};

/// Wire form of a law; validated into [`DistributionSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LawKind {
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Empirical { sample: Vec<f64> },
}

/// A known or synthetic input law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawKind", into = "LawKind")]
pub struct DistributionSpec {
    kind: LawKind,
}

impl TryFrom<LawKind> for DistributionSpec {
    type Error = Error;

    fn try_from(kind: LawKind) -> Result<Self> {
        match kind {
            LawKind::Exponential { rate } => Self::exponential(rate),
            LawKind::Uniform { lo, hi } => Self::uniform(lo, hi),
            LawKind::Discrete { values, probs } => Self::discrete(values, probs),
            LawKind::Empirical { sample } => Self::empirical(sample),
        }
    }
}

impl From<DistributionSpec> for LawKind {
    fn from(d: DistributionSpec) -> Self {
        d.kind
    }
}

const PROB_SUM_TOL: f64 = 1e-12;

impl DistributionSpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "exponential rate must be finite and > 0, got {rate}"
            )));
        }
        Ok(Self {
            kind: LawKind::Exponential { rate },
        })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidDistribution(format!(
                "uniform needs finite lo < hi, got ({lo}, {hi})"
            )));
        }
        Ok(Self {
            kind: LawKind::Uniform { lo, hi },
        })
    }

    /// Finite-discrete law. Values may be infinite (e.g. a component that never
    /// fails), but not NaN.
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(Error::InvalidDistribution(
                "discrete law needs matching, non-empty value and probability lists".into(),
            ));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidDistribution("discrete value is NaN".into()));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(
                "discrete probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "discrete probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self {
            kind: LawKind::Discrete { values, probs },
        })
    }

    /// Point mass at `value`.
    pub fn point(value: f64) -> Result<Self> {
        Self::discrete(vec![value], vec![1.0])
    }

    /// Two equiprobable atoms.
    pub fn two_point(a: f64, b: f64) -> Result<Self> {
        Self::discrete(vec![a, b], vec![0.5, 0.5])
    }

    pub fn empirical(mut sample: Vec<f64>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if sample.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDistribution(
                "empirical sample must be finite".into(),
            ));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self {
            kind: LawKind::Empirical { sample },
        })
    }

    pub fn kind(&self) -> &LawKind {
        &self.kind
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => 1.0 / rate,
            LawKind::Uniform { lo, hi } => 0.5 * (lo + hi),
            LawKind::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, p)| v * p)
                .sum(),
            LawKind::Empirical { sample } => sample.iter().sum::<f64>() / sample.len() as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => 1.0 / (rate * rate),
            LawKind::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            LawKind::Discrete { values, probs } => {
                let mu = self.mean();
                values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(v, p)| p * (v - mu).powi(2))
                    .sum()
            }
            LawKind::Empirical { sample } => {
                let mu = self.mean();
                sample.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / sample.len() as f64
            }
        }
    }

    /// Right-continuous distribution function `P{X <= x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            LawKind::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            LawKind::Discrete { values, probs } => {
                let c: f64 = values
                    .iter()
                    .zip(probs)
                    .filter(|(v, _)| **v <= x)
                    .map(|(_, p)| *p)
                    .sum();
                c.min(1.0)
            }
            LawKind::Empirical { sample } => {
                let k = sample.partition_point(|v| *v <= x);
                k as f64 / sample.len() as f64
            }
        }
    }

    /// `P{X > x} = 1 - F(x)`.
    pub fn survival(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Generalized inverse `inf{x : F(x) >= u}` for `u` in (0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => -(-u).ln_1p() / rate,
            LawKind::Uniform { lo, hi } => lo + u * (hi - lo),
            LawKind::Discrete { .. } | LawKind::Empirical { .. } => {
                let support = self.finite_support().unwrap_or_default();
                let mut acc = 0.0;
                for (v, p) in &support {
                    acc += p;
                    if acc >= u {
                        return *v;
                    }
                }
                support.last().map(|(v, _)| *v).unwrap_or(f64::NAN)
            }
        }
    }

    pub fn is_finite_support(&self) -> bool {
        matches!(
            self.kind,
            LawKind::Discrete { .. } | LawKind::Empirical { .. }
        )
    }

    /// Atoms with positive probability, ascending by value, duplicates merged.
    pub fn finite_support(&self) -> Option<Vec<(f64, f64)>> {
        let mut atoms: Vec<(f64, f64)> = match &self.kind {
            LawKind::Discrete { values, probs } => values
                .iter()
                .zip(probs)
                .filter(|(_, p)| **p > 0.0)
                .map(|(v, p)| (*v, *p))
                .collect(),
            LawKind::Empirical { sample } => {
                let w = 1.0 / sample.len() as f64;
                sample.iter().map(|v| (*v, w)).collect()
            }
            _ => return None,
        };
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        Some(merged)
    }

    /// Exact rational atoms. Probabilities of an empirical law are `count / n`
    /// exactly; discrete probabilities are taken at their binary float value.
    /// `None` for continuous laws or infinite atoms.
    pub fn exact_support(&self) -> Option<Vec<(BigRational, BigRational)>> {
        match &self.kind {
            LawKind::Discrete { values, probs } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return None;
                }
                let mut atoms: Vec<(BigRational, BigRational)> = Vec::new();
                let mut pairs: Vec<(f64, f64)> = values
                    .iter()
                    .zip(probs)
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(v, p)| (*v, *p))
                    .collect();
                pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
                for (v, p) in pairs {
                    let (v, p) = (exact(v), exact(p));
                    match atoms.last_mut() {
                        Some(last) if last.0 == v => last.1 += p,
                        _ => atoms.push((v, p)),
                    }
                }
                Some(atoms)
            }
            LawKind::Empirical { sample } => {
                let n = sample.len();
                let mut atoms: Vec<(BigRational, BigRational)> = Vec::new();
                let mut i = 0;
                while i < n {
                    let mut j = i;
                    while j < n && sample[j] == sample[i] {
                        j += 1;
                    }
                    atoms.push((
                        exact(sample[i]),
                        BigRational::new(((j - i) as i64).into(), (n as i64).into()),
                    ));
                    i = j;
                }
                Some(atoms)
            }
            _ => None,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            LawKind::Exponential { rate } => Exp::new(*rate).expect("validated rate").sample(rng),
            LawKind::Uniform { lo, hi } => rng.gen_range(*lo..*hi),
            LawKind::Discrete { values, probs } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                // u landed in the rounding gap above the last cumulative sum
                values
                    .iter()
                    .zip(probs)
                    .rev()
                    .find(|(_, p)| **p > 0.0)
                    .map(|(v, _)| *v)
                    .unwrap_or(values[0])
            }
            LawKind::Empirical { sample } => sample[rng.gen_range(0..sample.len())],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(DistributionSpec::exponential(0.0).is_err());
        assert!(DistributionSpec::uniform(1.0, 1.0).is_err());
        assert!(DistributionSpec::discrete(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(DistributionSpec::empirical(vec![]).is_err());
    }

    #[test]
    fn moments() {
        let e = DistributionSpec::exponential(2.0).unwrap();
        assert_eq!(e.mean(), 0.5);
        assert_eq!(e.variance(), 0.25);
        let d = DistributionSpec::two_point(0.0, 2.0).unwrap();
        assert_eq!(d.mean(), 1.0);
        assert_eq!(d.variance(), 1.0);
        let u = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert!((u.variance() - 1.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_cdf_is_right_continuous() {
        let d = DistributionSpec::empirical(vec![3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(d.cdf(0.99), 0.0);
        assert_eq!(d.cdf(1.0), 0.25);
        assert_eq!(d.cdf(2.0), 0.75);
        assert_eq!(d.cdf(3.0), 1.0);
        let atoms = d.finite_support().unwrap();
        assert_eq!(atoms, vec![(1.0, 0.25), (2.0, 0.5), (3.0, 0.25)]);
    }

    #[test]
    fn serde_validates() {
        let ok: DistributionSpec =
            serde_json::from_str(r#"{"kind":"exponential","rate":0.5}"#).unwrap();
        assert_eq!(ok.mean(), 2.0);
        let bad = serde_json::from_str::<DistributionSpec>(r#"{"kind":"uniform","lo":2,"hi":1}"#);
        assert!(bad.is_err());
    }

    fn any_law() -> impl Strategy<Value = DistributionSpec> {
        prop_oneof![
            (0.01f64..10.0).prop_map(|r| DistributionSpec::exponential(r).unwrap()),
            (-5.0f64..5.0, 0.01f64..5.0)
                .prop_map(|(lo, w)| DistributionSpec::uniform(lo, lo + w).unwrap()),
            proptest::collection::vec(-10.0f64..10.0, 1..8)
                .prop_map(|s| DistributionSpec::empirical(s).unwrap()),
            (-5.0f64..5.0, -5.0f64..5.0)
                .prop_map(|(a, b)| DistributionSpec::two_point(a, b).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn survival_complements_cdf(law in any_law(), x in -20.0f64..20.0) {
            prop_assert_eq!(law.survival(x) + law.cdf(x), 1.0);
        }

        #[test]
        fn cdf_is_monotone(law in any_law(), a in -20.0f64..20.0, b in -20.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(law.cdf(lo) <= law.cdf(hi));
        }
    }
}
