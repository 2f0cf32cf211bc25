//! Samples, input laws, and calculation trees.

mod distribution;
mod parse;
mod scalar;
mod tree;

pub use distribution::{DistributionSpec, LawKind};
pub use parse::parse_tree;
pub use scalar::{exact, to_f64, Scalar};
pub use tree::{apply_node, build_tree, CalcTree, NodeId, NodeKind, TreeNode, TreeSpec};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Observed i.i.d. sample for one input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePool {
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source: Option<DistributionSpec>,
}

impl SamplePool {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample values must be finite".into(),
            ));
        }
        Ok(Self {
            values,
            source: None,
        })
    }

    pub fn with_source(mut self, source: DistributionSpec) -> Self {
        self.source = Some(source);
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn source(&self) -> Option<&DistributionSpec> {
        self.source.as_ref()
    }

    /// Empirical law of the pool.
    pub fn empirical(&self) -> DistributionSpec {
        DistributionSpec::empirical(self.values.clone()).expect("pool is non-empty and finite")
    }
}

/// `n` i.i.d. draws from `dist`.
pub fn draw_sample<R: Rng + ?Sized>(
    dist: &DistributionSpec,
    n: usize,
    rng: &mut R,
) -> Result<SamplePool> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be >= 1".into()));
    }
    let values: Vec<f64> = (0..n).map(|_| dist.sample(rng)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidDistribution(
            "law produced a non-finite draw; pools must be finite".into(),
        ));
    }
    Ok(SamplePool {
        values,
        source: Some(dist.clone()),
    })
}
