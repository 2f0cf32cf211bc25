//! Model files: TOML by default, JSON when the path ends in `.json`.
//!
//! ```toml
//! tree = "kofn[k=2,t={t}](x1, x2, x3)"
//! t = 0.5
//! sizes = [10, 10, 10]
//! r = 1000
//!
//! [[laws]]
//! kind = "uniform"
//! lo = 0.0
//! hi = 1.0
//! ```
//!
//! `pools` may list observed samples instead of (or next to) `laws`; pools
//! take precedence for estimation. `known = [2, 4]` marks inputs whose laws
//! are known; `pools` then lists only the remaining inputs, in order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::choice::{stream, DATA_STREAM};
use crate::error::{Error, Result};
use crate::model::{draw_sample, CalcTree, DistributionSpec, SamplePool};
use crate::partial::{InputSource, PartialModel};
use crate::scenarios::{instantiate, ScenarioConfig, ScenarioKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub tree: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub laws: Vec<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pools: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub known: Vec<usize>,
}

impl ModelFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let file = if is_json {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(file)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Export a tree scenario.
    pub fn from_scenario(s: &ScenarioConfig) -> Result<Self> {
        match &s.kind {
            ScenarioKind::Tree {
                template,
                laws,
                sizes,
                r,
            } => Ok(Self {
                tree: template.clone(),
                t: s.t,
                laws: laws.clone(),
                pools: Vec::new(),
                sizes: sizes.clone(),
                r: Some(*r),
                known: Vec::new(),
            }),
            _ => Err(Error::Unsupported(format!(
                "scenario `{}` has no calculation tree to export",
                s.name
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tree = self.tree_at(None)?;
        let m = tree.arity();
        let mut known = self.known.clone();
        known.sort_unstable();
        known.dedup();
        if known.len() != self.known.len() || known.iter().any(|&i| i == 0 || i > m) {
            return Err(Error::Config(format!("`known` must list distinct inputs in 1..={m}")));
        }
        if !known.is_empty() && self.laws.is_empty() {
            return Err(Error::Config("`known` inputs need `laws`".into()));
        }
        let unknown = m - known.len();
        for (what, len, want) in [
            ("laws", self.laws.len(), m),
            ("pools", self.pools.len(), unknown),
            ("sizes", self.sizes.len(), unknown),
        ] {
            if len != 0 && len != want {
                return Err(Error::Config(format!("`{what}` has {len} entries, expected {want}")));
            }
        }
        if self.laws.is_empty() && self.pools.is_empty() {
            return Err(Error::Config("give `laws`, `pools`, or both".into()));
        }
        Ok(())
    }

    pub fn tree_at(&self, t: Option<f64>) -> Result<CalcTree> {
        instantiate(&self.tree, t.or(self.t))
    }

    /// 0-based inputs observed through pools.
    pub fn unknown_inputs(&self) -> Vec<usize> {
        let m = self.laws.len().max(self.pools.len() + self.known.len());
        (0..m).filter(|i| !self.known.contains(&(i + 1))).collect()
    }

    /// Observed pools, or pools drawn from the laws on the data stream of
    /// `seed` with `sizes` (default: the file's sizes).
    pub fn input_pools(&self, sizes: Option<&[usize]>, seed: Option<u64>) -> Result<Vec<SamplePool>> {
        if let Some(pools) = self.observed_pools()? {
            return Ok(pools);
        }
        let sizes = sizes.unwrap_or(&self.sizes);
        let unknown = self.unknown_inputs();
        if sizes.len() != unknown.len() {
            return Err(Error::Config(format!(
                "drawing synthetic pools needs {} sizes, got {}",
                unknown.len(),
                sizes.len()
            )));
        }
        let seed = seed.ok_or_else(|| Error::Config("synthetic pools need a seed".into()))?;
        let mut rng = stream(seed, DATA_STREAM);
        unknown
            .iter()
            .zip(sizes)
            .map(|(&i, &n)| draw_sample(&self.laws[i], n, &mut rng))
            .collect()
    }

    pub fn partial_model(&self, pools: Vec<SamplePool>, t: Option<f64>) -> Result<PartialModel> {
        if self.known.is_empty() {
            return Err(Error::Config("partial estimation needs `known` inputs".into()));
        }
        let mut pools = pools.into_iter();
        let inputs = (0..self.laws.len())
            .map(|i| {
                if self.known.contains(&(i + 1)) {
                    Ok(InputSource::Known(self.laws[i].clone()))
                } else {
                    pools.next().map(InputSource::Pool).ok_or(Error::ArityMismatch {
                        expected: self.laws.len() - self.known.len(),
                        got: i,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        PartialModel::new(self.tree_at(t)?, inputs)
    }

    /// Observed pools, if the file lists them.
    pub fn observed_pools(&self) -> Result<Option<Vec<SamplePool>>> {
        if self.pools.is_empty() {
            return Ok(None);
        }
        self.pools
            .iter()
            .map(|p| SamplePool::new(p.clone()))
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}
