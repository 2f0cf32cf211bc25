//! Ready-made models of computing systems.
//!
//! Trees that depend on a time threshold are stored as templates with a
//! `{t}` placeholder and instantiated by [`ScenarioConfig::tree_at`].

use serde::Serialize;

use crate::choice::{stream, DATA_STREAM};
use crate::coverage::Functional;
use crate::error::{Error, Result};
use crate::estimator::BlockSystem;
use crate::model::{draw_sample, CalcTree, DistributionSpec, SamplePool};
use crate::partial::PartialModel;

/// Exponential rates used by the query scenarios.
pub const QUERY_RATES: [f64; 6] = [0.1, 0.7, 0.2, 0.4, 0.8, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum ScenarioKind {
    /// Estimation of `E φ(X)` over a calculation tree.
    Tree {
        template: String,
        laws: Vec<DistributionSpec>,
        sizes: Vec<usize>,
        r: usize,
    },
    /// Blocks of parallel subqueries, one pool per block.
    Blocks {
        laws: Vec<DistributionSpec>,
        multiplicities: Vec<usize>,
        sizes: Vec<usize>,
        r: usize,
    },
    /// Query indicator with some subquery laws known.
    Partial {
        unknown_laws: [DistributionSpec; 3],
        known_laws: [DistributionSpec; 3],
        sizes: [usize; 3],
        r: usize,
        replicates: usize,
    },
    /// Coverage of a rank functional.
    Coverage {
        functional: Functional,
        sizes: Vec<usize>,
        gamma: f64,
        r: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub name: &'static str,
    /// Short topic tag.
    pub topic: &'static str,
    pub doc: &'static str,
    pub kind: ScenarioKind,
    /// Default threshold for time-indexed functionals.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub t_grid: Vec<f64>,
}

const NAMES: [&str; 9] = [
    "reaction-time",
    "sequential",
    "parallel",
    "two-of-three",
    "hier-query",
    "block-query",
    "hier-query-partial",
    "min-selection",
    "ordering",
];

fn uniform() -> DistributionSpec {
    DistributionSpec::uniform(0.0, 1.0).expect("valid")
}

fn exponential(rate: f64) -> DistributionSpec {
    DistributionSpec::exponential(rate).expect("valid")
}

fn grid(values: &[f64]) -> Vec<f64> {
    values.to_vec()
}

pub fn list_scenarios() -> Vec<(&'static str, &'static str, &'static str)> {
    NAMES
        .iter()
        .map(|n| {
            let s = load_scenario(n).expect("catalog entry");
            (s.name, s.topic, s.doc)
        })
        .collect()
}

pub fn scenario_names() -> &'static [&'static str] {
    &NAMES
}

pub fn load_scenario(name: &str) -> Result<ScenarioConfig> {
    let s = match name {
        "reaction-time" => ScenarioConfig {
            name: "reaction-time",
            topic: "simple resampling, one input",
            doc: "Mean reaction time of a system driven by one random parameter.",
            kind: ScenarioKind::Tree {
                template: "x1".into(),
                laws: vec![uniform()],
                sizes: vec![10],
                r: 50,
            },
            t: None,
            t_grid: Vec::new(),
        },
        "sequential" => ScenarioConfig {
            name: "sequential",
            topic: "simple resampling, sum",
            doc: "Mean completion time of sequential processes.",
            kind: ScenarioKind::Tree {
                template: "sum(x1, x2, x3)".into(),
                laws: vec![uniform(); 3],
                sizes: vec![10; 3],
                r: 100,
            },
            t: None,
            t_grid: Vec::new(),
        },
        "parallel" => ScenarioConfig {
            name: "parallel",
            topic: "simple resampling, max",
            doc: "Mean completion time of parallel processes.",
            kind: ScenarioKind::Tree {
                template: "max(x1, x2, x3)".into(),
                laws: vec![uniform(); 3],
                sizes: vec![10; 3],
                r: 100,
            },
            t: None,
            t_grid: Vec::new(),
        },
        "two-of-three" => ScenarioConfig {
            name: "two-of-three",
            topic: "simple resampling, storage reliability",
            doc: "Probability that at least 2 of 3 storage devices still work at time t.",
            kind: ScenarioKind::Tree {
                template: "kofn[k=2,t={t}](x1, x2, x3)".into(),
                laws: vec![uniform(); 3],
                sizes: vec![10; 3],
                r: 1000,
            },
            t: Some(0.5),
            t_grid: grid(&[0.1, 0.2, 0.3, 0.5, 0.7, 0.9]),
        },
        "hier-query" => ScenarioConfig {
            name: "hier-query",
            topic: "hierarchical resampling, query tree",
            doc: "Expected completion time of a query of 6 subqueries on 3 servers.",
            kind: ScenarioKind::Tree {
                template: "max@10(max@10(x1@10, x2@10), min@10(x3@10, x4@10), sum@10(x5@10, x6@10))"
                    .into(),
                laws: QUERY_RATES.iter().map(|&r| exponential(r)).collect(),
                sizes: vec![10; 6],
                r: 1000,
            },
            t: None,
            t_grid: Vec::new(),
        },
        "block-query" => ScenarioConfig {
            name: "block-query",
            topic: "hierarchical resampling, blocked query",
            doc: "Probability that a query over blocks of parallel subqueries runs past t.",
            kind: ScenarioKind::Blocks {
                laws: QUERY_RATES[..3].iter().map(|&r| exponential(r)).collect(),
                multiplicities: vec![2, 3, 2],
                sizes: vec![10; 3],
                r: 1000,
            },
            t: Some(1.0),
            t_grid: grid(&[0.1, 0.2, 0.3, 0.5, 0.7, 0.9, 1.0, 1.5, 2.0, 3.0]),
        },
        "hier-query-partial" => ScenarioConfig {
            name: "hier-query-partial",
            topic: "partially known distributions",
            doc: "Query indicator with subqueries 2, 4 and 6 following known laws.",
            kind: ScenarioKind::Partial {
                unknown_laws: [
                    exponential(QUERY_RATES[0]),
                    exponential(QUERY_RATES[2]),
                    exponential(QUERY_RATES[4]),
                ],
                known_laws: [
                    exponential(QUERY_RATES[1]),
                    exponential(QUERY_RATES[3]),
                    exponential(QUERY_RATES[5]),
                ],
                sizes: [10; 3],
                r: 1000,
                replicates: 4,
            },
            t: Some(1.0),
            t_grid: grid(&[0.25, 0.5, 1.0, 1.5, 2.0]),
        },
        "min-selection" => ScenarioConfig {
            name: "min-selection",
            topic: "interval estimation, correct selection",
            doc: "Coverage of the upper bound for the probability of selecting the shortest process.",
            kind: ScenarioKind::Coverage {
                functional: Functional::MinSelection,
                sizes: vec![3, 3, 3],
                gamma: 0.9,
                r: 25,
            },
            t: None,
            t_grid: Vec::new(),
        },
        "ordering" => ScenarioConfig {
            name: "ordering",
            topic: "interval estimation, correct ordering",
            doc: "Coverage of the upper bound for the probability of ordering processes correctly.",
            kind: ScenarioKind::Coverage {
                functional: Functional::Ordering,
                sizes: vec![3, 3, 3],
                gamma: 0.9,
                r: 25,
            },
            t: None,
            t_grid: Vec::new(),
        },
        _ => {
            return Err(Error::UnknownScenario {
                name: name.to_string(),
                valid: NAMES.join(", "),
            })
        }
    };
    Ok(s)
}

/// Substitute a threshold into a tree template.
pub fn instantiate(template: &str, t: Option<f64>) -> Result<CalcTree> {
    if template.contains("{t}") {
        let t = t.ok_or_else(|| Error::InvalidParameter("this tree needs a threshold t".into()))?;
        CalcTree::parse(&template.replace("{t}", &format_threshold(t)))
    } else {
        CalcTree::parse(template)
    }
}

fn format_threshold(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t:?}")
    }
}

impl ScenarioConfig {
    /// Tree at threshold `t` (the default when `None`).
    pub fn tree_at(&self, t: Option<f64>) -> Result<CalcTree> {
        match &self.kind {
            ScenarioKind::Tree { template, .. } => instantiate(template, t.or(self.t)),
            _ => Err(Error::Unsupported(format!("scenario `{}` has no calculation tree", self.name))),
        }
    }

    pub fn laws(&self) -> Vec<DistributionSpec> {
        match &self.kind {
            ScenarioKind::Tree { laws, .. } | ScenarioKind::Blocks { laws, .. } => laws.clone(),
            ScenarioKind::Partial {
                unknown_laws,
                known_laws,
                ..
            } => vec![
                unknown_laws[0].clone(),
                known_laws[0].clone(),
                unknown_laws[1].clone(),
                known_laws[1].clone(),
                unknown_laws[2].clone(),
                known_laws[2].clone(),
            ],
            ScenarioKind::Coverage { sizes, .. } => vec![uniform(); sizes.len()],
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        match &self.kind {
            ScenarioKind::Tree { sizes, .. }
            | ScenarioKind::Blocks { sizes, .. }
            | ScenarioKind::Coverage { sizes, .. } => sizes.clone(),
            ScenarioKind::Partial { sizes, .. } => sizes.to_vec(),
        }
    }

    pub fn r(&self) -> usize {
        match &self.kind {
            ScenarioKind::Tree { r, .. }
            | ScenarioKind::Blocks { r, .. }
            | ScenarioKind::Partial { r, .. }
            | ScenarioKind::Coverage { r, .. } => *r,
        }
    }

    /// Synthetic pools drawn from the scenario laws on the data stream of
    /// `seed`; `sizes` overrides the defaults.
    pub fn synthetic_pools(&self, sizes: Option<&[usize]>, seed: u64) -> Result<Vec<SamplePool>> {
        let laws = match &self.kind {
            ScenarioKind::Partial { unknown_laws, .. } => unknown_laws.to_vec(),
            _ => self.laws(),
        };
        let default = self.sizes();
        let sizes = sizes.unwrap_or(&default);
        if sizes.len() != laws.len() {
            return Err(Error::ArityMismatch {
                expected: laws.len(),
                got: sizes.len(),
            });
        }
        let mut rng = stream(seed, DATA_STREAM);
        laws.iter()
            .zip(sizes)
            .map(|(law, &n)| draw_sample(law, n, &mut rng))
            .collect()
    }

    pub fn block_system(&self, pools: Vec<SamplePool>) -> Result<BlockSystem> {
        match &self.kind {
            ScenarioKind::Blocks { multiplicities, .. } => BlockSystem::from_pools(pools, multiplicities),
            _ => Err(Error::Unsupported(format!("scenario `{}` is not a block system", self.name))),
        }
    }

    pub fn partial_model(&self, pools: Vec<SamplePool>, t: Option<f64>) -> Result<PartialModel> {
        match &self.kind {
            ScenarioKind::Partial { known_laws, .. } => {
                let t = t.or(self.t).expect("partial scenarios carry t");
                let [a, b, c]: [SamplePool; 3] = pools.try_into().map_err(|p: Vec<SamplePool>| {
                    Error::ArityMismatch {
                        expected: 3,
                        got: p.len(),
                    }
                })?;
                PartialModel::hier_query([a, b, c], known_laws.clone(), t)
            }
            _ => Err(Error::Unsupported(format!("scenario `{}` has no known inputs", self.name))),
        }
    }
}
