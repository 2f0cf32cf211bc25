use resamplex::config::ModelFile;
use resamplex::coverage::Functional;
use resamplex::estimator::BlockSystem;
use resamplex::partial::PartialModel;
use resamplex::scenarios::{load_scenario, ScenarioConfig, ScenarioKind};
use resamplex::{CalcTree, DistributionSpec, SamplePool};

use crate::args::ModelArgs;
use crate::CliError;

/// A scenario or a model file, seen uniformly by the commands.
pub enum Model {
    Scenario(ScenarioConfig),
    File(ModelFile),
}

pub enum Shape {
    Tree,
    Blocks,
    Partial { replicates: usize },
    Coverage {
        functional: Functional,
        gamma: f64,
    },
}

impl Model {
    pub fn load(args: &ModelArgs) -> Result<Self, CliError> {
        match (&args.scenario, &args.config) {
            (Some(name), _) => Ok(Model::Scenario(load_scenario(name).map_err(CliError::usage)?)),
            (None, Some(path)) => Ok(Model::File(ModelFile::from_path(path).map_err(CliError::usage)?)),
            (None, None) => Err(CliError::Usage("give --scenario or --config".into())),
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            Model::Scenario(s) => match &s.kind {
                ScenarioKind::Tree { .. } => Shape::Tree,
                ScenarioKind::Blocks { .. } => Shape::Blocks,
                ScenarioKind::Partial { replicates, .. } => Shape::Partial {
                    replicates: *replicates,
                },
                ScenarioKind::Coverage {
                    functional, gamma, ..
                } => Shape::Coverage {
                    functional: *functional,
                    gamma: *gamma,
                },
            },
            Model::File(f) if f.known.is_empty() => Shape::Tree,
            Model::File(_) => Shape::Partial { replicates: 1 },
        }
    }

    /// Whether the model has a threshold parameter.
    pub fn uses_t(&self) -> bool {
        match self {
            Model::Scenario(s) => match &s.kind {
                ScenarioKind::Tree { template, .. } => template.contains("{t}"),
                ScenarioKind::Blocks { .. } | ScenarioKind::Partial { .. } => true,
                ScenarioKind::Coverage { .. } => false,
            },
            Model::File(f) => f.tree.contains("{t}"),
        }
    }

    pub fn default_t(&self) -> Option<f64> {
        match self {
            Model::Scenario(s) => s.t,
            Model::File(f) => f.t,
        }
    }

    /// Thresholds to evaluate at: the grid, the single `--t`, or the default.
    pub fn thresholds(&self, args: &ModelArgs) -> Result<Vec<Option<f64>>, CliError> {
        let given = args.t.is_some() || args.t_grid.is_some();
        if given && !self.uses_t() {
            return Err(CliError::Usage("this model has no threshold t".into()));
        }
        let ts: Vec<Option<f64>> = match (&args.t_grid, args.t) {
            (Some(grid), _) => grid.iter().map(|&t| Some(t)).collect(),
            (None, Some(t)) => vec![Some(t)],
            (None, None) => vec![self.default_t()],
        };
        if self.uses_t() && ts.iter().any(Option::is_none) {
            return Err(CliError::Usage("this model needs a threshold: pass --t".into()));
        }
        Ok(ts)
    }

    pub fn tree(&self, t: Option<f64>) -> Result<CalcTree, CliError> {
        Ok(match self {
            Model::Scenario(s) => s.tree_at(t)?,
            Model::File(f) => f.tree_at(t)?,
        })
    }

    pub fn laws(&self) -> Result<Vec<DistributionSpec>, CliError> {
        let laws = match self {
            Model::Scenario(s) => s.laws(),
            Model::File(f) => f.laws.clone(),
        };
        if laws.is_empty() {
            return Err(CliError::Usage("this command needs input laws in the model".into()));
        }
        Ok(laws)
    }

    pub fn default_sizes(&self) -> Vec<usize> {
        match self {
            Model::Scenario(s) => s.sizes(),
            Model::File(f) => f.sizes.clone(),
        }
    }

    pub fn default_r(&self, r: Option<usize>) -> Result<usize, CliError> {
        match (r, self) {
            (Some(r), _) => Ok(r),
            (None, Model::Scenario(s)) => Ok(s.r()),
            (None, Model::File(f)) => f
                .r
                .ok_or_else(|| CliError::Usage("the model file sets no r: pass --r".into())),
        }
    }

    /// Whether pools come from data rather than a seeded draw.
    pub fn observed(&self) -> bool {
        matches!(self, Model::File(f) if !f.pools.is_empty())
    }

    pub fn pools(&self, sizes: Option<&[usize]>, seed: Option<u64>) -> Result<Vec<SamplePool>, CliError> {
        match self {
            Model::Scenario(s) => s.synthetic_pools(sizes, require_seed(seed)?).map_err(Into::into),
            Model::File(f) => {
                if f.pools.is_empty() {
                    require_seed(seed)?;
                }
                f.input_pools(sizes, seed).map_err(Into::into)
            }
        }
    }

    pub fn block_system(&self, pools: Vec<SamplePool>) -> Result<BlockSystem, CliError> {
        match self {
            Model::Scenario(s) => Ok(s.block_system(pools)?),
            Model::File(_) => Err(CliError::Usage("model files describe trees, not block systems".into())),
        }
    }

    pub fn partial_model(&self, pools: Vec<SamplePool>, t: Option<f64>) -> Result<PartialModel, CliError> {
        Ok(match self {
            Model::Scenario(s) => s.partial_model(pools, t)?,
            Model::File(f) => f.partial_model(pools, t)?,
        })
    }
}

pub fn require_seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| CliError::Usage("this command is randomized: pass --seed".into()))
}
