//! Resampling estimation of expectations of functions of independent random
//! inputs observed only through samples.
//!
//! * [`estimator`]: simple and hierarchical resampling, plug-in, and
//!   block-reliability estimators.
//! * [`variance`]: exact estimator variance through the omega-pair
//!   decomposition, a level-wise version for hierarchical resampling, and a
//!   brute-force enumeration oracle.
//! * [`optimizer`]: integer sample-size allocation under a linear budget by
//!   dynamic programming over the psi recursion.
//! * [`partial`]: estimators when some inputs have known laws.
//! * [`coverage`]: upper confidence bounds from resampling realizations and
//!   their exact coverage via rank protocols.
//! * [`scenarios`]: ready-made models (process times, query latency, storage
//!   reliability, process selection).

pub mod choice;
pub mod config;
pub mod coverage;
mod error;
pub mod estimator;
pub mod model;
pub mod optimizer;
pub mod partial;
pub mod reproduce;
pub mod scenarios;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use model::{CalcTree, DistributionSpec, SamplePool};
