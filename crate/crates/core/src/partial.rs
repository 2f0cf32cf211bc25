//! Estimation when some inputs have known laws.
//!
//! The inputs of the tree split into unknown inputs `X`, observed through
//! pools, and known inputs `Z`, given by their laws. With a closed form for
//! `E[φ | X = x]` the estimator averages it over resampled `X`
//! ([`estimate_known_subfunction`]). Without one, every resampled `X` is
//! paired with `N` simulated `Z` vectors ([`estimate_simulated_subfunction`]).

use serde::Serialize;

use crate::choice::{ChoiceSource, SplitSource};
use crate::error::{Error, Result};
use crate::estimator::{EstimateReport, Method};
use crate::model::{CalcTree, DistributionSpec, NodeKind, SamplePool};
use crate::stats::RunningMoments;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    Pool(SamplePool),
    Known(DistributionSpec),
}

/// Closed forms of `E[φ | X]` recognized in the tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    /// `1{min{max{X1, Z1}, X2, Z2, X3 + Z3} > t}`; fields hold tree input
    /// indices.
    QueryMinIndicator {
        t: f64,
        x: [usize; 3],
        z: [usize; 3],
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialModel {
    tree: CalcTree,
    inputs: Vec<InputSource>,
    unknown: Vec<usize>,
    known: Vec<usize>,
    closed_form: Option<ClosedForm>,
}

impl PartialModel {
    pub fn new(tree: CalcTree, inputs: Vec<InputSource>) -> Result<Self> {
        if inputs.len() != tree.arity() {
            return Err(Error::ArityMismatch {
                expected: tree.arity(),
                got: inputs.len(),
            });
        }
        let unknown = (0..inputs.len())
            .filter(|&i| matches!(inputs[i], InputSource::Pool(_)))
            .collect();
        let known = (0..inputs.len())
            .filter(|&i| matches!(inputs[i], InputSource::Known(_)))
            .collect();
        let mut model = Self {
            tree,
            inputs,
            unknown,
            known,
            closed_form: None,
        };
        model.closed_form = model.detect_closed_form();
        Ok(model)
    }

    /// Query model `1{min{max{X'1, X'2}, X'3, X'4, X'5 + X'6} > t}` with
    /// pools for `X'1, X'3, X'5` and laws for `X'2, X'4, X'6`.
    pub fn hier_query(pools: [SamplePool; 3], laws: [DistributionSpec; 3], t: f64) -> Result<Self> {
        let tree = CalcTree::parse(&format!(
            "gt[t={t}](min(max(x1, x2), x3, x4, sum(x5, x6)))"
        ))?;
        let [h1, h3, h5] = pools;
        let [f2, f4, f6] = laws;
        Self::new(
            tree,
            vec![
                InputSource::Pool(h1),
                InputSource::Known(f2),
                InputSource::Pool(h3),
                InputSource::Known(f4),
                InputSource::Pool(h5),
                InputSource::Known(f6),
            ],
        )
    }

    pub fn tree(&self) -> &CalcTree {
        &self.tree
    }

    pub fn inputs(&self) -> &[InputSource] {
        &self.inputs
    }

    /// Tree input indices of the pooled inputs, in order.
    pub fn unknown_inputs(&self) -> &[usize] {
        &self.unknown
    }

    pub fn known_inputs(&self) -> &[usize] {
        &self.known
    }

    pub fn closed_form(&self) -> Option<ClosedForm> {
        self.closed_form
    }

    fn pool(&self, i: usize) -> &SamplePool {
        match &self.inputs[i] {
            InputSource::Pool(p) => p,
            InputSource::Known(_) => unreachable!("input {i} is known"),
        }
    }

    fn law(&self, i: usize) -> &DistributionSpec {
        match &self.inputs[i] {
            InputSource::Known(l) => l,
            InputSource::Pool(_) => unreachable!("input {i} is pooled"),
        }
    }

    fn detect_closed_form(&self) -> Option<ClosedForm> {
        let tree = &self.tree;
        let root = tree.node(tree.root());
        let NodeKind::IndicatorGreater { t } = root.kind else {
            return None;
        };
        let min = tree.node(root.children[0]);
        if min.kind != NodeKind::Min || min.children.len() != 4 {
            return None;
        }
        let leaf = |id: usize| match tree.node(id).kind {
            NodeKind::Leaf { input } => Some(input),
            _ => None,
        };
        let is_pool = |i: usize| matches!(self.inputs[i], InputSource::Pool(_));
        // pair of leaves under `kind`, returned as (pooled, known)
        let split = |id: usize, kind: NodeKind| -> Option<(usize, usize)> {
            let n = tree.node(id);
            if n.kind != kind || n.children.len() != 2 {
                return None;
            }
            let (a, b) = (leaf(n.children[0])?, leaf(n.children[1])?);
            match (is_pool(a), is_pool(b)) {
                (true, false) => Some((a, b)),
                (false, true) => Some((b, a)),
                _ => None,
            }
        };
        let c = &min.children;
        let (x1, z1) = split(c[0], NodeKind::Max)?;
        let x2 = leaf(c[1]).filter(|&i| is_pool(i))?;
        let z2 = leaf(c[2]).filter(|&i| !is_pool(i))?;
        let (x3, z3) = split(c[3], NodeKind::Sum)?;
        // the closed form drops the sum factor once X3 > t, which needs Z3 >= 0
        if self.law(z3).cdf(-f64::MIN_POSITIVE) > 0.0 {
            return None;
        }
        Some(ClosedForm::QueryMinIndicator {
            t,
            x: [x1, x2, x3],
            z: [z1, z2, z3],
        })
    }

    fn full_point(&self, x: &[f64], z: &[f64]) -> Vec<f64> {
        let mut point = vec![0.0; self.inputs.len()];
        for (&i, &v) in self.unknown.iter().zip(x) {
            point[i] = v;
        }
        for (&i, &v) in self.known.iter().zip(z) {
            point[i] = v;
        }
        point
    }
}

/// `E[φ | X = x]`, with `x` listed in the order of
/// [`PartialModel::unknown_inputs`].
pub fn conditional_expectation(model: &PartialModel, x: &[f64]) -> Result<f64> {
    if x.len() != model.unknown.len() {
        return Err(Error::ArityMismatch {
            expected: model.unknown.len(),
            got: x.len(),
        });
    }
    if model.known.is_empty() {
        return Ok(model.tree.eval_unchecked(x));
    }
    match model.closed_form {
        Some(ClosedForm::QueryMinIndicator { t, x: xi, z }) => {
            let value_of = |input: usize| x[model.unknown.iter().position(|&u| u == input).unwrap()];
            let (x1, x2, x3) = (value_of(xi[0]), value_of(xi[1]), value_of(xi[2]));
            let f2 = model.law(z[0]).survival(t);
            let f4 = model.law(z[1]).survival(t);
            let f6 = model.law(z[2]).survival(t - x3);
            Ok(match (x2 > t, x1 > t, x3 > t) {
                (false, _, _) => 0.0,
                (true, false, false) => f2 * f4 * f6,
                (true, true, false) => f4 * f6,
                (true, false, true) => f2 * f4,
                (true, true, true) => f4,
            })
        }
        None => Err(Error::Unsupported(
            "no closed form for this functional; use the simulated-subfunction estimator".into(),
        )),
    }
}

fn check_r(r: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("r must be >= 1".into()));
    }
    Ok(())
}

fn draw_x<S: ChoiceSource + ?Sized>(model: &PartialModel, x: &mut [f64], src: &mut S) {
    for (xi, &i) in x.iter_mut().zip(&model.unknown) {
        let pool = model.pool(i);
        *xi = pool.values()[src.uniform_index(pool.len())];
    }
}

/// Per-draw conditional expectations.
pub fn known_subfunction_realizations_with<S: ChoiceSource + ?Sized>(
    model: &PartialModel,
    r: usize,
    src: &mut S,
) -> Result<Vec<f64>> {
    check_r(r)?;
    let mut x = vec![0.0; model.unknown.len()];
    (0..r)
        .map(|_| {
            draw_x(model, &mut x, src);
            conditional_expectation(model, &x)
        })
        .collect()
}

pub fn estimate_known_subfunction_with<S: ChoiceSource + ?Sized>(
    model: &PartialModel,
    r: usize,
    src: &mut S,
) -> Result<f64> {
    let vals = known_subfunction_realizations_with(model, r, src)?;
    Ok(vals.iter().sum::<f64>() / r as f64)
}

/// Average of `E[φ | X(l)]` over `r` resampled `X`.
pub fn estimate_known_subfunction(model: &PartialModel, r: usize, seed: u64) -> Result<EstimateReport> {
    let vals = known_subfunction_realizations_with(model, r, &mut SplitSource::new(seed))?;
    Ok(report(model, &vals, Method::KnownSubfunction, seed))
}

/// Per-draw means over the `N` replicates.
pub fn simulated_subfunction_realizations_with<S: ChoiceSource + ?Sized>(
    model: &PartialModel,
    r: usize,
    replicates: usize,
    src: &mut S,
) -> Result<Vec<f64>> {
    check_r(r)?;
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicate width N must be >= 1".into()));
    }
    let mut x = vec![0.0; model.unknown.len()];
    let mut z = vec![0.0; model.known.len()];
    Ok((0..r)
        .map(|_| {
            draw_x(model, &mut x, src);
            let mut sum = 0.0;
            for _ in 0..replicates {
                for (zj, &j) in z.iter_mut().zip(&model.known) {
                    *zj = src.draw(model.law(j));
                }
                sum += model.tree.eval_unchecked(&model.full_point(&x, &z));
            }
            sum / replicates as f64
        })
        .collect())
}

pub fn estimate_simulated_subfunction_with<S: ChoiceSource + ?Sized>(
    model: &PartialModel,
    r: usize,
    replicates: usize,
    src: &mut S,
) -> Result<f64> {
    let vals = simulated_subfunction_realizations_with(model, r, replicates, src)?;
    Ok(vals.iter().sum::<f64>() / r as f64)
}

/// `θ* = (1/(rN)) Σ_l Σ_ξ φ(X(l), Z(l, ξ))`, one `X` draw shared by the `N`
/// replicates of a realization.
pub fn estimate_simulated_subfunction(
    model: &PartialModel,
    r: usize,
    replicates: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let vals =
        simulated_subfunction_realizations_with(model, r, replicates, &mut SplitSource::new(seed))?;
    Ok(report(model, &vals, Method::SimulatedSubfunction, seed))
}

fn report(model: &PartialModel, vals: &[f64], method: Method, seed: u64) -> EstimateReport {
    let mut m = RunningMoments::default();
    vals.iter().for_each(|&v| m.push(v));
    EstimateReport {
        value: vals.iter().sum::<f64>() / vals.len() as f64,
        method,
        replications: vals.len(),
        sizes: model.unknown.iter().map(|&i| model.pool(i).len()).collect(),
        seed: Some(seed),
        std_error: Some(m.std_error()),
        variance: None,
    }
}
