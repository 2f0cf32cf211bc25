//! Integer sample-size allocation under a linear budget.
//!
//! Every node `v` of the tree gets a size `n_v ≥ 1` at cost `a_v n_v`, with
//! `Σ a_v n_v ≤ b`. The variance model is the psi recursion: for a node with
//! squared partial weights `w_c` at the mean point,
//!
//! `ψ_v(α) = Σ_c w_c ψ_c(α + (1 − α)/n_v)`,  `ψ_i(α) = α σ_i² + (1 − α) Cov_i`,
//!
//! and the objective is `ψ_k(0)` at the root. In [`PsiMode::AsWritten`] the
//! advance uses the parent's size and a leaf's slot covariance is
//! `σ_i² / n_i`. [`PsiMode::ChildSize`] advances with the child's own size,
//! uses `Cov_i = 0` at leaves and reads the objective as `ψ_k(1/n_k)`; the two
//! agree at every allocation. The dynamic program works in the first form.

use std::collections::HashMap;

use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{apply_node, CalcTree, DistributionSpec, NodeId, NodeKind};

/// Exact `1 − α`.
type Beta = Ratio<i128>;

pub const FINITE_DIFFERENCE_STEP: f64 = 1e-4;
pub const DEFAULT_ZERO_WEIGHT_CAP: usize = 64;
pub const DEFAULT_MEMO_CAP: usize = 2_000_000;
pub const DEFAULT_ORACLE_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiMode {
    #[default]
    AsWritten,
    ChildSize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub tree: CalcTree,
    /// Cost `a_v` per node id.
    pub weights: Vec<u64>,
    pub budget: u64,
    /// `(μ_i, σ_i²)` per input.
    pub leaf_moments: Vec<(f64, f64)>,
    /// Largest size tried for nodes with `a_v = 0`.
    pub zero_weight_cap: usize,
    pub memo_cap: usize,
}

impl OptimizerConfig {
    pub fn new(
        tree: CalcTree,
        weights: Vec<u64>,
        budget: u64,
        leaf_moments: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if weights.len() != tree.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} node weights, got {}",
                tree.len(),
                weights.len()
            )));
        }
        if leaf_moments.len() != tree.arity() {
            return Err(Error::ArityMismatch {
                expected: tree.arity(),
                got: leaf_moments.len(),
            });
        }
        for &(m, v) in &leaf_moments {
            if !m.is_finite() || !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "leaf moments must be finite with variance >= 0, got ({m}, {v})"
                )));
            }
        }
        Ok(Self {
            tree,
            weights,
            budget,
            leaf_moments,
            zero_weight_cap: DEFAULT_ZERO_WEIGHT_CAP,
            memo_cap: DEFAULT_MEMO_CAP,
        })
    }

    /// Unit weights on every node.
    pub fn unit(tree: CalcTree, budget: u64, leaf_moments: Vec<(f64, f64)>) -> Result<Self> {
        let w = vec![1; tree.len()];
        Self::new(tree, w, budget, leaf_moments)
    }

    /// Moments taken from the input laws.
    pub fn from_laws(
        tree: CalcTree,
        weights: Vec<u64>,
        budget: u64,
        laws: &[DistributionSpec],
    ) -> Result<Self> {
        let moments = laws.iter().map(|l| (l.mean(), l.variance())).collect();
        Self::new(tree, weights, budget, moments)
    }

    /// Smallest budget admitting `n_v = 1` everywhere.
    pub fn min_budget(&self) -> u64 {
        self.weights.iter().sum()
    }

    pub fn cost(&self, sizes: &[usize]) -> u64 {
        self.weights
            .iter()
            .zip(sizes)
            .map(|(&a, &n)| a * n as u64)
            .sum()
    }

    /// Mean point `μ_v` of every node: leaves carry `μ_i`, internal nodes
    /// apply their subfunction to the children's means.
    pub fn node_means(&self) -> Vec<f64> {
        let mut means: Vec<f64> = Vec::with_capacity(self.tree.len());
        for node in self.tree.nodes() {
            let m = match node.kind {
                NodeKind::Leaf { input } => self.leaf_moments[input].0,
                ref kind => {
                    let args: Vec<f64> = node.children.iter().map(|&c| means[c]).collect();
                    apply_node(kind, &args)
                }
            };
            means.push(m);
        }
        means
    }

    /// Squared partials per node, aligned with its children.
    pub fn partial_weights(&self) -> Vec<Vec<f64>> {
        let means = self.node_means();
        self.tree
            .nodes()
            .iter()
            .map(|node| {
                if node.kind.is_leaf() {
                    Vec::new()
                } else {
                    let mu: Vec<f64> = node.children.iter().map(|&c| means[c]).collect();
                    gradient_at_mean(&node.kind, &mu)
                }
            })
            .collect()
    }
}

/// Squared partial derivatives of a node's subfunction at the child means.
/// Max and min split the weight equally among tied extreme children;
/// indicator nodes use a central difference with step
/// [`FINITE_DIFFERENCE_STEP`].
pub fn gradient_at_mean(kind: &NodeKind, mu: &[f64]) -> Vec<f64> {
    let k = mu.len();
    match kind {
        NodeKind::Leaf { .. } | NodeKind::Sum => vec![1.0; k],
        NodeKind::Max | NodeKind::Min => {
            let target = if matches!(kind, NodeKind::Max) {
                mu.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            } else {
                mu.iter().cloned().fold(f64::INFINITY, f64::min)
            };
            let ties = mu.iter().filter(|&&m| m == target).count() as f64;
            mu.iter()
                .map(|&m| if m == target { 1.0 / ties } else { 0.0 })
                .collect()
        }
        _ => (0..k)
            .map(|c| {
                let h = FINITE_DIFFERENCE_STEP;
                let mut up = mu.to_vec();
                let mut down = mu.to_vec();
                up[c] += h;
                down[c] -= h;
                let d = (apply_node(kind, &up) - apply_node(kind, &down)) / (2.0 * h);
                d * d
            })
            .collect(),
    }
}

/// `ψ_i(α) = α σ² + (1 − α) Cov`.
pub fn leaf_psi(sigma2: f64, cov: f64, alpha: f64) -> f64 {
    alpha * sigma2 + (1.0 - alpha) * cov
}

/// Weighted child term; an infeasible child stays infeasible even at weight 0.
fn term(w: f64, x: f64) -> f64 {
    if x.is_infinite() {
        x
    } else {
        w * x
    }
}

fn alpha_f64(beta: &Beta) -> f64 {
    1.0 - *beta.numer() as f64 / *beta.denom() as f64
}

/// `α ← α + (1 − α)/n`, i.e. `β ← β (n − 1)/n`.
fn advance(beta: &Beta, n: usize) -> Result<Beta> {
    let n = n as i128;
    let num = beta
        .numer()
        .checked_mul(n - 1)
        .ok_or(Error::Overflow("alpha numerator"))?;
    let den = beta
        .denom()
        .checked_mul(n)
        .ok_or(Error::Overflow("alpha denominator"))?;
    if num.is_zero() {
        return Ok(Beta::zero());
    }
    Ok(Beta::new(num, den))
}

fn beta_of_alpha(alpha: (i64, i64)) -> Result<Beta> {
    let (p, q) = alpha;
    if q <= 0 || p < 0 || p > q {
        return Err(Error::InvalidParameter(format!(
            "alpha must be a fraction in [0, 1], got {p}/{q}"
        )));
    }
    Ok(Beta::new((q - p) as i128, q as i128))
}

/// Memoized psi evaluator for a fixed allocation.
pub struct PsiTable<'a> {
    config: &'a OptimizerConfig,
    weights: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    mode: PsiMode,
    memo: HashMap<(NodeId, Beta), f64>,
}

impl<'a> PsiTable<'a> {
    pub fn new(config: &'a OptimizerConfig, sizes: &[usize], mode: PsiMode) -> Result<Self> {
        if sizes.len() != config.tree.len() || sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "need {} node sizes, all >= 1",
                config.tree.len()
            )));
        }
        Ok(Self {
            config,
            weights: config.partial_weights(),
            sizes: sizes.to_vec(),
            mode,
            memo: HashMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }

    /// `ψ_v(α)` with `α = p/q`.
    pub fn psi(&mut self, node: NodeId, alpha: (i64, i64)) -> Result<f64> {
        let beta = beta_of_alpha(alpha)?;
        self.psi_beta(node, beta)
    }

    fn psi_beta(&mut self, v: NodeId, beta: Beta) -> Result<f64> {
        if let Some(&x) = self.memo.get(&(v, beta)) {
            return Ok(x);
        }
        let node = self.config.tree.node(v);
        let value = match node.kind {
            NodeKind::Leaf { input } => {
                let s2 = self.config.leaf_moments[input].1;
                let cov = match self.mode {
                    PsiMode::AsWritten => s2 / self.sizes[v] as f64,
                    PsiMode::ChildSize => 0.0,
                };
                leaf_psi(s2, cov, alpha_f64(&beta))
            }
            _ => {
                let children = node.children.clone();
                let parent_step = match self.mode {
                    PsiMode::AsWritten => Some(advance(&beta, self.sizes[v])?),
                    PsiMode::ChildSize => None,
                };
                let mut sum = 0.0;
                for (j, &c) in children.iter().enumerate() {
                    let b = match parent_step {
                        Some(b) => b,
                        None => advance(&beta, self.sizes[c])?,
                    };
                    let w = self.weights[v][j];
                    sum += term(w, self.psi_beta(c, b)?);
                }
                sum
            }
        };
        self.memo.insert((v, beta), value);
        Ok(value)
    }

    /// Modeled estimator variance: `ψ_k(0)` as written, `ψ_k(1/n_k)` in
    /// child-size mode.
    pub fn objective(&mut self) -> Result<f64> {
        let root = self.config.tree.root();
        match self.mode {
            PsiMode::AsWritten => self.psi_beta(root, Beta::one()),
            PsiMode::ChildSize => {
                let b = advance(&Beta::one(), self.sizes[root])?;
                self.psi_beta(root, b)
            }
        }
    }
}

/// Standalone `ψ_v(α)` for a given allocation.
pub fn psi_value(
    config: &OptimizerConfig,
    sizes: &[usize],
    mode: PsiMode,
    node: NodeId,
    alpha: (i64, i64),
) -> Result<f64> {
    PsiTable::new(config, sizes, mode)?.psi(node, alpha)
}

/// Modeled variance at an allocation (sizes indexed by node id).
pub fn allocation_objective(config: &OptimizerConfig, sizes: &[usize], mode: PsiMode) -> Result<f64> {
    PsiTable::new(config, sizes, mode)?.objective()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Allocation {
    /// Modeled minimal variance `Φ_k(0, b)`.
    pub variance: f64,
    /// `n_v` by node id.
    pub sizes: Vec<usize>,
    pub cost: u64,
}

/// Best value and lexicographically smallest allocation of a subtree for
/// every budget `z ≤ b`; `None` when infeasible.
type BudgetVector = Vec<Option<(f64, Vec<usize>)>>;

fn better(value: f64, alloc: &[usize], cur: &Option<(f64, Vec<usize>)>) -> bool {
    match cur {
        None => true,
        Some((v, a)) => value < *v || (value == *v && alloc < a.as_slice()),
    }
}

struct Bellman<'a> {
    config: &'a OptimizerConfig,
    weights: Vec<Vec<f64>>,
    memo: HashMap<(NodeId, Beta), std::rc::Rc<BudgetVector>>,
    /// Largest budget any subtree can receive.
    zmax: Vec<u64>,
}

impl<'a> Bellman<'a> {
    fn new(config: &'a OptimizerConfig) -> Self {
        let tree = &config.tree;
        let total = config.min_budget();
        let zmax = (0..tree.len())
            .map(|v| {
                let inside: u64 = tree.subtree(v).map(|u| config.weights[u]).sum();
                config.budget - (total - inside)
            })
            .collect();
        Self {
            config,
            weights: config.partial_weights(),
            memo: HashMap::new(),
            zmax,
        }
    }

    fn max_size(&self, v: NodeId, z: u64) -> usize {
        match self.config.weights[v] {
            0 => self.config.zero_weight_cap,
            a => (z / a) as usize,
        }
    }

    fn solve(&mut self, v: NodeId, beta: Beta) -> Result<std::rc::Rc<BudgetVector>> {
        if let Some(r) = self.memo.get(&(v, beta)) {
            return Ok(r.clone());
        }
        if self.memo.len() >= self.config.memo_cap {
            return Err(Error::CapExceeded {
                what: "Bellman memo table",
                count: self.memo.len() as u128 + 1,
                cap: self.config.memo_cap as u128,
                hint: "lower the budget or the zero-weight size cap",
            });
        }
        let zmax = self.zmax[v] as usize;
        let a = self.config.weights[v];
        let node = self.config.tree.node(v).clone();
        let mut out: BudgetVector = vec![None; zmax + 1];
        match node.kind {
            NodeKind::Leaf { input } => {
                let s2 = self.config.leaf_moments[input].1;
                let alpha = alpha_f64(&beta);
                let top = self.max_size(v, zmax as u64);
                let mut best: Option<(f64, Vec<usize>)> = None;
                let mut z_next = 0usize;
                for n in 1..=top {
                    let first_z = (a * n as u64) as usize;
                    // budgets that admit sizes up to n - 1 only
                    while z_next < first_z.min(zmax + 1) {
                        out[z_next] = best.clone();
                        z_next += 1;
                    }
                    let value = leaf_psi(s2, s2 / n as f64, alpha);
                    let alloc = vec![n];
                    if better(value, &alloc, &best) {
                        best = Some((value, alloc));
                    }
                }
                while z_next <= zmax {
                    out[z_next] = best.clone();
                    z_next += 1;
                }
            }
            _ => {
                let top = self.max_size(v, zmax as u64);
                for n in 1..=top {
                    let cost = a * n as u64;
                    if cost > zmax as u64 {
                        break;
                    }
                    let child_beta = advance(&beta, n)?;
                    let room = zmax - cost as usize;
                    // min-plus convolution over the children, left to right
                    let mut acc: BudgetVector = vec![Some((0.0, Vec::new())); room + 1];
                    for (j, &c) in node.children.iter().enumerate() {
                        let w = self.weights[v][j];
                        let child = self.solve(c, child_beta)?;
                        let mut next: BudgetVector = vec![None; room + 1];
                        for z in 0..=room {
                            for zc in 0..=z.min(child.len() - 1) {
                                let (Some((cv, ca)), Some((av, aa))) = (&child[zc], &acc[z - zc])
                                else {
                                    continue;
                                };
                                let value = av + term(w, *cv);
                                let slot = &next[z];
                                let wins = match slot {
                                    None => true,
                                    Some((sv, sa)) => {
                                        value < *sv
                                            || (value == *sv && {
                                                let k = aa.len();
                                                (aa.as_slice(), ca.as_slice())
                                                    < (&sa[..k], &sa[k..])
                                            })
                                    }
                                };
                                if wins {
                                    let mut alloc = aa.clone();
                                    alloc.extend_from_slice(ca);
                                    next[z] = Some((value, alloc));
                                }
                            }
                        }
                        acc = next;
                    }
                    for z in cost as usize..=zmax {
                        if let Some((value, alloc)) = &acc[z - cost as usize] {
                            let mut full = alloc.clone();
                            full.push(n);
                            if better(*value, &full, &out[z]) {
                                out[z] = Some((*value, full));
                            }
                        }
                    }
                }
            }
        }
        let out = std::rc::Rc::new(out);
        self.memo.insert((v, beta), out.clone());
        Ok(out)
    }
}

fn check_feasible(config: &OptimizerConfig) -> Result<()> {
    let need = config.min_budget();
    if need > config.budget {
        return Err(Error::Infeasible {
            required: need,
            budget: config.budget,
        });
    }
    Ok(())
}

/// Minimize the modeled variance over integer allocations by dynamic
/// programming over `(node, α, budget)`. Ties go to the lexicographically
/// smallest allocation in node-id order.
pub fn bellman_optimize(config: &OptimizerConfig) -> Result<Allocation> {
    check_feasible(config)?;
    let mut dp = Bellman::new(config);
    let root = config.tree.root();
    let table = dp.solve(root, Beta::one())?;
    let (variance, sizes) = table[dp.zmax[root] as usize]
        .clone()
        .ok_or(Error::Infeasible {
            required: config.min_budget(),
            budget: config.budget,
        })?;
    Ok(Allocation {
        variance,
        cost: config.cost(&sizes),
        sizes,
    })
}

/// Number of `(node, α)` states the dynamic program visits.
pub fn bellman_state_count(config: &OptimizerConfig) -> Result<usize> {
    check_feasible(config)?;
    let mut dp = Bellman::new(config);
    dp.solve(config.tree.root(), Beta::one())?;
    Ok(dp.memo.len())
}

/// Evaluate every feasible allocation in lexicographic order and keep the
/// first minimum.
pub fn exhaustive_optimize_oracle(config: &OptimizerConfig, cap: u64) -> Result<Allocation> {
    check_feasible(config)?;
    let len = config.tree.len();
    let mut sizes = vec![1usize; len];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visited = 0u64;
    let slack = config.budget - config.min_budget();
    let limit = |v: usize, used_extra: u64| -> usize {
        match config.weights[v] {
            0 => config.zero_weight_cap,
            a => 1 + ((slack - used_extra) / a) as usize,
        }
    };
    // depth-first over node ids; extra cost above the all-ones allocation
    fn rec(
        v: usize,
        extra: u64,
        sizes: &mut Vec<usize>,
        config: &OptimizerConfig,
        limit: &dyn Fn(usize, u64) -> usize,
        best: &mut Option<(f64, Vec<usize>)>,
        visited: &mut u64,
        cap: u64,
    ) -> Result<()> {
        if v == sizes.len() {
            *visited += 1;
            if *visited > cap {
                return Err(Error::CapExceeded {
                    what: "exhaustive allocation search",
                    count: *visited as u128,
                    cap: cap as u128,
                    hint: "use bellman_optimize",
                });
            }
            let value = allocation_objective(config, sizes, PsiMode::AsWritten)?;
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                *best = Some((value, sizes.clone()));
            }
            return Ok(());
        }
        for n in 1..=limit(v, extra) {
            sizes[v] = n;
            let extra_here = extra + config.weights[v] * (n as u64 - 1);
            rec(v + 1, extra_here, sizes, config, limit, best, visited, cap)?;
        }
        sizes[v] = 1;
        Ok(())
    }
    rec(0, 0, &mut sizes, config, &limit, &mut best, &mut visited, cap)?;
    let (variance, sizes) = best.expect("all-ones allocation is feasible");
    Ok(Allocation {
        variance,
        cost: config.cost(&sizes),
        sizes,
    })
}

/// Spread the budget as evenly as possible: every node gets
/// `⌊b / Σ a_v⌋`, then remaining budget raises sizes one at a time in
/// node-id order.
pub fn equal_allocation(config: &OptimizerConfig) -> Result<Allocation> {
    check_feasible(config)?;
    let total = config.min_budget().max(1);
    let base = (config.budget / total).max(1) as usize;
    let mut sizes = vec![base; config.tree.len()];
    let mut left = config.budget - config.cost(&sizes);
    for (v, s) in sizes.iter_mut().enumerate() {
        let a = config.weights[v];
        if a > 0 && a <= left {
            *s += 1;
            left -= a;
        }
    }
    let variance = allocation_objective(config, &sizes, PsiMode::AsWritten)?;
    Ok(Allocation {
        variance,
        cost: config.cost(&sizes),
        sizes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(tree: &str, budget: u64, var: &[f64]) -> OptimizerConfig {
        let tree = CalcTree::parse(tree).unwrap();
        let moments = var.iter().map(|&v| (1.0, v)).collect();
        OptimizerConfig::unit(tree, budget, moments).unwrap()
    }

    #[test]
    fn gradient_examples() {
        assert_eq!(gradient_at_mean(&NodeKind::Sum, &[3.0, -1.0, 2.0]), vec![1.0; 3]);
        assert_eq!(gradient_at_mean(&NodeKind::Max, &[1.0, 3.0]), vec![0.0, 1.0]);
        assert_eq!(gradient_at_mean(&NodeKind::Min, &[2.0, 2.0]), vec![0.5, 0.5]);
        let g = gradient_at_mean(&NodeKind::IndicatorGreater { t: 1.0 }, &[3.0]);
        assert_eq!(g, vec![0.0]);
    }

    #[test]
    fn psi_examples() {
        assert_eq!(leaf_psi(4.0, 0.0, 1.0), 4.0);
        assert_eq!(leaf_psi(4.0, 1.0, 0.5), 2.5);
        let c = cfg("sum(x1@2, x2@2)", 10, &[1.0, 4.0]);
        let sizes = c.tree.sizes();
        let v = psi_value(&c, &sizes, PsiMode::ChildSize, c.tree.root(), (0, 1)).unwrap();
        assert_eq!(v, 2.5);
        let leaf = psi_value(&c, &sizes, PsiMode::ChildSize, 0, (1, 1)).unwrap();
        assert_eq!(leaf, 1.0);
    }

    #[test]
    fn single_leaf_under_identity_root() {
        let c = cfg("sum(x1)", 4, &[4.0]);
        let opt = bellman_optimize(&c).unwrap();
        assert_eq!(opt.sizes, vec![2, 2]);
        assert_eq!(opt.variance, 3.0);
        let ex = exhaustive_optimize_oracle(&c, 1000).unwrap();
        assert_eq!(ex, opt);
    }

    #[test]
    fn three_leaf_sum() {
        let c = cfg("sum(x1, x2, x3)", 12, &[1.0, 4.0, 9.0]);
        let opt = bellman_optimize(&c).unwrap();
        let ex = exhaustive_optimize_oracle(&c, DEFAULT_ORACLE_CAP).unwrap();
        assert_eq!(opt, ex);
        assert!(opt.sizes[0] <= opt.sizes[1] && opt.sizes[1] <= opt.sizes[2], "{:?}", opt.sizes);
        assert!(opt.cost <= 12);
    }

    #[test]
    fn infeasible_and_tight_budgets() {
        let c = cfg("max(x1, x2)", 2, &[1.0, 1.0]);
        assert!(matches!(bellman_optimize(&c), Err(Error::Infeasible { required: 3, budget: 2 })));
        let c = cfg("max(x1, x2)", 3, &[1.0, 1.0]);
        assert_eq!(bellman_optimize(&c).unwrap().sizes, vec![1, 1, 1]);
        assert_eq!(exhaustive_optimize_oracle(&c, 10).unwrap().sizes, vec![1, 1, 1]);
    }

    #[test]
    fn modes_agree() {
        let c = cfg("max(sum(x1, x2), min(x3, x4))", 20, &[1.0, 2.0, 3.0, 0.5]);
        for sizes in [vec![1, 2, 3, 4, 5, 6, 7], vec![3, 1, 2, 2, 1, 4, 2]] {
            let a = allocation_objective(&c, &sizes, PsiMode::AsWritten).unwrap();
            let b = allocation_objective(&c, &sizes, PsiMode::ChildSize).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{a} vs {b}");
        }
    }

    #[test]
    fn zero_weight_nodes_use_the_size_cap() {
        let tree = CalcTree::parse("sum(x1, x2)").unwrap();
        let mut c = OptimizerConfig::new(tree, vec![1, 1, 0], 4, vec![(0.0, 1.0); 2]).unwrap();
        c.zero_weight_cap = 5;
        let opt = bellman_optimize(&c).unwrap();
        assert_eq!(opt.sizes[2], 5);
        assert_eq!(opt, exhaustive_optimize_oracle(&c, 10_000).unwrap());
    }

    #[test]
    fn equal_allocation_spends_budget() {
        let c = cfg("max(x1, x2)", 10, &[1.0, 1.0]);
        let e = equal_allocation(&c).unwrap();
        assert_eq!(e.sizes, vec![4, 3, 3]);
        assert_eq!(e.cost, 10);
    }

    #[test]
    fn alpha_overflow_is_reported() {
        assert!(advance(&Beta::new(1, i128::MAX / 2), 7).is_err());
    }
}
