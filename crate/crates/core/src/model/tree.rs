use std::fmt;
use std::ops::Range;

use serde::Serialize;

use super::scalar::Scalar;
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Catalog subfunctions. Leaf inputs are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum NodeKind {
    Leaf { input: usize },
    Sum,
    Max,
    Min,
    /// 1 if at least `k` children exceed `t`, else 0.
    KOfN { k: usize, t: f64 },
    /// 1 if the single child is `< t`.
    IndicatorLess { t: f64 },
    /// 1 if the single child is `> t`.
    IndicatorGreater { t: f64 },
}

impl NodeKind {
    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Leaf { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            NodeKind::Leaf { .. } => "leaf",
            NodeKind::Sum => "sum",
            NodeKind::Max => "max",
            NodeKind::Min => "min",
            NodeKind::KOfN { .. } => "kofn",
            NodeKind::IndicatorLess { .. } => "lt",
            NodeKind::IndicatorGreater { .. } => "gt",
        }
    }
}

/// Apply a node's subfunction to its children's values.
pub fn apply_node<T: Scalar>(kind: &NodeKind, vals: &[T]) -> T {
    let indicator = |b: bool| if b { T::one() } else { T::zero() };
    match kind {
        NodeKind::Leaf { .. } => vals[0].clone(),
        NodeKind::Sum => vals.iter().fold(T::zero(), |acc, v| acc.add(v)),
        NodeKind::Max => pick(vals, |a, b| a > b),
        NodeKind::Min => pick(vals, |a, b| a < b),
        NodeKind::KOfN { k, t } => indicator(vals.iter().filter(|v| v.exceeds(*t)).count() >= *k),
        NodeKind::IndicatorLess { t } => indicator(vals[0].below(*t)),
        NodeKind::IndicatorGreater { t } => indicator(vals[0].exceeds(*t)),
    }
}

fn pick<T: Scalar>(vals: &[T], better: impl Fn(&T, &T) -> bool) -> T {
    let mut best = &vals[0];
    for v in &vals[1..] {
        if better(v, best) {
            best = v;
        }
    }
    best.clone()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeNode {
    pub id: NodeId,
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    /// Resample size `n_v`. For leaves this is the sample size used by the
    /// variance and optimizer models; estimators use the actual pool length.
    pub size: usize,
}

/// Unvalidated tree description.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeSpec {
    pub kind: NodeKind,
    pub children: Vec<TreeSpec>,
    pub size: Option<usize>,
}

impl TreeSpec {
    pub fn leaf(input: usize) -> Self {
        Self {
            kind: NodeKind::Leaf { input },
            children: Vec::new(),
            size: None,
        }
    }

    pub fn node(kind: NodeKind, children: Vec<TreeSpec>) -> Self {
        Self {
            kind,
            children,
            size: None,
        }
    }

    pub fn sized(mut self, n: usize) -> Self {
        self.size = Some(n);
        self
    }
}

/// A validated calculation tree, nodes stored in post-order (root last).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalcTree {
    nodes: Vec<TreeNode>,
    arity: usize,
    #[serde(skip)]
    leaf_of_input: Vec<NodeId>,
}

pub fn build_tree(spec: &TreeSpec) -> Result<CalcTree> {
    let mut nodes = Vec::new();
    push_post_order(spec, &mut nodes)?;
    let mut leaf_of_input: Vec<Option<NodeId>> = Vec::new();
    for node in &nodes {
        if let NodeKind::Leaf { input } = node.kind {
            if input >= leaf_of_input.len() {
                leaf_of_input.resize(input + 1, None);
            }
            if leaf_of_input[input].replace(node.id).is_some() {
                return Err(Error::DuplicateLeaf(input + 1));
            }
        }
    }
    let leaf_of_input = leaf_of_input
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or(Error::MissingLeaf(i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CalcTree {
        arity: leaf_of_input.len(),
        nodes,
        leaf_of_input,
    })
}

fn push_post_order(spec: &TreeSpec, out: &mut Vec<TreeNode>) -> Result<NodeId> {
    let size = spec.size.unwrap_or(1);
    if size == 0 {
        return Err(Error::InvalidParameter(format!(
            "`{}` node has sample size 0",
            spec.kind.name()
        )));
    }
    let threshold_ok = |t: f64| {
        if t.is_nan() {
            Err(Error::InvalidParameter("threshold is NaN".into()))
        } else {
            Ok(())
        }
    };
    match spec.kind {
        NodeKind::Leaf { .. } => {
            if !spec.children.is_empty() {
                return Err(Error::InvalidParameter("a leaf cannot have children".into()));
            }
        }
        _ if spec.children.is_empty() => {
            return Err(Error::EmptyChildren(spec.kind.name().into()));
        }
        NodeKind::KOfN { k, t } => {
            threshold_ok(t)?;
            if k == 0 || k > spec.children.len() {
                return Err(Error::InvalidParameter(format!(
                    "kofn needs 1 <= k <= {} children, got k = {k}",
                    spec.children.len()
                )));
            }
        }
        NodeKind::IndicatorLess { t } | NodeKind::IndicatorGreater { t } => {
            threshold_ok(t)?;
            if spec.children.len() != 1 {
                return Err(Error::InvalidParameter(format!(
                    "`{}` takes exactly one child, got {}",
                    spec.kind.name(),
                    spec.children.len()
                )));
            }
        }
        NodeKind::Sum | NodeKind::Max | NodeKind::Min => {}
    }
    let children = spec
        .children
        .iter()
        .map(|c| push_post_order(c, out))
        .collect::<Result<Vec<_>>>()?;
    let id = out.len();
    out.push(TreeNode {
        id,
        kind: spec.kind,
        children,
        size,
    });
    Ok(id)
}

impl CalcTree {
    pub fn parse(description: &str) -> Result<Self> {
        build_tree(&super::parse::parse_tree(description)?)
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.nodes.len() - 1
    }

    /// Number of inputs `m`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn leaf_for_input(&self, input: usize) -> NodeId {
        self.leaf_of_input[input]
    }

    pub fn internal_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter(|n| !n.kind.is_leaf()).map(|n| n.id)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(|n| n.size).collect()
    }

    /// Sample sizes of the leaves, indexed by input.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.leaf_of_input.iter().map(|&id| self.nodes[id].size).collect()
    }

    /// Copy of the tree with `sizes[id]` assigned to every node.
    pub fn with_sizes(&self, sizes: &[usize]) -> Result<Self> {
        if sizes.len() != self.nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} node sizes, got {}",
                self.nodes.len(),
                sizes.len()
            )));
        }
        if sizes.contains(&0) {
            return Err(Error::InvalidParameter("node sizes must be >= 1".into()));
        }
        let mut out = self.clone();
        for (node, &n) in out.nodes.iter_mut().zip(sizes) {
            node.size = n;
        }
        Ok(out)
    }

    /// Copy of the tree with leaf sizes set by input index.
    pub fn with_leaf_sizes(&self, sizes: &[usize]) -> Result<Self> {
        if sizes.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: sizes.len(),
            });
        }
        let mut all = self.sizes();
        for (i, &n) in sizes.iter().enumerate() {
            all[self.leaf_of_input[i]] = n;
        }
        self.with_sizes(&all)
    }

    /// Ids of the subtree rooted at `id` (the set `B_v` plus `v` itself);
    /// contiguous because of post-order numbering.
    pub fn subtree(&self, id: NodeId) -> Range<NodeId> {
        let mut lo = id;
        let mut stack = vec![id];
        while let Some(v) = stack.pop() {
            lo = lo.min(v);
            stack.extend(&self.nodes[v].children);
        }
        lo..id + 1
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id + 1..]
            .iter()
            .find(|n| n.children.contains(&id))
            .map(|n| n.id)
    }

    /// Evaluate the tree at `x`, bottom-up.
    pub fn eval<T: Scalar>(&self, x: &[T]) -> Result<T> {
        if x.len() != self.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked<T: Scalar>(&self, x: &[T]) -> T {
        let mut vals: Vec<T> = Vec::with_capacity(self.nodes.len());
        let mut args: Vec<T> = Vec::new();
        for node in &self.nodes {
            let v = match node.kind {
                NodeKind::Leaf { input } => x[input].clone(),
                ref kind => {
                    args.clear();
                    args.extend(node.children.iter().map(|&c| vals[c].clone()));
                    apply_node(kind, &args)
                }
            };
            vals.push(v);
        }
        vals.pop().expect("non-empty tree")
    }

    /// True when every internal node is a sum.
    pub fn is_linear(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| matches!(n.kind, NodeKind::Leaf { .. } | NodeKind::Sum))
    }
}

impl fmt::Display for CalcTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(self.root(), f)
    }
}

impl CalcTree {
    fn fmt_node(&self, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let node = &self.nodes[id];
        let size = |f: &mut fmt::Formatter<'_>| {
            if node.size != 1 {
                write!(f, "@{}", node.size)
            } else {
                Ok(())
            }
        };
        match node.kind {
            NodeKind::Leaf { input } => {
                write!(f, "x{}", input + 1)?;
                return size(f);
            }
            NodeKind::KOfN { k, t } => write!(f, "kofn[k={k},t={}]", fmt_num(t))?,
            NodeKind::IndicatorLess { t } => write!(f, "lt[t={}]", fmt_num(t))?,
            NodeKind::IndicatorGreater { t } => write!(f, "gt[t={}]", fmt_num(t))?,
            kind => write!(f, "{}", kind.name())?,
        }
        size(f)?;
        write!(f, "(")?;
        for (i, &c) in node.children.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            self.fmt_node(c, f)?;
        }
        write!(f, ")")
    }
}

fn fmt_num(t: f64) -> String {
    if t == f64::INFINITY {
        "inf".into()
    } else if t == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{t}")
    }
}
