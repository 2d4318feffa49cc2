//! Regression trees and forests.
//!
//! A tree is a binary structure of axis-aligned splits over a rectangular
//! domain. Routing uses `x[dim] <= value` into the lower child, ties included;
//! every other part of the toolkit (projection, merging, knownness trees)
//! follows the same convention so boundary points never disagree.
//!
//! Leaves carry either a constant or an affine model over the full input
//! vector. A forest predicts the unweighted mean of its trees.
//!
//! Trees serialize to a line-oriented text format that round-trips exactly:
//! floats are printed in shortest form, which Rust both emits and parses
//! canonically, so serialize -> parse -> serialize is byte-identical.

use crate::error::{Error, Result};
use crate::geometry::HyperRectangle;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum LeafModel {
    /// Piecewise-constant leaf.
    Constant(f64),
    /// Affine leaf: intercept + coefficients . x over the full input vector.
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
}

impl LeafModel {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            LeafModel::Constant(c) => *c,
            LeafModel::Linear {
                intercept,
                coefficients,
            } => {
                let mut y = *intercept;
                for (c, v) in coefficients.iter().zip(x) {
                    y += c * v;
                }
                y
            }
        }
    }

    /// Evaluate at a rectangle's center.
    pub fn evaluate_center(&self, cell: &HyperRectangle) -> f64 {
        match self {
            LeafModel::Constant(c) => *c,
            _ => self.evaluate(&cell.center()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        dim: usize,
        value: f64,
        lower: Box<Node>,
        upper: Box<Node>,
    },
    Leaf(LeafModel),
}

impl Node {
    pub fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf(_) => 1,
            Node::Split { lower, upper, .. } => lower.leaf_count() + upper.leaf_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { lower, upper, .. } => 1 + lower.depth().max(upper.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    root: Node,
    input_dim: usize,
    domain: HyperRectangle,
}

impl RegressionTree {
    pub fn new(root: Node, domain: HyperRectangle) -> Result<Self> {
        let input_dim = domain.dim();
        let tree = Self {
            root,
            input_dim,
            domain,
        };
        tree.check(&tree.root, &tree.domain)?;
        Ok(tree)
    }

    /// Single-leaf tree.
    pub fn leaf(model: LeafModel, domain: HyperRectangle) -> Result<Self> {
        Self::new(Node::Leaf(model), domain)
    }

    fn check(&self, node: &Node, cell: &HyperRectangle) -> Result<()> {
        match node {
            Node::Leaf(LeafModel::Constant(c)) => {
                if !c.is_finite() {
                    return Err(Error::NonFinite {
                        context: "leaf value",
                    });
                }
            }
            Node::Leaf(LeafModel::Linear {
                intercept,
                coefficients,
            }) => {
                if coefficients.len() != self.input_dim {
                    return Err(Error::DimensionMismatch {
                        expected: self.input_dim,
                        got: coefficients.len(),
                    });
                }
                if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite {
                        context: "leaf coefficients",
                    });
                }
            }
            Node::Split {
                dim,
                value,
                lower,
                upper,
            } => {
                if *dim >= self.input_dim {
                    return Err(Error::DimOutOfRange {
                        dim: *dim,
                        dims: self.input_dim,
                    });
                }
                // Split values must stay inside the cell so that no leaf
                // rectangle is empty and every root-to-leaf path is
                // consistent.
                let (lo, hi) = cell.split(*dim, *value)?;
                self.check(lower, &lo)?;
                self.check(upper, &hi)?;
            }
        }
        Ok(())
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn domain(&self) -> &HyperRectangle {
        &self.domain
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Predict at a point. Points outside the domain are clamped
    /// coordinate-wise onto it first, so extrapolation never invents values
    /// beyond the boundary cells.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let clamped = self.domain.clamp(x);
        Ok(self.predict_in_domain(&clamped))
    }

    /// Prediction for a point already inside the domain; hot path, no checks.
    pub(crate) fn predict_in_domain(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(model) => return model.evaluate(x),
                Node::Split {
                    dim, value, lower, upper,
                } => {
                    node = if x[*dim] <= *value { lower } else { upper };
                }
            }
        }
    }

    /// The rectangle of the leaf that `x` routes to.
    pub fn leaf_rectangle(&self, x: &[f64]) -> Result<HyperRectangle> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        let clamped = self.domain.clamp(x);
        let mut cell = self.domain.clone();
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf(_) => return Ok(cell),
                Node::Split {
                    dim, value, lower, upper,
                } => {
                    if clamped[*dim] <= *value {
                        cell.set_max(*dim, *value);
                        node = lower;
                    } else {
                        cell.set_min(*dim, *value);
                        node = upper;
                    }
                }
            }
        }
    }

    /// Visit every leaf together with its rectangle, in preorder.
    pub fn for_each_leaf<F: FnMut(&LeafModel, &HyperRectangle)>(&self, mut f: F) {
        fn walk<F: FnMut(&LeafModel, &HyperRectangle)>(
            node: &Node,
            cell: &mut HyperRectangle,
            f: &mut F,
        ) {
            match node {
                Node::Leaf(model) => f(model, cell),
                Node::Split {
                    dim, value, lower, upper,
                } => {
                    let hi = cell.max(*dim);
                    cell.set_max(*dim, *value);
                    walk(lower, cell, f);
                    cell.set_max(*dim, hi);
                    let lo = cell.min(*dim);
                    cell.set_min(*dim, *value);
                    walk(upper, cell, f);
                    cell.set_min(*dim, lo);
                }
            }
        }
        let mut cell = self.domain.clone();
        walk(&self.root, &mut cell, &mut f);
    }

    /// Rebuild every leaf from its current model and rectangle, keeping the
    /// split structure intact.
    pub fn map_leaves<F: Fn(&LeafModel, &HyperRectangle) -> LeafModel>(
        &self,
        f: F,
    ) -> RegressionTree {
        fn walk<F: Fn(&LeafModel, &HyperRectangle) -> LeafModel>(
            node: &Node,
            cell: &mut HyperRectangle,
            f: &F,
        ) -> Node {
            match node {
                Node::Leaf(model) => Node::Leaf(f(model, cell)),
                Node::Split {
                    dim, value, lower, upper,
                } => {
                    let hi = cell.max(*dim);
                    cell.set_max(*dim, *value);
                    let new_lower = walk(lower, cell, f);
                    cell.set_max(*dim, hi);
                    let lo = cell.min(*dim);
                    cell.set_min(*dim, *value);
                    let new_upper = walk(upper, cell, f);
                    cell.set_min(*dim, lo);
                    Node::Split {
                        dim: *dim,
                        value: *value,
                        lower: Box::new(new_lower),
                        upper: Box::new(new_upper),
                    }
                }
            }
        }
        let mut cell = self.domain.clone();
        RegressionTree {
            root: walk(&self.root, &mut cell, &f),
            input_dim: self.input_dim,
            domain: self.domain.clone(),
        }
    }

    /// Construct without re-validating; for internal algorithms whose outputs
    /// are consistent by construction.
    pub(crate) fn from_parts(root: Node, input_dim: usize, domain: HyperRectangle) -> Self {
        debug_assert_eq!(input_dim, domain.dim());
        Self {
            root,
            input_dim,
            domain,
        }
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "tree {}", self.input_dim);
        let mut domain_line = String::from("domain");
        for &(lo, hi) in self.domain.bounds() {
            let _ = write!(domain_line, " {} {}", lo, hi);
        }
        out.push_str(&domain_line);
        out.push('\n');
        write_node(&self.root, &mut out);
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let tree = parse_tree(&mut lines)?;
        lines.expect_end()?;
        Ok(tree)
    }
}

fn write_node(node: &Node, out: &mut String) {
    match node {
        Node::Leaf(LeafModel::Constant(c)) => {
            let _ = writeln!(out, "leaf pwc {}", c);
        }
        Node::Leaf(LeafModel::Linear {
            intercept,
            coefficients,
        }) => {
            let _ = write!(out, "leaf pwl {}", intercept);
            for c in coefficients {
                let _ = write!(out, " {}", c);
            }
            out.push('\n');
        }
        Node::Split {
            dim, value, lower, upper,
        } => {
            let _ = writeln!(out, "split {} {}", dim, value);
            write_node(lower, out);
            write_node(upper, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionForest {
    trees: Vec<RegressionTree>,
}

impl RegressionForest {
    /// All trees must share one domain.
    pub fn new(trees: Vec<RegressionTree>) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::EmptyForest);
        }
        let domain = trees[0].domain().clone();
        for t in &trees[1..] {
            if t.domain() != &domain {
                return Err(Error::Config(
                    "forest trees must share a common domain".into(),
                ));
            }
        }
        Ok(Self { trees })
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.trees[0].input_dim()
    }

    pub fn domain(&self) -> &HyperRectangle {
        self.trees[0].domain()
    }

    /// Mean of the member trees' predictions.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let clamped = self.domain().clamp(x);
        let sum: f64 = self
            .trees
            .iter()
            .map(|t| t.predict_in_domain(&clamped))
            .sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn total_leaf_count(&self) -> usize {
        self.trees.iter().map(RegressionTree::leaf_count).sum()
    }

    pub fn serialize(&self) -> String {
        let mut out = format!("forest {}\n", self.trees.len());
        for t in &self.trees {
            out.push_str(&t.serialize());
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let forest = parse_forest(&mut lines)?;
        lines.expect_end()?;
        Ok(forest)
    }
}

// ---------------------------------------------------------------------------
// text format plumbing, shared with the policy file format

pub(crate) struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            iter: text.lines().enumerate(),
        }
    }

    /// Next non-empty line with its 1-based number.
    pub(crate) fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let t = line.trim();
            if !t.is_empty() {
                return Some((i + 1, t));
            }
        }
        None
    }

    pub(crate) fn expect_end(&mut self) -> Result<()> {
        match self.next_line() {
            None => Ok(()),
            Some((n, l)) => Err(parse_err(n, format!("unexpected trailing line: {l}"))),
        }
    }
}

pub(crate) fn parse_err(line: usize, msg: String) -> Error {
    Error::Parse {
        file: "<tree text>".into(),
        line,
        msg,
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, got {tok:?}")))
}

pub(crate) fn parse_tree(lines: &mut Lines) -> Result<RegressionTree> {
    let (n, header) = lines
        .next_line()
        .ok_or_else(|| parse_err(0, "empty tree document".into()))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("tree") {
        return Err(parse_err(n, format!("expected 'tree <dims>', got {header:?}")));
    }
    let dims: usize = toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(n, "bad dimension count in tree header".into()))?;
    if dims == 0 || toks.next().is_some() {
        return Err(parse_err(n, "bad tree header".into()));
    }

    let (dn, dline) = lines
        .next_line()
        .ok_or_else(|| parse_err(n, "missing domain line".into()))?;
    let mut dtoks = dline.split_whitespace();
    if dtoks.next() != Some("domain") {
        return Err(parse_err(dn, format!("expected 'domain ...', got {dline:?}")));
    }
    let vals: Vec<f64> = dtoks
        .map(|t| parse_f64(t, dn))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != 2 * dims {
        return Err(parse_err(
            dn,
            format!("domain needs {} numbers, got {}", 2 * dims, vals.len()),
        ));
    }
    let domain = HyperRectangle::new(vals.chunks(2).map(|c| (c[0], c[1])).collect())?;

    let root = parse_node(lines, dims)?;
    RegressionTree::new(root, domain)
}

fn parse_node(lines: &mut Lines, dims: usize) -> Result<Node> {
    let (n, line) = lines
        .next_line()
        .ok_or_else(|| parse_err(0, "unexpected end of tree".into()))?;
    let toks: Vec<&str> = line.split_whitespace().collect();
    match toks.as_slice() {
        ["split", d, v] => {
            let dim: usize = d
                .parse()
                .map_err(|_| parse_err(n, format!("bad split dimension {d:?}")))?;
            let value = parse_f64(v, n)?;
            let lower = parse_node(lines, dims)?;
            let upper = parse_node(lines, dims)?;
            Ok(Node::Split {
                dim,
                value,
                lower: Box::new(lower),
                upper: Box::new(upper),
            })
        }
        ["leaf", "pwc", c] => Ok(Node::Leaf(LeafModel::Constant(parse_f64(c, n)?))),
        ["leaf", "pwl", rest @ ..] if rest.len() == dims + 1 => {
            let nums: Vec<f64> = rest
                .iter()
                .map(|t| parse_f64(t, n))
                .collect::<Result<Vec<_>>>()?;
            Ok(Node::Leaf(LeafModel::Linear {
                intercept: nums[0],
                coefficients: nums[1..].to_vec(),
            }))
        }
        _ => Err(parse_err(n, format!("unrecognized node line: {line:?}"))),
    }
}

pub(crate) fn parse_forest(lines: &mut Lines) -> Result<RegressionForest> {
    let (n, header) = lines
        .next_line()
        .ok_or_else(|| parse_err(0, "empty forest document".into()))?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("forest") {
        return Err(parse_err(
            n,
            format!("expected 'forest <count>', got {header:?}"),
        ));
    }
    let count: usize = toks
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(n, "bad tree count in forest header".into()))?;
    if count == 0 || toks.next().is_some() {
        return Err(parse_err(n, "bad forest header".into()));
    }
    let trees = (0..count)
        .map(|_| parse_tree(lines))
        .collect::<Result<Vec<_>>>()?;
    RegressionForest::new(trees)
}
