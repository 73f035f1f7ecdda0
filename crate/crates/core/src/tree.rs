//! Finite measurable trees and step functions on their leaf partitions.
//!
//! A tree here is a nested family of positive-measure sets: the root has
//! measure 1, every internal node has at least two children, and the
//! children of a node partition it exactly. Only the measure structure is
//! represented; no geometry is needed for anything built on top.
//!
//! The built-in family is the dyadic one: at depth `m` the leaves are the
//! `2^m` intervals `[j·2^-m, (j+1)·2^-m)` in left-to-right order, and every
//! node at level `k` has measure `2^-k`. With the exact rational backend
//! all measures and averages on this family are exact.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math::abs;
use crate::scalar::Scalar;

/// Hard cap on dyadic tree depth; `2^depth` leaves get materialized.
pub const MAX_DYADIC_DEPTH: u32 = 20;

/// Relative tolerance for child-measure sums on inexact backends.
pub const MEASURE_SUM_TOL: f64 = 1e-12;

/// Maximum nesting depth accepted from [`NodeShape`] input.
const MAX_SHAPE_DEPTH: u32 = 64;

/// Identifier of a node inside its [`Tree`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Node<V> {
    pub(crate) measure: V,
    pub(crate) level: u32,
    pub(crate) parent: Option<NodeId>,
    pub(crate) children: Vec<NodeId>,
}

/// Nested measure description used to build general (non-dyadic) trees.
#[derive(Debug, Clone)]
pub struct NodeShape<V> {
    pub measure: V,
    pub children: Vec<NodeShape<V>>,
}

impl<V> NodeShape<V> {
    pub fn leaf(measure: V) -> Self {
        NodeShape {
            measure,
            children: Vec::new(),
        }
    }

    pub fn internal(measure: V, children: Vec<NodeShape<V>>) -> Self {
        NodeShape { measure, children }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TreeError {
    /// Requested dyadic depth outside `1..=MAX_DYADIC_DEPTH`.
    DepthOutOfRange { depth: u32, max: u32 },
    /// Root measure differs from 1.
    RootMeasureNotOne { got: f64 },
    /// An internal node has fewer than two children.
    TooFewChildren { level: u32 },
    /// A node has a non-positive measure.
    NonPositiveMeasure { level: u32 },
    /// Children measures do not sum to the parent measure.
    ChildSumMismatch { level: u32, parent: f64, sum: f64 },
    /// Nested shape deeper than the supported limit.
    ShapeTooDeep { max: u32 },
    /// Step-function value count does not match the leaf count.
    ValueCountMismatch { expected: usize, got: usize },
    /// A step-function value is negative or not comparable.
    InvalidValue { index: usize, rendered: String },
    /// Exponent outside the supported `(0, 1]` range.
    ExponentOutOfRange { exponent: f64 },
    /// Operation requires the built-in dyadic family.
    NotDyadic,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::DepthOutOfRange { depth, max } => {
                write!(f, "dyadic depth {depth} outside 1..={max}")
            }
            TreeError::RootMeasureNotOne { got } => {
                write!(f, "root measure {got} must equal 1")
            }
            TreeError::TooFewChildren { level } => {
                write!(
                    f,
                    "internal node at level {level} has fewer than two children"
                )
            }
            TreeError::NonPositiveMeasure { level } => {
                write!(f, "node at level {level} has non-positive measure")
            }
            TreeError::ChildSumMismatch { level, parent, sum } => write!(
                f,
                "children of node at level {level} sum to {sum}, parent measure is {parent}"
            ),
            TreeError::ShapeTooDeep { max } => write!(f, "nested shape deeper than {max} levels"),
            TreeError::ValueCountMismatch { expected, got } => {
                write!(f, "expected {expected} leaf values, got {got}")
            }
            TreeError::InvalidValue { index, rendered } => {
                write!(
                    f,
                    "leaf value #{index} = {rendered} is negative or not comparable"
                )
            }
            TreeError::ExponentOutOfRange { exponent } => {
                write!(f, "exponent {exponent} outside (0, 1]")
            }
            TreeError::NotDyadic => write!(f, "operation requires a dyadic tree"),
        }
    }
}

impl core::error::Error for TreeError {}

/// A finite tree of nested positive-measure sets over a probability space.
///
/// Immutable after construction; share it between step functions (and
/// across threads) with [`Arc`].
#[derive(Debug, Clone)]
pub struct Tree<V> {
    nodes: Vec<Node<V>>,
    leaves: Vec<NodeId>,
    depth: u32,
    dyadic: bool,
}

impl<V: Scalar> Tree<V> {
    /// Builds a tree from a nested measure description.
    ///
    /// Validates the structural invariants: root measure 1, at least two
    /// children per internal node, positive measures, children measures
    /// summing to the parent measure (exactly on the exact backend, to
    /// [`MEASURE_SUM_TOL`] relative otherwise).
    pub fn from_shape(shape: &NodeShape<V>) -> Result<Arc<Tree<V>>, TreeError> {
        let one = V::one();
        if !measures_match(&shape.measure, &one) {
            return Err(TreeError::RootMeasureNotOne {
                got: shape.measure.as_f64(),
            });
        }
        let mut tree = Tree {
            nodes: Vec::new(),
            leaves: Vec::new(),
            depth: 0,
            dyadic: false,
        };
        tree.push_shape(shape, 0, None)?;
        Ok(Arc::new(tree))
    }

    fn push_shape(
        &mut self,
        shape: &NodeShape<V>,
        level: u32,
        parent: Option<NodeId>,
    ) -> Result<NodeId, TreeError> {
        if level > MAX_SHAPE_DEPTH {
            return Err(TreeError::ShapeTooDeep {
                max: MAX_SHAPE_DEPTH,
            });
        }
        if !(shape.measure > V::zero()) {
            return Err(TreeError::NonPositiveMeasure { level });
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            measure: shape.measure.clone(),
            level,
            parent,
            children: Vec::new(),
        });
        if shape.children.is_empty() {
            self.leaves.push(id);
            self.depth = self.depth.max(level);
        } else {
            if shape.children.len() < 2 {
                return Err(TreeError::TooFewChildren { level });
            }
            let mut sum = V::zero();
            let mut child_ids = Vec::with_capacity(shape.children.len());
            for child in &shape.children {
                sum = sum + child.measure.clone();
                child_ids.push(self.push_shape(child, level + 1, Some(id))?);
            }
            if !measures_match(&sum, &shape.measure) {
                return Err(TreeError::ChildSumMismatch {
                    level,
                    parent: shape.measure.as_f64(),
                    sum: sum.as_f64(),
                });
            }
            self.nodes[id.index()].children = child_ids;
        }
        Ok(id)
    }

    /// Number of levels below the root (leaves of a dyadic tree sit at
    /// `depth`).
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Leaves in canonical (left-to-right construction) order.
    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    pub fn measure(&self, id: NodeId) -> &V {
        &self.nodes[id.index()].measure
    }

    pub fn level(&self, id: NodeId) -> u32 {
        self.nodes[id.index()].level
    }

    pub fn leaf_measure(&self, leaf_index: usize) -> &V {
        self.measure(self.leaves[leaf_index])
    }

    /// Whether this is the built-in dyadic family.
    pub fn is_dyadic(&self) -> bool {
        self.dyadic
    }

    /// The root node (always id 0; the arena is stored in DFS pre-order).
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].children
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.nodes[id.index()].children.is_empty()
    }

    pub(crate) fn nodes(&self) -> &[Node<V>] {
        &self.nodes
    }
}

fn measures_match<V: Scalar>(a: &V, b: &V) -> bool {
    if V::exact() {
        a == b
    } else {
        let (af, bf) = (a.as_f64(), b.as_f64());
        abs(af - bf) <= MEASURE_SUM_TOL * bf.max(1.0)
    }
}

/// Builds the dyadic tree of the given depth: a binary tree whose level-`k`
/// nodes all have measure `2^-k`.
pub fn dyadic_tree<V: Scalar>(depth: u32) -> Result<Arc<Tree<V>>, TreeError> {
    if depth == 0 || depth > MAX_DYADIC_DEPTH {
        return Err(TreeError::DepthOutOfRange {
            depth,
            max: MAX_DYADIC_DEPTH,
        });
    }
    let node_count = (1usize << (depth + 1)) - 1;
    let mut tree = Tree {
        nodes: Vec::with_capacity(node_count),
        leaves: Vec::with_capacity(1 << depth),
        depth,
        dyadic: true,
    };
    build_dyadic(&mut tree, 0, depth, None);
    Ok(Arc::new(tree))
}

fn build_dyadic<V: Scalar>(tree: &mut Tree<V>, level: u32, depth: u32, parent: Option<NodeId>) {
    let id = NodeId(tree.nodes.len() as u32);
    tree.nodes.push(Node {
        measure: V::from_ratio(1, 1u64 << level),
        level,
        parent,
        children: Vec::new(),
    });
    if level == depth {
        tree.leaves.push(id);
    } else {
        build_dyadic(tree, level + 1, depth, Some(id));
        let left = NodeId(id.0 + 1);
        let right = NodeId(tree.nodes.len() as u32);
        build_dyadic(tree, level + 1, depth, Some(id));
        tree.nodes[id.index()].children = alloc::vec![left, right];
    }
}

/// A nonnegative function constant on the leaf atoms of a [`Tree`].
#[derive(Debug, Clone)]
pub struct StepFunction<V> {
    tree: Arc<Tree<V>>,
    values: Vec<V>,
}

impl<V: Scalar> StepFunction<V> {
    /// Wraps per-leaf values (canonical leaf order) after validating that
    /// every value is nonnegative and the count matches the leaf count.
    pub fn from_values(tree: Arc<Tree<V>>, values: Vec<V>) -> Result<Self, TreeError> {
        if values.len() != tree.leaf_count() {
            return Err(TreeError::ValueCountMismatch {
                expected: tree.leaf_count(),
                got: values.len(),
            });
        }
        for (index, v) in values.iter().enumerate() {
            if !(*v >= V::zero()) {
                return Err(TreeError::InvalidValue {
                    index,
                    rendered: alloc::format!("{:?}", v),
                });
            }
        }
        Ok(StepFunction { tree, values })
    }

    pub fn constant(tree: Arc<Tree<V>>, value: V) -> Result<Self, TreeError> {
        let n = tree.leaf_count();
        Self::from_values(tree, alloc::vec![value; n])
    }

    pub fn tree(&self) -> &Arc<Tree<V>> {
        &self.tree
    }

    pub fn values(&self) -> &[V] {
        &self.values
    }

    pub fn value(&self, leaf_index: usize) -> &V {
        &self.values[leaf_index]
    }

    pub fn leaf_count(&self) -> usize {
        self.values.len()
    }

    /// Exact integral `∫φ dμ = Σ value·atom-measure` in the backend field.
    pub fn mass(&self) -> V {
        let mut total = V::zero();
        for (leaf, v) in self.tree.leaves().iter().zip(&self.values) {
            total = total + v.clone() * self.tree.measure(*leaf).clone();
        }
        total
    }

    /// `Σ value^exponent · atom-measure` for an exponent in `(0, 1]`.
    ///
    /// Exponent 1 gives `∫φ`, exponent `q` gives `∫φ^q`. Powers are always
    /// evaluated in floating point; on the exact backend the base values
    /// are converted after exact averaging.
    pub fn integrate(&self, exponent: f64) -> Result<f64, TreeError> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(TreeError::ExponentOutOfRange { exponent });
        }
        let mut total = 0.0;
        for (leaf, v) in self.tree.leaves().iter().zip(&self.values) {
            let base = v.as_f64();
            if base > 0.0 {
                total += crate::math::powf(base, exponent) * self.tree.measure(*leaf).as_f64();
            }
        }
        Ok(total)
    }

    /// Embeds a dyadic step function one level deeper by splitting every
    /// leaf into two halves carrying the same value.
    pub fn refine_dyadic(&self) -> Result<Self, TreeError> {
        if !self.tree.is_dyadic() {
            return Err(TreeError::NotDyadic);
        }
        let deeper = dyadic_tree::<V>(self.tree.depth() + 1)?;
        let mut values = Vec::with_capacity(self.values.len() * 2);
        for v in &self.values {
            values.push(v.clone());
            values.push(v.clone());
        }
        StepFunction::from_values(deeper, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use num_traits::One;

    #[test]
    fn dyadic_depth_one_bisects_unit_mass() {
        let t = dyadic_tree::<f64>(1).unwrap();
        assert_eq!(t.leaf_count(), 2);
        assert_eq!(*t.leaf_measure(0), 0.5);
        assert_eq!(*t.leaf_measure(1), 0.5);
    }

    #[test]
    fn dyadic_depth_three_has_eight_equal_atoms() {
        let t = dyadic_tree::<f64>(3).unwrap();
        assert_eq!(t.leaf_count(), 8);
        for i in 0..8 {
            assert_eq!(*t.leaf_measure(i), 0.125);
        }
    }

    #[test]
    fn dyadic_depth_two_level_measures() {
        let t = dyadic_tree::<BigRational>(2).unwrap();
        let mut by_level = [0usize; 3];
        for node in t.nodes() {
            assert_eq!(node.measure, BigRational::from_ratio(1, 1 << node.level));
            by_level[node.level as usize] += 1;
        }
        assert_eq!(by_level, [1, 2, 4]);
    }

    #[test]
    fn children_measures_sum_exactly_to_parent() {
        let t = dyadic_tree::<BigRational>(6).unwrap();
        for node in t.nodes() {
            if node.children.is_empty() {
                continue;
            }
            let mut sum = BigRational::from_ratio(0, 1);
            for c in &node.children {
                sum += t.measure(*c).clone();
            }
            assert_eq!(sum, node.measure);
        }
    }

    #[test]
    fn max_leaf_measure_strictly_decreases_with_depth() {
        let mut prev = f64::INFINITY;
        for depth in 1..=8 {
            let t = dyadic_tree::<f64>(depth).unwrap();
            let max = t
                .leaves()
                .iter()
                .map(|l| *t.measure(*l))
                .fold(0.0f64, f64::max);
            assert!(max < prev);
            prev = max;
        }
    }

    #[test]
    fn depth_guard() {
        assert!(matches!(
            dyadic_tree::<f64>(0),
            Err(TreeError::DepthOutOfRange { .. })
        ));
        assert!(matches!(
            dyadic_tree::<f64>(MAX_DYADIC_DEPTH + 1),
            Err(TreeError::DepthOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_integral_is_the_constant() {
        let t = dyadic_tree::<f64>(2).unwrap();
        let phi = StepFunction::constant(t, 2.0).unwrap();
        assert_eq!(phi.integrate(1.0).unwrap(), 2.0);
    }

    #[test]
    fn constant_four_sqrt_gives_two() {
        let t = dyadic_tree::<f64>(2).unwrap();
        let phi = StepFunction::constant(t, 4.0).unwrap();
        assert!((phi.integrate(0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_spike_mass() {
        let t = dyadic_tree::<f64>(2).unwrap();
        let phi = StepFunction::from_values(t, vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(phi.integrate(1.0).unwrap(), 1.0);
        assert_eq!(phi.mass(), 1.0);
    }

    #[test]
    fn integrate_rejects_bad_exponent() {
        let t = dyadic_tree::<f64>(1).unwrap();
        let phi = StepFunction::constant(t, 1.0).unwrap();
        assert!(phi.integrate(0.0).is_err());
        assert!(phi.integrate(1.5).is_err());
    }

    #[test]
    fn negative_values_rejected() {
        let t = dyadic_tree::<f64>(1).unwrap();
        assert!(matches!(
            StepFunction::from_values(t, vec![1.0, -0.5]),
            Err(TreeError::InvalidValue { index: 1, .. })
        ));
    }

    #[test]
    fn general_tree_from_shape() {
        let shape = NodeShape::internal(
            1.0,
            vec![
                NodeShape::leaf(0.5),
                NodeShape::leaf(0.25),
                NodeShape::leaf(0.25),
            ],
        );
        let t = Tree::from_shape(&shape).unwrap();
        assert_eq!(t.leaf_count(), 3);
        assert_eq!(t.depth(), 1);
        assert!(!t.is_dyadic());
    }

    #[test]
    fn shape_validation_errors() {
        let bad_root = NodeShape::internal(0.5, vec![NodeShape::leaf(0.25), NodeShape::leaf(0.25)]);
        assert!(matches!(
            Tree::from_shape(&bad_root),
            Err(TreeError::RootMeasureNotOne { .. })
        ));

        let one_child = NodeShape::internal(1.0, vec![NodeShape::leaf(1.0)]);
        assert!(matches!(
            Tree::from_shape(&one_child),
            Err(TreeError::TooFewChildren { .. })
        ));

        let bad_sum = NodeShape::internal(1.0, vec![NodeShape::leaf(0.5), NodeShape::leaf(0.4)]);
        assert!(matches!(
            Tree::from_shape(&bad_sum),
            Err(TreeError::ChildSumMismatch { .. })
        ));

        let zero_atom = NodeShape::internal(1.0, vec![NodeShape::leaf(1.0), NodeShape::leaf(0.0)]);
        assert!(matches!(
            Tree::from_shape(&zero_atom),
            Err(TreeError::NonPositiveMeasure { .. })
        ));
    }

    #[test]
    fn exact_shape_requires_exact_sums() {
        let shape = NodeShape::internal(
            BigRational::one(),
            vec![
                NodeShape::leaf(BigRational::from_ratio(1, 3)),
                NodeShape::leaf(BigRational::from_ratio(2, 3)),
            ],
        );
        assert!(Tree::from_shape(&shape).is_ok());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(96))]

            #[test]
            fn integrate_is_permutation_invariant(
                values in prop::collection::vec(0u32..64, 8),
                swap in (0usize..8, 0usize..8),
            ) {
                // equal-measure leaves: any transposition preserves ∫φ
                let t = dyadic_tree::<f64>(3).unwrap();
                let vals: Vec<f64> = values.iter().map(|&k| k as f64 / 8.0).collect();
                let mut swapped = vals.clone();
                swapped.swap(swap.0, swap.1);
                let a = StepFunction::from_values(t.clone(), vals).unwrap();
                let b = StepFunction::from_values(t, swapped).unwrap();
                prop_assert_eq!(a.integrate(1.0).unwrap(), b.integrate(1.0).unwrap());
                // q-powers are irrational, so reordering costs at most an ulp
                let (x, y) = (a.integrate(0.5).unwrap(), b.integrate(0.5).unwrap());
                prop_assert!((x - y).abs() <= 1e-15 * x.max(1.0));
            }

            #[test]
            fn integrate_is_homogeneous(
                values in prop::collection::vec(0u32..64, 8),
                scale_num in 1u32..64,
                e in prop::sample::select(vec![0.25f64, 0.5, 0.75, 1.0]),
            ) {
                let t = dyadic_tree::<f64>(3).unwrap();
                let s = scale_num as f64 / 8.0;
                let vals: Vec<f64> = values.iter().map(|&k| k as f64 / 8.0).collect();
                let scaled: Vec<f64> = vals.iter().map(|v| v * s).collect();
                let base = StepFunction::from_values(t.clone(), vals).unwrap();
                let big = StepFunction::from_values(t, scaled).unwrap();
                let lhs = big.integrate(e).unwrap();
                let rhs = s.powf(e) * base.integrate(e).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
            }
        }
    }
}
