//! The tree maximal operator and executable forms of the weak-type (1,1)
//! and Kolmogorov inequalities.
//!
//! For a step function φ on a finite tree, `M φ` at a leaf is the maximum
//! of the averages `(1/μ(I)) ∫_I φ dμ` over all ancestors `I` of the leaf
//! (the leaf itself and the root included). On the exact backend every
//! average, level set and weak-type comparison is exact; on `f64` the
//! checks use a small relative tolerance.

use alloc::vec::Vec;
use core::fmt;

use crate::math::powf;
use crate::scalar::Scalar;
use crate::tree::StepFunction;
use crate::validate_q;

/// Relative comparison tolerance for inequality checks on the `f64`
/// backend, and for the power steps that are floating point in any mode.
pub const CHECK_REL_TOL: f64 = 1e-12;

/// Which level set `{M φ ▷ λ}` to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LevelSetKind {
    /// `{M φ > λ}` (the weak-type inequality form).
    #[default]
    Strict,
    /// `{M φ ≥ λ}` (the form used by the rearrangement arguments).
    Inclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CheckError {
    NonPositiveLambda,
    EmptySubset,
    LeafIndexOutOfRange { index: usize, leaf_count: usize },
    ZeroFunction,
    QOutOfRange(f64),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::NonPositiveLambda => write!(f, "lambda must be positive"),
            CheckError::EmptySubset => write!(f, "leaf subset must be non-empty"),
            CheckError::LeafIndexOutOfRange { index, leaf_count } => {
                write!(
                    f,
                    "leaf index {index} out of range (leaf count {leaf_count})"
                )
            }
            CheckError::ZeroFunction => write!(f, "step function is identically zero"),
            CheckError::QOutOfRange(q) => write!(f, "{}", crate::QRangeError(*q)),
        }
    }
}

impl core::error::Error for CheckError {}

/// Result of evaluating the maximal operator on a step function.
#[derive(Debug, Clone)]
pub struct MaximalResult<V> {
    input: StepFunction<V>,
    max_values: Vec<V>,
    argmax_levels: Vec<u32>,
}

impl<V: Scalar> MaximalResult<V> {
    pub fn input(&self) -> &StepFunction<V> {
        &self.input
    }

    /// `M φ` per leaf, canonical leaf order.
    pub fn values(&self) -> &[V] {
        &self.max_values
    }

    /// Level of the shallowest ancestor attaining the maximum, per leaf.
    pub fn argmax_levels(&self) -> &[u32] {
        &self.argmax_levels
    }

    /// The maximal function as a step function on the same tree.
    pub fn as_step(&self) -> StepFunction<V> {
        StepFunction::from_values(self.input.tree().clone(), self.max_values.clone())
            .expect("maximal values are nonnegative on the input tree")
    }

    /// `Σ (M φ)^q · atom-measure` (floating-point powers).
    pub fn integrate_max(&self, exponent: f64) -> Result<f64, CheckError> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(CheckError::QOutOfRange(exponent));
        }
        let tree = self.input.tree();
        let mut total = 0.0;
        for (leaf, v) in tree.leaves().iter().zip(&self.max_values) {
            let base = v.as_f64();
            if base > 0.0 {
                total += powf(base, exponent) * tree.measure(*leaf).as_f64();
            }
        }
        Ok(total)
    }
}

/// Evaluates the maximal operator exactly on the step representation.
///
/// Ties between ancestor averages resolve to the shallowest ancestor.
pub fn maximal_operator<V: Scalar>(phi: &StepFunction<V>) -> MaximalResult<V> {
    let tree = phi.tree();
    let nodes = tree.nodes();
    let n = nodes.len();

    // Subtree integrals: nodes are stored in DFS pre-order, so a reverse
    // sweep accumulates children before their parent is consumed.
    let mut subtotal: Vec<V> = alloc::vec![V::zero(); n];
    for (leaf, v) in tree.leaves().iter().zip(phi.values()) {
        subtotal[leaf.index()] = v.clone() * nodes[leaf.index()].measure.clone();
    }
    for idx in (1..n).rev() {
        if let Some(parent) = nodes[idx].parent {
            let add = subtotal[idx].clone();
            subtotal[parent.index()] = subtotal[parent.index()].clone() + add;
        }
    }

    // Node averages, then a pre-order sweep carrying the best ancestor.
    let averages: Vec<V> = (0..n)
        .map(|idx| subtotal[idx].clone() / nodes[idx].measure.clone())
        .collect();
    drop(subtotal);

    let mut best_node: Vec<u32> = alloc::vec![0; n];
    let mut stack: Vec<crate::tree::NodeId> = alloc::vec![tree.root()];
    while let Some(id) = stack.pop() {
        let idx = id.index();
        let carried = match nodes[idx].parent {
            Some(p) => best_node[p.index()],
            None => idx as u32,
        };
        // strict improvement only: ties keep the shallower ancestor
        best_node[idx] = if averages[idx] > averages[carried as usize] {
            idx as u32
        } else {
            carried
        };
        for child in &nodes[idx].children {
            stack.push(*child);
        }
    }

    let mut max_values = Vec::with_capacity(tree.leaf_count());
    let mut argmax_levels = Vec::with_capacity(tree.leaf_count());
    for leaf in tree.leaves() {
        let b = best_node[leaf.index()] as usize;
        max_values.push(averages[b].clone());
        argmax_levels.push(nodes[b].level);
    }

    MaximalResult {
        input: phi.clone(),
        max_values,
        argmax_levels,
    }
}

/// Leaf indices of the level set `{M φ ▷ λ}`.
pub fn level_set_leaves<V: Scalar>(
    result: &MaximalResult<V>,
    lambda: &V,
    kind: LevelSetKind,
) -> Vec<usize> {
    result
        .values()
        .iter()
        .enumerate()
        .filter(|(_, m)| match kind {
            LevelSetKind::Strict => **m > *lambda,
            LevelSetKind::Inclusive => **m >= *lambda,
        })
        .map(|(i, _)| i)
        .collect()
}

/// Measure of the level set `{M φ ▷ λ}` in the backend field.
pub fn level_set_measure<V: Scalar>(
    result: &MaximalResult<V>,
    lambda: &V,
    kind: LevelSetKind,
) -> V {
    let tree = result.input().tree();
    level_set_leaves(result, lambda, kind)
        .into_iter()
        .fold(V::zero(), |acc, i| acc + tree.leaf_measure(i).clone())
}

/// Report of one weak-type comparison `μ({Mφ ▷ λ}) ≤ (1/λ)∫_{{Mφ ▷ λ}} φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakTypeReport {
    pub lambda: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl fmt::Display for WeakTypeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{lambda={}, lhs={}, rhs={}, holds={}}}",
            self.lambda, self.lhs, self.rhs, self.holds
        )
    }
}

/// Checks the weak-type (1,1) inequality at level `lambda`.
///
/// On the exact backend the comparison is exact (zero tolerance); on `f64`
/// it allows [`CHECK_REL_TOL`] relative slack.
pub fn weak_type_check<V: Scalar>(
    result: &MaximalResult<V>,
    lambda: &V,
    kind: LevelSetKind,
) -> Result<WeakTypeReport, CheckError> {
    if !(*lambda > V::zero()) {
        return Err(CheckError::NonPositiveLambda);
    }
    let tree = result.input().tree();
    let set = level_set_leaves(result, lambda, kind);
    let mut lhs = V::zero();
    let mut restricted = V::zero();
    for i in set {
        lhs = lhs + tree.leaf_measure(i).clone();
        restricted = restricted + result.input().value(i).clone() * tree.leaf_measure(i).clone();
    }
    let rhs = restricted / lambda.clone();
    let holds = if V::exact() {
        lhs <= rhs
    } else {
        lhs.as_f64() <= rhs.as_f64() + CHECK_REL_TOL * rhs.as_f64().max(1.0)
    };
    Ok(WeakTypeReport {
        lambda: lambda.as_f64(),
        lhs: lhs.as_f64(),
        rhs: rhs.as_f64(),
        holds,
    })
}

/// Report of one Kolmogorov comparison
/// `∫_E (Mφ)^q ≤ (1/(1-q)) μ(E)^{1-q} (∫φ)^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KolmogorovReport {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, reported for sharpness studies.
    pub ratio: f64,
    pub holds: bool,
}

impl fmt::Display for KolmogorovReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{lhs={}, rhs={}, ratio={}, holds={}}}",
            self.lhs, self.rhs, self.ratio, self.holds
        )
    }
}

/// Checks the Kolmogorov inequality on the leaf subset `E`.
///
/// The level-set sums and measures come from the backend field; the `^q`
/// powers are floating point, so the comparison always carries
/// [`CHECK_REL_TOL`] relative slack.
pub fn kolmogorov_check<V: Scalar>(
    q: f64,
    result: &MaximalResult<V>,
    subset: &[usize],
) -> Result<KolmogorovReport, CheckError> {
    validate_q(q).map_err(|e| CheckError::QOutOfRange(e.0))?;
    if subset.is_empty() {
        return Err(CheckError::EmptySubset);
    }
    let tree = result.input().tree();
    let leaf_count = tree.leaf_count();
    let mut seen = alloc::vec![false; leaf_count];
    let mut lhs = 0.0;
    let mut subset_measure = V::zero();
    for &i in subset {
        if i >= leaf_count {
            return Err(CheckError::LeafIndexOutOfRange {
                index: i,
                leaf_count,
            });
        }
        if seen[i] {
            continue;
        }
        seen[i] = true;
        let m = result.values()[i].as_f64();
        if m > 0.0 {
            lhs += powf(m, q) * tree.leaf_measure(i).as_f64();
        }
        subset_measure = subset_measure + tree.leaf_measure(i).clone();
    }
    let total_mass = result.input().mass().as_f64();
    let rhs = powf(subset_measure.as_f64(), 1.0 - q) * powf(total_mass, q) / (1.0 - q);
    let holds = lhs <= rhs + CHECK_REL_TOL * rhs.max(1.0);
    Ok(KolmogorovReport {
        lhs,
        rhs,
        ratio: if rhs > 0.0 { lhs / rhs } else { f64::NAN },
        holds,
    })
}

#[cfg(test)]
pub(crate) mod testutil {
    //! Independent containment-arithmetic oracle for the dyadic maximal
    //! operator, used to cross-check the tree traversal.

    /// `M φ` per leaf on the depth-`m` dyadic tree by direct enumeration of
    /// all ancestor blocks of each leaf.
    pub fn naive_dyadic_maximal(values: &[f64], depth: u32) -> Vec<f64> {
        let n = values.len();
        assert_eq!(n, 1usize << depth);
        (0..n)
            .map(|j| {
                let mut best = f64::NEG_INFINITY;
                for level in 0..=depth {
                    let width = 1usize << (depth - level);
                    let lo = (j / width) * width;
                    let avg = values[lo..lo + width].iter().sum::<f64>() / width as f64;
                    best = best.max(avg);
                }
                best
            })
            .collect()
    }
}
