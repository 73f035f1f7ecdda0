//! Decreasing rearrangements, prefix integrals, the Hardy averaging
//! transform, and a brute-force rearrangement-search oracle.
//!
//! A [`MonotoneProfile`] is a non-increasing, left-continuous step function
//! on `(0, 1]` — the decreasing rearrangement of a tree step function. Its
//! Hardy transform `t ↦ (1/t)∫_0^t g` is piecewise of the form `A + B/t`
//! with exact coefficients, which keeps every prefix integral either
//! closed-form or a bounded smooth quadrature.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::math::powf;
use crate::maximal::{maximal_operator, MaximalResult, CHECK_REL_TOL};
use crate::quad::{adaptive_simpson, piece_tol};
use crate::scalar::Scalar;
use crate::tree::{StepFunction, Tree};
use crate::validate_q;

/// A non-increasing step profile on `(0, 1]`.
///
/// Piece `i` covers `(start_i, cuts[i]]` where `start_0 = 0` and
/// `start_i = cuts[i-1]`; the final cut is exactly 1. Values are
/// non-increasing and nonnegative (left-continuity convention).
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneProfile {
    cuts: Vec<f64>,
    values: Vec<f64>,
    /// cumulative mass at each cut
    prefix: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileError {
    Empty,
    CutsNotIncreasing { index: usize },
    LastCutNotOne { got: f64 },
    NotMonotone { index: usize },
    NegativeValue { index: usize },
    BadArgument { what: &'static str, got: f64 },
}

impl fmt::Display for ProfileError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileError::Empty => write!(f, "profile needs at least one piece"),
            ProfileError::CutsNotIncreasing { index } => {
                write!(f, "breakpoints not strictly increasing at index {index}")
            }
            ProfileError::LastCutNotOne { got } => {
                write!(f, "final breakpoint {got} must equal 1")
            }
            ProfileError::NotMonotone { index } => {
                write!(f, "profile values increase at index {index}")
            }
            ProfileError::NegativeValue { index } => {
                write!(f, "profile value at index {index} is negative")
            }
            ProfileError::BadArgument { what, got } => write!(f, "invalid {what}: {got}"),
        }
    }
}

impl core::error::Error for ProfileError {}

/// Common surface of step and power profiles: mass, Hardy transform, and
/// the prefix integrals used by the identity and residual checks.
pub trait Profile {
    /// `∫_0^1 g`
    fn total_mass(&self) -> f64;

    /// `g(t)` for `t ∈ (0, 1]`, left-continuous.
    fn value_at(&self, t: f64) -> f64;

    /// `∫_0^t g`
    fn mass_upto(&self, t: f64) -> f64;

    /// Hardy transform `(1/t)∫_0^t g`.
    fn hardy_at(&self, t: f64) -> f64 {
        self.mass_upto(t) / t
    }

    /// `∫_0^k g(t)^q dt`
    fn q_integral(&self, q: f64, k: f64) -> f64;

    /// `∫_0^k ((1/t)∫_0^t g)^q dt`
    fn hardy_q_integral(&self, q: f64, k: f64) -> f64;

    /// `∫_0^1 g(t)·((1/t)∫_0^t g)^{q-1} dt`
    fn hardy_pairing_integral(&self, q: f64) -> f64;

    /// Breakpoints strictly inside `(0, 1)`.
    fn interior_cuts(&self) -> Vec<f64>;

    /// `β ≥ 0` such that the Hardy transform grows like `t^{-β}` at `0+`
    /// (0 for bounded profiles). Lets residual integrators reduce the
    /// singular first piece in closed form.
    fn hardy_singular_exponent(&self) -> f64 {
        0.0
    }
}

impl MonotoneProfile {
    /// Builds a profile from breakpoints `0 < t_1 < … < t_N = 1` and the
    /// per-piece values.
    pub fn from_pieces(cuts: Vec<f64>, values: Vec<f64>) -> Result<Self, ProfileError> {
        if cuts.is_empty() || cuts.len() != values.len() {
            return Err(ProfileError::Empty);
        }
        let mut prev = 0.0;
        for (i, &c) in cuts.iter().enumerate() {
            if !(c > prev) {
                return Err(ProfileError::CutsNotIncreasing { index: i });
            }
            prev = c;
        }
        let last = *cuts.last().unwrap();
        if (last - 1.0).abs() > 1e-9 {
            return Err(ProfileError::LastCutNotOne { got: last });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(ProfileError::NegativeValue { index: i });
            }
            if i > 0 && values[i - 1] < v {
                return Err(ProfileError::NotMonotone { index: i });
            }
        }
        let mut cuts = cuts;
        *cuts.last_mut().unwrap() = 1.0;
        let mut prefix = Vec::with_capacity(cuts.len());
        let mut acc = 0.0;
        let mut start = 0.0;
        for (c, v) in cuts.iter().zip(&values) {
            acc += v * (c - start);
            prefix.push(acc);
            start = *c;
        }
        Ok(MonotoneProfile {
            cuts,
            values,
            prefix,
        })
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    pub fn cuts(&self) -> &[f64] {
        &self.cuts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn piece_index(&self, t: f64) -> usize {
        // first cut >= t; t in (0, 1]
        self.cuts
            .partition_point(|c| *c < t)
            .min(self.values.len() - 1)
    }

    fn piece_start(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cuts[i - 1]
        }
    }

    fn prefix_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.prefix[i - 1]
        }
    }

    /// Hardy coefficients of piece `i`: on `(start_i, cuts[i]]` the
    /// transform is `A + B/t` with `A = v_i`, `B = mass(start_i) - v_i·start_i`.
    fn hardy_coeffs(&self, i: usize) -> (f64, f64) {
        let a = self.values[i];
        let b = (self.prefix_before(i) - a * self.piece_start(i)).max(0.0);
        (a, b)
    }

    /// The Hardy transform in closed form: on piece `i` it is
    /// `A_i + B_i/t`; returns the `(A_i, B_i)` coefficient pairs.
    pub fn hardy_pieces(&self) -> Vec<(f64, f64)> {
        (0..self.values.len())
            .map(|i| self.hardy_coeffs(i))
            .collect()
    }

    /// `|{g > λ}|`
    pub fn level_measure(&self, lambda: f64) -> f64 {
        let mut measure = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > lambda {
                measure = self.cuts[i];
            } else {
                break;
            }
        }
        measure
    }
}

impl Profile for MonotoneProfile {
    fn total_mass(&self) -> f64 {
        *self.prefix.last().unwrap()
    }

    fn value_at(&self, t: f64) -> f64 {
        debug_assert!(t > 0.0 && t <= 1.0 + 1e-12);
        self.values[self.piece_index(t)]
    }

    fn mass_upto(&self, t: f64) -> f64 {
        let i = self.piece_index(t);
        self.prefix_before(i) + self.values[i] * (t - self.piece_start(i))
    }

    fn hardy_at(&self, t: f64) -> f64 {
        let (a, b) = self.hardy_coeffs(self.piece_index(t));
        a + b / t
    }

    fn q_integral(&self, q: f64, k: f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        for (c, v) in self.cuts.iter().zip(&self.values) {
            let hi = c.min(k);
            if hi > start && *v > 0.0 {
                total += powf(*v, q) * (hi - start);
            }
            if *c >= k {
                break;
            }
            start = *c;
        }
        total
    }

    fn hardy_q_integral(&self, q: f64, k: f64) -> f64 {
        let tol = piece_tol(self.piece_count());
        let mut total = 0.0;
        for i in 0..self.values.len() {
            let lo = self.piece_start(i);
            let hi = self.cuts[i].min(k);
            if hi <= lo {
                break;
            }
            let (a, b) = self.hardy_coeffs(i);
            total += if b <= 0.0 {
                // first piece (and any piece where the average equals the
                // value): constant integrand
                if a > 0.0 {
                    powf(a, q) * (hi - lo)
                } else {
                    0.0
                }
            } else if a <= 0.0 {
                // zero-valued tail: (B/t)^q integrates in closed form
                powf(b, q) * (powf(hi, 1.0 - q) - powf(lo, 1.0 - q)) / (1.0 - q)
            } else {
                adaptive_simpson(|t| powf(a + b / t, q), lo, hi, tol)
            };
        }
        total
    }

    fn hardy_pairing_integral(&self, q: f64) -> f64 {
        let tol = piece_tol(self.piece_count());
        let mut total = 0.0;
        for i in 0..self.values.len() {
            let v = self.values[i];
            if v <= 0.0 {
                continue;
            }
            let lo = self.piece_start(i);
            let hi = self.cuts[i];
            let (a, b) = self.hardy_coeffs(i);
            total += if b <= 0.0 {
                powf(v, q) * (hi - lo)
            } else {
                v * adaptive_simpson(|t| powf(a + b / t, q - 1.0), lo, hi, tol)
            };
        }
        total
    }

    fn interior_cuts(&self) -> Vec<f64> {
        self.cuts[..self.cuts.len() - 1].to_vec()
    }
}

/// Decreasing rearrangement of a step function: leaf values sorted in
/// descending order with multiplicity equal to the atom measures. The
/// result is equimeasurable with the input.
pub fn decreasing_rearrangement<V: Scalar>(phi: &StepFunction<V>) -> MonotoneProfile {
    let tree = phi.tree();
    let mut pairs: Vec<(f64, f64)> = phi
        .values()
        .iter()
        .zip(tree.leaves())
        .map(|(v, leaf)| (v.as_f64(), tree.measure(*leaf).as_f64()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("step values are comparable"));

    let mut cuts = Vec::new();
    let mut values = Vec::new();
    let mut acc = 0.0;
    for (v, m) in pairs {
        acc += m;
        if values.last() == Some(&v) {
            *cuts.last_mut().unwrap() = acc;
        } else {
            values.push(v);
            cuts.push(acc);
        }
    }
    debug_assert!((acc - 1.0).abs() <= 1e-9, "atom measures sum to 1");
    *cuts.last_mut().unwrap() = 1.0;
    MonotoneProfile::from_pieces(cuts, values).expect("sorted pieces form a valid profile")
}

/// `∫_0^k profile(t)^q dt` with `q, k ∈ (0, 1]`.
pub fn restricted_integral(profile: &MonotoneProfile, q: f64, k: f64) -> Result<f64, ProfileError> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(ProfileError::BadArgument {
            what: "exponent",
            got: q,
        });
    }
    if !(k > 0.0 && k <= 1.0) {
        return Err(ProfileError::BadArgument {
            what: "prefix length",
            got: k,
        });
    }
    Ok(profile.q_integral(q, k))
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchError {
    LeafCountMismatch { leaves: usize, values: usize },
    OverCap { leaves: usize, cap: usize },
    UnequalLeafMeasures,
    InvalidValue { index: usize },
    QOutOfRange(f64),
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::LeafCountMismatch { leaves, values } => {
                write!(f, "{values} values for {leaves} leaves")
            }
            SearchError::OverCap { leaves, cap } => {
                write!(f, "{leaves} leaves exceed enumeration cap {cap}")
            }
            SearchError::UnequalLeafMeasures => {
                write!(f, "rearrangement search needs equal-measure leaves")
            }
            SearchError::InvalidValue { index } => {
                write!(f, "value #{index} is negative or not finite")
            }
            SearchError::QOutOfRange(q) => write!(f, "{}", crate::QRangeError(*q)),
        }
    }
}

impl core::error::Error for SearchError {}

/// Outcome of exhaustive placement search of a value multiset on a tree.
#[derive(Debug, Clone)]
pub struct SearchReport {
    /// `max ∫(Mφ)^q dμ` over all distinct placements.
    pub best_value: f64,
    /// A placement attaining the maximum, in canonical leaf order.
    pub best_permutation: Vec<f64>,
    /// Value of the non-increasing (left-arranged) placement.
    pub left_value: f64,
    /// `∫_0^1 ((1/t)∫_0^t g)^q dt` for the sorted profile `g`.
    pub hardy_bound: f64,
    /// `best_value ≤ hardy_bound` within tolerance.
    pub holds: bool,
    /// Number of distinct placements enumerated.
    pub placements: u64,
}

impl fmt::Display for SearchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{best_value={}, left_value={}, hardy_bound={}, holds={}, placements={}}}",
            self.best_value, self.left_value, self.hardy_bound, self.holds, self.placements
        )
    }
}

/// Enumerates every distinct placement of `multiset` onto the leaves of an
/// equal-atom tree and compares the best `∫(Mφ)^q dμ` with the Hardy
/// integral of the sorted profile.
pub fn rearrangement_search(
    tree: &Arc<Tree<f64>>,
    multiset: &[f64],
    q: f64,
    cap: usize,
) -> Result<SearchReport, SearchError> {
    validate_q(q).map_err(|e| SearchError::QOutOfRange(e.0))?;
    let n = tree.leaf_count();
    if multiset.len() != n {
        return Err(SearchError::LeafCountMismatch {
            leaves: n,
            values: multiset.len(),
        });
    }
    if n > cap {
        return Err(SearchError::OverCap { leaves: n, cap });
    }
    let atom = *tree.leaf_measure(0);
    for i in 0..n {
        if (tree.leaf_measure(i) - atom).abs() > 1e-12 * atom {
            return Err(SearchError::UnequalLeafMeasures);
        }
    }
    for (index, v) in multiset.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(SearchError::InvalidValue { index });
        }
    }

    let mut eval = MqEvaluator::new(tree);

    let mut descending = multiset.to_vec();
    descending.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let left_value = eval.eval(&descending, q);

    // sorted profile of the multiset on equal atoms
    let profile = {
        let cuts: Vec<f64> = (1..=n).map(|i| i as f64 / n as f64).collect();
        let merged = merge_equal(&cuts, &descending);
        MonotoneProfile::from_pieces(merged.0, merged.1).expect("sorted multiset profile")
    };
    let hardy_bound = profile.hardy_q_integral(q, 1.0);

    let mut arranged = multiset.to_vec();
    arranged.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best_value = f64::NEG_INFINITY;
    let mut best_permutation = arranged.clone();
    let mut placements = 0u64;
    loop {
        let v = eval.eval(&arranged, q);
        placements += 1;
        if v > best_value {
            best_value = v;
            best_permutation.copy_from_slice(&arranged);
        }
        if !next_permutation(&mut arranged) {
            break;
        }
    }

    let holds = best_value <= hardy_bound + 1e-9 * hardy_bound.max(1.0);
    Ok(SearchReport {
        best_value,
        best_permutation,
        left_value,
        hardy_bound,
        holds,
        placements,
    })
}

fn merge_equal(cuts: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut mc = Vec::new();
    let mut mv = Vec::new();
    for (c, v) in cuts.iter().zip(values) {
        if mv.last() == Some(v) {
            *mc.last_mut().unwrap() = *c;
        } else {
            mc.push(*c);
            mv.push(*v);
        }
    }
    (mc, mv)
}

/// Lexicographic next permutation; skips duplicates, so iterating from the
/// ascending order visits each distinct arrangement exactly once.
fn next_permutation(v: &mut [f64]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Allocation-free `∫(Mφ)^q dμ` evaluator for repeated placements on one
/// tree. Relies on the arena being stored in DFS pre-order (parents before
/// children), which the constructors guarantee.
struct MqEvaluator {
    parent: Vec<u32>,
    measure: Vec<f64>,
    leaf_ids: Vec<u32>,
    leaf_measures: Vec<f64>,
    subtotal: Vec<f64>,
    best: Vec<f64>,
}

impl MqEvaluator {
    fn new(tree: &Arc<Tree<f64>>) -> Self {
        let nodes = tree.nodes();
        let parent: Vec<u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| match n.parent {
                Some(p) => {
                    debug_assert!(p.index() < i, "arena must be pre-ordered");
                    p.0
                }
                None => 0,
            })
            .collect();
        MqEvaluator {
            parent,
            measure: nodes.iter().map(|n| n.measure).collect(),
            leaf_ids: tree.leaves().iter().map(|l| l.0).collect(),
            leaf_measures: tree.leaves().iter().map(|l| *tree.measure(*l)).collect(),
            subtotal: alloc::vec![0.0; nodes.len()],
            best: alloc::vec![0.0; nodes.len()],
        }
    }

    fn eval(&mut self, leaf_values: &[f64], q: f64) -> f64 {
        let n = self.subtotal.len();
        self.subtotal.iter_mut().for_each(|s| *s = 0.0);
        for (id, (v, m)) in self
            .leaf_ids
            .iter()
            .zip(leaf_values.iter().zip(&self.leaf_measures))
        {
            self.subtotal[*id as usize] = v * m;
        }
        for idx in (1..n).rev() {
            self.subtotal[self.parent[idx] as usize] += self.subtotal[idx];
        }
        self.best[0] = self.subtotal[0] / self.measure[0];
        for idx in 1..n {
            let avg = self.subtotal[idx] / self.measure[idx];
            self.best[idx] = self.best[self.parent[idx] as usize].max(avg);
        }
        let mut total = 0.0;
        for (id, m) in self.leaf_ids.iter().zip(&self.leaf_measures) {
            let b = self.best[*id as usize];
            if b > 0.0 {
                total += powf(b, q) * m;
            }
        }
        total
    }
}

/// Worst grid point of the pointwise symmetrization bound
/// `(Mφ)*(t) ≤ (1/t)∫_0^t φ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetrizationReport {
    pub grid: u32,
    /// max over the grid of `(Mφ)*(t) - Hardy(φ*)(t)`
    pub max_gap: f64,
    pub worst_t: f64,
    /// `(Mφ)*` at the worst grid point
    pub lhs: f64,
    /// `Hardy(φ*)` at the worst grid point
    pub rhs: f64,
    pub holds: bool,
}

impl fmt::Display for SymmetrizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{worst_t={}, lhs={}, rhs={}, holds={}}}",
            self.worst_t, self.lhs, self.rhs, self.holds
        )
    }
}

/// Evaluates the pointwise symmetrization bound on an equispaced grid of
/// `grid` points `t = i/grid`.
pub fn symmetrization_gap<V: Scalar>(result: &MaximalResult<V>, grid: u32) -> SymmetrizationReport {
    let m_star = decreasing_rearrangement(&result.as_step());
    let phi_star = decreasing_rearrangement(result.input());
    let mut worst = SymmetrizationReport {
        grid,
        max_gap: f64::NEG_INFINITY,
        worst_t: 0.0,
        lhs: 0.0,
        rhs: 0.0,
        holds: true,
    };
    for i in 1..=grid {
        let t = i as f64 / grid as f64;
        let lhs = m_star.value_at(t);
        let rhs = phi_star.hardy_at(t);
        let gap = lhs - rhs;
        if gap > worst.max_gap {
            worst.max_gap = gap;
            worst.worst_t = t;
            worst.lhs = lhs;
            worst.rhs = rhs;
        }
    }
    worst.holds = worst.max_gap <= CHECK_REL_TOL * worst.rhs.max(1.0);
    worst
}

/// Convenience: symmetrization bound directly from a step function.
pub fn symmetrization_check<V: Scalar>(phi: &StepFunction<V>, grid: u32) -> SymmetrizationReport {
    symmetrization_gap(&maximal_operator(phi), grid)
}
