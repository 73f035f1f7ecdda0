//! Exact evaluation of the dyadic maximal operator on finite measurable
//! trees, with the machinery needed to verify sharp Kolmogorov-type
//! inequalities for it: decreasing rearrangements, Hardy averaging of
//! non-increasing profiles, the special functions `H_q` / `ω_q` and the
//! two-variable sharp constant `h·ω_q(f^q/h)`, power-profile extremizers,
//! and near-extremal spike sequences with residual diagnostics.
//!
//! The crate is `no_std` (with `alloc`); everything that touches the file
//! system, randomness, or a terminal lives in the companion CLI crate.
//!
//! Layering, bottom up:
//!
//! * [`scalar`] — arithmetic backends (`f64`, exact `BigRational`)
//! * [`tree`] — finite trees with per-node measures; step functions
//! * [`maximal`] — the maximal operator, weak-type and Kolmogorov checks
//! * [`rearrange`] — monotone profiles, Hardy transform, brute-force
//!   rearrangement search
//! * [`bellman`] — `H_q`, `ω_q`, the sharp constant, extremal power
//!   profiles, upper-bound and identity checks
//! * [`extremal`] — spike sequences, residuals, convergence studies

#![cfg_attr(not(test), no_std)]
// negated float comparisons are deliberate throughout: `!(x > 0.0)` also
// rejects NaN, which `x <= 0.0` would let through
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bellman;
pub mod extremal;
mod math;
pub mod maximal;
pub mod quad;
pub mod rearrange;
pub mod scalar;
pub mod tree;

pub use bellman::{bellman_value, extremal_profile, hq_eval, omega_q, BellmanPoint, PowerProfile};
pub use maximal::{maximal_operator, MaximalResult};
pub use rearrange::{decreasing_rearrangement, MonotoneProfile, Profile};
pub use scalar::Scalar;
pub use tree::{dyadic_tree, StepFunction, Tree};

/// Smallest admissible exponent `q`.
///
/// The sharp-constant theory lives on 0 < q < 1; behaviour at the endpoints
/// is not defined, so parameters are clamped away from them.
pub const Q_MIN: f64 = 0.01;

/// Largest admissible exponent `q`.
pub const Q_MAX: f64 = 0.99;

/// Error for exponents outside `[Q_MIN, Q_MAX]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QRangeError(pub f64);

impl core::fmt::Display for QRangeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "exponent q = {} outside supported range [{}, {}]",
            self.0, Q_MIN, Q_MAX
        )
    }
}

impl core::error::Error for QRangeError {}

/// Validates an exponent `q` against [`Q_MIN`]..=[`Q_MAX`].
pub fn validate_q(q: f64) -> Result<f64, QRangeError> {
    if q.is_finite() && (Q_MIN..=Q_MAX).contains(&q) {
        Ok(q)
    } else {
        Err(QRangeError(q))
    }
}
