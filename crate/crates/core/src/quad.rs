//! Adaptive Simpson quadrature for bounded piecewise-smooth integrands.
//!
//! Every singular integrand in this crate is first reduced to a bounded one
//! by a closed-form substitution (see [`crate::extremal`]), so plain Simpson
//! with Richardson extrapolation is all that is needed here.

use crate::math::abs;

const MAX_DEPTH: u32 = 48;

/// Splits an absolute tolerance budget of `1e-10` across the pieces of a
/// piecewise integral.
pub(crate) fn piece_tol(pieces: usize) -> f64 {
    1e-10 / pieces.max(1) as f64
}

/// Integrates `f` over `[a, b]` to roughly absolute tolerance `tol`.
///
/// Returns 0 for empty or inverted intervals. The integrand must be finite
/// on the closed interval.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(&f, a, b, fa, fm, fb, whole, tol.max(1e-300), MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || abs(delta) <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}
