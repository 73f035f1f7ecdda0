//! The special functions `H_q` and `ω_q`, the sharp two-variable constant
//! `B_q(f,h) = h·ω_q(f^q/h)`, extremal power profiles, and the chain of
//! inequality/identity checks that the sharp-constant proof rests on.
//!
//! `H_q(z) = (1-q)z^q + q z^{q-1}` is strictly increasing on `[1, ∞)` with
//! `H_q(1) = 1`; `ω_q(z) = [H_q^{-1}(z)]^q`. The inverse has no closed
//! form (except at special `q`), so it is computed by bracketed monotone
//! bisection with a Newton polish.

use core::fmt;

use crate::math::{abs, exp, powf};
use crate::maximal::{MaximalResult, CHECK_REL_TOL};
use crate::rearrange::Profile;
use crate::scalar::Scalar;
use crate::validate_q;

/// Values of `z` in `[1-OMEGA_CLAMP_EPS, 1)` are treated as 1 (they arise
/// from rounding in `f^q/h` at the admissibility boundary).
pub const OMEGA_CLAMP_EPS: f64 = 1e-9;

/// Absolute tolerance for the Hardy identity check (both sides are
/// quadratures at 1e-10, so their difference is good to ~1e-8).
pub const IDENTITY_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum BellmanError {
    QOutOfRange(f64),
    /// Argument below the domain `[1, ∞)`.
    BelowOne {
        argument: f64,
    },
    /// The inverse of `H_q` exceeds the `f64` range (its `q`-th power may
    /// still be fine).
    RootOverflow {
        log_root: f64,
    },
    /// Parameters violate `f > 0`, `0 < h ≤ f^q`.
    NotAdmissible {
        q: f64,
        f: f64,
        h: f64,
    },
    /// Shape parameter of a power profile below 1 or scale non-positive.
    BadPowerProfile {
        scale: f64,
        shape: f64,
    },
    /// The function is identically zero, so its moments are degenerate.
    ZeroFunction,
}

impl fmt::Display for BellmanError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BellmanError::QOutOfRange(q) => write!(f, "{}", crate::QRangeError(*q)),
            BellmanError::BelowOne { argument } => {
                write!(f, "argument {argument} below the domain [1, +inf)")
            }
            BellmanError::RootOverflow { log_root } => {
                write!(f, "H_q inverse exp({log_root}) exceeds the f64 range")
            }
            BellmanError::NotAdmissible { q, f: ff, h } => {
                write!(f, "point (q={q}, f={ff}, h={h}) violates 0 < h <= f^q")
            }
            BellmanError::BadPowerProfile { scale, shape } => {
                write!(
                    f,
                    "power profile needs scale > 0 and shape >= 1, got ({scale}, {shape})"
                )
            }
            BellmanError::ZeroFunction => write!(f, "step function is identically zero"),
        }
    }
}

impl core::error::Error for BellmanError {}

#[inline]
fn hq_raw(q: f64, z: f64) -> f64 {
    (1.0 - q) * powf(z, q) + q * powf(z, q - 1.0)
}

/// `H_q` evaluated at `c = exp(log_c)`; never overflows for roots whose
/// `ω_q = c^q` is representable, which matters for small `q`.
#[inline]
fn hq_from_log(q: f64, log_c: f64) -> f64 {
    (1.0 - q) * exp(q * log_c) + q * exp((q - 1.0) * log_c)
}

/// `H_q(z) = (1-q)z^q + q z^{q-1}` for `z ≥ 1`.
pub fn hq_eval(q: f64, z: f64) -> Result<f64, BellmanError> {
    validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
    if !(z >= 1.0) {
        return Err(BellmanError::BelowOne { argument: z });
    }
    Ok(hq_raw(q, z))
}

/// Solves `H_q(c) = y` for `ln c`, `c ∈ [1, ∞)`.
///
/// Works on the logarithmic axis throughout: brackets by doubling,
/// bisects (equivalently, geometric bisection in `c`, robust for the
/// huge roots small `q` produces), then polishes with guarded Newton
/// steps. Arguments in `[1-OMEGA_CLAMP_EPS, 1)` clamp to 1 with a
/// warning.
pub fn invert_hq_log(q: f64, y: f64) -> Result<f64, BellmanError> {
    validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
    if !(y >= 1.0 - OMEGA_CLAMP_EPS) {
        return Err(BellmanError::BelowOne { argument: y });
    }
    if y <= 1.0 {
        if y < 1.0 {
            log::warn!("clamping H_q inverse argument {y} to 1 (rounding below domain)");
        }
        return Ok(0.0);
    }

    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hq_from_log(q, hi) < y {
        lo = hi;
        hi *= 2.0;
    }

    for _ in 0..200 {
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if hq_from_log(q, mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut log_c = 0.5 * (lo + hi);
    for _ in 0..4 {
        let residual = hq_from_log(q, log_c) - y;
        // d/dL H(e^L) = q(1-q)(e^{qL} - e^{(q-1)L})
        let derivative = q * (1.0 - q) * (exp(q * log_c) - exp((q - 1.0) * log_c));
        if !(derivative > 0.0 && derivative.is_finite()) {
            break;
        }
        let next = log_c - residual / derivative;
        if next >= lo && next <= hi {
            log_c = next;
        } else {
            break;
        }
    }
    Ok(log_c)
}

/// Solves `H_q(c) = y` for `c ∈ [1, ∞)`.
///
/// Errors when the root itself overflows `f64` (possible for small `q`
/// with large `y`, where `ω_q` is still fine — use [`omega_q`] then).
pub fn invert_hq(q: f64, y: f64) -> Result<f64, BellmanError> {
    let log_c = invert_hq_log(q, y)?;
    let c = exp(log_c);
    if !c.is_finite() {
        return Err(BellmanError::RootOverflow { log_root: log_c });
    }
    Ok(c)
}

/// `ω_q(z) = [H_q^{-1}(z)]^q`, non-decreasing with `ω_q(1) = 1`.
pub fn omega_q(q: f64, z: f64) -> Result<f64, BellmanError> {
    let log_c = invert_hq_log(q, z)?;
    Ok(if log_c == 0.0 { 1.0 } else { exp(q * log_c) })
}

/// Admissible parameter triple `(q, f, h)` with `f > 0`, `0 < h ≤ f^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellmanPoint {
    q: f64,
    f: f64,
    h: f64,
}

impl BellmanPoint {
    pub fn new(q: f64, f: f64, h: f64) -> Result<Self, BellmanError> {
        validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
        let admissible =
            f.is_finite() && h.is_finite() && f > 0.0 && h > 0.0 && h <= powf(f, q) * (1.0 + 1e-12);
        if !admissible {
            return Err(BellmanError::NotAdmissible { q, f, h });
        }
        Ok(BellmanPoint { q, f, h })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `z = f^q / h ≥ 1`.
    pub fn ratio(&self) -> f64 {
        (powf(self.f, self.q) / self.h).max(1.0)
    }
}

/// The sharp constant `B_q(f, h) = h·ω_q(f^q/h)`.
pub fn bellman_value(point: &BellmanPoint) -> f64 {
    let omega = omega_q(point.q, point.ratio()).expect("admissible point has ratio >= 1");
    point.h * omega
}

/// The profile `g(t) = K·t^(-1+1/c)` on `(0, 1]` with `K > 0`, `c ≥ 1`.
///
/// This is the fixed point of the Hardy transform up to the factor `c`:
/// `(1/t)∫_0^t g = c·g(t)` identically, which is what makes it extremal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    scale: f64,
    shape: f64,
}

impl PowerProfile {
    pub fn new(scale: f64, shape: f64) -> Result<Self, BellmanError> {
        if !(scale > 0.0 && scale.is_finite() && shape >= 1.0 && shape.is_finite()) {
            return Err(BellmanError::BadPowerProfile { scale, shape });
        }
        Ok(PowerProfile { scale, shape })
    }

    /// `K`
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `c`
    pub fn shape(&self) -> f64 {
        self.shape
    }

    /// Exponent `b = 1 - 1/c ∈ [0, 1)` so that `g(t) = K·t^-b`.
    pub fn decay(&self) -> f64 {
        1.0 - 1.0 / self.shape
    }

    /// Coefficient of the Hardy transform: `Hardy g = (c·K)·t^-b`.
    pub fn hardy_coefficient(&self) -> f64 {
        self.shape * self.scale
    }

    /// `∫_0^1 g^q` in closed form: `K^q·c/((1-q)c + q)`.
    pub fn q_mass(&self, q: f64) -> f64 {
        self.q_integral(q, 1.0)
    }
}

impl Profile for PowerProfile {
    fn total_mass(&self) -> f64 {
        self.scale * self.shape
    }

    fn value_at(&self, t: f64) -> f64 {
        self.scale * powf(t, -self.decay())
    }

    fn mass_upto(&self, t: f64) -> f64 {
        self.scale * self.shape * powf(t, 1.0 / self.shape)
    }

    fn hardy_at(&self, t: f64) -> f64 {
        self.hardy_coefficient() * powf(t, -self.decay())
    }

    fn q_integral(&self, q: f64, k: f64) -> f64 {
        let e = 1.0 - q * self.decay();
        powf(self.scale, q) * powf(k, e) / e
    }

    fn hardy_q_integral(&self, q: f64, k: f64) -> f64 {
        let e = 1.0 - q * self.decay();
        powf(self.hardy_coefficient(), q) * powf(k, e) / e
    }

    fn hardy_pairing_integral(&self, q: f64) -> f64 {
        // ∫ K t^-b (cK t^-b)^{q-1} dt = K (cK)^{q-1} / (1 - q b)
        let e = 1.0 - q * self.decay();
        self.scale * powf(self.hardy_coefficient(), q - 1.0) / e
    }

    fn interior_cuts(&self) -> alloc::vec::Vec<f64> {
        alloc::vec::Vec::new()
    }

    fn hardy_singular_exponent(&self) -> f64 {
        self.decay()
    }
}

/// Builds the extremal power profile for an admissible point:
/// `c = H_q^{-1}(f^q/h)`, `K = f/c`, so that `∫g = f`, `∫g^q = h`, and
/// `Hardy g = c·g`.
pub fn extremal_profile(point: &BellmanPoint) -> Result<PowerProfile, BellmanError> {
    let c = invert_hq(point.q(), point.ratio())?;
    PowerProfile::new(point.f() / c, c)
}

/// Report of the sharp upper bound `∫(Mφ)^q ≤ B_q(f, h)` evaluated with
/// the function's own moments `f = ∫φ`, `h = ∫φ^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBoundReport {
    pub f: f64,
    pub h: f64,
    /// `∫(Mφ)^q dμ`
    pub integral: f64,
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

impl fmt::Display for UpperBoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{lhs={}, rhs={}, slack={}, holds={}}}",
            self.integral, self.bound, self.slack, self.holds
        )
    }
}

pub fn upper_bound_check<V: Scalar>(
    q: f64,
    result: &MaximalResult<V>,
) -> Result<UpperBoundReport, BellmanError> {
    validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
    let f = result.input().mass().as_f64();
    if f <= 0.0 {
        return Err(BellmanError::ZeroFunction);
    }
    let h = result.input().integrate(q).expect("validated exponent");
    let integral = result.integrate_max(q).expect("validated exponent");
    let point = BellmanPoint::new(q, f, h)?;
    let bound = bellman_value(&point);
    Ok(UpperBoundReport {
        f,
        h,
        integral,
        bound,
        slack: bound - integral,
        holds: integral <= bound + CHECK_REL_TOL * bound.max(1.0),
    })
}

/// Report of the two intermediate steps of the upper-bound chain:
/// the layer-cake/weak-type step `I ≤ (f^q - q·P)/(1-q)` and the Hölder
/// step `P ≥ h^{1/q}·I^{1-1/q}`, where `P = ∫φ(Mφ)^{q-1} dμ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainReport {
    /// `I = ∫(Mφ)^q dμ`
    pub integral: f64,
    /// `P = ∫φ(Mφ)^{q-1} dμ`
    pub pairing: f64,
    /// `(f^q - q·P)/(1-q)`
    pub layercake_bound: f64,
    /// `h^{1/q}·I^{1-1/q}`
    pub holder_floor: f64,
    pub layercake_slack: f64,
    pub holder_slack: f64,
    pub layercake_holds: bool,
    pub holder_holds: bool,
    pub holds: bool,
}

impl fmt::Display for ChainReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{I={}, P={}, layercake_slack={}, holder_slack={}, holds={}}}",
            self.integral, self.pairing, self.layercake_slack, self.holder_slack, self.holds
        )
    }
}

pub fn intermediate_chain_check<V: Scalar>(
    q: f64,
    result: &MaximalResult<V>,
) -> Result<ChainReport, BellmanError> {
    validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
    let f = result.input().mass().as_f64();
    if f <= 0.0 {
        return Err(BellmanError::ZeroFunction);
    }
    let h = result.input().integrate(q).expect("validated exponent");
    let integral = result.integrate_max(q).expect("validated exponent");

    // M φ ≥ ∫φ > 0 everywhere, so the (q-1)-power never blows up;
    // zero-valued leaves contribute nothing.
    let tree = result.input().tree();
    let mut pairing = 0.0;
    for ((leaf, v), m) in tree
        .leaves()
        .iter()
        .zip(result.input().values())
        .zip(result.values())
    {
        let vf = v.as_f64();
        if vf > 0.0 {
            pairing += vf * powf(m.as_f64(), q - 1.0) * tree.measure(*leaf).as_f64();
        }
    }

    let layercake_bound = (powf(f, q) - q * pairing) / (1.0 - q);
    let holder_floor = powf(h, 1.0 / q) * powf(integral, 1.0 - 1.0 / q);
    let layercake_slack = layercake_bound - integral;
    let holder_slack = pairing - holder_floor;
    let layercake_holds = integral <= layercake_bound + CHECK_REL_TOL * layercake_bound.max(1.0);
    let holder_holds = holder_floor <= pairing + CHECK_REL_TOL * pairing.max(1.0);
    Ok(ChainReport {
        integral,
        pairing,
        layercake_bound,
        holder_floor,
        layercake_slack,
        holder_slack,
        layercake_holds,
        holder_holds,
        holds: layercake_holds && holder_holds,
    })
}

/// Report of the Hardy identity
/// `∫_0^1 (Hardy g)^q = (1/(1-q))f^q - (q/(1-q))∫_0^1 g·(Hardy g)^{q-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub abs_error: f64,
    pub holds: bool,
}

impl fmt::Display for IdentityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{lhs={}, rhs={}, abs_error={}, holds={}}}",
            self.lhs, self.rhs, self.abs_error, self.holds
        )
    }
}

/// Checks the Hardy identity for any integrable non-increasing profile.
pub fn hardy_identity_check<P: Profile>(g: &P, q: f64) -> Result<IdentityReport, BellmanError> {
    validate_q(q).map_err(|e| BellmanError::QOutOfRange(e.0))?;
    let f = g.total_mass();
    if !(f > 0.0) {
        return Err(BellmanError::ZeroFunction);
    }
    let lhs = g.hardy_q_integral(q, 1.0);
    let rhs = (powf(f, q) - q * g.hardy_pairing_integral(q)) / (1.0 - q);
    let abs_error = abs(lhs - rhs);
    Ok(IdentityReport {
        lhs,
        rhs,
        abs_error,
        holds: abs_error <= IDENTITY_ABS_TOL,
    })
}
